//! Zero-error block code for the cascade.
//!
//! The source writes base-3 digits on the slots where relay 1 listens. Each
//! relay encodes a message index into the pair (slot allocation, binary
//! payload): `w = rank * 2^{n_i} + payload`, where `rank` enumerates the
//! `n_i`-subsets of the slots left free by the downstream relay. Codebooks
//! are never materialized; encoding and decoding go through the
//! combinatorial number system.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::capacity::LOG2_3;
use crate::channel::{RelayModelVariant, TernarySymbol};
use crate::error::{Error, Result};
use crate::info::{binomial_big, log2_big, Log2FactorialTable};

/// Largest block length accepted by the slot-count optimizer.
pub const MAX_BLOCK_LENGTH: usize = 4096;
/// Largest cascade accepted by the slot-count optimizer.
pub const MAX_CODED_RELAYS: usize = 16;

/// Strictly increasing slot indices inside a block of `n` slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotAllocation {
    n: usize,
    positions: Vec<usize>,
}

impl SlotAllocation {
    pub fn new(n: usize, positions: Vec<usize>) -> Result<Self> {
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "slot positions must be strictly increasing".into(),
            ));
        }
        if positions.last().is_some_and(|&p| p >= n) {
            return Err(Error::Domain(format!(
                "slot position out of range for block length {n}"
            )));
        }
        Ok(Self { n, positions })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            positions: Vec::new(),
        }
    }

    /// Slots where `block` carries a binary symbol.
    pub fn of_block(block: &[TernarySymbol]) -> Self {
        Self {
            n: block.len(),
            positions: (0..block.len())
                .filter(|&j| !block[j].is_silent())
                .collect(),
        }
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Slots not in the allocation, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n - self.positions.len());
        let mut it = self.positions.iter().peekable();
        for j in 0..self.n {
            if it.peek() == Some(&&j) {
                it.next();
            } else {
                out.push(j);
            }
        }
        out
    }

    pub fn intersects(&self, other: &Self) -> bool {
        let (mut a, mut b) = (0, 0);
        while a < self.positions.len() && b < other.positions.len() {
            match self.positions[a].cmp(&other.positions[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

impl fmt::Display for SlotAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, p) in self.positions.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}/{}", self.n)
    }
}

/// Walks `C(rest, need)` down the block as slots are skipped or taken.
struct BinomialWalk {
    rest: usize,
    need: usize,
    value: BigUint,
}

impl BinomialWalk {
    /// Starts at `C(n - 1, k - 1)`, the number of completions after taking slot 0.
    fn new(n: usize, k: usize) -> Self {
        Self {
            rest: n - 1,
            need: k - 1,
            value: binomial_big((n - 1) as u64, (k - 1) as u64),
        }
    }

    fn skip(&mut self) {
        // C(N-1, r) = C(N, r) (N - r) / N
        if self.rest == 0 || self.rest < self.need {
            self.value = BigUint::zero();
        } else {
            self.value = &self.value * (self.rest - self.need) / self.rest;
        }
        self.rest = self.rest.saturating_sub(1);
    }

    fn take(&mut self) {
        // C(N-1, r-1) = C(N, r) r / N
        if self.rest == 0 {
            self.value = BigUint::zero();
        } else {
            self.value = &self.value * self.need / self.rest;
        }
        self.rest = self.rest.saturating_sub(1);
        self.need = self.need.saturating_sub(1);
    }
}

/// Lexicographic rank of an allocation among all `k`-subsets of `[0, n)`.
pub fn rank_allocation(a: &SlotAllocation) -> BigUint {
    let k = a.len();
    if k == 0 {
        return BigUint::zero();
    }
    let mut rank = BigUint::zero();
    let mut walk = BinomialWalk::new(a.n, k);
    let mut members = a.positions.iter().peekable();
    for v in 0..a.n {
        let Some(&&next) = members.peek() else { break };
        if v == next {
            members.next();
            if members.peek().is_none() {
                break;
            }
            walk.take();
        } else {
            rank += &walk.value;
            walk.skip();
        }
    }
    rank
}

/// Inverse of [`rank_allocation`].
pub fn unrank_allocation(rank: &BigUint, n: usize, k: usize) -> Result<SlotAllocation> {
    if k > n {
        return Err(Error::Domain(format!(
            "cannot place {k} symbols in {n} slots"
        )));
    }
    if *rank >= binomial_big(n as u64, k as u64) {
        return Err(Error::Domain(format!(
            "rank {rank} out of range for C({n}, {k})"
        )));
    }
    let mut positions = Vec::with_capacity(k);
    if k == 0 {
        return Ok(SlotAllocation::empty(n));
    }
    let mut rank = rank.clone();
    let mut walk = BinomialWalk::new(n, k);
    for v in 0..n {
        if rank < walk.value {
            positions.push(v);
            if positions.len() == k {
                break;
            }
            walk.take();
        } else {
            rank -= &walk.value;
            walk.skip();
        }
    }
    SlotAllocation::new(n, positions)
}

/// Map an allocation over the `n - |z_next|` free slots onto the full block,
/// skipping the slots in `z_next` and keeping order.
pub fn embed_allocation(s: &SlotAllocation, z_next: &SlotAllocation) -> Result<SlotAllocation> {
    let free = z_next.complement();
    if s.n != free.len() {
        return Err(Error::Domain(format!(
            "allocation spans {} effective slots but {} are free",
            s.n,
            free.len()
        )));
    }
    Ok(SlotAllocation {
        n: z_next.n,
        positions: s.positions.iter().map(|&p| free[p]).collect(),
    })
}

/// Block length, per-relay binary budgets and the resulting message count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpecRecord", into = "SpecRecord")]
pub struct CodebookSpec {
    n: usize,
    n_counts: Vec<usize>,
    model: RelayModelVariant,
    node_counts: Vec<BigUint>,
    message_count: BigUint,
}

#[derive(Serialize, Deserialize)]
struct SpecRecord {
    n: usize,
    m: usize,
    n_counts: Vec<usize>,
    model: RelayModelVariant,
}

impl TryFrom<SpecRecord> for CodebookSpec {
    type Error = Error;

    fn try_from(r: SpecRecord) -> Result<Self> {
        if r.m != r.n_counts.len() {
            return Err(Error::Domain(format!(
                "m = {} but {} budgets given",
                r.m,
                r.n_counts.len()
            )));
        }
        CodebookSpec::new(r.n, r.n_counts, r.model)
    }
}

impl From<CodebookSpec> for SpecRecord {
    fn from(s: CodebookSpec) -> Self {
        SpecRecord {
            n: s.n,
            m: s.n_counts.len(),
            n_counts: s.n_counts,
            model: s.model,
        }
    }
}

fn pow_big(base: u32, exp: usize) -> BigUint {
    BigUint::from(base).pow(exp as u32)
}

impl CodebookSpec {
    /// `n_counts[i - 1]` is the number of binary symbols relay `i` sends per
    /// block. In the binary model every relay but the last must fill all
    /// slots its downstream neighbour leaves free, since a listener there
    /// cannot hear silence.
    pub fn new(n: usize, n_counts: Vec<usize>, model: RelayModelVariant) -> Result<Self> {
        let m = n_counts.len();
        if m == 0 {
            return Err(Error::Domain("a cascade needs at least one relay".into()));
        }
        if n == 0 {
            return Err(Error::Domain("block length must be positive".into()));
        }
        let next = |i: usize| if i < m { n_counts[i] } else { 0 };
        for i in 1..=m {
            let free = n.saturating_sub(next(i));
            if n_counts[i - 1] > free || next(i) > n {
                return Err(Error::Domain(format!(
                    "relay {i} budget {} exceeds the {free} slots its successor leaves silent",
                    n_counts[i - 1]
                )));
            }
            if model == RelayModelVariant::Binary && i < m && n_counts[i - 1] != free {
                return Err(Error::Domain(format!(
                    "binary model: relay {i} must transmit on all {free} slots relay {} leaves free",
                    i + 1
                )));
            }
        }
        let source_free = n - n_counts[0];
        let mut node_counts = vec![match model {
            RelayModelVariant::Ternary => pow_big(3, source_free),
            RelayModelVariant::Binary => pow_big(2, source_free),
        }];
        for i in 1..=m {
            let k = n_counts[i - 1];
            node_counts.push(pow_big(2, k) * binomial_big((n - next(i)) as u64, k as u64));
        }
        let message_count = node_counts.iter().min().cloned().unwrap_or_default();
        Ok(Self {
            n,
            n_counts,
            model,
            node_counts,
            message_count,
        })
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn relays(&self) -> usize {
        self.n_counts.len()
    }

    pub fn n_counts(&self) -> &[usize] {
        &self.n_counts
    }

    pub fn model(&self) -> RelayModelVariant {
        self.model
    }

    /// `|W_0|`, the number of messages every node can carry.
    pub fn message_count(&self) -> &BigUint {
        &self.message_count
    }

    /// Distinct blocks node `i` can emit for a fixed downstream allocation.
    pub fn node_capacity_count(&self, i: usize) -> &BigUint {
        &self.node_counts[i]
    }

    /// Binary budget of relay `i`, with `n_{m+1} = 0` for the sink.
    pub fn budget(&self, i: usize) -> usize {
        if i == 0 || i > self.relays() {
            0
        } else {
            self.n_counts[i - 1]
        }
    }

    /// `log2 |W_0| / n`.
    pub fn rate(&self) -> f64 {
        log2_big(&self.message_count) / self.n as f64
    }

    /// The per-node rate terms whose minimum is the code rate.
    pub fn rate_terms(&self) -> Vec<f64> {
        self.node_counts
            .iter()
            .map(|c| log2_big(c) / self.n as f64)
            .collect()
    }
}

fn check_message(w: &BigUint, count: &BigUint, what: &str) -> Result<()> {
    if w >= count {
        return Err(Error::Domain(format!(
            "{what} {w} out of range (count {count})"
        )));
    }
    Ok(())
}

fn check_block_length(alloc: &SlotAllocation, n: usize) -> Result<()> {
    if alloc.n != n {
        return Err(Error::Domain(format!(
            "allocation over {} slots used with block length {n}",
            alloc.n
        )));
    }
    Ok(())
}

/// Write `payload` MSB-first onto the slots in `positions`.
fn write_bits(block: &mut [TernarySymbol], positions: &[usize], payload: &BigUint) {
    let k = positions.len() as u64;
    for (j, &p) in positions.iter().enumerate() {
        block[p] = TernarySymbol::from_bit(payload.bit(k - 1 - j as u64));
    }
}

fn read_bits(block: &[TernarySymbol], positions: &[usize]) -> Result<BigUint> {
    let mut acc = BigUint::zero();
    for &p in positions {
        acc <<= 1u32;
        match block[p] {
            TernarySymbol::Zero => {}
            TernarySymbol::One => acc += 1u32,
            TernarySymbol::N => {
                return Err(Error::Integrity(format!(
                    "silent symbol at payload slot {p}"
                )))
            }
        }
    }
    Ok(acc)
}

/// Allocation relay `i` uses for message `w` given the downstream allocation.
fn relay_layout(
    w: &BigUint,
    n_i: usize,
    z_next: &SlotAllocation,
) -> Result<(SlotAllocation, BigUint)> {
    let (rank, payload) = w.div_rem(&(BigUint::one() << n_i));
    let effective = z_next.n - z_next.len();
    let s = unrank_allocation(&rank, effective, n_i)?;
    Ok((embed_allocation(&s, z_next)?, payload))
}

/// Full-block allocation of relay `i` when it sends `w` around `z_next`.
pub fn relay_allocation(
    w: &BigUint,
    i: usize,
    z_next: &SlotAllocation,
    spec: &CodebookSpec,
) -> Result<SlotAllocation> {
    validate_relay_args(w, i, z_next, spec)?;
    Ok(relay_layout(w, spec.budget(i), z_next)?.0)
}

fn validate_relay_args(
    w: &BigUint,
    i: usize,
    z_next: &SlotAllocation,
    spec: &CodebookSpec,
) -> Result<()> {
    if i == 0 || i > spec.relays() {
        return Err(Error::Domain(format!(
            "relay index {i} not in 1..={}",
            spec.relays()
        )));
    }
    check_message(w, &spec.node_counts[i], "message")?;
    check_block_length(z_next, spec.n)?;
    if z_next.len() != spec.budget(i + 1) {
        return Err(Error::Domain(format!(
            "downstream allocation has {} slots, relay {} sends {}",
            z_next.len(),
            i + 1,
            spec.budget(i + 1)
        )));
    }
    Ok(())
}

/// Allocations `z_1..z_m` when relay `i` sends `messages[i - 1]`.
pub fn allocation_chain(messages: &[BigUint], spec: &CodebookSpec) -> Result<Vec<SlotAllocation>> {
    let m = spec.relays();
    if messages.len() != m {
        return Err(Error::Domain(format!(
            "expected {m} relay messages, got {}",
            messages.len()
        )));
    }
    let mut out = vec![SlotAllocation::empty(spec.n); m];
    let mut z_next = SlotAllocation::empty(spec.n);
    for i in (1..=m).rev() {
        z_next = relay_allocation(&messages[i - 1], i, &z_next, spec)?;
        out[i - 1] = z_next.clone();
    }
    Ok(out)
}

/// Block sent by relay `i` for message `w`; silent outside its allocation.
/// Any `w` below the relay's own codeword count is accepted.
pub fn encode_relay(
    w: &BigUint,
    i: usize,
    z_next: &SlotAllocation,
    spec: &CodebookSpec,
) -> Result<Vec<TernarySymbol>> {
    validate_relay_args(w, i, z_next, spec)?;
    let (z, payload) = relay_layout(w, spec.budget(i), z_next)?;
    let mut block = vec![TernarySymbol::N; spec.n];
    write_bits(&mut block, &z.positions, &payload);
    Ok(block)
}

fn source_radix(model: RelayModelVariant) -> u32 {
    match model {
        RelayModelVariant::Ternary => 3,
        RelayModelVariant::Binary => 2,
    }
}

fn write_digits(w: &BigUint, z1: &SlotAllocation, radix: u32) -> Vec<TernarySymbol> {
    let free = z1.complement();
    let mut block = vec![TernarySymbol::N; z1.n];
    let digits = w.to_radix_be(radix);
    let pad = free.len() - if w.is_zero() { 0 } else { digits.len() };
    for (k, &slot) in free.iter().enumerate() {
        let d = if k < pad || w.is_zero() {
            0
        } else {
            digits[k - pad]
        };
        block[slot] = TernarySymbol::from_index(d as usize).expect("digit below radix");
    }
    block
}

fn read_digits(block: &[TernarySymbol], listen: &[usize], radix: u32) -> Result<BigUint> {
    let mut digits = Vec::with_capacity(listen.len());
    for &p in listen {
        let d = block[p].index() as u8;
        if u32::from(d) >= radix {
            return Err(Error::Integrity(format!(
                "silent symbol at source slot {p} in the binary model"
            )));
        }
        digits.push(d);
    }
    if digits.is_empty() {
        return Ok(BigUint::zero());
    }
    BigUint::from_radix_be(&digits, radix)
        .ok_or_else(|| Error::Integrity("bad source digits".into()))
}

/// Source block for `w0`: base-3 digits, most significant first, on the
/// slots outside `z1` (base 2 in the binary model); silent on `z1`.
pub fn encode_source(
    w0: &BigUint,
    z1: &SlotAllocation,
    spec: &CodebookSpec,
) -> Result<Vec<TernarySymbol>> {
    check_message(w0, &spec.node_counts[0], "source message")?;
    check_block_length(z1, spec.n)?;
    if z1.len() != spec.budget(1) {
        return Err(Error::Domain(format!(
            "relay 1 allocation has {} slots, spec says {}",
            z1.len(),
            spec.budget(1)
        )));
    }
    Ok(write_digits(w0, z1, source_radix(spec.model)))
}

/// Recover the message sent by `upstream` (node `0..=m`) from what the next
/// node received, given that node's own allocation. The sink passes an
/// empty allocation.
pub fn decode_at_node(
    received: &[TernarySymbol],
    own_alloc: &SlotAllocation,
    upstream: usize,
    spec: &CodebookSpec,
) -> Result<BigUint> {
    if received.len() != spec.n {
        return Err(Error::Integrity(format!(
            "received {} symbols, block length {}",
            received.len(),
            spec.n
        )));
    }
    check_block_length(own_alloc, spec.n)?;
    if upstream > spec.relays() {
        return Err(Error::Domain(format!(
            "node {upstream} has no downstream listener"
        )));
    }
    if own_alloc.len() != spec.budget(upstream + 1) {
        return Err(Error::Integrity(format!(
            "listener allocation has {} slots, node {} sends {}",
            own_alloc.len(),
            upstream + 1,
            spec.budget(upstream + 1)
        )));
    }
    let listen = own_alloc.complement();
    let w = if upstream == 0 {
        read_digits(received, &listen, source_radix(spec.model))?
    } else {
        let heard: Vec<usize> = (0..listen.len())
            .filter(|&k| !received[listen[k]].is_silent())
            .collect();
        let n_up = spec.budget(upstream);
        if heard.len() != n_up {
            return Err(Error::Integrity(format!(
                "relay {upstream} should send {n_up} binary symbols, heard {}",
                heard.len()
            )));
        }
        let s = SlotAllocation::new(listen.len(), heard)?;
        let slots: Vec<usize> = s.positions.iter().map(|&k| listen[k]).collect();
        let payload = read_bits(received, &slots)?;
        (rank_allocation(&s) << n_up) + payload
    };
    if w >= spec.node_counts[upstream] {
        return Err(Error::Integrity(format!(
            "decoded index {w} outside node {upstream}'s codebook"
        )));
    }
    Ok(w)
}

/// Slot budgets maximizing the code rate for block length `n` and `m`
/// ternary relays.
pub fn optimize_slot_counts(n: usize, m: usize) -> Result<CodebookSpec> {
    optimize_slot_counts_for(n, m, RelayModelVariant::Ternary)
}

/// Model-aware variant of [`optimize_slot_counts`].
pub fn optimize_slot_counts_for(
    n: usize,
    m: usize,
    model: RelayModelVariant,
) -> Result<CodebookSpec> {
    if n == 0 || n > MAX_BLOCK_LENGTH {
        return Err(Error::Domain(format!(
            "block length {n} not in 1..={MAX_BLOCK_LENGTH}"
        )));
    }
    if m == 0 || m > MAX_CODED_RELAYS {
        return Err(Error::Domain(format!(
            "relay count {m} not in 1..={MAX_CODED_RELAYS}"
        )));
    }
    let lf = Log2FactorialTable::new(n);
    let counts = match model {
        RelayModelVariant::Ternary => ternary_budgets(n, m, &lf),
        RelayModelVariant::Binary => binary_budgets(n, m, &lf),
    };
    CodebookSpec::new(n, counts, model)
}

/// Backward recursion: the relay-`i` term only involves `n_i` and `n_{i+1}`.
fn ternary_budgets(n: usize, m: usize, lf: &Log2FactorialTable) -> Vec<usize> {
    // value[a] = best min over terms i..=m given n_i = a
    let mut value: Vec<f64> = (0..=n).map(|a| a as f64 + lf.log2_binomial(n, a)).collect();
    let mut choice: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for level in (1..m).rev() {
        let mut next_value = vec![f64::NEG_INFINITY; n + 1];
        let mut pick = vec![0usize; n + 1];
        for a in 0..=n {
            for b in 0..=(n - a) {
                let v = (a as f64 + lf.log2_binomial(n - b, a)).min(value[b]);
                if v > next_value[a] {
                    next_value[a] = v;
                    pick[a] = b;
                }
            }
        }
        choice[level] = pick;
        value = next_value;
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for a in 0..=n {
        let v = ((n - a) as f64 * LOG2_3).min(value[a]);
        if v > best.0 {
            best = (v, a);
        }
    }
    let mut counts = vec![best.1];
    for level in 1..m {
        counts.push(choice[level][counts[level - 1]]);
    }
    counts
}

/// In the binary model only the last relay's budget is free.
fn binary_budgets(n: usize, m: usize, lf: &Log2FactorialTable) -> Vec<usize> {
    let forced = |last: usize| {
        let mut counts = vec![0; m];
        counts[m - 1] = last;
        for i in (0..m - 1).rev() {
            counts[i] = n - counts[i + 1];
        }
        counts
    };
    let score = |last: usize| {
        let counts = forced(last);
        let mut terms = vec![(n - counts[0]) as f64];
        for i in 0..m {
            let free = n - if i + 1 < m { counts[i + 1] } else { 0 };
            terms.push(counts[i] as f64 + lf.log2_binomial(free, counts[i]));
        }
        terms.into_iter().fold(f64::INFINITY, f64::min)
    };
    let mut best = (f64::NEG_INFINITY, 0);
    for last in 0..=n {
        let v = score(last);
        if v > best.0 {
            best = (v, last);
        }
    }
    forced(best.1)
}

/// Relay-source code for one relay: the relay forwards `w0` through its
/// slot allocation and the first `k0` payload bits, and its own `w1` through
/// the remaining `n_1 - k0` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TwoSourceRecord", into = "TwoSourceRecord")]
pub struct TwoSourceSpec {
    n: usize,
    n1: usize,
    k0: usize,
    w0_count: BigUint,
    w1_count: BigUint,
}

#[derive(Serialize, Deserialize)]
struct TwoSourceRecord {
    n: usize,
    n_1: usize,
    k0: usize,
}

impl TryFrom<TwoSourceRecord> for TwoSourceSpec {
    type Error = Error;

    fn try_from(r: TwoSourceRecord) -> Result<Self> {
        TwoSourceSpec::new(r.n, r.n_1, r.k0)
    }
}

impl From<TwoSourceSpec> for TwoSourceRecord {
    fn from(s: TwoSourceSpec) -> Self {
        TwoSourceRecord {
            n: s.n,
            n_1: s.n1,
            k0: s.k0,
        }
    }
}

impl TwoSourceSpec {
    pub fn new(n: usize, n1: usize, k0: usize) -> Result<Self> {
        if n == 0 || n > MAX_BLOCK_LENGTH {
            return Err(Error::Domain(format!(
                "block length {n} not in 1..={MAX_BLOCK_LENGTH}"
            )));
        }
        if n1 > n || k0 > n1 {
            return Err(Error::Domain(format!(
                "need k0 <= n_1 <= n, got k0 = {k0}, n_1 = {n1}, n = {n}"
            )));
        }
        let w0_count = pow_big(3, n - n1).min(pow_big(2, k0) * binomial_big(n as u64, n1 as u64));
        Ok(Self {
            n,
            n1,
            k0,
            w0_count,
            w1_count: pow_big(2, n1 - k0),
        })
    }

    /// `k0 = 0` configuration whose two counts balance best at block length
    /// `n`: all relay allocations carry source messages, all payload bits
    /// carry the relay's own.
    pub fn threshold(n: usize) -> Result<Self> {
        let mut best: Option<(f64, usize)> = None;
        for n1 in 0..=n {
            let value =
                log2_big(&pow_big(3, n - n1).min(binomial_big(n as u64, n1 as u64))) + n1 as f64;
            // the sum rate peaks where the two counts cross
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, n1));
            }
        }
        Self::new(n, best.map_or(0, |(_, n1)| n1), 0)
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn relay_budget(&self) -> usize {
        self.n1
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn w0_count(&self) -> &BigUint {
        &self.w0_count
    }

    pub fn w1_count(&self) -> &BigUint {
        &self.w1_count
    }

    /// `(log2 |W_0| / n, log2 |W_1| / n)`.
    pub fn rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        (log2_big(&self.w0_count) / n, (self.n1 - self.k0) as f64 / n)
    }

    fn source_split(&self, w0: &BigUint) -> Result<(SlotAllocation, BigUint)> {
        check_message(w0, &self.w0_count, "source message")?;
        let (rank, p0) = w0.div_rem(&(BigUint::one() << self.k0));
        Ok((unrank_allocation(&rank, self.n, self.n1)?, p0))
    }
}

/// Relay allocation that forwards `w0`.
pub fn two_source_allocation(w0: &BigUint, spec: &TwoSourceSpec) -> Result<SlotAllocation> {
    Ok(spec.source_split(w0)?.0)
}

/// Source block for `w0` around the relay allocation `z1`.
pub fn two_source_encode_source(
    w0: &BigUint,
    z1: &SlotAllocation,
    spec: &TwoSourceSpec,
) -> Result<Vec<TernarySymbol>> {
    check_message(w0, &spec.w0_count, "source message")?;
    check_block_length(z1, spec.n)?;
    if z1.len() != spec.n1 {
        return Err(Error::Domain(format!(
            "relay allocation has {} slots, spec says {}",
            z1.len(),
            spec.n1
        )));
    }
    Ok(write_digits(w0, z1, 3))
}

/// Relay's decode of the source block it heard while using `z1`.
pub fn two_source_decode_source(
    received: &[TernarySymbol],
    z1: &SlotAllocation,
    spec: &TwoSourceSpec,
) -> Result<BigUint> {
    if received.len() != spec.n || z1.n != spec.n || z1.len() != spec.n1 {
        return Err(Error::Integrity(
            "block or allocation does not match the code parameters".into(),
        ));
    }
    let w0 = read_digits(received, &z1.complement(), 3)?;
    if w0 >= spec.w0_count {
        return Err(Error::Integrity(format!(
            "decoded source index {w0} outside the message set"
        )));
    }
    Ok(w0)
}

/// Relay block carrying `w0` and `w1`; `w0`'s payload bits take the first
/// `k0` transmit slots.
pub fn two_source_encode(
    w0: &BigUint,
    w1: &BigUint,
    spec: &TwoSourceSpec,
) -> Result<Vec<TernarySymbol>> {
    check_message(w1, &spec.w1_count, "relay message")?;
    let (z, p0) = spec.source_split(w0)?;
    let mut block = vec![TernarySymbol::N; spec.n];
    write_bits(&mut block, &z.positions[..spec.k0], &p0);
    write_bits(&mut block, &z.positions[spec.k0..], w1);
    Ok(block)
}

/// Sink's decode of the relay block.
pub fn two_source_decode(
    received: &[TernarySymbol],
    spec: &TwoSourceSpec,
) -> Result<(BigUint, BigUint)> {
    if received.len() != spec.n {
        return Err(Error::Integrity(format!(
            "received {} symbols, block length {}",
            received.len(),
            spec.n
        )));
    }
    let z = SlotAllocation::of_block(received);
    if z.len() != spec.n1 {
        return Err(Error::Integrity(format!(
            "relay should send {} binary symbols, heard {}",
            spec.n1,
            z.len()
        )));
    }
    let p0 = read_bits(received, &z.positions[..spec.k0])?;
    let w1 = read_bits(received, &z.positions[spec.k0..])?;
    let w0 = (rank_allocation(&z) << spec.k0) + p0;
    if w0 >= spec.w0_count {
        return Err(Error::Integrity(format!(
            "decoded source index {w0} outside the message set"
        )));
    }
    Ok((w0, w1))
}
