//! Brute-force cut-set evaluation for short cascades.
//!
//! A Markov chain is expanded into its full joint table over `3^{m+1}` input
//! tuples; every tuple is pushed through the network and cut values
//! `H(Y_S, Y_{m+1} | X_S)` are computed exactly from the induced joint of
//! inputs and receptions. This is the independent check that the minimum
//! over all cuts is attained on ascending index sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{cut_values, ChainDistribution};
use crate::channel::{network_use_into, RelayModelVariant, TernarySymbol};
use crate::error::{Error, Result};
use crate::info::{EdgeDistribution, KahanSum, MASS_TOLERANCE};

/// Largest cascade for single-source enumeration.
pub const MAX_SINGLE_SOURCE_RELAYS: usize = 5;
/// Largest cascade for two-source enumeration.
pub const MAX_TWO_SOURCE_RELAYS: usize = 4;
/// Slack for every equality and inequality checked by the verifiers.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Full joint pmf of `(X_0, ..., X_m)`. Tuple `s` stores `x_i` in base-3
/// digit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullJointPmf {
    m: usize,
    prob: Vec<f64>,
    /// Channel outputs `Y_1..Y_{m+1}` per tuple.
    outputs: Vec<Vec<TernarySymbol>>,
}

fn digits(mut s: usize, len: usize) -> Vec<TernarySymbol> {
    (0..len)
        .map(|_| {
            let d = s % 3;
            s /= 3;
            TernarySymbol::from_index(d).expect("base-3 digit")
        })
        .collect()
}

impl FullJointPmf {
    fn with_table(m: usize, prob: Vec<f64>) -> Self {
        let outputs = (0..prob.len())
            .map(|s| {
                let x = digits(s, m + 1);
                let mut y = Vec::with_capacity(m + 1);
                // the ternary law agrees with the binary one wherever the
                // binary model puts mass
                network_use_into(&x, m, RelayModelVariant::Ternary, &mut y)
                    .expect("ternary law is total");
                y
            })
            .collect();
        Self { m, prob, outputs }
    }

    /// Arbitrary joint table, bypassing the Markov construction. Only mass
    /// is validated; meant for negative controls.
    pub fn from_raw_table(m: usize, prob: Vec<f64>) -> Result<Self> {
        if m == 0 || m > MAX_SINGLE_SOURCE_RELAYS {
            return Err(Error::CapacityGuard {
                m,
                limit: MAX_SINGLE_SOURCE_RELAYS,
            });
        }
        if prob.len() != 3usize.pow(m as u32 + 1) {
            return Err(Error::Domain(format!(
                "joint table for m = {m} needs 3^{} entries",
                m + 1
            )));
        }
        if prob.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPmf(
                "negative or non-finite joint entry".into(),
            ));
        }
        let total: f64 = prob.iter().copied().collect::<KahanSum>().total();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("joint mass {total}")));
        }
        Ok(Self::with_table(m, prob))
    }

    pub fn relays(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &[f64] {
        &self.prob
    }

    pub fn prob_of(&self, x: &[TernarySymbol]) -> f64 {
        let s = x
            .iter()
            .rev()
            .fold(0usize, |acc, sym| acc * 3 + sym.index());
        self.prob[s]
    }

    /// `p(X_{i-1}, X_i)` recovered by marginalization, `i = 1..=m`.
    pub fn pair_marginal(&self, i: usize) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (s, p) in self.prob.iter().enumerate() {
            let a = (s / 3usize.pow(i as u32 - 1)) % 3;
            let b = (s / 3usize.pow(i as u32)) % 3;
            out[a][b] += p;
        }
        out
    }

    /// Entropy of the inputs selected by `x_mask` (bit `i` is `X_i`) together
    /// with the outputs selected by `y_mask` (bit `i` is `Y_i`, `i = 1..=m+1`).
    pub fn entropy(&self, x_mask: u32, y_mask: u32) -> f64 {
        let mut keyed: Vec<(u64, f64)> = Vec::with_capacity(self.prob.len());
        for (s, &p) in self.prob.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let mut key = 0u64;
            let mut rest = s;
            for i in 0..=self.m {
                let d = rest % 3;
                rest /= 3;
                if x_mask & (1 << i) != 0 {
                    key = key * 3 + d as u64;
                }
            }
            for i in 1..=self.m + 1 {
                if y_mask & (1 << i) != 0 {
                    key = key * 3 + self.outputs[s][i - 1].index() as u64;
                }
            }
            keyed.push((key, p));
        }
        keyed.sort_unstable_by_key(|(k, _)| *k);
        let mut acc = KahanSum::default();
        let mut i = 0;
        while i < keyed.len() {
            let key = keyed[i].0;
            let mut mass = KahanSum::default();
            while i < keyed.len() && keyed[i].0 == key {
                mass.add(keyed[i].1);
                i += 1;
            }
            let p = mass.total();
            if p > 0.0 {
                acc.add(-p * p.log2());
            }
        }
        acc.total()
    }

    /// `H(A | B)` for input/output masks.
    pub fn conditional_entropy(&self, a: (u32, u32), b: (u32, u32)) -> f64 {
        self.entropy(a.0 | b.0, a.1 | b.1) - self.entropy(b.0, b.1)
    }

    fn sink_bit(&self) -> u32 {
        1 << (self.m + 1)
    }

    /// `H(Y_i | X_i)`.
    pub fn relay_term(&self, i: usize) -> f64 {
        self.conditional_entropy((0, 1 << i), (1 << i, 0))
    }
}

/// Expand a chain into its full joint table.
pub fn materialize(chain: &ChainDistribution) -> Result<FullJointPmf> {
    let m = chain.relays();
    if m > MAX_SINGLE_SOURCE_RELAYS {
        return Err(Error::CapacityGuard {
            m,
            limit: MAX_SINGLE_SOURCE_RELAYS,
        });
    }
    let start = chain.node_marginal(0);
    let transitions: Vec<[[f64; 3]; 3]> = chain
        .edges()
        .iter()
        .map(|e| {
            let t = e.table();
            let mut out = [[0.0; 3]; 3];
            for a in 0..3 {
                let row: f64 = t[a].iter().sum();
                if row > 0.0 {
                    for b in 0..3 {
                        out[a][b] = t[a][b] / row;
                    }
                }
            }
            out
        })
        .collect();
    let states = 3usize.pow(m as u32 + 1);
    let mut prob = vec![0.0; states];
    for (s, slot) in prob.iter_mut().enumerate() {
        let mut rest = s;
        let mut prev = rest % 3;
        rest /= 3;
        let mut p = start[prev];
        for t in &transitions {
            let cur = rest % 3;
            rest /= 3;
            p *= t[prev][cur];
            prev = cur;
        }
        *slot = p;
    }
    Ok(FullJointPmf::with_table(m, prob))
}

/// Subset of relay indices `{1..m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CutSet {
    members: Vec<usize>,
}

impl CutSet {
    pub fn new(m: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(bad) = members.iter().find(|&&i| i == 0 || i > m) {
            return Err(Error::Domain(format!(
                "cut member {bad} is not a relay index in 1..={m}"
            )));
        }
        Ok(Self { members })
    }

    pub fn empty() -> Self {
        Self {
            members: Vec::new(),
        }
    }

    fn from_mask(mask: u32) -> Self {
        Self {
            members: (1..32).filter(|i| mask & (1 << i) != 0).collect(),
        }
    }

    /// `{from, from + 1, ..., to}`.
    pub fn range(from: usize, to: usize) -> Self {
        Self {
            members: (from..=to).collect(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> u32 {
        self.members.iter().fold(0, |acc, i| acc | (1 << i))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_mask(self.mask() | other.mask())
    }
}

/// `H(Y_S, Y_{m+1} | X_S)`.
pub fn cut_value_single_source(joint: &FullJointPmf, s: &CutSet) -> f64 {
    let mask = s.mask();
    joint.conditional_entropy((0, mask | joint.sink_bit()), (mask, 0))
}

/// `I(X_0, X_{S^c}; Y_S, Y_{m+1} | X_S)`, evaluated without using that the
/// network is deterministic.
pub fn cut_mutual_information(joint: &FullJointPmf, s: &CutSet) -> f64 {
    let mask = s.mask();
    let all_x = (1u32 << (joint.m + 1)) - 1;
    let outputs = (0, mask | joint.sink_bit());
    joint.conditional_entropy(outputs, (mask, 0)) - joint.conditional_entropy(outputs, (all_x, 0))
}

/// Right-hand sides of the two-source rate bounds for one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSourceBounds {
    pub r0_bound: f64,
    pub rr_bound: f64,
    pub sum_bound: f64,
}

fn min_or_zero(values: impl Iterator<Item = f64>) -> f64 {
    let v = values.fold(f64::INFINITY, f64::min);
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// `H(Y_k | X_{r-1}, X_k)` with the conventions used by the relay-source
/// bounds: `X_k` is dropped for the sink (`k = m + 1`) and `X_{r-1}` is
/// dropped when `drop_source` is set and `r = 1`.
fn upstream_term(joint: &FullJointPmf, r: usize, k: usize, keep_x0: bool) -> f64 {
    let m = joint.m;
    let mut cond = 0u32;
    if r >= 2 || keep_x0 {
        cond |= 1 << (r - 1);
    }
    if k <= m {
        cond |= 1 << k;
    }
    joint.conditional_entropy((0, 1 << k), (cond, 0))
}

/// Evaluate the source, relay-source and sum-rate bounds for relay source `r`.
pub fn two_source_bounds(joint: &FullJointPmf, r: usize) -> Result<TwoSourceBounds> {
    let m = joint.m;
    if r == 0 || r > m {
        return Err(Error::Domain(format!("relay source {r} not in 1..={m}")));
    }
    let r0_bound = (1..=m)
        .map(|i| joint.relay_term(i))
        .fold(f64::INFINITY, f64::min);
    let rr_bound = (r + 1..=m + 1)
        .map(|i| upstream_term(joint, r, i, true))
        .fold(f64::INFINITY, f64::min);
    let down = min_or_zero((1..r).map(|i| joint.relay_term(i)));
    let up = (r + 1..=m + 1)
        .map(|k| upstream_term(joint, r, k, false))
        .fold(f64::INFINITY, f64::min);
    let sink = joint.entropy(0, joint.sink_bit());
    Ok(TwoSourceBounds {
        r0_bound,
        rr_bound,
        sum_bound: (down + up).min(sink),
    })
}

/// One failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Edges of the offending chain, nine floats each; empty for raw joints.
    pub chain_params: Vec<[f64; 9]>,
    pub subset: Vec<usize>,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub trials: usize,
    pub chains_checked: usize,
    pub subsets_checked: usize,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    params: &'a [[f64; 9]],
    violations: Vec<Violation>,
    subsets: usize,
}

impl Checker<'_> {
    fn expect_eq(&mut self, s: &CutSet, check: &str, lhs: f64, rhs: f64) {
        if (lhs - rhs).abs() > CHECK_TOLERANCE {
            self.record(s, check, lhs, rhs);
        }
    }

    fn expect_ge(&mut self, s: &CutSet, check: &str, lhs: f64, rhs: f64) {
        if lhs < rhs - CHECK_TOLERANCE {
            self.record(s, check, lhs, rhs);
        }
    }

    fn record(&mut self, s: &CutSet, check: &str, lhs: f64, rhs: f64) {
        self.violations.push(Violation {
            chain_params: self.params.to_vec(),
            subset: s.members().to_vec(),
            check: check.to_string(),
            lhs,
            rhs,
        });
    }
}

/// Check every single-source cut of one joint against its ascending
/// extension and the simplified `H(Y_l | X_l)` terms.
pub fn check_single_source_joint(joint: &FullJointPmf) -> (Vec<Violation>, usize) {
    check_single_source(joint, &[], None)
}

fn check_single_source(
    joint: &FullJointPmf,
    params: &[[f64; 9]],
    chain_cuts: Option<&[f64]>,
) -> (Vec<Violation>, usize) {
    let m = joint.m;
    let mut checker = Checker {
        params,
        violations: Vec::new(),
        subsets: 0,
    };
    let ascending: Vec<CutSet> = std::iter::once(CutSet::empty())
        .chain((1..=m).rev().map(|l| CutSet::range(l, m)))
        .collect();
    let asc_values: Vec<f64> = ascending
        .iter()
        .map(|s| cut_value_single_source(joint, s))
        .collect();

    // ascending sets reduce to the simplified terms
    checker.expect_eq(
        &ascending[0],
        "empty cut equals H(Y_{m+1})",
        asc_values[0],
        joint.entropy(0, joint.sink_bit()),
    );
    for (s, &v) in ascending.iter().zip(&asc_values).skip(1) {
        let l = s.members()[0];
        checker.expect_eq(s, "ascending cut equals H(Y_l|X_l)", v, joint.relay_term(l));
        if let Some(cuts) = chain_cuts {
            checker.expect_eq(s, "ascending cut equals chain cut value", v, cuts[l - 1]);
        }
    }
    if let Some(cuts) = chain_cuts {
        checker.expect_eq(
            &ascending[0],
            "empty cut equals chain sink value",
            asc_values[0],
            cuts[m],
        );
    }

    let asc_min = asc_values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut all_min = f64::INFINITY;
    let mut argmin = CutSet::empty();
    for mask in 0u32..(1 << m) {
        let s = CutSet::from_mask(mask << 1);
        let v = cut_value_single_source(joint, &s);
        checker.subsets += 1;
        if v < all_min {
            all_min = v;
            argmin = s.clone();
        }
        if let Some(&l) = s.members().first() {
            let ext = CutSet::range(l, m);
            checker.expect_ge(
                &s,
                "cut dominates its ascending extension",
                v,
                cut_value_single_source(joint, &ext),
            );
        }
    }
    checker.expect_eq(
        &argmin,
        "minimum over all cuts equals ascending minimum",
        all_min,
        asc_min,
    );
    (checker.violations, checker.subsets)
}

/// Check every two-source cut family of one joint for relay source `r`.
pub fn check_two_source_joint(joint: &FullJointPmf, r: usize) -> Result<(Vec<Violation>, usize)> {
    check_two_source(joint, r, &[])
}

fn check_two_source(
    joint: &FullJointPmf,
    r: usize,
    params: &[[f64; 9]],
) -> Result<(Vec<Violation>, usize)> {
    let m = joint.m;
    if r == 0 || r > m {
        return Err(Error::Domain(format!("relay source {r} not in 1..={m}")));
    }
    let mut checker = Checker {
        params,
        violations: Vec::new(),
        subsets: 0,
    };
    let down: Vec<usize> = (1..r).collect();
    let up: Vec<usize> = (r + 1..=m).collect();
    let sink = joint.sink_bit();

    let ascending_value = |i: Option<usize>, k: Option<usize>| -> f64 {
        match (i, k) {
            (Some(i), Some(k)) => joint.relay_term(i) + upstream_term(joint, r, k, true),
            (Some(i), None) => joint.relay_term(i) + upstream_term(joint, r, m + 1, true),
            (None, Some(k)) => joint.relay_term(k),
            (None, None) => joint.entropy(0, sink),
        }
    };

    // family index: (has down part, has up part)
    let mut family_min = [[f64::INFINITY; 2]; 2];
    let mut family_asc_min = [[f64::INFINITY; 2]; 2];
    for dmask in 0u32..(1 << down.len()) {
        for umask in 0u32..(1 << up.len()) {
            let sd: Vec<usize> = down
                .iter()
                .enumerate()
                .filter(|(b, _)| dmask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            let su: Vec<usize> = up
                .iter()
                .enumerate()
                .filter(|(b, _)| umask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            let s = CutSet::new(m, sd.iter().chain(&su).copied())?;
            let v = cut_value_single_source(joint, &s);
            checker.subsets += 1;

            let i = sd.first().copied();
            let k = su.first().copied();
            let ext = i
                .map_or_else(CutSet::empty, |i| CutSet::range(i, r - 1))
                .union(&k.map_or_else(CutSet::empty, |k| CutSet::range(k, m)));
            let ext_value = cut_value_single_source(joint, &ext);
            checker.expect_ge(&s, "cut dominates its ascending extension", v, ext_value);

            let fam = [usize::from(i.is_some()), usize::from(k.is_some())];
            family_min[fam[0]][fam[1]] = family_min[fam[0]][fam[1]].min(v);
            if s == ext {
                checker.expect_eq(
                    &s,
                    "ascending cut equals its decomposition",
                    v,
                    ascending_value(i, k),
                );
                family_asc_min[fam[0]][fam[1]] = family_asc_min[fam[0]][fam[1]].min(v);
            }
        }
    }
    for d in 0..2 {
        for u in 0..2 {
            if family_min[d][u].is_finite() {
                checker.expect_eq(
                    &CutSet::empty(),
                    &format!(
                        "family minimum attained on ascending sets (down: {}, up: {})",
                        d == 1,
                        u == 1
                    ),
                    family_min[d][u],
                    family_asc_min[d][u],
                );
            }
        }
    }
    Ok((checker.violations, checker.subsets))
}

/// Random Markov chain: uniform draws on the simplex for `p(X_0)` and each
/// transition row, with some rows thinned to hit boundary cases. Edges are
/// built by forward propagation, so consistency holds by construction.
pub fn random_chain(
    m: usize,
    model: RelayModelVariant,
    rng: &mut impl Rng,
) -> Result<ChainDistribution> {
    fn simplex(rng: &mut impl Rng, allowed: [bool; 3]) -> [f64; 3] {
        let thin = rng.gen_bool(0.25);
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            if allowed[k] && !(thin && rng.gen_bool(0.5)) {
                *slot = -(1.0 - rng.gen::<f64>()).ln();
            }
        }
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            let k = (0..3).find(|&k| allowed[k]).unwrap_or(0);
            out[k] = 1.0;
            return out;
        }
        out.map(|v| v / total)
    }

    let mut marginal = simplex(rng, [true; 3]);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let mut table = [[0.0; 3]; 3];
        for (a, row) in table.iter_mut().enumerate() {
            let allowed = [true, true, !(model == RelayModelVariant::Binary && a == 2)];
            let t = simplex(rng, allowed);
            for b in 0..3 {
                row[b] = marginal[a] * t[b];
            }
        }
        let mut next = [0.0; 3];
        for row in &table {
            for b in 0..3 {
                next[b] += row[b];
            }
        }
        marginal = next;
        edges.push(EdgeDistribution::new(table)?);
    }
    ChainDistribution::new(edges, model)
}

fn chain_params(chain: &ChainDistribution) -> Vec<[f64; 9]> {
    chain
        .edges()
        .iter()
        .map(EdgeDistribution::to_row_major)
        .collect()
}

/// Check ascending-set minimality on `chain` and on `trials` random chains
/// of the same length.
pub fn verify_ascending_minimality(
    chain: &ChainDistribution,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let m = chain.relays();
    if m > MAX_SINGLE_SOURCE_RELAYS {
        return Err(Error::CapacityGuard {
            m,
            limit: MAX_SINGLE_SOURCE_RELAYS,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport {
        trials,
        chains_checked: 0,
        subsets_checked: 0,
        violations: Vec::new(),
    };
    let run = |c: &ChainDistribution, report: &mut VerificationReport| -> Result<()> {
        let joint = materialize(c)?;
        let cuts = cut_values(c);
        let (v, n) = check_single_source(&joint, &chain_params(c), Some(&cuts));
        report.violations.extend(v);
        report.subsets_checked += n;
        report.chains_checked += 1;
        Ok(())
    };
    run(chain, &mut report)?;
    for _ in 0..trials {
        let c = random_chain(m, RelayModelVariant::Ternary, &mut rng)?;
        run(&c, &mut report)?;
    }
    Ok(report)
}

/// Two-source analogue of [`verify_ascending_minimality`].
pub fn verify_two_source_ascending(
    chain: &ChainDistribution,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let m = chain.relays();
    if m > MAX_TWO_SOURCE_RELAYS {
        return Err(Error::CapacityGuard {
            m,
            limit: MAX_TWO_SOURCE_RELAYS,
        });
    }
    if r == 0 || r > m {
        return Err(Error::Domain(format!("relay source {r} not in 1..={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport {
        trials,
        chains_checked: 0,
        subsets_checked: 0,
        violations: Vec::new(),
    };
    let run = |c: &ChainDistribution, report: &mut VerificationReport| -> Result<()> {
        let joint = materialize(c)?;
        let (v, n) = check_two_source(&joint, r, &chain_params(c))?;
        report.violations.extend(v);
        report.subsets_checked += n;
        report.chains_checked += 1;
        Ok(())
    };
    run(chain, &mut report)?;
    for _ in 0..trials {
        let c = random_chain(m, RelayModelVariant::Ternary, &mut rng)?;
        run(&c, &mut report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{infinite_cascade_chain, solve_cascade, solve_single_relay};
    use crate::info::{cond_entropy_prev_given_self, entropy_of_masses};
    use TernarySymbol::{One, Zero, N};

    const T: RelayModelVariant = RelayModelVariant::Ternary;

    #[test]
    fn materialize_single_edge_is_identity() {
        let chain = solve_single_relay(T).chain;
        let joint = materialize(&chain).unwrap();
        assert_eq!(joint.table().len(), 9);
        let e = chain.edges()[0].table();
        let back = joint.pair_marginal(1);
        for a in 0..3 {
            for b in 0..3 {
                assert!((back[a][b] - e[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn materialize_round_trips_edges() {
        let chain = infinite_cascade_chain(2).unwrap();
        let joint = materialize(&chain).unwrap();
        assert_eq!(joint.table().len(), 27);
        for i in 1..=2 {
            let back = joint.pair_marginal(i);
            let e = chain.edges()[i - 1].table();
            for a in 0..3 {
                for b in 0..3 {
                    assert!((back[a][b] - e[a][b]).abs() < 1e-9);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 1..=5 {
            let c = random_chain(m, T, &mut rng).unwrap();
            let joint = materialize(&c).unwrap();
            for i in 1..=m {
                let back = joint.pair_marginal(i);
                let e = c.edges()[i - 1].table();
                for a in 0..3 {
                    for b in 0..3 {
                        assert!((back[a][b] - e[a][b]).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn materialize_guards() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let big = random_chain(6, T, &mut rng).unwrap();
        assert!(matches!(
            materialize(&big),
            Err(Error::CapacityGuard { m: 6, .. })
        ));
        assert!(FullJointPmf::from_raw_table(1, vec![0.5; 9]).is_err());
        assert!(FullJointPmf::from_raw_table(1, vec![0.5; 4]).is_err());
    }

    #[test]
    fn single_source_cut_examples() {
        let chain = solve_single_relay(T).chain;
        let joint = materialize(&chain).unwrap();
        let sink = cut_value_single_source(&joint, &CutSet::empty());
        assert!((sink - entropy_of_masses(chain.node_marginal(1))).abs() < 1e-12);
        let relay = cut_value_single_source(&joint, &CutSet::new(1, [1]).unwrap());
        assert!((relay - 1.1389).abs() < 1e-4);

        let mut prob = vec![0.0; 27];
        prob[0] = 1.0;
        let point = FullJointPmf::from_raw_table(2, prob).unwrap();
        assert_eq!(
            cut_value_single_source(&point, &CutSet::new(2, [1, 2]).unwrap()),
            0.0
        );
        assert!(CutSet::new(2, [3]).is_err());
    }

    #[test]
    fn sink_cut_matches_marginal_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 1..=4 {
            let c = random_chain(m, T, &mut rng).unwrap();
            let joint = materialize(&c).unwrap();
            let v = cut_value_single_source(&joint, &CutSet::empty());
            assert!((v - entropy_of_masses(c.node_marginal(m))).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_network_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for trial in 0..20 {
            let m = 1 + trial % 4;
            let c = random_chain(m, T, &mut rng).unwrap();
            let joint = materialize(&c).unwrap();
            for mask in 0u32..(1 << m) {
                let s = CutSet::from_mask(mask << 1);
                let h = cut_value_single_source(&joint, &s);
                let i = cut_mutual_information(&joint, &s);
                assert!(
                    (h - i).abs() < 1e-12,
                    "m={m} S={:?}: {h} vs {i}",
                    s.members()
                );
            }
        }
    }

    #[test]
    fn ascending_minimality_examples() {
        let r = verify_ascending_minimality(&solve_single_relay(T).chain, 0, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.subsets_checked, 2);

        let start = solve_cascade(3, T).unwrap().chain;
        let r = verify_ascending_minimality(&start, 100, 7).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        assert_eq!(r.chains_checked, 101);
    }

    #[test]
    fn non_markov_joint_is_flagged() {
        // X_0 copies X_2 while X_1 listens: conditioning on X_2 reveals Y_1
        let mut prob = vec![0.0; 27];
        let idx = |x: [TernarySymbol; 3]| x.iter().rev().fold(0, |acc, s| acc * 3 + s.index());
        prob[idx([Zero, N, Zero])] = 0.5;
        prob[idx([One, N, One])] = 0.5;
        let joint = FullJointPmf::from_raw_table(2, prob).unwrap();
        let (violations, _) = check_single_source_joint(&joint);
        assert!(!violations.is_empty());
        assert!(violations.iter().any(|v| v.subset == vec![1, 2]));
    }

    #[test]
    fn two_source_bounds_single_relay() {
        let chain = solve_single_relay(T).chain;
        let joint = materialize(&chain).unwrap();
        let b = two_source_bounds(&joint, 1).unwrap();
        let e = &chain.edges()[0];
        assert!((b.r0_bound - 1.1389).abs() < 1e-4);
        // H(X_1 | X_0) from the transposed edge
        let t = e.table();
        let mut transposed = [[0.0; 3]; 3];
        for a in 0..3 {
            for c in 0..3 {
                transposed[c][a] = t[a][c];
            }
        }
        let h10 = cond_entropy_prev_given_self(&EdgeDistribution::new(transposed).unwrap());
        assert!((b.rr_bound - h10).abs() < 1e-12);
        assert!((b.sum_bound - 1.1390).abs() < 2e-4);
        assert!(two_source_bounds(&joint, 2).is_err());

        let uniform = ChainDistribution::new(
            vec![EdgeDistribution::symmetric(1.0 / 9.0, 1.0 / 9.0, 1.0 / 3.0).unwrap()],
            T,
        )
        .unwrap();
        let b = two_source_bounds(&materialize(&uniform).unwrap(), 1).unwrap();
        assert!((b.sum_bound - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn two_source_bounds_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..=4 {
            for _ in 0..10 {
                let c = random_chain(m, T, &mut rng).unwrap();
                let joint = materialize(&c).unwrap();
                let cuts = cut_values(&c);
                let relay_min = cuts[..m].iter().copied().fold(f64::INFINITY, f64::min);
                for r in 1..=m {
                    let b = two_source_bounds(&joint, r).unwrap();
                    assert!(b.sum_bound <= entropy_of_masses(c.node_marginal(m)) + 1e-12);
                    assert!((b.r0_bound - relay_min).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn two_source_ascending_examples() {
        let chain = infinite_cascade_chain(3).unwrap();
        let r = verify_two_source_ascending(&chain, 2, 0, 0).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert_eq!(r.subsets_checked, 4);

        let single = solve_single_relay(T).chain;
        let r = verify_two_source_ascending(&single, 1, 0, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.subsets_checked, 1);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let start = random_chain(4, T, &mut rng).unwrap();
        let r = verify_two_source_ascending(&start, 2, 50, 11).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());

        assert!(verify_two_source_ascending(&start, 5, 1, 0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let five = random_chain(5, T, &mut rng).unwrap();
        assert!(matches!(
            verify_two_source_ascending(&five, 2, 1, 0),
            Err(Error::CapacityGuard { .. })
        ));
    }

    #[test]
    fn report_serializes_with_documented_fields() {
        let r = verify_ascending_minimality(&solve_single_relay(T).chain, 1, 0).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("trials").is_some());
        assert!(json
            .get("violations")
            .unwrap()
            .as_array()
            .unwrap()
            .is_empty());
    }
}
