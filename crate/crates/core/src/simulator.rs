//! Block-pipelined transmission through the cascade.
//!
//! All nodes encode, the network runs slot by slot, then all nodes decode.
//! Relay `i` forwards in block `b` the message it decoded at the end of block
//! `b - 1`, so message `t` reaches the sink at the end of block `t + m`.
//! Relays start from index 0 until real estimates exist, and the source pads
//! the last `m` blocks with index 0.

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::solve_cascade;
use crate::channel::{network_use_into, render_block, TernarySymbol};
use crate::coding::{
    decode_at_node, encode_relay, encode_source, optimize_slot_counts, relay_allocation,
    two_source_allocation, two_source_decode, two_source_decode_source, two_source_encode,
    two_source_encode_source, CodebookSpec, SlotAllocation, TwoSourceSpec,
};
use crate::error::{Error, Result};
use crate::info::log2_big;

/// Traces are refused above this many `n * B` symbols.
pub const TRACE_LIMIT: usize = 1_000_000;

/// Where message indices come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageSource {
    /// Uniform draws from a seeded generator.
    Random,
    /// `0, 1, 2, ...`, wrapping at the message count.
    Exhaustive,
    Explicit(Vec<BigUint>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeSpec {
    Single(CodebookSpec),
    TwoSource(TwoSourceSpec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub spec: CodeSpec,
    pub blocks: usize,
    pub seed: u64,
    pub messages: MessageSource,
    /// Messages of the relay source in two-source runs.
    pub relay_messages: MessageSource,
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn single(spec: CodebookSpec, blocks: usize, seed: u64, messages: MessageSource) -> Self {
        Self {
            spec: CodeSpec::Single(spec),
            blocks,
            seed,
            messages,
            relay_messages: MessageSource::Random,
            trace: false,
        }
    }

    pub fn two_source(spec: TwoSourceSpec, blocks: usize, seed: u64) -> Self {
        Self {
            spec: CodeSpec::TwoSource(spec),
            blocks,
            seed,
            messages: MessageSource::Random,
            relay_messages: MessageSource::Random,
            trace: false,
        }
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }
}

/// What one relay knows between blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub node_index: usize,
    /// Estimates of `w^(0), w^(1), ...`, newest last.
    pub decoded_history: Vec<BigUint>,
    pub current_allocation: SlotAllocation,
}

impl NodeState {
    fn new(node_index: usize, n: usize) -> Self {
        Self {
            node_index,
            decoded_history: Vec::new(),
            current_allocation: SlotAllocation::empty(n),
        }
    }

    /// Estimate of `w^(t)`; index 0 before the pipeline fills.
    fn estimate(&self, t: isize) -> BigUint {
        if t < 0 {
            BigUint::zero()
        } else {
            self.decoded_history[t as usize].clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionReport {
    pub block_length: usize,
    pub relays: usize,
    pub blocks: usize,
    pub messages_sent: usize,
    pub messages_correct: usize,
    pub achieved_rate_bits_per_use: f64,
    /// Blocks between injection at the source and decoding at the sink.
    pub min_latency_blocks: usize,
    pub max_latency_blocks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_messages_sent: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_messages_correct: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_rate_bits_per_use: Option<f64>,
    /// Per block, one row per transmitting node over `{0, 1, N}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_block_trace: Option<Vec<Vec<String>>>,
}

/// Text matrix of a trace: blocks separated by blank lines.
pub fn render_trace(trace: &[Vec<String>]) -> String {
    trace
        .iter()
        .map(|rows| rows.join("\n"))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn draw_messages(
    source: &MessageSource,
    count: usize,
    limit: &BigUint,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BigUint>> {
    match source {
        MessageSource::Random => Ok((0..count).map(|_| rng.gen_biguint_below(limit)).collect()),
        MessageSource::Exhaustive => Ok((0..count).map(|t| BigUint::from(t) % limit).collect()),
        MessageSource::Explicit(list) => {
            if list.len() < count {
                return Err(Error::Domain(format!(
                    "need {count} messages, got {}",
                    list.len()
                )));
            }
            if let Some(w) = list.iter().take(count).find(|w| *w >= limit) {
                return Err(Error::Domain(format!(
                    "message {w} out of range (count {limit})"
                )));
            }
            Ok(list[..count].to_vec())
        }
    }
}

fn check_trace(trace: bool, n: usize, blocks: usize) -> Result<()> {
    let symbols = n.saturating_mul(blocks);
    if trace && symbols > TRACE_LIMIT {
        return Err(Error::TraceTooLarge {
            symbols,
            limit: TRACE_LIMIT,
        });
    }
    Ok(())
}

fn violation(block: usize, sent: &BigUint, decoded: &BigUint) -> Error {
    Error::ZeroErrorViolation {
        block,
        sent: sent.to_string(),
        decoded: decoded.to_string(),
    }
}

/// Push one block of inputs through the network; returns receptions per
/// node `1..=m+1`.
fn run_channel(
    x: &[Vec<TernarySymbol>],
    spec_model: crate::channel::RelayModelVariant,
) -> Result<Vec<Vec<TernarySymbol>>> {
    let m = x.len() - 1;
    let n = x[0].len();
    let mut y = vec![Vec::with_capacity(n); m + 1];
    let mut column = Vec::with_capacity(m + 1);
    let mut out = Vec::with_capacity(m + 1);
    for slot in 0..n {
        column.clear();
        column.extend(x.iter().map(|b| b[slot]));
        network_use_into(&column, m, spec_model, &mut out)?;
        for (node, sym) in out.iter().enumerate() {
            y[node].push(*sym);
        }
    }
    Ok(y)
}

/// Allocations of relays `from..=m` at block `b` as seen through `estimate`,
/// which returns the message relay `j` sends.
fn downstream_allocation(
    from: usize,
    spec: &CodebookSpec,
    mut estimate: impl FnMut(usize) -> BigUint,
) -> Result<SlotAllocation> {
    let mut z = SlotAllocation::empty(spec.block_length());
    for j in (from..=spec.relays()).rev() {
        z = relay_allocation(&estimate(j), j, &z, spec)?;
    }
    Ok(z)
}

/// Single-source pipeline over `cfg.blocks` blocks.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<TransmissionReport> {
    let CodeSpec::Single(spec) = &cfg.spec else {
        return Err(Error::Domain(
            "run_pipeline needs a single-source spec".into(),
        ));
    };
    let m = spec.relays();
    let n = spec.block_length();
    let blocks = cfg.blocks;
    if blocks <= m {
        return Err(Error::Domain(format!(
            "need more than {m} blocks to deliver a message"
        )));
    }
    check_trace(cfg.trace, n, blocks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sent = blocks - m;
    let messages = draw_messages(&cfg.messages, sent, spec.message_count(), &mut rng)?;
    let zero = BigUint::zero();
    let message = |t: isize| -> &BigUint {
        if t < 0 || t as usize >= sent {
            &zero
        } else {
            &messages[t as usize]
        }
    };

    let mut relays: Vec<NodeState> = (1..=m).map(|i| NodeState::new(i, n)).collect();
    let mut trace = cfg.trace.then(Vec::new);
    let mut correct = 0;
    let mut latency = (usize::MAX, 0);

    for b in 0..blocks {
        let bi = b as isize;
        let mut x = Vec::with_capacity(m + 1);
        let z1 = downstream_allocation(1, spec, |j| message(bi - j as isize).clone())?;
        x.push(encode_source(message(bi), &z1, spec)?);
        for i in 1..=m {
            let state = &relays[i - 1];
            let z_next = downstream_allocation(i + 1, spec, |j| state.estimate(bi - j as isize))?;
            let block = encode_relay(&state.estimate(bi - i as isize), i, &z_next, spec)?;
            relays[i - 1].current_allocation = SlotAllocation::of_block(&block);
            x.push(block);
        }
        for i in 1..m {
            if relays[i - 1]
                .current_allocation
                .intersects(&relays[i].current_allocation)
            {
                return Err(Error::Integrity(format!(
                    "relays {i} and {} both transmit in one slot of block {b}",
                    i + 1
                )));
            }
        }
        if let Some(t) = trace.as_mut() {
            t.push(x.iter().map(|blk| render_block(blk)).collect());
        }

        let y = run_channel(&x, spec.model())?;

        for i in 1..=m {
            let w = decode_at_node(&y[i - 1], &relays[i - 1].current_allocation, i - 1, spec)?;
            let t = bi - (i as isize - 1);
            if t < 0 {
                if !w.is_zero() {
                    return Err(violation(b, &zero, &w));
                }
            } else {
                relays[i - 1].decoded_history.push(w);
            }
        }
        let empty = SlotAllocation::empty(n);
        let w = decode_at_node(&y[m], &empty, m, spec)?;
        let t = bi - m as isize;
        if t >= 0 && (t as usize) < sent {
            let want = message(t);
            if &w != want {
                return Err(violation(b, want, &w));
            }
            correct += 1;
            let delay = b - t as usize;
            latency = (latency.0.min(delay), latency.1.max(delay));
        }
    }

    Ok(TransmissionReport {
        block_length: n,
        relays: m,
        blocks,
        messages_sent: sent,
        messages_correct: correct,
        achieved_rate_bits_per_use: log2_big(spec.message_count()) * sent as f64
            / (n * blocks) as f64,
        min_latency_blocks: latency.0,
        max_latency_blocks: latency.1,
        relay_messages_sent: None,
        relay_messages_correct: None,
        relay_rate_bits_per_use: None,
        per_block_trace: trace,
    })
}

/// One relay that is also a source: it forwards the source message it
/// decoded in the previous block together with a fresh message of its own.
pub fn run_two_source(cfg: &ExperimentConfig) -> Result<TransmissionReport> {
    let CodeSpec::TwoSource(spec) = &cfg.spec else {
        return Err(Error::Domain(
            "run_two_source needs a two-source spec".into(),
        ));
    };
    let n = spec.block_length();
    let blocks = cfg.blocks;
    if blocks <= 1 {
        return Err(Error::Domain(
            "need more than 1 block to deliver a source message".into(),
        ));
    }
    check_trace(cfg.trace, n, blocks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sent = blocks - 1;
    let w0s = draw_messages(&cfg.messages, sent, spec.w0_count(), &mut rng)?;
    let w1s = draw_messages(&cfg.relay_messages, blocks, spec.w1_count(), &mut rng)?;
    let zero = BigUint::zero();
    let source_msg = |t: isize| -> &BigUint {
        if t < 0 || t as usize >= sent {
            &zero
        } else {
            &w0s[t as usize]
        }
    };

    let mut relay = NodeState::new(1, n);
    let mut trace = cfg.trace.then(Vec::new);
    let (mut correct0, mut correct1) = (0, 0);
    let mut latency = (usize::MAX, 0);

    for b in 0..blocks {
        let bi = b as isize;
        let z1 = two_source_allocation(source_msg(bi - 1), spec)?;
        let x0 = two_source_encode_source(source_msg(bi), &z1, spec)?;
        let forward = relay.estimate(bi - 1);
        let x1 = two_source_encode(&forward, &w1s[b], spec)?;
        relay.current_allocation = SlotAllocation::of_block(&x1);
        if relay.current_allocation != z1 {
            return Err(Error::Integrity(format!(
                "source and relay disagree on the relay slots in block {b}"
            )));
        }
        let x = vec![x0, x1];
        if let Some(t) = trace.as_mut() {
            t.push(x.iter().map(|blk| render_block(blk)).collect());
        }
        let y = run_channel(&x, crate::channel::RelayModelVariant::Ternary)?;

        relay.decoded_history.push(two_source_decode_source(
            &y[0],
            &relay.current_allocation,
            spec,
        )?);
        let (w0, w1) = two_source_decode(&y[1], spec)?;
        if w1 != w1s[b] {
            return Err(violation(b, &w1s[b], &w1));
        }
        correct1 += 1;
        let t = bi - 1;
        if t >= 0 {
            let want = source_msg(t);
            if &w0 != want {
                return Err(violation(b, want, &w0));
            }
            correct0 += 1;
            let delay = b - t as usize;
            latency = (latency.0.min(delay), latency.1.max(delay));
        } else if !w0.is_zero() {
            return Err(violation(b, &zero, &w0));
        }
    }

    let (_, r1) = spec.rates();
    Ok(TransmissionReport {
        block_length: n,
        relays: 1,
        blocks,
        messages_sent: sent,
        messages_correct: correct0,
        achieved_rate_bits_per_use: log2_big(spec.w0_count()) * sent as f64 / (n * blocks) as f64,
        min_latency_blocks: latency.0,
        max_latency_blocks: latency.1,
        relay_messages_sent: Some(blocks),
        relay_messages_correct: Some(correct1),
        relay_rate_bits_per_use: Some(r1),
        per_block_trace: trace,
    })
}

/// One row of a rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub n_counts: Vec<usize>,
    /// Code rate `log2 |W_0| / n`.
    pub rate: f64,
    /// Rate measured by the pipeline over `10 m` blocks.
    pub pipeline_rate: f64,
    pub capacity: f64,
    pub gap: f64,
    /// Set when the gap failed to shrink relative to the previous row.
    pub plateau: bool,
}

/// Optimize slot budgets and run the pipeline for every block length.
pub fn sweep_rates(n_values: &[usize], m: usize, seed: u64) -> Result<Vec<SweepRow>> {
    let capacity = solve_cascade(m, crate::channel::RelayModelVariant::Ternary)?.capacity_bits;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let spec = optimize_slot_counts(n, m)?;
        let report = run_pipeline(&ExperimentConfig::single(
            spec.clone(),
            10 * m,
            seed,
            MessageSource::Random,
        ))?;
        let rate = spec.rate();
        let gap = capacity - rate;
        let plateau = rows.last().is_some_and(|prev| gap >= prev.gap);
        rows.push(SweepRow {
            n,
            n_counts: spec.n_counts().to_vec(),
            rate,
            pipeline_rate: report.achieved_rate_bits_per_use,
            capacity,
            gap,
            plateau,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{parse_block, RelayModelVariant};
    use crate::coding::optimize_slot_counts_for;

    fn spec(n: usize, counts: &[usize]) -> CodebookSpec {
        CodebookSpec::new(n, counts.to_vec(), RelayModelVariant::Ternary).unwrap()
    }

    #[test]
    fn single_relay_exhaustive() {
        let cfg = ExperimentConfig::single(spec(6, &[2]), 10, 0, MessageSource::Exhaustive);
        let r = run_pipeline(&cfg).unwrap();
        assert_eq!((r.messages_sent, r.messages_correct), (9, 9));
        assert!((r.achieved_rate_bits_per_use - 60f64.log2() * 9.0 / 60.0).abs() < 1e-12);
        assert_eq!((r.min_latency_blocks, r.max_latency_blocks), (1, 1));
    }

    #[test]
    fn two_relay_random() {
        let cfg = ExperimentConfig::single(
            optimize_slot_counts(8, 2).unwrap(),
            50,
            3,
            MessageSource::Random,
        );
        let r = run_pipeline(&cfg).unwrap();
        assert_eq!((r.messages_sent, r.messages_correct), (48, 48));
        assert_eq!((r.min_latency_blocks, r.max_latency_blocks), (2, 2));
    }

    #[test]
    fn shortest_pipeline_delivers_one() {
        for m in 1..=3 {
            let cfg = ExperimentConfig::single(
                optimize_slot_counts(12, m).unwrap(),
                m + 1,
                1,
                MessageSource::Random,
            );
            assert_eq!(run_pipeline(&cfg).unwrap().messages_correct, 1);
            let short = ExperimentConfig::single(
                optimize_slot_counts(12, m).unwrap(),
                m,
                1,
                MessageSource::Random,
            );
            assert!(run_pipeline(&short).is_err());
        }
    }

    #[test]
    fn trace_obeys_half_duplex() {
        let cfg = ExperimentConfig::single(spec(10, &[2, 3, 4]), 12, 5, MessageSource::Random)
            .with_trace(true);
        let r = run_pipeline(&cfg).unwrap();
        let trace = r.per_block_trace.unwrap();
        assert_eq!(trace.len(), 12);
        for rows in &trace {
            let blocks: Vec<_> = rows.iter().map(|s| parse_block(s).unwrap()).collect();
            for i in 1..blocks.len() - 1 {
                let z = SlotAllocation::of_block(&blocks[i]);
                let z_next = SlotAllocation::of_block(&blocks[i + 1]);
                assert!(!z.intersects(&z_next));
            }
        }
        assert!(!render_trace(&trace).is_empty());
        let big = ExperimentConfig::single(spec(640, &[200]), 2000, 0, MessageSource::Random)
            .with_trace(true);
        assert!(matches!(
            run_pipeline(&big),
            Err(Error::TraceTooLarge { .. })
        ));
    }

    #[test]
    fn binary_model_pipeline_time_shares() {
        for m in 1..=3 {
            let s = optimize_slot_counts_for(16, m, RelayModelVariant::Binary).unwrap();
            let cfg =
                ExperimentConfig::single(s.clone(), 20, 2, MessageSource::Random).with_trace(true);
            let r = run_pipeline(&cfg).unwrap();
            assert_eq!(r.messages_correct, 20 - m);
            for rows in r.per_block_trace.unwrap() {
                let blocks: Vec<_> = rows.iter().map(|s| parse_block(s).unwrap()).collect();
                for slot in 0..16 {
                    for i in 1..blocks.len() {
                        assert!(!(blocks[i - 1][slot].is_silent() && blocks[i][slot].is_silent()));
                    }
                }
            }
            if m >= 2 {
                assert!((s.rate() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_messages_and_determinism() {
        let s = spec(6, &[2]);
        let list: Vec<BigUint> = [59u32, 0, 17, 42].into_iter().map(BigUint::from).collect();
        let cfg = ExperimentConfig::single(s.clone(), 5, 0, MessageSource::Explicit(list));
        assert_eq!(run_pipeline(&cfg).unwrap().messages_correct, 4);
        let bad = ExperimentConfig::single(
            s.clone(),
            5,
            0,
            MessageSource::Explicit(vec![BigUint::from(60u32); 4]),
        );
        assert!(run_pipeline(&bad).is_err());

        let cfg = ExperimentConfig::single(
            optimize_slot_counts(64, 2).unwrap(),
            30,
            9,
            MessageSource::Random,
        )
        .with_trace(true);
        let a = serde_json::to_string(&run_pipeline(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_pipeline(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_source_runs() {
        let s = TwoSourceSpec::new(6, 2, 1).unwrap();
        let r = run_two_source(&ExperimentConfig::two_source(s, 20, 4)).unwrap();
        assert_eq!((r.messages_sent, r.messages_correct), (19, 19));
        assert_eq!(r.relay_messages_correct, Some(20));
        assert!((r.achieved_rate_bits_per_use - 30f64.log2() * 19.0 / 120.0).abs() < 1e-12);
        assert!((r.relay_rate_bits_per_use.unwrap() - 1.0 / 6.0).abs() < 1e-12);

        // k0 = n_1 carries no relay message and matches the single-source run
        let full = TwoSourceSpec::new(6, 2, 2).unwrap();
        let r2 = run_two_source(&ExperimentConfig::two_source(full, 10, 1)).unwrap();
        let r1 = run_pipeline(&ExperimentConfig::single(
            spec(6, &[2]),
            10,
            1,
            MessageSource::Random,
        ))
        .unwrap();
        assert_eq!(r2.relay_rate_bits_per_use, Some(0.0));
        assert!((r2.achieved_rate_bits_per_use - r1.achieved_rate_bits_per_use).abs() < 1e-12);

        assert!(run_two_source(&ExperimentConfig::single(
            spec(6, &[2]),
            10,
            1,
            MessageSource::Random
        ))
        .is_err());
    }

    #[test]
    fn threshold_two_source_near_asymptote() {
        let s = TwoSourceSpec::threshold(640).unwrap();
        let r = run_two_source(&ExperimentConfig::two_source(s, 200, 8)).unwrap();
        let t = crate::region::sum_capacity_threshold();
        assert!(
            (r.achieved_rate_bits_per_use - t.r0_min).abs() < 0.02,
            "{}",
            r.achieved_rate_bits_per_use
        );
        assert!((r.relay_rate_bits_per_use.unwrap() - t.r1_at_threshold).abs() < 0.02);
    }

    #[test]
    fn sweep_examples() {
        let rows = sweep_rates(&[8, 16, 64, 256, 640], 1, 0).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].gap < w[0].gap);
            assert!(!w[1].plateau);
        }
        let last = rows.last().unwrap();
        assert!(last.gap < 0.03);
        assert!((last.pipeline_rate - last.capacity * 0.9).abs() < 0.02);
        let rows = sweep_rates(&[64], 3, 0).unwrap();
        assert!(rows[0].rate > 0.9, "{}", rows[0].rate);
    }

    #[test]
    fn cold_start_state() {
        let s = NodeState::new(2, 8);
        assert_eq!(s.estimate(-1), BigUint::zero());
        assert!(s.current_allocation.is_empty());
    }
}
