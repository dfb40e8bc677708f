//! Zero-error capacity of the single-source cascade.
//!
//! The capacity is the max-min of the cut values `H(Y_i | X_i)` for
//! `i = 1..m` and `H(Y_{m+1}) = H(X_m)` over Markov input chains. This module
//! evaluates the cut values of a chain and maximizes their minimum:
//! in closed form for a single relay, numerically for finite cascades.

use serde::{Deserialize, Serialize};

use crate::channel::RelayModelVariant;
use crate::error::{Error, Result};
use crate::info::{
    conditional_slice_entropy, cut_entropy_output_given_self, entropy_of_masses, hb,
    EdgeDistribution,
};

/// Per-entry tolerance when matching marginals of adjacent edges.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-7;

/// Largest cascade accepted by [`solve_cascade`].
pub const MAX_CASCADE_RELAYS: usize = 64;

pub(crate) const LOG2_3: f64 = 1.584_962_500_721_156_3;

/// Joint input pmf of the cascade given by its adjacent-pair marginals.
///
/// `edges[i - 1]` is `p(X_{i-1}, X_i)` for `i = 1..=m`; the sink sees the
/// marginal of `X_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainRecord", into = "ChainRecord")]
pub struct ChainDistribution {
    model: RelayModelVariant,
    edges: Vec<EdgeDistribution>,
}

/// Serialized shape of a chain: each edge as nine floats in row-major
/// `(x_prev, x_self)` order over `0, 1, N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainRecord {
    pub model: RelayModelVariant,
    pub edges: Vec<[f64; 9]>,
}

impl TryFrom<ChainRecord> for ChainDistribution {
    type Error = Error;

    fn try_from(r: ChainRecord) -> Result<Self> {
        let edges = r
            .edges
            .into_iter()
            .map(EdgeDistribution::from_row_major)
            .collect::<Result<Vec<_>>>()?;
        ChainDistribution::new(edges, r.model)
    }
}

impl From<ChainDistribution> for ChainRecord {
    fn from(c: ChainDistribution) -> Self {
        ChainRecord {
            model: c.model,
            edges: c.edges.iter().map(EdgeDistribution::to_row_major).collect(),
        }
    }
}

impl ChainDistribution {
    pub fn new(edges: Vec<EdgeDistribution>, model: RelayModelVariant) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InconsistentChain(
                "a chain needs at least one edge".into(),
            ));
        }
        for e in &edges {
            e.validate_for(model)?;
        }
        for (i, pair) in edges.windows(2).enumerate() {
            let left = pair[0].self_marginal();
            let right = pair[1].prev_marginal();
            if let Some(k) = (0..3).find(|&k| (left[k] - right[k]).abs() > CONSISTENCY_TOLERANCE) {
                return Err(Error::InconsistentChain(format!(
                    "marginal of X_{} differs between adjacent edges at symbol {k}: {} vs {}",
                    i + 1,
                    left[k],
                    right[k]
                )));
            }
        }
        Ok(Self { model, edges })
    }

    /// Number of relays `m`.
    pub fn relays(&self) -> usize {
        self.edges.len()
    }

    pub fn model(&self) -> RelayModelVariant {
        self.model
    }

    pub fn edges(&self) -> &[EdgeDistribution] {
        &self.edges
    }

    /// Marginal of `X_i` for `i = 0..=m`.
    pub fn node_marginal(&self, i: usize) -> [f64; 3] {
        if i == 0 {
            self.edges[0].prev_marginal()
        } else {
            self.edges[i - 1].self_marginal()
        }
    }
}

/// Outcome of a capacity computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity_bits: f64,
    pub chain: ChainDistribution,
    pub cut_values: Vec<f64>,
    pub solver_iterations: usize,
}

impl CapacityResult {
    fn from_chain(chain: ChainDistribution, solver_iterations: usize) -> Self {
        let cut_values = cut_values(&chain);
        let capacity_bits = cut_values.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            capacity_bits,
            chain,
            cut_values,
            solver_iterations,
        }
    }
}

/// The `m + 1` cut values of a chain.
pub fn cut_values(chain: &ChainDistribution) -> Vec<f64> {
    let mut cuts: Vec<f64> = chain
        .edges
        .iter()
        .map(cut_entropy_output_given_self)
        .collect();
    cuts.push(entropy_of_masses(chain.node_marginal(chain.relays())));
    cuts
}

fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, usize) {
    // f(lo) < 0 < f(hi)
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    (0.5 * (lo + hi), iterations)
}

/// Closed-form single-relay capacity.
///
/// With `q = p(X_1 = N)` and the source uniform over its alphabet while the
/// relay listens, the two cuts are `q log2 3` (ternary) or `q` (binary) and
/// `H(X_1) = H_b(q) + 1 - q`; the optimum balances them.
pub fn solve_single_relay(model: RelayModelVariant) -> CapacityResult {
    let (q, iterations) = match model {
        RelayModelVariant::Ternary => {
            bisect(1.0 / 3.0, 1.0, 1e-15, |q| q * LOG2_3 - hb(q) - (1.0 - q))
        }
        RelayModelVariant::Binary => bisect(0.5, 1.0, 1e-15, |q| q - hb(q) - (1.0 - q)),
    };
    let edge = match model {
        RelayModelVariant::Ternary => {
            EdgeDistribution::symmetric(q / 3.0, q / 3.0, (1.0 - q) / 2.0)
        }
        RelayModelVariant::Binary => EdgeDistribution::symmetric(q / 2.0, 0.0, (1.0 - q) / 2.0),
    }
    .expect("closed-form edge is a valid pmf");
    let chain = ChainDistribution::new(vec![edge], model).expect("single edge chain");
    CapacityResult::from_chain(chain, iterations)
}

/// Every edge carries `1/6` on `(0,N), (1,N), (N,0), (N,1)` and `1/3` on
/// `(N,N)`; each relay cut is then exactly one bit.
pub fn infinite_cascade_chain(m: usize) -> Result<ChainDistribution> {
    if m == 0 {
        return Err(Error::Domain("a cascade needs at least one relay".into()));
    }
    let edge = EdgeDistribution::symmetric(1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0)?;
    ChainDistribution::new(vec![edge; m], RelayModelVariant::Ternary)
}

/// Restricted, 0/1-symmetric chain described by the silence probabilities
/// `q_i = p(X_i = N)`.
///
/// Edges carry no mass on `{0,1} x {0,1}`, so edge `i` puts `(1 - q_{i-1})/2`
/// on each of `(0,N), (1,N)`, `(1 - q_i)/2` on each of `(N,0), (N,1)` and the
/// remainder `q_{i-1} + q_i - 1` on `(N,N)`. The source's conditional given
/// a listening relay is fixed uniform over its alphabet, so `q_0` follows
/// from `q_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SilenceProfile {
    model: RelayModelVariant,
    /// `q_1..=q_m`.
    q: Vec<f64>,
}

impl SilenceProfile {
    pub fn new(model: RelayModelVariant, q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Domain("profile needs at least one relay".into()));
        }
        if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "silence probability {v} outside [0, 1]"
            )));
        }
        let profile = Self { model, q };
        for i in 2..=profile.relays() {
            let slack = profile.q[i - 2] + profile.q[i - 1] - 1.0;
            let ok = match model {
                RelayModelVariant::Ternary => slack >= -1e-12,
                RelayModelVariant::Binary => slack.abs() <= 1e-12,
            };
            if !ok {
                return Err(Error::Domain(format!(
                    "q_{} + q_{} violates the edge support",
                    i - 1,
                    i
                )));
            }
        }
        Ok(profile)
    }

    pub fn relays(&self) -> usize {
        self.q.len()
    }

    pub fn model(&self) -> RelayModelVariant {
        self.model
    }

    /// `q_1..=q_m`.
    pub fn silence(&self) -> &[f64] {
        &self.q
    }

    /// Cut values straight from the profile, without building the chain.
    pub fn cut_values(&self) -> Vec<f64> {
        let m = self.relays();
        let mut cuts = Vec::with_capacity(m + 1);
        cuts.push(source_cut(self.model, self.q[0]));
        for i in 2..=m {
            cuts.push(relay_cut(self.model, self.q[i - 2], self.q[i - 1]));
        }
        cuts.push(sink_cut(self.q[m - 1]));
        cuts
    }

    pub fn min_cut(&self) -> f64 {
        self.cut_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn to_chain(&self) -> Result<ChainDistribution> {
        let m = self.relays();
        let mut edges = Vec::with_capacity(m);
        let q1 = self.q[0];
        let b1 = (1.0 - q1) / 2.0;
        edges.push(match self.model {
            RelayModelVariant::Ternary => EdgeDistribution::symmetric(q1 / 3.0, q1 / 3.0, b1)?,
            RelayModelVariant::Binary => EdgeDistribution::symmetric(q1 / 2.0, 0.0, b1)?,
        });
        for i in 2..=m {
            let (u, v) = (self.q[i - 2], self.q[i - 1]);
            let c = match self.model {
                RelayModelVariant::Ternary => (u + v - 1.0).max(0.0),
                RelayModelVariant::Binary => 0.0,
            };
            edges.push(EdgeDistribution::symmetric(
                (1.0 - u) / 2.0,
                c,
                (1.0 - v) / 2.0,
            )?);
        }
        ChainDistribution::new(edges, self.model)
    }
}

fn source_cut(model: RelayModelVariant, q1: f64) -> f64 {
    match model {
        RelayModelVariant::Ternary => q1 * LOG2_3,
        RelayModelVariant::Binary => q1,
    }
}

/// `H(Y_i | X_i)` for the restricted edge with `q_{i-1} = u`, `q_i = v`.
fn relay_cut(model: RelayModelVariant, u: f64, v: f64) -> f64 {
    match model {
        RelayModelVariant::Ternary => {
            let a = (1.0 - u) / 2.0;
            let c = (u + v - 1.0).max(0.0);
            conditional_slice_entropy(&[a, a, c])
        }
        // the (N,N) mass is zero, so the listening relay sees a fair bit
        RelayModelVariant::Binary => v,
    }
}

fn sink_cut(qm: f64) -> f64 {
    hb(qm) + 1.0 - qm
}

/// Solver controls for [`solve_cascade_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Cap on outer bisection steps.
    pub iteration_cap: usize,
    /// Width of the final bracket on the max-min level.
    pub level_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            iteration_cap: 100_000,
            level_tolerance: 1e-9,
        }
    }
}

const GOLDEN_TOL: f64 = 1e-13;

fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    // endpoints matter when the maximum sits on the boundary
    [lo, mid, hi]
        .into_iter()
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(mid)
}

/// Smallest (`rising`) or largest point of `[lo, hi]` where `pred` holds,
/// assuming it holds at `anchor` and the feasible set is an interval.
fn boundary(lo: f64, anchor: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    let (mut bad, mut good) = (lo, anchor);
    while (good - bad).abs() > GOLDEN_TOL {
        let mid = 0.5 * (bad + good);
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Best upstream silence `q_{i-1}` inside `prev` for a given `q_i = v`, and
/// the resulting cut value. `None` when no admissible upstream value exists.
fn best_upstream(model: RelayModelVariant, prev: Interval, v: f64) -> Option<(f64, f64)> {
    match model {
        RelayModelVariant::Ternary => {
            let lo = prev.lo.max(1.0 - v);
            if lo > prev.hi {
                return None;
            }
            // unconstrained maximizer: uniform conditional given silence
            let u = (1.0 - 2.0 * v / 3.0).clamp(lo, prev.hi);
            Some((u, relay_cut(model, u, v)))
        }
        RelayModelVariant::Binary => {
            let u = 1.0 - v;
            (u >= prev.lo && u <= prev.hi).then(|| (u, relay_cut(model, u, v)))
        }
    }
}

/// Feasible intervals of `q_1..q_m` for level `t`, or `None` if the level is
/// not attainable.
fn feasible_intervals(model: RelayModelVariant, m: usize, t: f64) -> Option<Vec<Interval>> {
    let slope = match model {
        RelayModelVariant::Ternary => LOG2_3,
        RelayModelVariant::Binary => 1.0,
    };
    let lo1 = t / slope;
    if lo1 > 1.0 {
        return None;
    }
    let mut intervals = vec![Interval {
        lo: lo1.max(0.0),
        hi: 1.0,
    }];
    for _ in 2..=m {
        let prev = *intervals.last()?;
        let domain_lo = (1.0 - prev.hi).max(0.0);
        let domain_hi = match model {
            RelayModelVariant::Ternary => 1.0,
            RelayModelVariant::Binary => 1.0 - prev.lo,
        };
        if domain_lo > domain_hi {
            return None;
        }
        let g = |v: f64| best_upstream(model, prev, v).map_or(f64::NEG_INFINITY, |(_, cut)| cut);
        let peak = golden_max(domain_lo, domain_hi, g);
        if g(peak) < t {
            return None;
        }
        let lo = boundary(domain_lo, peak, |v| g(v) >= t);
        let hi = boundary(domain_hi, peak, |v| g(v) >= t);
        intervals.push(Interval { lo, hi });
    }
    let last = *intervals.last()?;
    if sink_cut(last.clamp(1.0 / 3.0)) < t {
        return None;
    }
    Some(intervals)
}

/// Walk the intervals backwards, picking the best admissible value per node.
fn recover_profile(model: RelayModelVariant, intervals: &[Interval]) -> Result<SilenceProfile> {
    let m = intervals.len();
    let mut q = vec![0.0; m];
    q[m - 1] = intervals[m - 1].clamp(1.0 / 3.0);
    for i in (1..m).rev() {
        let (u, _) = best_upstream(model, intervals[i - 1], q[i])
            .ok_or_else(|| Error::Domain("feasible interval lost during recovery".into()))?;
        q[i - 1] = u;
    }
    SilenceProfile::new(model, q)
}

/// Capacity of an `m`-relay cascade with default solver settings.
pub fn solve_cascade(m: usize, model: RelayModelVariant) -> Result<CapacityResult> {
    solve_cascade_with(m, model, SolverOptions::default())
}

/// Maximize the minimum cut over restricted symmetric chains.
///
/// Outer bisection on the level `t`; for each level the set of admissible
/// `q_i` is an interval (the superlevel sets of the concave cuts are convex),
/// so feasibility is decided by propagating intervals from the source
/// towards the sink.
pub fn solve_cascade_with(
    m: usize,
    model: RelayModelVariant,
    opts: SolverOptions,
) -> Result<CapacityResult> {
    if m == 0 || m > MAX_CASCADE_RELAYS {
        return Err(Error::Domain(format!(
            "relay count {m} outside 1..={MAX_CASCADE_RELAYS}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = LOG2_3 + 1e-9;
    let mut best = feasible_intervals(model, m, lo)
        .ok_or_else(|| Error::Domain("zero level infeasible".into()))?;
    let mut iterations = 0;
    while hi - lo > opts.level_tolerance {
        if iterations >= opts.iteration_cap {
            let profile = recover_profile(model, &best)?;
            return Err(Error::NonConvergence {
                iterations,
                best: Box::new(CapacityResult::from_chain(profile.to_chain()?, iterations)),
            });
        }
        let mid = 0.5 * (lo + hi);
        match feasible_intervals(model, m, mid) {
            Some(intervals) => {
                lo = mid;
                best = intervals;
            }
            None => hi = mid,
        }
        iterations += 1;
    }
    let profile = recover_profile(model, &best)?;
    Ok(CapacityResult::from_chain(profile.to_chain()?, iterations))
}

/// Restricted optimum as a silence profile, for callers that perturb it.
pub fn solve_cascade_profile(m: usize, model: RelayModelVariant) -> Result<SilenceProfile> {
    let result = solve_cascade(m, model)?;
    let q = (1..=m).map(|i| result.chain.node_marginal(i)[2]).collect();
    SilenceProfile::new(model, q)
}

/// Unrestricted cross-check: maximize the minimum cut over all Markov chains
/// (full 3x3 support, no symmetry) by smoothed-min gradient ascent from
/// several starts, one of them the restricted optimum.
pub fn solve_cascade_full_support(
    m: usize,
    model: RelayModelVariant,
    seed: u64,
) -> Result<CapacityResult> {
    crate::fullsupport::solve(m, model, seed)
}
