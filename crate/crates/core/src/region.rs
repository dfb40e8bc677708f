//! Rate regions for a cascade with a second source at relay `r`.
//!
//! Closed forms cover the single-relay case; [`general_region_bound`] traces
//! the outer bound numerically for up to three relays, and
//! [`finite_n_achievable`] lists what the relay-source code realizes at a
//! given block length.

use std::fmt::Write as _;
use std::sync::OnceLock;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    solve_cascade_profile, solve_single_relay, ChainDistribution, SilenceProfile, LOG2_3,
};
use crate::channel::RelayModelVariant;
use crate::cutset::{materialize, two_source_bounds, TwoSourceBounds};
use crate::error::{Error, Result};
use crate::info::{binomial_big, hb, log2_big, EdgeDistribution};

/// Slack on `r0` above the single-relay capacity, covering the rounded
/// value `1.1389` callers commonly pass.
pub const CAPACITY_SLACK: f64 = 5e-5;

/// Smallest and largest block lengths for finite-`n` frontiers.
pub const FINITE_N_RANGE: (usize, usize) = (8, 4096);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r0: f64,
    pub r1: f64,
}

impl RatePoint {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 >= 0.0 && r1 >= 0.0) {
            return Err(Error::Domain(format!(
                "rates must be nonnegative, got ({r0}, {r1})"
            )));
        }
        Ok(Self { r0, r1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveLabel {
    OuterBound,
    SumCapLine,
    AchievableFiniteN,
    AchievableAsymptotic,
}

impl CurveLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveLabel::OuterBound => "outer_bound",
            CurveLabel::SumCapLine => "sum_cap_line",
            CurveLabel::AchievableFiniteN => "achievable_finite_n",
            CurveLabel::AchievableAsymptotic => "achievable_asymptotic",
        }
    }
}

/// Points ordered by strictly increasing `r0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCurve {
    pub label: CurveLabel,
    pub points: Vec<RatePoint>,
}

impl RegionCurve {
    pub fn new(label: CurveLabel, points: Vec<RatePoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].r0 >= w[1].r0) {
            return Err(Error::Domain(
                "curve points must have strictly increasing r0".into(),
            ));
        }
        Ok(Self { label, points })
    }

    /// Largest `r1` realizable at source rate `r0` by points of this curve,
    /// allowing either rate to be lowered; `None` beyond the last point.
    pub fn staircase(&self, r0: f64) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.r0 >= r0)
            .map(|p| p.r1)
            .reduce(f64::max)
    }

    /// Piecewise-linear interpolation of `r1` at `r0`.
    pub fn interpolate(&self, r0: f64) -> Option<f64> {
        let k = self.points.partition_point(|p| p.r0 < r0);
        if k < self.points.len() && self.points[k].r0 == r0 {
            return Some(self.points[k].r1);
        }
        if k == 0 || k == self.points.len() {
            return None;
        }
        let (a, b) = (self.points[k - 1], self.points[k]);
        Some(a.r1 + (b.r1 - a.r1) * (r0 - a.r0) / (b.r0 - a.r0))
    }
}

/// Render curves as CSV with header `r0_bits,r1_bits,label`.
pub fn curves_to_csv(curves: &[RegionCurve]) -> String {
    let mut out = String::from("r0_bits,r1_bits,label\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(out, "{:.6},{:.6},{}", p.r0, p.r1, c.label.as_str());
        }
    }
    out
}

/// Single-relay ternary capacity, computed once.
pub fn single_relay_capacity() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| solve_single_relay(RelayModelVariant::Ternary).capacity_bits)
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![a, b];
    }
    (0..k)
        .map(|j| a + (b - a) * j as f64 / (k - 1) as f64)
        .collect()
}

/// Largest relay-source rate compatible with source rate `r0` for one relay.
pub fn outer_boundary_single_relay(r0: f64) -> Result<f64> {
    let c = single_relay_capacity();
    if !(0.0..=c + CAPACITY_SLACK).contains(&r0) {
        return Err(Error::Domain(format!("r0 = {r0} outside [0, {c:.6}]")));
    }
    if r0 <= LOG2_3 / 3.0 {
        return Ok(LOG2_3 - r0);
    }
    let q = r0 / LOG2_3;
    Ok((hb(q) + (1.0 - q) - r0).max(0.0))
}

/// Closed-form outer boundary on `points` evenly spaced source rates, with
/// the corner always included. `points = 1` gives the endpoints only.
pub fn outer_boundary_curve(points: usize) -> Result<RegionCurve> {
    let c = single_relay_capacity();
    let mut grid = linspace(0.0, c, points);
    if points > 1 {
        grid.push(LOG2_3 / 3.0);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let pts = grid
        .into_iter()
        .map(|r0| RatePoint::new(r0, outer_boundary_single_relay(r0)?))
        .collect::<Result<Vec<_>>>()?;
    RegionCurve::new(CurveLabel::OuterBound, pts)
}

/// The line `r0 + r1 = log2 3`.
pub fn sum_cap_line(points: usize) -> Result<RegionCurve> {
    let pts = linspace(0.0, LOG2_3, points)
        .into_iter()
        .map(|r0| RatePoint::new(r0, (LOG2_3 - r0).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    RegionCurve::new(CurveLabel::SumCapLine, pts)
}

/// Root of a decreasing function on `[lo, hi]` by bisection.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Source-rate threshold above which the relay-source code meets the sum
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Relay transmit fraction `n_1 / n`.
    pub beta: f64,
    pub r0_min: f64,
    pub r1_at_threshold: f64,
}

/// Solve `(1 - beta) log2 3 = H_b(beta)`.
pub fn sum_capacity_threshold() -> Threshold {
    let beta = bisect_decreasing(|b| (1.0 - b) * LOG2_3 - hb(b), 0.0, 0.5);
    Threshold {
        beta,
        r0_min: (1.0 - beta) * LOG2_3,
        r1_at_threshold: beta,
    }
}

/// Asymptotic rates of the relay-source code as the share `t` of relay bits
/// given to the source message sweeps `[0, 1]`.
pub fn achievable_segment(t_steps: usize) -> Result<RegionCurve> {
    if t_steps < 2 {
        return Err(Error::Domain("need at least two steps".into()));
    }
    let pts = linspace(0.0, 1.0, t_steps)
        .into_iter()
        .map(|t| {
            let beta = bisect_decreasing(|b| (1.0 - b) * LOG2_3 - t * b - hb(b), 0.0, 0.5);
            RatePoint::new((1.0 - beta) * LOG2_3, (1.0 - t) * beta)
        })
        .collect::<Result<Vec<_>>>()?;
    RegionCurve::new(CurveLabel::AchievableAsymptotic, pts)
}

/// A relay-source code configuration and the rates it realizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteNPoint {
    pub n: usize,
    pub n1: usize,
    pub k0: usize,
    pub point: RatePoint,
}

/// Rates of the code with block length `n`, relay budget `n1` and `k0`
/// source bits, from exact message counts.
pub fn finite_n_point(n: usize, n1: usize, k0: usize) -> Result<FiniteNPoint> {
    if n1 > n || k0 > n1 {
        return Err(Error::Domain(format!(
            "need k0 <= n_1 <= n, got k0 = {k0}, n_1 = {n1}, n = {n}"
        )));
    }
    let source = BigUint::from(3u32).pow((n - n1) as u32);
    let relay = binomial_big(n as u64, n1 as u64) << k0;
    let w0 = source.min(relay);
    Ok(FiniteNPoint {
        n,
        n1,
        k0,
        point: RatePoint::new(log2_big(&w0) / n as f64, (n1 - k0) as f64 / n as f64)?,
    })
}

/// Pareto frontier of all configurations at block length `n`, ordered by
/// increasing `r0`.
pub fn finite_n_frontier(n: usize) -> Result<Vec<FiniteNPoint>> {
    let (lo, hi) = FINITE_N_RANGE;
    if !(lo..=hi).contains(&n) {
        return Err(Error::Domain(format!(
            "block length {n} not in {lo}..={hi}"
        )));
    }
    let mut candidates = Vec::new();
    for n1 in 1..n {
        let source = BigUint::from(3u32).pow((n - n1) as u32);
        let binom = binomial_big(n as u64, n1 as u64);
        // beyond the first k0 where the relay count covers the source count,
        // r0 stays put and r1 only drops
        let guess = ((n - n1) as f64 * LOG2_3 - log2_big(&binom))
            .ceil()
            .max(0.0) as usize;
        let mut k_cross = guess.min(n1);
        while k_cross > 0 && (&binom << (k_cross - 1)) >= source {
            k_cross -= 1;
        }
        while k_cross < n1 && (&binom << k_cross) < source {
            k_cross += 1;
        }
        for k0 in 0..=k_cross {
            candidates.push(finite_n_point(n, n1, k0)?);
        }
    }
    candidates.sort_by(|a, b| {
        b.point
            .r0
            .total_cmp(&a.point.r0)
            .then(b.point.r1.total_cmp(&a.point.r1))
    });
    let mut frontier: Vec<FiniteNPoint> = Vec::new();
    let mut best_r1 = f64::NEG_INFINITY;
    for c in candidates {
        if c.point.r1 > best_r1 {
            best_r1 = c.point.r1;
            frontier.push(c);
        }
    }
    frontier.reverse();
    Ok(frontier)
}

/// Frontier of [`finite_n_frontier`] as a curve.
pub fn finite_n_achievable(n: usize) -> Result<RegionCurve> {
    let pts = finite_n_frontier(n)?.into_iter().map(|f| f.point).collect();
    RegionCurve::new(CurveLabel::AchievableFiniteN, pts)
}

/// Result of comparing two frontiers on a shared `r0` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub grid_points: usize,
    /// Grid points where the lower curve beats the upper one by more than
    /// the slack.
    pub violations: usize,
    pub worst_excess: f64,
}

impl DominanceReport {
    pub fn violation_fraction(&self) -> f64 {
        self.violations as f64 / self.grid_points.max(1) as f64
    }
}

/// Check that `upper` realizes at least the relay rate of `lower` at each of
/// `grid` source rates up to `lower`'s largest one.
pub fn frontier_dominance(
    lower: &RegionCurve,
    upper: &RegionCurve,
    grid: usize,
    slack: f64,
) -> DominanceReport {
    let top = lower.points.last().map_or(0.0, |p| p.r0);
    let mut report = DominanceReport {
        grid_points: 0,
        violations: 0,
        worst_excess: 0.0,
    };
    for r0 in linspace(0.0, top, grid) {
        let Some(lo) = lower.staircase(r0) else {
            continue;
        };
        let hi = upper.staircase(r0).unwrap_or(f64::NEG_INFINITY);
        report.grid_points += 1;
        let excess = lo - hi;
        if excess > slack {
            report.violations += 1;
        }
        report.worst_excess = report.worst_excess.max(excess);
    }
    report
}

/// Outcome of checking `R_1 <= H(X_1 | X_0)` along the upper boundary piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayBoundCheck {
    pub points: usize,
    /// Smallest `H(X_1 | X_0) - (H(X_1) - r0)` seen.
    pub min_margin: f64,
    pub holds: bool,
}

/// On the piece where the source rate exceeds a third of `log2 3`, check
/// that the sum-rate bound, not the relay-source bound, is the binding one
/// for the distribution that attains the source rate.
pub fn check_relay_bound_on_boundary(points: usize) -> Result<RelayBoundCheck> {
    let c = single_relay_capacity();
    let mut min_margin = f64::INFINITY;
    let grid = linspace(LOG2_3 / 3.0, c, points.max(2));
    for &r0 in grid.iter().skip(1) {
        let q = r0 / LOG2_3;
        let chain = two_source_chain(1.0 / 3.0, &[q])?;
        let b = two_source_bounds(&materialize(&chain)?, 1)?;
        let h1 = hb(q) + (1.0 - q);
        min_margin = min_margin.min(b.rr_bound - (h1 - r0));
    }
    Ok(RelayBoundCheck {
        points: grid.len() - 1,
        min_margin,
        holds: min_margin >= -1e-12,
    })
}

/// Restricted chain with source silence `sigma` given `X_1 = N` and relay
/// silence probabilities `q`.
fn two_source_chain(sigma: f64, q: &[f64]) -> Result<ChainDistribution> {
    let profile = SilenceProfile::new(RelayModelVariant::Ternary, q.to_vec())?;
    let base = profile.to_chain()?;
    let mut edges = base.edges().to_vec();
    let q1 = q[0];
    edges[0] = EdgeDistribution::symmetric(q1 * (1.0 - sigma) / 2.0, q1 * sigma, (1.0 - q1) / 2.0)?;
    ChainDistribution::new(edges, RelayModelVariant::Ternary)
}

/// Largest cascade handled by [`general_region_bound`].
pub const MAX_REGION_RELAYS: usize = 3;

struct RegionProblem {
    r: usize,
}

impl RegionProblem {
    /// `x = (sigma, q_1, ..., q_m)`.
    fn feasible(&self, x: &[f64]) -> bool {
        x.iter().all(|v| (0.0..=1.0).contains(v)) && x[1..].windows(2).all(|w| w[0] + w[1] >= 1.0)
    }

    fn bounds(&self, x: &[f64]) -> Option<TwoSourceBounds> {
        let chain = two_source_chain(x[0], &x[1..]).ok()?;
        two_source_bounds(&materialize(&chain).ok()?, self.r).ok()
    }

    fn score(&self, x: &[f64], lambda: f64) -> Option<(f64, RatePoint)> {
        if !self.feasible(x) {
            return None;
        }
        let b = self.bounds(x)?;
        Some(best_vertex(&b, lambda))
    }
}

/// Best vertex of the bound polytope for weight `lambda` on `r0`; ties go to
/// the larger sum rate.
fn best_vertex(b: &TwoSourceBounds, lambda: f64) -> (f64, RatePoint) {
    let s = b.sum_bound.max(0.0);
    let a = b.r0_bound.max(0.0).min(s);
    let c = b.rr_bound.max(0.0).min(s);
    let vertices = [
        (0.0, c),
        (a, 0.0),
        (a, c.min(s - a).max(0.0)),
        (a.min((s - c).max(0.0)), c),
    ];
    let mut best = (f64::NEG_INFINITY, RatePoint { r0: 0.0, r1: 0.0 });
    for (x, y) in vertices {
        let v = lambda * x + (1.0 - lambda) * y;
        let better =
            v > best.0 + 1e-15 || ((v - best.0).abs() <= 1e-15 && x + y > best.1.r0 + best.1.r1);
        if better {
            best = (v, RatePoint { r0: x, r1: y });
        }
    }
    best
}

fn compass_search(
    problem: &RegionProblem,
    start: Vec<f64>,
    lambda: f64,
) -> Option<(f64, RatePoint, Vec<f64>)> {
    let (mut value, mut point) = problem.score(&start, lambda)?;
    let mut x = start;
    let dim = x.len();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for a in 0..dim {
        for sa in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[a] = sa;
            directions.push(d);
            for b in a + 1..dim {
                for sb in [1.0, -1.0] {
                    let mut d = vec![0.0; dim];
                    d[a] = sa;
                    d[b] = sb;
                    directions.push(d);
                }
            }
        }
    }
    let mut step = 0.125;
    while step > 1e-8 {
        let mut improved = false;
        for d in &directions {
            let trial: Vec<f64> = x
                .iter()
                .zip(d)
                .map(|(v, dv)| (v + step * dv).clamp(0.0, 1.0))
                .collect();
            if let Some((v, p)) = problem.score(&trial, lambda) {
                if v > value + 1e-13 {
                    value = v;
                    point = p;
                    x = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some((value, point, x))
}

/// `(sigma, q)` reaching the single-source optimum.
fn capacity_seed(m: usize) -> Result<Vec<f64>> {
    let profile = solve_cascade_profile(m, RelayModelVariant::Ternary)?;
    let mut x = vec![1.0 / 3.0];
    x.extend_from_slice(profile.silence());
    Ok(x)
}

/// Relays before `r` silent; relay `r` acts as the source of the remaining
/// cascade with uniform symbols whenever relay `r + 1` listens.
fn relay_source_seed(m: usize, r: usize) -> Result<Vec<f64>> {
    let mut x = vec![1.0 / 3.0];
    x.extend(std::iter::repeat_n(1.0, r - 1));
    if r == m {
        x.push(1.0 / 3.0);
        if r == 1 {
            x[0] = 1.0;
        }
    } else {
        let sub = solve_cascade_profile(m - r, RelayModelVariant::Ternary)?;
        let q_next = sub.silence()[0];
        x.push(1.0 - 2.0 * q_next / 3.0);
        x.extend_from_slice(sub.silence());
        if r == 1 {
            x[0] = 1.0;
        }
    }
    Ok(x)
}

/// Capacity of the sub-cascade that starts at relay `r`.
pub fn relay_source_capacity(m: usize, r: usize) -> Result<f64> {
    if r == 0 || r > m {
        return Err(Error::Domain(format!("relay source {r} not in 1..={m}")));
    }
    if r == m {
        Ok(LOG2_3)
    } else {
        Ok(crate::capacity::solve_cascade(m - r, RelayModelVariant::Ternary)?.capacity_bits)
    }
}

/// Outer boundary of the two-source region over restricted chains, traced
/// by weighted-sum maximization over `grid` weights.
pub fn general_region_bound(m: usize, r: usize, grid: usize) -> Result<RegionCurve> {
    if m == 0 || m > MAX_REGION_RELAYS {
        return Err(Error::Domain(format!(
            "relay count {m} not in 1..={MAX_REGION_RELAYS}"
        )));
    }
    if r == 0 || r > m {
        return Err(Error::Domain(format!("relay source {r} not in 1..={m}")));
    }
    if grid < 2 {
        return Err(Error::Domain("need at least two weights".into()));
    }
    let problem = RegionProblem { r };
    let fixed_seeds = [capacity_seed(m)?, relay_source_seed(m, r)?];
    let mut warm: Option<Vec<f64>> = None;
    let mut points = Vec::with_capacity(grid);
    for lambda in linspace(0.0, 1.0, grid) {
        let mut best: Option<(f64, RatePoint, Vec<f64>)> = None;
        for seed in fixed_seeds.iter().chain(warm.iter()) {
            if let Some(found) = compass_search(&problem, seed.clone(), lambda) {
                if best.as_ref().is_none_or(|b| found.0 > b.0 + 1e-13) {
                    best = Some(found);
                }
            }
        }
        let (_, point, x) = best.ok_or_else(|| Error::Domain("no feasible start".into()))?;
        points.push(point);
        warm = Some(x);
    }
    points.sort_by(|a, b| a.r0.total_cmp(&b.r0).then(b.r1.total_cmp(&a.r1)));
    let mut traced: Vec<RatePoint> = Vec::new();
    for p in points {
        match traced.last() {
            Some(last) if p.r0 <= last.r0 + 1e-12 => {}
            _ => traced.push(p),
        }
    }
    // close the boundary onto both axes
    if let Some(first) = traced.first().copied() {
        if first.r0 > 1e-9 {
            traced.insert(
                0,
                RatePoint {
                    r0: 0.0,
                    r1: first.r1,
                },
            );
        }
    }
    if let Some(last) = traced.last().copied() {
        if last.r1 > 1e-7 {
            traced.push(RatePoint {
                r0: last.r0 + 1e-9,
                r1: 0.0,
            });
        } else if let Some(p) = traced.last_mut() {
            p.r1 = 0.0;
        }
    }
    RegionCurve::new(CurveLabel::OuterBound, traced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::solve_cascade;

    const THIRD: f64 = LOG2_3 / 3.0;

    #[test]
    fn outer_boundary_examples() {
        assert!((outer_boundary_single_relay(0.0).unwrap() - LOG2_3).abs() < 1e-12);
        assert!((outer_boundary_single_relay(THIRD).unwrap() - 2.0 * THIRD).abs() < 1e-12);
        assert!(outer_boundary_single_relay(1.1389).unwrap().abs() < 3e-4);
        assert!(
            outer_boundary_single_relay(single_relay_capacity())
                .unwrap()
                .abs()
                < 1e-9
        );
        assert!(outer_boundary_single_relay(1.2).is_err());
        assert!(outer_boundary_single_relay(-0.1).is_err());
    }

    #[test]
    fn outer_boundary_shape() {
        let left = outer_boundary_single_relay(THIRD).unwrap();
        let q = THIRD / LOG2_3;
        let right = hb(q) + (1.0 - q) - THIRD;
        assert!((left - right).abs() < 1e-9);
        let c = single_relay_capacity();
        let mut prev = f64::INFINITY;
        for j in 0..=10_000 {
            let r0 = c * j as f64 / 10_000.0;
            let v = outer_boundary_single_relay(r0).unwrap();
            assert!(v <= prev + 1e-15);
            if r0 <= THIRD {
                assert!((v + r0 - LOG2_3).abs() < 1e-12);
            }
            prev = v;
        }
    }

    #[test]
    fn boundary_curves() {
        let c = outer_boundary_curve(100).unwrap();
        assert!(c.points.iter().any(|p| (p.r0 - THIRD).abs() < 1e-15));
        let ends = outer_boundary_curve(1).unwrap();
        assert_eq!(ends.points.len(), 2);
        let line = sum_cap_line(3).unwrap();
        assert_eq!(
            line.points[1],
            RatePoint {
                r0: LOG2_3 / 2.0,
                r1: LOG2_3 / 2.0
            }
        );
        let csv = curves_to_csv(&[ends]);
        assert!(csv.starts_with("r0_bits,r1_bits,label\n0.000000,1.584963,outer_bound\n"));
    }

    #[test]
    fn threshold_properties() {
        let t = sum_capacity_threshold();
        assert!(((1.0 - t.beta) * LOG2_3 - hb(t.beta)).abs() < 1e-9);
        assert!(t.beta > 0.3 && t.beta < 0.5);
        assert!((t.r0_min + t.r1_at_threshold - (hb(1.0 - t.beta) + t.beta)).abs() < 1e-6);
        let on = outer_boundary_single_relay(t.r0_min).unwrap();
        assert!((on - t.r1_at_threshold).abs() < 1e-6);
    }

    #[test]
    fn asymptotic_segment() {
        let seg = achievable_segment(21).unwrap();
        let last = seg.points.last().unwrap();
        assert!((last.r0 - 1.1389).abs() < 3e-4 && last.r1.abs() < 1e-12);
        let t = sum_capacity_threshold();
        assert!((seg.points[0].r0 - t.r0_min).abs() < 1e-9);
        assert!((seg.points[0].r1 - t.r1_at_threshold).abs() < 1e-9);
        for p in &seg.points {
            assert!(p.r1 <= outer_boundary_single_relay(p.r0).unwrap() + 1e-6);
            assert!(p.r0 + p.r1 <= LOG2_3 + 1e-9);
        }
        assert!(achievable_segment(1).is_err());
    }

    #[test]
    fn finite_n_counting() {
        let p = finite_n_point(6, 2, 2).unwrap();
        assert!((p.point.r0 - 60f64.log2() / 6.0).abs() < 1e-12);
        assert_eq!(p.point.r1, 0.0);
        assert!(finite_n_frontier(7).is_err());
        assert!(finite_n_frontier(5000).is_err());
    }

    /// Frontier by brute force over every (n_1, k0), without the crossing
    /// shortcut.
    fn brute_frontier(n: usize) -> Vec<RatePoint> {
        let mut all: Vec<RatePoint> = Vec::new();
        for n1 in 1..n {
            for k0 in 0..=n1 {
                all.push(finite_n_point(n, n1, k0).unwrap().point);
            }
        }
        let mut keep: Vec<RatePoint> = all
            .iter()
            .filter(|p| {
                !all.iter()
                    .any(|q| q.r0 >= p.r0 && q.r1 >= p.r1 && (q.r0 > p.r0 || q.r1 > p.r1))
            })
            .copied()
            .collect();
        keep.sort_by(|a, b| a.r0.total_cmp(&b.r0));
        keep.dedup();
        keep
    }

    #[test]
    fn frontier_matches_brute_force() {
        for n in [8, 9, 12, 16, 20] {
            let got = finite_n_achievable(n).unwrap().points;
            assert_eq!(got, brute_frontier(n), "n = {n}");
        }
    }

    #[test]
    fn frontier_inside_outer_bound() {
        for n in [8, 64, 640] {
            let curve = finite_n_achievable(n).unwrap();
            for p in &curve.points {
                assert!(
                    p.r1 <= outer_boundary_single_relay(p.r0).unwrap() + 1e-9,
                    "n={n} {p:?}"
                );
                assert!(p.r0 + p.r1 <= LOG2_3 + 1e-9);
            }
        }
    }

    #[test]
    fn frontier_improves_with_block_length() {
        let small = finite_n_achievable(8).unwrap();
        let large = finite_n_achievable(640).unwrap();
        let report = frontier_dominance(&small, &large, 500, 1e-9);
        assert_eq!(report.violations, 0, "{report:?}");
    }

    #[test]
    fn relay_bound_is_slack() {
        let check = check_relay_bound_on_boundary(200).unwrap();
        assert!(check.holds, "{check:?}");
    }

    #[test]
    fn general_bound_single_relay_matches_closed_form() {
        let curve = general_region_bound(1, 1, 81).unwrap();
        let c = single_relay_capacity();
        for j in 0..=100 {
            let r0 = c * j as f64 / 100.0;
            let Some(v) = curve.interpolate(r0) else {
                continue;
            };
            assert!(
                (v - outer_boundary_single_relay(r0).unwrap()).abs() < 2e-3,
                "r0={r0}"
            );
        }
        let first = curve.points[0];
        assert!(first.r0.abs() < 1e-9 && (first.r1 - LOG2_3).abs() < 1e-6);
        let last = curve.points.last().unwrap();
        assert!((last.r0 - c).abs() < 1e-4 && last.r1.abs() < 1e-6);
    }

    #[test]
    fn general_bound_endpoints() {
        for (m, r) in [(2, 1), (2, 2), (3, 2)] {
            let curve = general_region_bound(m, r, 9).unwrap();
            let last = curve.points.last().unwrap();
            let cap = solve_cascade(m, RelayModelVariant::Ternary)
                .unwrap()
                .capacity_bits;
            assert!(
                (last.r0 - cap).abs() < 1e-4,
                "m={m} r={r}: {} vs {cap}",
                last.r0
            );
            let first = curve.points[0];
            let own = relay_source_capacity(m, r).unwrap();
            assert!(first.r0.abs() < 1e-9);
            assert!(
                (first.r1 - own).abs() < 1e-4,
                "m={m} r={r}: {} vs {own}",
                first.r1
            );
        }
        assert!(general_region_bound(4, 1, 5).is_err());
        assert!(general_region_bound(2, 3, 5).is_err());
    }
}
