//! Unrestricted max-min search over Markov chains, used only to cross-check
//! the support and symmetry restriction of the main cascade solver.
//!
//! Chains are parametrized by softmax logits for `p(X_0)` and for each
//! transition row `p(X_i | X_{i-1})`. The minimum cut is smoothed with a
//! log-sum-exp whose sharpness grows over the run; gradients are central
//! differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{cut_values, solve_cascade_profile, CapacityResult, ChainDistribution};
use crate::channel::RelayModelVariant;
use crate::error::Result;
use crate::info::{cut_entropy_output_given_self, entropy_of_masses, EdgeDistribution};

const RANDOM_STARTS: usize = 3;
const SHARPNESS: [f64; 6] = [30.0, 100.0, 300.0, 1_000.0, 3_000.0, 10_000.0];
const STEPS_PER_STAGE: usize = 400;
const FD_STEP: f64 = 1e-6;
const FLOOR: f64 = 1e-7;

struct Problem {
    m: usize,
    model: RelayModelVariant,
}

impl Problem {
    fn dim(&self) -> usize {
        3 + 9 * self.m
    }

    fn forbidden(&self, a: usize, b: usize) -> bool {
        self.model == RelayModelVariant::Binary && a == 2 && b == 2
    }

    fn softmax_row(&self, logits: &[f64], row: Option<usize>) -> [f64; 3] {
        let mut out = [0.0; 3];
        let allowed = |b: usize| row.is_none_or(|a| !self.forbidden(a, b));
        let max = (0..3)
            .filter(|&b| allowed(b))
            .map(|b| logits[b])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for b in (0..3).filter(|&b| allowed(b)) {
            out[b] = (logits[b] - max).exp();
            total += out[b];
        }
        for v in &mut out {
            *v /= total;
        }
        out
    }

    fn edges(&self, theta: &[f64]) -> Vec<[[f64; 3]; 3]> {
        let mut marginal = self.softmax_row(&theta[0..3], None);
        let mut edges = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let base = 3 + 9 * i;
            let mut edge = [[0.0; 3]; 3];
            let mut next = [0.0; 3];
            for a in 0..3 {
                let row = self.softmax_row(&theta[base + 3 * a..base + 3 * a + 3], Some(a));
                for b in 0..3 {
                    edge[a][b] = marginal[a] * row[b];
                    next[b] += edge[a][b];
                }
            }
            edges.push(edge);
            marginal = next;
        }
        edges
    }

    fn cuts(&self, theta: &[f64]) -> Vec<f64> {
        let edges = self.edges(theta);
        let mut cuts: Vec<f64> = edges
            .iter()
            .map(|e| {
                let e = EdgeDistribution::new(*e).unwrap_or_else(|_| renormalized(e));
                cut_entropy_output_given_self(&e)
            })
            .collect();
        let last = edges.last().expect("m >= 1");
        let marginal: Vec<f64> = (0..3)
            .map(|b| last.iter().map(|row| row[b]).sum())
            .collect();
        cuts.push(entropy_of_masses(marginal));
        cuts
    }

    fn min_cut(&self, theta: &[f64]) -> f64 {
        self.cuts(theta).into_iter().fold(f64::INFINITY, f64::min)
    }

    fn smooth_min(&self, theta: &[f64], beta: f64) -> f64 {
        let cuts = self.cuts(theta);
        let lo = cuts.iter().copied().fold(f64::INFINITY, f64::min);
        let s: f64 = cuts.iter().map(|c| (-beta * (c - lo)).exp()).sum();
        lo - s.ln() / beta
    }

    fn chain(&self, theta: &[f64]) -> Result<ChainDistribution> {
        let edges = self
            .edges(theta)
            .iter()
            .map(|e| EdgeDistribution::new(*e).or_else(|_| Ok(renormalized(e))))
            .collect::<Result<Vec<_>>>()?;
        ChainDistribution::new(edges, self.model)
    }
}

fn renormalized(e: &[[f64; 3]; 3]) -> EdgeDistribution {
    let total: f64 = e.as_flattened().iter().sum();
    let mut p = *e;
    for row in &mut p {
        for v in row {
            *v /= total;
        }
    }
    EdgeDistribution::new(p).expect("renormalized edge")
}

fn logits_from_chain(chain: &ChainDistribution) -> Vec<f64> {
    let mut theta = Vec::with_capacity(3 + 9 * chain.relays());
    theta.extend(chain.node_marginal(0).iter().map(|p| p.max(FLOOR).ln()));
    for e in chain.edges() {
        let t = e.table();
        for row in t {
            let total: f64 = row.iter().sum();
            for &v in row {
                let cond = if total > 0.0 { v / total } else { 1.0 / 3.0 };
                theta.push(cond.max(FLOOR).ln());
            }
        }
    }
    theta
}

fn ascend(problem: &Problem, mut theta: Vec<f64>) -> (Vec<f64>, f64) {
    let dim = problem.dim();
    let mut best_theta = theta.clone();
    let mut best = problem.min_cut(&theta);
    let (b1, b2, eps) = (0.9, 0.999, 1e-12);
    for (stage, &beta) in SHARPNESS.iter().enumerate() {
        let lr = 0.05 / (1.0 + stage as f64);
        let mut m1 = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for step in 1..=STEPS_PER_STAGE {
            let mut grad = vec![0.0; dim];
            for k in 0..dim {
                let orig = theta[k];
                theta[k] = orig + FD_STEP;
                let up = problem.smooth_min(&theta, beta);
                theta[k] = orig - FD_STEP;
                let down = problem.smooth_min(&theta, beta);
                theta[k] = orig;
                grad[k] = (up - down) / (2.0 * FD_STEP);
            }
            for k in 0..dim {
                m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
                m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
                let mh = m1[k] / (1.0 - b1.powi(step as i32));
                let vh = m2[k] / (1.0 - b2.powi(step as i32));
                theta[k] += lr * mh / (vh.sqrt() + eps);
            }
            let value = problem.min_cut(&theta);
            if value > best {
                best = value;
                best_theta.clone_from(&theta);
            }
        }
    }
    (best_theta, best)
}

pub(crate) fn solve(m: usize, model: RelayModelVariant, seed: u64) -> Result<CapacityResult> {
    let problem = Problem { m, model };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![logits_from_chain(
        &solve_cascade_profile(m, model)?.to_chain()?,
    )];
    for _ in 0..RANDOM_STARTS {
        starts.push(
            (0..problem.dim())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for start in starts {
        let (theta, value) = ascend(&problem, start);
        iterations += SHARPNESS.len() * STEPS_PER_STAGE;
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((theta, value));
        }
    }
    let (theta, _) = best.expect("at least one start");
    let chain = problem.chain(&theta)?;
    let cuts = cut_values(&chain);
    Ok(CapacityResult {
        capacity_bits: cuts.iter().copied().fold(f64::INFINITY, f64::min),
        chain,
        cut_values: cuts,
        solver_iterations: iterations,
    })
}
