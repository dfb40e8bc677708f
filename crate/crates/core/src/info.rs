//! Information measures and counting helpers shared by the solvers, the
//! cut-set oracle and the code construction.
//!
//! All entropies are in bits and use the convention `0 * log 0 = 0`.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::channel::{RelayModelVariant, TernarySymbol};
use crate::error::{Error, Result};

/// Absolute tolerance on total probability mass.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Largest `n` accepted by [`exact_binomial`].
pub const EXACT_BINOMIAL_MAX_N: u64 = 4096;

/// Compensated summation; keeps long entropy sums stable to the last bit or two.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// `-p log2 p` with the continuity convention at zero.
#[inline]
pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Entropy of a list of (possibly unnormalized) masses, `-sum p log2 p`.
pub(crate) fn entropy_of_masses(masses: impl IntoIterator<Item = f64>) -> f64 {
    masses.into_iter().map(plogp).collect::<KahanSum>().total()
}

/// `sum_k -m_k log2(m_k / total)`: the contribution of one conditioning
/// value to a conditional entropy, given the joint masses of that slice.
pub(crate) fn conditional_slice_entropy(masses: &[f64]) -> f64 {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    masses
        .iter()
        .map(|&m| {
            if m > 0.0 {
                -m * (m / total).log2()
            } else {
                0.0
            }
        })
        .collect::<KahanSum>()
        .total()
}

fn check_mass(probs: &[f64]) -> Result<()> {
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidPmf(format!(
            "entry {bad} is negative or not finite"
        )));
    }
    let total: f64 = probs.iter().copied().collect::<KahanSum>().total();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidPmf(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(())
}

/// A validated probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_mass(&probs)?;
        Ok(Self(probs))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// Joint pmf of two adjacent channel inputs `(X_{i-1}, X_i)` over
/// `{0, 1, N} x {0, 1, N}`. The first index is the upstream symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDistribution {
    p: [[f64; 3]; 3],
}

impl EdgeDistribution {
    pub fn new(p: [[f64; 3]; 3]) -> Result<Self> {
        check_mass(p.as_flattened())?;
        Ok(Self { p })
    }

    /// Build from nine entries in row-major `(x_prev, x_self)` order `0, 1, N`.
    pub fn from_row_major(entries: [f64; 9]) -> Result<Self> {
        let mut p = [[0.0; 3]; 3];
        for (k, v) in entries.into_iter().enumerate() {
            p[k / 3][k % 3] = v;
        }
        Self::new(p)
    }

    /// Edge supported on `{(0,N), (1,N), (N,N), (N,0), (N,1)}` with 0/1 symmetry.
    pub fn symmetric(p_0n: f64, p_nn: f64, p_n0: f64) -> Result<Self> {
        let mut p = [[0.0; 3]; 3];
        p[0][2] = p_0n;
        p[1][2] = p_0n;
        p[2][2] = p_nn;
        p[2][0] = p_n0;
        p[2][1] = p_n0;
        Self::new(p)
    }

    /// Point mass on a single symbol pair.
    pub fn point(prev: TernarySymbol, own: TernarySymbol) -> Self {
        let mut p = [[0.0; 3]; 3];
        p[prev.index()][own.index()] = 1.0;
        Self { p }
    }

    /// Additionally enforce the binary-model restriction `p(N, N) = 0`.
    pub fn validate_for(&self, model: RelayModelVariant) -> Result<()> {
        if model == RelayModelVariant::Binary && self.p[2][2] != 0.0 {
            return Err(Error::InvalidPmf(format!(
                "binary model requires p(N,N) = 0, found {}",
                self.p[2][2]
            )));
        }
        Ok(())
    }

    pub fn get(&self, prev: TernarySymbol, own: TernarySymbol) -> f64 {
        self.p[prev.index()][own.index()]
    }

    pub fn table(&self) -> &[[f64; 3]; 3] {
        &self.p
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out.copy_from_slice(self.p.as_flattened());
        out
    }

    /// Marginal of the upstream input `X_{i-1}`.
    pub fn prev_marginal(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (a, row) in self.p.iter().enumerate() {
            m[a] = row.iter().sum();
        }
        m
    }

    /// Marginal of the node's own input `X_i`.
    pub fn self_marginal(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for row in &self.p {
            for (b, v) in row.iter().enumerate() {
                m[b] += v;
            }
        }
        m
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Self {
        let mut p = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                p[a][b] = lambda * self.p[a][b] + (1.0 - lambda) * other.p[a][b];
            }
        }
        Self { p }
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &ProbVector) -> f64 {
    entropy_of_masses(p.probs().iter().copied())
}

/// Binary entropy function `H_b(q)`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "binary entropy argument {q} outside [0, 1]"
        )));
    }
    Ok(hb(q))
}

/// Unchecked binary entropy for callers that already guarantee the domain.
pub(crate) fn hb(q: f64) -> f64 {
    plogp(q) + plogp(1.0 - q)
}

/// `H(X_{i-1} | X_i)` of an edge.
pub fn cond_entropy_prev_given_self(e: &EdgeDistribution) -> f64 {
    (0..3)
        .map(|b| {
            let column = [e.p[0][b], e.p[1][b], e.p[2][b]];
            conditional_slice_entropy(&column)
        })
        .collect::<KahanSum>()
        .total()
}

/// `H(Y_i | X_i) = p(X_i = N) H(X_{i-1} | X_i = N)` under the half-duplex
/// relay law: a transmitting relay only hears itself.
pub fn cut_entropy_output_given_self(e: &EdgeDistribution) -> f64 {
    conditional_slice_entropy(&[e.p[0][2], e.p[1][2], e.p[2][2]])
}

/// `log2 C(n, k)` as a sum of logarithms.
pub fn log2_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("binomial C({n}, {k}) with k > n")));
    }
    let k = k.min(n - k);
    Ok((1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).log2())
        .collect::<KahanSum>()
        .total())
}

/// Exact binomial coefficient.
pub fn exact_binomial(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(Error::Domain(format!("binomial C({n}, {k}) with k > n")));
    }
    if n > EXACT_BINOMIAL_MAX_N {
        return Err(Error::Domain(format!(
            "exact binomial limited to n <= {EXACT_BINOMIAL_MAX_N}, got {n}"
        )));
    }
    Ok(binomial_big(n, k))
}

pub(crate) fn binomial_big(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// `log2` of an arbitrary-precision integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        let v: u64 = x.iter_u64_digits().next().unwrap_or(0);
        return (v as f64).log2();
    }
    let shift = bits - 64;
    let top = x >> shift;
    let v: u64 = top.iter_u64_digits().next().unwrap_or(0);
    (v as f64).log2() + shift as f64
}

/// Cumulative `log2 k!` table for fast repeated binomials.
#[derive(Debug, Clone)]
pub(crate) struct Log2FactorialTable {
    table: Vec<f64>,
}

impl Log2FactorialTable {
    pub(crate) fn new(n_max: usize) -> Self {
        let mut table = Vec::with_capacity(n_max + 1);
        let mut acc = KahanSum::default();
        table.push(0.0);
        for k in 1..=n_max {
            acc.add((k as f64).log2());
            table.push(acc.total());
        }
        Self { table }
    }

    pub(crate) fn log2_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use TernarySymbol::{One, Zero, N};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&ProbVector::new(vec![0.5, 0.5]).unwrap()), 1.0);
        assert_eq!(entropy(&ProbVector::new(vec![1.0, 0.0]).unwrap()), 0.0);
        let h = entropy(&ProbVector::new(vec![0.7185, 0.1407, 0.1408]).unwrap());
        assert!(close(h, 1.1390, 1e-4), "{h}");
    }

    #[test]
    fn invalid_pmfs_rejected() {
        assert!(matches!(
            ProbVector::new(vec![0.6, 0.6]),
            Err(Error::InvalidPmf(_))
        ));
        assert!(matches!(
            ProbVector::new(vec![1.5, -0.5]),
            Err(Error::InvalidPmf(_))
        ));
        assert!(EdgeDistribution::new([[0.5, 0.0, 0.0], [0.0; 3], [0.0; 3]]).is_err());
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!(close(binary_entropy(0.7185).unwrap(), 0.8575, 1e-4));
        // q log2 3 = H_b(q) + (1 - q) near the single-relay optimum
        let q = 0.7185;
        assert!(close(q * 3f64.log2(), hb(q) + 1.0 - q, 1e-3));
        assert!(matches!(binary_entropy(1.2), Err(Error::Domain(_))));
        assert!(matches!(binary_entropy(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn conditional_entropy_examples() {
        let e = EdgeDistribution::symmetric(0.2, 0.2, 0.2).unwrap();
        assert!(close(
            cond_entropy_prev_given_self(&e),
            0.6 * 3f64.log2(),
            1e-12
        ));

        let ex2 = EdgeDistribution::symmetric(1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0).unwrap();
        assert!(close(cond_entropy_prev_given_self(&ex2), 1.0, 1e-12));

        let pm = EdgeDistribution::point(N, Zero);
        assert_eq!(cond_entropy_prev_given_self(&pm), 0.0);
    }

    #[test]
    fn cut_entropy_examples() {
        // the four-decimal values sum to 0.9999
        let s = 3.0 * 0.2395 + 2.0 * 0.1407;
        let ex1 = EdgeDistribution::symmetric(0.2395 / s, 0.2395 / s, 0.1407 / s).unwrap();
        assert!(close(cut_entropy_output_given_self(&ex1), 1.1389, 2e-4));

        let no_listen =
            EdgeDistribution::new([[0.25, 0.25, 0.0], [0.25, 0.25, 0.0], [0.0; 3]]).unwrap();
        assert_eq!(cut_entropy_output_given_self(&no_listen), 0.0);

        let hidden =
            EdgeDistribution::new([[0.25, 0.0, 0.25], [0.0, 0.25, 0.25], [0.0; 3]]).unwrap();
        assert!(close(cut_entropy_output_given_self(&hidden), 0.5, 1e-12));
        assert!(cond_entropy_prev_given_self(&hidden) >= 0.5);
        assert_eq!(hidden.get(One, N), 0.25);
    }

    #[test]
    fn binomial_examples() {
        assert!(close(log2_binomial(6, 2).unwrap(), 15f64.log2(), 1e-12));
        assert_eq!(log2_binomial(17, 0).unwrap(), 0.0);
        assert!(matches!(log2_binomial(3, 4), Err(Error::Domain(_))));

        let per_use = log2_binomial(640, 250).unwrap() / 640.0;
        assert!(close(per_use, hb(250.0 / 640.0), 0.008));

        assert_eq!(exact_binomial(4, 1).unwrap(), BigUint::from(4u32));
        assert_eq!(exact_binomial(6, 2).unwrap(), BigUint::from(15u32));
        let big = exact_binomial(640, 320).unwrap();
        assert_eq!(big.bits() - 1, 635);
        assert!(close(
            log2_big(&big),
            log2_binomial(640, 320).unwrap(),
            1e-9
        ));
        assert!(exact_binomial(2, 3).is_err());
        assert!(exact_binomial(5000, 2).is_err());
    }

    #[test]
    fn log_binomial_matches_exact_up_to_60() {
        for n in 0..=60u64 {
            for k in 0..=n {
                let exact = exact_binomial(n, k).unwrap().to_f64().unwrap();
                let approx = log2_binomial(n, k).unwrap().exp2();
                assert!(((approx - exact) / exact).abs() < 1e-6, "C({n},{k})");
            }
        }
    }

    #[test]
    fn log_binomial_relative_accuracy_at_10000() {
        let table = Log2FactorialTable::new(10_000);
        for &(n, k) in &[
            (10_000u64, 1u64),
            (10_000, 3_333),
            (10_000, 5_000),
            (9_999, 17),
        ] {
            let direct = log2_binomial(n, k).unwrap();
            let big = log2_big(&binomial_big(n, k));
            assert!(((direct - big) / big).abs() < 1e-9, "C({n},{k})");
            let tab = table.log2_binomial(n as usize, k as usize);
            assert!(((tab - big) / big).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_log_k(raw in prop::collection::vec(0.0f64..1.0, 1..12)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let p = ProbVector::new(raw.iter().map(|v| v / total).collect()).unwrap();
            prop_assert!(entropy(&p) <= (p.len() as f64).log2() + 1e-12);
            prop_assert!(entropy(&p) >= 0.0);
        }

        #[test]
        fn binary_entropy_matches_two_point_entropy(q in 0.0f64..=1.0) {
            let p = ProbVector::new(vec![q, 1.0 - q]).unwrap();
            prop_assert_eq!(binary_entropy(q).unwrap(), entropy(&p));
            prop_assert!((hb(q) - hb(1.0 - q)).abs() < 1e-15);
        }

        #[test]
        fn output_cut_never_exceeds_conditional_entropy(raw in prop::collection::vec(0.0f64..1.0, 9)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let mut entries = [0.0; 9];
            for (k, v) in raw.iter().enumerate() {
                entries[k] = v / total;
            }
            let e = EdgeDistribution::from_row_major(entries).unwrap();
            prop_assert!(cut_entropy_output_given_self(&e) <= cond_entropy_prev_given_self(&e) + 1e-12);
        }
    }
}
