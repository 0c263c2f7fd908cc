//! Dimensions of covariant spaces and Hilbert series bookkeeping.
//!
//! `dim Cov_{d,m}(S_n)` is the coefficient of `q^((nd-m)/2)` in
//! `(1-q^(n+1))...(1-q^(n+d)) / ((1-q^2)...(1-q^d))`, equivalently
//! `(1-q)` times the Gaussian binomial `[n+d, n]_q`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::catalog;

/// Trailing coefficients that must vanish before a numerator is accepted.
pub const STABILITY_WINDOW: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HilbertError {
    #[error("series has not stabilized to a polynomial below truncation {0}")]
    TruncationTooSmall(usize),
    #[error("negative numerator coefficient at degree {0}")]
    NegativeCoefficient(usize),
    #[error("no bound table data for forms of degree {0}")]
    Unsupported(usize),
}

pub type Result<T> = std::result::Result<T, HilbertError>;

/// `numerator / prod_j (1 - q^{d_j})`, expanded exactly up to `truncation`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSeriesRational {
    pub numerator: Vec<BigInt>,
    pub denominator: Vec<usize>,
    pub truncation: usize,
}

impl PowerSeriesRational {
    pub fn new(numerator: Vec<BigInt>, denominator: Vec<usize>, truncation: usize) -> Self {
        PowerSeriesRational { numerator, denominator, truncation }
    }

    /// Coefficients of `q^0..=q^truncation`.
    pub fn coefficients(&self) -> Vec<BigInt> {
        let t = self.truncation;
        let mut c: Vec<BigInt> = (0..=t).map(|i| self.numerator.get(i).cloned().unwrap_or_else(BigInt::zero)).collect();
        for &d in &self.denominator {
            assert!(d > 0, "denominator factor 1 - q^0 is not invertible");
            for i in d..=t {
                let prev = c[i - d].clone();
                c[i] += prev;
            }
        }
        c
    }

    pub fn coefficient(&self, k: usize) -> BigInt {
        let mut s = self.clone();
        s.truncation = k;
        s.coefficients().pop().unwrap()
    }
}

/// `prod_j (1 - q^{d_j})` truncated at `truncation`.
pub fn one_minus_product(degrees: &[usize], truncation: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); truncation + 1];
    c[0] = BigInt::one();
    for &d in degrees {
        for i in (d..=truncation).rev() {
            let prev = c[i - d].clone();
            c[i] -= prev;
        }
    }
    c
}

fn trim(mut v: Vec<BigInt>) -> Vec<BigInt> {
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

/// `dim Cov_{d,m}(S_n)`; zero when `nd - m` is negative or odd.
pub fn springer_dim(n: usize, d: usize, m: usize) -> BigUint {
    let nd = n * d;
    if m > nd || (nd - m) % 2 == 1 {
        return BigUint::zero();
    }
    let k = (nd - m) / 2;
    // [n+d, n]_q = prod_{i=1}^{s} (1 - q^{t+i}) / (1 - q^i) with {s, t} = {n, d}.
    let (s, t) = if n <= d { (n, d) } else { (d, n) };
    let numerator = one_minus_product(&(1..=s).map(|i| t + i).collect::<Vec<_>>(), k);
    let series = PowerSeriesRational::new(numerator, (1..=s).collect(), k);
    let c = series.coefficients();
    let v = if k == 0 { c[0].clone() } else { &c[k] - &c[k - 1] };
    v.to_biguint().expect("dimensions are nonnegative")
}

pub fn springer_dim_u64(n: usize, d: usize, m: usize) -> u64 {
    springer_dim(n, d, m).to_u64().expect("dimension fits in u64")
}

/// Maximum order of a generator, `(lambda-1) 2^lambda + nu (lambda+1) + 2` for
/// `n = 2^lambda + nu`.
pub fn lambda_bound(n: usize) -> usize {
    assert!(n >= 1);
    let lam = usize::BITS as usize - 1 - n.leading_zeros() as usize;
    let nu = n - (1 << lam);
    let v = (lam as i64 - 1) * (1i64 << lam) + (nu * (lam + 1)) as i64 + 2;
    v as usize
}

/// `(n+1)^2/4` for odd `n`, `n(n+2)/4` otherwise.
pub fn sigma_threshold(n: usize) -> usize {
    if n % 2 == 1 {
        (n + 1) * (n + 1) / 4
    } else {
        n * (n + 2) / 4
    }
}

/// Orders `m` below this value have Cohen-Macaulay `Cov_m` per the theorem form.
pub fn cm_limit_theorem(n: usize) -> usize {
    sigma_threshold(n).saturating_sub(2)
}

/// Orders below this value are the Cohen-Macaulay range quoted for the nonic
/// (`m < 25`) and decimic (`m < 30`); it equals `sigma_threshold`. The two
/// forms disagree by 2 and both are kept.
pub fn cm_limit_corollary(n: usize) -> usize {
    sigma_threshold(n)
}

/// `sum_d dim Cov_{d,m} z^d` for `d = 0..=truncation`.
pub fn cov_series(n: usize, m: usize, truncation: usize) -> Vec<BigInt> {
    (0..=truncation).map(|d| BigInt::from(springer_dim(n, d, m))).collect()
}

/// `a(z) = H_{Cov_m}(z) prod_j (1 - z^{d_j})`, checked to be a polynomial.
pub fn module_hilbert_numerator(n: usize, m: usize, hsop_degrees: &[usize], truncation: usize) -> Result<Vec<BigInt>> {
    numerator_from_series(&cov_series(n, m, truncation), hsop_degrees)
}

fn numerator_from_series(series: &[BigInt], hsop_degrees: &[usize]) -> Result<Vec<BigInt>> {
    let t = series.len() - 1;
    let factor = one_minus_product(hsop_degrees, t);
    let mut out = vec![BigInt::zero(); t + 1];
    for (i, f) in factor.iter().enumerate() {
        if f.is_zero() {
            continue;
        }
        for j in 0..=t - i {
            out[i + j] += f * &series[j];
        }
    }
    if hsop_degrees.is_empty() {
        return Ok(out);
    }
    if t < STABILITY_WINDOW || out[t + 1 - STABILITY_WINDOW..].iter().any(|c| !c.is_zero()) {
        return Err(HilbertError::TruncationTooSmall(t));
    }
    if let Some(i) = out.iter().position(|c| c.is_negative()) {
        return Err(HilbertError::NegativeCoefficient(i));
    }
    Ok(trim(out))
}

/// As [`module_hilbert_numerator`] with truncation `sum d_j + 80`, doubled
/// until the product stabilizes.
pub fn module_hilbert_numerator_auto(n: usize, m: usize, hsop_degrees: &[usize]) -> Result<Vec<BigInt>> {
    let mut t = hsop_degrees.iter().sum::<usize>() + STABILITY_WINDOW;
    for _ in 0..4 {
        match module_hilbert_numerator(n, m, hsop_degrees, t) {
            Err(HilbertError::TruncationTooSmall(_)) => t *= 2,
            other => return other,
        }
    }
    Err(HilbertError::TruncationTooSmall(t))
}

/// Inclusion-exclusion over `prod_j (1 - z^{d_j})`.
pub fn quotient_dim(n: usize, d: usize, m: usize, reduction_degrees: &[usize]) -> BigInt {
    let factor = one_minus_product(reduction_degrees, d);
    factor
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| c * BigInt::from(springer_dim(n, d - k, m)))
        .sum()
}

pub fn quotient_dim_u64(n: usize, d: usize, m: usize, reduction_degrees: &[usize]) -> u64 {
    let v = quotient_dim(n, d, m, reduction_degrees);
    v.to_u64().unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundEntry {
    /// Top degree of the numerator: generators of order `m` have degree at most this.
    pub max_degree: usize,
    /// The h.s.o.p. degrees that attained it.
    pub hsop_degrees: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundTable {
    pub n: usize,
    pub entries: BTreeMap<usize, BoundEntry>,
}

impl BoundTable {
    pub fn max_degree(&self, m: usize) -> Option<usize> {
        self.entries.get(&m).map(|e| e.max_degree)
    }

    pub fn max_order(&self) -> usize {
        self.entries.keys().copied().max().unwrap_or(0)
    }
}

/// Degree bounds per order `m <= lambda_n`, taking for each `m` the smallest
/// numerator top degree over the known h.s.o.p. degree sets.
pub fn bound_table(n: usize) -> Result<BoundTable> {
    let sets = catalog::hsop_degree_sets(n).ok_or(HilbertError::Unsupported(n))?;
    bound_table_for(n, &sets)
}

pub fn bound_table_for(n: usize, sets: &[Vec<usize>]) -> Result<BoundTable> {
    use rayon::prelude::*;
    let lam = lambda_bound(n);
    let longest = sets.iter().map(|s| s.iter().sum::<usize>()).max().unwrap_or(0);
    let t = longest + STABILITY_WINDOW;
    let rows: Vec<Result<Option<(usize, BoundEntry)>>> = (0..=lam)
        .into_par_iter()
        .map(|m| {
            let series = cov_series(n, m, t);
            if series.iter().all(|c| c.is_zero()) {
                return Ok(None);
            }
            let mut best: Option<BoundEntry> = None;
            let mut last_err = None;
            for set in sets {
                match numerator_from_series(&series, set) {
                    Ok(a) => {
                        let top = a.len() - 1;
                        if best.as_ref().is_none_or(|b| top < b.max_degree) {
                            best = Some(BoundEntry { max_degree: top, hsop_degrees: set.clone() });
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            match (best, last_err) {
                (Some(b), _) => Ok(Some((m, b))),
                (None, Some(e)) => Err(e),
                (None, None) => Ok(None),
            }
        })
        .collect();
    let mut entries = BTreeMap::new();
    for r in rows {
        if let Some((m, e)) = r? {
            entries.insert(m, e);
        }
    }
    Ok(BoundTable { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cayley-Sylvester by brute force: weights of `Sym^d(S_n)` are multisets
    /// `0 <= i_1 <= ... <= i_d <= n`; count those with sum `k` and `k - 1`.
    fn weight_oracle(n: usize, d: usize, m: usize) -> i64 {
        fn count(n: usize, d: usize, lo: usize, sum: i64) -> i64 {
            if d == 0 {
                return (sum == 0) as i64;
            }
            (lo..=n).map(|i| count(n, d - 1, i, sum - i as i64)).sum()
        }
        let nd = (n * d) as i64;
        let m = m as i64;
        if m > nd || (nd - m) % 2 == 1 {
            return 0;
        }
        let k = (nd - m) / 2;
        count(n, d, 0, k) - if k > 0 { count(n, d, 0, k - 1) } else { 0 }
    }

    #[test]
    fn springer_matches_weight_oracle() {
        for n in 1..=4 {
            for d in 0..=5 {
                for m in 0..=n * d {
                    assert_eq!(
                        springer_dim(n, d, m),
                        BigUint::from(weight_oracle(n, d, m) as u64),
                        "n={n} d={d} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn springer_small_values() {
        assert_eq!(springer_dim_u64(9, 1, 9), 1);
        assert_eq!(springer_dim_u64(9, 4, 0), 2);
        assert_eq!(springer_dim_u64(9, 2, 0), 0);
        assert_eq!(springer_dim_u64(9, 0, 0), 1);
        assert_eq!(springer_dim_u64(9, 3, 2), 0);
        assert_eq!(springer_dim_u64(9, 1, 10), 0);
    }

    #[test]
    fn springer_large_values() {
        assert_eq!(springer_dim_u64(9, 64, 18), 1_576_149);
        assert_eq!(springer_dim_u64(9, 60, 14), 872_368);
        assert_eq!(springer_dim_u64(9, 510, 0), 14_510_116_319);
    }

    #[test]
    fn odd_weight_vanishes() {
        assert_eq!(springer_dim_u64(9, 501, 0), 0);
        assert_eq!(springer_dim_u64(9, 61, 14), 0);
    }

    #[test]
    fn quotient_dims() {
        assert_eq!(quotient_dim(9, 60, 14, &[4, 4, 8]), BigInt::from(33_360));
        assert_eq!(quotient_dim(9, 60, 14, &[]), BigInt::from(872_368));
        assert_eq!(quotient_dim(9, 4, 0, &[4, 4, 8]), BigInt::from(0));
    }

    #[test]
    fn lambda_and_sigma() {
        assert_eq!(lambda_bound(9), 22);
        assert_eq!(lambda_bound(10), 26);
        assert_eq!(lambda_bound(4), 6);
        assert_eq!(sigma_threshold(9), 25);
        assert_eq!(sigma_threshold(10), 30);
        assert_eq!(sigma_threshold(1), 1);
        assert_eq!(cm_limit_theorem(9), 23);
        assert_eq!(cm_limit_corollary(9), 25);
    }

    #[test]
    fn numerator_of_linear_covariants_of_the_nonic() {
        let a = module_hilbert_numerator_auto(9, 1, &[4, 8, 10, 12, 12, 14, 16]).unwrap();
        assert_eq!(a.len() - 1, 61);
        assert_eq!(a[5], BigInt::from(1));
        assert_eq!(a[7], BigInt::from(4));
        assert_eq!(a[9], BigInt::from(10));
        assert!(a[..5].iter().all(|c| c.is_zero()));
        assert_eq!(a[6], BigInt::zero());
        assert_eq!(a[8], BigInt::zero());
    }

    #[test]
    fn empty_hsop_returns_series() {
        let a = module_hilbert_numerator(9, 0, &[], 12).unwrap();
        assert_eq!(a, cov_series(9, 0, 12));
    }

    #[test]
    fn short_truncation_is_reported() {
        let r = module_hilbert_numerator(9, 0, &[4, 4, 8, 12, 14, 16, 30], 60);
        assert_eq!(r, Err(HilbertError::TruncationTooSmall(60)));
    }

    #[test]
    fn invariant_numerator_is_palindromic_for_the_decimic() {
        let a = module_hilbert_numerator_auto(10, 0, &[2, 4, 6, 6, 8, 9, 10, 14]).unwrap();
        let top = a.len() - 1;
        assert_eq!(top, 59 - 11);
        for i in 0..=top {
            assert_eq!(a[i], a[top - i]);
        }
    }

    #[test]
    fn invariant_numerator_nonic_hsops() {
        let top = |s: &[usize]| module_hilbert_numerator_auto(9, 0, s).unwrap().len() - 1;
        assert_eq!(top(&[4, 8, 10, 12, 12, 14, 16]), 66);
        assert_eq!(top(&[4, 4, 8, 12, 14, 16, 30]), 78);
    }
}
