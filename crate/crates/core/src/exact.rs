//! Exact distribution of the comparison count X_n.
//!
//! X_n counts key comparisons of Quicksort on a uniformly random order of n
//! distinct keys (equivalently, internal path length of a random binary search
//! tree). It satisfies X_n ≗ X_{U−1} + X*_{n−U} + n − 1 with U uniform on
//! {1..n}, which this module evaluates bottom-up by discrete convolution.
//!
//! Two backends: exact big-rational weights (internally: permutation counts
//! over denominator n!) for n ≤ 60, and double-precision weights renormalized
//! at every level for n ≤ 200. A factorial-time brute-force oracle over all
//! n! input orders serves as ground truth for small n.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use std::io::Write;

use crate::error::{Error, Result};
use crate::harmonic::harmonic;
use crate::par::map_indexed;
use crate::Side;

/// Largest n for the exact rational backend.
pub const RATIONAL_N_MAX: usize = 60;
/// Largest n for the double-precision backend.
pub const FLOAT_N_MAX: usize = 200;
/// Largest n for the permutation brute force (n! blow-up guard).
pub const BRUTE_FORCE_N_MAX: usize = 9;

/// Exact pmf of X_n with big-rational weights on a contiguous integer support.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    /// Instance size this pmf describes.
    pub n: usize,
    /// Smallest support point.
    pub offset: u64,
    /// Weight of `offset + i` at index i.
    pub weights: Vec<BigRational>,
}

/// pmf of X_n in double precision, renormalized after every recurrence level.
#[derive(Debug, Clone)]
pub struct FloatPmf {
    pub n: usize,
    pub offset: u64,
    pub weights: Vec<f64>,
}

/// pmf of the normalized variable Z_n = (X_n − E X_n)/n.
#[derive(Debug, Clone)]
pub struct NormalizedPmf {
    pub n: usize,
    /// (value, probability) pairs, values increasing.
    pub points: Vec<(f64, f64)>,
}

fn factorials(n: usize) -> Vec<BigUint> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigUint::one());
    for k in 1..=n {
        let next = &f[k - 1] * BigUint::from(k);
        f.push(next);
    }
    f
}

/// Permutation counts of {X_n = k}: weights are counts / n!.
#[derive(Debug, Clone)]
struct Counts {
    offset: u64,
    values: Vec<BigUint>,
}

fn convolve_counts(a: &Counts, b: &Counts) -> Counts {
    let mut out = vec![BigUint::zero(); a.values.len() + b.values.len() - 1];
    for (i, av) in a.values.iter().enumerate() {
        if av.is_zero() {
            continue;
        }
        for (j, bv) in b.values.iter().enumerate() {
            out[i + j] += av * bv;
        }
    }
    Counts {
        offset: a.offset + b.offset,
        values: out,
    }
}

/// Bottom-up table of counts for sizes 0..=n.
fn counts_table(n: usize) -> Vec<Counts> {
    let fact = factorials(n.max(1));
    let mut table: Vec<Counts> = Vec::with_capacity(n + 1);
    table.push(Counts {
        offset: 0,
        values: vec![BigUint::one()],
    });
    for m in 1..=n {
        // counts_m(k) = Σ_i C(m−1, i) (counts_i ⊛ counts_{m−1−i})(k − (m−1)),
        // folded over i ↔ m−1−i.
        let mut terms: Vec<(u64, Vec<BigUint>)> = Vec::new();
        let mut lo = u64::MAX;
        let mut hi = 0u64;
        for i in 0..=(m - 1) / 2 {
            let j = m - 1 - i;
            let mut conv = convolve_counts(&table[i], &table[j]);
            let binom = &fact[m - 1] / (&fact[i] * &fact[j]);
            let scale = if i == j { binom } else { binom * 2u32 };
            for v in conv.values.iter_mut() {
                *v *= &scale;
            }
            lo = lo.min(conv.offset);
            hi = hi.max(conv.offset + conv.values.len() as u64 - 1);
            terms.push((conv.offset, conv.values));
        }
        let mut acc = vec![BigUint::zero(); (hi - lo + 1) as usize];
        for (off, vals) in terms {
            let base = (off - lo) as usize;
            for (i, v) in vals.into_iter().enumerate() {
                acc[base + i] += v;
            }
        }
        table.push(Counts {
            offset: lo + (m as u64 - 1),
            values: acc,
        });
    }
    table
}

fn counts_to_pmf(n: usize, c: &Counts, fact_n: &BigUint) -> Pmf {
    let denom = BigInt::from(fact_n.clone());
    let weights = c
        .values
        .iter()
        .map(|v| BigRational::new(BigInt::from(v.clone()), denom.clone()))
        .collect();
    Pmf {
        n,
        offset: c.offset,
        weights,
    }
}

/// Exact pmf of X_n by the distributional recurrence (rational backend).
pub fn exact_pmf(n: usize) -> Result<Pmf> {
    Ok(exact_pmf_table(n)?.pop().expect("table is nonempty"))
}

/// All pmfs for sizes 0..=n; the recurrence consumes every smaller index,
/// so callers that need several sizes should take the whole table.
pub fn exact_pmf_table(n: usize) -> Result<Vec<Pmf>> {
    if n > RATIONAL_N_MAX {
        return Err(Error::ResourceLimit(format!(
            "exact_pmf: n = {n} exceeds rational backend cap {RATIONAL_N_MAX}; use the float backend"
        )));
    }
    let counts = counts_table(n);
    let fact = factorials(n.max(1));
    Ok(counts
        .iter()
        .enumerate()
        .map(|(m, c)| counts_to_pmf(m, c, &fact[m]))
        .collect())
}

/// pmf of X_n in double precision (renormalized each level).
pub fn exact_pmf_f64(n: usize) -> Result<FloatPmf> {
    Ok(exact_pmf_f64_table(n)?.pop().expect("table is nonempty"))
}

/// Float-backend table for sizes 0..=n.
pub fn exact_pmf_f64_table(n: usize) -> Result<Vec<FloatPmf>> {
    if n > FLOAT_N_MAX {
        return Err(Error::ResourceLimit(format!(
            "exact_pmf_f64: n = {n} exceeds float backend cap {FLOAT_N_MAX}"
        )));
    }
    let mut table: Vec<FloatPmf> = Vec::with_capacity(n + 1);
    table.push(FloatPmf {
        n: 0,
        offset: 0,
        weights: vec![1.0],
    });
    for m in 1..=n {
        let n_terms = (m - 1) / 2 + 1;
        let terms: Vec<(u64, Vec<f64>)> = map_indexed(n_terms, |i| {
            let j = m - 1 - i;
            let a = &table[i];
            let b = &table[j];
            let mut out = vec![0.0f64; a.weights.len() + b.weights.len() - 1];
            for (ii, av) in a.weights.iter().enumerate() {
                for (jj, bv) in b.weights.iter().enumerate() {
                    out[ii + jj] += av * bv;
                }
            }
            let factor = if i == j { 1.0 } else { 2.0 };
            for v in out.iter_mut() {
                *v *= factor;
            }
            (a.offset + b.offset, out)
        });
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms
            .iter()
            .map(|t| t.0 + t.1.len() as u64 - 1)
            .max()
            .unwrap();
        let mut acc = vec![0.0f64; (hi - lo + 1) as usize];
        for (off, vals) in &terms {
            let base = (off - lo) as usize;
            for (i, v) in vals.iter().enumerate() {
                acc[base + i] += v;
            }
        }
        // Renormalize to absorb rounding drift.
        let total: f64 = acc.iter().sum();
        for v in acc.iter_mut() {
            *v /= total;
        }
        table.push(FloatPmf {
            n: m,
            offset: lo + (m as u64 - 1),
            weights: acc,
        });
    }
    Ok(table)
}

fn quicksort_comparisons(keys: &[u8]) -> u64 {
    if keys.len() <= 1 {
        return 0;
    }
    let pivot = keys[0];
    let left: Vec<u8> = keys[1..].iter().copied().filter(|&x| x < pivot).collect();
    let right: Vec<u8> = keys[1..].iter().copied().filter(|&x| x > pivot).collect();
    (keys.len() - 1) as u64 + quicksort_comparisons(&left) + quicksort_comparisons(&right)
}

/// Independent oracle: exact pmf by running textbook Quicksort (first element
/// as pivot) over all n! input orders and counting comparisons.
pub fn brute_force_pmf(n: usize) -> Result<Pmf> {
    if n > BRUTE_FORCE_N_MAX {
        return Err(Error::ResourceLimit(format!(
            "brute_force_pmf: n = {n} exceeds factorial cap {BRUTE_FORCE_N_MAX}"
        )));
    }
    let max_comp = (n * n.saturating_sub(1) / 2) as u64;
    let mut counts = vec![0u64; max_comp as usize + 1];
    let mut perm: Vec<u8> = (0..n as u8).collect();
    // Heap's algorithm over all permutations (runs once for n = 0 too).
    fn visit(perm: &mut Vec<u8>, k: usize, counts: &mut [u64]) {
        if k <= 1 {
            counts[quicksort_comparisons(perm) as usize] += 1;
            return;
        }
        for i in 0..k {
            visit(perm, k - 1, counts);
            if k % 2 == 0 {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
    }
    let len = perm.len();
    visit(&mut perm, len, &mut counts);

    let lo = counts.iter().position(|&c| c > 0).expect("some outcome");
    let hi = counts.iter().rposition(|&c| c > 0).unwrap();
    let fact_n = factorials(n.max(1)).pop().unwrap();
    let denom = BigInt::from(fact_n);
    let weights = counts[lo..=hi]
        .iter()
        .map(|&c| BigRational::new(BigInt::from(c), denom.clone()))
        .collect();
    Ok(Pmf {
        n,
        offset: lo as u64,
        weights,
    })
}

/// E X_n = 2(n+1) H_n − 4n, exactly.
pub fn mean_comparisons(n: usize) -> BigRational {
    let two_n_plus_2 = BigRational::from_integer(BigInt::from(2 * (n as i64) + 2));
    let four_n = BigRational::from_integer(BigInt::from(4 * n as i64));
    two_n_plus_2 * harmonic(n) - four_n
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational representable in f64 range")
}

impl Pmf {
    /// Exact mean Σ k·p_k.
    pub fn mean(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, w) in self.weights.iter().enumerate() {
            acc += w * BigRational::from_integer(BigInt::from(self.offset + i as u64));
        }
        acc
    }

    /// Exact sum of weights (1 for a valid pmf).
    pub fn total(&self) -> BigRational {
        self.weights.iter().cloned().sum()
    }

    /// Affine rescaling to Z_n = (X_n − E X_n)/n.
    pub fn normalize(&self) -> Result<NormalizedPmf> {
        if self.n == 0 {
            return Err(Error::domain("normalize: n must be >= 1"));
        }
        let mean = self.mean();
        let n_rat = BigRational::from_integer(BigInt::from(self.n as u64));
        let points = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let k = BigRational::from_integer(BigInt::from(self.offset + i as u64));
                let z = (k - &mean) / &n_rat;
                (rational_to_f64(&z), rational_to_f64(w))
            })
            .collect();
        Ok(NormalizedPmf { n: self.n, points })
    }

    /// CSV rows: value, probability (decimal), probability (exact fraction).
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "value,probability,fraction")?;
        for (i, w) in self.weights.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                self.offset + i as u64,
                rational_to_f64(w),
                w
            )?;
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<PmfRow> {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| PmfRow {
                value: self.offset + i as u64,
                probability: rational_to_f64(w),
                fraction: Some(w.to_string()),
            })
            .collect()
    }
}

impl FloatPmf {
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (self.offset + i as u64) as f64)
            .sum()
    }

    /// Z_n rescaling; uses the exact closed-form mean for the centering.
    pub fn normalize(&self) -> Result<NormalizedPmf> {
        if self.n == 0 {
            return Err(Error::domain("normalize: n must be >= 1"));
        }
        let mean = rational_to_f64(&mean_comparisons(self.n));
        let nf = self.n as f64;
        let points = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| (((self.offset + i as u64) as f64 - mean) / nf, *w))
            .collect();
        Ok(NormalizedPmf { n: self.n, points })
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "value,probability,fraction")?;
        for (i, w) in self.weights.iter().enumerate() {
            writeln!(out, "{},{},", self.offset + i as u64, w)?;
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<PmfRow> {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| PmfRow {
                value: self.offset + i as u64,
                probability: *w,
                fraction: None,
            })
            .collect()
    }
}

/// One support point for serialization.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PmfRow {
    pub value: u64,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<String>,
}

impl NormalizedPmf {
    pub fn mean(&self) -> f64 {
        self.points.iter().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.points.iter().map(|(v, p)| p * (v - m) * (v - m)).sum()
    }

    /// Finite-n tail: left → P(Z_n ≤ −x), right → P(Z_n ≥ x).
    pub fn tail(&self, x: f64, side: Side) -> f64 {
        match side {
            Side::Left => self
                .points
                .iter()
                .filter(|(v, _)| *v <= -x)
                .map(|(_, p)| p)
                .sum(),
            Side::Right => self
                .points
                .iter()
                .filter(|(v, _)| *v >= x)
                .map(|(_, p)| p)
                .sum(),
        }
    }
}

/// Finite-n tail of a normalized pmf (free-function form).
pub fn pmf_tail(pmf: &NormalizedPmf, x: f64, side: Side) -> f64 {
    pmf.tail(x, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn brute_force_base_cases() {
        let p0 = brute_force_pmf(0).unwrap();
        assert_eq!(p0.offset, 0);
        assert_eq!(p0.weights, vec![ratio(1, 1)]);

        let p2 = brute_force_pmf(2).unwrap();
        assert_eq!(p2.offset, 1);
        assert_eq!(p2.weights, vec![ratio(1, 1)]);

        let p3 = brute_force_pmf(3).unwrap();
        assert_eq!(p3.offset, 2);
        assert_eq!(p3.weights, vec![ratio(1, 3), ratio(2, 3)]);
    }

    #[test]
    fn recurrence_matches_frozen_small_cases() {
        let p1 = exact_pmf(1).unwrap();
        assert_eq!(p1.offset, 0);
        assert_eq!(p1.weights, vec![ratio(1, 1)]);

        let p3 = exact_pmf(3).unwrap();
        assert_eq!(p3.offset, 2);
        assert_eq!(p3.weights, vec![ratio(1, 3), ratio(2, 3)]);

        let p4 = exact_pmf(4).unwrap();
        assert_eq!(p4.offset, 4);
        assert_eq!(p4.weights, vec![ratio(1, 2), ratio(1, 6), ratio(1, 3)]);
    }

    #[test]
    fn recurrence_equals_oracle_to_six() {
        let table = exact_pmf_table(6).unwrap();
        for n in 0..=6 {
            assert_eq!(table[n], brute_force_pmf(n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn weights_sum_to_one_exactly() {
        let table = exact_pmf_table(20).unwrap();
        for p in &table {
            assert_eq!(p.total(), ratio(1, 1), "n = {}", p.n);
        }
    }

    #[test]
    fn mean_matches_closed_form_small() {
        assert_eq!(mean_comparisons(1), ratio(0, 1));
        assert_eq!(mean_comparisons(2), ratio(1, 1));
        assert_eq!(mean_comparisons(3), ratio(8, 3));
        let table = exact_pmf_table(12).unwrap();
        for p in &table {
            assert_eq!(p.mean(), mean_comparisons(p.n), "n = {}", p.n);
        }
    }

    #[test]
    fn worst_case_support_and_weight() {
        // Max comparisons n(n-1)/2 happens exactly for the 2^{n-1} orders in
        // which every pivot is the min or max of its block.
        let table = exact_pmf_table(12).unwrap();
        for n in 1..=12usize {
            let p = &table[n];
            let top = p.offset + p.weights.len() as u64 - 1;
            assert_eq!(top, (n * (n - 1) / 2) as u64);
            let fact: BigRational =
                BigRational::from_integer((1..=n as i64).product::<i64>().into());
            let expected = ratio(2, 1).pow((n as i32) - 1) / fact;
            assert_eq!(*p.weights.last().unwrap(), expected, "n = {n}");
            assert!(p.weights.iter().all(|w| *w >= BigRational::zero()));
        }
    }

    #[test]
    fn normalize_frozen_case_and_exact_centering() {
        let p3 = exact_pmf(3).unwrap();
        let norm = p3.normalize().unwrap();
        assert_eq!(norm.points.len(), 2);
        assert!((norm.points[0].0 - (-2.0 / 9.0)).abs() < 1e-15);
        assert!((norm.points[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((norm.points[1].0 - 1.0 / 9.0).abs() < 1e-15);
        assert!((norm.points[1].1 - 2.0 / 3.0).abs() < 1e-15);

        // Exact centering in rational arithmetic.
        for n in 1..=15 {
            let p = exact_pmf(n).unwrap();
            let mean = p.mean();
            let centered: BigRational = p
                .weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    w * (BigRational::from_integer(BigInt::from(p.offset + i as u64)) - &mean)
                })
                .sum();
            assert_eq!(centered, BigRational::zero(), "n = {n}");
        }

        let p1 = exact_pmf(1).unwrap().normalize().unwrap();
        assert_eq!(p1.points, vec![(0.0, 1.0)]);
    }

    #[test]
    fn tail_examples() {
        let n3 = exact_pmf(3).unwrap().normalize().unwrap();
        assert!((n3.tail(0.0, Side::Right) - 2.0 / 3.0).abs() < 1e-15);
        assert!((n3.tail(-1e300, Side::Right) - 1.0).abs() < 1e-15);

        // P(Z_4 <= -0.2): only the point at -5/24 qualifies.
        let n4 = exact_pmf(4).unwrap().normalize().unwrap();
        assert!((n4.tail(0.2, Side::Left) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn float_backend_tracks_rational_backend() {
        let exact = exact_pmf(30).unwrap();
        let float = exact_pmf_f64(30).unwrap();
        assert_eq!(exact.offset, float.offset);
        assert_eq!(exact.weights.len(), float.weights.len());
        for (e, f) in exact.weights.iter().zip(float.weights.iter()) {
            assert!((rational_to_f64(e) - f).abs() < 1e-12);
        }
        let total: f64 = float.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resource_and_domain_errors() {
        assert!(matches!(
            brute_force_pmf(10),
            Err(Error::ResourceLimit(_))
        ));
        assert!(exact_pmf(RATIONAL_N_MAX + 1).is_err());
        assert!(exact_pmf_f64(FLOAT_N_MAX + 1).is_err());
        assert!(exact_pmf(0).unwrap().normalize().is_err());
    }

    #[test]
    fn csv_has_fraction_column() {
        let mut buf = Vec::new();
        exact_pmf(3).unwrap().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("value,probability,fraction"));
        assert!(s.contains("2,0.3333333333333333,1/3"));
        assert!(s.contains("3,0.6666666666666666,2/3"));
    }
}
