//! Truncated q-expansions with exact integer coefficients, the level-one
//! generators `E4`, `E6`, `Δ`, the Victor Miller basis and the classical
//! Hecke action on q-expansions.

use std::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ntt::{primes_for_bound, Crt};
use crate::arithmetic::{divisors, sigma_table};
use crate::error::{LabError, Result};
use crate::par;

/// Above this precision, series multiplication switches to multi-modular NTT.
pub const SCHOOLBOOK_LIMIT: usize = 4096;

/// `Σ_{n < precision} c_n q^n` with arbitrary-precision integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigInt>,
}

impl QSeries {
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::invalid("q-series precision must be >= 1"));
        }
        Ok(QSeries { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(precision: usize) -> Self {
        assert!(precision >= 1);
        QSeries {
            coeffs: vec![BigInt::zero(); precision],
        }
    }

    pub fn one(precision: usize) -> Self {
        let mut s = Self::zero(precision);
        s.coeffs[0] = BigInt::one();
        s
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    pub fn truncate(&self, precision: usize) -> Self {
        assert!(precision >= 1 && precision <= self.precision());
        QSeries {
            coeffs: self.coeffs[..precision].to_vec(),
        }
    }

    /// Index of the first non-zero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        QSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Divide every coefficient by `d`, failing if any division is inexact.
    pub fn div_exact(&self, d: &BigInt) -> Result<Self> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (n, c) in self.coeffs.iter().enumerate() {
            let (q, r) = c.div_rem(d);
            if !r.is_zero() {
                return Err(LabError::Inexact(format!(
                    "coefficient {n} ({c}) not divisible by {d}"
                )));
            }
            out.push(q);
        }
        Ok(QSeries { coeffs: out })
    }

    /// Product truncated to the smaller of the two precisions.
    pub fn mul(&self, other: &QSeries) -> QSeries {
        let p = self.precision().min(other.precision());
        if p <= SCHOOLBOOK_LIMIT {
            self.mul_schoolbook(other, p)
        } else {
            self.mul_multimodular(other, p)
        }
    }

    fn mul_schoolbook(&self, other: &QSeries, p: usize) -> QSeries {
        let a = &self.coeffs[..p];
        let b = &other.coeffs[..p];
        let coeffs = par::map_indexed(p, |n| {
            let mut acc = BigInt::zero();
            for i in 0..=n {
                if !a[i].is_zero() && !b[n - i].is_zero() {
                    acc += &a[i] * &b[n - i];
                }
            }
            acc
        });
        QSeries { coeffs }
    }

    fn mul_multimodular(&self, other: &QSeries, p: usize) -> QSeries {
        let max_abs = |s: &[BigInt]| {
            s.iter()
                .map(|c| c.magnitude().clone())
                .max()
                .unwrap_or_default()
        };
        let bound: BigUint = max_abs(&self.coeffs[..p]) * max_abs(&other.coeffs[..p]) * p;
        let primes = primes_for_bound(&bound);
        let residues: Vec<Vec<u32>> = par::map_slice(primes, |pr| {
            let a: Vec<u32> = self.coeffs[..p].iter().map(|c| pr.from_bigint(c)).collect();
            let b: Vec<u32> = other.coeffs[..p]
                .iter()
                .map(|c| pr.from_bigint(c))
                .collect();
            pr.multiply(&a, &b, p)
                .into_iter()
                .map(|x| pr.from_mont(x))
                .collect()
        });
        let crt = Crt::new(primes);
        let coeffs = par::map_indexed(p, |n| {
            let r: Vec<u32> = residues.iter().map(|v| v[n]).collect();
            crt.reconstruct(&r)
        });
        QSeries { coeffs }
    }

    pub fn pow(&self, mut e: u32) -> QSeries {
        let mut base = self.clone();
        let mut acc = QSeries::one(self.precision());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        let p = self.precision().min(rhs.precision());
        QSeries {
            coeffs: (0..p).map(|i| &self.coeffs[i] + &rhs.coeffs[i]).collect(),
        }
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        let p = self.precision().min(rhs.precision());
        QSeries {
            coeffs: (0..p).map(|i| &self.coeffs[i] - &rhs.coeffs[i]).collect(),
        }
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Bernoulli number `B_n` (with `B_1 = +1/2`), by the Akiyama–Tanigawa algorithm.
pub fn bernoulli(n: usize) -> BigRational {
    let mut a: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push(BigRational::new(BigInt::one(), BigInt::from(m + 1)));
        for j in (1..=m).rev() {
            let diff = &a[j - 1] - &a[j];
            a[j - 1] = diff * BigInt::from(j);
        }
    }
    a.swap_remove(0)
}

/// Normalized Eisenstein series `E_k = 1 - (2k/B_k) Σ σ_{k-1}(n) q^n` for `k ∈ {4, 6}`.
pub fn eisenstein(weight: u32, precision: usize) -> Result<QSeries> {
    if weight != 4 && weight != 6 {
        return Err(LabError::UnsupportedWeight {
            weight,
            reason: "Eisenstein generators exist for weights 4 and 6",
        });
    }
    if precision == 0 {
        return Err(LabError::invalid("precision must be >= 1"));
    }
    let factor = -BigRational::from_integer(BigInt::from(2 * weight)) / bernoulli(weight as usize);
    if !factor.is_integer() {
        return Err(LabError::Inexact(format!("2k/B_k = {factor} not integral")));
    }
    let factor = factor.to_integer();
    let sigma = sigma_table(weight - 1, precision);
    let mut coeffs: Vec<BigInt> = sigma.into_iter().map(|s| s * &factor).collect();
    coeffs[0] = BigInt::one();
    QSeries::new(coeffs)
}

/// `Δ = (E4³ − E6²) / 1728`.
pub fn delta(precision: usize) -> Result<QSeries> {
    if precision < 2 {
        return Err(LabError::invalid("delta needs precision >= 2"));
    }
    let e4 = eisenstein(4, precision)?;
    let e6 = eisenstein(6, precision)?;
    let num = &e4.pow(3) - &e6.mul(&e6);
    num.div_exact(&BigInt::from(1728))
}

/// `dim M_k` for level one, even `k >= 0`.
pub fn dim_modular_forms(weight: u32) -> usize {
    assert!(weight % 2 == 0);
    if weight == 2 {
        return 0;
    }
    let base = (weight / 12) as usize;
    if weight % 12 == 2 {
        base
    } else {
        base + 1
    }
}

/// `dim S_k` for level one.
pub fn dim_cusp_forms(weight: u32) -> usize {
    if weight < 12 {
        0
    } else {
        dim_modular_forms(weight) - 1
    }
}

/// Exponents `(a, b)` with `E4^a E6^b` of weight `k mod 12` lifted to {0,4,6,8,10,14}.
fn eisenstein_factor(weight: u32) -> (u32, u32, u32) {
    match weight % 12 {
        0 => (0, 0, 0),
        4 => (1, 0, 4),
        6 => (0, 1, 6),
        8 => (2, 0, 8),
        10 => (1, 1, 10),
        2 => (2, 1, 14),
        _ => unreachable!("odd weight"),
    }
}

/// The Victor Miller basis `f_0, …, f_{d-1}` of `M_k` with `f_i = q^i + O(q^d)`.
pub fn victor_miller_basis(weight: u32, precision: usize) -> Result<Vec<QSeries>> {
    if weight % 2 == 1 || weight < 12 {
        return Err(LabError::UnsupportedWeight {
            weight,
            reason: "Victor Miller basis is built for even weights >= 12",
        });
    }
    if precision == 0 {
        return Err(LabError::invalid("precision must be >= 1"));
    }
    let d = dim_modular_forms(weight);
    let work = precision.max(d + 1);
    let (a, b, small) = eisenstein_factor(weight);
    let ell = ((weight - small) / 12) as usize;
    debug_assert_eq!(ell + 1, d);

    let e4 = eisenstein(4, work)?;
    let e6 = eisenstein(6, work)?;
    let dl = delta(work)?;
    let e_small = e4.pow(a).mul(&e6.pow(b));
    let e6sq = e6.mul(&e6);

    // g_j = Δ^j · E6^{2(ℓ-j)} · E_small = q^j + O(q^{j+1}).
    let mut basis: Vec<QSeries> = (0..d)
        .map(|j| {
            dl.pow(j as u32)
                .mul(&e6sq.pow((ell - j) as u32))
                .mul(&e_small)
        })
        .collect();
    echelonize(&mut basis, d)?;
    Ok(basis.into_iter().map(|s| s.truncate(precision)).collect())
}

/// Reduce `rows` so row `i` has coefficient 1 at `q^i` and 0 at every other `q^j`, `j < d`.
pub fn echelonize(rows: &mut [QSeries], d: usize) -> Result<()> {
    for i in (0..d).rev() {
        let lead = rows[i].coeff(i).clone();
        if lead.abs() != BigInt::one() {
            return Err(LabError::Inexact(format!(
                "pivot {lead} at q^{i} is not a unit"
            )));
        }
        if lead != BigInt::one() {
            rows[i] = -&rows[i];
        }
        for j in 0..d {
            if j == i {
                continue;
            }
            let c = rows[j].coeff(i).clone();
            if !c.is_zero() {
                rows[j] = &rows[j] - &rows[i].scale(&c);
            }
        }
    }
    Ok(())
}

/// Classical `T_n` on a weight-`k` q-expansion, to the largest output precision
/// the input supports: coefficient `m` is `Σ_{d|(m,n)} d^{k-1} b(mn/d²)`.
pub fn hecke_apply(series: &QSeries, weight: u32, n: u64) -> Result<QSeries> {
    if n == 0 {
        return Err(LabError::invalid("Hecke index must be >= 1"));
    }
    let out = (series.precision() - 1) / n as usize + 1;
    hecke_apply_to(series, weight, n, out)
}

/// `T_n` to a requested output precision.
pub fn hecke_apply_to(
    series: &QSeries,
    weight: u32,
    n: u64,
    out_precision: usize,
) -> Result<QSeries> {
    if n == 0 || out_precision == 0 {
        return Err(LabError::invalid(
            "Hecke index and output precision must be >= 1",
        ));
    }
    let needed = (out_precision - 1) * n as usize + 1;
    if series.precision() < needed {
        return Err(LabError::InsufficientPrecision {
            needed,
            available: series.precision(),
        });
    }
    let k1 = weight - 1;
    let coeffs = par::map_indexed(out_precision, |m| {
        let m = m as u64;
        let g = m.gcd(&n);
        let mut acc = BigInt::zero();
        for d in divisors(g) {
            let idx = (m * n / (d * d)) as usize;
            let c = series.coeff(idx);
            if !c.is_zero() {
                acc += BigInt::from(d).pow(k1) * c;
            }
        }
        acc
    });
    QSeries::new(coeffs)
}

/// Eigenvalue of `T_n` on a normalized eigenform, read from the image's
/// `q^1` coefficient. Convenience for tests and diagnostics.
pub fn hecke_eigenvalue(eigenform: &QSeries, weight: u32, n: u64) -> Result<BigInt> {
    let image = hecke_apply_to(eigenform, weight, n, 2)?;
    Ok(image.coeff(1).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn ints(s: &QSeries) -> Vec<i64> {
        s.coeffs().iter().map(|c| c.to_i64().unwrap()).collect()
    }

    /// q ∏_{n<P} (1 − q^n)^24, expanded in place.
    fn delta_product_oracle(p: usize) -> Vec<BigInt> {
        let mut c = vec![BigInt::zero(); p];
        c[0] = BigInt::one(); // series of ∏(1-q^n)^24, shifted by one below
        for n in 1..p {
            for _ in 0..24 {
                for i in (n..p).rev() {
                    let (lo, hi) = c.split_at_mut(i);
                    hi[0] -= &lo[i - n];
                }
            }
        }
        let mut out = vec![BigInt::zero(); p];
        out[1..p].clone_from_slice(&c[..p - 1]);
        out
    }

    #[test]
    fn bernoulli_small() {
        assert_eq!(bernoulli(0), BigRational::from_integer(1.into()));
        assert_eq!(bernoulli(2), BigRational::new(1.into(), 6.into()));
        assert_eq!(bernoulli(4), BigRational::new((-1).into(), 30.into()));
        assert_eq!(bernoulli(6), BigRational::new(1.into(), 42.into()));
        assert_eq!(bernoulli(12), BigRational::new((-691).into(), 2730.into()));
    }

    #[test]
    fn eisenstein_examples() {
        assert_eq!(ints(&eisenstein(4, 3).unwrap()), vec![1, 240, 2160]);
        assert_eq!(ints(&eisenstein(6, 3).unwrap()), vec![1, -504, -16632]);
        assert_eq!(ints(&eisenstein(4, 1).unwrap()), vec![1]);
        assert!(eisenstein(8, 3).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(2).unwrap().coeff(1), &BigInt::from(1));
        assert_eq!(delta(3).unwrap().coeff(2), &BigInt::from(-24));
        let d = delta(7).unwrap();
        assert_eq!(d.coeff(6), &BigInt::from(-6048));
        assert_eq!(d.coeff(6), &(d.coeff(2) * d.coeff(3)));
        assert!(delta(1).is_err());
    }

    #[test]
    fn delta_matches_product_oracle() {
        let p = 400;
        assert_eq!(delta(p).unwrap().coeffs(), &delta_product_oracle(p)[..]);
    }

    #[test]
    fn inexact_division_is_reported() {
        let s = QSeries::from_i64(&[1728, 1729]).unwrap();
        assert!(matches!(
            s.div_exact(&BigInt::from(1728)),
            Err(LabError::Inexact(_))
        ));
    }

    #[test]
    fn victor_miller_examples() {
        let b12 = victor_miller_basis(12, 3).unwrap();
        assert_eq!(ints(&b12[1]), vec![0, 1, -24]);
        assert_eq!(ints(&b12[0]), vec![1, 0, 196560]);
        let b16 = victor_miller_basis(16, 2).unwrap();
        assert_eq!(ints(&b16[1]), vec![0, 1]);
    }

    #[test]
    fn victor_miller_is_idempotent() {
        for k in [12u32, 24, 26, 36] {
            let mut basis = victor_miller_basis(k, 12).unwrap();
            let before = basis.clone();
            echelonize(&mut basis, before.len()).unwrap();
            assert_eq!(basis, before, "weight {k}");
        }
    }

    #[test]
    fn dimensions() {
        assert_eq!(dim_modular_forms(12), 2);
        assert_eq!(dim_modular_forms(14), 1);
        assert_eq!(dim_modular_forms(26), 2);
        for k in [12, 16, 18, 20, 22, 26] {
            assert_eq!(dim_cusp_forms(k), 1, "k={k}");
        }
        assert_eq!(dim_cusp_forms(24), 2);
    }

    #[test]
    fn hecke_examples() {
        let d = delta(40).unwrap();
        let t2 = hecke_apply(&d, 12, 2).unwrap();
        assert_eq!(t2.coeff(1), &BigInt::from(-24));
        assert_eq!(t2, d.truncate(t2.precision()).scale(&BigInt::from(-24)));
        assert_eq!(hecke_apply(&d, 12, 1).unwrap(), d);

        let f16 = eisenstein(4, 40).unwrap().mul(&d);
        assert_eq!(hecke_eigenvalue(&f16, 16, 2).unwrap(), BigInt::from(216));
        assert!(matches!(
            hecke_apply_to(&d, 12, 5, 10),
            Err(LabError::InsufficientPrecision { .. })
        ));
    }

    #[test]
    fn multimodular_product_matches_schoolbook() {
        let p = SCHOOLBOOK_LIMIT + 200;
        let a = eisenstein(4, p).unwrap();
        let b = eisenstein(6, p).unwrap();
        let fast = a.mul(&b);
        let slow = a.mul_schoolbook(&b, p);
        assert_eq!(fast, slow);
    }
}
