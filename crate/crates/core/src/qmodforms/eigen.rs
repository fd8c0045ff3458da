//! Tables of exact Hecke eigenvalues for the normalized eigenform spanning a
//! one-dimensional cusp space, plus the normalized values `λ(n)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use super::ntt::{ntt_primes, Crt, NttPrime};
use super::series::{dim_cusp_forms, victor_miller_basis};
use crate::arithmetic::factorize;
use crate::error::{LabError, Result};
use crate::par;

/// Weights `k` with `dim S_k = 1` at level one.
pub const ADMITTED_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

/// Tables up to this size are built from the exact Victor Miller basis;
/// larger ones go through the multi-modular pipeline.
pub const EXACT_ROUTE_LIMIT: u64 = 2048;

pub fn check_weight(weight: u32) -> Result<()> {
    if ADMITTED_WEIGHTS.contains(&weight) {
        Ok(())
    } else {
        Err(LabError::UnsupportedWeight {
            weight,
            reason: "only weights with a one-dimensional cusp space are admitted",
        })
    }
}

/// Read access to normalized Hecke eigenvalues `λ(n)`, `1 <= n <= nmax`.
///
/// The default methods extend `λ` beyond the table by multiplicativity and
/// the prime-power recursion `λ(p^{j+1}) = λ(p)λ(p^j) − λ(p^{j−1})`, which
/// only needs `λ(p)` for the primes dividing the argument.
pub trait HeckeSeries: Sync {
    fn nmax(&self) -> u64;

    /// `λ(n)` for `1 <= n <= nmax`.
    fn lambda(&self, n: u64) -> f64;

    /// `λ(n)` for any `n` whose prime factors are all `<= nmax`.
    fn lambda_ext(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(LabError::invalid("λ(0) is undefined"));
        }
        if n <= self.nmax() {
            return Ok(self.lambda(n));
        }
        let mut acc = 1.0;
        for (p, e) in factorize(n) {
            acc *= self.lambda_prime_power(p, e)?;
        }
        Ok(acc)
    }

    /// `λ(p^e)`.
    fn lambda_prime_power(&self, p: u64, e: u32) -> Result<f64> {
        if let Some(pe) = p.checked_pow(e) {
            if pe <= self.nmax() {
                return Ok(self.lambda(pe));
            }
        }
        if p > self.nmax() {
            return Err(LabError::range("prime factor beyond table", p, self.nmax()));
        }
        let lp = self.lambda(p);
        let (mut prev, mut cur) = (1.0, lp);
        for _ in 1..e {
            (prev, cur) = (cur, lp * cur - prev);
        }
        Ok(cur)
    }

    /// `λ(d²)`.
    fn lambda_square(&self, d: u64) -> Result<f64> {
        if let Some(d2) = d.checked_mul(d) {
            if d2 <= self.nmax() {
                return Ok(self.lambda(d2));
            }
        }
        let mut acc = 1.0;
        for (p, e) in factorize(d) {
            acc *= self.lambda_prime_power(p, 2 * e)?;
        }
        Ok(acc)
    }
}

/// `λ(d²)` for `d = 0..=dmax` (entry 0 is unused and set to zero).
pub fn lambda_squares<S: HeckeSeries + ?Sized>(series: &S, dmax: u64) -> Result<Vec<f64>> {
    let chunks: Vec<Result<Vec<f64>>> = par::map_chunks(dmax as usize + 1, 4096, |r| {
        r.map(|d| {
            if d == 0 {
                Ok(0.0)
            } else {
                series.lambda_square(d as u64)
            }
        })
        .collect()
    });
    let mut out = Vec::with_capacity(dmax as usize + 1);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Exact eigenvalues `a(n)` of the normalized eigenform of weight `k`
/// (so `a(1) = 1`) and `λ(n) = a(n)/n^{(k−1)/2}` in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTable {
    weight: u32,
    /// `raw[n]` for `n = 0..=nmax`; `raw[0]` is zero.
    raw: Vec<BigInt>,
    lambda: Vec<f64>,
}

impl EigenTable {
    /// Build from `a(1), …, a(nmax)`.
    pub fn from_raw(weight: u32, values: Vec<BigInt>) -> Result<Self> {
        check_weight(weight)?;
        if values.is_empty() {
            return Err(LabError::invalid("eigen table needs nmax >= 1"));
        }
        if !values[0].is_one() {
            return Err(LabError::invalid(format!("a(1) = {} is not 1", values[0])));
        }
        let mut raw = Vec::with_capacity(values.len() + 1);
        raw.push(BigInt::zero());
        raw.extend(values);
        let lambda = par::map_indexed(raw.len(), |n| {
            if n == 0 {
                0.0
            } else {
                normalize(&raw[n], n as u64, weight)
            }
        });
        Ok(EigenTable {
            weight,
            raw,
            lambda,
        })
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn nmax(&self) -> u64 {
        self.raw.len() as u64 - 1
    }

    /// Exact `a(n)`, `1 <= n <= nmax`.
    pub fn raw(&self, n: u64) -> &BigInt {
        assert!(
            n >= 1 && n <= self.nmax(),
            "a({n}) outside table of size {}",
            self.nmax()
        );
        &self.raw[n as usize]
    }

    pub fn raw_values(&self) -> &[BigInt] {
        &self.raw[1..]
    }

    /// `λ(n)`, `1 <= n <= nmax`.
    pub fn lambda(&self, n: u64) -> f64 {
        assert!(
            n >= 1 && n <= self.nmax(),
            "λ({n}) outside table of size {}",
            self.nmax()
        );
        self.lambda[n as usize]
    }

    /// `λ(0..=nmax)` with a zero in slot 0.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn truncated(&self, nmax: u64) -> Result<EigenTable> {
        if nmax == 0 || nmax > self.nmax() {
            return Err(LabError::range(
                "truncation beyond table",
                nmax,
                self.nmax(),
            ));
        }
        Ok(EigenTable {
            weight: self.weight,
            raw: self.raw[..=nmax as usize].to_vec(),
            lambda: self.lambda[..=nmax as usize].to_vec(),
        })
    }

    /// Exact `a(n)` for any `n` whose prime factors are `<= nmax`, using
    /// multiplicativity and `a(p^{e+1}) = a(p)a(p^e) − p^{k−1}a(p^{e−1})`.
    pub fn raw_ext(&self, n: u64) -> Result<BigInt> {
        if n == 0 {
            return Err(LabError::invalid("a(0) is undefined"));
        }
        if n <= self.nmax() {
            return Ok(self.raw(n).clone());
        }
        let mut acc = BigInt::one();
        for (p, e) in factorize(n) {
            if let Some(pe) = p.checked_pow(e) {
                if pe <= self.nmax() {
                    acc *= self.raw(pe);
                    continue;
                }
            }
            if p > self.nmax() {
                return Err(LabError::range("prime factor beyond table", p, self.nmax()));
            }
            let pk1 = BigInt::from(p).pow(self.weight - 1);
            let ap = self.raw(p).clone();
            let (mut prev, mut cur) = (BigInt::one(), ap.clone());
            for _ in 1..e {
                let next = &ap * &cur - &pk1 * &prev;
                prev = cur;
                cur = next;
            }
            acc *= cur;
        }
        Ok(acc)
    }
}

impl HeckeSeries for EigenTable {
    fn nmax(&self) -> u64 {
        EigenTable::nmax(self)
    }

    fn lambda(&self, n: u64) -> f64 {
        EigenTable::lambda(self, n)
    }
}

/// `a / n^{(k−1)/2}` in double precision: the integer quotient by
/// `n^{(k−2)/2}` is formed exactly to 64 extra bits before the final `√n`.
pub fn normalize(a: &BigInt, n: u64, weight: u32) -> f64 {
    let den = BigInt::from(n).pow((weight - 2) / 2);
    let scaled = (a << 64u32) / den;
    let q = scaled.to_f64().expect("finite quotient") / 2f64.powi(64);
    q / (n as f64).sqrt()
}

/// Eigenvalue table of the unique normalized eigenform in `S_k`.
pub fn eigen_table(weight: u32, nmax: u64) -> Result<EigenTable> {
    check_weight(weight)?;
    if nmax == 0 {
        return Err(LabError::invalid("nmax must be >= 1"));
    }
    debug_assert_eq!(dim_cusp_forms(weight), 1);
    let raw = if nmax <= EXACT_ROUTE_LIMIT {
        eigenform_exact(weight, nmax)?
    } else {
        eigenform_multimodular(weight, nmax)?
    };
    EigenTable::from_raw(weight, raw)
}

/// `a(1..=nmax)` from the cuspidal Victor Miller basis element.
pub fn eigenform_exact(weight: u32, nmax: u64) -> Result<Vec<BigInt>> {
    let basis = victor_miller_basis(weight, nmax as usize + 1)?;
    let cusp = basis.last().expect("non-empty basis");
    Ok(cusp.coeffs()[1..].to_vec())
}

/// `a(1..=nmax)` of `Δ·E4^a·E6^b` computed modulo several NTT primes and
/// lifted by CRT. The modulus covers `2·nmax^{k/2}`, which dominates
/// `|a(n)| <= τ(n) n^{(k−1)/2}` since `τ(n) <= 2√n`; one further prime
/// cross-checks every lift.
pub fn eigenform_multimodular(weight: u32, nmax: u64) -> Result<Vec<BigInt>> {
    check_weight(weight)?;
    let len = nmax as usize;
    if len > 1 << super::ntt::MAX_LOG {
        return Err(LabError::invalid(format!(
            "nmax {nmax} exceeds the NTT length limit"
        )));
    }
    let bound = BigUint::from(nmax).pow(weight / 2) * 2u32;
    let primes = super::ntt::primes_for_bound(&bound);
    let count = primes.len() + 1;
    let all = &ntt_primes()[..count];
    let residues: Vec<Vec<u32>> = par::map_slice(all, |pr| eigenform_mod_prime(weight, len, pr));
    let crt = Crt::new(primes);
    let check = &all[count - 1];
    let check_res = &residues[count - 1];
    let lifted: Vec<Result<BigInt>> = par::map_indexed(len, |i| {
        let r: Vec<u32> = residues[..count - 1].iter().map(|v| v[i]).collect();
        let v = crt.reconstruct(&r);
        let m = (&v % check.p as i64 + check.p as i64) % check.p as i64;
        if m != BigInt::from(check_res[i]) {
            return Err(LabError::Inexact(format!(
                "CRT lift of a({}) failed the check prime",
                i + 1
            )));
        }
        Ok(v)
    });
    lifted.into_iter().collect()
}

/// Residues (plain form) of `a(1..=len)` modulo one prime.
fn eigenform_mod_prime(weight: u32, len: usize, pr: &NttPrime) -> Vec<u32> {
    // Δ/q = (Σ_{j>=0} (−1)^j (2j+1) q^{j(j+1)/2})^8.
    let mut eta3 = Vec::new();
    let mut j = 0usize;
    while j * (j + 1) / 2 < len {
        let v = if j % 2 == 0 {
            2 * j as i64 + 1
        } else {
            -(2 * j as i64 + 1)
        };
        eta3.push((j * (j + 1) / 2, pr.from_i64(v)));
        j += 1;
    }
    // The first squaring is done on the sparse series.
    let mut f = vec![0u32; len];
    for (a, &(i, x)) in eta3.iter().enumerate() {
        for &(j, y) in &eta3[a..] {
            if i + j >= len {
                break;
            }
            let t = pr.mul(x, y);
            f[i + j] = pr.add(f[i + j], if i == j { t } else { pr.add(t, t) });
        }
    }
    f = pr.square(&f, len);
    f = pr.square(&f, len);
    let (a, b) = match weight {
        12 => (0, 0),
        16 => (1, 0),
        18 => (0, 1),
        20 => (2, 0),
        22 => (1, 1),
        26 => (2, 1),
        _ => unreachable!("weight checked"),
    };
    if a > 0 {
        let e4 = eisenstein_mod_prime(4, len, pr);
        for _ in 0..a {
            f = pr.multiply(&f, &e4, len);
        }
    }
    if b > 0 {
        let e6 = eisenstein_mod_prime(6, len, pr);
        f = pr.multiply(&f, &e6, len);
    }
    f.into_iter().map(|x| pr.from_mont(x)).collect()
}

/// `E_k mod p` for `k ∈ {4, 6}` in Montgomery form.
fn eisenstein_mod_prime(weight: u32, len: usize, pr: &NttPrime) -> Vec<u32> {
    let factor: i64 = if weight == 4 { 240 } else { -504 };
    let mut sigma = vec![0u32; len];
    for d in 1..len {
        let dk = pr.pow(
            pr.to_mont((d as u64 % pr.p as u64) as u32),
            (weight - 1) as u64,
        );
        let mut m = d;
        while m < len {
            sigma[m] = pr.add(sigma[m], dk);
            m += d;
        }
    }
    let fm = pr.from_i64(factor);
    let mut out: Vec<u32> = sigma.into_iter().map(|s| pr.mul(s, fm)).collect();
    out[0] = pr.to_mont(1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_twelve_examples() {
        let t = eigen_table(12, 6).unwrap();
        let raw: Vec<i64> = t.raw_values().iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(raw, vec![1, -24, 252, -1472, 4830, -6048]);
        let l2 = eigen_table(12, 2).unwrap().lambda(2);
        let expect = -24.0 / 2f64.powf(5.5);
        assert!((l2 - expect).abs() < 1e-15, "{l2} vs {expect}");
        assert!((l2 + 0.530330).abs() < 1e-6);
        assert_eq!(eigen_table(16, 1).unwrap().lambda(1), 1.0);
    }

    #[test]
    fn rejects_unadmitted_weights() {
        for k in [10, 14, 24, 28] {
            assert!(matches!(
                eigen_table(k, 10),
                Err(LabError::UnsupportedWeight { .. })
            ));
        }
    }

    #[test]
    fn routes_agree() {
        for k in ADMITTED_WEIGHTS {
            let exact = eigenform_exact(k, 600).unwrap();
            let modular = eigenform_multimodular(k, 600).unwrap();
            assert_eq!(exact, modular, "weight {k}");
        }
    }

    #[test]
    fn weight_sixteen_second_eigenvalue() {
        let t = eigen_table(16, 2).unwrap();
        assert_eq!(t.raw(2), &BigInt::from(216));
    }

    #[test]
    fn extension_matches_table() {
        let big = eigen_table(12, 3000).unwrap();
        let small = big.truncated(60).unwrap();
        for n in [64u64, 121, 1024, 2187, 2401, 2310] {
            assert_eq!(&small.raw_ext(n).unwrap(), big.raw(n), "n={n}");
            let rel = (small.lambda_ext(n).unwrap() - big.lambda(n)).abs();
            assert!(rel < 1e-12, "n={n}");
        }
        for d in [8u64, 11, 30, 49] {
            let direct = big.lambda(d * d);
            assert!((small.lambda_square(d).unwrap() - direct).abs() < 1e-12);
        }
        assert!(small.lambda_square(61).is_err());
    }

    #[test]
    fn normalization_is_accurate() {
        let t = eigen_table(26, 50).unwrap();
        for n in 1..=50u64 {
            let a = t.raw(n).to_f64().unwrap();
            let naive = a / (n as f64).powf(12.5);
            assert!((t.lambda(n) - naive).abs() <= 1e-13 * naive.abs().max(1.0));
        }
    }
}
