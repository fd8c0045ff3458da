//! Petersson trace formula at level one: Kloosterman sums, `J`-Bessel
//! functions, both sides of the formula and the harmonic weight.

use std::f64::consts::PI;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arithmetic::tau;
use crate::error::{LabError, Result};
use crate::numeric::csum;
use crate::par;
use crate::qmodforms::eigen::check_weight;
use crate::qmodforms::HeckeSeries;
use crate::variancelab::{variance_statistic, VarianceConfig};

pub const MAX_BESSEL_ORDER: u32 = 64;
pub const MAX_BESSEL_ARG: f64 = 1.0e4;

fn mod_inverse(a: u64, c: u64) -> Option<u64> {
    let e = (a as i64).extended_gcd(&(c as i64));
    (e.gcd == 1).then(|| e.x.rem_euclid(c as i64) as u64)
}

/// `S(m, n; c) = Σ_{x mod c, (x,c)=1} cos(2π(mx + nx̄)/c)`.
pub fn kloosterman(m: u64, n: u64, c: u64) -> f64 {
    assert!(c >= 1, "modulus must be positive");
    if c == 1 {
        return 1.0;
    }
    let (mr, nr) = ((m % c) as u128, (n % c) as u128);
    csum((1..c).filter_map(|x| {
        let inv = mod_inverse(x, c)?;
        let r = (mr * x as u128 + nr * inv as u128) % c as u128;
        Some((2.0 * PI * r as f64 / c as f64).cos())
    }))
}

/// Unit residues, their inverses and a cosine table for every `c <= cmax`,
/// shared across many `(m, n)`.
pub struct KloostermanTable {
    units: Vec<Vec<(u32, u32)>>,
    cosines: Vec<Vec<f64>>,
}

impl KloostermanTable {
    pub fn new(cmax: u64) -> Self {
        let rows: Vec<(Vec<(u32, u32)>, Vec<f64>)> = par::map_indexed(cmax as usize + 1, |c| {
            let c = c as u64;
            if c == 0 {
                return (Vec::new(), Vec::new());
            }
            let units = if c == 1 {
                vec![(0, 0)]
            } else {
                (1..c)
                    .filter_map(|x| mod_inverse(x, c).map(|i| (x as u32, i as u32)))
                    .collect()
            };
            let cos = (0..c)
                .map(|r| (2.0 * PI * r as f64 / c as f64).cos())
                .collect();
            (units, cos)
        });
        let (units, cosines) = rows.into_iter().unzip();
        KloostermanTable { units, cosines }
    }

    pub fn cmax(&self) -> u64 {
        self.units.len() as u64 - 1
    }

    pub fn sum(&self, m: u64, n: u64, c: u64) -> f64 {
        let cu = c as usize;
        let (mr, nr) = (m % c, n % c);
        let cos = &self.cosines[cu];
        csum(self.units[cu].iter().map(|&(x, inv)| {
            let r = (mr * x as u64 + nr * inv as u64) % c;
            cos[r as usize]
        }))
    }
}

/// `J_ν(x)` for integer `0 <= ν <= 64` and `0 <= x <= 10⁴`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > MAX_BESSEL_ORDER || !(0.0..=MAX_BESSEL_ARG).contains(&x) {
        return Err(LabError::invalid(format!(
            "J_{order}({x}) outside the supported domain"
        )));
    }
    if x == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    if x <= 8.0 || x * x < 0.5 * (order as f64 + 1.0) {
        Ok(bessel_series(order, x))
    } else {
        Ok(bessel_miller(order, x))
    }
}

fn bessel_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut acc = 0.0;
    let mut k = 0u32;
    loop {
        acc += term;
        k += 1;
        term *= q / (k as f64 * (k + order) as f64);
        if term.abs() <= 1e-17 * acc.abs() || k > 500 {
            return acc + term;
        }
    }
}

/// Miller's backward recurrence normalized by `J₀ + 2Σ J_{2k} = 1`.
fn bessel_miller(order: u32, x: f64) -> f64 {
    let top = x.max(order as f64);
    let mut start = (top + 20.0 + 8.0 * top.cbrt()) as u64 + 10;
    start += start % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut want = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds the unnormalized J_{k−1}.
        let j = k - 1;
        if j == order as u64 {
            want = cur;
        }
        if j % 2 == 0 && j > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    norm += cur;
    want / norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricSide {
    pub k: u32,
    pub m: u64,
    pub n: u64,
    pub cmax: u64,
    pub value: f64,
    /// Bound on `Σ_{c>cmax}` from `|S/c| <= 1` and `|J_ν(x)| <= (x/2)^ν/ν!`.
    pub tail_estimate: f64,
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

fn tail_bound(k: u32, m: u64, n: u64, cmax: u64) -> f64 {
    let nu = (k - 1) as f64;
    let a = 2.0 * PI * ((m * n) as f64).sqrt();
    let log = std::f64::consts::LN_2 + PI.ln() + nu * a.ln()
        - ln_factorial(k - 1)
        - (nu - 1.0) * (cmax as f64).ln()
        - (nu - 1.0).ln();
    log.exp()
}

fn geometric_with(
    kl: &KloostermanTable,
    k: u32,
    m: u64,
    n: u64,
    cmax: u64,
) -> Result<GeometricSide> {
    check_weight(k)?;
    if cmax == 0 || m == 0 || n == 0 {
        return Err(LabError::invalid("m, n and cmax must be positive"));
    }
    if cmax > kl.cmax() {
        return Err(LabError::range(
            "Kloosterman table modulus",
            cmax,
            kl.cmax(),
        ));
    }
    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let arg = 4.0 * PI * ((m * n) as f64).sqrt();
    let terms: Vec<Result<f64>> = par::map_indexed(cmax as usize, |i| {
        let c = i as u64 + 1;
        let j = bessel_j(k - 1, arg / c as f64)?;
        Ok(kl.sum(m, n, c) / c as f64 * j)
    });
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    let delta = if m == n { 1.0 } else { 0.0 };
    Ok(GeometricSide {
        k,
        m,
        n,
        cmax,
        value: delta + 2.0 * PI * sign * csum(terms),
        tail_estimate: tail_bound(k, m, n, cmax),
    })
}

/// `δ_{m=n} + 2π i^{−k} Σ_{c<=cmax} S(m,n;c)/c · J_{k−1}(4π√(mn)/c)`.
pub fn petersson_geometric(k: u32, m: u64, n: u64, cmax: u64) -> Result<GeometricSide> {
    geometric_with(&KloostermanTable::new(cmax), k, m, n, cmax)
}

/// `ω_f = Γ(k−1)/((4π)^{k−1}‖f‖²)` for the single eigenform of weight `k`,
/// read off the `m = n = 1` geometric side.
pub fn extract_weight(k: u32, cmax: u64) -> Result<f64> {
    Ok(petersson_geometric(k, 1, 1, cmax)?.value)
}

/// `‖f‖²` recovered from `ω_f`.
pub fn petersson_norm(k: u32, omega: f64) -> f64 {
    let nu = (k - 1) as f64;
    (ln_factorial(k - 2) - nu * (4.0 * PI).ln()).exp() / omega
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeterssonReport {
    pub k: u32,
    pub m: u64,
    pub n: u64,
    pub cmax: u64,
    pub omega: f64,
    pub spectral: f64,
    pub geometric: f64,
    /// `|geometric(cmax) − geometric(2·cmax)|`.
    pub cmax_doubling_change: f64,
    pub residual: f64,
    pub error_bound: f64,
}

/// `(log 3mn)² τ((m,n)) (mn)^{1/4} / √k`.
pub fn error_bound(k: u32, m: u64, n: u64) -> f64 {
    let mn = (m * n) as f64;
    (3.0 * mn).ln().powi(2) * tau(m.gcd(&n)) as f64 * mn.powf(0.25) / (k as f64).sqrt()
}

/// Both sides of the trace formula for many `(m, n)` sharing one
/// Kloosterman table of modulus `2·cmax`.
pub struct PeterssonLab {
    kl: KloostermanTable,
    cmax: u64,
}

impl PeterssonLab {
    pub fn new(cmax: u64) -> Result<Self> {
        if cmax == 0 {
            return Err(LabError::invalid("cmax must be positive"));
        }
        Ok(PeterssonLab {
            kl: KloostermanTable::new(2 * cmax),
            cmax,
        })
    }

    pub fn geometric(&self, k: u32, m: u64, n: u64) -> Result<(GeometricSide, f64)> {
        let g = geometric_with(&self.kl, k, m, n, self.cmax)?;
        let g2 = geometric_with(&self.kl, k, m, n, 2 * self.cmax)?;
        Ok((g, (g.value - g2.value).abs()))
    }

    pub fn omega(&self, k: u32) -> Result<f64> {
        Ok(self.geometric(k, 1, 1)?.0.value)
    }

    pub fn residual<S: HeckeSeries + ?Sized>(
        &self,
        series: &S,
        k: u32,
        m: u64,
        n: u64,
    ) -> Result<PeterssonReport> {
        self.residual_with_omega(series, k, m, n, self.omega(k)?)
    }

    pub fn residual_with_omega<S: HeckeSeries + ?Sized>(
        &self,
        series: &S,
        k: u32,
        m: u64,
        n: u64,
        omega: f64,
    ) -> Result<PeterssonReport> {
        if m * n > series.nmax() {
            return Err(LabError::range("mn", m * n, series.nmax()));
        }
        let (g, change) = self.geometric(k, m, n)?;
        let spectral = omega * series.lambda(m) * series.lambda(n);
        Ok(PeterssonReport {
            k,
            m,
            n,
            cmax: self.cmax,
            omega,
            spectral,
            geometric: g.value,
            cmax_doubling_change: change,
            residual: (spectral - g.value).abs(),
            error_bound: error_bound(k, m, n),
        })
    }
}

/// One-shot version of [`PeterssonLab::residual`].
pub fn petersson_residual<S: HeckeSeries + ?Sized>(
    series: &S,
    k: u32,
    m: u64,
    n: u64,
    cmax: u64,
) -> Result<PeterssonReport> {
    PeterssonLab::new(cmax)?.residual(series, k, m, n)
}

/// `ω_f` times the variance statistic of the single form of weight `k`.
pub fn family_variance_holomorphic<S: HeckeSeries + ?Sized>(
    series: &S,
    k: u32,
    config: &VarianceConfig,
    c1: f64,
    cmax: u64,
) -> Result<f64> {
    let omega = extract_weight(k, cmax)?;
    Ok(omega * variance_statistic(series, config, c1)?.statistic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeilReport {
    pub triples: u64,
    pub violations: u64,
    pub asymmetries: u64,
    /// Largest `|S(m,n;c)| / (τ(c)√c √(m,n,c))`.
    pub max_ratio: f64,
}

/// Weil bound and `m ↔ n` symmetry over `c <= cmax`, `1 <= m, n <= mn_max`.
pub fn weil_check(cmax: u64, mn_max: u64) -> WeilReport {
    let kl = KloostermanTable::new(cmax);
    let rows = par::map_indexed(cmax as usize, |i| {
        let c = i as u64 + 1;
        let (mut v, mut a, mut worst, mut count) = (0u64, 0u64, 0.0f64, 0u64);
        for m in 1..=mn_max {
            for n in m..=mn_max {
                let s = kl.sum(m, n, c);
                let g = m.gcd(&n).gcd(&c) as f64;
                let bound = tau(c) as f64 * (c as f64).sqrt() * g.sqrt();
                worst = worst.max(s.abs() / bound);
                if s.abs() > bound * (1.0 + 1e-12) + 1e-9 {
                    v += 1;
                }
                if (s - kl.sum(n, m, c)).abs() > 1e-9 {
                    a += 1;
                }
                count += 1;
            }
        }
        (v, a, worst, count)
    });
    let mut report = WeilReport {
        triples: 0,
        violations: 0,
        asymmetries: 0,
        max_ratio: 0.0,
    };
    for (v, a, w, c) in rows {
        report.violations += v;
        report.asymmetries += a;
        report.max_ratio = report.max_ratio.max(w);
        report.triples += c;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kloosterman_examples() {
        assert_eq!(kloosterman(1, 1, 1), 1.0);
        assert!((kloosterman(1, 1, 3) + 1.0).abs() < 1e-14);
        let want = 2.0 + 2.0 * (4.0 * PI / 5.0).cos();
        assert!((kloosterman(1, 1, 5) - want).abs() < 1e-14);
        assert!((want - 0.381966).abs() < 1e-6);
        let kl = KloostermanTable::new(40);
        for c in 1..=40 {
            assert!((kl.sum(3, 7, c) - kloosterman(3, 7, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_small_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert!(bessel_j(65, 1.0).is_err());
        assert!(bessel_j(3, 2e4).is_err());
    }

    #[test]
    fn bessel_regimes_meet() {
        for nu in [0u32, 1, 5, 11, 25] {
            let a = bessel_series(nu, 8.0);
            let b = bessel_miller(nu, 8.0);
            assert!((a - b).abs() < 1e-13, "nu={nu}: {a} vs {b}");
        }
    }

    #[test]
    fn error_bound_shape() {
        let b = error_bound(12, 2, 2);
        let want = (12f64).ln().powi(2) * 2.0 * 4f64.powf(0.25) / 12f64.sqrt();
        assert!((b - want).abs() < 1e-12);
    }
}
