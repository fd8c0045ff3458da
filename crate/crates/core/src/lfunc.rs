//! Riemann zeta, the symmetric-square Dirichlet series `Σ λ(d²)d^{−s}`, the
//! constant `c₁`, and the Rankin–Selberg and truncation-error sweeps.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::{csum, csum_complex, log_grid, power_law_fit, LinearFit};
use crate::par;
use crate::qmodforms::series::bernoulli;
use crate::qmodforms::{lambda_squares, HeckeSeries};

const EM_TERMS: usize = 15;

/// `B_{2j}/(2j)!` for `j = 1..=EM_TERMS`.
fn bernoulli_over_factorial() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut fact = BigInt::one();
        (1..=EM_TERMS)
            .map(|j| {
                let n = 2 * j;
                fact *= BigInt::from((n - 1) * n);
                let q = bernoulli(n) / BigRational::from_integer(fact.clone());
                q.to_f64().expect("finite Bernoulli ratio")
            })
            .collect()
    })
}

/// `ζ(s)` by Euler–Maclaurin summation, for `Re s > −1`, `s ≠ 1`.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(LabError::invalid("ζ has a pole at s = 1"));
    }
    if !(s.re > -1.0) || !s.is_finite() {
        return Err(LabError::invalid(format!("ζ({s}) outside Re s > −1")));
    }
    let n = 20 + s.norm().ceil() as u64;
    let nf = n as f64;
    let head = csum_complex((1..n).map(|k| (-s * (k as f64).ln()).exp()));
    let n_s = (-s * nf.ln()).exp();
    let mut acc = head + n_s * nf / (s - 1.0) + n_s * 0.5;
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j−2) · N^{−s−2j+1}
    let mut rising = s;
    let mut pow = n_s / nf;
    for (j, c) in bernoulli_over_factorial().iter().enumerate() {
        let term = rising * pow * *c;
        acc += term;
        if term.norm() < 1e-17 * acc.norm() {
            break;
        }
        let m = 2.0 * j as f64 + 1.0;
        rising = rising * (s + m) * (s + m + 1.0);
        pow /= nf * nf;
    }
    Ok(acc)
}

pub fn zeta_real(s: f64) -> Result<f64> {
    Ok(zeta(Complex64::new(s, 0.0))?.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Smoothing {
    Sharp,
    /// Weights `e^{−d/width}`.
    Exponential {
        width: f64,
    },
}

impl Smoothing {
    fn weight(&self, d: u64) -> f64 {
        match *self {
            Smoothing::Sharp => 1.0,
            Smoothing::Exponential { width } => (-(d as f64) / width).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LValueReport {
    pub s: Complex64,
    pub value: Complex64,
    pub cutoff: u64,
    pub smoothing: Smoothing,
    /// Change in the value when the cutoff (or width) is halved.
    pub tail_estimate: f64,
}

/// `Σ_{d<=cutoff} λ(d²) d^{−s} w(d)` from precomputed `λ(d²)`.
fn dirichlet_sum(sq: &[f64], s: f64, cutoff: u64, smoothing: Smoothing) -> f64 {
    let parts = par::map_chunks(cutoff as usize, 1 << 14, |r| {
        csum(r.map(|i| {
            let d = i as u64 + 1;
            sq[d as usize] * (d as f64).powf(-s) * smoothing.weight(d)
        }))
    });
    csum(parts)
}

/// `Σ_d λ(d²) d^{−s}`, truncated at `cutoff` with the given smoothing.
pub fn sym2_dirichlet<S: HeckeSeries + ?Sized>(
    series: &S,
    s: f64,
    cutoff: u64,
    smoothing: Smoothing,
) -> Result<f64> {
    let sq = lambda_squares(series, cutoff)?;
    Ok(dirichlet_sum(&sq, s, cutoff, smoothing))
}

fn check_smoothing(smoothing: Smoothing) -> Result<()> {
    if let Smoothing::Exponential { width } = smoothing {
        if !(width > 0.0 && width.is_finite()) {
            return Err(LabError::invalid("smoothing width must be positive"));
        }
    }
    Ok(())
}

/// `L(sym²f, s) = ζ(2s) Σ_d λ(d²) d^{−s}` for real `s > 1/2`.
pub fn sym2_value<S: HeckeSeries + ?Sized>(
    series: &S,
    s: f64,
    cutoff: u64,
    smoothing: Smoothing,
) -> Result<LValueReport> {
    if !(s > 0.5) {
        return Err(LabError::invalid(format!("s = {s} must exceed 1/2")));
    }
    if cutoff < 2 {
        return Err(LabError::invalid("cutoff must be >= 2"));
    }
    check_smoothing(smoothing)?;
    let sq = lambda_squares(series, cutoff)?;
    let z2s = zeta_real(2.0 * s)?;
    let full = dirichlet_sum(&sq, s, cutoff, smoothing);
    let coarse = match smoothing {
        Smoothing::Sharp => dirichlet_sum(&sq, s, cutoff / 2, smoothing),
        Smoothing::Exponential { width } => dirichlet_sum(
            &sq,
            s,
            cutoff,
            Smoothing::Exponential { width: width / 2.0 },
        ),
    };
    Ok(LValueReport {
        s: Complex64::new(s, 0.0),
        value: Complex64::new(z2s * full, 0.0),
        cutoff,
        smoothing,
        tail_estimate: (z2s * (full - coarse)).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum C1Method {
    /// `Σ_{d<=z} λ(d²)/d`.
    PartialSum { z: u64 },
    /// `(1/X) Σ_{m<=X} λ(m)²`.
    EmpiricalMean {
        #[serde(rename = "X")]
        x: u64,
    },
    /// `2S(W) − S(W/2)` with `S(W) = Σ_{d<=cutoff} λ(d²)/d · e^{−d/W}` and
    /// `W = cutoff/10`. The smoothed sum has an error `≈ C/W`, which the
    /// combination cancels.
    Smoothed { cutoff: u64 },
}

/// Estimate of `c₁ = L(sym²f, 1)/ζ(2)`.
pub fn c1<S: HeckeSeries + ?Sized>(series: &S, method: C1Method) -> Result<f64> {
    match method {
        C1Method::PartialSum { z } => {
            if z == 0 {
                return Err(LabError::invalid("z must be positive"));
            }
            sym2_dirichlet(series, 1.0, z, Smoothing::Sharp)
        }
        C1Method::EmpiricalMean { x } => {
            if x == 0 {
                return Err(LabError::invalid("X must be positive"));
            }
            if x > series.nmax() {
                return Err(LabError::range("empirical mean range X", x, series.nmax()));
            }
            Ok(sum_of_squares(series, x) / x as f64)
        }
        C1Method::Smoothed { cutoff } => {
            if cutoff < 10 {
                return Err(LabError::invalid("smoothed cutoff must be >= 10"));
            }
            let sq = lambda_squares(series, cutoff)?;
            let w = cutoff as f64 / 10.0;
            let wide = dirichlet_sum(&sq, 1.0, cutoff, Smoothing::Exponential { width: w });
            let narrow = dirichlet_sum(&sq, 1.0, cutoff, Smoothing::Exponential { width: w / 2.0 });
            Ok(2.0 * wide - narrow)
        }
    }
}

/// `Σ_{m<=X} λ(m)²`.
pub fn sum_of_squares<S: HeckeSeries + ?Sized>(series: &S, x: u64) -> f64 {
    let parts = par::map_chunks(x as usize, 1 << 14, |r| {
        csum(r.map(|i| {
            let l = series.lambda(i as u64 + 1);
            l * l
        }))
    });
    csum(parts)
}

/// Running sums `Σ_{m<=n} v(m)` for `n = 0..=len`, compensated.
fn prefix_sums(len: usize, v: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let mut acc = crate::numeric::CompensatedSum::new();
    out.push(0.0);
    for n in 1..=len {
        acc.add(v(n));
        out.push(acc.value());
    }
    out
}

/// For each grid point `g_i`, `max |err(n)|` over `g_{i−1} < n <= g_i`
/// (over `n <= g_0` for the first point).
fn envelope(grid: &[u64], err: impl Fn(u64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut prev = 0u64;
    for &g in grid {
        let lo = if prev == 0 { (g / 2).max(1) } else { prev + 1 };
        out.push((lo..=g).map(&err).fold(0.0, f64::max));
        prev = g;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSweep {
    pub grid: Vec<u64>,
    /// Envelope of the absolute error on each grid cell.
    pub envelope: Vec<f64>,
    /// Fit of `log envelope` against `log grid`.
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronReport {
    pub z: u64,
    pub c1_reference: f64,
    pub partial_sum: f64,
    pub remainder: f64,
    /// `α̂` in `remainder ≈ z^{−α̂}`, from the envelope sweep.
    pub alpha: f64,
    pub alpha_ci: (f64, f64),
    pub sweep: ExponentSweep,
}

/// `|Σ_{d<=z} λ(d²)/d − c₁|`.
pub fn perron_remainder<S: HeckeSeries + ?Sized>(
    series: &S,
    z: u64,
    c1_reference: f64,
) -> Result<f64> {
    Ok((c1(series, C1Method::PartialSum { z })? - c1_reference).abs())
}

/// Remainder at `z` and the fitted decay exponent over a log grid from
/// `z_lo` to `z`.
pub fn perron_sweep<S: HeckeSeries + ?Sized>(
    series: &S,
    z_lo: u64,
    z: u64,
    points: usize,
    c1_reference: f64,
) -> Result<PerronReport> {
    if z_lo < 1 || z_lo >= z || points < 3 {
        return Err(LabError::invalid(
            "sweep needs 1 <= z_lo < z and >= 3 points",
        ));
    }
    let sq = lambda_squares(series, z)?;
    let pre = prefix_sums(z as usize, |d| sq[d] / d as f64);
    let grid = log_grid(z_lo, z, points);
    let env = envelope(&grid, |n| (pre[n as usize] - c1_reference).abs());
    let xs: Vec<f64> = grid.iter().map(|&g| g as f64).collect();
    let fit = power_law_fit(&xs, &env, 0.95)?;
    Ok(PerronReport {
        z,
        c1_reference,
        partial_sum: pre[z as usize],
        remainder: (pre[z as usize] - c1_reference).abs(),
        alpha: -fit.slope,
        alpha_ci: (-fit.ci_high, -fit.ci_low),
        sweep: ExponentSweep {
            grid,
            envelope: env,
            fit,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankinSelbergReport {
    #[serde(rename = "X")]
    pub x: u64,
    pub sum: f64,
    pub c1: f64,
    /// `Σ_{m<=X} λ(m)²/(c₁X)`.
    pub ratio: f64,
    pub abs_error: f64,
    pub sweep: Option<ExponentSweep>,
}

/// Main-term ratio at `X`, and with `x_lo` given the fitted exponent of
/// `|Σ_{m<=X'} λ(m)² − c₁X'|` over a log grid on `[x_lo, X]`.
pub fn rankin_selberg_check<S: HeckeSeries + ?Sized>(
    series: &S,
    x: u64,
    c1_value: f64,
    sweep: Option<(u64, usize)>,
) -> Result<RankinSelbergReport> {
    if x == 0 {
        return Err(LabError::invalid("X must be positive"));
    }
    if x > series.nmax() {
        return Err(LabError::range("Rankin-Selberg range X", x, series.nmax()));
    }
    let pre = prefix_sums(x as usize, |m| {
        let l = series.lambda(m as u64);
        l * l
    });
    let sum = pre[x as usize];
    let sweep = match sweep {
        None => None,
        Some((x_lo, points)) => {
            if x_lo == 0 || x_lo >= x || points < 3 {
                return Err(LabError::invalid(
                    "sweep needs 1 <= X_lo < X and >= 3 points",
                ));
            }
            let grid = log_grid(x_lo, x, points);
            let env = envelope(&grid, |n| (pre[n as usize] - c1_value * n as f64).abs());
            let xs: Vec<f64> = grid.iter().map(|&g| g as f64).collect();
            let fit = power_law_fit(&xs, &env, 0.95)?;
            Some(ExponentSweep {
                grid,
                envelope: env,
                fit,
            })
        }
    };
    Ok(RankinSelbergReport {
        x,
        sum,
        c1: c1_value,
        ratio: sum / (c1_value * x as f64),
        abs_error: (sum - c1_value * x as f64).abs(),
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zeta_closed_forms() {
        assert!((zeta_real(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta_real(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta_real(0.0).unwrap() + 0.5).abs() < 1e-13);
        assert!((zeta_real(-0.5).unwrap() + 0.207_886_224_977_354_6).abs() < 1e-12);
        assert!(zeta(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn zeta_first_zero() {
        let rho = Complex64::new(0.5, 14.134_725_141_734_693);
        assert!(zeta(rho).unwrap().norm() < 1e-12);
    }

    #[test]
    fn bernoulli_ratios() {
        let t = bernoulli_over_factorial();
        assert!((t[0] - 1.0 / 12.0).abs() < 1e-17);
        assert!((t[1] + 1.0 / 720.0).abs() < 1e-18);
        assert!((t[5] + 691.0 / 1_307_674_368_000.0).abs() < 1e-25);
    }
}
