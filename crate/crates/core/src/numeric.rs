//! Small numerical toolkit shared by the lab modules: compensated summation,
//! least-squares exponent fits and Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LabError, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// Compensated complex sum, in iteration order.
pub fn csum_complex<I: IntoIterator<Item = Complex64>>(iter: I) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for z in iter {
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Ordinary least squares fit `y = intercept + slope * x` with a two-sided
/// Student-t confidence interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn ci_contains_at_most(&self, value: f64) -> bool {
        self.ci_low <= value
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64], confidence: f64) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(LabError::invalid(
            "linear fit needs at least three paired points",
        ));
    }
    let nf = n as f64;
    let mx = csum(xs.iter().copied()) / nf;
    let my = csum(ys.iter().copied()) / nf;
    let sxx = csum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = csum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    if sxx <= 0.0 {
        return Err(LabError::invalid("linear fit abscissae are degenerate"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = csum(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2)),
    );
    let dof = nf - 2.0;
    let slope_stderr = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| LabError::invalid(format!("student-t: {e}")))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        ci_low: slope - t * slope_stderr,
        ci_high: slope + t * slope_stderr,
        confidence,
        points: n,
    })
}

/// Fit `log y = c + alpha log x`; returns the fit of the exponent.
pub fn power_law_fit(xs: &[f64], ys: &[f64], confidence: f64) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(LabError::invalid(
            "power-law fit needs strictly positive data",
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly, confidence)
}

/// Roughly log-spaced integer grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    assert!(lo >= 1 && hi >= lo && points >= 2);
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|v| v.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7/15 panel: (Kronrod value, |Kronrod - Gauss|).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: Complex64,
    pub error_estimate: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of a complex integrand over
/// `[a, b]`, starting from `initial_panels` equal panels. Fails with the
/// residual estimate when `max_panels` is reached before `tol` (absolute).
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    initial_panels: usize,
    max_panels: usize,
) -> Result<Quadrature> {
    let n0 = initial_panels.max(1);
    let w = (b - a) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(2 * n0);
    for i in 0..n0 {
        let lo = a + w * i as f64;
        let hi = if i + 1 == n0 { b } else { lo + w };
        let (value, err) = gk15(&f, lo, hi);
        heap.push(Panel {
            a: lo,
            b: hi,
            value,
            err,
        });
    }
    // Running total, refreshed exactly whenever it claims convergence.
    let mut err: f64 = csum(heap.iter().map(|p| p.err));
    loop {
        if err <= tol {
            err = csum(heap.iter().map(|p| p.err));
            if err <= tol {
                break;
            }
        }
        if heap.len() >= max_panels {
            return Err(LabError::Quadrature {
                residual: err,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty panel heap");
        err -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, e) = gk15(&f, lo, hi);
            err += e;
            heap.push(Panel {
                a: lo,
                b: hi,
                value,
                err: e,
            });
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(Quadrature {
        value: csum_complex(panels.iter().map(|p| p.value)),
        error_estimate: csum(panels.iter().map(|p| p.err)),
        panels: panels.len(),
    })
}

/// Real-valued convenience wrapper around [`integrate_adaptive`].
pub fn integrate_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    initial_panels: usize,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let q = integrate_adaptive(
        |x| Complex64::new(f(x), 0.0),
        a,
        b,
        tol,
        initial_panels,
        max_panels,
    )?;
    Ok((q.value.re, q.error_estimate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0e16, 1.0, -1.0e16];
        v.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(csum(v), 11.0);
    }

    #[test]
    fn fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let fit = linear_fit(&xs, &ys, 0.95).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.ci_high - fit.ci_low < 1e-9);
    }

    #[test]
    fn quadrature_of_gaussian() {
        let (v, err) = integrate_real(|x| (-x * x).exp(), -10.0, 10.0, 1e-12, 4, 200).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12, "{v} {err}");
    }

    #[test]
    fn quadrature_reports_non_convergence() {
        let r = integrate_real(|x| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-14, 1, 8);
        assert!(matches!(r, Err(LabError::Quadrature { .. })));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(100, 10_000, 5);
        assert_eq!(g, vec![100, 316, 1000, 3162, 10_000]);
    }
}
