//! Selberg's majorant of `1_{[1,2]}` built from Beurling's function, and the
//! smoothed sinc window `W` with its Mellin-type transform `ĝ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::{integrate_adaptive, integrate_real, Quadrature};
use crate::par;
use crate::qmodforms::{lambda_squares, HeckeSeries};
use crate::variancelab::gcd_form;

/// Trigamma `ψ₁(x)` for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma needs x > 0");
    let mut acc = 0.0;
    let mut x = x;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    acc + r + r * r * 0.5 + trigamma_tail(r)
}

/// Terms from `r³` onward of the asymptotic series of `ψ₁(1/r)`.
fn trigamma_tail(r: f64) -> f64 {
    let r2 = r * r;
    r2 * r
        * (1.0 / 6.0
            + r2 * (-1.0 / 30.0
                + r2 * (1.0 / 42.0
                    + r2 * (-1.0 / 30.0
                        + r2 * (5.0 / 66.0 + r2 * (-691.0 / 2730.0 + r2 * 7.0 / 6.0))))))
}

/// `1/x − ψ₁(1 + x)` for `x > 0`, without cancellation for large `x`.
fn gap_pos(x: f64) -> f64 {
    if x < 10.0 {
        1.0 / x - trigamma(1.0 + x)
    } else {
        // ψ₁(1+x) = ψ₁(x) − 1/x².
        let r = 1.0 / x;
        r * r * 0.5 - trigamma_tail(r)
    }
}

/// `ψ₁(y) − 1/y` for `y > 0`.
fn gap_neg(y: f64) -> f64 {
    if y < 10.0 {
        trigamma(y) - 1.0 / y
    } else {
        let r = 1.0 / y;
        r * r * 0.5 + trigamma_tail(r)
    }
}

/// Beurling's entire majorant of `sgn`, with `B(0) = 1`.
pub fn beurling(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let s = (PI * x).sin();
    let s2 = s * s / (PI * PI);
    if x > 0.0 {
        1.0 + 2.0 * s2 * gap_pos(x)
    } else {
        -1.0 + 2.0 * s2 * gap_neg(-x)
    }
}

/// `B(u) − sgn(u) − sinc²(u)`, which decays like `|u|^{-3}`.
fn beurling_remainder(u: f64) -> f64 {
    if u == 0.0 {
        return -1.0;
    }
    let s = (PI * u).sin();
    let s2 = s * s / (PI * PI);
    let g = if u > 0.0 { gap_pos(u) } else { gap_neg(-u) };
    s2 * (2.0 * g - 1.0 / (u * u))
}

/// `max(1 − |t|, 0)`, the transform of `sinc²`.
fn fejer_hat(t: f64) -> f64 {
    (1.0 - t.abs()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantSpec {
    pub delta: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "H")]
    pub h: u64,
    pub eps: f64,
}

impl MajorantSpec {
    /// `delta = B·H^{ε/2}`. `B >= 1` is required so that `∫σ <= 1 + H^{−ε/2}`.
    pub fn new(b: f64, h: u64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(LabError::invalid(format!("eps = {eps} outside (0, 1)")));
        }
        if h == 0 {
            return Err(LabError::invalid("H must be positive"));
        }
        if !(b >= 1.0 && b.is_finite()) {
            return Err(LabError::invalid(format!("B = {b} must be >= 1")));
        }
        let delta = b * (h as f64).powf(eps / 2.0);
        Ok(MajorantSpec { delta, b, h, eps })
    }

    /// The spec with `H = 1`, so `delta = B`.
    pub fn with_delta(delta: f64) -> Result<Self> {
        Self::new(delta, 1, 0.5)
    }
}

/// Evaluators for `σ(x) = ½[B(δ(x−1)) + B(δ(2−x))]`.
#[derive(Debug, Clone, Copy)]
pub struct SelbergMajorant {
    pub spec: MajorantSpec,
}

pub fn selberg_majorant(spec: MajorantSpec) -> Result<SelbergMajorant> {
    if !(spec.delta >= 1.0 && spec.delta.is_finite()) {
        return Err(LabError::invalid(format!(
            "delta = {} must be >= 1",
            spec.delta
        )));
    }
    Ok(SelbergMajorant { spec })
}

impl SelbergMajorant {
    pub fn delta(&self) -> f64 {
        self.spec.delta
    }

    pub fn sigma(&self, x: f64) -> f64 {
        let d = self.spec.delta;
        0.5 * (beurling(d * (x - 1.0)) + beurling(d * (2.0 - x)))
    }

    /// `1 + 1/δ`.
    pub fn integral_exact(&self) -> f64 {
        1.0 + 1.0 / self.spec.delta
    }

    /// `∫σ` by quadrature over `[−R, R]` plus the mean of the `sinc²`
    /// tails beyond `R`.
    pub fn integral_numeric(&self) -> Result<f64> {
        let d = self.spec.delta;
        let r = (2.0e4 / d).max(50.0);
        let panels = (4.0 * d * 2.0 * r) as usize;
        let f = |x: f64| self.sigma(x);
        let pieces: Vec<Result<(f64, f64)>> =
            par::map_slice(&[(-r, 1.0), (1.0, 2.0), (2.0, r)], |&(a, b)| {
                let n = ((b - a) / (2.0 * r) * panels as f64) as usize + 4;
                integrate_real(f, a, b, 1e-10, n, 50 * n)
            });
        let mut total = 0.0;
        for p in pieces {
            total += p?.0;
        }
        let tail = (1.0 / (r - 1.0) + 1.0 / (r - 2.0) + 1.0 / (r + 1.0) + 1.0 / (r + 2.0))
            / (4.0 * PI * PI * d * d);
        Ok(total + tail)
    }

    /// `σ̂(ξ) = ∫σ(x)e(−xξ)dx`; zero for `|ξ| >= δ`, quadrature inside.
    pub fn sigma_hat(&self, xi: f64) -> Result<Complex64> {
        if xi.abs() >= self.spec.delta {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.sigma_hat_numeric(xi)
    }

    /// `σ̂(ξ)` computed at every `ξ` from
    /// `σ = 1_{[1,2]} + ½[E(δ(x−1)) + E(δ(2−x))]`, `E = B − sgn`. The
    /// indicator and the `sinc²` part of `E` are transformed in closed form
    /// and the remainder `E − sinc²` by quadrature.
    pub fn sigma_hat_numeric(&self, xi: f64) -> Result<Complex64> {
        let d = self.spec.delta;
        let t = xi / d;
        let e = |a: f64| Complex64::from_polar(1.0, -2.0 * PI * a * xi);
        let indicator = if xi == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            (e(1.0) - e(2.0)) / Complex64::new(0.0, 2.0 * PI * xi)
        };
        let rem_pos = remainder_hat(t)?;
        let rem_neg = remainder_hat(-t)?;
        let hat_pos = rem_pos + fejer_hat(t);
        let hat_neg = rem_neg + fejer_hat(t);
        Ok(indicator + (e(1.0) * hat_pos + e(2.0) * hat_neg) / (2.0 * d))
    }
}

/// Fourier transform at `t` of `B − sgn − sinc²` by quadrature on
/// `[−R, 0]` and `[0, R]`; the neglected tails are `O(R^{-3})`.
fn remainder_hat(t: f64) -> Result<Complex64> {
    const R: f64 = 2000.0;
    let f = |u: f64| Complex64::from_polar(beurling_remainder(u), -2.0 * PI * u * t);
    let panels = (R * 2.0 * (1.0 + t.abs())) as usize;
    let left = integrate_adaptive(f, -R, 0.0, 1e-12, panels, 40 * panels)?;
    let right = integrate_adaptive(f, 0.0, R, 1e-12, panels, 40 * panels)?;
    Ok(left.value + right.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    #[serde(rename = "H")]
    pub h: u64,
    pub eps: f64,
}

impl WindowSpec {
    pub fn new(h: u64, eps: f64) -> Result<Self> {
        if h == 0 || !(eps > 0.0 && eps < 1.0) {
            return Err(LabError::invalid("window needs H >= 1 and eps in (0, 1)"));
        }
        Ok(WindowSpec { h, eps })
    }

    /// Plateau half-width `H^{ε/4}`.
    pub fn scale(&self) -> f64 {
        (self.h as f64).powf(self.eps / 4.0)
    }
}

fn junction(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth even bump: 1 on `|x| <= 1`, 0 on `|x| >= 2`, monotone between.
pub fn bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let p = junction(2.0 - a);
        p / (p + junction(a - 1.0))
    }
}

pub fn sinc(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        (PI * y).sin() / (PI * y)
    }
}

/// `W(y) = sinc(y)·h(y/H^{ε/4})`.
pub fn window_w(spec: &WindowSpec, y: f64) -> f64 {
    sinc(y) * bump(y / spec.scale())
}

/// `ĝ(ξ) = ∫₀^∞ |W(y)|² y^{−2πiξ} dy`, computed as `∫ g(u)e(−uξ) du` with
/// `g(u) = W(e^u)²e^u` over `u ∈ [−40, log(2H^{ε/4})]`.
pub fn g_transform(spec: &WindowSpec, xi: f64) -> Result<Quadrature> {
    let top = (2.0 * spec.scale()).ln();
    let lo = -40.0;
    let f = |u: f64| {
        let y = u.exp();
        let w = window_w(spec, y);
        Complex64::from_polar(w * w * y, -2.0 * PI * u * xi)
    };
    let panels = 64 + (4.0 * (top - lo) * xi.abs()) as usize;
    integrate_adaptive(f, lo, top, 1e-8, panels, 200 * panels)
}

/// `max |ĝ(ξ)|(|ξ|+1)³/H^{2ε}` over the given `ξ`.
pub fn g_decay_constant(spec: &WindowSpec, xis: &[f64]) -> Result<f64> {
    let vals: Vec<Result<f64>> = par::map_slice(xis, |&xi| {
        let q = g_transform(spec, xi)?;
        Ok(q.value.norm() * (xi.abs() + 1.0).powi(3) / (spec.h as f64).powf(2.0 * spec.eps))
    });
    let mut m: f64 = 0.0;
    for v in vals {
        m = m.max(v?);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowGapReport {
    pub z: u64,
    #[serde(rename = "H")]
    pub h: u64,
    pub eps: f64,
    /// `Σ |λ(d₁²)λ(d₂²)| g²/(d₁d₂) Σ_{λ>=1, Hλ/g >= H^{ε/4}} 1/λ²`.
    pub gap: f64,
    /// The signed change from replacing `sin²(πλH/g)` by
    /// `sin²(πλH/g)·h(λH/(gH^{ε/4}))²` in the sin-kernel sum.
    pub replacement: f64,
}

/// `Σ_{λ>=1, λH/g >= s} sin²(πλH/g)(1 − h(λH/(gs))²)/λ²`, `s = H^{ε/4}`,
/// using the closed form of the full sum and subtracting the finitely many
/// terms where the bump is non-zero.
fn replaced_kernel(g: u64, h: u64, s: f64) -> f64 {
    let theta = (h % g) as f64 / g as f64;
    let full = 0.5 * PI * PI * theta * (1.0 - theta);
    let ratio = h as f64 / g as f64;
    let mut kept = 0.0;
    let mut l = 1u64;
    loop {
        let u = l as f64 * ratio;
        if u >= 2.0 * s {
            break;
        }
        let sn = (PI * ((l * h) % g) as f64 / g as f64).sin();
        let b = bump(u / s);
        kept += sn * sn * b * b / (l as f64 * l as f64);
        l += 1;
    }
    full - kept
}

/// Gap and exact replacement error between the `sin²` kernel and its
/// windowed version, summed over `d₁, d₂ <= z`.
pub fn kernel_window_gap<S: HeckeSeries + ?Sized>(
    series: &S,
    z: u64,
    window: &WindowSpec,
) -> Result<WindowGapReport> {
    if z == 0 {
        return Err(LabError::invalid("z must be positive"));
    }
    let sq = lambda_squares(series, z)?;
    let zu = z as usize;
    let s = window.scale();
    let h = window.h;
    let a: Vec<f64> = (0..=zu)
        .map(|d| if d == 0 { 0.0 } else { sq[d] / d as f64 })
        .collect();
    let abs_a: Vec<f64> = a.iter().map(|v| v.abs()).collect();
    let f_gap: Vec<f64> = (0..=zu)
        .map(|g| {
            if g == 0 {
                return 0.0;
            }
            let l0 = ((g as f64 * s) / h as f64).ceil().max(1.0);
            (g * g) as f64 * trigamma(l0)
        })
        .collect();
    let f_repl = par::map_indexed(zu + 1, |g| {
        if g == 0 {
            0.0
        } else {
            (g * g) as f64 * replaced_kernel(g as u64, h, s)
        }
    });
    let (gap, _) = gcd_form(&abs_a, &f_gap);
    let (replacement, _) = gcd_form(&a, &f_repl);
    Ok(WindowGapReport {
        z,
        h,
        eps: window.eps,
        gap,
        replacement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSuiteReport {
    pub spec: MajorantSpec,
    pub grid_points: usize,
    /// `min (σ − 1_{[1,2]})` over the grid on `[−1, 4]`.
    pub min_excess: f64,
    pub integral_numeric: f64,
    pub integral_target: f64,
    pub integral_error: f64,
    /// `(ξ, |σ̂(ξ)|)` at probes with `|ξ| > δ`, by quadrature.
    pub outside_support: Vec<(f64, f64)>,
    pub max_outside: f64,
    pub window: WindowSpec,
    /// Points on the plateau where `W(y) != sinc(y)` bit for bit.
    pub plateau_mismatches: usize,
    pub passed: bool,
}

/// Domination on a grid, total mass, vanishing of `σ̂` off `[−δ, δ]` at
/// `probes` points, and the `W` plateau identity.
pub fn majorant_suite(
    spec: MajorantSpec,
    window: WindowSpec,
    grid_points: usize,
    probes: usize,
) -> Result<MajorantSuiteReport> {
    if grid_points < 2 || probes == 0 {
        return Err(LabError::invalid("need >= 2 grid points and >= 1 probe"));
    }
    let m = selberg_majorant(spec)?;
    let (lo, hi) = (-1.0, 4.0);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let excess = par::map_chunks(grid_points, 4096, |r| {
        r.map(|i| {
            let x = lo + i as f64 * step;
            let ind = if (1.0..=2.0).contains(&x) { 1.0 } else { 0.0 };
            m.sigma(x) - ind
        })
        .fold(f64::INFINITY, f64::min)
    });
    let min_excess = excess.into_iter().fold(f64::INFINITY, f64::min);
    let integral_numeric = m.integral_numeric()?;
    let integral_target = 1.0 + 1.0 / spec.delta;
    let xis: Vec<f64> = (0..probes)
        .map(|i| {
            let mag = spec.delta * (1.05 + 0.25 * (i / 2) as f64);
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let hats: Vec<Result<f64>> = par::map_slice(&xis, |&xi| Ok(m.sigma_hat_numeric(xi)?.norm()));
    let mut outside_support = Vec::with_capacity(probes);
    for (xi, h) in xis.iter().zip(hats) {
        outside_support.push((*xi, h?));
    }
    let max_outside = outside_support.iter().map(|p| p.1).fold(0.0, f64::max);
    let s = window.scale();
    let plateau_mismatches = (0..=2000)
        .map(|i| -s + 2.0 * s * i as f64 / 2000.0)
        .filter(|&y| window_w(&window, y) != sinc(y))
        .count();
    let integral_error = (integral_numeric - integral_target).abs();
    let passed = min_excess >= 0.0
        && integral_error <= 1e-6
        && max_outside <= 1e-9
        && plateau_mismatches == 0;
    Ok(MajorantSuiteReport {
        spec,
        grid_points,
        min_excess,
        integral_numeric,
        integral_target,
        integral_error,
        outside_support,
        max_outside,
        window,
        plateau_mismatches,
        passed,
    })
}
