//! Short-interval sums of `λ(m)²`, their variance over `x ∈ [X, 2X]`, the
//! split of `S(x, H) − c₁H` at a divisor cutoff `z`, and the sin-kernel sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{divisors, mobius};
use crate::error::{LabError, Result};
use crate::numeric::{csum, CompensatedSum};
use crate::par;
use crate::qmodforms::{lambda_squares, HeckeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Sampling {
    /// `x_i = X + ⌊iX/samples⌋`; with `samples = X` this is every integer in `[X, 2X)`.
    Grid,
    /// Uniform reals in `[X, 2X)` from a ChaCha8 stream.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarianceConfig {
    #[serde(rename = "X")]
    pub x: u64,
    #[serde(rename = "H")]
    pub h: u64,
    pub z: u64,
    pub samples: u64,
    pub sampling: Sampling,
}

impl VarianceConfig {
    /// Grid sampling with `z = H²`.
    pub fn new(x: u64, h: u64, samples: u64) -> Self {
        VarianceConfig {
            x,
            h,
            z: (h * h).max(1),
            samples,
            sampling: Sampling::Grid,
        }
    }

    pub fn with_z(mut self, z: u64) -> Self {
        self.z = z;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    /// `H = 0` is admitted as a degenerate empty interval.
    pub fn validate(&self) -> Result<()> {
        if self.x == 0 {
            return Err(LabError::invalid("X must be positive"));
        }
        if self.h > self.x {
            return Err(LabError::invalid(format!(
                "H = {} exceeds X = {}",
                self.h, self.x
            )));
        }
        if self.z == 0 || self.z < self.h {
            return Err(LabError::invalid(format!(
                "z = {} must be >= max(H, 1)",
                self.z
            )));
        }
        if self.samples == 0 {
            return Err(LabError::invalid("samples must be >= 1"));
        }
        Ok(())
    }

    /// Sample points in `[X, 2X)`, generated sequentially.
    pub fn sample_points(&self) -> Vec<f64> {
        let (x, s) = (self.x as u128, self.samples as u128);
        match self.sampling {
            Sampling::Grid => (0..s).map(|i| (x + i * x / s) as f64).collect(),
            Sampling::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let lo = self.x as f64;
                (0..s).map(|_| lo + rng.gen::<f64>() * lo).collect()
            }
        }
    }
}

fn floor_u64(x: f64) -> Result<u64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(LabError::invalid(format!(
            "x = {x} must be finite and non-negative"
        )));
    }
    Ok(x.floor() as u64)
}

/// `Σ_{x<m<=x+H} λ(m)²`.
pub fn short_interval_sum<S: HeckeSeries + ?Sized>(series: &S, x: f64, h: u64) -> Result<f64> {
    let lo = floor_u64(x)?;
    let hi = floor_u64(x + h as f64)?;
    if hi > series.nmax() {
        return Err(LabError::range("short interval end x+H", hi, series.nmax()));
    }
    Ok(csum((lo + 1..=hi).map(|m| {
        let l = series.lambda(m);
        l * l
    })))
}

/// Sawtooth `x − ⌊x⌋ − 1/2`.
pub fn psi(x: f64) -> f64 {
    x - x.floor() - 0.5
}

/// `−(1/π) Σ_{n<=N} sin(2πnx)/n`, the symmetric truncation of the Fourier
/// series of [`psi`].
pub fn psi_truncated(x: f64, n: u64) -> f64 {
    let frac = x - x.floor();
    let s = csum((1..=n).map(|k| {
        let t = (k as f64 * frac).fract();
        (2.0 * std::f64::consts::PI * t).sin() / k as f64
    }));
    -s / std::f64::consts::PI
}

/// Distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// `max |psi_truncated(x, N) − psi(x)| · max(1, N‖x‖)` over `points`
/// equally spaced `x` in `(0, 1)`, skipping the discontinuity at 0.
pub fn psi_envelope_constant(n: u64, points: usize) -> f64 {
    let vals = par::map_indexed(points, |i| {
        let x = (i as f64 + 0.5) / points as f64;
        let err = (psi_truncated(x, n) - psi(x)).abs();
        err * (n as f64 * dist_to_int(x)).max(1.0)
    });
    vals.into_iter().fold(0.0, f64::max)
}

/// 1 iff `⌊x/d⌋ + 1 = ⌊(x+H)/d⌋`.
pub fn large_d_indicator(x: f64, h: u64, d: u64) -> u8 {
    assert!(d >= 1, "d must be positive");
    let d = d as f64;
    u8::from((x / d).floor() + 1.0 == ((x + h as f64) / d).floor())
}

/// Integer version of [`large_d_indicator`].
pub fn large_d_indicator_int(x: u64, h: u64, d: u64) -> u8 {
    assert!(d >= 1, "d must be positive");
    u8::from(x / d + 1 == (x + h) / d)
}

/// Number of `b ∈ [a, a+d)` with indicator 1.
pub fn large_d_window_count(a: u64, h: u64, d: u64) -> u64 {
    (a..a + d)
        .map(|b| large_d_indicator_int(b, h, d) as u64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub x: f64,
    /// `S(x, H)`.
    pub s: f64,
    pub small_d: f64,
    pub large_d: f64,
    pub tail: f64,
    pub total: f64,
}

impl DecompositionReport {
    /// `small_d + large_d − tail − total`.
    pub fn residual(&self) -> f64 {
        self.small_d + self.large_d - self.tail - self.total
    }

    pub fn reconstructs(&self, rel: f64) -> bool {
        self.residual().abs() <= rel * (1.0 + self.total.abs())
    }
}

/// Precomputed `λ(d²)` for `d <= z` so many `x` can be decomposed cheaply.
///
/// With `λ(m)² = Σ_{d|m} λ(d²)`,
/// `S(x,H) = Σ_d λ(d²)(⌊(x+H)/d⌋ − ⌊x/d⌋)`. Splitting at `z`:
/// `small_d = Σ_{d<=z} λ(d²)(⌊(x+H)/d⌋ − ⌊x/d⌋ − H/d)`,
/// `large_d = Σ_{d>z} λ(d²)(⌊(x+H)/d⌋ − ⌊x/d⌋)`,
/// `tail = H(c₁ − Σ_{d<=z} λ(d²)/d)`, and `S − c₁H = small_d + large_d − tail`.
pub struct Decomposer<'a, S: HeckeSeries + ?Sized> {
    series: &'a S,
    h: u64,
    z: u64,
    c1: f64,
    sq: Vec<f64>,
    partial: f64,
}

impl<'a, S: HeckeSeries + ?Sized> Decomposer<'a, S> {
    pub fn new(series: &'a S, h: u64, z: u64, c1: f64) -> Result<Self> {
        if z == 0 {
            return Err(LabError::invalid("z must be positive"));
        }
        let sq = lambda_squares(series, z)?;
        let partial = csum((1..=z as usize).map(|d| sq[d] / d as f64));
        Ok(Decomposer {
            series,
            h,
            z,
            c1,
            sq,
            partial,
        })
    }

    /// `Σ_{d<=z} λ(d²)/d`.
    pub fn partial_sum(&self) -> f64 {
        self.partial
    }

    pub fn at(&self, x: f64) -> Result<DecompositionReport> {
        let (h, z) = (self.h, self.z);
        let lo = floor_u64(x)?;
        let hi = floor_u64(x + h as f64)?;
        let s = short_interval_sum(self.series, x, h)?;
        let hf = h as f64;
        let mut small = CompensatedSum::new();
        for d in 1..=z {
            let cnt = (hi / d - lo / d) as f64;
            small.add(self.sq[d as usize] * (cnt - hf / d as f64));
        }
        let mut large = CompensatedSum::new();
        if hi > z {
            for m in (lo + 1).max(z + 1)..=hi {
                for d in divisors(m) {
                    if d > z {
                        large.add(self.series.lambda_square(d)?);
                    }
                }
            }
        }
        Ok(DecompositionReport {
            x,
            s,
            small_d: small.value(),
            large_d: large.value(),
            tail: hf * (self.c1 - self.partial),
            total: s - self.c1 * hf,
        })
    }
}

/// One-shot decomposition at `x` under `config` (the `H` and `z` fields).
pub fn decompose<S: HeckeSeries + ?Sized>(
    series: &S,
    config: &VarianceConfig,
    c1: f64,
    x: f64,
) -> Result<DecompositionReport> {
    config.validate()?;
    let (lo, hi) = (config.x as f64, 2.0 * config.x as f64);
    if !(lo..=hi).contains(&x) {
        return Err(LabError::invalid(format!("x = {x} outside [{lo}, {hi}]")));
    }
    Decomposer::new(series, config.h, config.z, c1)?.at(x)
}

/// Decomposition at every sample point of `config`, in sample order.
pub fn decompose_samples<S: HeckeSeries + ?Sized>(
    series: &S,
    config: &VarianceConfig,
    c1: f64,
) -> Result<Vec<DecompositionReport>> {
    config.validate()?;
    need_range(series, config)?;
    let dec = Decomposer::new(series, config.h, config.z, c1)?;
    let xs = config.sample_points();
    par::map_slice(&xs, |&x| dec.at(x)).into_iter().collect()
}

fn need_range<S: HeckeSeries + ?Sized>(series: &S, config: &VarianceConfig) -> Result<()> {
    let need = 2 * config.x + config.h;
    if need > series.nmax() {
        return Err(LabError::range("2X + H", need, series.nmax()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    /// Mean of `(S(x,H) − c₁H)²` over the sample points.
    pub statistic: f64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: u64,
}

/// `(1/X) ∫_X^{2X} (S(x,H) − c₁H)² dx` estimated over the sample points.
pub fn variance_statistic<S: HeckeSeries + ?Sized>(
    series: &S,
    config: &VarianceConfig,
    c1: f64,
) -> Result<VarianceEstimate> {
    config.validate()?;
    need_range(series, config)?;
    let xs = config.sample_points();
    let h = config.h;
    let sq: Vec<Result<f64>> = par::map_slice(&xs, |&x| {
        let t = short_interval_sum(series, x, h)? - c1 * h as f64;
        Ok(t * t)
    });
    let sq: Vec<f64> = sq.into_iter().collect::<Result<_>>()?;
    Ok(summarize(&sq))
}

pub(crate) fn summarize(values: &[f64]) -> VarianceEstimate {
    let n = values.len() as f64;
    let mean = csum(values.iter().copied()) / n;
    let std_error = if values.len() > 1 {
        let var = csum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    VarianceEstimate {
        statistic: mean,
        std_error,
        samples: values.len() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinKernelReport {
    pub z: u64,
    #[serde(rename = "H")]
    pub h: u64,
    pub lambda_max: u64,
    /// The truncated sum over `λ <= lambda_max`.
    pub value: f64,
    /// The same sum with the `λ`-series summed to infinity in closed form.
    pub value_untruncated: f64,
    /// `Σ_{λ>lambda_max} 1/λ²`, the per-term truncation envelope.
    pub lambda_tail_bound: f64,
    /// Smallest coefficient `c(D)` in the representation `Σ_D c(D) T(D)²`.
    pub min_square_coefficient: f64,
}

/// `Σ_{d₁,d₂<=z} a(d₁)a(d₂) f((d₁,d₂))` for `a, f` indexed `0..=z` (slot 0
/// unused), evaluated as `Σ_D c(D) T(D)²` with `T(D) = Σ_{j<=z/D} a(Dj)`
/// and `c = μ * f`. Returns the value and the coefficients `c(D)`.
pub fn gcd_form(a: &[f64], f: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(a.len(), f.len());
    let zu = a.len() - 1;
    let mu: Vec<i8> = (0..=zu)
        .map(|r| if r == 0 { 0 } else { mobius(r as u64) })
        .collect();
    let mut c = vec![CompensatedSum::new(); zu + 1];
    for g in 1..=zu {
        if f[g] == 0.0 {
            continue;
        }
        for r in 1..=zu / g {
            if mu[r] != 0 {
                c[g * r].add(mu[r] as f64 * f[g]);
            }
        }
    }
    let c: Vec<f64> = c.iter().map(|s| s.value()).collect();
    let t: Vec<f64> = par::map_indexed(zu + 1, |d| {
        if d == 0 {
            0.0
        } else {
            csum((1..=zu / d).map(|j| a[d * j]))
        }
    });
    let value = csum((1..=zu).map(|d| c[d] * t[d] * t[d]));
    (value, c)
}

/// `K_L(g) = Σ_{λ<=L} sin²(πλH/g)/λ²`, reducing `λH mod g` exactly.
fn kernel_truncated(g: u64, h: u64, l_max: u64) -> f64 {
    let step = h % g;
    if step == 0 {
        return 0.0;
    }
    let mut r = 0u64;
    let mut acc = CompensatedSum::new();
    for l in 1..=l_max {
        r = (r + step) % g;
        let s = (std::f64::consts::PI * r as f64 / g as f64).sin();
        acc.add(s * s / (l as f64 * l as f64));
    }
    acc.value()
}

/// `Σ_{λ>=1} sin²(πλθ)/λ² = (π²/2)θ(1−θ)` for `θ = {H/g}`.
fn kernel_limit(g: u64, h: u64) -> f64 {
    let theta = (h % g) as f64 / g as f64;
    0.5 * std::f64::consts::PI.powi(2) * theta * (1.0 - theta)
}

/// `Σ_{λ>L} 1/λ²` via the Euler–Maclaurin tail.
fn inverse_square_tail(l: u64) -> f64 {
    let l = l as f64;
    1.0 / l - 1.0 / (2.0 * l * l) + 1.0 / (6.0 * l * l * l)
}

/// `Σ_{d₁,d₂<=z} λ(d₁²)λ(d₂²) Σ_{0<λ<=L} g²/(d₁d₂λ²) sin²(λπH/g)` with
/// `g = (d₁, d₂)`.
///
/// With `a(d) = λ(d²)/d` this is [`gcd_form`] with `f(g) = g² K_L(g)`.
pub fn sin_kernel_sum<S: HeckeSeries + ?Sized>(
    series: &S,
    z: u64,
    h: u64,
    lambda_max: u64,
) -> Result<SinKernelReport> {
    if z == 0 || lambda_max == 0 {
        return Err(LabError::invalid("z and lambda_max must be positive"));
    }
    let sq = lambda_squares(series, z)?;
    let zu = z as usize;
    let a: Vec<f64> = (0..=zu)
        .map(|d| if d == 0 { 0.0 } else { sq[d] / d as f64 })
        .collect();
    let k_trunc = par::map_indexed(zu + 1, |g| {
        if g == 0 {
            0.0
        } else {
            (g * g) as f64 * kernel_truncated(g as u64, h, lambda_max)
        }
    });
    let k_lim: Vec<f64> = (0..=zu)
        .map(|g| {
            if g == 0 {
                0.0
            } else {
                (g * g) as f64 * kernel_limit(g as u64, h)
            }
        })
        .collect();
    let (value, c_trunc) = gcd_form(&a, &k_trunc);
    let (value_untruncated, _) = gcd_form(&a, &k_lim);
    let min_square_coefficient = c_trunc[1..].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SinKernelReport {
        z,
        h,
        lambda_max,
        value,
        value_untruncated,
        lambda_tail_bound: inverse_square_tail(lambda_max),
        min_square_coefficient,
    })
}
