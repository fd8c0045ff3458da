//! Reading, writing and validating tabulated Hecke–Maass coefficients, and
//! the weighted family variance statistic.

use std::fs;
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{divisors, factorize, primes_up_to, tau};
use crate::error::{LabError, Result};
use crate::lfunc::{sym2_dirichlet, Smoothing};
use crate::numeric::csum;
use crate::par;
use crate::qmodforms::HeckeSeries;
use crate::variancelab::{variance_statistic, VarianceConfig};

/// Kim–Sarnak exponent.
pub const KIM_SARNAK: f64 = 7.0 / 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaassForm {
    pub t_j: f64,
    pub source_id: String,
    /// `λ(0..=nmax)`, slot 0 unused.
    lambda: Vec<f64>,
}

impl MaassForm {
    /// `values[i] = λ(i + 1)`.
    pub fn new(t_j: f64, source_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if !(t_j > 0.0 && t_j.is_finite()) {
            return Err(LabError::invalid(format!("t_j = {t_j} must be positive")));
        }
        if values.is_empty() {
            return Err(LabError::invalid("missing λ(1)"));
        }
        let mut lambda = Vec::with_capacity(values.len() + 1);
        lambda.push(0.0);
        lambda.extend(values);
        Ok(MaassForm {
            t_j,
            source_id: source_id.into(),
            lambda,
        })
    }

    /// Copy `λ(1..=nmax)` from any Hecke series, e.g. a holomorphic
    /// eigenform standing in for a Maass form.
    pub fn from_series<S: HeckeSeries + ?Sized>(
        series: &S,
        t_j: f64,
        nmax: u64,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if nmax > series.nmax() {
            return Err(LabError::range("proxy form length", nmax, series.nmax()));
        }
        Self::new(
            t_j,
            source_id,
            (1..=nmax).map(|n| series.lambda(n)).collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda[1..]
    }

    /// Overwrite `λ(n)`; used to inject faults.
    pub fn set_lambda(&mut self, n: u64, value: f64) {
        self.lambda[n as usize] = value;
    }
}

impl HeckeSeries for MaassForm {
    fn nmax(&self) -> u64 {
        self.lambda.len() as u64 - 1
    }

    fn lambda(&self, n: u64) -> f64 {
        self.lambda[n as usize]
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> LabError {
    LabError::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parse the text format: `#`-prefixed `tj=` and `source=` header lines,
/// then `n,lambda` rows with `n = 1, 2, 3, …`.
pub fn parse_maass<R: BufRead>(reader: R, default_source: &str) -> Result<MaassForm> {
    let mut t_j = None;
    let mut source = None;
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if !values.is_empty() {
                return Err(parse_err(lineno, "header line after data"));
            }
            let (key, val) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, "malformed header, expected key=value"))?;
            match key.trim() {
                "tj" => {
                    let v: f64 = val.trim().parse().map_err(|_| {
                        parse_err(lineno, format!("malformed header value tj={val}"))
                    })?;
                    t_j = Some(v);
                }
                "source" => source = Some(val.trim().to_string()),
                other => {
                    return Err(parse_err(
                        lineno,
                        format!("malformed header, unknown key {other}"),
                    ))
                }
            }
            continue;
        }
        let (n, v) = line
            .split_once(',')
            .ok_or_else(|| parse_err(lineno, "expected n,lambda"))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, "bad index"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, "bad coefficient"))?;
        let expected = values.len() as u64 + 1;
        if n != expected {
            if values.is_empty() {
                return Err(parse_err(lineno, "missing λ(1)"));
            }
            return Err(parse_err(
                lineno,
                format!("non-monotone or gapped index {n}, expected {expected}"),
            ));
        }
        if !v.is_finite() {
            return Err(parse_err(lineno, "non-finite coefficient"));
        }
        values.push(v);
    }
    let t_j = t_j.ok_or_else(|| parse_err(0, "malformed header: missing tj"))?;
    if values.is_empty() {
        return Err(parse_err(0, "missing λ(1)"));
    }
    let source = source.unwrap_or_else(|| default_source.to_string());
    MaassForm::new(t_j, source, values).map_err(|e| parse_err(0, e.to_string()))
}

pub fn parse_maass_str(text: &str) -> Result<MaassForm> {
    parse_maass(text.as_bytes(), "inline")
}

pub fn read_maass(path: &Path) -> Result<MaassForm> {
    let file = fs::File::open(path).map_err(|e| LabError::io(path, e))?;
    let label = path.display().to_string();
    parse_maass(std::io::BufReader::new(file), &label)
}

/// Text format read by [`parse_maass`]; floats use shortest round-trip form.
pub fn serialize_maass(form: &MaassForm) -> String {
    let mut out = format!("# tj={}\n# source={}\n", form.t_j, form.source_id);
    for (i, v) in form.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaassValidation {
    pub nmax: u64,
    pub tol: f64,
    pub pairs_checked: u64,
    /// `max |λ(m)λ(n) − Σ_{d|(m,n)} λ(mn/d²)|` over `mn <= nmax`.
    pub hecke_max_violation: f64,
    pub hecke_argmax: (u64, u64),
    /// `max |λ(n)| / (τ(n) n^{7/64})`.
    pub kim_sarnak_max_ratio: f64,
    pub kim_sarnak_argmax: u64,
    pub lambda_one_error: f64,
    pub hecke_ok: bool,
    pub kim_sarnak_ok: bool,
    pub passed: bool,
}

pub fn validate_maass(form: &MaassForm, tol: f64) -> MaassValidation {
    let nmax = form.nmax();
    let rows = par::map_indexed(nmax as usize, |i| {
        let m = i as u64 + 1;
        let (mut worst, mut arg, mut count) = (0.0f64, (1u64, 1u64), 0u64);
        let mut n = m;
        while m * n <= nmax {
            let g = num_integer::gcd(m, n);
            let rhs = csum(
                divisors(g)
                    .into_iter()
                    .map(|d| form.lambda(m * n / (d * d))),
            );
            let v = (form.lambda(m) * form.lambda(n) - rhs).abs();
            if v > worst {
                worst = v;
                arg = (m, n);
            }
            count += 1;
            n += 1;
        }
        (worst, arg, count)
    });
    let mut hecke = 0.0f64;
    let mut hecke_arg = (1, 1);
    let mut pairs = 0;
    for (w, a, c) in rows {
        pairs += c;
        if w > hecke {
            hecke = w;
            hecke_arg = a;
        }
    }
    let ratios = par::map_indexed(nmax as usize, |i| {
        let n = i as u64 + 1;
        form.lambda(n).abs() / (tau(n) as f64 * (n as f64).powf(KIM_SARNAK))
    });
    let (mut ks, mut ks_arg) = (0.0f64, 1u64);
    for (i, r) in ratios.into_iter().enumerate() {
        if r > ks {
            ks = r;
            ks_arg = i as u64 + 1;
        }
    }
    let lambda_one_error = (form.lambda(1) - 1.0).abs();
    let hecke_ok = hecke <= tol && lambda_one_error <= tol;
    let kim_sarnak_ok = ks <= 1.0 + tol;
    MaassValidation {
        nmax,
        tol,
        pairs_checked: pairs,
        hecke_max_violation: hecke,
        hecke_argmax: hecke_arg,
        kim_sarnak_max_ratio: ks,
        kim_sarnak_argmax: ks_arg,
        lambda_one_error,
        hecke_ok,
        kim_sarnak_ok,
        passed: hecke_ok && kim_sarnak_ok,
    }
}

/// A multiplicative test form: `λ(p) = 2cos θ_p` with `θ_p` drawn from the
/// Sato–Tate law by rejection sampling, extended to prime powers by
/// `λ(p^{e+1}) = λ(p)λ(p^e) − λ(p^{e−1})` and to all `n` by multiplicativity.
pub fn synthetic_form(
    t_j: f64,
    nmax: u64,
    seed: u64,
    source_id: impl Into<String>,
) -> Result<MaassForm> {
    if nmax == 0 {
        return Err(LabError::invalid("nmax must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let primes = primes_up_to(nmax as usize);
    let mut lp = vec![0.0; nmax as usize + 1];
    for &p in &primes {
        let theta = loop {
            let th: f64 = rng.gen::<f64>() * std::f64::consts::PI;
            if rng.gen::<f64>() <= th.sin().powi(2) {
                break th;
            }
        };
        lp[p as usize] = 2.0 * theta.cos();
    }
    let values = par::map_indexed(nmax as usize, |i| {
        let n = i as u64 + 1;
        factorize(n)
            .into_iter()
            .map(|(p, e)| {
                let a = lp[p as usize];
                let (mut prev, mut cur) = (1.0, a);
                for _ in 1..e {
                    (prev, cur) = (cur, a * cur - prev);
                }
                cur
            })
            .product()
    });
    MaassForm::new(t_j, source_id, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaassWeight {
    pub c1: f64,
    /// `w = ζ(2)/L(sym²u, 1) = 1/c₁`.
    pub w: f64,
    pub cutoff: u64,
    pub smoothing: Smoothing,
    /// Relative change against the half-cutoff (sharp) or half-width
    /// (exponential) evaluation.
    pub relative_disagreement: f64,
}

/// `c₁ = Σ_d λ(d²)/d` (smoothed) and `w = 1/c₁`. Fails when the companion
/// evaluation disagrees by more than `tolerance` relative.
pub fn maass_weight(
    form: &MaassForm,
    cutoff: u64,
    smoothing: Smoothing,
    tolerance: f64,
) -> Result<MaassWeight> {
    if cutoff < 2 {
        return Err(LabError::invalid("cutoff must be >= 2"));
    }
    let c1 = sym2_dirichlet(form, 1.0, cutoff, smoothing)?;
    let other = match smoothing {
        Smoothing::Sharp => sym2_dirichlet(form, 1.0, cutoff / 2, smoothing)?,
        Smoothing::Exponential { width } => sym2_dirichlet(
            form,
            1.0,
            cutoff,
            Smoothing::Exponential { width: width / 2.0 },
        )?,
    };
    let relative = ((c1 - other) / c1).abs();
    if !(relative <= tolerance) {
        return Err(LabError::SmoothingDisagreement {
            relative,
            tolerance,
        });
    }
    Ok(MaassWeight {
        c1,
        w: 1.0 / c1,
        cutoff,
        smoothing,
        relative_disagreement: relative,
    })
}

#[derive(Debug, Clone)]
pub struct FamilyMember<'a> {
    pub form: &'a MaassForm,
    /// `c₁` used in `S(x,H) − c₁H`.
    pub c1: f64,
    /// `w(j)`; normally `1/c₁`, overridable.
    pub weight: f64,
}

impl<'a> FamilyMember<'a> {
    pub fn new(form: &'a MaassForm, c1: f64) -> Self {
        FamilyMember {
            form,
            c1,
            weight: 1.0 / c1,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyStatistic {
    /// Labelled partial: only the supplied forms contribute.
    pub partial_family: bool,
    #[serde(rename = "T")]
    pub t: f64,
    pub spectral_smoothing: bool,
    pub forms: Vec<String>,
    pub t_j: Vec<f64>,
    pub weights: Vec<f64>,
    pub per_form: Vec<f64>,
    pub value: f64,
}

/// `Σ_j w(j) [e^{−t_j/T}] V_j` with `V_j` the variance statistic of form `j`.
pub fn family_statistic(
    members: &[FamilyMember<'_>],
    t: f64,
    config: &VarianceConfig,
    spectral_smoothing: bool,
) -> Result<FamilyStatistic> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::invalid("T must be positive"));
    }
    for m in members {
        if !(t..=2.0 * t).contains(&m.form.t_j) {
            return Err(LabError::invalid(format!(
                "form {} has t_j = {} outside [{t}, {}]",
                m.form.source_id,
                m.form.t_j,
                2.0 * t
            )));
        }
        if !(m.weight > 0.0) {
            return Err(LabError::invalid(format!(
                "weight of {} must be positive",
                m.form.source_id
            )));
        }
    }
    let stats: Vec<Result<f64>> = par::map_slice(members, |m| {
        Ok(variance_statistic(m.form, config, m.c1)?.statistic)
    });
    let per_form: Vec<f64> = stats.into_iter().collect::<Result<_>>()?;
    let factor = |m: &FamilyMember<'_>| {
        if spectral_smoothing {
            (-m.form.t_j / t).exp()
        } else {
            1.0
        }
    };
    let value = csum(
        members
            .iter()
            .zip(&per_form)
            .map(|(m, v)| m.weight * factor(m) * v),
    );
    Ok(FamilyStatistic {
        partial_family: true,
        t,
        spectral_smoothing,
        forms: members.iter().map(|m| m.form.source_id.clone()).collect(),
        t_j: members.iter().map(|m| m.form.t_j).collect(),
        weights: members.iter().map(|m| m.weight).collect(),
        per_form,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_echo() {
        let f = parse_maass_str("# tj=9.533695\n1,1.0\n").unwrap();
        assert_eq!(f.t_j, 9.533695);
        assert_eq!(f.lambda(1), 1.0);
        assert_eq!(f.source_id, "inline");
    }

    #[test]
    fn contract_violations() {
        let e = parse_maass_str("# tj=1.0\n2,0.5\n").unwrap_err();
        assert!(e.to_string().contains("missing λ(1)"), "{e}");
        assert!(parse_maass_str("# tj=1.0\n")
            .unwrap_err()
            .to_string()
            .contains("missing λ(1)"));
        assert!(parse_maass_str("1,1\n").is_err());
        assert!(parse_maass_str("# tj=1\n# colour=red\n1,1\n").is_err());
        assert!(parse_maass_str("# tj=1\n1,1\n3,0\n").is_err());
        assert!(parse_maass_str("# tj=1\n1,1\n1,1\n").is_err());
    }

    #[test]
    fn round_trip() {
        let f = synthetic_form(10.0, 50, 1, "syn").unwrap();
        let text = serialize_maass(&f);
        let g = parse_maass_str(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(serialize_maass(&g), text);
    }

    #[test]
    fn mock_weight() {
        let mut vals = vec![0.0; 100];
        vals[0] = 1.0;
        let f = MaassForm::new(5.0, "mock", vals).unwrap();
        let w = maass_weight(&f, 10, Smoothing::Sharp, 1e-12).unwrap();
        assert_eq!(w.c1, 1.0);
        assert_eq!(w.w, 1.0);
        assert_eq!(w.w * w.c1, 1.0);
    }

    #[test]
    fn empty_family_is_zero() {
        let cfg = VarianceConfig::new(10, 2, 5);
        assert_eq!(family_statistic(&[], 3.0, &cfg, false).unwrap().value, 0.0);
    }

    #[test]
    fn spectral_window_enforced() {
        let f = synthetic_form(10.0, 100, 2, "a").unwrap();
        let cfg = VarianceConfig::new(10, 2, 5);
        let m = [FamilyMember::new(&f, 1.0)];
        assert!(family_statistic(&m, 3.0, &cfg, false).is_err());
        assert!(family_statistic(&m, 6.0, &cfg, false).is_ok());
    }
}
