use std::fmt;

use anyhow::{Context, Result};
use serde::Serialize;

use rankin_core::arithmetic::{deligne_check, identity_suite};
use rankin_core::lfunc::{
    c1, perron_remainder, perron_sweep, rankin_selberg_check, sum_of_squares, sym2_value, C1Method,
    Smoothing,
};
use rankin_core::maassio::{
    family_statistic, maass_weight, read_maass, validate_maass, FamilyMember,
};
use rankin_core::majorant::{g_decay_constant, majorant_suite, MajorantSpec, WindowSpec};
use rankin_core::qmodforms::cache::cache_path;
use rankin_core::qmodforms::eigen::check_weight;
use rankin_core::qmodforms::{eigen_table_cached, EigenTable, HeckeSeries};
use rankin_core::trace::{error_bound, petersson_norm, weil_check, PeterssonLab};
use rankin_core::variancelab::{
    decompose_samples, short_interval_sum, sin_kernel_sum, variance_statistic, Sampling,
    VarianceConfig,
};

use crate::cells;
use crate::config::{Command, Common, RunConfig, SmoothingKind};
use crate::output::{Outcome, Table};

/// A bad flag combination; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

macro_rules! usage {
    ($($t:tt)*) => { return Err(Usage(format!($($t)*)).into()) };
}

fn positive(name: &str, v: u64) -> Result<u64> {
    if v == 0 {
        usage!("--{name} must be positive");
    }
    Ok(v)
}

fn load(cfg: &mut RunConfig, nmax: u64) -> Result<EigenTable> {
    let nmax = cfg.nmax.unwrap_or(0).max(nmax);
    cfg.nmax = Some(nmax);
    eigen_table_cached(cfg.weight, nmax, &cfg.cache_dir)
        .with_context(|| format!("eigenvalue table for weight {} up to {nmax}", cfg.weight))
}

fn sampling(cfg: &RunConfig) -> Sampling {
    match cfg.seed {
        Some(seed) => Sampling::Random { seed },
        None => Sampling::Grid,
    }
}

pub fn run(command: &Command, common: &Common) -> Result<(RunConfig, Outcome)> {
    let mut cfg = RunConfig::new(command, common);
    let needs_weight = !matches!(
        command,
        Command::Majorant { .. } | Command::MaassValidate { .. } | Command::MaassFamily { .. }
    );
    if needs_weight {
        if let Err(e) = check_weight(cfg.weight) {
            usage!("{e}");
        }
    }
    let outcome = match command {
        Command::Eigen => eigen(&mut cfg),
        Command::Identities => identities(&mut cfg),
        Command::RankinSelberg {
            sweep_from,
            sweep_points,
        } => rankin(&mut cfg, *sweep_from, *sweep_points),
        Command::Variance => variance(&mut cfg),
        Command::Decompose => decompose(&mut cfg),
        Command::SinKernel { lambda_max, sweep } => sin_kernel(&mut cfg, *lambda_max, sweep),
        Command::Majorant {
            delta,
            b,
            eps,
            grid,
            probes,
        } => majorant(&mut cfg, *delta, *b, *eps, *grid, *probes),
        Command::Lvalue {
            s,
            cutoff,
            smoothing,
            width,
        } => lvalue(&mut cfg, *s, *cutoff, *smoothing, *width),
        Command::Perron { sweep_points } => perron(&mut cfg, *sweep_points),
        Command::Petersson {
            cmax,
            mn_max,
            weil_c,
        } => petersson(&mut cfg, *cmax, *mn_max, *weil_c),
        Command::MaassValidate { inputs, tol } => maass_validate(&mut cfg, inputs, *tol),
        Command::MaassFamily {
            inputs,
            t,
            spectral_smoothing,
            cutoff,
        } => maass_family(&mut cfg, inputs, *t, *spectral_smoothing, *cutoff),
    }?;
    Ok((cfg, outcome))
}

fn eigen(cfg: &mut RunConfig) -> Result<Outcome> {
    let nmax = positive("nmax", cfg.nmax.unwrap_or(1000))?;
    let t = load(cfg, nmax)?;
    #[derive(Serialize)]
    struct Report {
        weight: u32,
        nmax: u64,
        cache_file: String,
        leading: Vec<String>,
    }
    let mut table = Table::new(&["n", "a", "lambda"]);
    for n in 1..=nmax {
        table.push(cells!(n, t.raw(n), t.lambda(n)));
    }
    let report = Report {
        weight: cfg.weight,
        nmax,
        cache_file: cache_path(&cfg.cache_dir, cfg.weight).display().to_string(),
        leading: (1..=nmax.min(10)).map(|n| t.raw(n).to_string()).collect(),
    };
    Outcome::new(report, table, true)
}

fn identities(cfg: &mut RunConfig) -> Result<Outcome> {
    let nmax = positive("nmax", cfg.nmax.unwrap_or(10_000))?;
    let t = load(cfg, nmax)?;
    let suite = identity_suite(&t);
    let deligne = deligne_check(&t);
    let passed = suite.passed() && !deligne.violation;
    let mut table = Table::new(&["check", "count", "failures"]);
    table.push(cells!(
        "hecke",
        suite.hecke_pairs,
        suite.hecke_failures.len()
    ));
    table.push(cells!(
        "convolution",
        suite.convolution_checks,
        suite.convolution_failures.len()
    ));
    table.push(cells!(
        "prime_power",
        suite.prime_power_checks,
        suite.prime_power_failures.len()
    ));
    table.push(cells!(
        "deligne",
        deligne.checked,
        u8::from(deligne.violation)
    ));
    #[derive(Serialize)]
    struct Report {
        identities: rankin_core::arithmetic::IdentitySuiteReport,
        deligne: rankin_core::arithmetic::DeligneReport,
    }
    Outcome::new(
        Report {
            identities: suite,
            deligne,
        },
        table,
        passed,
    )
}

#[derive(Serialize)]
struct C1Estimates {
    partial_sum: f64,
    empirical_mean: f64,
    smoothed: f64,
    /// Largest pairwise relative difference.
    spread: f64,
}

fn rankin(cfg: &mut RunConfig, sweep_from: Option<u64>, points: usize) -> Result<Outcome> {
    let x = positive("X", cfg.x.unwrap_or(100_000))?;
    if x < 1000 {
        usage!("--X must be at least 1000");
    }
    cfg.x = Some(x);
    let lo = sweep_from.unwrap_or(x / 100);
    if lo == 0 || lo >= x || points < 3 {
        usage!("sweep needs 1 <= --sweep-from < X and --sweep-points >= 3");
    }
    cfg.param("sweep_from", lo);
    cfg.param("sweep_points", points);
    let t = load(cfg, x)?;
    let ps = c1(&t, C1Method::PartialSum { z: x })?;
    let em = c1(&t, C1Method::EmpiricalMean { x })?;
    let sm = c1(&t, C1Method::Smoothed { cutoff: x })?;
    let vals = [ps, em, sm];
    let mut spread: f64 = 0.0;
    for a in vals {
        for b in vals {
            spread = spread.max((a - b).abs() / b.abs());
        }
    }
    let rs = rankin_selberg_check(&t, x, sm, Some((lo, points)))?;
    let sweep = rs.sweep.as_ref().expect("sweep requested");
    let mut table = Table::new(&["X", "ratio", "abs_error"]);
    for &g in &sweep.grid {
        let s = sum_of_squares(&t, g);
        table.push(cells!(g, s / (sm * g as f64), (s - sm * g as f64).abs()));
    }
    let passed = (0.98..=1.02).contains(&rs.ratio) && spread <= 0.02 && sweep.fit.ci_low <= 0.62;
    #[derive(Serialize)]
    struct Report {
        c1: C1Estimates,
        rankin_selberg: rankin_core::lfunc::RankinSelbergReport,
    }
    let c1 = C1Estimates {
        partial_sum: ps,
        empirical_mean: em,
        smoothed: sm,
        spread,
    };
    Outcome::new(
        Report {
            c1,
            rankin_selberg: rs,
        },
        table,
        passed,
    )
}

fn variance_config(
    cfg: &mut RunConfig,
    default_x: u64,
    default_h: u64,
    default_samples: u64,
) -> Result<VarianceConfig> {
    let x = positive("X", cfg.x.unwrap_or(default_x))?;
    let h = cfg.h.unwrap_or(default_h);
    let samples = positive("samples", cfg.samples.unwrap_or(default_samples))?;
    let mut vc = VarianceConfig::new(x, h, samples).with_sampling(sampling(cfg));
    if let Some(z) = cfg.z {
        vc = vc.with_z(z);
    }
    if let Err(e) = vc.validate() {
        usage!("{e}");
    }
    cfg.x = Some(x);
    cfg.h = Some(h);
    cfg.z = Some(vc.z);
    cfg.samples = Some(samples);
    Ok(vc)
}

fn variance(cfg: &mut RunConfig) -> Result<Outcome> {
    let vc = variance_config(cfg, 100_000, 50, 2000)?;
    let t = load(cfg, 2 * vc.x + vc.h)?;
    let c = c1(
        &t,
        C1Method::Smoothed {
            cutoff: 2 * vc.x + vc.h,
        },
    )?;
    let est = variance_statistic(&t, &vc, c)?;
    let mut table = Table::new(&["x", "S", "deviation"]);
    for x in vc.sample_points() {
        let s = short_interval_sum(&t, x, vc.h)?;
        table.push(cells!(x, s, s - c * vc.h as f64));
    }
    #[derive(Serialize)]
    struct Report {
        c1: f64,
        variance: rankin_core::variancelab::VarianceEstimate,
        normalized_by_h: f64,
    }
    let h = vc.h.max(1) as f64;
    Outcome::new(
        Report {
            c1: c,
            variance: est,
            normalized_by_h: est.statistic / h,
        },
        table,
        true,
    )
}

fn decompose(cfg: &mut RunConfig) -> Result<Outcome> {
    let vc = variance_config(cfg, 100_000, 50, 1000)?;
    let t = load(cfg, 2 * vc.x + vc.h)?;
    let c = c1(
        &t,
        C1Method::Smoothed {
            cutoff: 2 * vc.x + vc.h,
        },
    )?;
    let reports = decompose_samples(&t, &vc, c)?;
    let mut table = Table::new(&["x", "S", "small_d", "large_d", "tail", "total", "residual"]);
    let mut worst: f64 = 0.0;
    for r in &reports {
        worst = worst.max(r.residual() / (1.0 + r.total.abs()));
        table.push(cells!(
            r.x,
            r.s,
            r.small_d,
            r.large_d,
            r.tail,
            r.total,
            r.residual()
        ));
    }
    #[derive(Serialize)]
    struct Report {
        c1: f64,
        points: usize,
        max_relative_residual: f64,
        tolerance: f64,
    }
    let passed = worst <= 1e-8;
    Outcome::new(
        Report {
            c1: c,
            points: reports.len(),
            max_relative_residual: worst,
            tolerance: 1e-8,
        },
        table,
        passed,
    )
}

fn sin_kernel(cfg: &mut RunConfig, lambda_max: u64, sweep: &[u64]) -> Result<Outcome> {
    positive("lambda-max", lambda_max)?;
    let points: Vec<(u64, u64)> = if sweep.is_empty() {
        let h = positive("H", cfg.h.unwrap_or(8))?;
        let z = positive("z", cfg.z.unwrap_or(h * h))?;
        cfg.h = Some(h);
        cfg.z = Some(z);
        vec![(h, z)]
    } else {
        for &h in sweep {
            positive("sweep", h)?;
        }
        cfg.param("sweep", sweep);
        sweep.iter().map(|&h| (h, h * h)).collect()
    };
    cfg.param("lambda_max", lambda_max);
    let zmax = points.iter().map(|p| p.1).max().unwrap_or(2).max(2);
    let t = load(cfg, zmax)?;
    #[derive(Serialize)]
    struct Row {
        #[serde(flatten)]
        report: rankin_core::variancelab::SinKernelReport,
        /// `value / H^{1.1}`.
        growth_ratio: f64,
    }
    let mut rows = Vec::new();
    let mut table = Table::new(&[
        "H",
        "z",
        "value",
        "value_untruncated",
        "growth_ratio",
        "lambda_tail_bound",
    ]);
    for (h, z) in points {
        let r = sin_kernel_sum(&t, z, h, lambda_max)?;
        let growth_ratio = r.value / (h as f64).powf(1.1);
        table.push(cells!(
            h,
            z,
            r.value,
            r.value_untruncated,
            growth_ratio,
            r.lambda_tail_bound
        ));
        rows.push(Row {
            report: r,
            growth_ratio,
        });
    }
    let bound = rows.iter().map(|r| r.growth_ratio).fold(0.0, f64::max);
    let passed = rows
        .iter()
        .all(|r| r.report.value.is_finite() && r.report.value >= 0.0);
    #[derive(Serialize)]
    struct Report {
        rows: Vec<Row>,
        max_growth_ratio: f64,
    }
    Outcome::new(
        Report {
            rows,
            max_growth_ratio: bound,
        },
        table,
        passed,
    )
}

fn majorant(
    cfg: &mut RunConfig,
    delta: Option<f64>,
    b: f64,
    eps: f64,
    grid: usize,
    probes: usize,
) -> Result<Outcome> {
    let h = positive("H", cfg.h.unwrap_or(16))?;
    cfg.h = Some(h);
    let spec = match delta {
        Some(d) => MajorantSpec::with_delta(d),
        None => MajorantSpec::new(b, h, eps),
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => usage!("{e}"),
    };
    let window = match WindowSpec::new(h, eps) {
        Ok(w) => w,
        Err(e) => usage!("{e}"),
    };
    cfg.param("delta", spec.delta);
    cfg.param("eps", eps);
    cfg.param("grid", grid);
    cfg.param("probes", probes);
    let suite = majorant_suite(spec, window, grid, probes)?;
    let xis: Vec<f64> = (-50..=50).map(f64::from).collect();
    let decay = g_decay_constant(&window, &xis)?;
    let mut table = Table::new(&["xi", "abs_sigma_hat"]);
    for &(xi, v) in &suite.outside_support {
        table.push(cells!(xi, v));
    }
    #[derive(Serialize)]
    struct Report {
        suite: rankin_core::majorant::MajorantSuiteReport,
        g_decay_constant: f64,
    }
    let passed = suite.passed;
    Outcome::new(
        Report {
            suite,
            g_decay_constant: decay,
        },
        table,
        passed,
    )
}

fn smoothing(kind: SmoothingKind, width: Option<f64>, cutoff: u64) -> Smoothing {
    match kind {
        SmoothingKind::Sharp => Smoothing::Sharp,
        SmoothingKind::Exp => Smoothing::Exponential {
            width: width.unwrap_or(cutoff as f64 / 10.0),
        },
    }
}

fn lvalue(
    cfg: &mut RunConfig,
    s: f64,
    cutoff: u64,
    kind: SmoothingKind,
    width: Option<f64>,
) -> Result<Outcome> {
    if !(s > 0.5) {
        usage!("--s must exceed 1/2");
    }
    if cutoff < 2 {
        usage!("--cutoff must be >= 2");
    }
    let sm = smoothing(kind, width, cutoff);
    cfg.param("s", s);
    cfg.param("cutoff", cutoff);
    cfg.param("smoothing", sm);
    let t = load(cfg, cutoff)?;
    let r = sym2_value(&t, s, cutoff, sm)?;
    let mut table = Table::new(&["s", "cutoff", "value", "tail_estimate"]);
    table.push(cells!(s, cutoff, r.value.re, r.tail_estimate));
    Outcome::new(r, table, true)
}

fn perron(cfg: &mut RunConfig, points: usize) -> Result<Outcome> {
    let z = positive("z", cfg.z.unwrap_or(10_000))?;
    if z <= 10 || points < 3 {
        usage!("--z must exceed 10 and --sweep-points must be >= 3");
    }
    cfg.z = Some(z);
    cfg.param("sweep_points", points);
    let ref_cutoff = (10 * z).max(100_000);
    cfg.param("reference_cutoff", ref_cutoff);
    let t = load(cfg, ref_cutoff)?;
    let reference = c1(&t, C1Method::Smoothed { cutoff: ref_cutoff })?;
    let r = perron_sweep(&t, 10, z, points, reference)?;
    let mut table = Table::new(&["z", "remainder", "envelope"]);
    for (&g, e) in r.sweep.grid.iter().zip(&r.sweep.envelope) {
        table.push(cells!(g, perron_remainder(&t, g, reference)?, e));
    }
    let passed = r.alpha > 0.0;
    Outcome::new(r, table, passed)
}

fn petersson(cfg: &mut RunConfig, cmax: u64, mn_max: u64, weil_c: u64) -> Result<Outcome> {
    positive("cmax", cmax)?;
    positive("mn-max", mn_max)?;
    positive("weil-c", weil_c)?;
    cfg.param("cmax", cmax);
    cfg.param("mn_max", mn_max);
    cfg.param("weil_c", weil_c);
    let t = load(cfg, mn_max)?;
    let lab = PeterssonLab::new(cmax)?;
    let k = cfg.weight;
    let omega = lab.omega(k)?;
    let mut table = Table::new(&[
        "m",
        "n",
        "spectral",
        "geometric",
        "residual",
        "cmax_doubling_change",
        "error_bound",
    ]);
    let (mut worst, mut change): (f64, f64) = (0.0, 0.0);
    for m in 1..=mn_max {
        for n in 1..=mn_max / m {
            let r = lab.residual_with_omega(&t, k, m, n, omega)?;
            worst = worst.max(r.residual);
            change = change.max(r.cmax_doubling_change);
            table.push(cells!(
                m,
                n,
                r.spectral,
                r.geometric,
                r.residual,
                r.cmax_doubling_change,
                error_bound(k, m, n)
            ));
        }
    }
    let weil = weil_check(weil_c, 12);
    #[derive(Serialize)]
    struct Report {
        omega: f64,
        petersson_norm: f64,
        pairs: usize,
        max_residual: f64,
        max_cmax_doubling_change: f64,
        weil: rankin_core::trace::WeilReport,
    }
    let passed = worst <= 1e-6 && change <= 1e-6 && weil.violations == 0 && weil.asymmetries == 0;
    let report = Report {
        omega,
        petersson_norm: petersson_norm(k, omega),
        pairs: table.rows.len(),
        max_residual: worst,
        max_cmax_doubling_change: change,
        weil,
    };
    Outcome::new(report, table, passed)
}

fn maass_validate(cfg: &mut RunConfig, inputs: &[std::path::PathBuf], tol: f64) -> Result<Outcome> {
    cfg.param("inputs", inputs);
    cfg.param("tol", tol);
    #[derive(Serialize)]
    struct Row {
        source: String,
        t_j: f64,
        validation: rankin_core::maassio::MaassValidation,
    }
    let mut rows = Vec::new();
    let mut table = Table::new(&[
        "source",
        "t_j",
        "nmax",
        "hecke_max_violation",
        "kim_sarnak_max_ratio",
        "passed",
    ]);
    for path in inputs {
        let f = read_maass(path)?;
        let v = validate_maass(&f, tol);
        table.push(cells!(
            f.source_id,
            f.t_j,
            v.nmax,
            v.hecke_max_violation,
            v.kim_sarnak_max_ratio,
            v.passed
        ));
        rows.push(Row {
            source: f.source_id.clone(),
            t_j: f.t_j,
            validation: v,
        });
    }
    let passed = rows.iter().all(|r| r.validation.passed);
    Outcome::new(rows, table, passed)
}

fn maass_family(
    cfg: &mut RunConfig,
    inputs: &[std::path::PathBuf],
    t: f64,
    spectral: bool,
    cutoff: Option<u64>,
) -> Result<Outcome> {
    if !(t > 0.0) {
        usage!("--T must be positive");
    }
    let vc = variance_config(cfg, 1000, 10, 200)?;
    cfg.param("inputs", inputs);
    cfg.param("T", t);
    cfg.param("spectral_smoothing", spectral);
    let forms = inputs
        .iter()
        .map(|p| read_maass(p))
        .collect::<rankin_core::Result<Vec<_>>>()?;
    let mut weights = Vec::new();
    for f in &forms {
        let cut = cutoff.unwrap_or(f.nmax().min(10_000));
        let w = maass_weight(
            f,
            cut,
            Smoothing::Exponential {
                width: cut as f64 / 10.0,
            },
            0.05,
        )
        .with_context(|| format!("weight of {}", f.source_id))?;
        weights.push(w);
    }
    let members: Vec<FamilyMember<'_>> = forms
        .iter()
        .zip(&weights)
        .map(|(f, w)| FamilyMember::new(f, w.c1))
        .collect();
    let stat = family_statistic(&members, t, &vc, spectral)?;
    let mut table = Table::new(&["source", "t_j", "c1", "weight", "statistic"]);
    for (i, f) in forms.iter().enumerate() {
        table.push(cells!(
            f.source_id,
            f.t_j,
            weights[i].c1,
            weights[i].w,
            stat.per_form[i]
        ));
    }
    #[derive(Serialize)]
    struct Report {
        family: rankin_core::maassio::FamilyStatistic,
        weights: Vec<rankin_core::maassio::MaassWeight>,
    }
    Outcome::new(
        Report {
            family: stat,
            weights,
        },
        table,
        true,
    )
}
