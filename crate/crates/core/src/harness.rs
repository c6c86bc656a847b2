//! End-to-end experiments, rate fits and machine-readable reports.
//!
//! An experiment is a named strategy ([`Experiment`]) run against one
//! [`ExperimentConfig`].  It returns a list of [`Check`]s (bound, measured
//! value, pass/fail), a free-form JSON payload and the CSV tables it wrote;
//! [`run_experiment`] wraps that into a versioned [`Report`] carrying the full
//! configuration, so every report states the tolerances and grids it used.
//!
//! The registered experiments are
//!
//! | name               | what it does                                                          |
//! |--------------------|-----------------------------------------------------------------------|
//! | `scatter`          | reflection coefficient on the z-grid, unitarity residual              |
//! | `alpha`            | `ln t/t` coefficients at several `z₀`, pairwise cancellation residuals |
//! | `predict`          | leading-order asymptotic prediction on a `z₀`-window                  |
//! | `evolve`           | split-step run of the NLS equation, conserved quantities             |
//! | `rates-nls`        | sup-error of the leading term against the PDE, fitted decay rate     |
//! | `rates-linear`     | partial sums of the linear expansion against the exact solution      |
//! | `rates-appendix-a` | decay rates of the Ω₁ remainder integrals                             |

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::alpha::{
    alpha_set, contour_registry, APower, AlphaOptions, AlphaReport, AlphaSet, OracleOptions,
};
use crate::asymptotics::{predict, q_leading, write_predictions_csv, write_predictions_json, OrderFlag};
use crate::error::{Error, Result};
use crate::grid::ComplexGrid1D;
use crate::linear::{coefficient_registry, linear_rate_table, write_rate_csv, BetaGamma, LinearOracle};
use crate::pde::{evolve, write_snapshots_csv, PdeConfig};
use crate::profiles::{profile_registry, ProfileSpec};
use crate::quad::linear_fit;
use crate::registry::{Named, Registry};
use crate::remainder::{default_options as remainder_options, remainder_series, Remainder, RemainderSeries};
use crate::rhp::LocalParams;
use crate::scattering::{integrator_registry, reflection_grid, ScatteringConfig, ScatteringData};
use crate::tolerances as tol;

/// Version of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Rate fits
// ---------------------------------------------------------------------------

/// Least-squares fit of `log e` against `log t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// All sample times, increasing.
    pub ts: Vec<f64>,
    /// Error at each time.
    pub errs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of largest times entering the fit.
    pub fit_points: usize,
    /// `r² <` [`tol::nls::R_SQUARED_FLAG`].
    pub degenerate: bool,
}

impl RateFit {
    /// Fit over the `fit_points` largest times (at least
    /// [`tol::fit::MIN_POINTS`]); smaller times are kept in the record but do
    /// not enter the slope.
    pub fn fit(ts: &[f64], errs: &[f64], fit_points: usize) -> Result<Self> {
        if ts.len() != errs.len() {
            return Err(Error::DegenerateFit(format!(
                "{} times but {} errors",
                ts.len(),
                errs.len()
            )));
        }
        if fit_points < tol::fit::MIN_POINTS || fit_points > ts.len() {
            return Err(Error::DegenerateFit(format!(
                "need {} ≤ fit points ≤ {}, got {fit_points}",
                tol::fit::MIN_POINTS,
                ts.len()
            )));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DegenerateFit("times must increase".into()));
        }
        let tail = ts.len() - fit_points;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (&t, &e) in ts[tail..].iter().zip(&errs[tail..]) {
            if !(t > 0.0 && e > 0.0 && e.is_finite()) {
                return Err(Error::DegenerateFit(format!("non-positive sample e({t}) = {e}")));
            }
            xs.push(t.ln());
            ys.push(e.ln());
        }
        let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
        if !slope.is_finite() {
            return Err(Error::DegenerateFit("slope is not finite".into()));
        }
        Ok(Self {
            ts: ts.to_vec(),
            errs: errs.to_vec(),
            slope,
            intercept,
            r_squared,
            fit_points,
            degenerate: r_squared < tol::nls::R_SQUARED_FLAG,
        })
    }

    /// `e(t) · t / ln t` at every time.
    pub fn log_normalized(&self) -> Vec<f64> {
        self.ts.iter().zip(&self.errs).map(|(&t, &e)| e * t / t.ln()).collect()
    }

    /// Whether `e(t) t / ln t` strictly decreases over the `k` largest times.
    pub fn log_normalized_decreasing(&self, k: usize) -> bool {
        let v = self.log_normalized();
        let k = k.min(v.len());
        v[v.len() - k..].windows(2).all(|w| w[1] < w[0])
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Pass/fail bounds quoted in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub unitarity: f64,
    pub cancellation: f64,
    pub beta_gamma_agreement: f64,
    /// Slope bounds for the linear partial sums of order `0, 1, 2, …`.
    pub linear_slopes: Vec<f64>,
    pub nls_slope_max: f64,
    pub nls_r_squared_min: f64,
    pub monotone_tail: usize,
    pub slope_hat_i2: f64,
    pub slope_bar_i22: f64,
    pub slope_i3: f64,
    pub tilde_i0_growth: f64,
    pub mass_drift: f64,
    /// `||c(z₀)| − 1|` for the predictions.
    pub c_modulus: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            unitarity: tol::scattering::UNITARITY,
            cancellation: tol::alpha::CANCELLATION,
            beta_gamma_agreement: tol::linear::BETA_GAMMA_AGREEMENT,
            linear_slopes: tol::linear::SLOPE_BOUNDS.to_vec(),
            nls_slope_max: tol::nls::SLOPE_MAX,
            nls_r_squared_min: tol::nls::R_SQUARED_MIN,
            monotone_tail: tol::nls::MONOTONE_TAIL,
            slope_hat_i2: tol::remainder::SLOPE_HAT_I2,
            slope_bar_i22: tol::remainder::SLOPE_BAR_I22,
            slope_i3: tol::remainder::SLOPE_I3,
            tilde_i0_growth: tol::remainder::TILDE_I0_GROWTH,
            mass_drift: tol::pde::MASS_DRIFT,
            c_modulus: 1e-6,
        }
    }
}

/// Settings of the linear-expansion experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSettings {
    /// Highest correction order `n`.
    pub orders: usize,
    /// Evaluation points; the error is the sup over them.
    pub x_values: Vec<f64>,
    /// Coefficient sets to compare; the first one is checked against the
    /// slope bounds, the others are reported as diagnostics.
    pub coefficient_sets: Vec<String>,
    /// Mode cutoff of the spectral oracle.
    pub oracle_tol: f64,
    /// Tolerance of the `β_k, γ_k` quadratures.
    pub quad_tol: f64,
}

impl Default for LinearSettings {
    fn default() -> Self {
        Self {
            orders: tol::linear::MAX_ORDER,
            x_values: vec![0.0],
            coefficient_sets: vec!["printed".into(), "stationary-phase".into()],
            oracle_tol: tol::linear::ORACLE_TOL,
            quad_tol: 1e-13,
        }
    }
}

/// One experiment, as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registered experiment name.
    pub experiment: String,
    pub profile: ProfileSpec,
    pub scattering: ScatteringConfig,
    pub pde: PdeConfig,
    pub alpha: AlphaOptions,
    /// Registered ρ-contour for the α quadratures.
    pub contour: String,
    /// Quadrature options of the remainder integrals.
    pub remainder: OracleOptions,
    pub linear: LinearSettings,
    /// Time schedule, increasing.
    pub times: Vec<f64>,
    /// Window of stationary points; `x = −4tz₀`.
    pub z0_window: [f64; 2],
    pub z0_points: usize,
    /// Stationary point of single-point experiments.
    pub z0: f64,
    /// Largest times entering each rate fit.
    pub fit_points: usize,
    pub order: OrderFlag,
    /// Write every `snapshot_stride`-th point of PDE snapshots.
    pub snapshot_stride: usize,
    pub thresholds: Thresholds,
    /// Directory for CSV tables and the JSON report (none: nothing written).
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "scatter".into(),
            profile: ProfileSpec::default(),
            scattering: ScatteringConfig::default(),
            pde: PdeConfig::default(),
            alpha: AlphaOptions::default(),
            contour: "steepest-descent".into(),
            remainder: remainder_options(),
            linear: LinearSettings::default(),
            times: tol::nls::TIMES.to_vec(),
            z0_window: [tol::nls::Z0_WINDOW.0, tol::nls::Z0_WINDOW.1],
            z0_points: tol::nls::Z0_POINTS,
            z0: 0.3,
            fit_points: tol::nls::TIMES.len(),
            order: OrderFlag::Leading,
            snapshot_stride: 16,
            thresholds: Thresholds::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Sampled stationary points, evenly spaced over the window.
    pub fn z0_values(&self) -> Vec<f64> {
        let [lo, hi] = self.z0_window;
        if self.z0_points <= 1 {
            return vec![0.5 * (lo + hi)];
        }
        let n = self.z0_points - 1;
        (0..=n).map(|j| lo + (hi - lo) * j as f64 / n as f64).collect()
    }

    /// Override every quadrature tolerance (α, remainder, `β_k/γ_k`).  The
    /// scattering integrator keeps its own tolerance, which controls
    /// unitarity.
    pub fn set_quadrature_tol(&mut self, t: f64) {
        self.alpha.tol = t;
        self.remainder.tol = t;
        self.linear.quad_tol = t;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.profile.validate()?;
        self.scattering.validate()?;
        self.pde.validate()?;
        for (name, v) in [
            ("alpha.tol", self.alpha.tol),
            ("remainder.tol", self.remainder.tol),
            ("remainder.rho_max", self.remainder.rho_max),
            ("remainder.panel", self.remainder.panel),
            ("linear.oracle_tol", self.linear.oracle_tol),
            ("linear.quad_tol", self.linear.quad_tol),
            ("thresholds.unitarity", self.thresholds.unitarity),
            ("thresholds.cancellation", self.thresholds.cancellation),
            ("thresholds.beta_gamma_agreement", self.thresholds.beta_gamma_agreement),
            ("thresholds.tilde_i0_growth", self.thresholds.tilde_i0_growth),
            ("thresholds.mass_drift", self.thresholds.mass_drift),
            ("thresholds.c_modulus", self.thresholds.c_modulus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.times.is_empty() || self.times.iter().any(|&t| !(t > 0.0)) {
            return bad("times must be non-empty and positive".into());
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("times must increase".into());
        }
        let [lo, hi] = self.z0_window;
        if !(lo <= hi) || self.z0_points == 0 {
            return bad("z0_window must satisfy lo ≤ hi with z0_points ≥ 1".into());
        }
        if self.fit_points < tol::fit::MIN_POINTS {
            return bad(format!("fit_points must be ≥ {}", tol::fit::MIN_POINTS));
        }
        if self.linear.orders == 0 || self.linear.x_values.is_empty() || self.linear.coefficient_sets.is_empty() {
            return bad("linear: orders ≥ 1, x_values and coefficient_sets non-empty".into());
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be ≥ 1".into());
        }
        Ok(())
    }

    fn fit_points_for(&self, n: usize) -> usize {
        self.fit_points.min(n)
    }

    fn out_path(&self, file: &str) -> Result<Option<PathBuf>> {
        match &self.out_dir {
            None => Ok(None),
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Ok(Some(dir.join(file)))
            }
        }
    }

    fn scattering_data(&self) -> Result<ScatteringData> {
        let q0 = self.profile.grid()?;
        reflection_grid(&q0, &self.scattering, &integrator_registry())
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One bound and its measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    /// Diagnostic checks are reported but do not decide the outcome.
    pub required: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            relation: Relation::AtMost,
            required: true,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            relation: Relation::AtLeast,
            required: true,
            passed: value >= bound,
        }
    }

    /// A boolean condition encoded as `value ∈ {0, 1} ≥ 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn diagnostic(mut self) -> Self {
        self.required = false;
        self
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        let status = match (self.passed, self.required) {
            (true, _) => "ok",
            (false, true) => "FAILED",
            (false, false) => "failed (diagnostic)",
        };
        write!(f, "{}: {:.6e} {rel} {:.6e} … {status}", self.name, self.value, self.bound)
    }
}

/// What an experiment produces before it is wrapped into a [`Report`].
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
    pub files: Vec<PathBuf>,
}

/// Versioned record of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    /// All required checks passed.
    pub passed: bool,
    pub elapsed_seconds: f64,
    pub checks: Vec<Check>,
    pub config: ExperimentConfig,
    pub files: Vec<PathBuf>,
    pub data: serde_json::Value,
}

impl Report {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.required && !c.passed)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Experiment registry
// ---------------------------------------------------------------------------

/// A runnable experiment.
pub trait Experiment: Named + Send + Sync {
    /// Configuration used when none is supplied.
    fn default_config(&self) -> ExperimentConfig;
    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput>;
}

macro_rules! experiment {
    ($ty:ident, $name:literal, $desc:literal) => {
        pub struct $ty;
        impl Named for $ty {
            fn name(&self) -> &str {
                $name
            }
            fn description(&self) -> &str {
                $desc
            }
        }
    };
}

experiment!(ScatterExperiment, "scatter", "reflection coefficient and unitarity residual");
experiment!(AlphaExperiment, "alpha", "ln t/t coefficients and their pairwise cancellation");
experiment!(PredictExperiment, "predict", "leading-order asymptotic prediction on a z₀-window");
experiment!(EvolveExperiment, "evolve", "split-step NLS run and conserved quantities");
experiment!(NlsRatesExperiment, "rates-nls", "leading-term error against the PDE, fitted rate");
experiment!(LinearRatesExperiment, "rates-linear", "linear expansion against the exact solution");
experiment!(AppendixARatesExperiment, "rates-appendix-a", "decay rates of the Ω₁ remainder integrals");

pub fn experiment_registry() -> Registry<dyn Experiment> {
    Registry::new("experiment")
        .with(Arc::new(ScatterExperiment) as Arc<dyn Experiment>)
        .with(Arc::new(AlphaExperiment) as Arc<dyn Experiment>)
        .with(Arc::new(PredictExperiment) as Arc<dyn Experiment>)
        .with(Arc::new(EvolveExperiment) as Arc<dyn Experiment>)
        .with(Arc::new(NlsRatesExperiment) as Arc<dyn Experiment>)
        .with(Arc::new(LinearRatesExperiment) as Arc<dyn Experiment>)
        .with(Arc::new(AppendixARatesExperiment) as Arc<dyn Experiment>)
}

/// Default configuration of the named experiment.
pub fn default_config(name: &str) -> Result<ExperimentConfig> {
    Ok(experiment_registry().get(name)?.default_config())
}

/// Validate, run, time and (when `out_dir` is set) write `<name>.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let exp = experiment_registry().get(&cfg.experiment)?;
    let start = Instant::now();
    let out = exp.run(cfg)?;
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment.clone(),
        passed: out.checks.iter().all(|c| c.passed || !c.required),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        checks: out.checks,
        config: cfg.clone(),
        files: out.files,
        data: out.data,
    };
    if let Some(path) = cfg.out_path(&format!("{}.json", cfg.experiment))? {
        report.files.push(path.clone());
        report.write_json(&path)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// scatter
// ---------------------------------------------------------------------------

impl Experiment for ScatterExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let sd = cfg.scattering_data()?;
        let mut files = Vec::new();
        if let Some(p) = cfg.out_path("scattering.csv")? {
            sd.write_csv(&p)?;
            files.push(p);
        }
        Ok(ExperimentOutput {
            checks: vec![Check::at_most("unitarity", sd.unitarity_residual, cfg.thresholds.unitarity)],
            data: json!({
                "metadata": sd.metadata(&cfg.scattering),
                "sup_r": sd.sup_r(),
                "z_points": sd.axis().len,
            }),
            files,
        })
    }
}

// ---------------------------------------------------------------------------
// alpha
// ---------------------------------------------------------------------------

/// Cancellation residuals of one `z₀` under both readings of the `A` power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct APowerRow {
    pub z0: f64,
    pub a_power: APower,
    pub residual_14: f64,
    pub residual_36: f64,
    pub alpha1_relative: f64,
}

/// Output of [`run_alpha_cancellation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaCancellation {
    /// One report per `z₀` under the configured options.
    pub reports: Vec<AlphaReport>,
    /// Residuals under both `A` powers, per `z₀`.
    pub a_power_table: Vec<APowerRow>,
}

/// All α's, both pairwise residuals and `|α₁|` at every `z₀` of the window,
/// plus the residual table for the two readings of the `A` power.
pub fn run_alpha_cancellation(cfg: &ExperimentConfig) -> Result<AlphaCancellation> {
    let sd = cfg.scattering_data()?;
    run_alpha_cancellation_with(cfg, &sd)
}

/// [`run_alpha_cancellation`] on precomputed scattering data.
pub fn run_alpha_cancellation_with(cfg: &ExperimentConfig, sd: &ScatteringData) -> Result<AlphaCancellation> {
    let contour = contour_registry().get(&cfg.contour)?;
    let mut reports = Vec::new();
    let mut a_power_table = Vec::new();
    for z0 in cfg.z0_values() {
        let lp = LocalParams::compute(sd, z0)?;
        let set = alpha_set(&lp, contour.as_ref(), &cfg.alpha)?;
        let report = AlphaReport::new(&lp, set, cfg.alpha);
        for power in [APower::Squared, APower::Single] {
            let row_report = if power == cfg.alpha.a_power {
                report.clone()
            } else {
                let opts = AlphaOptions {
                    a_power: power,
                    ..cfg.alpha
                };
                AlphaReport::new(&lp, alpha_set(&lp, contour.as_ref(), &opts)?, opts)
            };
            a_power_table.push(APowerRow {
                z0,
                a_power: power,
                residual_14: row_report.residual_14,
                residual_36: row_report.residual_36,
                alpha1_relative: row_report.alpha1_relative,
            });
        }
        reports.push(report);
    }
    Ok(AlphaCancellation {
        reports,
        a_power_table,
    })
}

fn write_alpha_csv(res: &AlphaCancellation, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z0", "a_power", "residual_14", "residual_36", "alpha1_relative"])?;
    for row in &res.a_power_table {
        let power = match row.a_power {
            APower::Squared => "squared",
            APower::Single => "single",
        };
        w.write_record([
            row.z0.to_string(),
            power.to_string(),
            row.residual_14.to_string(),
            row.residual_36.to_string(),
            row.alpha1_relative.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn alpha_checks(res: &AlphaCancellation, bound: f64) -> Vec<Check> {
    let worst = |f: fn(&AlphaReport) -> f64| res.reports.iter().map(f).fold(0.0, f64::max);
    vec![
        Check::at_most("max |α₁,₃+α₄,₃|/|α₁,₃|", worst(|r| r.residual_14), bound),
        Check::at_most("max |α₃,₃+α₆,₃|/|α₆,₃|", worst(|r| r.residual_36), bound),
        Check::at_most("max |α₁|/max|α_i,3|", worst(|r| r.alpha1_relative), bound).diagnostic(),
    ]
}

impl Experiment for AlphaExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            profile: ProfileSpec::sech(0.3),
            z0_window: [-0.9, 0.7],
            z0_points: tol::alpha::Z0_COUNT,
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let res = run_alpha_cancellation(cfg)?;
        let mut files = Vec::new();
        if let Some(p) = cfg.out_path("alpha_cancellation.csv")? {
            write_alpha_csv(&res, &p)?;
            files.push(p);
        }
        Ok(ExperimentOutput {
            checks: alpha_checks(&res, cfg.thresholds.cancellation),
            data: serde_json::to_value(&res)?,
            files,
        })
    }
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

impl Experiment for PredictExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            profile: ProfileSpec::gaussian(tol::nls::AMPLITUDE),
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let sd = cfg.scattering_data()?;
        let contour = contour_registry().get(&cfg.contour)?;
        let mut preds = Vec::new();
        let mut c_dev = 0.0f64;
        for z0 in cfg.z0_values() {
            let lp = LocalParams::compute(&sd, z0)?;
            c_dev = c_dev.max((lp.c0.norm() - 1.0).abs());
            let aset: Option<AlphaSet> = match cfg.order {
                OrderFlag::Leading => None,
                OrderFlag::WithCorrections => Some(alpha_set(&lp, contour.as_ref(), &cfg.alpha)?),
            };
            for &t in &cfg.times {
                preds.push(predict(&lp, aset.as_ref(), -4.0 * t * z0, t, cfg.order)?);
            }
        }
        let mut files = Vec::new();
        if let Some(p) = cfg.out_path("predictions.csv")? {
            write_predictions_csv(&preds, &p)?;
            files.push(p);
        }
        if let Some(p) = cfg.out_path("predictions.json")? {
            write_predictions_json(&preds, &p)?;
            files.push(p);
        }
        Ok(ExperimentOutput {
            checks: vec![Check::at_most("max ||c(z₀)| − 1|", c_dev, cfg.thresholds.c_modulus)],
            data: json!({ "count": preds.len(), "predictions": preds }),
            files,
        })
    }
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

fn pde_initial(cfg: &ExperimentConfig) -> Result<ComplexGrid1D> {
    let f = cfg.profile.evaluator(&profile_registry())?;
    cfg.pde.sample(f)
}

impl Experiment for EvolveExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            profile: ProfileSpec::gaussian(tol::nls::AMPLITUDE),
            times: vec![1.0, 5.0, 10.0, 20.0],
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let q0 = pde_initial(cfg)?;
        let states = evolve(&q0, &cfg.times, &cfg.pde)?;
        let (m0, p0) = (q0.mass(), crate::pde::momentum(&q0));
        let drift = states.iter().map(|s| (s.mass - m0).abs() / m0.max(1e-300)).fold(0.0, f64::max);
        let p_drift = states.iter().map(|s| (s.momentum - p0).abs()).fold(0.0, f64::max);
        let mut files = Vec::new();
        if let Some(p) = cfg.out_path("snapshots.csv")? {
            write_snapshots_csv(&states, cfg.snapshot_stride, &p)?;
            files.push(p);
        }
        Ok(ExperimentOutput {
            checks: vec![
                Check::at_most("relative mass drift", drift, cfg.thresholds.mass_drift),
                Check::at_most("momentum drift", p_drift, cfg.thresholds.mass_drift * (1.0 + p0.abs()))
                    .diagnostic(),
            ],
            data: json!({ "initial_mass": m0, "initial_momentum": p0, "states": states }),
            files,
        })
    }
}

// ---------------------------------------------------------------------------
// rates-nls
// ---------------------------------------------------------------------------

/// Output of [`run_nls_rate_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlsRates {
    pub fit: RateFit,
    pub z0_values: Vec<f64>,
    /// `|q_PDE − q⁽⁰⁾|` per time (rows) and `z₀` (columns).
    pub pointwise: Vec<Vec<f64>>,
    /// `max |q_PDE|` over the window per time.
    pub window_max: Vec<f64>,
    /// Largest box-edge ratio over the run.
    pub edge_ratio: f64,
}

/// Sup over the `z₀`-window of `|q_PDE − q⁽⁰⁾|` at every scheduled time, and
/// the fitted decay rate.
pub fn run_nls_rate_experiment(cfg: &ExperimentConfig) -> Result<NlsRates> {
    let sd = cfg.scattering_data()?;
    let z0s = cfg.z0_values();
    let lps = z0s
        .iter()
        .map(|&z| LocalParams::compute(&sd, z))
        .collect::<Result<Vec<_>>>()?;
    let q0 = pde_initial(cfg)?;
    let states = evolve(&q0, &cfg.times, &cfg.pde)?;
    let mut errs = Vec::new();
    let mut pointwise = Vec::new();
    let mut window_max = Vec::new();
    for st in &states {
        let xs: Vec<f64> = z0s.iter().map(|z| -4.0 * st.t * z).collect();
        let vals = st.values_at(&xs);
        let row: Vec<f64> = lps
            .iter()
            .zip(&xs)
            .zip(&vals)
            .map(|((lp, &x), v)| (q_leading(lp, x, st.t) - v).norm())
            .collect();
        errs.push(row.iter().cloned().fold(0.0, f64::max));
        window_max.push(vals.iter().map(|v| v.norm()).fold(0.0, f64::max));
        pointwise.push(row);
        log::info!("rates-nls: t = {} sup error {:.3e}", st.t, errs.last().unwrap());
    }
    let fit = RateFit::fit(&cfg.times, &errs, cfg.fit_points_for(cfg.times.len()))?;
    Ok(NlsRates {
        fit,
        z0_values: z0s,
        pointwise,
        window_max,
        edge_ratio: states.iter().map(|s| s.edge_ratio).fold(0.0, f64::max),
    })
}

fn write_fit_csv(fit: &RateFit, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "err", "err_t_over_ln_t"])?;
    for ((t, e), n) in fit.ts.iter().zip(&fit.errs).zip(fit.log_normalized()) {
        w.write_record([t.to_string(), e.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// The checks applied to an NLS rate fit.
pub fn nls_checks(fit: &RateFit, th: &Thresholds) -> Vec<Check> {
    vec![
        Check::at_most("slope", fit.slope, th.nls_slope_max),
        Check::at_least("r²", fit.r_squared, th.nls_r_squared_min),
        Check::holds(
            format!("e·t/ln t decreasing on the largest {} times", th.monotone_tail),
            fit.log_normalized_decreasing(th.monotone_tail),
        ),
    ]
}

impl Experiment for NlsRatesExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            profile: ProfileSpec::gaussian(tol::nls::AMPLITUDE),
            pde: PdeConfig {
                half_box: tol::nls::HALF_BOX,
                points: tol::nls::POINTS,
                dt: tol::nls::DT,
                ..PdeConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let res = run_nls_rate_experiment(cfg)?;
        let mut files = Vec::new();
        if let Some(p) = cfg.out_path("nls_rates.csv")? {
            write_fit_csv(&res.fit, &p)?;
            files.push(p);
        }
        Ok(ExperimentOutput {
            checks: nls_checks(&res.fit, &cfg.thresholds),
            data: serde_json::to_value(&res)?,
            files,
        })
    }
}

// ---------------------------------------------------------------------------
// rates-linear
// ---------------------------------------------------------------------------

/// Rate fits of one coefficient set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearRates {
    pub coefficient_set: String,
    pub constants: BetaGamma,
    /// One fit per partial-sum order `0..=n`.
    pub fits: Vec<RateFit>,
}

/// Partial sums of order `0..=n` against the spectral oracle, sup over the
/// configured `x` values, for every configured coefficient set.
pub fn run_linear_rate_experiment(cfg: &ExperimentConfig) -> Result<Vec<LinearRates>> {
    let q0 = cfg.profile.grid()?;
    let t_max = *cfg.times.last().expect("validated non-empty");
    let oracle = LinearOracle::new(&q0, t_max, cfg.linear.oracle_tol)?;
    let sets = coefficient_registry();
    let mut out = Vec::new();
    for name in &cfg.linear.coefficient_sets {
        let consts = sets.get(name)?.coefficients(cfg.linear.orders, cfg.linear.quad_tol)?;
        let mut sup = vec![vec![0.0f64; cfg.times.len()]; cfg.linear.orders + 1];
        let mut rows = Vec::new();
        for &x in &cfg.linear.x_values {
            let table = linear_rate_table(&q0, &oracle, &consts, x, &cfg.times)?;
            for (j, row) in table.iter().enumerate() {
                for (m, e) in row.errors().into_iter().enumerate() {
                    sup[m][j] = sup[m][j].max(e);
                }
            }
            rows.extend(table);
        }
        if let Some(p) = cfg.out_path(&format!("linear_rates_{name}.csv"))? {
            write_rate_csv(&rows, &p)?;
        }
        let fits = sup
            .iter()
            .map(|errs| RateFit::fit(&cfg.times, errs, cfg.fit_points_for(cfg.times.len())))
            .collect::<Result<Vec<_>>>()?;
        out.push(LinearRates {
            coefficient_set: name.clone(),
            constants: consts,
            fits,
        });
    }
    Ok(out)
}

/// Slope bounds for the first set; the others are diagnostics.
pub fn linear_checks(res: &[LinearRates], th: &Thresholds) -> Vec<Check> {
    let mut checks = Vec::new();
    for (i, lr) in res.iter().enumerate() {
        let primary = i == 0;
        let mark = |c: Check| if primary { c } else { c.diagnostic() };
        for (n, (fit, &bound)) in lr.fits.iter().zip(&th.linear_slopes).enumerate() {
            checks.push(mark(Check::at_most(
                format!("{}: slope(n={n})", lr.coefficient_set),
                fit.slope,
                bound,
            )));
        }
        checks.push(mark(Check::at_most(
            format!("{}: β/γ two-method disagreement", lr.coefficient_set),
            lr.constants.method_disagreement,
            th.beta_gamma_agreement,
        )));
    }
    checks
}

impl Experiment for LinearRatesExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            profile: ProfileSpec::gaussian(1.0),
            times: tol::linear::TIMES.to_vec(),
            fit_points: tol::linear::TIMES.len(),
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let res = run_linear_rate_experiment(cfg)?;
        let files = match &cfg.out_dir {
            Some(dir) => cfg
                .linear
                .coefficient_sets
                .iter()
                .map(|n| dir.join(format!("linear_rates_{n}.csv")))
                .collect(),
            None => Vec::new(),
        };
        Ok(ExperimentOutput {
            checks: linear_checks(&res, &cfg.thresholds),
            data: serde_json::to_value(&res)?,
            files,
        })
    }
}

// ---------------------------------------------------------------------------
// rates-appendix-a
// ---------------------------------------------------------------------------

/// Output of [`run_appendix_a_rates`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixARates {
    pub z0: f64,
    pub series: Vec<RemainderSeries>,
    /// Fits of `|I(t)|`, in the order of [`Remainder::ALL`].
    pub fits: Vec<RateFit>,
    /// `|Ĩ₀| t^{5/4} / ln t` over the schedule.
    pub tilde_i0_normalized: Vec<f64>,
}

impl AppendixARates {
    pub fn fit_of(&self, which: Remainder) -> &RateFit {
        let i = Remainder::ALL.iter().position(|&w| w == which).expect("listed family");
        &self.fits[i]
    }
}

/// The four remainder families at every scheduled time, with fitted slopes.
pub fn run_appendix_a_rates(cfg: &ExperimentConfig) -> Result<AppendixARates> {
    let sd = cfg.scattering_data()?;
    run_appendix_a_rates_with(cfg, &sd)
}

/// [`run_appendix_a_rates`] on precomputed scattering data.
pub fn run_appendix_a_rates_with(cfg: &ExperimentConfig, sd: &ScatteringData) -> Result<AppendixARates> {
    let lp = LocalParams::compute(sd, cfg.z0)?;
    let mut series = Vec::new();
    let mut fits = Vec::new();
    for which in Remainder::ALL {
        let s = remainder_series(which, &lp, sd, &cfg.times, &cfg.remainder)?;
        log::info!("rates-appendix-a: {} = {:?}", which.label(), s.magnitudes());
        if sd.is_trivial() {
            // Identically zero integrals have no rate; report zeros.
            fits.push(RateFit {
                ts: cfg.times.clone(),
                errs: s.magnitudes(),
                slope: f64::NEG_INFINITY,
                intercept: f64::NEG_INFINITY,
                r_squared: 1.0,
                fit_points: 0,
                degenerate: false,
            });
        } else {
            fits.push(RateFit::fit(&cfg.times, &s.magnitudes(), cfg.fit_points_for(cfg.times.len()))?);
        }
        series.push(s);
    }
    let tilde_i0_normalized = series[2].normalized_log();
    Ok(AppendixARates {
        z0: cfg.z0,
        series,
        fits,
        tilde_i0_normalized,
    })
}

/// Growth of `|Ĩ₀| t^{5/4}/ln t` over the schedule relative to its first value.
pub fn tilde_i0_growth(res: &AppendixARates) -> f64 {
    let v = &res.tilde_i0_normalized;
    match v.first() {
        Some(&first) if first > 0.0 => v.iter().cloned().fold(0.0, f64::max) / first,
        _ => 0.0,
    }
}

pub fn appendix_a_checks(res: &AppendixARates, th: &Thresholds) -> Vec<Check> {
    vec![
        Check::at_most("slope(Î₂)", res.fit_of(Remainder::HatI2).slope, th.slope_hat_i2),
        Check::at_most("slope(Ī₂,₂)", res.fit_of(Remainder::BarI22).slope, th.slope_bar_i22),
        Check::at_most("slope(I₃)", res.fit_of(Remainder::I3).slope, th.slope_i3),
        Check::at_most("max(Ĩ₀ t^{5/4}/ln t)/first", tilde_i0_growth(res), th.tilde_i0_growth),
    ]
}

fn write_remainder_csv(res: &AppendixARates, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["family", "t", "re", "im", "abs"])?;
    for s in &res.series {
        for (t, v) in s.ts.iter().zip(&s.values) {
            w.write_record([
                s.family.label().to_string(),
                t.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                v.norm().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

impl Experiment for AppendixARatesExperiment {
    fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.name().into(),
            profile: ProfileSpec::sech(0.3),
            times: tol::remainder::TIMES.to_vec(),
            fit_points: tol::remainder::TIMES.len(),
            z0: 0.3,
            ..ExperimentConfig::default()
        }
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        let res = run_appendix_a_rates(cfg)?;
        let mut files = Vec::new();
        if let Some(p) = cfg.out_path("appendix_a_rates.csv")? {
            write_remainder_csv(&res, &p)?;
            files.push(p);
        }
        let checks = if res.series.iter().all(|s| s.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))) {
            vec![Check::holds("all remainder integrals vanish", true)]
        } else {
            appendix_a_checks(&res, &cfg.thresholds)
        };
        Ok(ExperimentOutput {
            checks,
            data: serde_json::to_value(&res)?,
            files,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_law_fits_exactly() {
        let ts = [25.0, 50.0, 100.0, 200.0, 400.0];
        let errs: Vec<f64> = ts.iter().map(|t: &f64| t.powf(-0.75)).collect();
        let fit = RateFit::fit(&ts, &errs, 5).unwrap();
        assert!((fit.slope + 0.75).abs() < tol::fit::POWER_LAW_EXACT, "{}", fit.slope);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(!fit.degenerate);
    }

    #[test]
    fn fit_uses_only_the_largest_times() {
        let ts = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        // The first point is off the power law and must not matter.
        let mut errs: Vec<f64> = ts.iter().map(|t: &f64| 3.0 * t.powf(-1.5)).collect();
        errs[0] = 100.0;
        let fit = RateFit::fit(&ts, &errs, 5).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert_eq!(fit.errs.len(), 6);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        assert!(RateFit::fit(&ts, &[1.0, 0.5, 0.3], 3).is_err());
        assert!(RateFit::fit(&ts, &[1.0, 0.5, 0.3, 0.2], 3).is_err());
        assert!(RateFit::fit(&ts, &[1.0, 0.5, 0.0, 0.2], 4).is_err());
        assert!(RateFit::fit(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4], 4).is_err());
    }

    #[test]
    fn noisy_fit_is_flagged() {
        let ts = [1.0, 2.0, 3.0, 4.0, 5.0];
        let fit = RateFit::fit(&ts, &[1.0, 3.0, 0.5, 2.0, 1.0], 5).unwrap();
        assert!(fit.degenerate && fit.r_squared < 0.9);
    }

    #[test]
    fn log_normalized_monotonicity() {
        let ts = [25.0, 50.0, 100.0, 200.0, 400.0];
        let fast: Vec<f64> = ts.iter().map(|t: &f64| t.powf(-1.2)).collect();
        assert!(RateFit::fit(&ts, &fast, 5).unwrap().log_normalized_decreasing(3));
        let slow: Vec<f64> = ts.iter().map(|t: &f64| t.ln() / t * (1.0 + 0.1 * t.ln())).collect();
        assert!(!RateFit::fit(&ts, &slow, 5).unwrap().log_normalized_decreasing(3));
    }

    #[test]
    fn config_round_trips_and_validates() {
        for name in experiment_registry().names() {
            let cfg = default_config(&name).unwrap();
            assert_eq!(cfg.experiment, name);
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        }
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"alpha": {"tol": -1.0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"times": [2.0, 1.0]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"fit_points": 3}"#).is_err());
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "alpha", "z0_points": 3, "z0_window": [-1.0, 1.0]}"#)
            .unwrap();
        assert_eq!(cfg.z0_values(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn unknown_experiment_is_reported() {
        let cfg = ExperimentConfig {
            experiment: "nope".into(),
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn zero_data_gives_zero_alphas_and_remainders() {
        let mut cfg = AlphaExperiment.default_config();
        cfg.profile = ProfileSpec::zero();
        cfg.z0_points = 2;
        let res = run_alpha_cancellation(&cfg).unwrap();
        for r in &res.reports {
            assert_eq!(r.alphas.max_alpha3(), 0.0);
            assert_eq!(r.residual_14, 0.0);
            assert_eq!(r.residual_36, 0.0);
        }
        let mut cfg = AppendixARatesExperiment.default_config();
        cfg.profile = ProfileSpec::zero();
        let report = run_experiment(&cfg).unwrap();
        assert!(report.passed);
        let res = run_appendix_a_rates(&cfg).unwrap();
        assert!(res.series.iter().all(|s| s.magnitudes().iter().all(|&m| m == 0.0)));
    }

    #[test]
    fn report_is_versioned_and_written() {
        let dir = std::env::temp_dir().join(format!("nlsasym-report-{}", std::process::id()));
        let mut cfg = EvolveExperiment.default_config();
        cfg.pde = PdeConfig {
            half_box: 40.0,
            points: 1024,
            dt: 0.01,
            ..PdeConfig::default()
        };
        cfg.times = vec![0.5, 1.0];
        cfg.snapshot_stride = 64;
        cfg.out_dir = Some(dir.clone());
        let report = run_experiment(&cfg).unwrap();
        assert!(report.passed, "{:?}", report.checks);
        assert_eq!(report.schema_version, SCHEMA_VERSION);
        let text = std::fs::read_to_string(dir.join("evolve.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["config"]["thresholds"]["mass_drift"], tol::pde::MASS_DRIFT);
        assert!(dir.join("snapshots.csv").exists());
        std::fs::remove_dir_all(&dir).ok();
    }
}
