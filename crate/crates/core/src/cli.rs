//! Command-line driver.
//!
//! Every run is described by one JSON file:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "units": "nondimensional",
//!   "params": { "k": 0.5, "eta": 1.0 },
//!   "controller": { "mode": "damping", "gamma_x": 1.0, "gamma_p": 1.0 },
//!   "init": { "kind": "steady" },
//!   "horizon": 40.0,
//!   "dt": 5e-4,
//!   "n_traj": 1000,
//!   "base_seed": 7
//! }
//! ```
//!
//! Results go to `--out` (or the first entry of `outputs`, or stdout).
//! Failures print a JSON error object on stderr and exit with 2 (bad
//! config), 3 (numerical failure) or 4 (verification failed).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::feedback::{
    analytic_excess, noise_cancelling_gains, run_ensemble, simulate_trajectory, ControllerSpec, EnsembleOptions,
    TrajectoryRecord,
};
use crate::fock::verify::{verify, VerifyConfig};
use crate::fock::{SmeOptions, SmeScheme, DEFAULT_LEAK_TOL};
use crate::gaussian::{converge_covariances, purity, steady_state_covariances, Covariances, GaussianState};
use crate::lqg::{ControlDesign, CostWeights};
use crate::model::{measurement_constant, regime_numbers, CavitySetup, PhysicalParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Reduced Planck constant in J s, used when `units` is `"si"` and no
/// `hbar` is given.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

pub const CSV_COLUMNS: [&str; 12] = [
    "t", "mean_x", "mean_p", "v_x", "v_p", "c", "dq", "u_x", "u_p", "j_state", "j_control", "j_floor",
];

#[derive(Debug, Parser)]
#[command(name = "qfeedback", version, about = "Feedback control of a continuously measured oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for ensembles.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the Riccati equation and report gains and steady-state covariances.
    Design,
    /// Run one closed-loop trajectory and write it as CSV.
    Simulate,
    /// Run an ensemble and report excess covariances and costs as JSON.
    Ensemble,
    /// Compare the density-matrix oracle with the Gaussian filter.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nondimensional,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub m: Option<f64>,
    pub omega: Option<f64>,
    pub hbar: Option<f64>,
    /// Measurement constant; must be absent when a cavity is given.
    pub k: Option<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuation {
    #[default]
    Full,
    PositionOnly,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    #[default]
    None,
    Damping {
        gamma_x: f64,
        gamma_p: f64,
        cost_q: Option<f64>,
    },
    Estimation {
        k_gain: [[f64; 2]; 2],
        cost_q: Option<f64>,
    },
    /// Optimal gain for the energy cost with control weight `q^2`.
    Lqg {
        q: f64,
        #[serde(default)]
        actuation: Actuation,
    },
    /// Feedback of the raw record. With `cancel_noise` the gains are set to
    /// `(2C, -2V_x)` of the steady conditional state.
    Direct {
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default)]
        cancel_noise: bool,
    },
    Combined {
        k_gain: [[f64; 2]; 2],
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default)]
        cancel_noise: bool,
        cost_q: Option<f64>,
    },
}

fn default_nbar() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// `V_x = (nbar + 1/2) hbar / (m omega)`, `V_p = (nbar + 1/2) hbar m omega`.
    Thermal {
        #[serde(default = "default_nbar")]
        nbar: f64,
        #[serde(default)]
        mean_x: f64,
        #[serde(default)]
        mean_p: f64,
    },
    Ground {
        #[serde(default)]
        mean_x: f64,
        #[serde(default)]
        mean_p: f64,
    },
    /// Steady conditional covariances.
    Steady {
        #[serde(default)]
        mean_x: f64,
        #[serde(default)]
        mean_p: f64,
    },
    Explicit {
        mean_x: f64,
        mean_p: f64,
        v_x: f64,
        v_p: f64,
        c: f64,
    },
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Thermal {
            nbar: default_nbar(),
            mean_x: 0.0,
            mean_p: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Q,
    K,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub dim: usize,
    pub tolerance: f64,
    pub sample_interval: f64,
    pub scheme: SmeScheme,
    pub leak_tol: f64,
    pub paths: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        let std = VerifyConfig::standard(PhysicalParams::nondimensional(0.1, 1.0).expect("valid"))
            .expect("valid standard config");
        VerifySettings {
            dim: std.dim,
            tolerance: std.tolerance,
            sample_interval: std.sample_interval,
            scheme: std.options.scheme,
            leak_tol: DEFAULT_LEAK_TOL,
            paths: std.paths,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub units: Units,
    pub params: ParamsConfig,
    /// Derive `k` from a cavity read-out instead of giving it directly.
    #[serde(default)]
    pub cavity: Option<CavitySetup>,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub init: InitConfig,
    /// Run the covariance flow to its fixed point before the loop starts.
    #[serde(default)]
    pub preconverge: bool,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub n_traj: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Start of the ensemble averaging window.
    #[serde(default)]
    pub tail_start: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
}

/// Failure of a CLI run, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub field: Option<String>,
    pub message: String,
    pub details: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
    Verification,
}

impl CliError {
    pub fn config(field: Option<&str>, message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            field: field.map(str::to_owned),
            message: message.into(),
            details: Value::Null,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            kind: ErrorKind::Io,
            field: None,
            message: format!("{}: {e}", path.display()),
            details: Value::Null,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numerical | ErrorKind::Io => 3,
            ErrorKind::Verification => 4,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "error": {
                "kind": self.kind,
                "field": self.field,
                "message": self.message,
                "details": self.details,
            }
        })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let mut details = serde_json::Map::new();
        if let Error::AtStep { step, .. } = &e {
            details.insert("step".into(), json!(step));
        }
        let (kind, field) = match e.root() {
            Error::InvalidParameter { field, .. } => (ErrorKind::Config, Some(field.clone())),
            Error::StepTooLarge { limit, .. } => {
                details.insert("limit".into(), json!(limit));
                (ErrorKind::Config, Some("dt".to_owned()))
            }
            Error::InvalidCovariance { .. } => (ErrorKind::Config, Some("init".to_owned())),
            Error::NotStabilizable { .. } | Error::SingularControlWeight => {
                (ErrorKind::Config, Some("controller".to_owned()))
            }
            Error::Leakage { dim, population, .. } => {
                details.insert("dim".into(), json!(dim));
                details.insert("population".into(), json!(population));
                (ErrorKind::Numerical, None)
            }
            _ => (ErrorKind::Numerical, None),
        };
        CliError {
            kind,
            field,
            message,
            details: if details.is_empty() { Value::Null } else { Value::Object(details) },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses and checks a config. Physical and controller preconditions are
/// checked later by [`Experiment::from_config`].
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        // serde names the offending field in backquotes
        let field = msg.split('`').nth(1).map(str::to_owned);
        CliError {
            kind: ErrorKind::Config,
            field,
            message: msg,
            details: Value::Null,
        }
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(
            Some("schema_version"),
            format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
        ));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError {
        kind: ErrorKind::Config,
        field: None,
        message: format!("cannot read config {}: {e}", path.display()),
        details: Value::Null,
    })?;
    parse_config(&text)
}

fn physical_params(cfg: &ExperimentConfig, k_override: Option<f64>) -> CliResult<PhysicalParams> {
    let p = &cfg.params;
    let (m, omega, hbar) = match cfg.units {
        Units::Nondimensional => {
            for (name, v) in [("m", p.m), ("omega", p.omega), ("hbar", p.hbar)] {
                if v.is_some_and(|v| v != 1.0) {
                    return Err(CliError::config(
                        Some(name),
                        format!("nondimensional units fix {name} = 1"),
                    ));
                }
            }
            (1.0, 1.0, 1.0)
        }
        Units::Si => (
            p.m.ok_or_else(|| CliError::config(Some("m"), "required with si units"))?,
            p.omega.ok_or_else(|| CliError::config(Some("omega"), "required with si units"))?,
            p.hbar.unwrap_or(HBAR_SI),
        ),
    };
    let k = match (k_override, &cfg.cavity, p.k) {
        (Some(k), _, _) => k,
        (None, Some(_), Some(_)) => {
            return Err(CliError::config(Some("k"), "give either k or a cavity, not both"));
        }
        (None, Some(cav), None) => measurement_constant(cav, hbar)?,
        (None, None, Some(k)) => k,
        (None, None, None) => return Err(CliError::config(Some("k"), "missing (or give a cavity)")),
    };
    Ok(PhysicalParams::new(m, omega, hbar, k, p.eta)?)
}

fn matrix(m: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

fn rows(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn complex(z: &Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn cancelling(params: &PhysicalParams) -> CliResult<(f64, f64)> {
    Ok(noise_cancelling_gains(&steady_state_covariances(params)?))
}

fn energy_cost(params: &PhysicalParams, q: Option<f64>) -> Option<CostWeights> {
    q.map(|q| CostWeights::energy(params, q))
}

/// A fully resolved run: parameters, controller and initial state.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub params: PhysicalParams,
    pub controller: ControllerSpec,
    pub design: Option<ControlDesign>,
    pub init: GaussianState,
}

impl Experiment {
    /// Resolves a config, optionally overriding `q` or `k`.
    pub fn from_config(cfg: &ExperimentConfig, q: Option<f64>, k: Option<f64>) -> CliResult<Self> {
        let params = physical_params(cfg, k)?;
        let mut design = None;
        let controller = match &cfg.controller {
            ControllerConfig::None => ControllerSpec::none(),
            ControllerConfig::Damping { gamma_x, gamma_p, cost_q } => {
                with_cost(ControllerSpec::damping(*gamma_x, *gamma_p), energy_cost(&params, *cost_q))
            }
            ControllerConfig::Estimation { k_gain, cost_q } => {
                with_cost(ControllerSpec::estimation(matrix(*k_gain)), energy_cost(&params, *cost_q))
            }
            ControllerConfig::Lqg { q: q_cfg, actuation } => {
                let q = q.unwrap_or(*q_cfg);
                let d = match actuation {
                    Actuation::Full => ControlDesign::harmonic(&params, q)?,
                    Actuation::PositionOnly => ControlDesign::position_only(&params, q)?,
                };
                let spec = ControllerSpec::from_design(&d);
                design = Some(d);
                spec
            }
            ControllerConfig::Direct { alpha, beta, cancel_noise } => {
                let (a, b) = if *cancel_noise { cancelling(&params)? } else { (*alpha, *beta) };
                ControllerSpec::direct(a, b)
            }
            ControllerConfig::Combined {
                k_gain,
                alpha,
                beta,
                cancel_noise,
                cost_q,
            } => {
                let (a, b) = if *cancel_noise { cancelling(&params)? } else { (*alpha, *beta) };
                with_cost(ControllerSpec::combined(matrix(*k_gain), a, b), energy_cost(&params, *cost_q))
            }
        };
        if q.is_some() && design.is_none() {
            return Err(CliError::config(Some("sweep"), "sweeping q needs an lqg controller"));
        }
        controller.validate()?;

        let (mx, mp, mut cov) = match cfg.init {
            InitConfig::Thermal { nbar, mean_x, mean_p } => {
                if !(nbar.is_finite() && nbar >= 0.0) {
                    return Err(CliError::config(Some("nbar"), "must be >= 0"));
                }
                (mean_x, mean_p, Covariances::thermal(&params, nbar))
            }
            InitConfig::Ground { mean_x, mean_p } => (mean_x, mean_p, Covariances::ground(&params)),
            InitConfig::Steady { mean_x, mean_p } => (mean_x, mean_p, steady_state_covariances(&params)?),
            InitConfig::Explicit {
                mean_x,
                mean_p,
                v_x,
                v_p,
                c,
            } => (mean_x, mean_p, Covariances::new(v_x, v_p, c)),
        };
        if cfg.preconverge && params.k > 0.0 {
            cov = converge_covariances(&params, cov, 1e-12, 1e9)?.0;
        }
        let init = GaussianState::new(mx, mp, cov)?;
        Ok(Experiment {
            params,
            controller,
            design,
            init,
        })
    }
}

fn with_cost(spec: ControllerSpec, cost: Option<CostWeights>) -> ControllerSpec {
    match cost {
        Some(c) => spec.with_cost(c),
        None => spec,
    }
}

fn require(v: Option<f64>, field: &str) -> CliResult<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(_) => Err(CliError::config(Some(field), "must be > 0")),
        None => Err(CliError::config(Some(field), "missing")),
    }
}

/// `(q, k)` overrides for each sweep point, or a single `(None, None)`.
fn sweep_points(cfg: &ExperimentConfig) -> CliResult<Vec<(Option<f64>, Option<f64>)>> {
    match &cfg.sweep {
        None => Ok(vec![(None, None)]),
        Some(s) if s.values.is_empty() => Err(CliError::config(Some("values"), "sweep needs at least one value")),
        Some(s) => Ok(s
            .values
            .iter()
            .map(|&v| match s.parameter {
                SweepParameter::Q => (Some(v), None),
                SweepParameter::K => (None, Some(v)),
            })
            .collect()),
    }
}

fn no_sweep(cfg: &ExperimentConfig, command: &str) -> CliResult<()> {
    if cfg.sweep.is_some() {
        return Err(CliError::config(Some("sweep"), format!("{command} does not support sweeps")));
    }
    Ok(())
}

fn sweep_label(point: (Option<f64>, Option<f64>)) -> Value {
    match point {
        (Some(q), _) => json!({ "q": q }),
        (_, Some(k)) => json!({ "k": k }),
        _ => Value::Null,
    }
}

fn covariance_json(c: &Covariances) -> Value {
    json!({ "v_x": c.v_x, "v_p": c.v_p, "c": c.c })
}

/// Gains, closed-loop poles and the steady-state table for each sweep point.
pub fn cmd_design(cfg: &ExperimentConfig) -> CliResult<Value> {
    if !matches!(cfg.controller, ControllerConfig::Lqg { .. }) {
        return Err(CliError::config(Some("controller"), "design needs an lqg controller"));
    }
    let mut records = Vec::new();
    for point in sweep_points(cfg)? {
        let exp = Experiment::from_config(cfg, point.0, point.1)?;
        let d = exp.design.expect("lqg controller has a design");
        let p = exp.params;
        let steady = if p.k > 0.0 && p.omega > 0.0 {
            let cov = steady_state_covariances(&p)?;
            let rn = regime_numbers(&p)?;
            json!({
                "r": rn.r,
                "xi": rn.xi,
                "covariances": covariance_json(&cov),
                "covariances_tilde": covariance_json(&cov.to_tilde(&p)),
                "purity": purity(cov.v_x, cov.v_p, cov.c, p.hbar)?,
            })
        } else {
            Value::Null
        };
        records.push(json!({
            "sweep": sweep_label(point),
            "params": p,
            "q": d.q_scalar,
            "k_gain": rows(&d.k_gain),
            "riccati_solution": rows(&d.u_care),
            "closed_loop_eigenvalues": d.closed_loop.iter().map(complex).collect::<Vec<_>>(),
            "relative_residual": d.relative_residual,
            "psd_solutions": d.psd_solutions,
            "steady_state": steady,
        }));
    }
    Ok(json!({ "schema_version": SCHEMA_VERSION, "command": "design", "records": records }))
}

/// One trajectory as CSV text.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> CliResult<String> {
    no_sweep(cfg, "simulate")?;
    let exp = Experiment::from_config(cfg, None, None)?;
    let horizon = require(cfg.horizon, "horizon")?;
    let dt = require(cfg.dt, "dt")?;
    let rec = simulate_trajectory(&exp.params, &exp.controller, exp.init, horizon, dt, cfg.base_seed)?;
    Ok(trajectory_csv(&rec))
}

/// CSV rendering with every float at 17 significant digits.
pub fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(220 * (rec.len() + 2));
    let _ = writeln!(out, "# schema_version: {SCHEMA_VERSION}");
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for i in 0..rec.len() {
        let s = &rec.states[i];
        let c = &rec.costs[i];
        let u = rec.controls[i];
        let row = [
            rec.times[i],
            s.mean_x,
            s.mean_p,
            s.v_x,
            s.v_p,
            s.c,
            rec.records[i],
            u[0],
            u[1],
            c.j_state,
            c.j_control,
            c.j_floor,
        ];
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Ensemble statistics next to the closed forms, one record per sweep point.
pub fn cmd_ensemble(cfg: &ExperimentConfig) -> CliResult<Value> {
    let horizon = require(cfg.horizon, "horizon")?;
    let dt = require(cfg.dt, "dt")?;
    if cfg.n_traj == 0 {
        return Err(CliError::config(Some("n_traj"), "must be >= 1"));
    }
    let points = sweep_points(cfg)?;
    // resolve every point before running any
    let exps = points
        .iter()
        .map(|p| Experiment::from_config(cfg, p.0, p.1))
        .collect::<CliResult<Vec<_>>>()?;
    let options = EnsembleOptions {
        tail_start: cfg.tail_start,
    };
    let mut records = Vec::new();
    for (point, exp) in points.into_iter().zip(exps) {
        let stats = run_ensemble(
            &exp.params,
            &exp.controller,
            exp.init,
            horizon,
            dt,
            cfg.n_traj,
            cfg.base_seed,
            options,
        )?;
        let analytic = match analytic_excess(&exp.params, &exp.controller)? {
            Some((variant, tilde)) => {
                let [fx, fp, fc] = exp.params.tilde_factors();
                json!({
                    "variant": variant,
                    "excess_tilde": tilde,
                    "excess": { "ve_x": tilde.ve_x / fx, "ve_p": tilde.ve_p / fp, "ce": tilde.ce / fc },
                })
            }
            None => Value::Null,
        };
        records.push(json!({
            "sweep": sweep_label(point),
            "params": exp.params,
            "n_traj": stats.n_traj,
            "base_seed": stats.base_seed,
            "dt": stats.dt,
            "horizon": stats.horizon,
            "tail_start": stats.tail_start,
            "tail_steps": stats.tail_steps,
            "empirical": {
                "excess": stats.excess,
                "excess_tilde": stats.excess_tilde,
                "standard_error": stats.standard_error,
                "standard_error_tilde": stats.standard_error_tilde,
                "mean": stats.mean,
            },
            "analytic": analytic,
            "conditional": covariance_json(&stats.conditional),
            "conditional_tilde": covariance_json(&stats.conditional_tilde),
            "mean_cost": {
                "j_state": stats.mean_cost.j_state,
                "j_control": stats.mean_cost.j_control,
                "j_floor": stats.mean_cost.j_floor,
                "total": stats.mean_cost.total(),
            },
        }));
    }
    Ok(json!({ "schema_version": SCHEMA_VERSION, "command": "ensemble", "records": records }))
}

/// Oracle comparison report; a failed comparison is returned as the report
/// together with `passed = false`.
pub fn cmd_verify(cfg: &ExperimentConfig) -> CliResult<(Value, bool)> {
    no_sweep(cfg, "verify")?;
    let exp = Experiment::from_config(cfg, None, None)?;
    if exp.controller.uses_estimate() {
        return Err(CliError::config(
            Some("controller"),
            "verify supports only none or direct feedback",
        ));
    }
    let mut vc = VerifyConfig::standard(exp.params)?;
    vc.init = exp.init;
    vc.alpha = exp.controller.alpha;
    vc.beta = exp.controller.beta;
    vc.seed = cfg.base_seed;
    if let Some(dt) = cfg.dt {
        vc.dt = require(Some(dt), "dt")?;
    }
    if let Some(h) = cfg.horizon {
        vc.horizon = require(Some(h), "horizon")?;
    }
    let v = &cfg.verify;
    vc.dim = v.dim;
    vc.tolerance = v.tolerance;
    vc.sample_interval = v.sample_interval;
    vc.paths = v.paths;
    vc.options = SmeOptions {
        scheme: v.scheme,
        leak_tol: v.leak_tol,
    };
    let report = verify(&vc)?;
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "dim": vc.dim,
        "params": exp.params,
        "alpha": vc.alpha,
        "beta": vc.beta,
        "report": report,
    });
    Ok((value, report.passed))
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Runs a parsed command line. On success returns what was written.
pub fn run(cli: &Cli) -> CliResult<()> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::config(Some("config"), "--config <path> is required"))?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    let out = cli.out.clone().or_else(|| cfg.outputs.first().cloned());
    let pool = match cli.jobs {
        Some(0) => return Err(CliError::config(Some("jobs"), "must be >= 1")),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n.unwrap_or(0))
            .build()
            .map_err(|e| CliError::config(Some("jobs"), e.to_string()))?,
    };
    pool.install(|| match cli.command {
        Command::Design => write_output(out.as_deref(), &pretty(&cmd_design(&cfg)?)),
        Command::Simulate => write_output(out.as_deref(), &cmd_simulate(&cfg)?),
        Command::Ensemble => write_output(out.as_deref(), &pretty(&cmd_ensemble(&cfg)?)),
        Command::Verify => {
            let (report, passed) = cmd_verify(&cfg)?;
            write_output(out.as_deref(), &pretty(&report))?;
            if passed {
                Ok(())
            } else {
                Err(CliError {
                    kind: ErrorKind::Verification,
                    field: None,
                    message: "oracle and filter disagree beyond tolerance or order".into(),
                    details: report["report"].clone(),
                })
            }
        }
    })
}

/// Entry point used by the binary: parses `std::env::args`, runs, and
/// returns the process exit code.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
