//! Command-line front end. Every command renders its outputs in memory as
//! named artifacts; `replay` re-executes the embedded configuration of an
//! artifact and compares bytes.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::eigenfield::{separable_candidate_residual, Eigenfield};
use crate::error::{Error, Result};
use crate::fdsolve::{self, voxel::VoxelFile, GridField, Shape, SolveConfig};
use crate::geometry::{gamma_bounds, Domain, ShapeParams};
use crate::measure::{self, DERIVATIVE_STEP};
use crate::symmat::EllipticityParams;
use crate::verifier::{self, shear_lower_bound};

pub const SCHEMA: u32 = 1;

/// Fixed header of the scan table.
pub const SCAN_HEADER: [&str; 10] = ["omega", "gamma", "a", "V", "V_err", "Vprime", "N", "method", "seed", "flag"];

#[derive(Debug, Parser)]
#[command(name = "pucci", version, about = "Pucci eigenpair verification toolkit")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the residual, C¹, boundary, shear-bound and block suites.
    Verify(CommonArgs),
    /// Tabulate volume and normalized functional over a (γ, a) grid.
    Scan(ScanArgs),
    /// Finite-difference eigenvalue estimate.
    Solve(SolveArgs),
    /// Domain volume by quadrature and/or Monte Carlo.
    Volume(VolumeArgs),
    /// Residual of the separable product-of-cosines candidate.
    Nonsep(NonsepArgs),
    /// Regenerate an output file from its embedded configuration and compare.
    Replay { file: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Ellipticity ratio Λ/λ (λ = 1).
    #[arg(long, conflicts_with_all = ["lambda", "big_lambda"])]
    pub omega: Option<f64>,
    /// Lower ellipticity constant λ.
    #[arg(long, requires = "big_lambda")]
    pub lambda: Option<f64>,
    /// Upper ellipticity constant Λ.
    #[arg(long = "Lambda", id = "big_lambda", requires = "lambda")]
    pub big_lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory (default: print to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.8, 1.0, 1.25, 1.67])]
    pub gammas: Vec<f64>,
    #[arg(long = "as", value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0], allow_negative_numbers = true)]
    pub a_values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid spacing (default π/32).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 400)]
    pub maxit: usize,
    #[arg(long, value_enum, default_value_t = ShapeArg::Pucci)]
    pub shape: ShapeArg,
    /// Dilation factor applied to the shape.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Mask file in voxel format; overrides --shape.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Also emit the eigenfunction as a voxel file.
    #[arg(long)]
    pub write_field: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VolumeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
    pub method: MethodArg,
}

#[derive(Debug, Clone, Args)]
pub struct NonsepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Grid points on θ ∈ [0, π/2].
    #[arg(long, default_value_t = 10_001)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeArg {
    Pucci,
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Quadrature,
    MonteCarlo,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Verify,
    Scan,
    Solve,
    Volume,
    Nonsep,
}

/// Resolved run configuration, embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub omega: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
    pub a: f64,
    pub samples: usize,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_field: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_values: Option<Vec<f64>>,
}

impl RunConfig {
    fn base(command: CommandKind, c: &CommonArgs) -> Result<Self> {
        let (lambda, big_lambda) = match (c.omega, c.lambda, c.big_lambda) {
            (Some(w), None, None) => (1.0, w),
            (None, Some(l), Some(bl)) => (l, bl),
            _ => return Err(Error::Parameter("give exactly one of --omega or --lambda with --Lambda".into())),
        };
        let ep = EllipticityParams::new(lambda, big_lambda)?;
        Ok(RunConfig {
            command,
            omega: ep.omega(),
            lambda,
            big_lambda,
            gamma: c.gamma,
            a: c.a,
            samples: c.samples,
            seed: c.seed,
            format: c.format,
            out: c.out.clone(),
            h: None,
            tol: None,
            max_iterations: None,
            shape: None,
            scale: None,
            mask: None,
            write_field: None,
            method: None,
            n: None,
            points: None,
            gammas: None,
            a_values: None,
        })
    }

    /// Resolves parsed arguments. `Replay` has no configuration and yields `None`.
    pub fn from_command(cmd: &Command) -> Result<Option<Self>> {
        let cfg = match cmd {
            Command::Verify(c) => RunConfig::base(CommandKind::Verify, c)?,
            Command::Scan(s) => RunConfig {
                gammas: Some(s.gammas.clone()),
                a_values: Some(s.a_values.clone()),
                ..RunConfig::base(CommandKind::Scan, &s.common)?
            },
            Command::Solve(s) => RunConfig {
                h: Some(s.h.unwrap_or(PI / 32.0)),
                tol: Some(s.tol),
                max_iterations: Some(s.maxit),
                shape: Some(s.shape),
                scale: Some(s.scale),
                mask: s.mask.clone(),
                write_field: Some(s.write_field),
                ..RunConfig::base(CommandKind::Solve, &s.common)?
            },
            Command::Volume(v) => RunConfig { method: Some(v.method), ..RunConfig::base(CommandKind::Volume, &v.common)? },
            Command::Nonsep(n) => RunConfig {
                n: Some(n.n),
                points: Some(n.points),
                ..RunConfig::base(CommandKind::Nonsep, &n.common)?
            },
            Command::Replay { .. } => return Ok(None),
        };
        Ok(Some(cfg))
    }

    pub fn ellipticity(&self) -> Result<EllipticityParams> {
        EllipticityParams::new(self.lambda, self.big_lambda)
    }

    pub fn domain(&self) -> Result<Domain> {
        let ep = self.ellipticity()?;
        Ok(Domain::new(ep, ShapeParams::new(self.gamma, self.a, &ep)?))
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub exit_code: i32,
    pub summary: String,
}

/// Values derived from the configuration, echoed for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub omega: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub s: f64,
    pub kappa: f64,
    pub beta: f64,
    pub shear_det: f64,
    pub shear_lower_bound: f64,
}

impl Derived {
    fn new(d: &Domain) -> Self {
        let (gamma_min, gamma_max) = gamma_bounds(&d.ep);
        Derived {
            omega: d.ep.omega(),
            lambda: d.ep.lambda(),
            big_lambda: d.ep.big_lambda(),
            gamma_min,
            gamma_max,
            s: d.sp.s(),
            kappa: d.sp.kappa(),
            beta: d.sp.beta(),
            shear_det: d.sp.shear_det(),
            shear_lower_bound: shear_lower_bound(&d.ep, d.sp.a()),
        }
    }
}

fn json_artifact(name: &str, cfg: &RunConfig, d: &Domain, exit_code: i32, result: Value) -> Result<Artifact> {
    let doc = json!({
        "schema": SCHEMA,
        "artifact": name,
        "config": cfg,
        "derived": Derived::new(d),
        "exit_code": exit_code,
        "result": result,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(Artifact { name: name.to_string(), bytes })
}

/// Runs a resolved configuration. Parameter errors propagate; numerical
/// failures of the solver are rendered as diagnostic artifacts.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let d = cfg.domain()?;
    match cfg.command {
        CommandKind::Verify => cmd_verify(cfg, &d),
        CommandKind::Scan => cmd_scan(cfg, &d),
        CommandKind::Solve => cmd_solve(cfg, &d),
        CommandKind::Volume => cmd_volume(cfg, &d),
        CommandKind::Nonsep => cmd_nonsep(cfg, &d),
    }
}

fn cmd_verify(cfg: &RunConfig, d: &Domain) -> Result<Outcome> {
    let reports = verifier::run_all(&Eigenfield::new(*d), cfg.samples, cfg.seed)?;
    let mut artifacts = Vec::new();
    let mut lines = Vec::new();
    let mut all = true;
    for r in &reports {
        let code = if r.pass { 0 } else { 1 };
        all &= r.pass;
        let name = format!("verify-{}.json", r.suite.name());
        artifacts.push(json_artifact(&name, cfg, d, code, serde_json::to_value(r)?)?);
        let h = r.headline();
        lines.push(format!(
            "{:<12} {}  {} = {:e}",
            r.suite.name(),
            if r.pass { "PASS" } else { "FAIL" },
            h.name,
            h.statistic
        ));
    }
    Ok(Outcome { artifacts, exit_code: if all { 0 } else { 1 }, summary: lines.join("\n") })
}

/// One row of the scan table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub omega: f64,
    pub gamma: f64,
    pub a: f64,
    #[serde(rename = "V")]
    pub volume: Option<f64>,
    #[serde(rename = "V_err")]
    pub volume_error: Option<f64>,
    #[serde(rename = "Vprime")]
    pub volume_derivative: Option<f64>,
    #[serde(rename = "N")]
    pub normalized: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub flag: String,
}

/// Tabulates `V`, `dV/dγ` and `N` over the grid and flags the minimizer.
/// Returns the rows and whether the minimizer is the grid point nearest to
/// `(1, 0)` and strict.
pub fn scan_rows(ep: &EllipticityParams, gammas: &[f64], a_values: &[f64], seed: u64) -> (Vec<ScanRow>, bool) {
    let mut rows = Vec::new();
    for &g in gammas {
        for &a in a_values {
            let mut row = ScanRow {
                omega: ep.omega(),
                gamma: g,
                a,
                volume: None,
                volume_error: None,
                volume_derivative: None,
                normalized: None,
                method: "quadrature".into(),
                seed,
                flag: String::new(),
            };
            let sp = match ShapeParams::new(g, a, ep) {
                Ok(sp) => sp,
                Err(_) => {
                    row.flag = "invalid".into();
                    rows.push(row);
                    continue;
                }
            };
            let d = Domain::new(*ep, sp);
            match measure::volume_quadrature(&d) {
                Ok(r) => {
                    row.volume = Some(r.volume);
                    row.volume_error = Some(r.error);
                    row.normalized = Some(measure::normalized_from_volume(ep.lambda(), r.volume / sp.shear_det(), a));
                }
                Err(Error::QuadratureBudget { estimate, error }) => {
                    row.volume = Some(estimate);
                    row.volume_error = Some(error);
                    row.flag = "quad-fail".into();
                }
                Err(_) => row.flag = "quad-fail".into(),
            }
            row.volume_derivative = measure::volume_derivative(g, ep, DERIVATIVE_STEP).ok().map(|v| v * sp.shear_det());
            rows.push(row);
        }
    }
    let target_g = gammas.iter().copied().min_by(|x, y| x.ln().abs().total_cmp(&y.ln().abs()));
    let target_a = a_values.iter().copied().min_by(|x, y| x.abs().total_cmp(&y.abs()));
    let mut order: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].flag.is_empty() && rows[i].normalized.is_some()).collect();
    order.sort_by(|&i, &j| rows[i].normalized.unwrap().total_cmp(&rows[j].normalized.unwrap()));
    let mut ok = false;
    if let Some(&best) = order.first() {
        let strict = order.get(1).is_none_or(|&j| rows[j].normalized > rows[best].normalized);
        rows[best].flag = if strict { "min".into() } else { "min-tie".into() };
        ok = strict && Some(rows[best].gamma) == target_g && Some(rows[best].a) == target_a;
    }
    (rows, ok)
}

fn cmd_scan(cfg: &RunConfig, d: &Domain) -> Result<Outcome> {
    let gammas = cfg.gammas.clone().unwrap_or_default();
    let a_values = cfg.a_values.clone().unwrap_or_default();
    if gammas.is_empty() || a_values.is_empty() {
        return Err(Error::Parameter("scan grid is empty".into()));
    }
    let (rows, ok) = scan_rows(&d.ep, &gammas, &a_values, cfg.seed);
    let exit_code = if ok { 0 } else { 1 };
    let min = rows.iter().find(|r| r.flag.starts_with("min"));
    let summary = match min {
        Some(r) => format!("minimum N = {:?} at gamma = {}, a = {} ({})", r.normalized, r.gamma, r.a, if ok { "PASS" } else { "FAIL" }),
        None => "no valid rows".into(),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SCAN_HEADER)?;
    for r in &rows {
        w.serialize(r)?;
    }
    let table = String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let result = json!({ "rows": rows, "minimizer_ok": ok, "table": table });
    let artifacts = match cfg.format {
        Format::Json => vec![json_artifact("scan.json", cfg, d, exit_code, result)?],
        Format::Csv => vec![
            Artifact { name: "scan.csv".into(), bytes: table.into_bytes() },
            json_artifact("scan.run.json", cfg, d, exit_code, result)?,
        ],
    };
    Ok(Outcome { artifacts, exit_code, summary })
}

fn cmd_solve(cfg: &RunConfig, d: &Domain) -> Result<Outcome> {
    let h = cfg.h.unwrap_or(PI / 32.0);
    let (grid, reference) = match &cfg.mask {
        Some(path) => (GridField::from_mask_file(&VoxelFile::read(fs::File::open(path)?)?)?, None),
        None => {
            let scale = cfg.scale.unwrap_or(1.0);
            let (shape, reference) = match cfg.shape.unwrap_or(ShapeArg::Pucci) {
                ShapeArg::Pucci => (Shape::pucci(*d), (d.sp.a() == 0.0).then(|| d.ep.lambda() / (scale * scale))),
                ShapeArg::Cube => (Shape::cube(), (d.ep.omega() == 1.0).then(|| 3.0 * d.ep.lambda() / (scale * scale))),
            };
            (fdsolve::voxelize(&shape.scaled(scale)?, h)?, reference)
        }
    };
    let scfg = SolveConfig {
        tol: cfg.tol.unwrap_or(1e-6),
        max_iterations: cfg.max_iterations.unwrap_or(400),
        ..SolveConfig::default()
    };
    let lower = shear_lower_bound(&d.ep, d.sp.a());
    match fdsolve::solve_eigen(&grid, &d.ep, &scfg) {
        Ok(r) => {
            let late: Vec<usize> = r.positivity_events.iter().copied().filter(|&i| i > 5).collect();
            let result = json!({
                "status": "converged",
                "solution": r,
                "reference": reference,
                "relative_error": reference.map(|m| r.mu / m - 1.0),
                "shear_lower_bound": lower,
                "late_positivity_events": late,
            });
            let mut artifacts = vec![json_artifact("solve.json", cfg, d, 0, result)?];
            if cfg.write_field == Some(true) {
                if let Some(f) = &r.field {
                    let mut bytes = Vec::new();
                    f.to_values_file().write(&mut bytes)?;
                    artifacts.push(Artifact { name: "solve-field.pvox".into(), bytes });
                }
            }
            let summary = format!("mu = {} after {} iterations (spread {:e})", r.mu, r.iterations, r.spread);
            Ok(Outcome { artifacts, exit_code: 0, summary })
        }
        Err(e @ (Error::NonConvergence { .. } | Error::SolverFailure(_))) => {
            let code = e.exit_code();
            let history = match &e {
                Error::NonConvergence { history, .. } => history.clone(),
                _ => Vec::new(),
            };
            let result = json!({ "status": "error", "error": e.to_string(), "history": history, "h": h });
            Ok(Outcome { artifacts: vec![json_artifact("solve.json", cfg, d, code, result)?], exit_code: code, summary: e.to_string() })
        }
        Err(e) => Err(e),
    }
}

fn cmd_volume(cfg: &RunConfig, d: &Domain) -> Result<Outcome> {
    let method = cfg.method.unwrap_or(MethodArg::Quadrature);
    let quad = match method {
        MethodArg::Quadrature | MethodArg::Both => Some(measure::volume_quadrature(d)?),
        MethodArg::MonteCarlo => None,
    };
    let mc = match method {
        MethodArg::MonteCarlo | MethodArg::Both => Some(measure::volume_mc(d, cfg.samples, cfg.seed)?),
        MethodArg::Quadrature => None,
    };
    let z = match (&quad, &mc) {
        (Some(q), Some(m)) => Some((q.volume - m.volume).abs() / (q.error.powi(2) + m.error.powi(2)).sqrt()),
        _ => None,
    };
    let consistent = z.is_none_or(|z| z <= 4.0);
    let exit_code = if consistent { 0 } else { 1 };
    let primary = quad.as_ref().or(mc.as_ref()).expect("at least one method runs");
    let normalized = measure::normalized_from_volume(d.ep.lambda(), primary.volume / d.sp.shear_det(), d.sp.a());
    let derivative = measure::volume_derivative(d.sp.gamma(), &d.ep, DERIVATIVE_STEP).ok().map(|v| v * d.sp.shear_det());
    let result = json!({
        "quadrature": quad,
        "monte_carlo": mc,
        "z_score": z,
        "consistent": consistent,
        "volume_derivative": derivative,
        "normalized": normalized,
    });
    let summary = match z {
        Some(z) => format!("V = {} (quadrature) vs {} (monte carlo), z = {z:.3}", quad.as_ref().unwrap().volume, mc.as_ref().unwrap().volume),
        None => format!("V = {} ± {:e} ({})", primary.volume, primary.error, if quad.is_some() { "quadrature" } else { "monte carlo" }),
    };
    Ok(Outcome { artifacts: vec![json_artifact("volume.json", cfg, d, exit_code, result)?], exit_code, summary })
}

/// Worst separable-candidate residual over `θ ∈ [0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonsepSummary {
    pub n: usize,
    pub points: usize,
    pub max_abs_residual: f64,
    pub argmax_x: f64,
    pub max_abs_residual_where_precondition: f64,
    /// `max |residual − closed form|` where the closed form applies.
    pub closed_form_discrepancy: f64,
}

pub fn nonsep_sweep(ep: &EllipticityParams, n: usize, points: usize) -> Result<NonsepSummary> {
    if points < 2 {
        return Err(Error::Parameter("need at least two sweep points".into()));
    }
    let mut s = NonsepSummary {
        n,
        points,
        max_abs_residual: 0.0,
        argmax_x: 0.0,
        max_abs_residual_where_precondition: 0.0,
        closed_form_discrepancy: 0.0,
    };
    for i in 0..points {
        let theta = PI / 2.0 * i as f64 / (points - 1) as f64;
        let r = separable_candidate_residual((n as f64).sqrt() * theta, n, ep)?;
        if r.residual.abs() > s.max_abs_residual {
            s.max_abs_residual = r.residual.abs();
            s.argmax_x = r.x;
        }
        if r.precondition {
            s.max_abs_residual_where_precondition = s.max_abs_residual_where_precondition.max(r.residual.abs());
            s.closed_form_discrepancy = s.closed_form_discrepancy.max((r.residual - r.closed_form).abs());
        }
    }
    Ok(s)
}

fn cmd_nonsep(cfg: &RunConfig, d: &Domain) -> Result<Outcome> {
    let s = nonsep_sweep(&d.ep, cfg.n.unwrap_or(3), cfg.points.unwrap_or(10_001))?;
    let summary = format!("max |residual| = {:e} at x = {}", s.max_abs_residual, s.argmax_x);
    Ok(Outcome { artifacts: vec![json_artifact("nonsep.json", cfg, d, 0, serde_json::to_value(s)?)?], exit_code: 0, summary })
}

/// Re-executes the configuration embedded in `path` and compares bytes.
pub fn replay(path: &Path) -> Result<Outcome> {
    let bytes = fs::read(path)?;
    let doc: Value = serde_json::from_slice(&bytes)?;
    if doc.get("schema").and_then(Value::as_u64) != Some(SCHEMA as u64) {
        return Err(Error::Format(format!("{} is not a schema {SCHEMA} report", path.display())));
    }
    let name = doc
        .get("artifact")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Format("missing artifact name".into()))?
        .to_string();
    let cfg: RunConfig = serde_json::from_value(doc.get("config").cloned().unwrap_or(Value::Null))?;
    let fresh = execute(&cfg)?;
    let regenerated = fresh
        .artifacts
        .iter()
        .find(|a| a.name == name)
        .ok_or_else(|| Error::Format(format!("configuration does not produce {name}")))?;
    let same = regenerated.bytes == bytes;
    let summary = if same {
        format!("{name}: reproduced bit-identically")
    } else {
        let a = String::from_utf8_lossy(&bytes);
        let b = String::from_utf8_lossy(&regenerated.bytes);
        let line = a.lines().zip(b.lines()).position(|(x, y)| x != y).unwrap_or(a.lines().count().min(b.lines().count()));
        format!("{name}: differs from regenerated output at line {}", line + 1)
    };
    Ok(Outcome { artifacts: Vec::new(), exit_code: if same { 0 } else { 1 }, summary })
}

fn emit(outcome: &Outcome, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for a in &outcome.artifacts {
                fs::write(dir.join(&a.name), &a.bytes)?;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            for a in outcome.artifacts.iter().filter(|a| !a.name.ends_with(".pvox") && !a.name.ends_with(".run.json")) {
                stdout.write_all(&a.bytes)?;
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, in which case that pool is used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = match &cli.command {
        Command::Replay { file } => replay(file),
        cmd => RunConfig::from_command(cmd).and_then(|cfg| {
            let cfg = cfg.expect("non-replay command has a configuration");
            let outcome = execute(&cfg)?;
            emit(&outcome, cfg.out.as_deref())?;
            Ok(outcome)
        }),
    };
    match result {
        Ok(o) => {
            eprintln!("{}", o.summary);
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
