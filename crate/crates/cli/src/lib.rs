//! Batch front-end: `curve`, `equilibrium`, `noise` and `verify`.
//!
//! Every command resolves its configuration (flags over file over
//! defaults), validates it, computes all outputs in memory and only then
//! writes files, so an error never leaves partial output behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use goc_core::config::RunConfig;
use goc_core::frontier::{alpha_grid, characteristic_curve, curves_csv};
use goc_core::game::{build_noise, optimal_eta, solve_on_curve, EquilibriumReport};
use goc_core::kernels::GameParams;
use goc_core::numfmt::to_json_string;
use goc_core::verify::default_suite;
use goc_core::CharacteristicCurve;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "goc", version, about = "Equilibria of the N-dimensional game of coding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags shared by every subcommand; each overrides the matching config value.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (`output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Single threshold instead of the configured grid.
    #[arg(long, global = true, value_name = "X")]
    pub eta: Option<f64>,
    /// Simulation seed (`sim.seed`).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Simulation draws per check (`sim.samples`).
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<u64>,
    /// Sweep resolution (`sweep.grid_size`).
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Characteristic curves: one CSV per threshold, a combined CSV and,
    /// with utilities, the adversary's best response on each curve.
    Curve,
    /// Leader/follower equilibrium over the threshold grid.
    Equilibrium,
    /// Optimal adversarial noise.
    #[command(group(ArgGroup::new("source").required(true).args(["alpha", "from_equilibrium"])))]
    Noise {
        /// Acceptance probability to realise (needs a single threshold).
        #[arg(long, value_name = "X")]
        alpha: Option<f64>,
        /// Use the equilibrium's threshold and acceptance probability.
        #[arg(long)]
        from_equilibrium: bool,
        /// Read the equilibrium from this report instead of solving again.
        #[arg(long, value_name = "PATH", requires = "from_equilibrium")]
        report: Option<PathBuf>,
    },
    /// Simulation, closed-form and two-point-program cross-checks.
    Verify,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error at {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<goc_core::Error> for CliError {
    fn from(e: goc_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a successful command produced.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    /// 0, or 1 when verification ran and a check failed.
    pub exit_code: i32,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Reads the configuration file, if any, and applies the flag overrides.
pub fn resolve_config(o: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::from_json(&fs::read_to_string(path).map_err(io_err(path))?)?,
        None => RunConfig::default(),
    };
    if let Some(eta) = o.eta {
        cfg.game.eta = Some(eta);
        cfg.game.eta_grid = None;
    }
    if let Some(dir) = &o.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(seed) = o.seed {
        cfg.sim.seed = seed;
    }
    if let Some(samples) = o.samples {
        cfg.sim.samples = samples;
    }
    if let Some(grid) = o.grid {
        cfg.sweep.grid_size = grid;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `curve_eta_05.200.csv`: zero-padded so the files list in threshold order.
pub fn curve_file_name(eta: f64) -> String {
    format!("curve_eta_{eta:06.3}.csv")
}

fn thresholds(cfg: &RunConfig) -> CliResult<Vec<GameParams>> {
    let base = cfg.base_params()?;
    Ok(cfg.eta_grid()?.into_iter().map(|e| base.with_eta(e)).collect::<goc_core::Result<_>>()?)
}

fn curve_outputs(cfg: &RunConfig) -> CliResult<(Vec<(PathBuf, String)>, String)> {
    let frontier = cfg.frontier();
    let alphas = alpha_grid(cfg.output.curve_points, frontier.alpha_min);
    let curves: Vec<CharacteristicCurve> =
        thresholds(cfg)?.iter().map(|p| characteristic_curve(p, &frontier)).collect::<goc_core::Result<_>>()?;

    let mut files = Vec::new();
    for c in &curves {
        let name = Path::new("curves").join(curve_file_name(c.params.eta));
        files.push((name, curves_csv(std::slice::from_ref(c), &alphas)?));
    }
    files.push((PathBuf::from("curves.csv"), curves_csv(&curves, &alphas)?));

    let mut summary = format!("{} curves at {} points each", curves.len(), alphas.len());
    if let Some(u) = cfg.utilities {
        let mut csv = String::from("eta,alpha,c_eta,u_ad,u_dc\n");
        for c in curves {
            let row = solve_on_curve(c, &u.adversary, &u.dc, cfg.sweep.alpha_grid)?.row;
            let _ = writeln!(csv, "{},{},{},{},{}", row.eta, row.alpha, row.mse, row.u_ad, row.u_dc);
        }
        files.push((PathBuf::from("best_response.csv"), csv));
        summary.push_str(", with best responses");
    }
    Ok((files, summary))
}

fn solve(cfg: &RunConfig) -> CliResult<EquilibriumReport> {
    let u = cfg.require_utilities("equilibrium")?;
    let base = cfg.base_params()?;
    Ok(optimal_eta(&base, &cfg.eta_grid()?, &u.adversary, &u.dc, &cfg.solver())?)
}

fn read_report(path: &Path) -> CliResult<EquilibriumReport> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid report {}: {e}", path.display())))
}

/// Threshold and acceptance probability the noise command works at.
fn noise_target(cfg: &RunConfig, alpha: Option<f64>, report: Option<&Path>) -> CliResult<(GameParams, f64)> {
    if let Some(a) = alpha {
        let params = thresholds(cfg)?;
        let [p] = params.as_slice() else {
            return Err(CliError::Config(format!(
                "noise --alpha needs a single threshold, the grid has {} (use --eta)",
                params.len()
            )));
        };
        let floor = cfg.sweep.alpha_min;
        if !(a > floor && a <= 1.0) {
            return Err(CliError::Config(format!(
                "alpha must lie in (alpha_min, 1] with alpha_min = {floor}, got {a}"
            )));
        }
        return Ok((*p, a));
    }
    let report = match report {
        Some(path) => read_report(path)?,
        None => solve(cfg)?,
    };
    let d = &report.diagnostics;
    let params = GameParams::new(d.n, d.delta, report.eta_star)?;
    Ok((params, report.alpha_star))
}

fn write_all(dir: &Path, files: &[(PathBuf, String)]) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Runs one command end to end.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let cfg = resolve_config(&cli.overrides)?;
    let mut exit_code = 0;
    let (files, summary) = match &cli.command {
        Command::Curve => curve_outputs(&cfg)?,
        Command::Equilibrium => {
            let r = solve(&cfg)?;
            let summary = format!(
                "eta* = {}, alpha* = {:.6}, MSE* = {:.6}, U_AD = {:.6}, U_DC = {:.6}",
                r.eta_star, r.alpha_star, r.mse_star, r.u_ad, r.u_dc
            );
            (vec![(PathBuf::from("equilibrium.json"), to_json_string(&r)?)], summary)
        }
        Command::Noise { alpha, report, .. } => {
            let (params, a) = noise_target(&cfg, *alpha, report.as_deref())?;
            let curve = characteristic_curve(&params, &cfg.frontier())?;
            let noise = build_noise(&curve, a)?;
            let summary = format!("eta = {}, alpha = {a}: {noise:?}", params.eta);
            (vec![(PathBuf::from("noise.json"), to_json_string(&noise)?)], summary)
        }
        Command::Verify => {
            let report = default_suite(&thresholds(&cfg)?, cfg.sim.samples, cfg.sim.seed)?;
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            if !report.pass {
                exit_code = 1;
            }
            let summary = format!("{} checks, {failed} failed", report.checks.len());
            (vec![(PathBuf::from("verify.json"), to_json_string(&report)?)], summary)
        }
    };
    let files = write_all(Path::new(&cfg.output.dir), &files)?;
    Ok(Outcome { summary, files, exit_code })
}
