//! Run configuration: one JSON document describing a batch of computations.
//!
//! ```json
//! {
//!   "game": { "n": 2, "delta": 1.0, "eta_grid": { "start": 2.0, "stop": 8.0, "step": 0.2 } },
//!   "sweep": { "grid_size": 4001, "alpha_min": 1e-6 },
//!   "utilities": {
//!     "adversary": { "form": "log_linear", "a": 1.0, "b": 0.85 },
//!     "dc": { "form": "linear", "a": -1.0, "b": 25.0 }
//!   },
//!   "sim": { "samples": 1000000, "seed": 2024 },
//!   "output": { "dir": "out/example1" }
//! }
//! ```
//!
//! Every section and field may be omitted; the defaults are `n = 2`,
//! `Δ = 1` and the grid `2.0, 2.2, …, 8.0`. `eta` and `eta_grid` are
//! mutually exclusive.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::frontier::FrontierConfig;
use crate::game::{eta_range, Role, SolverConfig, UtilitySpec};
use crate::kernels::GameParams;

/// Explicit thresholds or an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Default for EtaGrid {
    fn default() -> Self {
        EtaGrid::Range { start: 2.0, stop: 8.0, step: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub n: usize,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_grid: Option<EtaGrid>,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection { n: 2, delta: 1.0, eta: None, eta_grid: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid_size: usize,
    pub alpha_min: f64,
    pub endpoint_points: usize,
    pub endpoint_span: f64,
    pub alpha_grid: usize,
    pub refine_eta: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        let f = FrontierConfig::default();
        let s = SolverConfig::default();
        SweepSection {
            grid_size: f.grid_size,
            alpha_min: f.alpha_min,
            endpoint_points: f.endpoint_points,
            endpoint_span: f.endpoint_span,
            alpha_grid: s.alpha_grid,
            refine_eta: s.refine_eta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utilities {
    pub adversary: UtilitySpec,
    pub dc: UtilitySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub samples: u64,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { samples: 1_000_000, seed: 2024 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Exported curves are evaluated at `α = k / curve_points`, `k = 1, …, curve_points`.
    pub curve_points: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), curve_points: 1000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameSection,
    pub sweep: SweepSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Utilities>,
    pub sim: SimSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Parses without validating.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config(format!("invalid run configuration: {e}")))
    }

    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::from_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sorted, deduplicated thresholds to solve.
    pub fn eta_grid(&self) -> Result<Vec<f64>> {
        let mut grid = match (&self.game.eta, &self.game.eta_grid) {
            (Some(_), Some(_)) => return Err(config("give either game.eta or game.eta_grid, not both")),
            (Some(e), None) => vec![*e],
            (None, Some(EtaGrid::List(v))) => v.clone(),
            (None, Some(EtaGrid::Range { start, stop, step })) => eta_range(*start, *stop, *step)?,
            (None, None) => {
                let EtaGrid::Range { start, stop, step } = EtaGrid::default() else { unreachable!() };
                eta_range(start, stop, step)?
            }
        };
        if grid.is_empty() {
            return Err(config("eta grid is empty"));
        }
        for &e in &grid {
            if !e.is_finite() || e < 2.0 {
                return Err(config(format!(
                    "eta = {e} is below the acceptance-policy floor: thresholds must satisfy eta >= 2"
                )));
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Ok(grid)
    }

    /// `N` and `Δ` with the first threshold of the grid.
    pub fn base_params(&self) -> Result<GameParams> {
        let eta = self.eta_grid()?[0];
        GameParams::new(self.game.n, self.game.delta, eta).map_err(|e| config(e.to_string()))
    }

    pub fn frontier(&self) -> FrontierConfig {
        FrontierConfig {
            grid_size: self.sweep.grid_size,
            endpoint_points: self.sweep.endpoint_points,
            endpoint_span: self.sweep.endpoint_span,
            alpha_min: self.sweep.alpha_min,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { frontier: self.frontier(), alpha_grid: self.sweep.alpha_grid, refine_eta: self.sweep.refine_eta }
    }

    /// Utilities, or a configuration error naming `what` needs them.
    pub fn require_utilities(&self, what: &str) -> Result<Utilities> {
        self.utilities.ok_or_else(|| config(format!("{what} needs a utilities section")))
    }

    /// Checks every section; nothing is computed.
    pub fn validate(&self) -> Result<()> {
        self.base_params()?;
        self.solver().validate()?;
        if let Some(u) = &self.utilities {
            u.adversary.validate(Role::Adversary)?;
            u.dc.validate(Role::DataCollector)?;
        }
        if self.sim.samples == 0 {
            return Err(config("sim.samples must be positive"));
        }
        if self.output.curve_points < 2 {
            return Err(config(format!("output.curve_points must be at least 2, got {}", self.output.curve_points)));
        }
        if self.output.dir.is_empty() {
            return Err(config("output.dir is empty"));
        }
        Ok(())
    }
}
