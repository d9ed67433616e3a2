//! Run configuration: one versioned TOML document drives every subcommand,
//! and the solve manifest echoes it back for reproducibility.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::market::{AssetStats, DecisionSet, DriftProfile, LoadOptions};
use crate::pde::{Boundary, SolverConfig};
use crate::riccati::UtilitySpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub assets: AssetsConfig,
    #[serde(default)]
    pub decision_set: DecisionSetConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub alpha_table: AlphaTableConfig,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub policy: PolicySection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetsConfig {
    pub csv: PathBuf,
    #[serde(default)]
    pub allow_ridge: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecisionSetConfig {
    #[default]
    Simplex,
    Discrete { weights: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum DriftConfig {
    #[default]
    Constant,
    TanhRamp {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UtilityConfig {
    Cara {
        a: f64,
    },
    Crra {
        gamma: f64,
        #[serde(default)]
        x_shift: f64,
    },
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    Tabulated {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub t_end: f64,
    pub dt_initial: f64,
    pub cfl_safety: f64,
    pub boundary: BoundaryConfig,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub advection: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            t_end: 1.0,
            dt_initial: 1e-3,
            cfl_safety: 0.9,
            boundary: BoundaryConfig::Dirichlet,
            picard_tol: 1e-10,
            picard_max: 25,
            advection: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryConfig {
    Dirichlet,
    ZeroFlux,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaTableConfig {
    pub phi_min: f64,
    pub phi_max: f64,
    pub knots: usize,
    pub mode: AlphaMode,
}

impl Default for AlphaTableConfig {
    fn default() -> Self {
        AlphaTableConfig {
            phi_min: 0.1,
            phi_max: 100.0,
            knots: 200,
            mode: AlphaMode::Table,
        }
    }
}

/// Whether the PDE solve evaluates alpha through the precomputed table or by
/// a fresh solve per query.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    Table,
    Direct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub support_threshold: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            support_threshold: crate::policy::DEFAULT_SUPPORT_THRESHOLD,
        }
    }
}

impl RunConfig {
    /// Parse a config file and resolve the asset path against the config's
    /// directory.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        if !path.exists() {
            return Err(Error::Validation(format!(
                "config file not found: {}",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Validation(format!("config parse: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        if cfg.assets.csv.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.assets.csv = dir.join(&cfg.assets.csv);
            }
        }
        if !cfg.assets.csv.exists() {
            return Err(Error::Validation(format!(
                "asset csv not found: {}",
                cfg.assets.csv.display()
            )));
        }
        Ok(cfg)
    }

    pub fn load_assets(&self) -> Result<AssetStats> {
        AssetStats::from_csv_path(
            &self.assets.csv,
            LoadOptions {
                allow_ridge: self.assets.allow_ridge,
            },
        )
    }

    pub fn decision_set(&self, stats: &AssetStats) -> Result<DecisionSet> {
        match &self.decision_set {
            DecisionSetConfig::Simplex => DecisionSet::simplex(stats.n_assets()),
            DecisionSetConfig::Discrete { weights } => {
                let set = DecisionSet::discrete(weights.clone())?;
                if set.dim() != stats.n_assets() {
                    return Err(Error::Validation(format!(
                        "discrete weights have dimension {}, assets have {}",
                        set.dim(),
                        stats.n_assets()
                    )));
                }
                Ok(set)
            }
        }
    }

    pub fn drift_profile(&self) -> Result<DriftProfile> {
        let profile = match self.drift {
            DriftConfig::Constant => DriftProfile::Constant,
            DriftConfig::TanhRamp {
                amplitude,
                center,
                width,
            } => DriftProfile::TanhRamp {
                amplitude,
                center,
                width,
            },
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn utility_spec(&self) -> Result<UtilitySpec> {
        let u = self
            .utility
            .as_ref()
            .ok_or_else(|| Error::Validation("config has no [utility] section".into()))?;
        let spec = match u {
            UtilityConfig::Cara { a } => UtilitySpec::Cara { risk_aversion: *a },
            UtilityConfig::Crra { gamma, x_shift } => UtilitySpec::Crra {
                gamma: *gamma,
                x_shift: *x_shift,
            },
            UtilityConfig::PiecewiseConstant {
                breakpoints,
                levels,
            } => UtilitySpec::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
                levels: levels.clone(),
            },
            UtilityConfig::Tabulated { values } => UtilitySpec::Tabulated {
                values: values.clone(),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Validation("config has no [grid] section".into()))?;
        Grid1D::new(g.x_min, g.x_max, g.n_cells)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig {
            t_end: s.t_end,
            dt_initial: s.dt_initial,
            cfl_safety: s.cfl_safety,
            boundary: match s.boundary {
                BoundaryConfig::Dirichlet => Boundary::Dirichlet,
                BoundaryConfig::ZeroFlux => Boundary::ZeroFlux,
            },
            picard_tol: s.picard_tol,
            picard_max: s.picard_max,
            advection_enabled: s.advection,
        };
        cfg.validate()?;
        for &t in &self.snapshot_times {
            if !(0.0..=cfg.t_end).contains(&t) {
                return Err(Error::Validation(format!(
                    "snapshot time {t} outside [0, {}]",
                    cfg.t_end
                )));
            }
        }
        Ok(cfg)
    }

    /// Snapshot times, defaulting to the horizon alone.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.snapshot_times.is_empty() {
            vec![self.solver.t_end]
        } else {
            self.snapshot_times.clone()
        }
    }
}
