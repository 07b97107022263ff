//! Run configuration. Every default lives in the `Default` impls below; a
//! config file only needs the keys it changes.
//!
//! ```toml
//! bundled = "per_generic"      # or: potential = "path/to/potential.toml"
//! window = 48
//!
//! [tolerances]
//! residual = 1e-8
//!
//! [evolution]
//! steps = 16
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundled;
use crate::error::{Error, Result};
use crate::potential::{BoundaryCondition, DeriveOptions, PotentialSpec};
use crate::simop::SimopConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Potential file, resolved against the config file's directory.
    pub potential: Option<PathBuf>,
    /// Name of a bundled potential; used when `potential` is absent.
    pub bundled: Option<String>,
    /// Overrides the boundary condition of the potential file.
    pub bc: Option<BoundaryCondition>,
    /// Half-width `N` of the index window `-N..=N`.
    pub window: usize,
    /// FFT grid for the derived coefficients; a power of two.
    pub grid: usize,
    pub tolerances: Tolerances,
    pub margins: Margins,
    pub outputs: Outputs,
    pub evolution: EvolutionConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: None,
            bundled: None,
            bc: None,
            window: 48,
            grid: 1024,
            tolerances: Tolerances::default(),
            margins: Margins::default(),
            outputs: Outputs::default(),
            evolution: EvolutionConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|r - round(r)|` below which the resonant branch is taken.
    pub branch: f64,
    /// Hilbert-Schmidt step size that ends the fixed-point iteration.
    pub fixed_point: f64,
    /// Similarity residual allowed relative to `||Q||_2`.
    pub residual: f64,
    /// Largest `delta^P` accepted before reporting near-resonance.
    pub delta_cap: f64,
    /// Allowed per-block `|sum of eigenvalues - trace|`, relative to the
    /// block's diagonal magnitude.
    pub trace: f64,
    /// Allowed defect of the numerical resolution of identity.
    pub resolution: f64,
    /// Allowed interior eigenvalue drift between windows in a sweep.
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            branch: 1e-9,
            fixed_point: 1e-13,
            residual: 1e-8,
            delta_cap: 1e6,
            trace: 1e-12,
            resolution: 1e-8,
            drift: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Margins {
    /// `k` is the smallest cut with `||Gamma_k Q||_2 <= 1 - k_margin`.
    pub k_margin: f64,
    pub max_iter: usize,
}

impl Default for Margins {
    fn default() -> Self {
        Self { k_margin: 0.1, max_iter: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub spectrum: bool,
    pub evolution: bool,
    pub equiconvergence: bool,
    /// Dump `B`, `X*`, `U`, `V` entry by entry.
    pub matrices: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { spectrum: true, evolution: true, equiconvergence: true, matrices: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialState {
    /// Coefficients decaying like `e^{-|n|/2}` with a fixed phase pattern.
    Smooth,
    /// A single basis vector `e_n^slot` (slot is 1-based).
    Basis { n: i64, slot: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Final time; the period `omega` when absent.
    pub t_max: Option<f64>,
    /// Number of equal steps on `(0, t_max]`.
    pub steps: usize,
    pub state: InitialState,
    /// Cut `n` for the truncation bound; `N / 2` when absent.
    pub cut: Option<usize>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { t_max: None, steps: 8, state: InitialState::Smooth, cut: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Windows run by `sweep`; consecutive pairs are compared.
    pub windows: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { windows: vec![16, 24, 32, 48] }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_string(), message: e.to_string() })
    }

    /// Reads a config file; a relative `potential` path is made relative to
    /// the config's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        if let (Some(p), Some(dir)) = (&cfg.potential, path.parent()) {
            if p.is_relative() {
                cfg.potential = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let positive = [
            ("tolerances.branch", t.branch),
            ("tolerances.fixed_point", t.fixed_point),
            ("tolerances.residual", t.residual),
            ("tolerances.delta_cap", t.delta_cap),
            ("tolerances.trace", t.trace),
            ("tolerances.resolution", t.resolution),
            ("tolerances.drift", t.drift),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.margins.k_margin > 0.0 && self.margins.k_margin < 1.0) {
            return Err(Error::Config(format!("margins.k_margin must lie in (0, 1), got {}", self.margins.k_margin)));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.evolution.steps == 0 {
            return Err(Error::Config("evolution.steps must be at least 1".into()));
        }
        if let Some(t) = self.evolution.t_max {
            if !t.is_finite() {
                return Err(Error::Config(format!("evolution.t_max must be finite, got {t}")));
            }
        }
        if self.potential.is_some() && self.bundled.is_some() {
            return Err(Error::Config("give at most one of `potential` and `bundled`".into()));
        }
        Ok(())
    }

    /// Display name of the potential source.
    pub fn potential_name(&self) -> String {
        match (&self.potential, &self.bundled) {
            (Some(p), _) => p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
            (None, Some(b)) => b.clone(),
            (None, None) => "per_generic".into(),
        }
    }

    /// The potential named by the config; the bundled `per_generic` when
    /// neither source is given.
    pub fn load_potential(&self) -> Result<PotentialSpec> {
        let mut spec = match (&self.potential, &self.bundled) {
            (Some(p), _) => PotentialSpec::from_file(p)?,
            (None, name) => {
                let name = name.as_deref().unwrap_or("per_generic");
                bundled::load(name).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown bundled potential `{name}` (have: {})",
                        bundled::names().collect::<Vec<_>>().join(", ")
                    ))
                })?
            }
        };
        if let Some(bc) = self.bc {
            spec.bc = bc;
        }
        Ok(spec)
    }

    pub fn derive_options(&self) -> DeriveOptions {
        DeriveOptions { grid: self.grid, branch_tol: self.tolerances.branch, delta_cap: self.tolerances.delta_cap }
    }

    pub fn simop_config(&self) -> SimopConfig {
        SimopConfig {
            k_margin: self.margins.k_margin,
            tol: self.tolerances.fixed_point,
            max_iter: self.margins.max_iter,
            residual_rel: self.tolerances.residual,
        }
    }
}
