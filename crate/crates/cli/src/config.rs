//! Experiment configuration, one TOML file per run.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::path::PathBuf;

use gabor_fio::decay::FitOptions;
use gabor_fio::fio::operator_from_name;
use gabor_fio::gabor::{Lattice, WindowKind};
use gabor_fio::Grid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub frame: FrameConfig,
    /// Registry name, e.g. `harmonic:0.7853981633974483`.
    pub operator: String,
    pub fit: FitConfig,
    /// The signal fed to `stft`, `propagate` and `gs-check`.
    pub input: InputConfig,
    pub stft: StftConfig,
    pub sparsity: SparsityConfig,
    pub thresholds: Vec<f64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridConfig::default(),
            frame: FrameConfig::default(),
            operator: format!("harmonic:{FRAC_PI_4}"),
            fit: FitConfig::default(),
            input: InputConfig::default(),
            stft: StftConfig::default(),
            sparsity: SparsityConfig::default(),
            thresholds: vec![1e-2, 1e-4, 1e-6, 0.0],
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Points per axis.
    pub n: usize,
    /// Period `L`.
    pub length: f64,
    pub dim: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 1024, length: 32.0, dim: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    pub window: WindowKind,
    pub alpha: f64,
    pub beta: f64,
    /// Coefficient-lattice radius `|λ₁|, |λ₂| ≤ truncation`.
    pub truncation: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            window: WindowKind::Gaussian { width: 2.0 },
            alpha: FRAC_1_SQRT_2,
            beta: FRAC_1_SQRT_2,
            truncation: 8.0,
        }
    }
}

/// Overrides of the fit options; unset fields keep the defaults of the fit in use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub floor: Option<f64>,
    pub exclusion_radius: Option<f64>,
    pub s_grid: Option<SGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl FitConfig {
    pub fn apply(&self, mut base: FitOptions) -> FitOptions {
        if let Some(v) = self.floor {
            base.floor = v;
        }
        if let Some(v) = self.exclusion_radius {
            base.exclusion_radius = v;
        }
        if let Some(g) = self.s_grid {
            base.s_min = g.min;
            base.s_max = g.max;
            base.s_step = g.step;
        }
        base
    }
}

/// A time-frequency shifted window `M_ω T_x h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub window: WindowKind,
    /// `(x, ω)` flattened with stride `2d`; empty means the origin.
    pub center: Vec<f64>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig { window: WindowKind::Gaussian { width: 2.0 }, center: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StftConfig {
    pub radius: f64,
    pub step: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig { radius: 8.0, step: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparsityConfig {
    /// Gelfand–Shilov index in the exponent `n^{1/(2ds)}`.
    pub s: f64,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        SparsityConfig { s: 0.5 }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.dim, self.grid.n, self.grid.length).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        let t = self.frame.truncation;
        Lattice::new(self.grid.dim, self.frame.alpha, self.frame.beta, t, t)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Rejects values that no module would accept.
    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        self.lattice()?;
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        if self.thresholds.iter().any(|t| t.is_nan() || *t < 0.0) {
            return bad("thresholds must be non-negative");
        }
        if !self.input.center.is_empty() && self.input.center.len() != 2 * self.grid.dim {
            return bad("input.center needs 2·dim coordinates");
        }
        if !(self.stft.radius > 0.0 && self.stft.step > 0.0) {
            return bad("stft.radius and stft.step must be positive");
        }
        if let Err(e @ gabor_fio::Error::UnknownOperator(_)) = operator_from_name(&self.operator, self.grid.dim) {
            return Err(CliError::Config(e.to_string()));
        }
        if !(self.sparsity.s > 0.0) {
            return bad("sparsity.s must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn nested_tables_parse() {
        let c = ExperimentConfig::parse(
            r#"
            operator = "metaplectic:chirp:1"
            thresholds = [0.0]
            [grid]
            n = 256
            length = 16.0
            [frame]
            window = { kind = "hermite", order = 2, width = 2.0 }
            truncation = 3.0
            [fit]
            s_grid = { min = 0.5, max = 1.0, step = 0.1 }
            "#,
        )
        .unwrap();
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.frame.window, WindowKind::Hermite { order: 2, width: 2.0 });
        let opts = c.fit.apply(FitOptions::default());
        assert_eq!((opts.s_min, opts.s_max, opts.s_step), (0.5, 1.0, 0.1));
        assert_eq!(opts.floor, FitOptions::default().floor);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ExperimentConfig::parse("colour = 1"), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("[grid]\nwidth = 3"), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("[fit]\nfloor = 1e-14\nbins = 2"), Err(CliError::Config(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = ExperimentConfig::default();
        c.grid.n = 1000;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.thresholds = vec![-1.0];
        assert!(c.validate().is_err());
    }
}
