use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::phase::{polynomial_weight, Multiplier, Phase, Symbol};
use crate::error::{Error, Result};
use crate::metaplectic::SymplecticMatrix;
use crate::signal::{forward_transform, unit_phase, Domain, Grid, SampledSignal};

/// Default floor on `min |det ∂²_{x,η}Φ|` below which an operator is refused.
pub const DEGENERACY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    General,
    Multiplier(Multiplier),
    Metaplectic(SymplecticMatrix),
}

/// Closed forms of the canonical transformation.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedMap {
    /// `z ↦ Mz` with a row-major `2d × 2d` matrix.
    Linear(Vec<f64>),
    /// `(y, η) ↦ (y, η + ∇φ(y))`.
    Multiplier(Multiplier),
}

impl ClosedMap {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            ClosedMap::Linear(m) => {
                let s = z.len();
                (0..s).map(|i| (0..s).map(|j| m[i * s + j] * z[j]).sum()).collect()
            }
            ClosedMap::Multiplier(phi) => {
                let d = z.len() / 2;
                let grad = phi.gradient(&z[..d]);
                let mut out = z.to_vec();
                for i in 0..d {
                    out[d + i] += grad[i];
                }
                out
            }
        }
    }
}

/// Phase-space box `|x_i| ≤ x_radius`, `|η_i| ≤ eta_radius` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleBox {
    pub x_radius: f64,
    pub eta_radius: f64,
    pub points_per_axis: usize,
}

impl SampleBox {
    /// The time and frequency extent of a grid.
    pub fn for_grid(grid: &Grid) -> SampleBox {
        SampleBox { x_radius: grid.half_width(), eta_radius: grid.nyquist(), points_per_axis: 17 }
    }

    /// Sample points flattened with stride `2d`.
    pub fn points(&self, dim: usize) -> Vec<f64> {
        let m = self.points_per_axis.max(2);
        let axis = |r: f64| (0..m).map(move |i| -r + 2.0 * r * i as f64 / (m - 1) as f64);
        let xs: Vec<f64> = axis(self.x_radius).collect();
        let es: Vec<f64> = axis(self.eta_radius).collect();
        let s = 2 * dim;
        let total = m.pow(s as u32);
        let mut out = Vec::with_capacity(total * s);
        for mut flat in 0..total {
            let mut z = vec![0.0; s];
            for k in (0..s).rev() {
                z[k] = if k < dim { xs[flat % m] } else { es[flat % m] };
                flat /= m;
            }
            out.extend(z);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub min_abs_det: f64,
    pub delta_floor: f64,
    pub nondegenerate: bool,
    /// `max |σ(z)| / M(z)` over the box.
    pub max_symbol_ratio: f64,
    pub n_points: usize,
}

/// `Tf(x) = ∫ e^{2πiΦ(x,η)} σ(x,η) f̂(η) dη`.
#[derive(Debug, Clone)]
pub struct FioOperator {
    id: String,
    phase: Arc<dyn Phase>,
    symbol: Arc<dyn Symbol>,
    kind: OperatorKind,
    closed_map: Option<ClosedMap>,
}

impl FioOperator {
    pub fn new(
        id: impl Into<String>,
        phase: Arc<dyn Phase>,
        symbol: Arc<dyn Symbol>,
        kind: OperatorKind,
    ) -> FioOperator {
        FioOperator { id: id.into(), phase, symbol, kind, closed_map: None }
    }

    pub fn with_closed_map(mut self, map: ClosedMap) -> FioOperator {
        self.closed_map = Some(map);
        self
    }

    pub(crate) fn set_id(&mut self, id: &str) {
        self.id = id.to_string();
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.phase.dim()
    }

    pub fn phase(&self) -> &dyn Phase {
        self.phase.as_ref()
    }

    pub(crate) fn phase_arc(&self) -> Arc<dyn Phase> {
        Arc::clone(&self.phase)
    }

    pub fn symbol(&self) -> &dyn Symbol {
        self.symbol.as_ref()
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn closed_map(&self) -> Option<&ClosedMap> {
        self.closed_map.as_ref()
    }

    /// Reports `min |det ∂²_{x,η}Φ|` and `max |σ|/M` over the sampled box.
    pub fn validate_hypotheses(&self, region: &SampleBox, delta_floor: f64) -> HypothesisReport {
        let d = self.dim();
        let pts = region.points(d);
        let n = self.symbol.weight_exponent();
        let (min_abs_det, max_symbol_ratio) = pts
            .par_chunks(2 * d)
            .map(|z| {
                let det = self.phase.mixed_determinant(&z[..d], &z[d..]).abs();
                let ratio = self.symbol.eval(&z[..d], &z[d..]).norm() / polynomial_weight(z, n);
                (det, ratio)
            })
            .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        HypothesisReport {
            min_abs_det,
            delta_floor,
            nondegenerate: min_abs_det >= delta_floor,
            max_symbol_ratio,
            n_points: pts.len() / (2 * d),
        }
    }

    /// Refuses operators that are degenerate on the grid's phase-space box.
    pub fn ensure_nondegenerate(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "operator dimension {} vs grid dimension {}",
                self.dim(),
                grid.dim()
            )));
        }
        let report = self.validate_hypotheses(&SampleBox::for_grid(grid), DEGENERACY_FLOOR);
        if !report.nondegenerate {
            return Err(Error::Degenerate { min_det: report.min_abs_det, floor: DEGENERACY_FLOOR });
        }
        Ok(())
    }

    /// Direct quadrature `Tf(x_m) = L^{-d} Σ_k e^{2πiΦ(x_m,ω_k)} σ(x_m,ω_k) f̂(ω_k)`.
    pub fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        self.ensure_nondegenerate(f.grid())?;
        let grid = *f.grid();
        let fh = forward_transform(f)?;
        let xs = grid.time_coords();
        let ws = grid.freq_coords();
        let d = grid.dim();
        let values: Vec<Complex64> = xs
            .par_chunks(d)
            .map(|x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, v) in ws.chunks(d).zip(fh.values()) {
                    acc += self.kernel_entry(x, w) * v;
                }
                acc * grid.freq_cell_volume()
            })
            .collect();
        SampledSignal::new(grid, values)
    }

    fn kernel_entry(&self, x: &[f64], w: &[f64]) -> Complex64 {
        let e = unit_phase(self.phase.value(x, w));
        match self.symbol.as_constant() {
            Some(c) => e * c,
            None => e * self.symbol.eval(x, w),
        }
    }

    /// Precomputed quadrature matrix, for applying the operator to many signals.
    pub fn kernel(&self, grid: &Grid) -> Result<OperatorKernel> {
        self.ensure_nondegenerate(grid)?;
        let xs = grid.time_coords();
        let ws = grid.freq_coords();
        let d = grid.dim();
        let n = grid.len();
        let scale = grid.freq_cell_volume();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        data.par_chunks_mut(n).zip(xs.par_chunks(d)).for_each(|(row, x)| {
            for (slot, w) in row.iter_mut().zip(ws.chunks(d)) {
                *slot = self.kernel_entry(x, w) * scale;
            }
        });
        Ok(OperatorKernel { grid: *grid, data })
    }

    /// Exact action for operators with a pointwise closed form: multipliers
    /// `e^{2πiφ(x)} f(x)` and chirps `e^{πi x·Cx} f(x)`. `None` otherwise.
    pub fn closed_form(&self, f: &SampledSignal) -> Option<Result<SampledSignal>> {
        let d = self.dim();
        let factor: Box<dyn Fn(&[f64]) -> Complex64> = match &self.kind {
            OperatorKind::Multiplier(phi) => {
                let phi = *phi;
                Box::new(move |x| unit_phase(phi.value(x)))
            }
            OperatorKind::Metaplectic(m) => {
                let (a, b, c, _) = m.blocks();
                let is_eye = a.iter().enumerate().all(|(k, &v)| v == if k % (d + 1) == 0 { 1.0 } else { 0.0 });
                if !is_eye || b.iter().any(|&v| v != 0.0) {
                    return None;
                }
                let c = c.to_vec();
                Box::new(move |x| {
                    let q: f64 = (0..d).map(|i| x[i] * (0..d).map(|j| c[i * d + j] * x[j]).sum::<f64>()).sum();
                    unit_phase(0.5 * q)
                })
            }
            OperatorKind::General => return None,
        };
        if f.domain() != Domain::Time || f.grid().dim() != d {
            return Some(Err(Error::InvalidInput("closed form expects time samples of matching dimension".into())));
        }
        let coords = f.grid().time_coords();
        let values = f.values().iter().zip(coords.chunks(d)).map(|(v, x)| v * factor(x)).collect();
        Some(SampledSignal::new(*f.grid(), values))
    }
}

/// Row-major `N^d × N^d` quadrature matrix of an operator, already scaled by `L^{-d}`.
#[derive(Debug, Clone)]
pub struct OperatorKernel {
    grid: Grid,
    data: Vec<Complex64>,
}

impl OperatorKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, f: &SampledSignal) -> Result<SampledSignal> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch("signal grid differs from kernel grid".into()));
        }
        let fh = forward_transform(f)?;
        Ok(SampledSignal::from_parts_unchecked(self.grid, Domain::Time, self.apply_spectrum(fh.values())))
    }

    pub(crate) fn apply_spectrum(&self, fh: &[Complex64]) -> Vec<Complex64> {
        self.data.par_chunks(self.grid.len()).map(|row| row_dot(row, fh)).collect()
    }

    /// Single-threaded variant for callers that parallelize over signals.
    pub(crate) fn apply_spectrum_serial(&self, fh: &[Complex64]) -> Vec<Complex64> {
        self.data.chunks(self.grid.len()).map(|row| row_dot(row, fh)).collect()
    }
}

fn row_dot(row: &[Complex64], fh: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, v) in row.iter().zip(fh) {
        acc += k * v;
    }
    acc
}
