use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::atoms::AtomBank;
use super::lattice::{Lattice, COVER_MARGIN};
use super::window::Window;
use crate::error::{Error, Result};
use crate::signal::{inner_product_slices, Domain, Grid, SampledSignal};

/// Lower bounds at or below this value are reported as "not a frame".
pub const FRAME_FLOOR: f64 = 1e-8;
/// Relative residual required of the dual-window solve.
pub const DUAL_TOLERANCE: f64 = 1e-10;
/// Relative residual at which the iteration stops.
const DUAL_TARGET: f64 = 1e-13;
const MIN_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn condition(&self) -> f64 {
        self.upper / self.lower
    }
}

#[derive(Debug, Clone)]
pub struct DualWindow {
    pub gamma: SampledSignal,
    /// `‖g − Sγ‖₂ / ‖g‖₂` recomputed after the solve.
    pub residual: f64,
    pub iterations: usize,
}

/// Which family analyzes in a frame expansion; the other synthesizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// `Σ ⟨f, γ_λ⟩ g_λ`
    DualAnalysis,
    /// `Σ ⟨f, g_λ⟩ γ_λ`
    WindowAnalysis,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "A")]
    pub lower: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    pub dual_residual: f64,
}

/// A Gabor system `𝒢(g, Λ)` on a periodic grid.
///
/// `lattice` is the truncated coefficient lattice used for Gabor matrices. Frame-level
/// quantities (frame operator, bounds, dual window, expansions) use the covering
/// lattice with the same steps on the doubled grid `grid.doubled()`, built from
/// band-limited atoms. A lattice step that does not divide the period leaves a seam
/// where periodicity breaks shift invariance; on the doubled grid that seam lies a
/// full half-period away from every working-grid sample. Every cache is write-once.
#[derive(Debug)]
pub struct GaborFrame {
    window: Window,
    lattice: Lattice,
    doubled_window: Window,
    covering: Lattice,
    cover_atoms: OnceLock<Result<AtomBank>>,
    dual_cover_atoms: OnceLock<Result<AtomBank>>,
    bounds: OnceLock<Result<FrameBounds>>,
    dual: OnceLock<Result<DualWindow>>,
    doubled_dual: OnceLock<Result<(SampledSignal, usize)>>,
}

impl GaborFrame {
    pub fn new(window: Window, lattice: Lattice) -> Result<GaborFrame> {
        if window.grid().dim() != lattice.dim() {
            return Err(Error::GridMismatch("window and lattice dimensions differ".into()));
        }
        let doubled = window.grid().doubled();
        let doubled_window = Window::new(doubled, window.kind())?;
        let covering = Lattice::covering(&doubled, lattice.alpha(), lattice.beta())?;
        Ok(GaborFrame {
            window,
            lattice,
            doubled_window,
            covering,
            cover_atoms: OnceLock::new(),
            dual_cover_atoms: OnceLock::new(),
            bounds: OnceLock::new(),
            dual: OnceLock::new(),
            doubled_dual: OnceLock::new(),
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn grid(&self) -> &Grid {
        self.window.grid()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Covering lattice on the doubled grid.
    pub fn covering(&self) -> &Lattice {
        &self.covering
    }

    fn cover_atoms(&self) -> Result<&AtomBank> {
        self.cover_atoms
            .get_or_init(|| AtomBank::band_limited(&self.doubled_window, &self.covering))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn dual_cover_atoms(&self) -> Result<&AtomBank> {
        self.dual_cover_atoms
            .get_or_init(|| AtomBank::shifted(&self.doubled_dual()?.0, &self.covering))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Extreme eigenvalues of the frame operator over signals supported in the
    /// central half of the working grid.
    pub fn frame_bounds(&self) -> Result<FrameBounds> {
        self.bounds
            .get_or_init(|| {
                let grid = self.grid();
                let doubled = grid.doubled_indices();
                let rows: Vec<usize> = grid.central_half().into_iter().map(|i| doubled[i]).collect();
                bounds_from_block(self.cover_atoms()?, &rows)
            })
            .clone()
    }

    /// Frame bounds of the system over an explicit lattice on the working grid.
    ///
    /// The lattice box must contain the central half of the grid plus a margin of
    /// `COVER_MARGIN` in time, and the frequency band plus the same margin.
    pub fn frame_bounds_on(&self, lattice: &Lattice) -> Result<FrameBounds> {
        let grid = self.grid();
        let need_t = grid.half_width() / 2.0 + COVER_MARGIN;
        let need_f = grid.nyquist() + COVER_MARGIN;
        if lattice.time_range() < need_t || lattice.freq_range() < need_f {
            return Err(Error::InvalidInput(format!(
                "lattice box ({}, {}) must reach at least ({need_t}, {need_f})",
                lattice.time_range(),
                lattice.freq_range()
            )));
        }
        bounds_from_block(&AtomBank::band_limited(&self.window, lattice)?, &grid.central_half())
    }

    fn doubled_dual(&self) -> Result<&(SampledSignal, usize)> {
        self.doubled_dual
            .get_or_init(|| {
                let bounds = self.frame_bounds()?;
                let bank = self.cover_atoms()?;
                let cap = ((10.0 * bounds.condition()).ceil() as usize).max(MIN_ITERATIONS);
                let g = self.doubled_window.samples().values();
                let (gamma, iterations) = conjugate_gradient(|v| bank.frame_operator(v), g, DUAL_TARGET, cap);
                let residual = relative_residual(&bank.frame_operator(&gamma), g);
                if residual > DUAL_TOLERANCE {
                    return Err(Error::SolverDiverged { iterations, residual });
                }
                Ok((SampledSignal::from_parts_unchecked(*bank.grid(), Domain::Time, gamma), iterations))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Canonical dual window `γ = S⁻¹ g` by conjugate gradients.
    pub fn dual_window(&self) -> Result<&DualWindow> {
        self.dual
            .get_or_init(|| {
                let (gamma, iterations) = self.doubled_dual()?;
                let bank = self.cover_atoms()?;
                let g = self.doubled_window.samples().values();
                let residual = relative_residual(&bank.frame_operator(gamma.values()), g);
                let iterations = *iterations;
                Ok(DualWindow { gamma: gamma.restrict_from_doubled(self.grid())?, residual, iterations })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `S f` for a signal on the working grid.
    pub fn apply_frame_operator(&self, f: &SampledSignal) -> Result<SampledSignal> {
        let bank = self.cover_atoms()?;
        bank.synthesis(&bank.analysis(&f.embed_doubled()?)?)?.restrict_from_doubled(self.grid())
    }

    /// `Σ_λ |⟨f, g_λ⟩|²` over the covering lattice.
    pub fn coefficient_energy(&self, f: &SampledSignal) -> Result<f64> {
        Ok(self.cover_atoms()?.analysis(&f.embed_doubled()?)?.iter().map(|c| c.norm_sqr()).sum())
    }

    /// Frame expansion of `f` over the covering lattice.
    pub fn reconstruct(&self, f: &SampledSignal, pairing: Pairing) -> Result<SampledSignal> {
        let g = self.cover_atoms()?;
        let gamma = self.dual_cover_atoms()?;
        let (analysis, synthesis) = match pairing {
            Pairing::DualAnalysis => (gamma, g),
            Pairing::WindowAnalysis => (g, gamma),
        };
        synthesis.synthesis(&analysis.analysis(&f.embed_doubled()?)?)?.restrict_from_doubled(self.grid())
    }

    /// `γ_λ` for every point of the coefficient lattice, shifted on the doubled grid
    /// and restricted to the working grid.
    pub fn dual_atoms(&self) -> Result<AtomBank> {
        AtomBank::shifted(&self.doubled_dual()?.0, &self.lattice)?.restricted(self.grid())
    }

    /// `g_λ` for every point of the coefficient lattice.
    pub fn atoms(&self) -> Result<AtomBank> {
        AtomBank::analytic(&self.window, &self.lattice)
    }

    pub fn report(&self) -> Result<FrameReport> {
        let b = self.frame_bounds()?;
        let dual = self.dual_window()?;
        Ok(FrameReport {
            alpha: self.lattice.alpha(),
            beta: self.lattice.beta(),
            lower: b.lower,
            upper: b.upper,
            dual_residual: dual.residual,
        })
    }
}

fn bounds_from_block(bank: &AtomBank, rows: &[usize]) -> Result<FrameBounds> {
    let m = rows.len();
    let block = bank.frame_block(rows);
    let eig = DMatrix::from_row_slice(m, m, &block).symmetric_eigenvalues();
    let lower = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lower > FRAME_FLOOR) {
        return Err(Error::NotAFrame { lower });
    }
    Ok(FrameBounds { lower, upper })
}

fn relative_residual(sx: &[Complex64], b: &[Complex64]) -> f64 {
    let r: f64 = sx.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let n: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (r / n).sqrt()
}

/// Conjugate gradients for a Hermitian positive definite operator, from `x₀ = 0`.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> (Vec<Complex64>, usize) {
    let mut x = vec![Complex64::new(0.0, 0.0); b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let bnorm = inner_product_slices(b, b, 1.0).re.sqrt();
    let mut rs = inner_product_slices(&r, &r, 1.0).re;
    for it in 0..max_iter {
        if rs.sqrt() <= tol * bnorm {
            return (x, it);
        }
        let ap = apply(&p);
        let step = rs / inner_product_slices(&ap, &p, 1.0).re;
        for i in 0..x.len() {
            x[i] += p[i] * step;
            r[i] -= ap[i] * step;
        }
        let rs_next = inner_product_slices(&r, &r, 1.0).re;
        let beta = rs_next / rs;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
        rs = rs_next;
    }
    (x, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn cg_solves_small_hermitian_system() {
        let a = [
            [Complex64::new(4.0, 0.0), Complex64::new(1.0, 1.0)],
            [Complex64::new(1.0, -1.0), Complex64::new(3.0, 0.0)],
        ];
        let apply = |v: &[Complex64]| vec![a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]];
        let b = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let (x, _) = conjugate_gradient(apply, &b, 1e-14, 10);
        assert!(relative_residual(&apply(&x), &b) < 1e-13);
    }

    #[test]
    fn oversampled_gaussian_is_nearly_tight() {
        // For heavy oversampling the Gaussian frame is nearly tight and γ ≈ g / A.
        let grid = Grid::line(256, 16.0).unwrap();
        let window = Window::gaussian(grid, 1.0).unwrap();
        let lattice = Lattice::new(1, 0.5, 0.5, 4.0, 4.0).unwrap();
        let frame = GaborFrame::new(window, lattice).unwrap();
        let b = frame.frame_bounds().unwrap();
        let kappa = b.upper / b.lower - 1.0;
        let tight = frame.window().samples().norm_sqr() / 0.25;
        assert!(kappa < 0.02 && ((b.lower + b.upper) / 2.0 - tight).abs() <= kappa * tight, "{b:?}");
        let dual = frame.dual_window().unwrap();
        let scaled = frame.window().samples().scale(Complex64::new(1.0 / b.lower, 0.0));
        assert!(dual.gamma.relative_error(&scaled).unwrap() <= kappa);
    }

    #[test]
    fn default_frame_bounds_and_dual() {
        let grid = Grid::default();
        let window = Window::gaussian(grid, 2.0).unwrap();
        let lattice = Lattice::new(1, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 8.0, 8.0).unwrap();
        let frame = GaborFrame::new(window, lattice).unwrap();
        let b = frame.frame_bounds().unwrap();
        assert!(b.lower > 0.1 && b.upper < 10.0 && b.upper >= b.lower, "{b:?}");
        let dual = frame.dual_window().unwrap();
        assert!(dual.residual <= DUAL_TOLERANCE);
        let report = frame.report().unwrap();
        assert_eq!(report.lower, b.lower);
    }

    #[test]
    fn expansions_agree_for_both_pairings() {
        let grid = Grid::default();
        let window = Window::gaussian(grid, 2.0).unwrap();
        let lattice = Lattice::new(1, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 8.0, 8.0).unwrap();
        let frame = GaborFrame::new(window, lattice).unwrap();
        let f = SampledSignal::from_fn(grid, |t| Complex64::new((-PI * t[0] * t[0]).exp(), 0.0)).unwrap();
        let a = frame.reconstruct(&f, Pairing::DualAnalysis).unwrap();
        let b = frame.reconstruct(&f, Pairing::WindowAnalysis).unwrap();
        let err = a.relative_error(&b).unwrap();
        assert!(err <= 1e-8, "{err:e}");
    }

    #[test]
    fn explicit_lattice_must_cover_band() {
        let grid = Grid::default();
        let window = Window::gaussian(grid, 2.0).unwrap();
        let lattice = Lattice::new(1, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 8.0, 8.0).unwrap();
        let frame = GaborFrame::new(window, lattice.clone()).unwrap();
        assert!(matches!(frame.frame_bounds_on(&lattice), Err(Error::InvalidInput(_))));
    }
}
