//! Windows, time-frequency shifts, lattices, the STFT and Gabor frames.

mod atoms;
mod frame;
mod lattice;
mod stft;
mod window;

pub use atoms::AtomBank;
pub use frame::{DualWindow, FrameBounds, FrameReport, GaborFrame, Pairing, DUAL_TOLERANCE, FRAME_FLOOR};
pub use lattice::{Lattice, COVER_MARGIN};
pub use stft::{inversion_reconstruct, phase_space_grid, stft, write_stft_csv};
pub use window::{tf_shift, Window, WindowKind};

use crate::decay::{fit_decay_samples, DecayFit, FitOptions};
use crate::error::Result;

/// Classifies STFT magnitudes `(z, |V_g f(z)|)` (points flattened with stride `2d`)
/// by the exponent `s` of the best decay law `e^{-ε|z|^{1/s}}`.
pub fn gs_decay_classify(points: &[f64], magnitudes: &[f64], dim: usize, opts: &FitOptions) -> Result<DecayFit> {
    let samples: Vec<(f64, f64)> = points
        .chunks(2 * dim)
        .zip(magnitudes)
        .map(|(z, &m)| (z.iter().map(|c| c * c).sum::<f64>().sqrt(), m))
        .collect();
    fit_decay_samples(&samples, opts)
}
