use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::window::Window;
use crate::error::{Error, Result};
use crate::signal::{inner_product_slices, Domain, SampledSignal};

/// `V_g f(z) = ⟨f, g_z⟩` at each phase-space point (flattened with stride `2d`).
pub fn stft(f: &SampledSignal, window: &Window, points: &[f64]) -> Result<Vec<Complex64>> {
    let grid = *window.grid();
    if f.grid() != &grid || f.domain() != Domain::Time {
        return Err(Error::GridMismatch("signal and window live on different grids".into()));
    }
    let s = 2 * grid.dim();
    if !points.len().is_multiple_of(s) {
        return Err(Error::InvalidInput(format!("point list length {} is not a multiple of {s}", points.len())));
    }
    if points.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite evaluation point".into()));
    }
    let coords = grid.time_coords();
    let w = grid.cell_volume();
    Ok(points
        .par_chunks(s)
        .map_init(
            || vec![Complex64::new(0.0, 0.0); grid.len()],
            |atom, z| {
                window.atom_into(z, &coords, atom);
                inner_product_slices(f.values(), atom, w)
            },
        )
        .collect())
}

/// Square phase-space grid `{-R, -R+h, …, R}^{2d}`, flattened with stride `2d`.
pub fn phase_space_grid(dim: usize, radius: f64, step: f64) -> Result<Vec<f64>> {
    if !(radius >= 0.0 && step > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("bad phase-space grid radius={radius}, step={step}")));
    }
    let k = (radius / step + 1e-9).floor() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
    let m = axis.len();
    let s = 2 * dim;
    let total = m.pow(s as u32);
    let mut out = Vec::with_capacity(total * s);
    for mut flat in 0..total {
        let mut z = vec![0.0; s];
        for slot in z.iter_mut().rev() {
            *slot = axis[flat % m];
            flat /= m;
        }
        out.extend(z);
    }
    Ok(out)
}

/// Riemann-sum inversion `f ≈ ‖g‖₂⁻² Σ_z V_g f(z) g_z h^{2d}` over
/// [`phase_space_grid`]`(d, radius, step)`.
pub fn inversion_reconstruct(f: &SampledSignal, window: &Window, radius: f64, step: f64) -> Result<SampledSignal> {
    let grid = *window.grid();
    let points = phase_space_grid(grid.dim(), radius, step)?;
    let coeffs = stft(f, window, &points)?;
    let scale = step.powi(2 * grid.dim() as i32) / window.samples().norm_sqr();
    let coords = grid.time_coords();
    let n = grid.len();
    let s = 2 * grid.dim();
    let partials: Vec<Vec<Complex64>> = points
        .par_chunks(s * 256)
        .zip(coeffs.par_chunks(256))
        .map(|(zs, cs)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut atom = vec![Complex64::new(0.0, 0.0); n];
            for (z, c) in zs.chunks(s).zip(cs) {
                window.atom_into(z, &coords, &mut atom);
                for (a, v) in acc.iter_mut().zip(&atom) {
                    *a += c * v;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v * scale;
        }
    }
    SampledSignal::new(grid, out)
}

/// Writes `x, omega, re, im, abs` rows (split into `x1…, omega1…` for `d > 1`).
pub fn write_stft_csv<W: Write>(mut out: W, dim: usize, points: &[f64], values: &[Complex64]) -> Result<()> {
    let header: Vec<String> = if dim == 1 {
        vec!["x".into(), "omega".into()]
    } else {
        (1..=dim).map(|i| format!("x{i}")).chain((1..=dim).map(|i| format!("omega{i}"))).collect()
    };
    writeln!(out, "{},re,im,abs", header.join(","))?;
    for (z, v) in points.chunks(2 * dim).zip(values) {
        let cols: Vec<String> = z.iter().map(|c| format!("{c:?}")).collect();
        writeln!(out, "{},{:?},{:?},{:?}", cols.join(","), v.re, v.im, v.norm())?;
    }
    Ok(())
}
