use num_complex::Complex64;
use rayon::prelude::*;

use super::lattice::Lattice;
use super::window::{shift_from_spectrum, spectrum_of, Window};
use crate::error::{Error, Result};
use crate::signal::{inner_product_slices, Domain, Grid, SampledSignal};

/// Atoms summed per task in synthesis; fixed so reductions are reproducible.
const SYNTHESIS_CHUNK: usize = 64;

/// A family of sampled atoms `{h_λ}` indexed by a lattice, stored atom-contiguous.
#[derive(Debug, Clone)]
pub struct AtomBank {
    grid: Grid,
    count: usize,
    data: Vec<Complex64>,
}

impl AtomBank {
    /// `g_λ` from the window's closed form.
    pub fn analytic(window: &Window, lattice: &Lattice) -> Result<AtomBank> {
        let grid = *window.grid();
        check_dims(&grid, lattice)?;
        let coords = grid.time_coords();
        let mut data = vec![Complex64::new(0.0, 0.0); grid.len() * lattice.len()];
        let pts: Vec<&[f64]> = lattice.points().collect();
        data.par_chunks_mut(grid.len())
            .zip(pts.par_iter())
            .for_each(|(col, lambda)| window.atom_into(lambda, &coords, col));
        Ok(AtomBank { grid, count: lattice.len(), data })
    }

    /// Band-limited projections of `g_λ`, see [`Window::band_limited_atom`].
    pub fn band_limited(window: &Window, lattice: &Lattice) -> Result<AtomBank> {
        let grid = *window.grid();
        check_dims(&grid, lattice)?;
        let pts: Vec<&[f64]> = lattice.points().collect();
        let cols = pts.par_iter().map(|lambda| window.band_limited_atom(lambda)).collect::<Result<Vec<_>>>()?;
        Ok(AtomBank::from_columns(grid, cols))
    }

    /// Time-frequency shifts of arbitrary samples (periodic translation, then modulation).
    pub fn shifted(h: &SampledSignal, lattice: &Lattice) -> Result<AtomBank> {
        let grid = *h.grid();
        check_dims(&grid, lattice)?;
        let spectrum = spectrum_of(h)?;
        let pts: Vec<&[f64]> = lattice.points().collect();
        let cols = pts.par_iter().map(|lambda| shift_from_spectrum(&spectrum, lambda)).collect::<Result<Vec<_>>>()?;
        Ok(AtomBank::from_columns(grid, cols))
    }

    fn from_columns(grid: Grid, cols: Vec<SampledSignal>) -> AtomBank {
        let count = cols.len();
        let mut data = Vec::with_capacity(grid.len() * count);
        for c in cols {
            data.extend_from_slice(c.values());
        }
        AtomBank { grid, count, data }
    }

    /// Restriction of atoms on `grid.doubled()` to `grid`.
    pub fn restricted(&self, grid: &Grid) -> Result<AtomBank> {
        if self.grid != grid.doubled() {
            return Err(Error::GridMismatch("atoms do not live on the doubled grid".into()));
        }
        let idx = grid.doubled_indices();
        let mut data = Vec::with_capacity(grid.len() * self.count);
        for h in self.data.chunks(self.grid.len()) {
            data.extend(idx.iter().map(|&i| h[i]));
        }
        Ok(AtomBank { grid: *grid, count: self.count, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn atom(&self, i: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn atom_signal(&self, i: usize) -> SampledSignal {
        SampledSignal::from_parts_unchecked(self.grid, Domain::Time, self.atom(i).to_vec())
    }

    /// Coefficients `⟨f, h_λ⟩`.
    pub fn analysis(&self, f: &SampledSignal) -> Result<Vec<Complex64>> {
        self.check_signal(f)?;
        Ok(self.analysis_slice(f.values()))
    }

    pub(crate) fn analysis_slice(&self, f: &[Complex64]) -> Vec<Complex64> {
        let w = self.grid.cell_volume();
        self.data.par_chunks(self.grid.len()).map(|h| inner_product_slices(f, h, w)).collect()
    }

    /// `Σ_λ c_λ h_λ`.
    pub fn synthesis(&self, coeffs: &[Complex64]) -> Result<SampledSignal> {
        if coeffs.len() != self.count {
            return Err(Error::InvalidInput(format!("expected {} coefficients, got {}", self.count, coeffs.len())));
        }
        Ok(SampledSignal::from_parts_unchecked(self.grid, Domain::Time, self.synthesis_slice(coeffs)))
    }

    pub(crate) fn synthesis_slice(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let partials: Vec<Vec<Complex64>> = self
            .data
            .par_chunks(n * SYNTHESIS_CHUNK)
            .zip(coeffs.par_chunks(SYNTHESIS_CHUNK))
            .map(|(atoms, cs)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                for (h, &c) in atoms.chunks(n).zip(cs) {
                    if c == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (a, v) in acc.iter_mut().zip(h) {
                        *a += c * v;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for p in partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    /// Frame operator `S f = Σ_λ ⟨f, h_λ⟩ h_λ`.
    pub(crate) fn frame_operator(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.synthesis_slice(&self.analysis_slice(f))
    }

    /// `Δ^d Σ_λ h_λ(t_i) conj(h_λ(t_k))` for `i, k` in `rows` (a principal block of S).
    pub(crate) fn frame_block(&self, rows: &[usize]) -> Vec<Complex64> {
        let m = rows.len();
        let n = self.grid.len();
        // Row-major restriction so the block entries become contiguous dot products.
        let mut restricted = vec![Complex64::new(0.0, 0.0); m * self.count];
        for (p, h) in self.data.chunks(n).enumerate() {
            for (r, &i) in rows.iter().enumerate() {
                restricted[r * self.count + p] = h[i];
            }
        }
        let w = self.grid.cell_volume();
        let upper: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|r| {
                let a = &restricted[r * self.count..(r + 1) * self.count];
                (r..m).map(|c| inner_product_slices(a, &restricted[c * self.count..(c + 1) * self.count], w)).collect()
            })
            .collect();
        let mut block = vec![Complex64::new(0.0, 0.0); m * m];
        for (r, row) in upper.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let c = r + k;
                block[r * m + c] = v;
                block[c * m + r] = v.conj();
            }
        }
        block
    }

    fn check_signal(&self, f: &SampledSignal) -> Result<()> {
        if f.grid() != &self.grid || f.domain() != Domain::Time {
            return Err(Error::GridMismatch("signal is not a time-domain signal on the atom grid".into()));
        }
        Ok(())
    }
}

fn check_dims(grid: &Grid, lattice: &Lattice) -> Result<()> {
    if grid.dim() != lattice.dim() {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs lattice dimension {}",
            grid.dim(),
            lattice.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::inner_product;

    #[test]
    fn analysis_and_synthesis_are_adjoint() {
        let grid = Grid::line(256, 16.0).unwrap();
        let w = Window::gaussian(grid, 2.0).unwrap();
        let lat = Lattice::new(1, 0.9, 0.8, 4.0, 3.0).unwrap();
        let bank = AtomBank::analytic(&w, &lat).unwrap();
        let f = w.atom(&[0.4, -0.3]).unwrap();
        let c = bank.analysis(&f).unwrap();
        let d: Vec<Complex64> =
            (0..bank.len()).map(|i| Complex64::new(i as f64 * 0.01, 1.0 - i as f64 * 0.02)).collect();
        let lhs = inner_product(&f, &bank.synthesis(&d).unwrap()).unwrap();
        let rhs: Complex64 = c.iter().zip(&d).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn frame_block_matches_operator() {
        let grid = Grid::line(64, 8.0).unwrap();
        let w = Window::gaussian(grid, 2.0).unwrap();
        let lat = Lattice::new(1, 1.0, 1.0, 4.0, 4.0).unwrap();
        let bank = AtomBank::analytic(&w, &lat).unwrap();
        let rows: Vec<usize> = (0..64).collect();
        let block = bank.frame_block(&rows);
        let mut e = vec![Complex64::new(0.0, 0.0); 64];
        e[20] = Complex64::new(1.0, 0.0);
        let col = bank.frame_operator(&e);
        for i in 0..64 {
            assert!((block[i * 64 + 20] - col[i]).norm() < 1e-13);
        }
    }
}
