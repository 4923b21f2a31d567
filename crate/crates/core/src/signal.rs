//! Uniform periodic grids on R^d and sampled complex signals.
//!
//! Conventions used everywhere else in the crate:
//!
//! * time samples `t_j = (j - N/2) Δ` for `j = 0..N`, so the grid covers `[-L/2, L/2)`;
//! * frequency samples `ω_k = (k - N/2) / L`, covering `[-N/(2L), N/(2L))`;
//! * `f̂(ω) = ∫ f(t) e^{-2πi t·ω} dt`, discretised as `Δ^d Σ_j f(t_j) e^{-2πi t_j·ω_k}`;
//! * `⟨f, g⟩ = ∫ f ḡ`, discretised with weight `Δ^d` in time and `L^{-d}` in frequency.
//!
//! The centred transform is a standard FFT wrapped in `(-1)^j` / `(-1)^{k+N/2}` twiddles,
//! applied axis by axis. Values are stored row-major (last axis fastest).

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A uniform periodic grid `[-L/2, L/2)^d` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    length: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { dim: 1, points_per_axis: 1024, length: 32.0 }
    }
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, length: f64) -> Result<Grid> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if points_per_axis < 2 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "points per axis must be a power of two >= 2, got {points_per_axis}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!("grid length must be positive, got {length}")));
        }
        Ok(Grid { dim, points_per_axis, length })
    }

    /// One-dimensional grid, the configuration every shipped experiment uses.
    pub fn line(points: usize, length: f64) -> Result<Grid> {
        Grid::new(1, points, length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.length
    }

    /// Sample spacing `Δ = L / N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.points_per_axis as f64
    }

    /// Frequency spacing `1 / L`.
    pub fn freq_spacing(&self) -> f64 {
        1.0 / self.length
    }

    /// Half-width of the frequency band, `N / (2L)`.
    pub fn nyquist(&self) -> f64 {
        0.5 * self.points_per_axis as f64 / self.length
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one time sample, `Δ^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Quadrature weight of one frequency sample, `L^{-d}`.
    pub fn freq_cell_volume(&self) -> f64 {
        self.freq_spacing().powi(self.dim as i32)
    }

    pub fn time_axis(&self) -> Vec<f64> {
        let n = self.points_per_axis as isize;
        let dx = self.spacing();
        (0..n).map(|j| (j - n / 2) as f64 * dx).collect()
    }

    pub fn freq_axis(&self) -> Vec<f64> {
        let n = self.points_per_axis as isize;
        let dw = self.freq_spacing();
        (0..n).map(|k| (k - n / 2) as f64 * dw).collect()
    }

    /// Multi-index of a flat (row-major) sample index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let n = self.points_per_axis;
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    }

    /// Coordinates of every time sample, flattened with stride `d`.
    pub fn time_coords(&self) -> Vec<f64> {
        self.coords(&self.time_axis())
    }

    /// Coordinates of every frequency sample, flattened with stride `d`.
    pub fn freq_coords(&self) -> Vec<f64> {
        self.coords(&self.freq_axis())
    }

    fn coords(&self, axis: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.dim);
        for flat in 0..self.len() {
            for j in self.unflatten(flat) {
                out.push(axis[j]);
            }
        }
        out
    }

    /// Flat indices of samples whose every coordinate lies in `[-L/4, L/4)`.
    pub fn central_half(&self) -> Vec<usize> {
        let n = self.points_per_axis;
        (0..self.len()).filter(|&flat| self.unflatten(flat).iter().all(|&j| j >= n / 4 && j < 3 * n / 4)).collect()
    }

    /// Grid with twice the period and the same spacing, containing `self` in its middle.
    pub fn doubled(&self) -> Grid {
        Grid { dim: self.dim, points_per_axis: 2 * self.points_per_axis, length: 2.0 * self.length }
    }

    /// Flat index in `self.doubled()` of every sample of `self`.
    pub(crate) fn doubled_indices(&self) -> Vec<usize> {
        let big = self.doubled();
        let off = self.points_per_axis / 2;
        let m = big.points_per_axis;
        (0..self.len()).map(|flat| self.unflatten(flat).iter().fold(0, |acc, &j| acc * m + j + off)).collect()
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Whether a [`SampledSignal`] holds time samples or frequency samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Grid,
    domain: Domain,
    values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<SampledSignal> {
        SampledSignal::with_domain(grid, Domain::Time, values)
    }

    pub fn with_domain(grid: Grid, domain: Domain, values: Vec<Complex64>) -> Result<SampledSignal> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(SampledSignal { grid, domain, values })
    }

    pub fn zeros(grid: Grid) -> SampledSignal {
        SampledSignal { grid, domain: Domain::Time, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f(t_j)` of a closure on the time grid.
    pub fn from_fn(grid: Grid, f: impl FnMut(&[f64]) -> Complex64) -> Result<SampledSignal> {
        let coords = grid.time_coords();
        let values = coords.chunks(grid.dim()).map(f).collect();
        SampledSignal::new(grid, values)
    }

    /// Samples `f̂(ω_k)` of a closure on the frequency grid.
    pub fn from_fn_freq(grid: Grid, f: impl FnMut(&[f64]) -> Complex64) -> Result<SampledSignal> {
        let coords = grid.freq_coords();
        let values = coords.chunks(grid.dim()).map(f).collect();
        SampledSignal::with_domain(grid, Domain::Frequency, values)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, domain: Domain, values: Vec<Complex64>) -> SampledSignal {
        debug_assert_eq!(values.len(), grid.len());
        SampledSignal { grid, domain, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Quadrature weight for this signal's domain.
    pub fn weight(&self) -> f64 {
        match self.domain {
            Domain::Time => self.grid.cell_volume(),
            Domain::Frequency => self.grid.freq_cell_volume(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> SampledSignal {
        let values = self.values.iter().map(|v| v * c).collect();
        SampledSignal { values, ..*self }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &SampledSignal, b: Complex64) -> Result<SampledSignal> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(SampledSignal { values, ..*self })
    }

    /// `‖self − other‖₂ / ‖other‖₂`.
    pub fn relative_error(&self, reference: &SampledSignal) -> Result<f64> {
        self.check_compatible(reference)?;
        let diff: f64 = self.values.iter().zip(&reference.values).map(|(x, y)| (x - y).norm_sqr()).sum();
        let base: f64 = reference.values.iter().map(|y| y.norm_sqr()).sum();
        Ok((diff / base).sqrt())
    }

    /// Largest pointwise deviation `max_j |self_j − other_j|`.
    pub fn max_abs_diff(&self, other: &SampledSignal) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }

    fn check_compatible(&self, other: &SampledSignal) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.domain != other.domain {
            return Err(Error::GridMismatch(format!("{:?} signal vs {:?} signal", self.domain, other.domain)));
        }
        Ok(())
    }

    /// Zero-extends a time signal onto `grid.doubled()`.
    pub fn embed_doubled(&self) -> Result<SampledSignal> {
        if self.domain != Domain::Time {
            return Err(Error::InvalidInput("only time signals can be embedded".into()));
        }
        let big = self.grid.doubled();
        let mut values = vec![Complex64::new(0.0, 0.0); big.len()];
        for (v, i) in self.values.iter().zip(self.grid.doubled_indices()) {
            values[i] = *v;
        }
        Ok(SampledSignal { grid: big, domain: Domain::Time, values })
    }

    /// Restriction of a signal on `grid.doubled()` to `grid`.
    pub fn restrict_from_doubled(&self, grid: &Grid) -> Result<SampledSignal> {
        self.grid.check_same(&grid.doubled())?;
        if self.domain != Domain::Time {
            return Err(Error::InvalidInput("only time signals can be restricted".into()));
        }
        let values = grid.doubled_indices().into_iter().map(|i| self.values[i]).collect();
        Ok(SampledSignal { grid: *grid, domain: Domain::Time, values })
    }

    /// Writes `t, re, im` (or `omega, re, im`) rows at full double precision.
    ///
    /// For `d > 1` the coordinate column is split into `t1, …, td`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let (name, coords) = match self.domain {
            Domain::Time => ("t", self.grid.time_coords()),
            Domain::Frequency => ("omega", self.grid.freq_coords()),
        };
        let d = self.grid.dim();
        let header: Vec<String> =
            if d == 1 { vec![name.to_string()] } else { (1..=d).map(|a| format!("{name}{a}")).collect() };
        writeln!(out, "{},re,im", header.join(","))?;
        for (point, v) in coords.chunks(d).zip(&self.values) {
            let cols: Vec<String> = point.iter().map(|c| format!("{c:?}")).collect();
            writeln!(out, "{},{:?},{:?}", cols.join(","), v.re, v.im)?;
        }
        Ok(())
    }
}

/// `⟨f, g⟩ = ∫ f ḡ` as a weighted sum over the grid.
pub fn inner_product(f: &SampledSignal, g: &SampledSignal) -> Result<Complex64> {
    f.check_compatible(g)?;
    Ok(inner_product_slices(f.values(), g.values(), f.weight()))
}

pub(crate) fn inner_product_slices(f: &[Complex64], g: &[Complex64], weight: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        acc += a * b.conj();
    }
    acc * weight
}

/// Centred Fourier transform `f ↦ f̂` with the `e^{-2πi t·ω}` convention.
pub fn forward_transform(f: &SampledSignal) -> Result<SampledSignal> {
    if f.domain != Domain::Time {
        return Err(Error::InvalidInput("forward transform expects a time-domain signal".into()));
    }
    check_finite(f.values())?;
    let mut values = f.values.clone();
    centered_dft(&f.grid, &mut values, Direction::Forward);
    Ok(SampledSignal::from_parts_unchecked(f.grid, Domain::Frequency, values))
}

/// Inverse of [`forward_transform`].
pub fn inverse_transform(fh: &SampledSignal) -> Result<SampledSignal> {
    if fh.domain != Domain::Frequency {
        return Err(Error::InvalidInput("inverse transform expects a frequency-domain signal".into()));
    }
    check_finite(fh.values())?;
    let mut values = fh.values.clone();
    centered_dft(&fh.grid, &mut values, Direction::Inverse);
    Ok(SampledSignal::from_parts_unchecked(fh.grid, Domain::Time, values))
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place centred transform of row-major data on `grid`.
pub(crate) fn centered_dft(grid: &Grid, data: &mut [Complex64], direction: Direction) {
    let n = grid.points_per_axis();
    let d = grid.dim();
    let mut planner = FftPlanner::<f64>::new();
    let fft = match direction {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let weight = match direction {
        Direction::Forward => grid.spacing(),
        Direction::Inverse => grid.freq_spacing(),
    };
    let half_sign = if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in 0..data.len() / n {
            // Enumerate every line running along `axis`.
            let outer = start / stride;
            let inner = start % stride;
            let base = outer * block + inner;
            for (j, slot) in line.iter_mut().enumerate() {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *slot = data[base + j * stride] * sign;
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (k, v) in line.iter().enumerate() {
                let sign = if k % 2 == 0 { half_sign } else { -half_sign };
                data[base + k * stride] = v * (sign * weight);
            }
        }
    }
}

/// `M_ω f(t) = e^{2πi ω·t} f(t)`, evaluated pointwise.
pub fn modulate(f: &SampledSignal, omega: &[f64]) -> Result<SampledSignal> {
    check_point(&f.grid, omega)?;
    let coords = f.grid.time_coords();
    let values = f.values.iter().zip(coords.chunks(f.grid.dim())).map(|(v, t)| v * unit_phase(dot(omega, t))).collect();
    Ok(SampledSignal { values, ..*f })
}

/// `T_x f(t) = f(t − x)` for the periodic band-limited interpolant of the samples.
///
/// Exact (to rounding) whenever `x` is a multiple of the spacing.
pub fn translate(f: &SampledSignal, x: &[f64]) -> Result<SampledSignal> {
    check_point(&f.grid, x)?;
    let fh = forward_transform(f)?;
    let coords = f.grid.freq_coords();
    let shifted: Vec<Complex64> =
        fh.values.iter().zip(coords.chunks(f.grid.dim())).map(|(v, w)| v * unit_phase(-dot(x, w))).collect();
    inverse_transform(&SampledSignal::from_parts_unchecked(f.grid, Domain::Frequency, shifted))
}

fn check_point(grid: &Grid, p: &[f64]) -> Result<()> {
    if p.len() != grid.dim() {
        return Err(Error::InvalidInput(format!("point has {} coordinates, grid has {}", p.len(), grid.dim())));
    }
    if p.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite shift".into()));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `e^{2πi θ}`, with `θ` reduced mod 1 before scaling so large phases keep their
/// fractional part to full precision.
#[inline]
pub fn unit_phase(theta: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * theta.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(grid: Grid, a: f64) -> SampledSignal {
        SampledSignal::from_fn(grid, |t| Complex64::new((-PI * a * t[0] * t[0]).exp(), 0.0)).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::default();
        assert_eq!(g.len(), 1024);
        assert!((g.spacing() * 1024.0 - 32.0).abs() < 1e-12);
        let t = g.time_axis();
        assert_eq!(t[0], -16.0);
        assert!((t[1023] - (16.0 - g.spacing())).abs() < 1e-12);
        let w = g.freq_axis();
        assert_eq!(w[0], -16.0);
        assert!((w[1] - w[0] - 1.0 / 32.0).abs() < 1e-15);
        assert!(Grid::line(1000, 32.0).is_err());
        assert!(Grid::line(1, 32.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::line(8, -1.0).is_err());
    }

    #[test]
    fn unit_gaussian_is_self_dual() {
        let grid = Grid::default();
        let f = gaussian(grid, 1.0);
        let fh = forward_transform(&f).unwrap();
        let expect: Vec<f64> = grid.freq_axis().iter().map(|w| (-PI * w * w).exp()).collect();
        let err = fh.values().iter().zip(&expect).map(|(v, e)| (v - e).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "max error {err}");
    }

    #[test]
    fn wide_gaussian_transform_matches_closed_form() {
        // ∫ e^{-π t²/2} e^{-2πitω} dt = √2 e^{-2πω²}
        let grid = Grid::default();
        let f = gaussian(grid, 0.5);
        let fh = forward_transform(&f).unwrap();
        let err = fh
            .values()
            .iter()
            .zip(grid.freq_axis())
            .map(|(v, w)| (v - 2f64.sqrt() * (-2.0 * PI * w * w).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "max error {err}");
    }

    #[test]
    fn constant_transforms_to_spike() {
        let grid = Grid::line(64, 8.0).unwrap();
        let ones = SampledSignal::from_fn(grid, |_| Complex64::new(1.0, 0.0)).unwrap();
        let fh = forward_transform(&ones).unwrap();
        let zero = grid.points_per_axis() / 2;
        for (k, v) in fh.values().iter().enumerate() {
            if k == zero {
                assert!((v.re - grid.length()).abs() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12, "leak at {k}: {v}");
            }
        }
    }

    #[test]
    fn non_finite_rejected() {
        let grid = Grid::line(8, 1.0).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(SampledSignal::new(grid, v).unwrap_err(), Error::NonFinite { index: 3 });
    }

    #[test]
    fn gaussian_inner_products() {
        let grid = Grid::default();
        let g = gaussian(grid, 0.5);
        let gg = inner_product(&g, &g).unwrap();
        assert!((gg.re - 1.0).abs() < 1e-12 && gg.im.abs() < 1e-15);
        assert!((g.norm_sqr() - gg.re).abs() < 1e-14);

        // |⟨g, M_ω T_x g⟩| = e^{-πx²/4 - πω²}
        for &(x, w) in &[(0.5, 0.25), (1.0, -0.75), (-2.0, 1.5)] {
            let shifted = SampledSignal::from_fn(grid, |t| {
                Complex64::new((-0.5 * PI * (t[0] - x).powi(2)).exp(), 0.0) * unit_phase(w * t[0])
            })
            .unwrap();
            let v = inner_product(&g, &shifted).unwrap().norm();
            let expect = (-PI * x * x / 4.0 - PI * w * w).exp();
            assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = SampledSignal::zeros(Grid::line(8, 1.0).unwrap());
        let b = SampledSignal::zeros(Grid::line(8, 2.0).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn translation_and_modulation_commute_up_to_phase() {
        // M_y T_x = e^{2πixy} T_x M_y for grid-aligned x, y
        let grid = Grid::default();
        let f = SampledSignal::from_fn(grid, |t| {
            Complex64::new((-PI * t[0] * t[0]).exp(), 0.3 * t[0] * (-PI * t[0] * t[0]).exp())
        })
        .unwrap();
        let x = 40.0 * grid.spacing();
        let y = 24.0 * grid.freq_spacing();
        let lhs = modulate(&translate(&f, &[x]).unwrap(), &[y]).unwrap();
        let rhs = translate(&modulate(&f, &[y]).unwrap(), &[x]).unwrap().scale(unit_phase(x * y));
        assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn two_dimensional_transform_factorises() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let f = SampledSignal::from_fn(grid, |t| Complex64::new((-PI * (t[0] * t[0] + 2.0 * t[1] * t[1])).exp(), 0.0))
            .unwrap();
        let fh = forward_transform(&f).unwrap();
        let expect = SampledSignal::from_fn_freq(grid, |w| {
            Complex64::new((-PI * w[0] * w[0]).exp() * (-PI * w[1] * w[1] / 2.0).exp() / 2f64.sqrt(), 0.0)
        })
        .unwrap();
        let err = fh.max_abs_diff(&expect).unwrap();
        assert!(err < 1e-10, "{err:e}");
        let back = inverse_transform(&fh).unwrap();
        assert!(back.relative_error(&f).unwrap() < 1e-13);
    }

    #[test]
    fn doubling_round_trip() {
        for grid in [Grid::line(16, 4.0).unwrap(), Grid::new(2, 8, 2.0).unwrap()] {
            let f = SampledSignal::from_fn(grid, |t| Complex64::new(t.iter().sum::<f64>(), 1.0)).unwrap();
            let big = f.embed_doubled().unwrap();
            assert_eq!(big.grid(), &grid.doubled());
            assert!((big.norm() - f.norm()).abs() < 1e-14);
            // Embedded samples sit at the same coordinates.
            let coords = big.grid().time_coords();
            let d = grid.dim();
            for (v, p) in big.values().iter().zip(coords.chunks(d)) {
                if v.im != 0.0 {
                    assert!((v.re - p.iter().sum::<f64>()).abs() < 1e-14);
                }
            }
            assert_eq!(big.restrict_from_doubled(&grid).unwrap(), f);
        }
    }

    #[test]
    fn csv_layout() {
        let grid = Grid::line(4, 2.0).unwrap();
        let f = SampledSignal::from_fn(grid, |t| Complex64::new(t[0], 0.1)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,re,im");
        assert_eq!(lines[1], "-1.0,-1.0,0.1");
        assert_eq!(lines.len(), 5);
        let fh = forward_transform(&f).unwrap();
        let mut buf = Vec::new();
        fh.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("omega,re,im\n"));
    }

    /// Band-limited random signals: random Gaussian bumps well inside the grid.
    fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
        prop::collection::vec((-6.0..6.0f64, -4.0..4.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..6)
    }

    fn bump_signal(grid: Grid, shape: &[(f64, f64, f64, f64)]) -> SampledSignal {
        SampledSignal::from_fn(grid, |t| {
            shape
                .iter()
                .map(|&(c, w, re, im)| Complex64::new(re, im) * (-PI * (t[0] - c).powi(2)).exp() * unit_phase(w * t[0]))
                .sum()
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval_and_round_trip(shape in bumps()) {
            let grid = Grid::default();
            let f = bump_signal(grid, &shape);
            prop_assume!(f.norm() > 1e-3);
            let fh = forward_transform(&f).unwrap();
            prop_assert!((fh.norm() - f.norm()).abs() <= 1e-12 * f.norm());
            let back = inverse_transform(&fh).unwrap();
            prop_assert!(back.relative_error(&f).unwrap() <= 1e-12);
        }
    }
}
