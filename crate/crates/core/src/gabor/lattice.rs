use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::Grid;

/// Frequency margin beyond the band edge used by [`Lattice::covering`].
pub const COVER_MARGIN: f64 = 5.0;

const RANGE_SLACK: f64 = 1e-9;

/// Truncated separable lattice `αℤ^d × βℤ^d`.
///
/// Points are stored flat with stride `2d` (time coordinates first) and sorted
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lattice {
    dim: usize,
    alpha: f64,
    beta: f64,
    time_range: f64,
    freq_range: f64,
    #[serde(skip)]
    points: Vec<f64>,
}

impl Lattice {
    /// All points with `|λ₁,i| ≤ time_range` and `|λ₂,i| ≤ freq_range` on every axis.
    pub fn new(dim: usize, alpha: f64, beta: f64, time_range: f64, freq_range: f64) -> Result<Lattice> {
        check_steps(dim, alpha, beta)?;
        if !(time_range >= 0.0 && freq_range >= 0.0 && time_range.is_finite() && freq_range.is_finite()) {
            return Err(Error::InvalidInput("lattice ranges must be finite and non-negative".into()));
        }
        let kt = (time_range / alpha + RANGE_SLACK).floor() as i64;
        let kf = (freq_range / beta + RANGE_SLACK).floor() as i64;
        Ok(Lattice::from_ranges(dim, alpha, beta, (-kt, kt), (-kf, kf), time_range, freq_range))
    }

    /// Lattice covering the whole periodic grid: time points in `[-L/2, L/2)` and
    /// frequency points within `COVER_MARGIN` of the band `[-N/(2L), N/(2L))`.
    pub fn covering(grid: &Grid, alpha: f64, beta: f64) -> Result<Lattice> {
        check_steps(grid.dim(), alpha, beta)?;
        let half = grid.half_width();
        let t_lo = (-half / alpha - RANGE_SLACK).ceil() as i64;
        let t_hi = (half / alpha - RANGE_SLACK).ceil() as i64 - 1;
        let freq_range = grid.nyquist() + COVER_MARGIN;
        let kf = (freq_range / beta + RANGE_SLACK).floor() as i64;
        Ok(Lattice::from_ranges(grid.dim(), alpha, beta, (t_lo, t_hi), (-kf, kf), half, freq_range))
    }

    fn from_ranges(
        dim: usize,
        alpha: f64,
        beta: f64,
        time_idx: (i64, i64),
        freq_idx: (i64, i64),
        time_range: f64,
        freq_range: f64,
    ) -> Lattice {
        let mut ranges = vec![time_idx; dim];
        ranges.extend(std::iter::repeat_n(freq_idx, dim));
        let mut points = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().all(|r| r.0 <= r.1) {
            loop {
                for (c, &i) in idx.iter().enumerate() {
                    points.push(i as f64 * if c < dim { alpha } else { beta });
                }
                // Odometer increment, last coordinate fastest.
                let mut c = idx.len();
                loop {
                    if c == 0 {
                        return Lattice { dim, alpha, beta, time_range, freq_range, points };
                    }
                    c -= 1;
                    if idx[c] < ranges[c].1 {
                        idx[c] += 1;
                        break;
                    }
                    idx[c] = ranges[c].0;
                }
            }
        }
        Lattice { dim, alpha, beta, time_range, freq_range, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn time_range(&self) -> f64 {
        self.time_range
    }

    pub fn freq_range(&self) -> f64 {
        self.freq_range
    }

    /// `(αβ)^d`, the reciprocal of the lattice density.
    pub fn redundancy(&self) -> f64 {
        (self.alpha * self.beta).powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points.len() / (2 * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let s = 2 * self.dim;
        &self.points[i * s..(i + 1) * s]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.points.chunks(2 * self.dim)
    }

    /// Index of a lattice point, if present.
    pub fn position(&self, lambda: &[f64]) -> Option<usize> {
        self.points().position(|p| p.iter().zip(lambda).all(|(a, b)| (a - b).abs() < 1e-12))
    }
}

fn check_steps(dim: usize, alpha: f64, beta: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("lattice dimension must be positive".into()));
    }
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("lattice steps must be positive, got alpha={alpha}, beta={beta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn default_truncation_has_529_points() {
        let lat = Lattice::new(1, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 8.0, 8.0).unwrap();
        assert_eq!(lat.len(), 23 * 23);
        assert!((lat.redundancy() - 0.5).abs() < 1e-15);
        assert!(lat.points().all(|p| p[0].abs() <= 8.0 && p[1].abs() <= 8.0));
        let pts: Vec<&[f64]> = lat.points().collect();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lat.position(&[0.0, 0.0]), Some(23 * 11 + 11));
    }

    #[test]
    fn integer_lattice_includes_range_endpoints() {
        let lat = Lattice::new(1, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(lat.len(), 15);
        assert_eq!(lat.point(0), &[-2.0, -1.0]);
        assert_eq!(lat.point(14), &[2.0, 1.0]);
    }

    #[test]
    fn covering_tiles_the_period_once() {
        let grid = Grid::default();
        let lat = Lattice::covering(&grid, 1.0, 1.0).unwrap();
        let times: Vec<f64> = lat.points().map(|p| p[0]).collect();
        assert_eq!(times.first(), Some(&-16.0));
        assert_eq!(times.last(), Some(&15.0));
        assert_eq!(lat.len(), 32 * 43);
        let lat = Lattice::covering(&grid, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        assert_eq!(lat.len(), 45 * 59);
    }

    #[test]
    fn two_dimensional_ordering() {
        let lat = Lattice::new(2, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(lat.len(), 9);
        assert_eq!(lat.point(0), &[-1.0, -1.0, 0.0, 0.0]);
        assert_eq!(lat.point(1), &[-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bad_steps_rejected() {
        assert!(Lattice::new(1, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(Lattice::new(1, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(Lattice::new(1, 1.0, 1.0, f64::INFINITY, 1.0).is_err());
    }
}
