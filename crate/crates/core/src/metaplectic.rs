//! Symplectic matrices and metaplectic operators with invertible `A` block.
//!
//! For `𝒜 = [[A, B], [C, D]]` with `det A ≠ 0` the operator is the FIO with phase
//! `Φ(x, η) = ½ x·CA⁻¹x + η·A⁻¹x − ½ η·A⁻¹Bη` and constant symbol `(det A)^{-1/2}`;
//! its canonical transformation is `z ↦ 𝒜z`. The unimodular phase factor of the
//! metaplectic representation is not tracked, so compositions agree in magnitude only.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fio::{ClosedMap, ConstantSymbol, FioOperator, OperatorKind, QuadraticPhase};

/// Symplectic defect allowed at construction, relative to `max(1, ‖𝒜‖²)`.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-12;
/// `|det A|` below this is treated as singular.
pub const DET_FLOOR: f64 = 1e-10;
/// `|cos t|` below this is rejected by [`harmonic_oscillator`].
pub const COS_FLOOR: f64 = 1e-6;

/// `𝒜 = [[A, B], [C, D]] ∈ Sp(d, ℝ)` with row-major `d × d` blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticMatrix {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl SymplecticMatrix {
    pub fn new(dim: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>) -> Result<SymplecticMatrix> {
        let n = dim * dim;
        if dim == 0 || [&a, &b, &c, &d].iter().any(|m| m.len() != n) {
            return Err(Error::InvalidInput(format!("symplectic blocks must be {dim}x{dim}")));
        }
        if a.iter().chain(&b).chain(&c).chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let m = SymplecticMatrix { dim, a, b, c, d };
        let defect = m.symplectic_defect();
        let scale = m.full().norm().powi(2).max(1.0);
        if defect > SYMPLECTIC_TOLERANCE * scale {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(m)
    }

    /// `d = 1` convenience constructor from `[[a, b], [c, d]]`.
    pub fn from_2x2(a: f64, b: f64, c: f64, d: f64) -> Result<SymplecticMatrix> {
        SymplecticMatrix::new(1, vec![a], vec![b], vec![c], vec![d])
    }

    pub fn identity(dim: usize) -> SymplecticMatrix {
        let eye = eye(dim);
        let zero = vec![0.0; dim * dim];
        SymplecticMatrix { dim, a: eye.clone(), b: zero.clone(), c: zero, d: eye }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    /// The `2d × 2d` matrix.
    pub fn full(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let blk = match (i < n, j < n) {
                (true, true) => &self.a,
                (true, false) => &self.b,
                (false, true) => &self.c,
                (false, false) => &self.d,
            };
            blk[(i % n) * n + (j % n)]
        })
    }

    /// Row-major entries of [`SymplecticMatrix::full`].
    pub fn row_major(&self) -> Vec<f64> {
        let m = self.full();
        let s = 2 * self.dim;
        (0..s * s).map(|k| m[(k / s, k % s)]).collect()
    }

    /// `max |ᵗ𝒜 J 𝒜 − J|` entrywise.
    pub fn symplectic_defect(&self) -> f64 {
        symplectic_defect_of(&self.full())
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let m = self.full();
        let s = 2 * self.dim;
        (0..s).map(|i| (0..s).map(|j| m[(i, j)] * z[j]).sum()).collect()
    }

    pub fn det_a(&self) -> f64 {
        DMatrix::from_row_slice(self.dim, self.dim, &self.a).determinant()
    }
}

fn eye(dim: usize) -> Vec<f64> {
    (0..dim * dim).map(|k| if k % (dim + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

/// `J = [[0, −I], [I, 0]]`.
pub fn standard_j(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * dim, 2 * dim, |i, j| {
        if i < dim && j == i + dim {
            -1.0
        } else if i >= dim && j + dim == i {
            1.0
        } else {
            0.0
        }
    })
}

pub(crate) fn symplectic_defect_of(m: &DMatrix<f64>) -> f64 {
    let j = standard_j(m.nrows() / 2);
    (m.transpose() * &j * m - &j).amax()
}

/// A metaplectic operator in FIO form.
#[derive(Debug, Clone)]
pub struct MetaplecticFio {
    pub matrix: SymplecticMatrix,
    pub operator: FioOperator,
}

/// Builds `μ(𝒜)` as an FIO; requires `|det A| ≥ DET_FLOOR`.
pub fn build_metaplectic(id: impl Into<String>, matrix: SymplecticMatrix) -> Result<MetaplecticFio> {
    let n = matrix.dim;
    let a = DMatrix::from_row_slice(n, n, &matrix.a);
    let det = a.determinant();
    if !(det.abs() >= DET_FLOOR) {
        return Err(Error::SingularBlock { det });
    }
    let a_inv = a.clone().try_inverse().ok_or(Error::SingularBlock { det })?;
    let b = DMatrix::from_row_slice(n, n, &matrix.b);
    let c = DMatrix::from_row_slice(n, n, &matrix.c);
    let p = symmetrize(&(c * &a_inv));
    let r = symmetrize(&(-(&a_inv * b)));
    let q = row_major(&a_inv);
    let phase = QuadraticPhase::new(n, p, q, r)?;
    let symbol = ConstantSymbol::new(Complex64::new(det, 0.0).powf(-0.5));
    let operator = FioOperator::new(id, Arc::new(phase), Arc::new(symbol), OperatorKind::Metaplectic(matrix.clone()))
        .with_closed_map(ClosedMap::Linear(matrix.row_major()));
    Ok(MetaplecticFio { matrix, operator })
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r * c).map(|k| m[(k / c, k % c)]).collect()
}

/// Averages out rounding asymmetry of blocks that are symmetric in exact arithmetic.
fn symmetrize(m: &DMatrix<f64>) -> Vec<f64> {
    row_major(&((m + m.transpose()) * 0.5))
}

/// `𝒜 = [[I, 0], [cI, I]]`: `μ(𝒜)f = e^{πic|x|²} f`.
pub fn chirp(c: f64, dim: usize) -> Result<MetaplecticFio> {
    let zero = vec![0.0; dim * dim];
    let cm = eye(dim).into_iter().map(|v| v * c).collect();
    build_metaplectic(
        format!("metaplectic:chirp:{c}"),
        SymplecticMatrix::new(dim, eye(dim), zero.clone(), cm, eye(dim))?,
    )
}

/// `𝒜 = [[aI, 0], [0, I/a]]`: `μ(𝒜)f(x) = a^{-d/2} f(x/a)`.
pub fn dilation(a: f64, dim: usize) -> Result<MetaplecticFio> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!("dilation factor must be positive, got {a}")));
    }
    let zero = vec![0.0; dim * dim];
    let am = eye(dim).into_iter().map(|v| v * a).collect();
    let dm = eye(dim).into_iter().map(|v| v / a).collect();
    build_metaplectic(format!("metaplectic:dilation:{a}"), SymplecticMatrix::new(dim, am, zero.clone(), zero, dm)?)
}

/// Rotation `[[cos t I, −sin t I], [sin t I, cos t I]]`, the harmonic-oscillator flow.
pub fn rotation_matrix(t: f64, dim: usize) -> Result<SymplecticMatrix> {
    let (s, c) = t.sin_cos();
    let scaled = |v: f64| eye(dim).into_iter().map(|e| e * v).collect::<Vec<f64>>();
    SymplecticMatrix::new(dim, scaled(c), scaled(-s), scaled(s), scaled(c))
}

/// Propagator of the harmonic oscillator at time `t`: phase
/// `x·η / cos t + (tan t / 2)(|x|² + |η|²)` and symbol `(cos t)^{-d/2}`.
pub fn harmonic_oscillator(t: f64, dim: usize) -> Result<MetaplecticFio> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite time {t}")));
    }
    let cos_t = t.cos();
    if cos_t.abs() < COS_FLOOR {
        let k = ((t - FRAC_PI_2) / PI).round();
        let distance = (t - FRAC_PI_2 - k * PI).abs();
        return Err(Error::SingularTime { cos_t, distance });
    }
    build_metaplectic(format!("harmonic:{t}"), rotation_matrix(t, dim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    #[test]
    fn identity_gives_plain_phase() {
        let m = build_metaplectic("id", SymplecticMatrix::identity(1)).unwrap();
        let phase = m.operator.phase();
        assert_eq!(phase.value(&[1.5], &[2.0]), 3.0);
        assert_eq!(m.operator.symbol().eval(&[0.0], &[0.0]), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn chirp_and_dilation_phases() {
        let c = chirp(0.8, 1).unwrap();
        let (x, e) = (1.3, -0.4);
        assert!((c.operator.phase().value(&[x], &[e]) - (0.4 * x * x + e * x)).abs() < 1e-15);
        let d = dilation(2.0, 1).unwrap();
        assert!((d.operator.phase().value(&[x], &[e]) - e * x / 2.0).abs() < 1e-15);
        let sigma = d.operator.symbol().eval(&[0.0], &[0.0]);
        assert!((sigma.re - 2f64.powf(-0.5)).abs() < 1e-15 && sigma.im == 0.0);
    }

    #[test]
    fn mixed_block_is_inverse_of_a() {
        let m = SymplecticMatrix::from_2x2(2.0, 1.0, 3.0, 2.0).unwrap();
        let op = build_metaplectic("m", m).unwrap().operator;
        assert!((op.phase().mixed_determinant(&[0.3], &[0.1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn harmonic_values() {
        let h = harmonic_oscillator(0.0, 1).unwrap();
        assert_eq!(h.matrix, SymplecticMatrix::identity(1));
        let h = harmonic_oscillator(FRAC_PI_4, 1).unwrap();
        let z = h.matrix.apply(&[1.0, 0.0]);
        assert!((z[0] - FRAC_1_SQRT_2).abs() < 1e-15 && (z[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        let sigma = h.operator.symbol().eval(&[0.0], &[0.0]);
        assert!((sigma.norm() - 2f64.powf(0.25)).abs() < 1e-14);
        let t = FRAC_PI_4;
        let (x, e) = (0.7, -1.1);
        let expect = x * e / t.cos() + t.tan() / 2.0 * (x * x + e * e);
        assert!((h.operator.phase().value(&[x], &[e]) - expect).abs() < 1e-14);
    }

    #[test]
    fn singular_time_rejected() {
        match harmonic_oscillator(FRAC_PI_2 + 1e-8, 1) {
            Err(Error::SingularTime { distance, .. }) => assert!((distance - 1e-8).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(harmonic_oscillator(3.0 * FRAC_PI_2, 1).is_err());
        assert!(harmonic_oscillator(FRAC_PI_2 - 1e-3, 1).is_ok());
    }

    #[test]
    fn non_symplectic_and_singular_rejected() {
        assert!(matches!(SymplecticMatrix::from_2x2(1.0, 0.0, 0.0, 2.0), Err(Error::NotSymplectic { .. })));
        let swap = SymplecticMatrix::from_2x2(0.0, -1.0, 1.0, 0.0).unwrap();
        assert!(matches!(build_metaplectic("f", swap), Err(Error::SingularBlock { .. })));
        assert!(dilation(-1.0, 1).is_err());
    }

    #[test]
    fn block_generators_in_two_dimensions() {
        let r = rotation_matrix(0.3, 2).unwrap();
        assert!(r.symplectic_defect() < 1e-15);
        let op = harmonic_oscillator(0.3, 2).unwrap().operator;
        assert!((op.phase().mixed_determinant(&[0.0, 0.0], &[0.0, 0.0]) - 0.3f64.cos().powi(-2)).abs() < 1e-12);
    }
}
