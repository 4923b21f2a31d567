use std::fmt::Debug;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Declared Gevrey regularity `|∂^α Φ| ≤ C^{|α|} (α!)^s` for `|α| ≥ 2`.
///
/// Metadata only: it selects the decay class an experiment expects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gevrey {
    pub order: f64,
    pub constant: f64,
}

/// A real phase `Φ(x, η)` on `ℝ^d × ℝ^d` with analytic derivatives.
pub trait Phase: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], eta: &[f64]) -> f64;

    /// `(∇ₓΦ, ∇_ηΦ)`.
    fn gradient(&self, x: &[f64], eta: &[f64]) -> (Vec<f64>, Vec<f64>);

    /// Row-major `2d × 2d` Hessian in the variable order `(x, η)`.
    fn hessian(&self, x: &[f64], eta: &[f64]) -> Vec<f64>;

    fn gevrey(&self) -> Gevrey;

    /// `det ∂²_{x,η}Φ`, the determinant of the mixed block `(∂²Φ/∂x_i∂η_j)`.
    fn mixed_determinant(&self, x: &[f64], eta: &[f64]) -> f64 {
        let d = self.dim();
        let h = self.hessian(x, eta);
        let block = nalgebra::DMatrix::from_fn(d, d, |i, j| h[i * 2 * d + d + j]);
        block.determinant()
    }
}

/// `Φ(x, η) = ½ xᵀPx + ηᵀQx + ½ ηᵀRη` with symmetric `P`, `R`.
///
/// Covers `Φ = x·η` (`Q = I`) and every phase of a metaplectic operator with
/// invertible `A` block (`P = CA⁻¹`, `Q = A⁻¹`, `R = −A⁻¹B`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPhase {
    dim: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
}

const SYMMETRY_TOLERANCE: f64 = 1e-10;

impl QuadraticPhase {
    /// Blocks are row-major `d × d`.
    pub fn new(dim: usize, p: Vec<f64>, q: Vec<f64>, r: Vec<f64>) -> Result<QuadraticPhase> {
        let n = dim * dim;
        if dim == 0 || p.len() != n || q.len() != n || r.len() != n {
            return Err(Error::InvalidInput(format!("quadratic phase blocks must be {dim}x{dim}")));
        }
        if p.iter().chain(&q).chain(&r).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase coefficient".into()));
        }
        for m in [&p, &r] {
            for i in 0..dim {
                for j in 0..i {
                    if (m[i * dim + j] - m[j * dim + i]).abs() > SYMMETRY_TOLERANCE * (1.0 + m[i * dim + j].abs()) {
                        return Err(Error::InvalidInput("quadratic phase blocks P and R must be symmetric".into()));
                    }
                }
            }
        }
        Ok(QuadraticPhase { dim, p, q, r })
    }

    /// `Φ = x·η`.
    pub fn identity(dim: usize) -> QuadraticPhase {
        let zero = vec![0.0; dim * dim];
        let eye = (0..dim * dim).map(|k| if k % (dim + 1) == 0 { 1.0 } else { 0.0 }).collect();
        QuadraticPhase { dim, p: zero.clone(), q: eye, r: zero }
    }

    pub fn blocks(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.p, &self.q, &self.r)
    }
}

fn mat_vec(m: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
}

fn mat_t_vec(m: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|j| (0..d).map(|i| m[i * d + j] * v[i]).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Phase for QuadraticPhase {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], eta: &[f64]) -> f64 {
        let d = self.dim;
        if d == 1 {
            return 0.5 * self.p[0] * x[0] * x[0] + self.q[0] * eta[0] * x[0] + 0.5 * self.r[0] * eta[0] * eta[0];
        }
        0.5 * dot(x, &mat_vec(&self.p, x, d))
            + dot(eta, &mat_vec(&self.q, x, d))
            + 0.5 * dot(eta, &mat_vec(&self.r, eta, d))
    }

    fn gradient(&self, x: &[f64], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let gx: Vec<f64> = mat_vec(&self.p, x, d).iter().zip(mat_t_vec(&self.q, eta, d)).map(|(a, b)| a + b).collect();
        let ge: Vec<f64> = mat_vec(&self.q, x, d).iter().zip(mat_vec(&self.r, eta, d)).map(|(a, b)| a + b).collect();
        (gx, ge)
    }

    fn hessian(&self, _x: &[f64], _eta: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let s = 2 * d;
        let mut h = vec![0.0; s * s];
        for i in 0..d {
            for j in 0..d {
                h[i * s + j] = self.p[i * d + j];
                // ∂²Φ/∂x_i∂η_j = Q_{ji}
                h[i * s + d + j] = self.q[j * d + i];
                h[(d + i) * s + j] = self.q[i * d + j];
                h[(d + i) * s + d + j] = self.r[i * d + j];
            }
        }
        h
    }

    fn gevrey(&self) -> Gevrey {
        let c = self.p.iter().chain(&self.q).chain(&self.r).fold(1.0f64, |m, v| m.max(v.abs()));
        Gevrey { order: 0.5, constant: c }
    }
}

/// Real multiplier functions `φ` for `Φ(x, η) = x·η + φ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Multiplier {
    /// `φ(x) = Σ_i cos x_i`
    Cos,
    /// `φ(x) = c₂ |x|²`
    Poly { c2: f64 },
}

impl Multiplier {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Multiplier::Cos => x.iter().map(|v| v.cos()).sum(),
            Multiplier::Poly { c2 } => c2 * dot(x, x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Multiplier::Cos => x.iter().map(|v| -v.sin()).collect(),
            Multiplier::Poly { c2 } => x.iter().map(|v| 2.0 * c2 * v).collect(),
        }
    }

    /// Diagonal of the Hessian (both shipped multipliers are separable).
    pub fn hessian_diagonal(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Multiplier::Cos => x.iter().map(|v| -v.cos()).collect(),
            Multiplier::Poly { c2 } => vec![2.0 * c2; x.len()],
        }
    }

    pub fn gevrey(&self) -> Gevrey {
        match *self {
            Multiplier::Cos => Gevrey { order: 1.0, constant: 1.0 },
            Multiplier::Poly { c2 } => Gevrey { order: 0.5, constant: (2.0 * c2.abs()).max(1.0) },
        }
    }
}

/// `Φ(x, η) = x·η + φ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierPhase {
    dim: usize,
    multiplier: Multiplier,
}

impl MultiplierPhase {
    pub fn new(dim: usize, multiplier: Multiplier) -> Result<MultiplierPhase> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if let Multiplier::Poly { c2 } = multiplier {
            if !c2.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coefficient {c2}")));
            }
        }
        Ok(MultiplierPhase { dim, multiplier })
    }

    pub fn multiplier(&self) -> Multiplier {
        self.multiplier
    }
}

impl Phase for MultiplierPhase {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], eta: &[f64]) -> f64 {
        dot(x, eta) + self.multiplier.value(x)
    }

    fn gradient(&self, x: &[f64], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gx = self.multiplier.gradient(x).iter().zip(eta).map(|(a, b)| a + b).collect();
        (gx, x.to_vec())
    }

    fn hessian(&self, x: &[f64], _eta: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let s = 2 * d;
        let mut h = vec![0.0; s * s];
        for (i, v) in self.multiplier.hessian_diagonal(x).into_iter().enumerate() {
            h[i * s + i] = v;
            h[i * s + d + i] = 1.0;
            h[(d + i) * s + i] = 1.0;
        }
        h
    }

    fn gevrey(&self) -> Gevrey {
        self.multiplier.gevrey()
    }
}

/// A symbol `σ(x, η)` with polynomial weight `M(z) = ⟨z⟩^N`.
pub trait Symbol: Debug + Send + Sync {
    fn eval(&self, x: &[f64], eta: &[f64]) -> Complex64;

    /// The exponent `N` of `M(z) = (1 + |z|²)^{N/2}`.
    fn weight_exponent(&self) -> f64 {
        0.0
    }

    /// `Some(c)` when `σ ≡ c`, enabling kernel shortcuts.
    fn as_constant(&self) -> Option<Complex64> {
        None
    }
}

/// `M(z) = (1 + |z|²)^{N/2}`.
pub fn polynomial_weight(z: &[f64], exponent: f64) -> f64 {
    if exponent == 0.0 {
        return 1.0;
    }
    (1.0 + dot(z, z)).powf(exponent / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSymbol {
    pub value: Complex64,
    pub weight_exponent: f64,
}

impl ConstantSymbol {
    pub fn new(value: Complex64) -> ConstantSymbol {
        ConstantSymbol { value, weight_exponent: 0.0 }
    }

    pub fn one() -> ConstantSymbol {
        ConstantSymbol::new(Complex64::new(1.0, 0.0))
    }
}

impl Symbol for ConstantSymbol {
    fn eval(&self, _x: &[f64], _eta: &[f64]) -> Complex64 {
        self.value
    }

    fn weight_exponent(&self) -> f64 {
        self.weight_exponent
    }

    fn as_constant(&self) -> Option<Complex64> {
        Some(self.value)
    }
}

/// Accuracy of a phase's analytic derivatives against central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub gradient_error: f64,
    pub hessian_error: f64,
    pub hessian_asymmetry: f64,
}

/// Compares analytic gradient and Hessian with central differences of step `h` at
/// each point `(x, η)` (flattened with stride `2d`). Errors are relative to
/// `max(1, |exact|)` entrywise.
pub fn check_derivatives(phase: &dyn Phase, points: &[f64], h: f64) -> DerivativeCheck {
    let d = phase.dim();
    let s = 2 * d;
    let mut out = DerivativeCheck { gradient_error: 0.0, hessian_error: 0.0, hessian_asymmetry: 0.0 };
    let split = |z: &[f64]| (z[..d].to_vec(), z[d..].to_vec());
    let grad_flat = |z: &[f64]| {
        let (x, e) = split(z);
        let (gx, ge) = phase.gradient(&x, &e);
        [gx, ge].concat()
    };
    for z in points.chunks(s) {
        let (x, e) = split(z);
        let exact_g = grad_flat(z);
        let exact_h = phase.hessian(&x, &e);
        for k in 0..s {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            let (xp, ep) = split(&zp);
            let (xm, em) = split(&zm);
            let fd = (phase.value(&xp, &ep) - phase.value(&xm, &em)) / (2.0 * h);
            out.gradient_error = out.gradient_error.max((fd - exact_g[k]).abs() / exact_g[k].abs().max(1.0));
            let gp = grad_flat(&zp);
            let gm = grad_flat(&zm);
            for j in 0..s {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                let ex = exact_h[j * s + k];
                out.hessian_error = out.hessian_error.max((fd - ex).abs() / ex.abs().max(1.0));
                out.hessian_asymmetry = out.hessian_asymmetry.max((exact_h[j * s + k] - exact_h[k * s + j]).abs());
            }
        }
    }
    out
}
