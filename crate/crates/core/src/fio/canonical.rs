use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::operator::{ClosedMap, FioOperator};
use super::phase::Phase;
use crate::error::{Error, Result};
use crate::metaplectic::symplectic_defect_of;
use crate::signal::Grid;

pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const NEWTON_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    ClosedForm,
    Newton,
}

/// The canonical transformation `χ(y, η) = (x, ∇ₓΦ(x, η))` where `x` solves `∇_ηΦ(x, η) = y`.
#[derive(Debug, Clone)]
pub struct CanonicalMap {
    phase: Arc<dyn Phase>,
    closed: Option<ClosedMap>,
}

/// Canonical map of a nondegenerate operator on `grid`'s phase-space box.
pub fn canonical_map(op: &FioOperator, grid: &Grid) -> Result<CanonicalMap> {
    op.ensure_nondegenerate(grid)?;
    Ok(CanonicalMap { phase: op.phase_arc(), closed: op.closed_map().cloned() })
}

impl CanonicalMap {
    pub fn dim(&self) -> usize {
        self.phase.dim()
    }

    pub fn source(&self) -> MapSource {
        if self.closed.is_some() {
            MapSource::ClosedForm
        } else {
            MapSource::Newton
        }
    }

    /// `χ(z)` for `z = (y, η)`, from the closed form when one is known.
    pub fn map(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        match &self.closed {
            Some(c) => Ok(c.apply(z)),
            None => self.newton(z),
        }
    }

    pub fn closed_form(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.closed.as_ref().map(|c| c.apply(z))
    }

    /// Solves `∇_ηΦ(x, η) = y` by Newton's method from `x₀ = y`.
    pub fn newton(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        let d = self.dim();
        let (y, eta) = z.split_at(d);
        let mut x = y.to_vec();
        let mut residual = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let g = self.newton_function(&x, eta, y);
            residual = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if residual <= NEWTON_TOLERANCE * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                let (xi, _) = self.phase.gradient(&x, eta);
                return Ok([x, xi].concat());
            }
            let h = self.phase.hessian(&x, eta);
            let s = 2 * d;
            let jac = DMatrix::from_fn(d, d, |i, j| h[(d + i) * s + j]);
            let step =
                jac.lu().solve(&DVector::from_vec(g)).ok_or(Error::NewtonDiverged { last: x.clone(), residual })?;
            for (xi, si) in x.iter_mut().zip(step.iter()) {
                *xi -= si;
            }
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        Err(Error::NewtonDiverged { last: x, residual })
    }

    fn newton_function(&self, x: &[f64], eta: &[f64], y: &[f64]) -> Vec<f64> {
        let (_, ge) = self.phase.gradient(x, eta);
        ge.iter().zip(y).map(|(a, b)| a - b).collect()
    }

    /// `max |∇_ηΦ(x, η) − y|` at the image `χ(z) = (x, ξ)`.
    pub fn newton_residual(&self, z: &[f64], image: &[f64]) -> f64 {
        let d = self.dim();
        self.newton_function(&image[..d], &z[d..], &z[..d]).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Central-difference Jacobian of `χ` at `z`, row-major `2d × 2d`.
    pub fn jacobian(&self, z: &[f64], h: f64) -> Result<Vec<f64>> {
        self.check_len(z)?;
        let s = z.len();
        let mut jac = vec![0.0; s * s];
        for k in 0..s {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            let (fp, fm) = (self.map(&zp)?, self.map(&zm)?);
            for i in 0..s {
                jac[i * s + k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// `max |ᵗJ 𝒥 J − 𝒥|` for the numerical Jacobian `J` of `χ` at `z`.
    pub fn symplectic_defect(&self, z: &[f64], h: f64) -> Result<f64> {
        let s = z.len();
        let jac = self.jacobian(z, h)?;
        Ok(symplectic_defect_of(&DMatrix::from_row_slice(s, s, &jac)))
    }

    fn check_len(&self, z: &[f64]) -> Result<()> {
        if z.len() != 2 * self.dim() {
            return Err(Error::InvalidInput(format!("phase-space point must have {} coordinates", 2 * self.dim())));
        }
        Ok(())
    }
}
