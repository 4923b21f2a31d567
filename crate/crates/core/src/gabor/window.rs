use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{self, forward_transform, inverse_transform, unit_phase, Domain, Grid, SampledSignal};

/// Closed-form window families.
///
/// `Gaussian { width: a }` is `e^{-(π/a)|x|²}`; `Hermite { order: k, width: a }` is
/// `Π_i H_k(√(2π/a) x_i) e^{-(π/a)|x|²}` with physicists' Hermite polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WindowKind {
    Gaussian { width: f64 },
    Hermite { order: u32, width: f64 },
}

impl WindowKind {
    fn width(&self) -> f64 {
        match *self {
            WindowKind::Gaussian { width } | WindowKind::Hermite { width, .. } => width,
        }
    }

    fn order(&self) -> u32 {
        match *self {
            WindowKind::Gaussian { .. } => 0,
            WindowKind::Hermite { order, .. } => order,
        }
    }
}

/// A window with its samples on a fixed grid.
#[derive(Debug, Clone)]
pub struct Window {
    kind: WindowKind,
    sampled: SampledSignal,
}

impl Window {
    pub fn new(grid: Grid, kind: WindowKind) -> Result<Window> {
        let a = kind.width();
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidInput(format!("window width must be positive, got {a}")));
        }
        let sampled = SampledSignal::from_fn(grid, |x| Complex64::new(eval_kind(&kind, x), 0.0))?;
        if sampled.norm() == 0.0 {
            return Err(Error::InvalidInput("window vanishes on the grid".into()));
        }
        Ok(Window { kind, sampled })
    }

    pub fn gaussian(grid: Grid, width: f64) -> Result<Window> {
        Window::new(grid, WindowKind::Gaussian { width })
    }

    pub fn hermite(grid: Grid, order: u32, width: f64) -> Result<Window> {
        Window::new(grid, WindowKind::Hermite { order, width })
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        self.sampled.grid()
    }

    pub fn samples(&self) -> &SampledSignal {
        &self.sampled
    }

    pub fn norm(&self) -> f64 {
        self.sampled.norm()
    }

    /// `g(x)` from the closed form.
    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_kind(&self.kind, x)
    }

    /// `ĝ(ω)` from the closed form.
    pub fn fourier(&self, omega: &[f64]) -> Complex64 {
        let a = self.kind.width();
        let k = self.kind.order();
        let scale = (2.0 * PI * a).sqrt();
        let mut out = Complex64::new(1.0, 0.0);
        for &w in omega {
            out *= a.sqrt() * hermite_poly(k, scale * w) * (-PI * a * w * w).exp();
        }
        out * minus_i_pow(k * omega.len() as u32)
    }

    /// `g_λ(x) = e^{2πi λ₂·x} g(x − λ₁)` evaluated from the closed form.
    pub fn atom(&self, lambda: &[f64]) -> Result<SampledSignal> {
        let grid = *self.grid();
        let d = check_lambda(&grid, lambda)?;
        let (shift, freq) = lambda.split_at(d);
        let mut y = vec![0.0; d];
        SampledSignal::from_fn(grid, |x| {
            for i in 0..d {
                y[i] = x[i] - shift[i];
            }
            unit_phase(signal::dot(freq, x)) * self.eval(&y)
        })
    }

    pub(crate) fn atom_into(&self, lambda: &[f64], coords: &[f64], out: &mut [Complex64]) {
        let d = self.grid().dim();
        let (shift, freq) = lambda.split_at(d);
        let mut y = vec![0.0; d];
        for (x, slot) in coords.chunks(d).zip(out.iter_mut()) {
            for i in 0..d {
                y[i] = x[i] - shift[i];
            }
            *slot = unit_phase(signal::dot(freq, x)) * self.eval(&y);
        }
    }

    /// Band-limited version of `g_λ`: the inverse transform of
    /// `ĝ(ω − λ₂) e^{-2πi λ₁·(ω − λ₂)}` sampled on the frequency grid.
    ///
    /// Agrees with [`Window::atom`] up to the energy of `ĝ(· − λ₂)` outside the band,
    /// and stays well defined for `λ₂` at or beyond the band edge.
    pub fn band_limited_atom(&self, lambda: &[f64]) -> Result<SampledSignal> {
        let grid = *self.grid();
        let d = check_lambda(&grid, lambda)?;
        let (shift, freq) = lambda.split_at(d);
        let mut v = vec![0.0; d];
        let spectrum = SampledSignal::from_fn_freq(grid, |w| {
            for i in 0..d {
                v[i] = w[i] - freq[i];
            }
            self.fourier(&v) * unit_phase(-signal::dot(shift, &v))
        })?;
        inverse_transform(&spectrum)
    }
}

fn check_lambda(grid: &Grid, lambda: &[f64]) -> Result<usize> {
    let d = grid.dim();
    if lambda.len() != 2 * d {
        return Err(Error::InvalidInput(format!(
            "phase-space point needs {} coordinates, got {}",
            2 * d,
            lambda.len()
        )));
    }
    if lambda.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite phase-space point".into()));
    }
    Ok(d)
}

fn eval_kind(kind: &WindowKind, x: &[f64]) -> f64 {
    let a = kind.width();
    let k = kind.order();
    let scale = (2.0 * PI / a).sqrt();
    x.iter().map(|&xi| hermite_poly(k, scale * xi) * (-PI / a * xi * xi).exp()).product()
}

/// Physicists' Hermite polynomial by the three-term recurrence.
pub(crate) fn hermite_poly(k: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if k == 0 {
        return prev;
    }
    for n in 1..k {
        let next = 2.0 * x * cur - 2.0 * n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn minus_i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Time-frequency shift of arbitrary samples: periodic band-limited translation by
/// `λ₁` followed by exact modulation by `λ₂`.
pub fn tf_shift(g: &SampledSignal, lambda: &[f64]) -> Result<SampledSignal> {
    if g.domain() != Domain::Time {
        return Err(Error::InvalidInput("tf_shift expects time samples".into()));
    }
    let d = check_lambda(g.grid(), lambda)?;
    let (shift, freq) = lambda.split_at(d);
    if shift.iter().all(|&c| c == 0.0) {
        return signal::modulate(g, freq);
    }
    signal::modulate(&signal::translate(g, shift)?, freq)
}

/// Fourier-shift translation reusing a precomputed spectrum.
pub(crate) fn shift_from_spectrum(spectrum: &SampledSignal, lambda: &[f64]) -> Result<SampledSignal> {
    let grid = *spectrum.grid();
    let d = grid.dim();
    let (shift, freq) = lambda.split_at(d);
    let coords = grid.freq_coords();
    let shifted: Vec<Complex64> =
        spectrum.values().iter().zip(coords.chunks(d)).map(|(v, w)| v * unit_phase(-signal::dot(shift, w))).collect();
    let translated = inverse_transform(&SampledSignal::from_parts_unchecked(grid, Domain::Frequency, shifted))?;
    signal::modulate(&translated, freq)
}

pub(crate) fn spectrum_of(g: &SampledSignal) -> Result<SampledSignal> {
    forward_transform(g)
}
