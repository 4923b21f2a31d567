//! Fitting of decay laws `m(r) ≈ C e^{-ε r^{1/s}}` from scattered magnitudes.
//!
//! Only the upper envelope of the samples is fitted: samples are binned by radius,
//! each bin keeps its largest magnitude, the profile is cut at the first radius gap
//! wider than `max_gap` and replaced by its non-increasing majorant. Magnitudes
//! within `noise_band` of the floor count towards the sample minimum but stay out
//! of the envelope, where they would form a flat tail. For every `s` of the grid a linear
//! least-squares fit of `log m = log C − ε r^{1/s}` is run on that envelope and the
//! smallest residual wins, ties going to the smaller `s`.
//!
//! Fitting the envelope rather than every sample keeps lattice anisotropy (entries
//! at equal radius but different direction) out of the residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Magnitudes at or below this are treated as quadrature noise.
    pub floor: f64,
    /// Samples with radius below this are ignored.
    pub exclusion_radius: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub s_step: f64,
    pub bin_width: f64,
    /// The envelope ends at the first gap in radius wider than this.
    pub max_gap: f64,
    /// Envelope points need magnitude above `noise_band · floor`.
    pub noise_band: f64,
    pub min_samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            floor: 1e-14,
            exclusion_radius: 0.0,
            s_min: 0.4,
            s_max: 2.0,
            s_step: 0.05,
            bin_width: 0.25,
            max_gap: 1.0,
            noise_band: 10.0,
            min_samples: 50,
        }
    }
}

impl FitOptions {
    pub fn s_grid(&self) -> Vec<f64> {
        let first = (self.s_min / self.s_step).round() as i64;
        let last = (self.s_max / self.s_step + 1e-9).floor() as i64;
        (first..=last).map(|k| round6(k as f64 * self.s_step)).collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.floor >= 0.0
            && self.exclusion_radius >= 0.0
            && self.s_min > 0.0
            && self.s_max >= self.s_min
            && self.s_step > 0.0
            && self.bin_width > 0.0
            && self.max_gap >= 0.0
            && self.noise_band >= 1.0;
        if !ok {
            return Err(Error::InvalidInput(format!("invalid fit options {self:?}")));
        }
        Ok(())
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Least-squares fit at one fixed exponent `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub s: f64,
    pub epsilon: f64,
    pub log_c: f64,
    pub r_squared: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub s_hat: f64,
    pub epsilon_hat: f64,
    #[serde(rename = "logC")]
    pub log_c: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
    /// Samples that passed the floor and exclusion filters.
    pub n_points: usize,
    /// Envelope points actually fitted.
    pub n_envelope: usize,
    pub weight_exponent: f64,
    #[serde(skip)]
    pub candidates: Vec<Candidate>,
}

impl DecayFit {
    /// The restricted fit at exponent `s`, if `s` is on the grid.
    pub fn candidate(&self, s: f64) -> Option<&Candidate> {
        self.candidates.iter().find(|c| (c.s - s).abs() < 1e-9)
    }

    /// `C e^{-ε r^{1/s}}` with the fitted parameters.
    pub fn bound(&self, r: f64) -> f64 {
        (self.log_c - self.epsilon_hat * r.powf(1.0 / self.s_hat)).exp()
    }
}

/// Fits `(radius, magnitude)` samples.
pub fn fit_decay_samples(samples: &[(f64, f64)], opts: &FitOptions) -> Result<DecayFit> {
    opts.validate()?;
    let above: Vec<(f64, f64)> =
        samples.iter().copied().filter(|&(r, m)| m.is_finite() && r.is_finite() && m > opts.floor).collect();
    if above.is_empty() {
        return Err(Error::NoSignal { floor: opts.floor });
    }
    let kept: Vec<(f64, f64)> = above.into_iter().filter(|&(r, _)| r >= opts.exclusion_radius).collect();
    if kept.len() < opts.min_samples {
        return Err(Error::InsufficientData { have: kept.len(), need: opts.min_samples });
    }
    let clear = opts.noise_band * opts.floor;
    let loud: Vec<(f64, f64)> = kept.iter().copied().filter(|&(_, m)| m > clear).collect();
    let envelope = envelope(&loud, opts.bin_width, opts.max_gap);
    if envelope.len() < 3 {
        return Err(Error::InsufficientData { have: envelope.len(), need: 3 });
    }
    let logs: Vec<f64> = envelope.iter().map(|&(_, m)| m.ln()).collect();
    let mut candidates = Vec::new();
    let mut best: Option<Candidate> = None;
    for s in opts.s_grid() {
        let u: Vec<f64> = envelope.iter().map(|&(r, _)| r.powf(1.0 / s)).collect();
        let c = line_fit(s, &u, &logs);
        if best.is_none_or(|b| c.sse < b.sse * (1.0 - 1e-12)) {
            best = Some(c);
        }
        candidates.push(c);
    }
    let best = best.expect("non-empty exponent grid");
    Ok(DecayFit {
        s_hat: best.s,
        epsilon_hat: best.epsilon,
        log_c: best.log_c,
        r_squared: best.r_squared,
        n_points: kept.len(),
        n_envelope: envelope.len(),
        weight_exponent: 0.0,
        candidates,
    })
}

/// Binned maxima up to the first radius gap wider than `max_gap`, made
/// non-increasing from the far end.
fn envelope(samples: &[(f64, f64)], width: f64, max_gap: f64) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut bins: Vec<(i64, f64, f64)> = Vec::new();
    let mut previous = None;
    for (r, m) in sorted {
        if previous.is_some_and(|p| r - p > max_gap) {
            break;
        }
        previous = Some(r);
        let b = (r / width).floor() as i64;
        match bins.last_mut() {
            Some(last) if last.0 == b => {
                if m > last.2 {
                    last.1 = r;
                    last.2 = m;
                }
            }
            _ => bins.push((b, r, m)),
        }
    }
    let mut out: Vec<(f64, f64)> = bins.into_iter().map(|(_, r, m)| (r, m)).collect();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i].1 = out[i].1.max(out[i + 1].1);
    }
    out
}

/// `y ≈ a − ε u` in the least-squares sense.
fn line_fit(s: f64, u: &[f64], y: &[f64]) -> Candidate {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|v| (v - mu) * (v - mu)).sum();
    let suy: f64 = u.iter().zip(y).map(|(a, b)| (a - mu) * (b - my)).sum();
    let slope = if suu > 0.0 { suy / suu } else { 0.0 };
    let intercept = my - slope * mu;
    let sse: f64 = u.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let sst: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };
    Candidate { s, epsilon: -slope, log_c: intercept, r_squared, sse }
}

/// `C = (rd/ε)^r`: the moment constant matching an exponential decay rate.
pub fn moment_constant_conversion(epsilon: f64, r: f64, d: u32) -> Result<f64> {
    check_positive(&[("epsilon", epsilon), ("r", r)], d)?;
    Ok((r * d as f64 / epsilon).powf(r))
}

/// `r (dC)^{-1/r}`: supremum of the decay rates admissible for constant `C`.
pub fn admissible_epsilon(c: f64, r: f64, d: u32) -> Result<f64> {
    check_positive(&[("C", c), ("r", r)], d)?;
    Ok(r * (d as f64 * c).powf(-1.0 / r))
}

fn check_positive(values: &[(&str, f64)], d: u32) -> Result<()> {
    for &(name, v) in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    Ok(())
}
