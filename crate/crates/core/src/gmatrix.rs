//! Gabor matrices `M_{μλ} = ⟨Tg_λ, g_μ⟩`: assembly, decay against the canonical
//! transformation, sparsity of rows and columns, and thresholded application.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::decay::{fit_decay_samples, DecayFit, FitOptions};
use crate::error::{Error, Result};
use crate::fio::{polynomial_weight, CanonicalMap, FioOperator};
use crate::gabor::{GaborFrame, Pairing};
use crate::signal::{centered_dft, inner_product_slices, Direction, Domain, Grid, SampledSignal};

/// `χ(λ)` must stay this far inside the grid's time and frequency extent.
pub const RELIABLE_MARGIN: f64 = 3.0;
/// An entry is aliased when a periodic copy of `χ(λ)` lies within `dist + ALIAS_MARGIN` of `μ`.
pub const ALIAS_MARGIN: f64 = 2.0;
pub const MATRIX_FIT_EXCLUSION: f64 = 0.5;
pub const MATRIX_FIT_MIN_SAMPLES: usize = 200;

/// Fit options for matrix decay: the envelope defaults with the near-diagonal plateau
/// (`dist < 0.5`) excluded and at least 200 usable entries.
pub fn matrix_fit_options() -> FitOptions {
    FitOptions { exclusion_radius: MATRIX_FIT_EXCLUSION, min_samples: MATRIX_FIT_MIN_SAMPLES, ..FitOptions::default() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixEntry {
    pub lambda: usize,
    pub mu: usize,
    pub value: Complex64,
    /// `|μ − χ(λ)|`.
    pub dist: f64,
    /// A periodic image of `χ(λ)` competes with `χ(λ)` itself at `μ`.
    pub aliased: bool,
}

/// Gabor matrix over the frame's coefficient lattice, stored as a λ-major entry list.
#[derive(Debug, Clone)]
pub struct GaborMatrix {
    frame: Arc<GaborFrame>,
    operator_id: String,
    weight_exponent: f64,
    entries: Vec<MatrixEntry>,
    /// Per λ: `χ(λ)` left the reliable region.
    column_flags: Vec<bool>,
    images: Vec<f64>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// All shifts `(n L, m F)` with `n, m ∈ {−1, 0, 1}^d` except zero, stride `2d`.
fn periodic_offsets(grid: &Grid) -> Vec<f64> {
    let d = grid.dim();
    let s = 2 * d;
    let periods: Vec<f64> = (0..s).map(|k| if k < d { grid.length() } else { 2.0 * grid.nyquist() }).collect();
    let mut out = Vec::new();
    for mut flat in 0..3usize.pow(s as u32) {
        let mut v = vec![0.0; s];
        for k in 0..s {
            v[k] = ((flat % 3) as f64 - 1.0) * periods[k];
            flat /= 3;
        }
        if v.iter().any(|&c| c != 0.0) {
            out.extend(v);
        }
    }
    out
}

/// Assembles `M_{μλ}` for every pair of coefficient-lattice points.
///
/// `Tg_λ` is computed once per λ by the operator's quadrature and paired against
/// the closed-form atoms `g_μ`. Columns whose image `χ(λ)` comes within 3 units of the
/// grid's time or frequency extent are flagged. Entries whose `μ` is nearly as close
/// to a periodic image `χ(λ + nL) + mF` as to `χ(λ)` are flagged as aliased. Both
/// flags exclude entries from fits.
pub fn assemble(op: &FioOperator, frame: &Arc<GaborFrame>, chi: &CanonicalMap) -> Result<GaborMatrix> {
    let grid = *frame.grid();
    let d = grid.dim();
    if op.dim() != d || chi.dim() != d {
        return Err(Error::GridMismatch("operator, canonical map and frame dimensions differ".into()));
    }
    let lattice = frame.lattice();
    let p = lattice.len();
    let kernel = op.kernel(&grid)?;
    let atoms = frame.atoms()?;
    let w = grid.cell_volume();
    let columns: Vec<Vec<Complex64>> = (0..p)
        .into_par_iter()
        .map(|l| {
            let mut spectrum = atoms.atom(l).to_vec();
            centered_dft(&grid, &mut spectrum, Direction::Forward);
            let tg = kernel.apply_spectrum_serial(&spectrum);
            (0..p).map(|m| inner_product_slices(&tg, atoms.atom(m), w)).collect()
        })
        .collect();

    let images: Vec<f64> = lattice.points().map(|z| chi.map(z)).collect::<Result<Vec<_>>>()?.concat();
    let (xr, fr) = (grid.half_width() - RELIABLE_MARGIN, grid.nyquist() - RELIABLE_MARGIN);
    let column_flags: Vec<bool> = images
        .chunks(2 * d)
        .map(|z| z[..d].iter().any(|c| c.abs() > xr) || z[d..].iter().any(|c| c.abs() > fr))
        .collect();

    let offsets = periodic_offsets(&grid);
    let mut copies = Vec::with_capacity(p);
    for l in 0..p {
        let lambda = lattice.point(l);
        let mut imgs = Vec::new();
        for off in offsets.chunks(2 * d) {
            let mut shifted = lambda.to_vec();
            for i in 0..d {
                shifted[i] += off[i];
            }
            let mut img = chi.map(&shifted)?;
            for i in 0..d {
                img[d + i] += off[d + i];
            }
            imgs.extend(img);
        }
        copies.push(imgs);
    }

    let mut entries = Vec::with_capacity(p * p);
    for (l, col) in columns.into_iter().enumerate() {
        if let Some(i) = col.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index: l * p + i });
        }
        let image = &images[l * 2 * d..(l + 1) * 2 * d];
        for (m, value) in col.into_iter().enumerate() {
            let mu = lattice.point(m);
            let dist = euclid(mu, image);
            let nearest = copies[l].chunks(2 * d).map(|c| euclid(mu, c)).fold(f64::INFINITY, f64::min);
            entries.push(MatrixEntry { lambda: l, mu: m, value, dist, aliased: nearest < dist + ALIAS_MARGIN });
        }
    }
    Ok(GaborMatrix {
        frame: Arc::clone(frame),
        operator_id: op.id().to_string(),
        weight_exponent: op.symbol().weight_exponent(),
        entries,
        column_flags,
        images,
    })
}

impl GaborMatrix {
    pub fn frame(&self) -> &GaborFrame {
        &self.frame
    }

    pub fn operator_id(&self) -> &str {
        &self.operator_id
    }

    pub fn size(&self) -> usize {
        self.column_flags.len()
    }

    pub fn entries(&self) -> &[MatrixEntry] {
        &self.entries
    }

    pub fn entry(&self, mu: usize, lambda: usize) -> &MatrixEntry {
        &self.entries[lambda * self.size() + mu]
    }

    pub fn column_flagged(&self, lambda: usize) -> bool {
        self.column_flags[lambda]
    }

    pub fn flagged_columns(&self) -> usize {
        self.column_flags.iter().filter(|&&f| f).count()
    }

    /// `χ(λ)` for column `lambda`.
    pub fn image(&self, lambda: usize) -> &[f64] {
        let s = 2 * self.frame.grid().dim();
        &self.images[lambda * s..(lambda + 1) * s]
    }

    /// Entries usable in fits: neither the column nor the entry is flagged.
    pub fn is_reliable(&self, e: &MatrixEntry) -> bool {
        !e.aliased && !self.column_flags[e.lambda]
    }

    /// `|M_{μλ}| / M(μ_x, λ_ξ)` with `M(z) = ⟨z⟩^N`.
    pub fn normalized_magnitude(&self, e: &MatrixEntry) -> f64 {
        if self.weight_exponent == 0.0 {
            return e.value.norm();
        }
        let lat = self.frame.lattice();
        let d = lat.dim();
        let v = [&lat.point(e.mu)[..d], &lat.point(e.lambda)[d..]].concat();
        e.value.norm() / polynomial_weight(&v, self.weight_exponent)
    }

    pub fn weight_exponent(&self) -> f64 {
        self.weight_exponent
    }

    /// CSV `lambda1,...,mu1,...,re,im,abs,dist`, λ-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let lat = self.frame.lattice();
        let s = 2 * lat.dim();
        let head: Vec<String> = (1..=s)
            .map(|k| format!("lambda{k}"))
            .chain((1..=s).map(|k| format!("mu{k}")))
            .chain(["re", "im", "abs", "dist"].map(String::from))
            .collect();
        writeln!(out, "{}", head.join(","))?;
        for e in &self.entries {
            let mut row: Vec<String> =
                lat.point(e.lambda).iter().chain(lat.point(e.mu)).map(|v| format!("{v:?}")).collect();
            row.extend([e.value.re, e.value.im, e.value.norm(), e.dist].map(|v| format!("{v:?}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// JSON fit report `{operator, s_hat, epsilon_hat, logC, r2, n_points}`.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub operator: String,
    #[serde(flatten)]
    pub fit: DecayFit,
}

/// Fits `normalized |M_{μλ}| ≈ C e^{-ε dist^{1/s}}` over reliable entries.
pub fn fit_decay(m: &GaborMatrix, opts: &FitOptions) -> Result<DecayFit> {
    let samples: Vec<(f64, f64)> =
        m.entries.iter().filter(|e| m.is_reliable(e)).map(|e| (e.dist, m.normalized_magnitude(e))).collect();
    let mut fit = fit_decay_samples(&samples, opts)?;
    fit.weight_exponent = m.weight_exponent;
    Ok(fit)
}

pub fn fit_report(m: &GaborMatrix, opts: &FitOptions) -> Result<FitReport> {
    Ok(FitReport { operator: m.operator_id.clone(), fit: fit_decay(m, opts)? })
}

/// Outcome of checking every reliable entry against a fitted bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `normalized |M| / bound`.
    pub max_ratio: f64,
}

/// Checks normalized `|M_{μλ}| ≤ C(1+slack) e^{-ε(1−slack) dist^{1/s}}` over reliable
/// entries. Entries within the noise band of the floor (`≤ noise_band · floor`) are
/// quadrature noise and never shape the fitted envelope, so they are skipped.
pub fn check_decay_bound(m: &GaborMatrix, fit: &DecayFit, opts: &FitOptions, slack: f64) -> BoundCheck {
    let c = fit.log_c.exp() * (1.0 + slack);
    let eps = fit.epsilon_hat * (1.0 - slack);
    let noise = opts.noise_band * opts.floor;
    let mut out = BoundCheck { checked: 0, violations: 0, max_ratio: 0.0 };
    for e in m.entries.iter().filter(|e| m.is_reliable(e)) {
        let v = m.normalized_magnitude(e);
        if v <= noise {
            continue;
        }
        let ratio = v / (c * (-eps * e.dist.powf(1.0 / fit.s_hat)).exp());
        out.checked += 1;
        out.max_ratio = out.max_ratio.max(ratio);
        if ratio > 1.0 {
            out.violations += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rows,
    Columns,
}

/// Least-squares fit `log |a|_n ≈ log C − ε n^p` of one sorted sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    pub index: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
    pub r2: f64,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstFit {
    /// Largest fitted `C`.
    #[serde(rename = "C")]
    pub c: f64,
    /// Smallest fitted `ε`.
    pub epsilon: f64,
    /// Smallest `R²`.
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityCurve {
    pub axis: Axis,
    pub exponent_used: f64,
    /// Sorted magnitudes `|a|_n` of every fitted line.
    #[serde(skip)]
    pub sorted: Vec<Vec<f64>>,
    pub lines: Vec<LineFit>,
    pub worst: WorstFit,
}

/// Fits `|a|_n ≤ C e^{-ε n^p}` to the non-increasing rearrangement of `values`
/// (magnitudes at or below `floor` discarded). `None` with fewer than three values.
pub fn fit_sorted_sequence(values: &[f64], exponent: f64, floor: f64) -> Option<(Vec<f64>, f64, f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|&m| m > floor && m.is_finite()).collect();
    if v.len() < 3 {
        return None;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    let xs: Vec<f64> = (1..=v.len()).map(|n| (n as f64).powf(exponent)).collect();
    let ys: Vec<f64> = v.iter().map(|m| m.ln()).collect();
    let nf = v.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some((v, intercept.exp(), -slope, r2))
}

/// Per-row (fixed μ) or per-column (fixed λ) sparsity fits against `n^{1/(2ds)}`.
/// Flagged columns and aliased entries are left out; lines with fewer than three
/// values above `floor` are skipped.
pub fn sparsity_curve(m: &GaborMatrix, axis: Axis, d: usize, s: f64, floor: f64) -> Result<SparsityCurve> {
    if d == 0 || !(s > 0.0) {
        return Err(Error::InvalidInput(format!("sparsity exponent needs d ≥ 1 and s > 0, got d={d}, s={s}")));
    }
    let exponent = 1.0 / (2.0 * d as f64 * s);
    let p = m.size();
    let mut groups = vec![Vec::new(); p];
    for e in m.entries.iter().filter(|e| m.is_reliable(e)) {
        let key = match axis {
            Axis::Rows => e.mu,
            Axis::Columns => e.lambda,
        };
        groups[key].push(e.value.norm());
    }
    let mut lines = Vec::new();
    let mut sorted = Vec::new();
    for (index, vals) in groups.iter().enumerate() {
        if let Some((v, c, epsilon, r2)) = fit_sorted_sequence(vals, exponent, floor) {
            lines.push(LineFit { index, c, epsilon, r2, len: v.len() });
            sorted.push(v);
        }
    }
    if lines.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    let worst = WorstFit {
        c: lines.iter().map(|l| l.c).fold(f64::NEG_INFINITY, f64::max),
        epsilon: lines.iter().map(|l| l.epsilon).fold(f64::INFINITY, f64::min),
        r2: lines.iter().map(|l| l.r2).fold(f64::INFINITY, f64::min),
    };
    Ok(SparsityCurve { axis, exponent_used: exponent, sorted, lines, worst })
}

/// JSON sparsity report `{row_worst: {C, epsilon, r2}, column_worst, exponent_used}`.
#[derive(Debug, Clone, Serialize)]
pub struct SparsityReport {
    pub operator: String,
    pub row_worst: WorstFit,
    pub column_worst: WorstFit,
    pub exponent_used: f64,
    pub rows_fitted: usize,
    pub columns_fitted: usize,
}

pub fn sparsity_report(m: &GaborMatrix, d: usize, s: f64, floor: f64) -> Result<SparsityReport> {
    let rows = sparsity_curve(m, Axis::Rows, d, s, floor)?;
    let cols = sparsity_curve(m, Axis::Columns, d, s, floor)?;
    Ok(SparsityReport {
        operator: m.operator_id.clone(),
        row_worst: rows.worst,
        column_worst: cols.worst,
        exponent_used: rows.exponent_used,
        rows_fitted: rows.lines.len(),
        columns_fitted: cols.lines.len(),
    })
}

#[derive(Debug, Clone)]
pub struct SparseApplication {
    pub signal: SampledSignal,
    pub kept: usize,
    /// `kept / |Λ|²`.
    pub compression_ratio: f64,
}

/// Coefficient-space application `Σ_μ (Σ_λ M_{μλ} c_λ) γ_μ` keeping only entries with
/// `|M_{μλ}| ≥ τ`, with `c_λ = ⟨f, γ_λ⟩`.
pub fn sparse_apply(m: &GaborMatrix, f: &SampledSignal, tau: f64) -> Result<SparseApplication> {
    sparse_apply_with(m, f, tau, Pairing::DualAnalysis)
}

/// As [`sparse_apply`]; `Pairing::WindowAnalysis` takes `c_λ = ⟨f, g_λ⟩` instead.
/// Synthesis always uses `γ_μ`.
pub fn sparse_apply_with(m: &GaborMatrix, f: &SampledSignal, tau: f64, pairing: Pairing) -> Result<SparseApplication> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidInput(format!("threshold must be non-negative, got {tau}")));
    }
    let grid = *m.frame.grid();
    if f.grid() != &grid || f.domain() != Domain::Time {
        return Err(Error::GridMismatch("signal is not a time-domain signal on the frame grid".into()));
    }
    let gamma = m.frame.dual_atoms()?;
    let coeffs = match pairing {
        Pairing::DualAnalysis => gamma.analysis(f)?,
        Pairing::WindowAnalysis => m.frame.atoms()?.analysis(f)?,
    };
    let (out, kept) = threshold_multiply(m, &coeffs, tau);
    let signal = gamma.synthesis(&out)?;
    Ok(SparseApplication { signal, kept, compression_ratio: kept as f64 / m.entries.len() as f64 })
}

/// Serial, λ-major accumulation `b_μ = Σ_λ M_{μλ} c_λ` over kept entries.
fn threshold_multiply(m: &GaborMatrix, coeffs: &[Complex64], tau: f64) -> (Vec<Complex64>, usize) {
    let mut out = vec![Complex64::new(0.0, 0.0); m.size()];
    let mut kept = 0;
    for e in &m.entries {
        if e.value.norm() >= tau {
            out[e.mu] += e.value * coeffs[e.lambda];
            kept += 1;
        }
    }
    (out, kept)
}
