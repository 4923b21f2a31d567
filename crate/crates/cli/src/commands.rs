//! The experiments behind each subcommand.

use std::sync::Arc;

use clap::Subcommand;
use gabor_fio::decay::FitOptions;
use gabor_fio::fio::{canonical_map, operator_from_name, FioOperator};
use gabor_fio::gabor::{gs_decay_classify, phase_space_grid, stft, write_stft_csv, GaborFrame, Window};
use gabor_fio::gmatrix::{
    assemble, fit_report, matrix_fit_options, sparse_apply, sparsity_curve, sparsity_report, Axis, GaborMatrix,
};
use gabor_fio::SampledSignal;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::{Artifact, CliError};

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Frame bounds and dual-window residual (frame.json).
    FrameCheck,
    /// STFT of the input signal over a phase-space grid (stft.csv).
    Stft,
    /// Assemble the Gabor matrix of the operator (matrix.csv, matrix.json).
    GaborMatrix,
    /// Fit the off-diagonal decay of the Gabor matrix (fit.json).
    DecayFit,
    /// Row and column sparsity curves (sparsity.json, sparsity_lines.csv).
    Sparsity,
    /// Thresholded coefficient-space application over the threshold list (propagate.csv).
    Propagate,
    /// Decay class of the STFT of T applied to the input signal (gs_check.json).
    GsCheck,
    /// Run one acceptance criterion on the fixed desk-scale setup (acceptance.json).
    Acceptance {
        /// Criterion number, 1 to 8.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=8))]
        criterion: u8,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FrameCheck => "frame-check",
            Command::Stft => "stft",
            Command::GaborMatrix => "gabor-matrix",
            Command::DecayFit => "decay-fit",
            Command::Sparsity => "sparsity",
            Command::Propagate => "propagate",
            Command::GsCheck => "gs-check",
            Command::Acceptance { .. } => "acceptance",
        }
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failed_criterion: Option<usize>,
}

impl From<Vec<Artifact>> for Outcome {
    fn from(artifacts: Vec<Artifact>) -> Self {
        Outcome { artifacts, failed_criterion: None }
    }
}

pub fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ctx = Context::new(cfg)?;
    Ok(match command {
        Command::FrameCheck => vec![Artifact::json("frame.json", &ctx.frame.report()?)].into(),
        Command::Stft => ctx.stft()?.into(),
        Command::GaborMatrix => ctx.gabor_matrix()?.into(),
        Command::DecayFit => {
            let m = ctx.matrix()?;
            let opts = cfg.fit.apply(matrix_fit_options());
            vec![Artifact::json("fit.json", &fit_report(&m, &opts)?)].into()
        }
        Command::Sparsity => ctx.sparsity()?.into(),
        Command::Propagate => ctx.propagate()?.into(),
        Command::GsCheck => ctx.gs_check()?.into(),
        Command::Acceptance { criterion } => acceptance(usize::from(*criterion))?,
    })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    window: Window,
    frame: Arc<GaborFrame>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Context<'a>, CliError> {
        let window = Window::new(cfg.grid()?, cfg.frame.window)?;
        let frame = Arc::new(GaborFrame::new(window.clone(), cfg.lattice()?)?);
        Ok(Context { cfg, window, frame })
    }

    fn operator(&self) -> Result<FioOperator, CliError> {
        Ok(operator_from_name(&self.cfg.operator, self.cfg.grid.dim)?)
    }

    fn input(&self) -> Result<SampledSignal, CliError> {
        let h = Window::new(*self.window.grid(), self.cfg.input.window)?;
        let center = match self.cfg.input.center.as_slice() {
            [] => vec![0.0; 2 * self.cfg.grid.dim],
            c => c.to_vec(),
        };
        Ok(h.atom(&center)?)
    }

    fn matrix(&self) -> Result<GaborMatrix, CliError> {
        let op = self.operator()?;
        let chi = canonical_map(&op, self.window.grid())?;
        Ok(assemble(&op, &self.frame, &chi)?)
    }

    fn stft_points(&self) -> Result<Vec<f64>, CliError> {
        Ok(phase_space_grid(self.cfg.grid.dim, self.cfg.stft.radius, self.cfg.stft.step)?)
    }

    fn stft(&self) -> Result<Vec<Artifact>, CliError> {
        let pts = self.stft_points()?;
        let values = stft(&self.input()?, &self.window, &pts)?;
        let mut buf = Vec::new();
        write_stft_csv(&mut buf, self.cfg.grid.dim, &pts, &values)?;
        Ok(vec![Artifact::text("stft.csv", buf)])
    }

    fn gabor_matrix(&self) -> Result<Vec<Artifact>, CliError> {
        #[derive(Serialize)]
        struct Summary<'a> {
            operator: &'a str,
            lattice_points: usize,
            entries: usize,
            flagged_columns: usize,
            aliased_entries: usize,
            grid: crate::config::GridConfig,
            truncation: f64,
        }
        let m = self.matrix()?;
        let mut csv = Vec::new();
        m.write_csv(&mut csv)?;
        let summary = Summary {
            operator: m.operator_id(),
            lattice_points: m.size(),
            entries: m.entries().len(),
            flagged_columns: m.flagged_columns(),
            aliased_entries: m.entries().iter().filter(|e| e.aliased).count(),
            grid: self.cfg.grid,
            truncation: self.cfg.frame.truncation,
        };
        Ok(vec![Artifact::text("matrix.csv", csv), Artifact::json("matrix.json", &summary)])
    }

    fn sparsity(&self) -> Result<Vec<Artifact>, CliError> {
        let m = self.matrix()?;
        let floor = self.cfg.fit.apply(FitOptions::default()).floor;
        let (d, s) = (self.cfg.grid.dim, self.cfg.sparsity.s);
        let report = sparsity_report(&m, d, s, floor)?;
        let mut csv = String::from("axis,index,C,epsilon,r2,len\n");
        for (axis, label) in [(Axis::Rows, "rows"), (Axis::Columns, "columns")] {
            for l in sparsity_curve(&m, axis, d, s, floor)?.lines {
                csv.push_str(&format!("{label},{},{:?},{:?},{:?},{}\n", l.index, l.c, l.epsilon, l.r2, l.len));
            }
        }
        Ok(vec![Artifact::json("sparsity.json", &report), Artifact::text("sparsity_lines.csv", csv.into_bytes())])
    }

    /// Errors are relative ℓ² against the dense (`τ = 0`) coefficient-space result;
    /// `error_vs_direct` compares with the direct quadrature of `T`.
    fn propagate(&self) -> Result<Vec<Artifact>, CliError> {
        let m = self.matrix()?;
        let f = self.input()?;
        let dense = sparse_apply(&m, &f, 0.0)?.signal;
        let direct = self.operator()?.apply(&f)?;
        let mut csv = String::from("tau,error,error_vs_direct,kept,compression_ratio\n");
        for &tau in &self.cfg.thresholds {
            let out = sparse_apply(&m, &f, tau)?;
            csv.push_str(&format!(
                "{tau:?},{:?},{:?},{},{:?}\n",
                out.signal.relative_error(&dense)?,
                out.signal.relative_error(&direct)?,
                out.kept,
                out.compression_ratio
            ));
        }
        Ok(vec![Artifact::text("propagate.csv", csv.into_bytes())])
    }

    fn gs_check(&self) -> Result<Vec<Artifact>, CliError> {
        #[derive(Serialize)]
        struct GsCheck<'a> {
            operator: &'a str,
            #[serde(flatten)]
            fit: gabor_fio::decay::DecayFit,
            /// `ε̂ > 0` and `R² > 0.95`.
            pass: bool,
        }
        let tf = self.operator()?.apply(&self.input()?)?;
        let pts = self.stft_points()?;
        let mags: Vec<f64> = stft(&tf, &self.window, &pts)?.iter().map(|c| c.norm()).collect();
        let fit = gs_decay_classify(&pts, &mags, self.cfg.grid.dim, &self.cfg.fit.apply(FitOptions::default()))?;
        let pass = fit.epsilon_hat > 0.0 && fit.r_squared > 0.95;
        Ok(vec![Artifact::json("gs_check.json", &GsCheck { operator: &self.cfg.operator, fit, pass })])
    }
}

fn acceptance(n: usize) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Record<'a> {
        criterion: usize,
        label: &'a str,
        pass: bool,
        detail: String,
    }
    let (_, label, _) =
        gfio_acceptance::CRITERIA.iter().find(|c| c.0 == n).copied().expect("criterion range checked by clap");
    let mut setup = gfio_acceptance::Setup::new()?;
    let verdict = gfio_acceptance::run(n, &mut setup).expect("criterion exists")?;
    let record = Record { criterion: n, label, pass: verdict.pass, detail: verdict.detail };
    Ok(Outcome {
        artifacts: vec![Artifact::json("acceptance.json", &record)],
        failed_criterion: (!record.pass).then_some(n),
    })
}
