//! Frame-level properties on the default grid.

use std::f64::consts::FRAC_1_SQRT_2;

use gabor_fio::gabor::{phase_space_grid, stft, GaborFrame, Lattice, Pairing, Window};
use gabor_fio::{Grid, SampledSignal};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_frame() -> GaborFrame {
    let grid = Grid::default();
    let window = Window::gaussian(grid, 2.0).unwrap();
    GaborFrame::new(window, Lattice::new(1, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 8.0, 8.0).unwrap()).unwrap()
}

/// A few random Gaussian atoms well inside the central half of the grid.
fn random_centered_signal(grid: Grid, rng: &mut ChaCha8Rng) -> SampledSignal {
    let bumps: Vec<(f64, f64, f64, Complex64)> = (0..rng.random_range(1..5))
        .map(|_| {
            let x0 = rng.random_range(-4.0..4.0);
            let w0 = rng.random_range(-6.0..6.0);
            let width = rng.random_range(0.5..3.0);
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (x0, w0, width, c)
        })
        .collect();
    SampledSignal::from_fn(grid, |t| {
        bumps
            .iter()
            .map(|&(x0, w0, a, c)| {
                let x = t[0] - x0;
                c * Complex64::from_polar(
                    (-std::f64::consts::PI * x * x / a).exp(),
                    2.0 * std::f64::consts::PI * w0 * t[0],
                )
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn frame_inequality_on_random_centered_signals() {
    let frame = default_frame();
    let b = frame.frame_bounds().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let f = random_centered_signal(*frame.grid(), &mut rng);
        let energy = frame.coefficient_energy(&f).unwrap();
        let n2 = f.norm_sqr();
        assert!(b.lower * (1.0 - 1e-3) * n2 <= energy, "{energy} < A {}", b.lower * n2);
        assert!(energy <= b.upper * (1.0 + 1e-3) * n2, "{energy} > B {}", b.upper * n2);
    }
}

#[test]
fn expansions_reconstruct_random_signals() {
    let frame = default_frame();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let f = random_centered_signal(*frame.grid(), &mut rng);
        let a = frame.reconstruct(&f, Pairing::DualAnalysis).unwrap();
        let b = frame.reconstruct(&f, Pairing::WindowAnalysis).unwrap();
        assert!(a.relative_error(&f).unwrap() <= 1e-8);
        assert!(a.relative_error(&b).unwrap() <= 1e-8);
    }
}

#[test]
fn lower_bound_shrinks_toward_critical_density() {
    let grid = Grid::default();
    let window = Window::gaussian(grid, 2.0).unwrap();
    let frame = GaborFrame::new(window, Lattice::new(1, 1.0, 1.0, 8.0, 8.0).unwrap()).unwrap();
    let redundant = default_frame().frame_bounds().unwrap();
    let mut lowers = Vec::new();
    for length in [32.0, 48.0] {
        let g = Grid::line(1024, length).unwrap();
        let w = Window::gaussian(g, 2.0).unwrap();
        let lat = Lattice::new(1, 1.0, 1.0, length / 4.0 + 5.0, g.nyquist() + 5.0).unwrap();
        let bounds = GaborFrame::new(w, lat.clone()).unwrap().frame_bounds_on(&lat).unwrap();
        assert!(bounds.upper >= bounds.lower);
        lowers.push(bounds.lower);
    }
    assert!(lowers[1] < lowers[0], "{lowers:?}");
    assert!(lowers[0] < 0.1 * redundant.lower);
    // The working-grid cover of the critical lattice agrees with the explicit one.
    let own = frame.frame_bounds().unwrap();
    assert!((own.lower - lowers[0]).abs() <= 1e-6 * own.upper, "{own:?} vs {}", lowers[0]);
}

#[test]
fn gaussian_stft_magnitude_matches_closed_form() {
    let grid = Grid::default();
    let g = Window::gaussian(grid, 2.0).unwrap();
    let pts = phase_space_grid(1, 4.0, 0.5).unwrap();
    let v = stft(g.samples(), &g, &pts).unwrap();
    for (z, c) in pts.chunks(2).zip(&v) {
        let expect = (-std::f64::consts::PI * (z[0] * z[0] / 4.0 + z[1] * z[1])).exp();
        assert!((c.norm() - expect).abs() <= 1e-12, "{z:?}");
    }
}
