//! Fourier integral operators `Tf(x) = ∫ e^{2πiΦ(x,η)} σ(x,η) f̂(η) dη`, their
//! hypotheses, and their canonical transformations.

mod canonical;
mod operator;
mod phase;

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

pub use canonical::{canonical_map, CanonicalMap, MapSource, NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE};
pub use operator::{
    ClosedMap, FioOperator, HypothesisReport, OperatorKernel, OperatorKind, SampleBox, DEGENERACY_FLOOR,
};
pub use phase::{
    check_derivatives, polynomial_weight, ConstantSymbol, DerivativeCheck, Gevrey, Multiplier, MultiplierPhase, Phase,
    QuadraticPhase, Symbol,
};

use crate::error::{Error, Result};
use crate::metaplectic::{chirp, dilation, harmonic_oscillator};

/// `Φ = x·η`, `σ ≡ 1`.
pub fn identity(dim: usize) -> FioOperator {
    let eye = (0..4 * dim * dim).map(|k| if k % (2 * dim + 1) == 0 { 1.0 } else { 0.0 }).collect();
    FioOperator::new(
        "identity",
        Arc::new(QuadraticPhase::identity(dim)),
        Arc::new(ConstantSymbol::one()),
        OperatorKind::General,
    )
    .with_closed_map(ClosedMap::Linear(eye))
}

/// `Tf = e^{2πiφ} f`, i.e. `Φ = x·η + φ(x)`, `σ ≡ 1`.
pub fn multiplier(phi: Multiplier, dim: usize) -> Result<FioOperator> {
    let id = match phi {
        Multiplier::Cos => "multiplier:cos".to_string(),
        Multiplier::Poly { c2 } => format!("multiplier:poly:{c2}"),
    };
    Ok(FioOperator::new(
        id,
        Arc::new(MultiplierPhase::new(dim, phi)?),
        Arc::new(ConstantSymbol::one()),
        OperatorKind::Multiplier(phi),
    )
    .with_closed_map(ClosedMap::Multiplier(phi)))
}

/// Looks up an operator by registry name in dimension `dim`:
/// `identity`, `multiplier:cos`, `multiplier:poly:<c2>`, `metaplectic:chirp:<c>`,
/// `metaplectic:dilation:<a>`, `harmonic:<t>`.
pub fn operator_from_name(name: &str, dim: usize) -> Result<FioOperator> {
    let unknown = || Error::UnknownOperator(name.to_string());
    let number = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(unknown);
    let parts: Vec<&str> = name.split(':').collect();
    let mut op = match parts.as_slice() {
        ["identity"] => return Ok(identity(dim)),
        ["multiplier", "cos"] => return multiplier(Multiplier::Cos, dim),
        ["multiplier", "poly", c2] => return multiplier(Multiplier::Poly { c2: number(c2)? }, dim),
        ["metaplectic", "chirp", c] => chirp(number(c)?, dim)?,
        ["metaplectic", "dilation", a] => dilation(number(a)?, dim)?,
        ["harmonic", t] => harmonic_oscillator(number(t)?, dim)?,
        _ => return Err(unknown()),
    }
    .operator;
    op.set_id(name);
    Ok(op)
}

/// Registry names of the operators every experiment is run against.
pub fn shipped_operator_names() -> Vec<String> {
    vec![
        "identity".into(),
        "multiplier:cos".into(),
        "multiplier:poly:0.25".into(),
        "metaplectic:chirp:1".into(),
        "metaplectic:dilation:2".into(),
        format!("harmonic:{FRAC_PI_4}"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::Window;
    use crate::signal::{Grid, SampledSignal};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::line(256, 16.0).unwrap()
    }

    fn bump(grid: Grid, x0: f64, w0: f64) -> SampledSignal {
        Window::gaussian(grid, 2.0).unwrap().atom(&[x0, w0]).unwrap()
    }

    fn shipped() -> Vec<FioOperator> {
        shipped_operator_names().iter().map(|n| operator_from_name(n, 1).unwrap()).collect()
    }

    #[test]
    fn registry_names_round_trip() {
        for name in shipped_operator_names() {
            assert_eq!(operator_from_name(&name, 1).unwrap().id(), name);
        }
        for bad in ["", "multiplier", "multiplier:sin", "metaplectic:chirp:x", "harmonic:nan", "rotation:1"] {
            assert!(matches!(operator_from_name(bad, 1), Err(Error::UnknownOperator(_))), "{bad}");
        }
        assert!(matches!(operator_from_name("harmonic:1.5707963267948966", 1), Err(Error::SingularTime { .. })));
    }

    #[test]
    fn identity_reproduces_input() {
        let f = bump(grid(), 0.5, -1.0);
        let tf = identity(1).apply(&f).unwrap();
        assert!(tf.relative_error(&f).unwrap() <= 1e-10);
    }

    #[test]
    fn multiplier_preserves_modulus() {
        let f = bump(grid(), 1.0, 0.5);
        let op = multiplier(Multiplier::Cos, 1).unwrap();
        let tf = op.apply(&f).unwrap();
        for (a, b) in tf.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-10);
        }
        let exact = op.closed_form(&f).unwrap().unwrap();
        assert!(tf.relative_error(&exact).unwrap() <= 1e-8);
        assert!((exact.norm() - f.norm()).abs() <= 1e-14 * f.norm());
    }

    #[test]
    fn chirp_matches_closed_form() {
        let g = grid();
        let w = Window::gaussian(g, 2.0).unwrap();
        let f = w.atom(&[0.0, 0.0]).unwrap();
        let op = chirp(1.0, 1).unwrap().operator;
        let exact = SampledSignal::from_fn(g, |x| crate::signal::unit_phase(0.5 * x[0] * x[0]) * w.eval(x)).unwrap();
        assert!(op.apply(&f).unwrap().relative_error(&exact).unwrap() <= 1e-8);
        assert!(op.closed_form(&f).unwrap().unwrap().relative_error(&exact).unwrap() <= 1e-12);
    }

    #[test]
    fn dilation_matches_closed_form() {
        let g = grid();
        let w = Window::gaussian(g, 2.0).unwrap();
        let f = w.atom(&[0.5, 0.25]).unwrap();
        let a = 2.0;
        let exact = SampledSignal::from_fn(g, |x| {
            let y = x[0] / a;
            w.eval(&[y - 0.5]) * std::f64::consts::FRAC_1_SQRT_2 * crate::signal::unit_phase(0.25 * y)
        })
        .unwrap();
        let tf = dilation(a, 1).unwrap().operator.apply(&f).unwrap();
        assert!(tf.relative_error(&exact).unwrap() <= 1e-8);
    }

    #[test]
    fn degenerate_operator_is_refused() {
        let phase = QuadraticPhase::new(1, vec![1.0], vec![0.0], vec![1.0]).unwrap();
        let op = FioOperator::new("flat", Arc::new(phase), Arc::new(ConstantSymbol::one()), OperatorKind::General);
        let report = op.validate_hypotheses(&SampleBox::for_grid(&grid()), DEGENERACY_FLOOR);
        assert!(!report.nondegenerate && report.min_abs_det == 0.0);
        let f = bump(grid(), 0.0, 0.0);
        assert!(matches!(op.apply(&f), Err(Error::Degenerate { .. })));
        assert!(matches!(canonical_map(&op, &grid()), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn hypothesis_reports() {
        let g = grid();
        let b = SampleBox::for_grid(&g);
        let r = identity(1).validate_hypotheses(&b, 0.5);
        assert_eq!((r.min_abs_det, r.max_symbol_ratio), (1.0, 1.0));
        let r = multiplier(Multiplier::Cos, 1).unwrap().validate_hypotheses(&b, 0.5);
        assert_eq!(r.min_abs_det, 1.0);
        let r = harmonic_oscillator(FRAC_PI_4, 1).unwrap().operator.validate_hypotheses(&b, 0.5);
        assert!((r.min_abs_det - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_agrees_with_closed_form() {
        let g = Grid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for op in shipped() {
            let chi = canonical_map(&op, &g).unwrap();
            assert_eq!(chi.source(), MapSource::ClosedForm);
            for _ in 0..100 {
                let z = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
                let exact = chi.closed_form(&z).unwrap();
                let solved = chi.newton(&z).unwrap();
                let err = exact.iter().zip(&solved).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err <= 1e-9, "{}: {err:e} at {z:?}", op.id());
                assert!(chi.newton_residual(&z, &solved) <= 1e-10);
            }
        }
    }

    #[test]
    fn canonical_maps_are_symplectic() {
        let g = Grid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for op in shipped() {
            let chi = canonical_map(&op, &g).unwrap();
            for _ in 0..20 {
                let z = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
                assert!(chi.symplectic_defect(&z, 1e-4).unwrap() <= 1e-6, "{}", op.id());
            }
        }
    }

    #[test]
    fn closed_form_maps() {
        let g = Grid::default();
        let id = canonical_map(&identity(1), &g).unwrap();
        assert_eq!(id.map(&[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
        let cos = canonical_map(&multiplier(Multiplier::Cos, 1).unwrap(), &g).unwrap();
        let y = 0.8f64;
        assert_eq!(cos.map(&[y, 1.0]).unwrap(), vec![y, 1.0 - y.sin()]);
        let h = canonical_map(&harmonic_oscillator(FRAC_PI_4, 1).unwrap().operator, &g).unwrap();
        let z = h.map(&[1.0, 0.0]).unwrap();
        assert!((z[0] - z[1]).abs() < 1e-15 && (z[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn metaplectic_maps_are_linear() {
        let g = Grid::default();
        for op in [chirp(1.0, 1).unwrap(), dilation(2.0, 1).unwrap(), harmonic_oscillator(0.7, 1).unwrap()] {
            let chi = canonical_map(&op.operator, &g).unwrap();
            let (z1, z2) = ([1.3, -0.2], [-4.0, 2.5]);
            let sum = chi.newton(&[z1[0] + z2[0], z1[1] + z2[1]]).unwrap();
            let (a, b) = (chi.newton(&z1).unwrap(), chi.newton(&z2).unwrap());
            for i in 0..2 {
                assert!((a[i] + b[i] - sum[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn harmonic_flow_composes_in_magnitude() {
        let g = grid();
        let f = bump(g, 1.0, 0.5);
        let (s, t) = (0.3, 0.4);
        let step = |t: f64, f: &SampledSignal| harmonic_oscillator(t, 1).unwrap().operator.apply(f).unwrap();
        let twice = step(t, &step(s, &f));
        let once = step(s + t, &f);
        for (a, b) in twice.values().iter().zip(once.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-6);
        }
    }

    #[test]
    fn generators_preserve_norm() {
        let g = grid();
        let f = bump(g, 0.5, -0.5);
        for op in [chirp(1.0, 1).unwrap(), dilation(2.0, 1).unwrap(), harmonic_oscillator(FRAC_PI_4, 1).unwrap()] {
            let tf = op.operator.apply(&f).unwrap();
            assert!((tf.norm() - f.norm()).abs() <= 1e-8 * f.norm(), "{}", op.operator.id());
        }
    }

    #[test]
    fn kernel_matches_direct_apply() {
        let g = Grid::line(128, 16.0).unwrap();
        let op = harmonic_oscillator(0.5, 1).unwrap().operator;
        let f = bump(g, 0.5, 0.0);
        let direct = op.apply(&f).unwrap();
        let kern = op.kernel(&g).unwrap().apply(&f).unwrap();
        assert!(direct.max_abs_diff(&kern).unwrap() <= 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn apply_is_linear(x0 in -3.0f64..3.0, w0 in -2.0f64..2.0, ar in -2.0f64..2.0, ai in -2.0f64..2.0, which in 0usize..6) {
            let g = Grid::line(128, 16.0).unwrap();
            let op = &shipped()[which];
            let f = bump(g, x0, w0);
            let h = bump(g, -x0 / 2.0, 1.0);
            let a = Complex64::new(ar, ai);
            let one = Complex64::new(1.0, 0.0);
            let lhs = op.apply(&f.combine(a, &h, one).unwrap()).unwrap();
            let (tf, th) = (op.apply(&f).unwrap(), op.apply(&h).unwrap());
            let rhs = tf.combine(a, &th, one).unwrap();
            prop_assert!(lhs.relative_error(&rhs).unwrap() <= 1e-10);
        }

        #[test]
        fn multipliers_are_unitary(x0 in -4.0f64..4.0, w0 in -3.0f64..3.0, c2 in -1.0f64..1.0) {
            let g = Grid::line(128, 16.0).unwrap();
            let f = bump(g, x0, w0);
            let op = multiplier(Multiplier::Poly { c2 }, 1).unwrap();
            let tf = op.closed_form(&f).unwrap().unwrap();
            prop_assert!((tf.norm() - f.norm()).abs() <= 1e-14 * f.norm());
            for (a, b) in tf.values().iter().zip(f.values()) {
                prop_assert!((a.norm() - b.norm()).abs() <= 1e-14);
            }
        }
    }
}
