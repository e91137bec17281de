use lasso_core::control::{current_loop, ControlLimits, GripperState};
use lasso_core::fitting::{fit_params, synthetic_samples, FitOptions};
use lasso_core::loop_model::*;
use lasso_core::steady::{integrate_intrinsic, relax_loop, OdeSettings, RelaxSettings};
use lasso_core::Error;
use proptest::prelude::*;

fn rejected<T: std::fmt::Debug>(r: lasso_core::Result<T>) -> bool {
    matches!(r, Err(Error::ModelInvalid { .. }))
}

// upper-half expression, with the half's extremum abscissa as scale
fn closed_form(r: f64, x_half: f64, x: f64) -> f64 {
    let u = x / x_half;
    0.5 * (x * u.powf(r) / (1.0 + r) - x * u.powf(-r) / (1.0 - r))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_identities(r in 0.01f64..0.95, xp in 0.01f64..2.0, xm in 0.01f64..2.0) {
        let p = LoopParams::new(r, xp, xm).unwrap();
        for half in [Half::Upper, Half::Lower] {
            prop_assert_eq!(p.eval_half(half, 0.0).unwrap(), 0.0);
            let e = p.extremum(half);
            let want = match half {
                Half::Upper => -r * xp / (1.0 - r * r),
                Half::Lower => r * xm / (1.0 - r * r),
            };
            prop_assert!((e.y - want).abs() < 1e-12 * want.abs().max(1.0));
            let h = 1e-6;
            let fd = (closed_form(r, e.x, e.x + h) - closed_form(r, e.x, e.x - h)) / (2.0 * h);
            prop_assert!(fd.abs() < 1e-4);
        }
    }

    #[test]
    fn scaling_is_homogeneous(r in 0.05f64..0.9, xp in 0.05f64..1.0, xm in 0.05f64..1.0, lambda in 0.1f64..10.0) {
        let p = LoopParams::new(r, xp, xm).unwrap();
        let q = p.scaled(lambda).unwrap();
        let l = loop_arc_length(&p).unwrap();
        prop_assert!((loop_arc_length(&q).unwrap() / l - lambda).abs() < 1e-9 * lambda);
        let x = 0.37 * xp;
        prop_assert!((q.eval_half(Half::Upper, lambda * x).unwrap() - lambda * p.eval_half(Half::Upper, x).unwrap()).abs() < 1e-12 * lambda);
        let back = scale_to_length(r, xp / xm, l).unwrap();
        prop_assert!((back.x_plus() - xp).abs() < 1e-9 * xp);
    }

    #[test]
    fn r_at_or_above_one_is_rejected_everywhere(r in 1.0f64..10.0) {
        prop_assert!(rejected(LoopParams::new(r, 0.61, 0.12)));
        prop_assert!(rejected(scale_to_length(r, 5.0, 1.0)));
        let json = format!(r#"{{"r": {r}, "x_plus": 0.61, "x_minus": 0.12}}"#);
        prop_assert!(serde_json::from_str::<LoopParams<f64>>(&json).is_err());
        let phys = PhysicalParams::new(r, 1.0, 1.0, 0.0).unwrap();
        prop_assert!(rejected(params_from_physics(&phys)));
        prop_assert!(rejected(integrate_intrinsic(r, Half::Upper, 0.61, &OdeSettings::new(1e-3, 1e-4))));
        prop_assert!(rejected(relax_loop(r, 1.0, 5.0, &RelaxSettings::default())));
        let state = GripperState::new(1.0, 0.02, r, 5.0, ControlLimits::default()).unwrap();
        prop_assert!(rejected(current_loop(&state)));
        // the fit cannot be steered outside the existence region either
        let samples = synthetic_samples(&LoopParams::new(0.33, 0.61, 0.12).unwrap(), 10, 0.0, 1).unwrap();
        let opts = FitOptions { r_bounds: (r, r + 1.0), ..FitOptions::default() };
        prop_assert!(matches!(fit_params(&samples, &opts), Err(Error::NoValidStart)));
    }
}

#[test]
fn length_bounds() {
    let p = LoopParams::new(0.33_f64, 0.61, 0.12).unwrap();
    let l = loop_arc_length(&p).unwrap();
    assert!(l >= p.x_plus() + p.x_minus());
    assert!((l - (p.x_plus() + p.x_minus()) / (1.0 - 0.33 * 0.33)).abs() < 1e-10);
}

#[test]
fn extreme_ratios_still_integrate() {
    for r in [1e-4_f64, 0.01, 0.5, 0.9, 0.99] {
        let p = LoopParams::new(r, 0.61, 0.12).unwrap();
        let q = half_arc_length_quadrature(&p, Half::Upper).unwrap();
        let exact = p.half_length(Half::Upper);
        assert!((q - exact).abs() < 1e-10 * exact, "R = {r}: {q} vs {exact}");
    }
}
