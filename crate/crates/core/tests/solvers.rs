use lasso_core::loop_model::{loop_arc_length, Half, LoopParams};
use lasso_core::steady::*;

fn ode_deviation(r: f64, half: Half, x_half: f64, ds: f64) -> f64 {
    let c = integrate_intrinsic(r, half, x_half, &OdeSettings::new(ds, 1e-4)).unwrap();
    let p = LoopParams::new(r, x_half, x_half).unwrap();
    closed_form_deviation(&c, &p, half, 2e-4).0
}

#[test]
fn ode_matches_closed_form_across_ratios() {
    for r in [0.2, 0.33, 0.5, 0.7] {
        for (xp, xm) in [(0.61, 0.12), (0.2, 0.1)] {
            for (half, xh) in [(Half::Upper, xp), (Half::Lower, xm)] {
                let dev = ode_deviation(r, half, xh, 1e-5);
                assert!(dev < 1e-6, "R = {r}, {half:?}, x_half = {xh}: {dev}");
            }
        }
    }
}

#[test]
fn ode_step_halving() {
    // coarser steps are dominated by the first step off the singular tip
    for r in [0.2, 0.33, 0.5, 0.7] {
        let a = ode_deviation(r, Half::Upper, 0.61, 2.5e-4);
        let b = ode_deviation(r, Half::Upper, 0.61, 1.25e-4);
        assert!(a / b >= 8.0, "R = {r}: {a} -> {b}");
    }
}

fn relax(r: f64, xp: f64, xm: f64, settings: RelaxSettings<f64>) -> (RelaxResult<f64>, f64) {
    let p = LoopParams::new(r, xp, xm).unwrap();
    let len = loop_arc_length(&p).unwrap();
    let res = relax_loop(r, len, xp / xm, &settings).unwrap();
    (res, len)
}

fn small() -> RelaxSettings<f64> {
    RelaxSettings {
        n_nodes: 128,
        ..RelaxSettings::default()
    }
}

#[test]
fn relaxation_matches_closed_form_across_ratios() {
    for r in [0.2, 0.33, 0.5, 0.7] {
        let (res, len) = relax(r, 0.61, 0.12, small());
        let d = mean_distance_to_closed_form(&res.curve, &res.params);
        assert!(d < 0.02 * res.params.x_plus(), "R = {r}: {d}");
        assert!((res.curve.length() - len).abs() < 0.005 * len);
        assert!(res.residual < 1e-8);
        assert_eq!(tension_profile(&res).len(), 128);
    }
}

#[test]
fn tension_is_positive_at_the_reference_fit() {
    let (res, _) = relax(0.33, 0.61, 0.12, small());
    assert!(res
        .tension_profile
        .iter()
        .all(|&t| t.is_finite() && t > 0.0));
}

#[test]
fn near_the_validity_boundary() {
    let (res, _) = relax(0.95, 0.05, 0.03, small());
    assert!(res.residual < 1e-8);
}

fn shape_gap(a: &RelaxResult<f64>, b: &RelaxResult<f64>) -> f64 {
    assert_eq!(a.curve.len(), b.curve.len());
    let sum: f64 = a
        .curve
        .points
        .iter()
        .zip(&b.curve.points)
        .map(|(p, q)| p.position().distance(q.position()))
        .sum();
    sum / a.curve.len() as f64
}

#[test]
fn stiffness_sweep() {
    let base = relax(0.33, 0.61, 0.12, small()).0;
    for factor in [2.0, 4.0] {
        let s = RelaxSettings {
            stiffness: 1e3 * factor,
            ..small()
        };
        let other = relax(0.33, 0.61, 0.12, s).0;
        // penalty springs stretch by ≈ 1/stiffness; the shape moves less
        assert!(
            shape_gap(&base, &other) < 1e-3 * 0.61,
            "{factor}×: {}",
            shape_gap(&base, &other)
        );
    }
}

#[test]
fn initial_shape_does_not_matter() {
    let circle = relax(0.33, 0.61, 0.12, small()).0;
    let ellipse = relax(
        0.33,
        0.61,
        0.12,
        RelaxSettings {
            init: InitShape::Ellipse,
            ..small()
        },
    )
    .0;
    assert!(shape_gap(&circle, &ellipse) < 1e-3 * 0.61);
}

#[test]
fn relaxation_is_deterministic() {
    let a = relax(0.5, 0.2, 0.1, small()).0;
    let b = relax(0.5, 0.2, 0.1, small()).0;
    assert_eq!(a.iterations, b.iterations);
    assert!(a
        .curve
        .points
        .iter()
        .zip(&b.curve.points)
        .all(|(p, q)| p.x == q.x && p.z == q.z));
}
