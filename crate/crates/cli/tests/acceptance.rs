//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lasso_core::control::{
    current_loop, is_legal, step, transition, ClampSide, ControlLimits, GripperPhase, GripperState,
    MotorCommand, PhaseEvent,
};
use lasso_core::fitting::{fit_params, synthetic_samples, FitOptions};
use lasso_core::geometry::{convex_hull_3d, Point3};
use lasso_core::kinematics::RobotModel;
use lasso_core::loop_model::{
    loop_arc_length, params_from_physics, scale_to_length, Half, LoopExtent, LoopParams,
    PhysicalParams,
};
use lasso_core::steady::{
    closed_form_deviation, integrate_intrinsic, mean_distance_to_closed_form, relax_loop,
    InitShape, OdeSettings, RelaxSettings,
};
use lasso_core::workspace::{
    extension_ratio, sample_workspace, AttachmentModel, AzimuthSource, OriginMode,
};
use lasso_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
/// Name, time limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let out = f();
    let dt = t.elapsed();
    let out = match (out, limit) {
        (Ok(d), Some(l)) if dt > l => Err(format!(
            "{d}; took {:.2} s, limit {} s",
            dt.as_secs_f64(),
            l.as_secs()
        )),
        (o, _) => o,
    };
    (out, dt)
}

// the upper-half expression with the half's extremum abscissa as scale
fn closed_form(r: f64, x_half: f64, x: f64) -> f64 {
    let u = x / x_half;
    0.5 * (x * u.powf(r) / (1.0 + r) - x * u.powf(-r) / (1.0 - r))
}

fn closed_form_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_ext, mut worst_fd) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (r, xp, xm) = (
            rng.random_range(0.01f64..0.95),
            rng.random_range(0.01f64..2.0),
            rng.random_range(0.01f64..2.0),
        );
        let p = LoopParams::new(r, xp, xm).map_err(|e| e.to_string())?;
        for half in [Half::Upper, Half::Lower] {
            if p.eval_half(half, 0.0).map_err(|e| e.to_string())? != 0.0 {
                return Err(format!("z(0) != 0 for {p:?}"));
            }
            let e = p.extremum(half);
            let want = match half {
                Half::Upper => -r * xp / (1.0 - r * r),
                Half::Lower => r * xm / (1.0 - r * r),
            };
            worst_ext = worst_ext.max((e.y - want).abs());
            let h = 1e-6;
            let fd = (closed_form(r, e.x, e.x + h) - closed_form(r, e.x, e.x - h)) / (2.0 * h);
            worst_fd = worst_fd.max(fd.abs());
        }
    }
    check(
        worst_ext < 1e-12 && worst_fd < 1e-4,
        format!("extremum error {worst_ext:.2e} (< 1e-12), slope {worst_fd:.2e} (< 1e-4)"),
    )
}

fn ode_equivalence() -> Outcome {
    let dev = |r: f64, half, xh: f64, ds: f64| -> Result<f64, String> {
        let c = integrate_intrinsic(r, half, xh, &OdeSettings::new(ds, 1e-4))
            .map_err(|e| e.to_string())?;
        let p = LoopParams::new(r, xh, xh).map_err(|e| e.to_string())?;
        Ok(closed_form_deviation(&c, &p, half, 2e-4).0)
    };
    let mut worst = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for r in [0.2, 0.33, 0.5, 0.7] {
        for (xp, xm) in [(0.61, 0.12), (0.2, 0.1)] {
            for (half, xh) in [(Half::Upper, xp), (Half::Lower, xm)] {
                worst = worst.max(dev(r, half, xh, 1e-5)?);
            }
        }
        min_ratio =
            min_ratio.min(dev(r, Half::Upper, 0.61, 2.5e-4)? / dev(r, Half::Upper, 0.61, 1.25e-4)?);
    }
    check(
        worst < 1e-6 && min_ratio >= 8.0,
        format!("max deviation {worst:.2e} m (< 1e-6), step-halving ratio {min_ratio:.1} (>= 8)"),
    )
}

fn relaxation_equivalence() -> Outcome {
    let p = LoopParams::new(0.33, 0.61, 0.12).unwrap();
    let len = loop_arc_length(&p).unwrap();
    let tol = 0.02 * p.x_plus();
    let run = |init| {
        relax_loop(
            0.33,
            len,
            0.61 / 0.12,
            &RelaxSettings {
                n_nodes: 512,
                init,
                ..RelaxSettings::default()
            },
        )
    };
    let circle = run(InitShape::Circle).map_err(|e| format!("circle start: {e}"))?;
    let ellipse = run(InitShape::Ellipse).map_err(|e| format!("ellipse start: {e}"))?;
    let dc = mean_distance_to_closed_form(&circle.curve, &circle.params);
    let de = mean_distance_to_closed_form(&ellipse.curve, &ellipse.params);
    // nodes carry the same rest lengths and pins, so they correspond one to one
    let gap = circle
        .curve
        .points
        .iter()
        .zip(&ellipse.curve.points)
        .map(|(a, b)| a.position().distance(b.position()))
        .sum::<f64>()
        / circle.curve.len() as f64;
    check(
        dc < tol && de < tol && gap < 2.0 * tol,
        format!(
            "mean distance {:.5}/{:.5} x+ (< 0.02), start gap {:.5} x+ (< 0.04), {} + {} iterations",
            dc / p.x_plus(),
            de / p.x_plus(),
            gap / p.x_plus(),
            circle.iterations,
            ellipse.iterations
        ),
    )
}

fn fit_recovery() -> Outcome {
    let truth = LoopParams::new(0.33, 0.61, 0.12).unwrap();
    let clean = synthetic_samples(&truth, 20, 0.0, 0).unwrap();
    let fit = fit_params(&clean, &FitOptions::default()).map_err(|e| e.to_string())?;
    let err = (fit.params.r() - 0.33)
        .abs()
        .max((fit.params.x_plus() - 0.61).abs())
        .max((fit.params.x_minus() - 0.12).abs());
    let mut ious = Vec::new();
    for seed in 0..20 {
        let noisy = synthetic_samples(&truth, 20, 0.005, seed).unwrap();
        ious.push(
            fit_params(&noisy, &FitOptions::default())
                .map_err(|e| format!("seed {seed}: {e}"))?
                .iou,
        );
    }
    ious.sort_by(f64::total_cmp);
    let median = 0.5 * (ious[9] + ious[10]);
    check(
        err < 1e-3 && median >= 0.92,
        format!(
            "noiseless error {err:.2e} (< 1e-3), noisy median IoU {median:.4} (>= 0.92, min {:.4})",
            ious[0]
        ),
    )
}

fn workspace_volumes() -> Outcome {
    let ur5 = RobotModel::<f64>::ur5();
    let loop_params = LoopParams::new(0.7, 0.2, 0.1).unwrap();
    let run = |mode| {
        let att = AttachmentModel::with_options(
            loop_params,
            256,
            mode,
            AzimuthSource::default(),
            LoopExtent::Junction,
        )
        .unwrap();
        sample_workspace(&ur5, &att, 200_000, 1).map_err(|e| e.to_string())
    };
    let main = run(OriginMode::CurveOriginAtTcp)?;
    let other = run(OriginMode::EjectionPointAtTcp)?;
    let identity = extension_ratio(3.4620_f64, 8.9002).unwrap();
    check(
        (main.v_arm - 3.4620).abs() <= 0.1 * 3.4620 && (main.ratio_percent - 157.08).abs() <= 20.0 && (identity - 157.08).abs() <= 0.01,
        format!(
            "v_arm {:.4} m³ (3.4620 ± 10%), ratio {:.2}% (157.08 ± 20; ejection point at TCP {:.2}%), identity {identity:.4}",
            main.v_arm, main.ratio_percent, other.ratio_percent
        ),
    )
}

fn geometry_oracles() -> Outcome {
    let cube: Vec<_> = (0..8)
        .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let v_cube = convex_hull_3d(&cube).map_err(|e| e.to_string())?.volume();
    // alternate cube corners, scaled to unit edge
    let k = 1.0 / (2.0 * 2f64.sqrt());
    let tet: Vec<_> = [
        (1.0, 1.0, 1.0),
        (1.0, -1.0, -1.0),
        (-1.0, 1.0, -1.0),
        (-1.0, -1.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::new(k * x, k * y, k * z))
    .collect();
    let v_tet = convex_hull_3d(&tet).map_err(|e| e.to_string())?.volume();
    let want_tet = 1.0 / (6.0 * 2f64.sqrt());
    if (v_cube - 1.0).abs() > 1e-12 || (v_tet - want_tet).abs() > 1e-12 {
        return Err(format!("cube {v_cube}, tetrahedron {v_tet} vs {want_tet}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let n = rng.random_range(4..=1000);
        let pts: Vec<Point3<f64>> = (0..n)
            .map(|_| match case % 3 {
                0 => Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ),
                1 => {
                    // on a sphere: every point is extreme
                    let (u, v): (f64, f64) =
                        (rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI));
                    let w = (1.0 - u * u).sqrt();
                    Point3::new(w * v.cos(), w * v.sin(), u)
                }
                _ => Point3::new(
                    rng.random_range(0..4) as f64,
                    rng.random_range(0..4) as f64,
                    rng.random_range(0..4) as f64,
                ),
            })
            .collect();
        let Ok(h) = convex_hull_3d(&pts) else {
            continue;
        };
        if let Some(p) = pts.iter().find(|p| !h.contains(**p, 1e-9)) {
            return Err(format!("case {case}: {p:?} outside its hull"));
        }
        let again =
            convex_hull_3d(&h.vertices).map_err(|e| format!("case {case}: re-hull failed: {e}"))?;
        if (again.volume() - h.volume()).abs() > 1e-9 * h.volume().max(1.0) {
            return Err(format!(
                "case {case}: re-hull volume {} vs {}",
                again.volume(),
                h.volume()
            ));
        }
    }
    Ok(format!("cube {v_cube}, tetrahedron error {:.1e}, 1000 random hulls contain their points and re-hull to the same volume", (v_tet - want_tet).abs()))
}

fn run_workspace(dir: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_lasso"))
        .args(["--out", dir.to_str().unwrap(), "--seed", "7", "workspace"])
        .env("LASSO_THREADS", threads.to_string())
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), format!("exit {status}")).map(|_| ())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("one"), tmp.path().join("four"));
    run_workspace(&a, 1)?;
    run_workspace(&b, 4)?;
    for name in ["summary.json", "tcp.csv", "far.csv"] {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{name} differs between 1 and 4 threads"));
        }
    }
    Ok("summary.json, tcp.csv and far.csv byte-identical for LASSO_THREADS = 1 and 4".into())
}

// legal moves written out independently of the state machine
fn allowed(phase: GripperPhase, event: PhaseEvent) -> bool {
    use GripperPhase as P;
    use PhaseEvent as E;
    matches!(
        (phase, event),
        (P::Launch, E::BeginMaintain)
            | (P::Maintain, E::BeginRetract)
            | (P::Retract, E::Reopen)
            | (P::Launch | P::Maintain | P::Retract, E::Release)
    )
}

fn control_conservation() -> Outcome {
    let phases = [
        GripperPhase::Launch,
        GripperPhase::Maintain,
        GripperPhase::Retract,
        GripperPhase::Release,
    ];
    let events = [
        PhaseEvent::BeginMaintain,
        PhaseEvent::BeginRetract,
        PhaseEvent::Reopen,
        PhaseEvent::Release,
    ];
    let mut worst = 0.0f64;
    let mut clamps = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state =
            GripperState::new(1.0, 0.02, 0.33, 0.61 / 0.12, ControlLimits::default()).unwrap();
        let (l0, mut sum, mut excess) = (state.deployed_length, 0.0f64, 0.0f64);
        for _ in 0..10_000 {
            let cmd = MotorCommand::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
            let dt = rng.random_range(1e-3..0.1);
            let delta = state.wheel_radius * (cmd.omega_out - cmd.omega_in) * dt;
            let requested = state.deployed_length + delta;
            let (next, clamp) = step(&state, &cmd, dt).map_err(|e| e.to_string())?;
            let (lo, hi) = (state.limits.l_min, state.limits.l_max);
            match clamp {
                None if (lo..=hi).contains(&requested) => {}
                Some(c) if c.requested == requested && !(lo..=hi).contains(&requested) => {
                    let bound = if c.side == ClampSide::Min { lo } else { hi };
                    if next.deployed_length != bound || c.excess != requested - bound {
                        return Err(format!(
                            "seed {seed}: clamp logged {c:?}, length {}",
                            next.deployed_length
                        ));
                    }
                    clamps += 1;
                    excess += c.excess;
                }
                other => {
                    return Err(format!(
                        "seed {seed}: requested {requested}, clamp {other:?}"
                    ))
                }
            }
            sum += delta;
            state = next;
        }
        let want = l0 + sum - excess;
        worst = worst.max((state.deployed_length - want).abs() / want.abs());
    }

    let base = GripperState::new(1.0, 0.02, 0.33, 5.0, ControlLimits::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut illegal, mut rejected) = (0, 0);
    for _ in 0..10_000 {
        let (phase, event) = (
            phases[rng.random_range(0..4)],
            events[rng.random_range(0..4)],
        );
        let state = GripperState {
            phase,
            ..base.clone()
        };
        let got = transition(&state, event);
        if allowed(phase, event) != is_legal(phase, event, false) {
            return Err(format!("{phase:?} + {event:?}: legality table disagrees"));
        }
        if !allowed(phase, event) {
            illegal += 1;
            if matches!(got, Err(Error::PhaseError(_))) {
                rejected += 1;
            }
        } else if got.is_err() {
            return Err(format!("{phase:?} + {event:?} rejected"));
        }
    }
    check(
        worst <= 1e-12 && clamps > 0 && rejected == illegal,
        format!("worst relative drift {worst:.1e} (<= 1e-12), {clamps} clamps logged, {rejected}/{illegal} illegal transitions rejected"),
    )
}

fn r_rejection() -> Outcome {
    let model_invalid =
        |r: lasso_core::Result<LoopParams<f64>>| matches!(r, Err(Error::ModelInvalid { .. }));
    let samples =
        synthetic_samples(&LoopParams::new(0.33, 0.61, 0.12).unwrap(), 10, 0.0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rs = vec![1.0, 1.0 + f64::EPSILON, 10.0];
    rs.extend((0..200).map(|_| rng.random_range(1.0..=10.0)));
    for &r in &rs {
        let failures = [
            (
                "LoopParams::new",
                model_invalid(LoopParams::new(r, 0.61, 0.12)),
            ),
            (
                "scale_to_length",
                model_invalid(scale_to_length(r, 5.0, 1.0)),
            ),
            (
                "deserialise",
                serde_json::from_str::<LoopParams<f64>>(&format!(
                    r#"{{"r":{r},"x_plus":0.61,"x_minus":0.12}}"#
                ))
                .is_err(),
            ),
            (
                "params_from_physics",
                matches!(
                    params_from_physics(&PhysicalParams::new(r, 1.0, 1.0, 0.0).unwrap()),
                    Err(Error::ModelInvalid { .. })
                ),
            ),
            (
                "integrate_intrinsic",
                matches!(
                    integrate_intrinsic(r, Half::Upper, 0.61, &OdeSettings::new(1e-3, 1e-4)),
                    Err(Error::ModelInvalid { .. })
                ),
            ),
            (
                "relax_loop",
                matches!(
                    relax_loop(r, 1.0, 5.0, &RelaxSettings::default()),
                    Err(Error::ModelInvalid { .. })
                ),
            ),
            (
                "current_loop",
                model_invalid(current_loop(
                    &GripperState::new(1.0, 0.02, r, 5.0, ControlLimits::default()).unwrap(),
                )),
            ),
            (
                "fit_params",
                matches!(
                    fit_params(
                        &samples,
                        &FitOptions {
                            r_bounds: (r, r + 1.0),
                            ..FitOptions::default()
                        }
                    ),
                    Err(Error::NoValidStart)
                ),
            ),
        ];
        if let Some((path, _)) = failures.iter().find(|(_, ok)| !ok) {
            return Err(format!("{path} accepted R = {r}"));
        }
    }
    Ok(format!(
        "8 entry points reject all {} values of R in [1, 10]",
        rs.len()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("closed-form identities", Some(1), closed_form_identities),
        ("ODE against closed form", Some(10), ode_equivalence),
        (
            "relaxation against closed form",
            Some(60),
            relaxation_equivalence,
        ),
        ("fit recovery", Some(30), fit_recovery),
        ("workspace volumes", Some(120), workspace_volumes),
        ("geometry oracles", Some(30), geometry_oracles),
        ("determinism", None, determinism),
        ("control conservation", None, control_conservation),
        ("R >= 1 rejection", None, r_rejection),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let (out, dt) = timed(limit.map(Duration::from_secs), f);
        let (tag, detail) = match out {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {tag} {name}: {detail} [{:.2} s]",
            i + 1,
            dt.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
