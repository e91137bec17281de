use std::io::Write;

use lasso_core::control::{replay, ClampSide, ControlLimits, GripperState, TimedCommand};
use lasso_core::fitting::{align_to_tip, fit_params, synthetic_samples, FitOptions, SamplePoint};
use lasso_core::geometry::{Point2, Point3, DEFAULT_IOU_RESOLUTION};
use lasso_core::io::{
    fmt_f64, parse_numeric_csv, write_csv_header, write_csv_row, write_curve_csv,
};
use lasso_core::kinematics::{forward_kinematics, joint_frames, JointConfig, Pose, RobotModel};
use lasso_core::loop_model::{
    loop_arc_length, sample_loop, sample_loop_extent, Half, LoopExtent, LoopParams, PlanarCurve,
};
use lasso_core::steady::{
    closed_form_deviation, distances_to_closed_form, integrate_intrinsic, relax_loop, OdeSettings,
    RelaxSettings,
};
use lasso_core::workspace::{
    sample_workspace, AttachmentModel, OriginMode, WorkspaceResult, DEFAULT_CURVE_SAMPLES,
};
use lasso_core::Error;
use serde::Serialize;

use crate::args::{ControlArgs, CurveArgs, FitArgs, FkArgs, Solver, ValidateArgs, WorkspaceArgs};
use crate::config::{read, CliError, CliResult, Output};
use crate::svg::{Figure, Series, Style};

const FIT_R: f64 = 0.33;
const FIT_XP: f64 = 0.61;
const FIT_XM: f64 = 0.12;

fn csv<F>(f: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(Error::from)?;
    Ok(buf)
}

fn curve_csv(curve: &PlanarCurve<f64>, extra: &[(&str, &[f64])]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, curve, extra)?;
    Ok(buf)
}

fn points(curve: &PlanarCurve<f64>) -> Vec<(f64, f64)> {
    curve.points.iter().map(|p| (p.x, p.z)).collect()
}

fn ring(curve: &PlanarCurve<f64>) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = curve.ring().iter().map(|p| (p.x, p.y)).collect();
    if let Some(&first) = pts.first() {
        pts.push(first);
    }
    pts
}

fn landmarks(params: &LoopParams<f64>) -> Vec<Series> {
    let ext = [Half::Upper, Half::Lower].map(|h| {
        let p = params.extremum(h);
        (p.x, p.y)
    });
    vec![
        Series::new("curve origin", "red", Style::Marker, vec![(0.0, 0.0)]),
        Series::new("extrema", "blue", Style::Marker, ext.to_vec()),
    ]
}

const Z_LABEL: &str = "z [m], upward positive";

pub fn curve(args: CurveArgs, out: &Output) -> CliResult<()> {
    let params = LoopParams::new(
        args.r.unwrap_or(FIT_R),
        args.xp.unwrap_or(FIT_XP),
        args.xm.unwrap_or(FIT_XM),
    )?;
    let n = args.n.unwrap_or(1024);
    let extent = args.extent.unwrap_or_default();
    let curve = sample_loop_extent(&params, n, extent)?;
    out.write("curve.csv", curve_csv(&curve, &[])?)?;

    let mut series = vec![Series::new(
        "closed form",
        "black",
        Style::Line,
        ring(&curve),
    )];
    series.extend(landmarks(&params));
    let fig = Figure {
        title: format!(
            "loop R = {}, x+ = {} m, x- = {} m",
            params.r(),
            params.x_plus(),
            params.x_minus()
        ),
        x_label: "x [m]".into(),
        y_label: Z_LABEL.into(),
        series,
    };
    out.write("curve.svg", fig.render())?;
    println!("wrote {n} points");
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport {
    solver: &'static str,
    params: LoopParams<f64>,
    converged: bool,
    max_dev: Option<f64>,
    mean_dev: Option<f64>,
    /// Mean deviation as a fraction of x_plus.
    mean_dev_rel: Option<f64>,
    iterations: Option<usize>,
    residual: Option<f64>,
    length_error: Option<f64>,
    min_tension: Option<f64>,
}

pub fn validate(args: ValidateArgs, out: &Output) -> CliResult<()> {
    let params = LoopParams::new(
        args.r.unwrap_or(FIT_R),
        args.xp.unwrap_or(FIT_XP),
        args.xm.unwrap_or(FIT_XM),
    )?;
    let mut report = ValidateReport {
        solver: "ode",
        params,
        converged: false,
        max_dev: None,
        mean_dev: None,
        mean_dev_rel: None,
        iterations: None,
        residual: None,
        length_error: None,
        min_tension: None,
    };
    let mut series = Vec::new();
    let mut failure = None;

    match args.solver.unwrap_or(Solver::Ode) {
        Solver::Ode => {
            let mut settings =
                OdeSettings::new(args.ds.unwrap_or(1e-5), args.epsilon.unwrap_or(1e-4));
            settings.seed = args.ode_seed.unwrap_or_default();
            let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
            for (half, name) in [(Half::Upper, "upper"), (Half::Lower, "lower")] {
                let xh = params.x_half(half);
                let c = integrate_intrinsic(params.r(), half, xh, &settings)?;
                // each half is integrated in its own frame where x_+ = x_- = x_half
                let own = LoopParams::new(params.r(), xh, xh)?;
                let (m, mean) = closed_form_deviation(&c, &own, half, 2.0 * settings.epsilon);
                let n = c
                    .points
                    .iter()
                    .filter(|p| p.x >= 2.0 * settings.epsilon)
                    .count();
                max = max.max(m);
                sum += mean * n as f64;
                count += n;
                out.write(&format!("ode_{name}.csv"), curve_csv(&c, &[])?)?;
                series.push(Series::new(
                    format!("ODE {name}"),
                    "green",
                    Style::Line,
                    points(&c),
                ));
            }
            report.converged = true;
            report.max_dev = Some(max);
            report.mean_dev = Some(sum / count.max(1) as f64);
        }
        Solver::Relax => {
            report.solver = "relax";
            let defaults = RelaxSettings::<f64>::default();
            let settings = RelaxSettings {
                n_nodes: args.nodes.unwrap_or(defaults.n_nodes),
                tol: args.tol.unwrap_or(defaults.tol),
                max_iters: args.max_iters.unwrap_or(defaults.max_iters),
                stiffness: args.stiffness.unwrap_or(defaults.stiffness),
                damping: args.damping.unwrap_or(defaults.damping),
                init: args.init.unwrap_or(defaults.init),
            };
            let length = loop_arc_length(&params)?;
            match relax_loop(
                params.r(),
                length,
                params.x_plus() / params.x_minus(),
                &settings,
            ) {
                Ok(res) => {
                    let d = distances_to_closed_form(&res.curve, &res.params);
                    let mean = d.iter().sum::<f64>() / d.len() as f64;
                    report.converged = true;
                    report.max_dev = Some(d.iter().copied().fold(0.0, f64::max));
                    report.mean_dev = Some(mean);
                    report.iterations = Some(res.iterations);
                    report.residual = Some(res.residual);
                    report.length_error = Some((res.curve.length() - length) / length);
                    report.min_tension = res.tension_profile.iter().copied().reduce(f64::min);
                    out.write(
                        "relax.csv",
                        curve_csv(
                            &res.curve,
                            &[("tension", &res.tension_profile), ("distance", &d)],
                        )?,
                    )?;
                    series.push(Series::new(
                        "relaxed chain",
                        "green",
                        Style::Dots,
                        points(&res.curve),
                    ));
                }
                Err(
                    e @ Error::NonConvergence {
                        iterations,
                        residual,
                    },
                ) => {
                    report.iterations = Some(iterations);
                    report.residual = Some(residual);
                    failure = Some(e);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    report.mean_dev_rel = report.mean_dev.map(|m| m / params.x_plus());
    out.json("validate.json", &report)?;

    let reference = sample_loop(&params, 1024)?;
    out.write("reference.csv", curve_csv(&reference, &[])?)?;
    series.insert(
        0,
        Series::new("closed form", "black", Style::Line, ring(&reference)),
    );
    series.extend(landmarks(&params));
    let fig = Figure {
        title: format!("{} solver against the closed form", report.solver),
        x_label: "x [m]".into(),
        y_label: Z_LABEL.into(),
        series,
    };
    out.write("validate.svg", fig.render())?;

    if let Some(e) = failure {
        return Err(e.into());
    }
    println!(
        "{}: max_dev = {} m, mean_dev = {} m",
        report.solver,
        report.max_dev.map_or("-".into(), fmt_f64),
        report.mean_dev.map_or("-".into(), fmt_f64)
    );
    Ok(())
}

fn parse_half(tag: &str, line: usize) -> CliResult<Half> {
    match tag.to_ascii_lowercase().as_str() {
        "upper" | "+" | "u" => Ok(Half::Upper),
        "lower" | "-" | "l" => Ok(Half::Lower),
        _ => Err(Error::Parse {
            line,
            message: format!("half must be 'upper' or 'lower', got '{tag}'"),
        }
        .into()),
    }
}

/// Reads `x,z[,half]` samples.
pub fn read_samples(text: &str) -> CliResult<Vec<SamplePoint<f64>>> {
    let (header, rows) = parse_numeric_csv(text, 2)?;
    if header[0] != "x" || header[1] != "z" || header.get(2).is_some_and(|h| h != "half") {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be x,z[,half], got {}", header.join(",")),
        }
        .into());
    }
    rows.iter()
        .map(|row| {
            let (x, z) = (row.values[0], row.values[1]);
            Ok(match &row.tag {
                Some(t) => SamplePoint::on(parse_half(t, row.line)?, x, z),
                None => SamplePoint::new(x, z),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct FitReport {
    params: LoopParams<f64>,
    objective: f64,
    iou: f64,
    n_samples: usize,
    clamps: Vec<usize>,
    evaluations: usize,
    /// Translation subtracted by the fit.
    offset: Point2<f64>,
    /// Shift applied before fitting when aligning to the tip.
    aligned_shift: Option<Point2<f64>>,
    /// Generating parameters of synthetic samples.
    truth: Option<LoopParams<f64>>,
}

pub fn fit(args: FitArgs, seed: u64, out: &Output) -> CliResult<()> {
    let (samples, truth) = match (&args.samples, args.synthetic.unwrap_or(false)) {
        (Some(_), true) => {
            return Err(CliError::Input(
                "give either --samples or --synthetic, not both".into(),
            ))
        }
        (Some(path), false) => (read_samples(&read(path)?)?, None),
        (None, true) => {
            let p = LoopParams::new(
                args.r.unwrap_or(FIT_R),
                args.xp.unwrap_or(FIT_XP),
                args.xm.unwrap_or(FIT_XM),
            )?;
            (
                synthetic_samples(
                    &p,
                    args.per_half.unwrap_or(20),
                    args.sigma.unwrap_or(0.0),
                    seed,
                )?,
                Some(p),
            )
        }
        (None, false) => {
            return Err(CliError::Input(
                "fit needs --samples FILE or --synthetic".into(),
            ))
        }
    };
    let (samples, aligned_shift) = if args.align.unwrap_or(false) {
        let (s, shift) = align_to_tip(&samples)?;
        (s, Some(shift))
    } else {
        (samples, None)
    };

    let defaults = FitOptions::<f64>::default();
    let opts = FitOptions {
        r_bounds: (
            args.r_min.unwrap_or(defaults.r_bounds.0),
            args.r_max.unwrap_or(defaults.r_bounds.1),
        ),
        multistart_grid: args.grid.unwrap_or(defaults.multistart_grid),
        max_evals: args.max_evals.unwrap_or(defaults.max_evals),
        fit_translation: args.fit_translation.unwrap_or(false),
        iou_resolution: args.iou_resolution.unwrap_or(DEFAULT_IOU_RESOLUTION),
        ..defaults
    };
    let res = fit_params(&samples, &opts)?;

    let report = FitReport {
        params: res.params,
        objective: res.objective,
        iou: res.iou,
        n_samples: samples.len(),
        clamps: res.clamps.clone(),
        evaluations: res.evaluations,
        offset: res.offset,
        aligned_shift,
        truth,
    };
    out.json("fit.json", &report)?;

    let mut buf = Vec::new();
    writeln!(buf, "x,z,residual,half").map_err(Error::from)?;
    for ((s, r), h) in samples.iter().zip(&res.residuals).zip(&res.assignments) {
        let half = match h {
            Half::Upper => "upper",
            Half::Lower => "lower",
        };
        writeln!(
            buf,
            "{},{},{},{half}",
            fmt_f64(s.x),
            fmt_f64(s.z),
            fmt_f64(*r)
        )
        .map_err(Error::from)?;
    }
    out.write("residuals.csv", buf)?;

    let fitted = sample_loop(&res.params, 1024)?;
    let shifted: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.x - res.offset.x, s.z - res.offset.y))
        .collect();
    let mut series = vec![
        Series::new("fitted curve", "black", Style::Line, ring(&fitted)),
        Series::new("samples", "orange", Style::Dots, shifted),
    ];
    series.extend(landmarks(&res.params));
    let fig = Figure {
        title: format!(
            "fit R = {:.4}, x+ = {:.4} m, x- = {:.4} m, IoU = {:.4}",
            res.params.r(),
            res.params.x_plus(),
            res.params.x_minus(),
            res.iou
        ),
        x_label: "x [m]".into(),
        y_label: Z_LABEL.into(),
        series,
    };
    out.write("fit.svg", fig.render())?;
    println!(
        "R = {}, x_plus = {}, x_minus = {}, iou = {}",
        fmt_f64(res.params.r()),
        fmt_f64(res.params.x_plus()),
        fmt_f64(res.params.x_minus()),
        fmt_f64(res.iou)
    );
    Ok(())
}

fn robot(path: Option<&std::path::Path>) -> CliResult<RobotModel<f64>> {
    match path {
        Some(p) => Ok(RobotModel::from_json(&read(p)?)?),
        None => Ok(RobotModel::ur5()),
    }
}

#[derive(Serialize)]
struct FkReport {
    robot: String,
    q: [f64; 6],
    pose: Pose<f64>,
    /// Frame origins from the base to the flange.
    frames: Vec<Point3<f64>>,
}

pub fn fk(args: FkArgs, out: &Output) -> CliResult<()> {
    let model = robot(args.robot.as_deref())?;
    let q = match args.q {
        Some(v) => {
            let arr: [f64; 6] = v.as_slice().try_into().map_err(|_| {
                CliError::Input(format!("--q needs 6 joint angles, got {}", v.len()))
            })?;
            JointConfig::new(arr)?
        }
        None => JointConfig::zero(),
    };
    let pose = forward_kinematics(&model, &q);
    let frames = joint_frames(&model, &q)
        .iter()
        .map(|f| f.translation)
        .collect();
    out.json(
        "fk.json",
        &FkReport {
            robot: model.name.clone(),
            q: q.q,
            pose,
            frames,
        },
    )?;
    let t = pose.translation;
    println!("{} {} {}", fmt_f64(t.x), fmt_f64(t.y), fmt_f64(t.z));
    Ok(())
}

#[derive(Serialize)]
struct ModeSummary {
    origin_mode: OriginMode,
    v_ext: f64,
    ratio_percent: f64,
}

#[derive(Serialize)]
struct WorkspaceSummary<'a> {
    robot: &'a str,
    n: usize,
    seed: u64,
    attachment: &'a AttachmentModel<f64>,
    v_arm: f64,
    v_ext: f64,
    ratio_percent: f64,
    /// Both attachment conventions, for comparison.
    origin_modes: Vec<ModeSummary>,
}

fn point_csv(pts: &[Point3<f64>]) -> CliResult<Vec<u8>> {
    csv(|w| {
        write_csv_header(w, &["x", "y", "z"])?;
        for p in pts {
            write_csv_row(w, &p.to_array())?;
        }
        Ok(())
    })
}

fn ply(pts: &[Point3<f64>]) -> String {
    let mut s = format!("ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n", pts.len());
    for p in pts {
        s.push_str(&format!(
            "{} {} {}\n",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.z)
        ));
    }
    s
}

pub fn workspace(args: WorkspaceArgs, seed: u64, out: &Output) -> CliResult<()> {
    let model = robot(args.robot.as_deref())?;
    let params = LoopParams::new(
        args.r.unwrap_or(0.7),
        args.xp.unwrap_or(0.2),
        args.xm.unwrap_or(0.1),
    )?;
    let n = args.n.unwrap_or(200_000);
    let mode = args.origin_mode.unwrap_or_default();
    let attach = |m| {
        AttachmentModel::with_options(
            params,
            args.curve_samples.unwrap_or(DEFAULT_CURVE_SAMPLES),
            m,
            args.azimuth_source.unwrap_or_default(),
            args.extent.unwrap_or(LoopExtent::Junction),
        )
    };
    let att = attach(mode)?;
    let main = sample_workspace(&model, &att, n, seed)?;
    let mut origin_modes = Vec::new();
    for m in [OriginMode::CurveOriginAtTcp, OriginMode::EjectionPointAtTcp] {
        let r: WorkspaceResult<f64> = if m == mode {
            main.clone()
        } else {
            sample_workspace(&model, &attach(m)?, n, seed)?
        };
        origin_modes.push(ModeSummary {
            origin_mode: m,
            v_ext: r.v_ext,
            ratio_percent: r.ratio_percent,
        });
    }

    out.write("tcp.csv", point_csv(&main.tcp_points)?)?;
    out.write("far.csv", point_csv(&main.far_points)?)?;
    if args.ply.unwrap_or(false) {
        out.write("tcp.ply", ply(&main.tcp_points))?;
        out.write("far.ply", ply(&main.far_points))?;
    }
    let summary = WorkspaceSummary {
        robot: &model.name,
        n,
        seed,
        attachment: &att,
        v_arm: main.v_arm,
        v_ext: main.v_ext,
        ratio_percent: main.ratio_percent,
        origin_modes,
    };
    out.json("summary.json", &summary)?;
    println!("v_arm = {} m^3", fmt_f64(main.v_arm));
    println!("v_ext = {} m^3", fmt_f64(main.v_ext));
    println!("ratio_percent = {}", fmt_f64(main.ratio_percent));
    Ok(())
}

pub fn control(args: ControlArgs, out: &Output) -> CliResult<()> {
    let path = args
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Input("control needs --scenario FILE".into()))?;
    let scenario: Vec<TimedCommand<f64>> = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let defaults = ControlLimits::<f64>::default();
    let limits = ControlLimits {
        l_min: args.l_min.unwrap_or(defaults.l_min),
        l_max: args.l_max.unwrap_or(defaults.l_max),
        omega_max: args.omega_max.or(defaults.omega_max),
        allow_launch_to_retract: args
            .allow_launch_to_retract
            .unwrap_or(defaults.allow_launch_to_retract),
    };
    let initial = GripperState::new(
        args.length.unwrap_or(1.0),
        args.wheel_radius.unwrap_or(0.02),
        args.r.unwrap_or(FIT_R),
        args.ratio.unwrap_or(FIT_XP / FIT_XM),
        limits,
    )?;
    let (rows, last) = replay(&initial, &scenario)?;

    let mut buf = Vec::new();
    writeln!(buf, "t,L,x_plus,x_minus,phase,wind_on,clamp").map_err(Error::from)?;
    for r in &rows {
        let clamp = match r.clamp {
            Some(ClampSide::Min) => "min",
            Some(ClampSide::Max) => "max",
            None => "",
        };
        writeln!(
            buf,
            "{},{},{},{},{},{},{clamp}",
            fmt_f64(r.t),
            fmt_f64(r.length),
            fmt_f64(r.x_plus),
            fmt_f64(r.x_minus),
            r.phase,
            r.wind_on
        )
        .map_err(Error::from)?;
    }
    out.write("trace.csv", buf)?;
    out.json("final_state.json", &last)?;
    println!(
        "{} rows, final phase {}, L = {} m",
        rows.len(),
        last.phase,
        fmt_f64(last.deployed_length)
    );
    Ok(())
}
