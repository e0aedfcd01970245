use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use granular_slope::calibration::{
    build_profile, combine_normal_fits, fit_normal_resistance, fit_shear_strength,
    read_penetration_file, read_shear_file,
};
use granular_slope::format::fmt_sig;
use granular_slope::model::{
    integrate_trace, net_step, velocity_trace, RegimeLabel, RobotConfig, SlopeAngle, StrideOutcome,
    TerrainStrength,
};
use granular_slope::phase::{self, Axis, Scale, SweepSpec, DEFAULT_GRID};
use granular_slope::planner::{plan_path, risk_map, Cell, RiskWeights, TerrainMap};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{json_text, num, write_file, Format, Output};
use crate::{ModelArgs, ScaleArg};

const LOW_R_SQUARED: f64 = 0.9;

fn slope(deg: f64) -> Result<SlopeAngle, CliError> {
    Ok(SlopeAngle::from_degrees(deg)?)
}

fn load_robot(
    cfg: &RunConfig,
    out: &Output,
    flag: Option<&std::path::Path>,
) -> Result<RobotConfig, CliError> {
    let (robot, default) = cfg.robot(flag)?;
    if default {
        out.note("no robot given; using the built-in default robot");
    }
    Ok(robot)
}

fn warn_extrapolated(out: &Output, outcome: &StrideOutcome, terrain: &TerrainStrength) {
    if outcome.extrapolated {
        out.warn(format!(
            "{} deg lies outside the calibrated k_s range [{}, {}] deg; using the nearest sample",
            fmt_sig(outcome.theta.degrees()),
            fmt_sig(terrain.shear_profile.samples()[0].0.to_degrees()),
            fmt_sig(terrain.shear_profile.max_angle().to_degrees()),
        ));
    }
}

pub fn calibrate(
    cfg: &RunConfig,
    out: &Output,
    penetration: Vec<PathBuf>,
    shear: Vec<PathBuf>,
) -> Result<(), CliError> {
    if out.format == Some(Format::Csv) {
        return Err(CliError::input("calibrate writes terrain JSON only"));
    }
    let penetration = if penetration.is_empty() {
        cfg.calibrate.penetration.clone()
    } else {
        penetration
    };
    let shear = if shear.is_empty() {
        cfg.calibrate.shear.clone()
    } else {
        shear
    };
    if penetration.is_empty() {
        return Err(CliError::input("no penetration files given"));
    }
    if shear.is_empty() {
        return Err(CliError::input("no shear files given"));
    }

    let mut normal_fits = Vec::new();
    for path in &penetration {
        let rec = read_penetration_file(path)?;
        let fit = fit_normal_resistance(&rec)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        out.note(format!(
            "penetration {}: theta {} deg, k_n {} N/m^3, R^2 {}, {} samples",
            path.display(),
            fmt_sig(rec.theta_deg),
            fmt_sig(fit.k_n),
            fmt_sig(fit.r_squared),
            fit.samples
        ));
        if fit.r_squared < LOW_R_SQUARED {
            out.warn(format!(
                "{}: poor linear fit (R^2 {})",
                path.display(),
                fmt_sig(fit.r_squared)
            ));
        }
        normal_fits.push(fit);
    }

    let mut records = Vec::new();
    for path in &shear {
        let rec = read_shear_file(path)?;
        let fit = fit_shear_strength(&rec)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        out.note(format!(
            "shear {}: theta {} deg, k_s {} N/m^3, plateau {} N over {} samples",
            path.display(),
            fmt_sig(fit.theta_deg),
            fmt_sig(fit.k_s),
            fmt_sig(fit.plateau_force),
            fit.plateau_samples
        ));
        records.push(rec);
    }
    let build = build_profile(&records)?;
    for theta in &build.merged_angles {
        let n = records.iter().filter(|r| r.theta_deg == *theta).count();
        out.warn(format!(
            "{n} shear records at {} deg; using their mean k_s",
            fmt_sig(*theta)
        ));
    }
    let terrain = TerrainStrength::new(combine_normal_fits(&normal_fits)?, build.profile)?;
    let value = serde_json::to_value(&terrain).expect("terrain serializes");
    out.emit(&json_text(&value))
}

struct StrideRow {
    outcome: StrideOutcome,
}

impl StrideRow {
    const HEADER: [&'static str; 11] = [
        "theta_deg",
        "k_s",
        "d_n_m",
        "d_s_m",
        "t1_s",
        "anchored",
        "s1_m",
        "s2_m",
        "s_m",
        "v_bar_m_s",
        "regime",
    ];

    fn cells(&self) -> Vec<String> {
        let o = &self.outcome;
        let mut cells = vec![
            fmt_sig(o.theta.degrees()),
            fmt_sig(o.k_s),
            fmt_sig(o.d_n),
            fmt_sig(o.d_s),
        ];
        match o.kinematics {
            Some(k) => cells.extend([
                fmt_sig(k.t1),
                k.anchored.to_string(),
                fmt_sig(k.s1),
                fmt_sig(k.s2),
                fmt_sig(k.s),
                fmt_sig(k.v_bar),
            ]),
            None => cells.extend(std::iter::repeat_n(String::new(), 6)),
        }
        cells.push(o.regime.to_string());
        cells
    }

    fn json(&self) -> Value {
        let o = &self.outcome;
        let k = o.kinematics;
        let field = |f: fn(&granular_slope::model::StepKinematics) -> f64| {
            k.as_ref().map_or(Value::Null, |k| num(f(k)))
        };
        json!({
            "theta_deg": o.theta.degrees(),
            "k_s": o.k_s,
            "d_n_m": o.d_n,
            "d_s_m": o.d_s,
            "t1_s": field(|k| k.t1),
            "anchored": k.map(|k| k.anchored),
            "s1_m": field(|k| k.s1),
            "s2_m": field(|k| k.s2),
            "s_m": field(|k| k.s),
            "v_bar_m_s": field(|k| k.v_bar),
            "regime": o.regime.name(),
        })
    }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut text = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        text.push_str(parts.join("  ").trim_end());
        text.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    text
}

pub fn stride(
    cfg: &RunConfig,
    out: &Output,
    model: &ModelArgs,
    theta: Vec<f64>,
) -> Result<(), CliError> {
    let thetas = if theta.is_empty() {
        cfg.stride.theta_deg.clone().unwrap_or_default()
    } else {
        theta
    };
    if thetas.is_empty() {
        return Err(CliError::input(
            "no slope angles given; pass --theta or set stride.theta_deg",
        ));
    }
    let angles = thetas
        .iter()
        .map(|&d| slope(d))
        .collect::<Result<Vec<_>, _>>()?;
    let robot = load_robot(cfg, out, model.robot.as_deref())?;
    let terrain = cfg.terrain(model.terrain.as_deref())?;

    let rows: Vec<StrideRow> = angles
        .into_iter()
        .map(|theta| StrideRow {
            outcome: net_step(&robot, &terrain, theta),
        })
        .collect();
    for row in &rows {
        warn_extrapolated(out, &row.outcome, &terrain);
    }

    let format = out.format.or(out.path.as_ref().map(|_| Format::Csv));
    let text = match format {
        None => table(
            &StrideRow::HEADER,
            &rows.iter().map(StrideRow::cells).collect::<Vec<_>>(),
        ),
        Some(Format::Csv) => {
            let mut text = StrideRow::HEADER.join(",");
            text.push('\n');
            for row in &rows {
                text.push_str(&row.cells().join(","));
                text.push('\n');
            }
            text
        }
        Some(Format::Json) => json_text(&json!({
            "robot": robot,
            "rows": rows.iter().map(StrideRow::json).collect::<Vec<_>>(),
        })),
    };
    out.emit(&text)
}

pub struct SweepArgs {
    pub robot: Option<PathBuf>,
    pub theta: Option<f64>,
    pub kn: (Option<f64>, Option<f64>),
    pub ks: (Option<f64>, Option<f64>),
    pub grid: Option<usize>,
    pub scale: Option<ScaleArg>,
}

pub fn sweep(cfg: &RunConfig, out: &Output, args: SweepArgs) -> Result<(), CliError> {
    let section = &cfg.sweep;
    let axis = |base: Option<Axis>, default: Axis, (lo, hi): (Option<f64>, Option<f64>)| Axis {
        min: lo.unwrap_or(base.unwrap_or(default).min),
        max: hi.unwrap_or(base.unwrap_or(default).max),
        count: args.grid.unwrap_or(base.unwrap_or(default).count),
    };
    let scale = match args.scale {
        Some(ScaleArg::Linear) => Scale::Linear,
        Some(ScaleArg::Log) => Scale::Log,
        None => section.scale.unwrap_or(Scale::Log),
    };
    let spec = SweepSpec {
        k_n: axis(section.k_n, Axis::new(1e5, 1e7, DEFAULT_GRID), args.kn),
        k_s: axis(section.k_s, Axis::new(1e4, 1e8, DEFAULT_GRID), args.ks),
        scale,
        theta: slope(args.theta.or(section.theta_deg).unwrap_or(0.0))?,
        robot: load_robot(cfg, out, args.robot.as_deref())?,
    };
    let diagram = phase::sweep(&spec)?;

    let mut summary = format!(
        "sweep {}x{} at {} deg:",
        spec.k_n.count,
        spec.k_s.count,
        fmt_sig(spec.theta.degrees())
    );
    for label in RegimeLabel::ALL {
        let _ = write!(summary, " {label} {}", diagram.count(label));
    }
    let _ = write!(summary, "; {} boundary polyline(s)", diagram.contour.len());
    out.note(summary);

    let json = || json_text(&diagram.to_json());
    match out.format.unwrap_or(Format::Json) {
        Format::Json => {
            out.emit(&json())?;
            companion(out, "csv", &diagram.to_csv())
        }
        Format::Csv => {
            out.emit(&diagram.to_csv())?;
            companion(out, "json", &json())
        }
    }
}

/// Writes the alternate format next to `--out`, when there is one.
fn companion(out: &Output, ext: &str, text: &str) -> Result<(), CliError> {
    let Some(path) = &out.path else {
        return Ok(());
    };
    let other = path.with_extension(ext);
    if &other == path {
        return Ok(());
    }
    write_file(&other, text)?;
    out.note(format!("wrote {}", other.display()));
    Ok(())
}

pub struct PlanArgs {
    pub heightmap: Option<PathBuf>,
    pub start: Option<String>,
    pub goal: Option<String>,
    pub lambda: Option<f64>,
    pub risk_map: Option<PathBuf>,
}

fn parse_cell(
    which: &str,
    flag: Option<&str>,
    fallback: Option<[usize; 2]>,
) -> Result<Cell, CliError> {
    if let Some(text) = flag {
        let parsed = text
            .split_once(',')
            .and_then(|(c, r)| Some(Cell::new(c.trim().parse().ok()?, r.trim().parse().ok()?)));
        return parsed
            .ok_or_else(|| CliError::input(format!("--{which} must be `col,row`, got `{text}`")));
    }
    fallback
        .map(|[c, r]| Cell::new(c, r))
        .ok_or_else(|| CliError::input(format!("no {which} cell given")))
}

pub fn plan(
    cfg: &RunConfig,
    out: &Output,
    model: &ModelArgs,
    args: PlanArgs,
) -> Result<(), CliError> {
    let section = &cfg.plan;
    let heightmap = args
        .heightmap
        .or_else(|| section.heightmap.clone())
        .ok_or_else(|| CliError::input("no heightmap given"))?;
    let start = parse_cell("start", args.start.as_deref(), section.start)?;
    let goal = parse_cell("goal", args.goal.as_deref(), section.goal)?;
    let lambda = args
        .lambda
        .or(section.lambda)
        .unwrap_or(RiskWeights::default().lambda);
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(CliError::input(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let robot = load_robot(cfg, out, model.robot.as_deref())?;
    let terrain = cfg.terrain(model.terrain.as_deref())?;
    let text = fs::read_to_string(&heightmap).map_err(|e| CliError::io(&heightmap, e))?;
    let map = TerrainMap::parse(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", heightmap.display())))?;

    let risk = risk_map(&map, &robot, &terrain, RiskWeights { lambda });
    let steepest = risk.slope_deg.iter().copied().fold(0.0, f64::max);
    if steepest > terrain.shear_profile.max_angle().to_degrees() {
        out.warn(format!(
            "map slopes reach {} deg, beyond the calibrated k_s range; steeper cells use the last sample",
            fmt_sig(steepest)
        ));
    }
    if let Some(path) = args.risk_map.or_else(|| section.risk_map.clone()) {
        write_file(&path, &risk.to_csv())?;
        out.note(format!("wrote {}", path.display()));
    }

    let path = plan_path(&risk, start, goal)?;
    out.note(format!(
        "path: {} waypoints, {} m, cost {}, {} metastable",
        path.waypoints.len(),
        fmt_sig(path.total_length),
        fmt_sig(path.total_cost),
        path.count(RegimeLabel::Metastable)
    ));
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut value = path.to_json();
            value["lambda"] = json!(lambda);
            value["start"] = json!([start.col, start.row]);
            value["goal"] = json!([goal.col, goal.row]);
            value["cell_size_m"] = json!(map.cell_size);
            json_text(&value)
        }
        Format::Csv => {
            let mut text = String::from("col,row,slope_deg,s_m,label,cost\n");
            for c in &path.waypoints {
                let i = risk.index(*c);
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    c.col,
                    c.row,
                    fmt_sig(risk.slope_deg[i]),
                    fmt_sig(risk.step_length[i]),
                    risk.regime[i],
                    fmt_sig(risk.cost[i])
                );
            }
            text
        }
    };
    out.emit(&text)
}

pub fn trace(
    cfg: &RunConfig,
    out: &Output,
    model: &ModelArgs,
    theta: Option<f64>,
    dt: Option<f64>,
) -> Result<(), CliError> {
    let theta = theta.or(cfg.trace.theta_deg).ok_or_else(|| {
        CliError::input("no slope angle given; pass --theta or set trace.theta_deg")
    })?;
    let theta = slope(theta)?;
    let dt = dt.or(cfg.trace.dt_s).unwrap_or(1e-3);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::input(format!("dt must be > 0, got {dt}")));
    }
    let robot = load_robot(cfg, out, model.robot.as_deref())?;
    let terrain = cfg.terrain(model.terrain.as_deref())?;
    let outcome = net_step(&robot, &terrain, theta);
    warn_extrapolated(out, &outcome, &terrain);
    let Some(kin) = outcome.kinematics else {
        return Err(CliError::Domain(format!(
            "leg sinks at {} deg (SinkageFailure); no trace",
            fmt_sig(theta.degrees())
        )));
    };
    let trace = velocity_trace(&robot, &outcome, dt)?;

    let integral = integrate_trace(&trace);
    let expected = kin.s2 - kin.s1;
    let bound = 2.0 * dt * trace.iter().map(|p| p.v.abs()).fold(0.0, f64::max);
    let diff = (integral - expected).abs();
    out.note(format!(
        "integral check: trapezoid {} m, s2 - s1 {} m, |diff| {} m (bound {} m): {}",
        fmt_sig(integral),
        fmt_sig(expected),
        fmt_sig(diff),
        fmt_sig(bound),
        if diff <= bound { "ok" } else { "FAILED" }
    ));

    let text = match out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut text = String::from("t_s,v_m_s\n");
            for p in &trace {
                let _ = writeln!(text, "{},{}", fmt_sig(p.t), fmt_sig(p.v));
            }
            text
        }
        Format::Json => json_text(&json!({
            "theta_deg": theta.degrees(),
            "dt_s": dt,
            "regime": outcome.regime.name(),
            "t_s": trace.iter().map(|p| p.t).collect::<Vec<_>>(),
            "v_m_s": trace.iter().map(|p| p.v).collect::<Vec<_>>(),
            "integral_m": integral,
            "s2_minus_s1_m": expected,
        })),
    };
    out.emit(&text)
}
