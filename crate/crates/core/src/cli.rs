//! Command-line interface. [`run`] is the whole program; the binary only
//! forwards process arguments and exits with the returned code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::Serialize;

use crate::calibration::{calibrate, Corner};
use crate::coverage::{analyze, csv_row, CoverageReport, Region, CSV_HEADER};
use crate::geometry::Pose;
use crate::io::{
    output_dir, read_json, read_mask, to_json, write_bytes, CalibrationOutput, IoError, Scenario,
    SessionFile,
};
use crate::perception::footprint;
use crate::projector::{
    plan_projector_pose, render_cue, tcp_pose_for_projection, ImagePoint, SpatialCue,
};
use crate::simulator::{
    aggregate, aggregate_csv, build_summary_csv, course_mae, run_trials, timing_report, BuildState,
    Mode, SimError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_COLLAPSE: i32 = 3;

pub const PROJECTION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "brickwork",
    version,
    about = "Projector-guided adaptive brick placement toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Open,
    Adaptive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Open => Mode::OpenLoop,
            ModeArg::Adaptive => Mode::Adaptive,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover the projector model from a probed calibration session.
    Calibrate {
        session: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded builds of a scenario and write per-build and aggregate results.
    Simulate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "adaptive")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        /// Exit with code 3 if any build ends in a failure outcome.
        #[arg(long)]
        fail_on_collapse: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score adhesive masks (.pgm or .json) against a target region.
    Coverage {
        region: PathBuf,
        #[arg(required = true)]
        masks: Vec<PathBuf>,
        /// Emit JSON reports instead of CSV.
        #[arg(long)]
        json: bool,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan the projector pose for a brick and render its footprint.
    Project {
        scenario: PathBuf,
        brick_id: String,
        #[arg(long)]
        standoff: Option<f64>,
        /// Viewing direction as x,y,z.
        #[arg(long, value_parser = parse_vec3)]
        approach: Option<Vector3<f64>>,
        /// Image X axis hint as x,y,z.
        #[arg(long, value_parser = parse_vec3)]
        up: Option<Vector3<f64>>,
    },
    /// Summarise exported builds: per-course MAE, outcomes and timing.
    Report {
        scenario: PathBuf,
        #[arg(required = true)]
        builds: Vec<PathBuf>,
    },
    /// Regenerate the shipped scenario files into a directory.
    Fixtures { dir: PathBuf },
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

/// A command failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }

    fn solver(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: message.to_string(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::input(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Failure::input(e),
            SimError::Model(_) => Failure::solver(e),
        }
    }
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn warn(&mut self, warnings: &[String]) {
        for w in warnings {
            let _ = writeln!(self.err, "warning: {w}");
        }
    }
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let mut ctx = Ctx { out, err };
    let result = match cli.command {
        Command::Calibrate { session, out } => cmd_calibrate(&mut ctx, &session, out.as_deref()),
        Command::Simulate {
            scenario,
            mode,
            seeds,
            fail_on_collapse,
            out,
        } => cmd_simulate(
            &mut ctx,
            &scenario,
            mode.into(),
            seeds,
            fail_on_collapse,
            out.as_deref(),
        ),
        Command::Coverage {
            region,
            masks,
            json,
            out,
        } => cmd_coverage(&mut ctx, &region, &masks, json, out.as_deref()),
        Command::Project {
            scenario,
            brick_id,
            standoff,
            approach,
            up,
        } => cmd_project(&mut ctx, &scenario, &brick_id, standoff, approach, up),
        Command::Report { scenario, builds } => cmd_report(&mut ctx, &scenario, &builds),
        Command::Fixtures { dir } => cmd_fixtures(&dir),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(ctx.err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_calibrate(ctx: &mut Ctx, session: &Path, out: Option<&Path>) -> Result<i32, Failure> {
    let (file, warnings) = SessionFile::load(session)?;
    ctx.warn(&warnings);
    let result = calibrate(&file.session())
        .map_err(|e| Failure::solver(format!("calibration failed ({e:?}): {e}")))?;
    let doc = CalibrationOutput::new(&result, file.ground_truth.as_ref());
    let dir = output_dir(out, None);
    write_bytes(
        &dir.join("calibration_result.json"),
        to_json(&doc).as_bytes(),
    )?;

    let mut t = String::new();
    let _ = writeln!(t, "corner  rms residual (mm)");
    for c in Corner::ALL {
        let _ = writeln!(
            t,
            "{:<6}  {:.4}",
            format!("{c:?}"),
            1e3 * result.per_line_rms_residual[c.index()]
        );
    }
    let _ = writeln!(
        t,
        "apex objective (mm^2): {:.6}",
        1e6 * result.apex_objective
    );
    let _ = writeln!(
        t,
        "conditioning: {:.4} ({:?})",
        result.conditioning, result.condition_flag
    );
    let _ = writeln!(
        t,
        "fov: {:.4} x {:.4} deg",
        result.model.fov_x.to_degrees(),
        result.model.fov_y.to_degrees()
    );
    if let Some(g) = &doc.ground_truth_error {
        let _ = writeln!(
            t,
            "vs ground truth: translation {:.3e} m, rotation {:.3e} rad, fov {:.3e} / {:.3e} rad",
            g.translation, g.rotation, g.fov_x, g.fov_y
        );
    }
    let _ = ctx.out.write_all(t.as_bytes());
    Ok(EXIT_OK)
}

fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn cmd_simulate(
    ctx: &mut Ctx,
    scenario_path: &Path,
    mode: Mode,
    seeds: usize,
    fail_on_collapse: bool,
    out: Option<&Path>,
) -> Result<i32, Failure> {
    if seeds == 0 {
        return Err(Failure::input("--seeds must be at least 1"));
    }
    let (sc, warnings) = Scenario::load(scenario_path)?;
    ctx.warn(&warnings);
    let dir = output_dir(out, sc.output_dir.as_deref());
    let mut log = format!(
        "{:.3} simulate {} mode={:?} seeds={}\n",
        unix_time(),
        scenario_path.display(),
        mode,
        seeds
    );
    let states = run_trials(&sc.design, &sc.noise, mode, &sc.timing, &sc.adaptive, seeds)?;
    for (i, s) in states.iter().enumerate() {
        let json = dir.join(format!("build_{i:03}.json"));
        write_bytes(&json, to_json(s).as_bytes())?;
        write_bytes(
            &dir.join(format!("build_{i:03}.csv")),
            build_summary_csv(s, &sc.design).as_bytes(),
        )?;
        let _ = writeln!(
            log,
            "{:.3} wrote {} seed={} outcome={:?}",
            unix_time(),
            json.display(),
            s.seed,
            s.outcome
        );
    }
    let agg = aggregate(&states, &sc.design);
    write_bytes(&dir.join("aggregate.csv"), aggregate_csv(&agg).as_bytes())?;
    let _ = writeln!(log, "{:.3} done", unix_time());
    write_bytes(&dir.join("run.log"), log.as_bytes())?;

    let failures = states.iter().filter(|s| s.outcome.is_failure()).count();
    let _ = writeln!(
        ctx.out,
        "{} builds of {} ({:?}): {} completed, {} failed ({} collisions); results in {}",
        seeds,
        sc.design.name,
        mode,
        seeds - failures,
        failures,
        states.iter().filter(|s| s.outcome.is_collision()).count(),
        dir.display()
    );
    Ok(if fail_on_collapse && failures > 0 {
        EXIT_COLLAPSE
    } else {
        EXIT_OK
    })
}

fn cmd_coverage(
    ctx: &mut Ctx,
    region_path: &Path,
    masks: &[PathBuf],
    json: bool,
    out: Option<&Path>,
) -> Result<i32, Failure> {
    let (region, warnings): (Region, _) = read_json(region_path)?;
    ctx.warn(&warnings);
    if region.schema_version != crate::coverage::REGION_SCHEMA_VERSION {
        return Err(Failure::input(format!(
            "{}: unsupported region schema_version {}",
            region_path.display(),
            region.schema_version
        )));
    }
    let poly = region.points();
    let mut rows: Vec<(String, CoverageReport)> = Vec::new();
    for path in masks {
        let (mask, warnings) = read_mask(path)?;
        ctx.warn(&warnings);
        let report = analyze(&poly, &mask)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        rows.push((path.display().to_string(), report));
    }
    let text = if json {
        #[derive(Serialize)]
        struct Row<'a> {
            source: &'a str,
            #[serde(flatten)]
            report: CoverageReport,
        }
        let rows: Vec<Row> = rows
            .iter()
            .map(|(s, r)| Row {
                source: s,
                report: *r,
            })
            .collect();
        to_json(&rows)
    } else {
        let mut t = format!("{CSV_HEADER}\n");
        for (s, r) in &rows {
            t.push_str(&csv_row(s, r, None));
            t.push('\n');
        }
        t
    };
    match out {
        Some(p) => write_bytes(p, text.as_bytes())?,
        None => {
            let _ = ctx.out.write_all(text.as_bytes());
        }
    }
    Ok(EXIT_OK)
}

/// `project` output document.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ProjectionPlan {
    pub schema_version: u32,
    pub brick_id: String,
    pub projector_pose: Pose,
    pub tcp_pose: Pose,
    /// Footprint corners on the bonding surface, world frame.
    pub footprint: Vec<[f64; 3]>,
    pub image_points: Vec<ImagePoint>,
}

fn cmd_project(
    ctx: &mut Ctx,
    scenario_path: &Path,
    brick_id: &str,
    standoff: Option<f64>,
    approach: Option<Vector3<f64>>,
    up: Option<Vector3<f64>>,
) -> Result<i32, Failure> {
    let (sc, warnings) = Scenario::load(scenario_path)?;
    ctx.warn(&warnings);
    let brick = sc
        .design
        .bricks
        .iter()
        .find(|b| b.id == brick_id)
        .ok_or_else(|| {
            Failure::input(format!(
                "unknown brick id {brick_id:?} in {}",
                sc.design.name
            ))
        })?;
    let mut planner = sc.planner;
    if let Some(s) = standoff {
        planner.standoff = s;
    }
    if let Some(a) = approach {
        planner.approach_dir = a;
    }
    if let Some(u) = up {
        planner.up_hint = u;
    }
    let dims = sc.design.nominal_brick;
    let surface_z = brick.pose.translation.z - dims.height;
    let points: Vec<Vector3<f64>> = footprint(&brick.pose, dims.length, dims.width)
        .corners()
        .iter()
        .map(|c| Vector3::new(c.x, c.y, surface_z))
        .collect();
    let cue = SpatialCue::new(points.clone(), true).map_err(Failure::input)?;
    let projector_pose =
        plan_projector_pose(&cue, &planner).map_err(|e| Failure::input(format!("{e:?}: {e}")))?;
    let image_points = render_cue(&sc.projector, &projector_pose, &cue)
        .map_err(|e| Failure::solver(format!("{e:?}: {e}")))?;
    let doc = ProjectionPlan {
        schema_version: PROJECTION_SCHEMA_VERSION,
        brick_id: brick_id.to_string(),
        projector_pose,
        tcp_pose: tcp_pose_for_projection(&sc.projector, &projector_pose),
        footprint: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        image_points,
    };
    let _ = ctx.out.write_all(to_json(&doc).as_bytes());
    if let Some(i) = doc.image_points.iter().position(|p| !p.in_frame) {
        let _ = writeln!(
            ctx.err,
            "warning: footprint corner {i} falls outside the projector frame"
        );
    }
    Ok(EXIT_OK)
}

fn cmd_report(ctx: &mut Ctx, scenario_path: &Path, builds: &[PathBuf]) -> Result<i32, Failure> {
    let (sc, warnings) = Scenario::load(scenario_path)?;
    ctx.warn(&warnings);
    let mut states: Vec<BuildState> = Vec::new();
    for p in builds {
        let (s, w): (BuildState, _) = read_json(p)?;
        ctx.warn(&w);
        if s.design != sc.design.name {
            return Err(Failure::input(format!(
                "{}: build of {:?} does not match scenario design {:?}",
                p.display(),
                s.design,
                sc.design.name
            )));
        }
        states.push(s);
    }
    let mut t = String::new();
    for (p, s) in builds.iter().zip(&states) {
        let _ = writeln!(
            t,
            "{} (seed {}, {:?}): {:?}",
            p.display(),
            s.seed,
            s.mode,
            s.outcome
        );
        let _ = writeln!(t, "  course  MAE (mm)");
        for (k, m) in course_mae(s, &sc.design).iter().enumerate() {
            match m {
                Some(m) => {
                    let _ = writeln!(t, "  {k:>6}  {:.3}", m * 1e3);
                }
                None => {
                    let _ = writeln!(t, "  {k:>6}  -");
                }
            }
        }
        let r = timing_report(s);
        let _ = writeln!(t, "  subprocess        total (s)  share (%)  per brick (s)");
        for row in &r.rows {
            let _ = writeln!(
                t,
                "  {:<16}  {:>9.1}  {:>9.1}  {:>13.1}",
                row.subprocess.name(),
                row.total,
                100.0 * row.share,
                row.per_brick
            );
        }
        let _ = writeln!(
            t,
            "  per-brick cycle: {:.1} s over {} bricks",
            r.per_brick_total, r.bricks
        );
    }
    if states.len() > 1 {
        let _ = writeln!(t, "aggregate over {} builds:", states.len());
        t.push_str(&aggregate_csv(&aggregate(&states, &sc.design)));
    }
    let _ = ctx.out.write_all(t.as_bytes());
    Ok(EXIT_OK)
}

fn cmd_fixtures(dir: &Path) -> Result<i32, Failure> {
    for (rel, data) in crate::fixtures::generate() {
        write_bytes(&dir.join(rel), &data)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec3_arguments() {
        assert_eq!(parse_vec3("0, 0,-1").unwrap(), Vector3::new(0.0, 0.0, -1.0));
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("a,b,c").is_err());
    }

    #[test]
    fn usage_errors_are_input_errors() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["brickwork", "simulate"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run(["brickwork", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
