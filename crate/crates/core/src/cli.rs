//! Command-line front end. Exit codes: 0 ok, 2 configuration error,
//! 3 numerical failure, 4 failed checks. Every failure ends with a last line
//! `ERROR <code>: <message>` on stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{self, CheckReport, RecordOptions, SpacetimePoint, CHECKS_HEADER};
use crate::exact::{self, ExactSolutionSpec};
use crate::flow::{self, EvolveOptions, ExtinctionEstimate, KappaMinBound, StepControl, Trajectory, VertexSpacing};
use crate::graph_flow::{self, BaseCurveData, GraphStop};
use crate::io::{self, fmt_f64, fmt_opt};
use crate::singularity::{self, RescaleFrame};
use crate::{shapes, DiscreteCurve, Error, PlanePoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECKS: i32 = 4;

/// Smallest vertex count accepted from the command line.
pub const MIN_CLI_VERTICES: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "csflow", version, about = "Curve shortening flow runs, diagnostics and blowup analysis")]
struct Cli {
    /// Plain-text `key = value` file; keys are long flag names. Flags given
    /// on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a closed curve with the polygon engine.
    Evolve(EvolveArgs),
    /// Evolve the normal offset over a fixed base curve.
    GraphEvolve(GraphArgs),
    /// Recompute records and run the property checks on a trajectory.
    Diagnose(DiagnoseArgs),
    /// Parabolic rescaling and roundness near the singular point.
    Rescale(RescaleArgs),
    /// Sample an exact solution and report its residuals.
    Exact(ExactArgs),
    /// Run the built-in invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// `circle:R`, `ellipse:a,b`, `polygon:<path>`, `square:side`,
    /// `rounded-square:side,corner`, `flower:petals,amplitude[,radius]` or
    /// `random:modes,amplitude` (uses --seed).
    #[arg(long)]
    input: String,
    /// Vertex count; polygons keep their own count unless given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct EvolveArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long, default_value_t = 0.25)]
    cfl: f64,
    #[arg(long, default_value_t = 1e-2)]
    dt_max: f64,
    #[arg(long, default_value_t = 3.0)]
    remesh_ratio: f64,
    /// `auto` or a target edge length.
    #[arg(long, default_value = "auto")]
    spacing: String,
    #[arg(long, default_value_t = 1e3)]
    kappa_stop: f64,
    #[arg(long, default_value_t = 1e-10)]
    area_stop: f64,
    #[arg(long, default_value_t = 1e6)]
    t_max: f64,
    #[arg(long, default_value_t = 1000)]
    stride: usize,
    /// Huisken kernel centre `x,y,t0`.
    #[arg(long, value_parser = parse_spacetime, allow_hyphen_values = true)]
    huisken: Option<SpacetimePoint>,
    #[arg(long)]
    out: PathBuf,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct GraphArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long)]
    t_end: f64,
    /// Time step; defaults to the stability heuristic.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Initial offset `amplitude * cos(mode * 2 pi x / L)`.
    #[arg(long, default_value_t = 0)]
    perturb_mode: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    perturb_amplitude: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DiagnoseArgs {
    /// Trajectory directory.
    #[arg(long)]
    traj: PathBuf,
    /// Output directory; defaults to the trajectory directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Huisken kernel centre `x,y,t0`; detected from the run when it ended
    /// in a singularity.
    #[arg(long, value_parser = parse_spacetime, allow_hyphen_values = true)]
    huisken: Option<SpacetimePoint>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct RescaleArgs {
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "8,16")]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "-4,-2,-1", allow_hyphen_values = true)]
    t_rescaled: Vec<f64>,
    /// Blowup point `x,y`; detected from the run by default.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x0: Option<PlanePoint>,
    /// Singular time; defaults to `t_end + A(t_end) / 2 pi`.
    #[arg(long)]
    t_sing: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ExactArgs {
    /// `circle`, `grim-reaper`, `paperclip` or `hairclip`.
    #[arg(long)]
    kind: String,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = exact::DEFAULT_GRIM_REAPER_CLIP)]
    clip: f64,
    /// Time step of the normal-speed difference quotient.
    #[arg(long, default_value_t = exact::DEFAULT_TIME_STEP)]
    h: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SelftestArgs {
    /// Also write `checks.csv` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_floats(s: &str, count: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != count {
        return Err(format!("expected {count} comma-separated numbers, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(v)
}

fn parse_spacetime(s: &str) -> Result<SpacetimePoint, String> {
    let v = parse_floats(s, 3)?;
    Ok(SpacetimePoint::new(PlanePoint::new(v[0], v[1]), v[2]))
}

fn parse_point(s: &str) -> Result<PlanePoint, String> {
    let v = parse_floats(s, 2)?;
    Ok(PlanePoint::new(v[0], v[1]))
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    /// Report printed to stdout before the error trailer.
    pub output: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into(), output: String::new() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        Failure { code, message: e.to_string(), output: String::new() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Builds the initial curve named by `input`.
pub fn named_curve(input: &str, n: Option<usize>, seed: u64) -> crate::Result<DiscreteCurve> {
    let (kind, rest) = input.split_once(':').unwrap_or((input, ""));
    let nums = |count: std::ops::RangeInclusive<usize>| -> crate::Result<Vec<f64>> {
        let v: Vec<f64> = rest
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::param("input", format!("`{input}`: {e}")))?;
        if !count.contains(&v.len()) {
            return Err(Error::param("input", format!("`{input}` takes {count:?} numbers")));
        }
        Ok(v)
    };
    let count = |v: f64, what: &'static str| -> crate::Result<usize> {
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::param(what, "must be a non-negative integer"));
        }
        Ok(v as usize)
    };
    let n_or = n.unwrap_or(512);
    let curve = match kind {
        "circle" => shapes::circle(nums(1..=1)?[0], PlanePoint::ORIGIN, n_or)?,
        "ellipse" => {
            let v = nums(2..=2)?;
            shapes::ellipse_arclength(v[0], v[1], n_or)?
        }
        "square" => shapes::square(nums(1..=1)?[0], n_or)?,
        "rounded-square" => {
            let v = nums(2..=2)?;
            shapes::rounded_square(v[0], v[1], n_or)?
        }
        "flower" => {
            let v = nums(2..=3)?;
            shapes::flower(count(v[0], "petals")?, v[1], v.get(2).copied().unwrap_or(1.0), n_or)?
        }
        "random" => {
            let v = nums(2..=2)?;
            shapes::random_star(count(v[0], "modes")?, v[1], seed, n_or)?
        }
        "polygon" => {
            if rest.is_empty() {
                return Err(Error::param("input", "polygon needs a path"));
            }
            let c = io::read_curve(Path::new(rest))?;
            match n {
                Some(n) => c.resample(n)?,
                None => c,
            }
        }
        _ => return Err(Error::param("input", format!("unknown curve `{input}`"))),
    };
    if curve.len() < MIN_CLI_VERTICES {
        return Err(Error::param("n", format!("need at least {MIN_CLI_VERTICES} vertices, got {}", curve.len())));
    }
    Ok(curve)
}

fn prepare_output(dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        let empty = fs::read_dir(dir)
            .map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?
            .next()
            .is_none();
        if !empty {
            if !force {
                return Err(Failure::config(format!(
                    "output directory {} is not empty (use --force to replace it)",
                    dir.display()
                )));
            }
            fs::remove_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))
}

fn run_evolve(a: &EvolveArgs) -> CliResult<String> {
    let spacing = match a.spacing.as_str() {
        "auto" => VertexSpacing::Auto,
        s => VertexSpacing::Fixed(s.parse().map_err(|_| Failure::config(format!("bad --spacing `{s}`")))?),
    };
    let control = StepControl {
        cfl: a.cfl,
        dt_max: a.dt_max,
        remesh_ratio: a.remesh_ratio,
        target_vertex_spacing: spacing,
        kappa_stop: a.kappa_stop,
        area_stop: a.area_stop,
        t_max: a.t_max,
    };
    control.validate()?;
    let curve = named_curve(&a.curve.input, a.curve.n, a.curve.seed)?;
    prepare_output(&a.out, a.force)?;
    let opts = EvolveOptions { record_stride: a.stride, huisken: a.huisken, shrinker_residual: false };
    let traj = flow::evolve_with(&curve, &control, &opts)?;
    traj.write_dir(&a.out)?;
    let stop = traj.stop_event().map_or("none", |e| e.kind.name());
    Ok(format!(
        "{stop} t={} steps={} remeshes={}",
        fmt_f64(traj.end_time()),
        traj.records.len().saturating_sub(1),
        traj.remesh_count()
    ))
}

fn run_graph(a: &GraphArgs) -> CliResult<String> {
    let n = a.curve.n.unwrap_or(512);
    let (kind, rest) = a.curve.input.split_once(':').unwrap_or((&a.curve.input, ""));
    let base = match kind {
        "circle" => BaseCurveData::circle(parse_floats(rest, 1).map_err(Failure::config)?[0], n)?,
        "ellipse" => {
            let v = parse_floats(rest, 2).map_err(Failure::config)?;
            BaseCurveData::ellipse(v[0], v[1], n)?
        }
        _ => BaseCurveData::from_curve(&named_curve(&a.curve.input, Some(n), a.curve.seed)?, n)?,
    };
    if base.len() < MIN_CLI_VERTICES {
        return Err(Failure::config(format!("need at least {MIN_CLI_VERTICES} grid points")));
    }
    let u0: Vec<f64> = (0..base.len())
        .map(|j| {
            let x = std::f64::consts::TAU * j as f64 / base.len() as f64;
            a.perturb_amplitude * (a.perturb_mode as f64 * x).cos()
        })
        .collect();
    let dt = a.dt.unwrap_or_else(|| base.stable_dt(&u0));
    prepare_output(&a.out, a.force)?;
    let run = graph_flow::graph_evolve(&base, &u0, a.t_end, dt, a.stride)?;
    let opts = RecordOptions { distance_ratio: true, ..RecordOptions::default() };
    run.to_trajectory(&base, &opts)?.write_dir(&a.out)?;
    let summary = format!("{} t={}", run.stop.event_kind().name(), fmt_f64(run.stop_t));
    if run.stop == GraphStop::Unstable {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("{summary}: {}", run.detail),
            output: String::new(),
        });
    }
    Ok(summary)
}

fn skipped_row(name: &str) -> String {
    format!("{name},skip,")
}

/// Property checks that apply to `traj`, plus names of those that do not.
pub fn trajectory_checks(traj: &Trajectory, huisken: Option<SpacetimePoint>) -> crate::Result<(Vec<CheckReport>, Vec<String>)> {
    let mut reports = vec![
        diagnostics::area_law_check(traj),
        diagnostics::length_monotone_check(traj),
        diagnostics::length_dissipation_check(traj),
        diagnostics::distance_ratio_monotonicity_check(traj),
        diagnostics::total_abs_curvature_check(traj),
    ];
    let convex = traj.records.first().is_some_and(|r| r.kappa_min > 0.0);
    if convex {
        reports.push(diagnostics::gauss_bonnet_check(traj, 1e-3));
        reports.push(diagnostics::harnack_check(traj));
        reports.push(flow::convexity_monotone_check(traj, 0.0));
    }
    let center = match huisken {
        Some(p) => Some(p),
        None => match singularity::detect_blowup_point(traj) {
            Ok(x0) => Some(SpacetimePoint::new(x0, ExtinctionEstimate::FinalArea.estimate(traj)?)),
            Err(Error::NoSingularity(_)) => None,
            Err(e) => return Err(e),
        },
    };
    if let Some(c) = center {
        let (mono, rate) = diagnostics::huisken_monotonicity_check(traj, &c)?;
        reports.push(mono);
        reports.push(rate);
    }
    let (run, skipped): (Vec<_>, Vec<_>) = reports.into_iter().partition(|r| r.evaluated > 0);
    Ok((run, skipped.into_iter().map(|r| r.name).collect()))
}

fn checks_csv(reports: &[CheckReport], skipped: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKS_HEADER}");
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    for name in skipped {
        let _ = writeln!(s, "{}", skipped_row(name));
    }
    s
}

fn check_outcome(reports: &[CheckReport], summary: String) -> CliResult<String> {
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(Failure {
            code: EXIT_CHECKS,
            message: format!("{} check(s) failed: {}", failed.len(), failed.join(" ")),
            output: summary,
        })
    }
}

fn run_diagnose(a: &DiagnoseArgs) -> CliResult<String> {
    let traj = Trajectory::read_dir(&a.traj)?;
    let out = a.out.clone().unwrap_or_else(|| a.traj.clone());
    fs::create_dir_all(&out).map_err(|e| Failure::config(format!("{}: {e}", out.display())))?;
    io::write_atomic_with(&out.join("records.csv"), |w| {
        writeln!(w, "{}", diagnostics::RECORDS_HEADER)?;
        for r in &traj.records {
            writeln!(w, "{}", r.to_csv_row())?;
        }
        Ok(())
    })?;
    let (reports, skipped) = trajectory_checks(&traj, a.huisken)?;
    io::write_atomic(&out.join("checks.csv"), &checks_csv(&reports, &skipped))?;
    let mut summary = String::new();
    for r in &reports {
        let _ = writeln!(summary, "{} {} {}", if r.passed() { "PASS" } else { "FAIL" }, r.name, fmt_f64(r.worst_margin));
    }
    check_outcome(&reports, summary.trim_end().to_string())
}

pub const ROUNDNESS_HEADER: &str = "lambda,t_rescaled,fit_radius,deviation_ratio,shrinker_residual";

fn run_rescale(a: &RescaleArgs) -> CliResult<String> {
    let traj = Trajectory::read_dir(&a.traj)?;
    let x0 = match a.x0 {
        Some(p) => p,
        None => singularity::detect_blowup_point(&traj)?,
    };
    let t_sing = match a.t_sing {
        Some(t) => t,
        None => ExtinctionEstimate::FinalArea.estimate(&traj)?,
    };
    let type1 = singularity::type1_rate(&traj, t_sing)?;
    fs::create_dir_all(a.out.join("slices")).map_err(|e| Failure::config(format!("{}: {e}", a.out.display())))?;
    let mut table = format!("{ROUNDNESS_HEADER}\n");
    for &lambda in &a.lambda {
        let frame = RescaleFrame::new(x0, t_sing, lambda)?;
        for &s in &a.t_rescaled {
            let rep = singularity::analyze_slice(&traj, &frame, s)?;
            io::write_curve(&a.out.join("slices").join(format!("lambda_{lambda}_t_{s}.csv")), &rep.slice.curve)?;
            let _ = writeln!(
                table,
                "{},{},{},{},{}",
                fmt_f64(lambda),
                fmt_f64(s),
                fmt_f64(rep.roundness.fit_radius),
                fmt_f64(rep.roundness.deviation_ratio),
                fmt_f64(rep.shrinker_residual)
            );
        }
    }
    io::write_atomic(&a.out.join("roundness.csv"), &table)?;
    io::write_atomic(
        &a.out.join("blowup.csv"),
        &format!("x0,y0,t_sing,type1_sup\n{},{},{},{}\n", fmt_f64(x0.x), fmt_f64(x0.y), fmt_f64(t_sing), fmt_f64(type1.sup)),
    )?;
    let mut series = String::from("t,type1_rate\n");
    for (t, v) in &type1.series {
        let _ = writeln!(series, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    io::write_atomic(&a.out.join("type1_rate.csv"), &series)?;
    Ok(format!("x0=({},{}) t_sing={} type1_sup={}", fmt_f64(x0.x), fmt_f64(x0.y), fmt_f64(t_sing), fmt_f64(type1.sup)))
}

fn exact_spec(kind: &str, radius: f64, clip: f64, n: usize) -> CliResult<ExactSolutionSpec> {
    Ok(match kind {
        "circle" => ExactSolutionSpec::circle(radius, PlanePoint::ORIGIN, n),
        "grim-reaper" | "grim_reaper" => ExactSolutionSpec::grim_reaper(clip, n),
        "paperclip" => ExactSolutionSpec::paperclip(n),
        "hairclip" => ExactSolutionSpec::hairclip(n),
        _ => return Err(Failure::config(format!("unknown exact solution `{kind}`"))),
    })
}

fn run_exact(a: &ExactArgs) -> CliResult<String> {
    let spec = exact_spec(&a.kind, a.radius, a.clip, a.n)?;
    let sample = spec.sample(a.t)?;
    let implicit = sample.points().iter().map(|&p| spec.implicit_residual(a.t, p).abs()).fold(0.0, f64::max);
    let velocity = exact::normal_velocity_residual(&spec, a.t, a.h).ok();
    fs::create_dir_all(&a.out).map_err(|e| Failure::config(format!("{}: {e}", a.out.display())))?;
    match &sample {
        exact::ExactSample::Closed(c) => io::write_curve(&a.out.join("curve.csv"), c)?,
        exact::ExactSample::Open(l) => io::write_polyline(&a.out.join("curve.csv"), l)?,
    }
    let report = format!(
        "kind,t,n,implicit_residual,normal_velocity_residual\n{},{},{},{},{}\n",
        spec.kind.name(),
        fmt_f64(a.t),
        sample.points().len(),
        fmt_f64(implicit),
        fmt_opt(velocity)
    );
    io::write_atomic(&a.out.join("residuals.csv"), &report)?;
    Ok(format!("implicit={} velocity={}", fmt_f64(implicit), fmt_opt(velocity)))
}

/// Built-in invariant suite on small cases.
pub fn selftest_reports() -> crate::Result<Vec<CheckReport>> {
    let mut out = Vec::new();

    let circle = shapes::circle(1.0, PlanePoint::ORIGIN, 512)?;
    let control = StepControl { kappa_stop: 10.0, ..StepControl::default() };
    let traj = flow::evolve(&circle, &control, 2000)?;
    let mut law = CheckReport::new("selftest_circle_radius_law");
    for s in traj.snapshots.iter().filter(|s| s.state.t <= 0.49) {
        let exact = (1.0 - 2.0 * s.state.t).sqrt();
        law.observe(s.state.t, (flow::mean_radius(&s.state.curve) - exact).abs() / exact, 1e-3);
    }
    out.push(law);
    let mut round = CheckReport::new("selftest_circle_distance_ratio");
    for r in &traj.records {
        if let Some(v) = r.r_ratio {
            round.observe(r.t, (v - 1.0).abs(), 1e-4);
        }
    }
    out.push(round);
    for mut r in [diagnostics::area_law_check(&traj), diagnostics::gauss_bonnet_check(&traj, 1e-3)] {
        r.name = format!("selftest_circle_{}", r.name);
        out.push(r);
    }

    let ellipse = shapes::ellipse_arclength(2.0, 1.0, 256)?;
    let control = StepControl { kappa_stop: 20.0, ..StepControl::default() };
    let traj = flow::evolve(&ellipse, &control, 200)?;
    for mut r in [
        diagnostics::harnack_check(&traj),
        diagnostics::distance_ratio_monotonicity_check(&traj),
        diagnostics::length_dissipation_check(&traj),
        flow::convexity_monotone_check(&traj, 0.0),
        flow::kappa_min_bound_check(&traj, KappaMinBound::Sharp)?,
    ] {
        r.name = format!("selftest_ellipse_{}", r.name);
        out.push(r);
    }

    let mut residuals = CheckReport::new("selftest_exact_normal_velocity");
    for (spec, t, tol) in [
        (ExactSolutionSpec::circle(1.0, PlanePoint::ORIGIN, 1024), 0.0, 1e-3),
        (ExactSolutionSpec::grim_reaper(1.2, 1024), 0.0, 1e-3),
        (ExactSolutionSpec::paperclip(1024), -3.0, 1e-2),
    ] {
        residuals.observe(t, exact::normal_velocity_residual(&spec, t, exact::DEFAULT_TIME_STEP)?, tol);
    }
    out.push(residuals);

    let m = 256;
    let base = BaseCurveData::ellipse(2.0, 1.0, m)?;
    let u0 = vec![0.0; m];
    let run = graph_flow::graph_evolve(&base, &u0, 0.01, base.stable_dt(&u0), usize::MAX)?;
    let graph_curve = graph_flow::to_curve(run.final_state(), &base)?;
    let start = graph_flow::to_curve(&graph_flow::GraphState::new(u0, 0.0), &base)?;
    let traj = flow::evolve(&start, &StepControl { t_max: 0.01, ..StepControl::default() }, usize::MAX)?;
    let mut engines = CheckReport::new("selftest_graph_vs_polygon_engine");
    let flow_curve = &traj.final_state().expect("trajectory keeps its final state").curve;
    engines.observe(0.01, crate::geometry::hausdorff_distance(&graph_curve, flow_curve), 1e-3);
    out.push(engines);
    Ok(out)
}

fn run_selftest(a: &SelftestArgs) -> CliResult<String> {
    let reports = selftest_reports()?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
        io::write_atomic(&dir.join("checks.csv"), &checks_csv(&reports, &[]))?;
    }
    let mut summary = String::new();
    for r in &reports {
        let _ = writeln!(summary, "{} {} {}", if r.passed() { "PASS" } else { "FAIL" }, r.name, fmt_f64(r.worst_margin));
    }
    check_outcome(&reports, summary.trim_end().to_string())
}

/// Reads a `key = value` file into long flags. `true` / `false` values
/// toggle switches.
fn config_args(path: &Path) -> CliResult<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::config(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Failure::config(format!("{}:{}: invalid key", path.display(), i + 1)));
        }
        match value.trim() {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            v => {
                args.push(format!("--{key}").into());
                args.push(v.into());
            }
        }
    }
    Ok(args)
}

/// Splices the contents of a `--config` file right after the subcommand so
/// that later command-line flags override it.
fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(PathBuf::from(it.next().ok_or_else(|| Failure::config("--config needs a path"))?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let extra = config_args(&path)?;
    let pos = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2)
        .ok_or_else(|| Failure::config("--config given without a command"))?;
    rest.splice(pos..pos, extra);
    Ok(rest)
}

/// Runs the command line and returns the process exit code. Normal output
/// goes to `stdout`, diagnostics and the `ERROR` trailer to `stderr`.
pub fn run(args: Vec<OsString>, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32 {
    let result = expand_config(args).and_then(|args| match Cli::try_parse_from(args) {
        Ok(cli) => {
            let _ = cli.config;
            match &cli.command {
                Command::Evolve(a) => run_evolve(a),
                Command::GraphEvolve(a) => run_graph(a),
                Command::Diagnose(a) => run_diagnose(a),
                Command::Rescale(a) => run_rescale(a),
                Command::Exact(a) => run_exact(a),
                Command::Selftest(a) => run_selftest(a),
            }
        }
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            Ok(String::new())
        }
        Err(e) => {
            let _ = write!(stderr, "{e}");
            Err(Failure::config(format!("invalid arguments ({})", e.kind())))
        }
    });
    match result {
        Ok(summary) => {
            if !summary.is_empty() {
                let _ = writeln!(stdout, "{summary}");
            }
            EXIT_OK
        }
        Err(f) => {
            if !f.output.is_empty() {
                let _ = writeln!(stdout, "{}", f.output);
            }
            let message = f.message.replace('\n', " ");
            let _ = writeln!(stderr, "ERROR {}: {message}", f.code);
            f.code
        }
    }
}
