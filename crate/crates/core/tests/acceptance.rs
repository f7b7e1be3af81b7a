//! Acceptance suite: one line per criterion, exit status 1 if any fails.
//! Runs without the libtest harness so the lines always reach the output.

use std::f64::consts::{E, TAU};
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use csflow::diagnostics::{self, huisken_functional, CheckReport, SpacetimePoint};
use csflow::exact::{self, ExactSolutionSpec};
use csflow::flow::{self, evolve, ExtinctionEstimate, KappaMinBound, StepControl, Trajectory};
use csflow::geometry::hausdorff_distance;
use csflow::graph_flow::{self, BaseCurveData, GraphState};
use csflow::io::fmt_f64;
use csflow::singularity::{self, RescaleFrame};
use csflow::{shapes, DiscreteCurve, PlanePoint};

const STRIDE: usize = 1000;

struct Runs {
    circle: Trajectory,
    circle_secs: f64,
    ellipse: Trajectory,
    rounded: Trajectory,
    flower: Trajectory,
    flower_secs: f64,
    wiggly: Trajectory,
}

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn timed_run(curve: &DiscreteCurve, kappa_stop: f64) -> (Trajectory, f64) {
    let start = Instant::now();
    let control = StepControl { kappa_stop, ..StepControl::default() };
    let traj = evolve(curve, &control, STRIDE).expect("flow run failed");
    (traj, start.elapsed().as_secs_f64())
}

fn margins(reports: &[(&str, &CheckReport)]) -> String {
    reports
        .iter()
        .map(|(run, r)| format!("{run}:{}={:.3e}", r.name, r.worst_margin))
        .collect::<Vec<_>>()
        .join(" ")
}

fn produce(dir: &Path) -> (Runs, Vec<Outcome>) {
    let (circle, circle_secs) = timed_run(&shapes::circle(1.0, PlanePoint::ORIGIN, 512).unwrap(), 100.0);
    circle.write_dir(&dir.join("circle")).unwrap();
    let (ellipse, _) = timed_run(&shapes::ellipse_arclength(2.0, 1.0, 512).unwrap(), 1000.0);
    ellipse.write_dir(&dir.join("ellipse")).unwrap();
    let (rounded, _) = timed_run(&shapes::rounded_square(2.0, 0.25, 512).unwrap(), 100.0);
    rounded.write_dir(&dir.join("rounded_square")).unwrap();
    let (flower, flower_secs) = timed_run(&shapes::flower(3, 0.25, 1.0, 1024).unwrap(), 100.0);
    flower.write_dir(&dir.join("flower")).unwrap();
    let (wiggly, _) = timed_run(&shapes::flower(5, 0.5, 1.0, 512).unwrap(), 100.0);
    wiggly.write_dir(&dir.join("wiggly_flower")).unwrap();
    let runs = Runs { circle, circle_secs, ellipse, rounded, flower, flower_secs, wiggly };
    let outcomes = evaluate(&runs, dir);
    let mut metrics = String::from("criterion,result,detail\n");
    for o in &outcomes {
        let _ = writeln!(metrics, "{},{},\"{}\"", o.id, if o.pass { "pass" } else { "fail" }, o.detail);
    }
    fs::write(dir.join("metrics.csv"), metrics).unwrap();
    (runs, outcomes)
}

fn evaluate(r: &Runs, dir: &Path) -> Vec<Outcome> {
    let mut out = Vec::new();

    // 1. circle law
    let mut worst = 0.0f64;
    for s in r.circle.snapshots.iter().filter(|s| s.state.t <= 0.49) {
        let exact = (1.0 - 2.0 * s.state.t).sqrt();
        worst = worst.max((flow::mean_radius(&s.state.curve) - exact).abs() / exact);
    }
    let reached = r.circle.snapshots.iter().any(|s| s.state.t > 0.49);
    out.push(Outcome {
        id: 1,
        name: "circle law",
        pass: worst <= 1e-3 && reached,
        detail: format!("max relative radius error {worst:.3e} (tol 1e-3) over t in [0, 0.49]"),
    });

    // 2. area law
    let area: Vec<(&str, CheckReport)> = [("circle", &r.circle), ("ellipse", &r.ellipse), ("rounded_square", &r.rounded)]
        .iter()
        .map(|(n, t)| (*n, diagnostics::area_law_check(t)))
        .collect();
    out.push(Outcome {
        id: 2,
        name: "area law",
        pass: area.iter().all(|(_, c)| c.passed()),
        detail: format!("{} (tol 1e-2 relative)", margins(&area.iter().map(|(n, c)| (*n, c)).collect::<Vec<_>>())),
    });

    // 3. length dissipation
    let all = [
        ("circle", &r.circle),
        ("ellipse", &r.ellipse),
        ("rounded_square", &r.rounded),
        ("flower", &r.flower),
        ("wiggly_flower", &r.wiggly),
    ];
    let length: Vec<(&str, CheckReport)> = all.iter().map(|(n, t)| (*n, diagnostics::length_dissipation_check(t))).collect();
    out.push(Outcome {
        id: 3,
        name: "length dissipation",
        pass: length.iter().all(|(_, c)| c.passed()),
        detail: format!("{} (tol 5% relative)", margins(&length.iter().map(|(n, c)| (*n, c)).collect::<Vec<_>>())),
    });

    // 4. Huisken monotonicity
    let x0 = singularity::detect_blowup_point(&r.ellipse).unwrap();
    let t_sing = ExtinctionEstimate::FinalArea.estimate(&r.ellipse).unwrap();
    let (mono, _rate) = diagnostics::huisken_monotonicity_check(&r.ellipse, &SpacetimePoint::new(x0, t_sing)).unwrap();
    let circle_center = SpacetimePoint::new(PlanePoint::ORIGIN, ExtinctionEstimate::FinalArea.estimate(&r.circle).unwrap());
    let target = (TAU / E).sqrt();
    let circle_dev = r
        .circle
        .snapshots
        .iter()
        .map(|s| (huisken_functional(&s.state.curve, &circle_center, s.state.t).unwrap() - target).abs())
        .fold(0.0, f64::max);
    out.push(Outcome {
        id: 4,
        name: "Huisken monotonicity",
        pass: mono.passed() && circle_dev <= 1e-3,
        detail: format!(
            "ellipse X0=({:.3e},{:.3e}) T={:.6} worst margin {:.3e} (slack 1e-5); circle max |Theta - sqrt(2pi/e)| {circle_dev:.3e} (tol 1e-3)",
            x0.x, x0.y, t_sing, mono.worst_margin
        ),
    });

    // 5. distance ratio
    let ratio: Vec<(&str, CheckReport)> = [("circle", &r.circle), ("ellipse", &r.ellipse), ("flower", &r.flower), ("wiggly_flower", &r.wiggly)]
        .iter()
        .map(|(n, t)| (*n, diagnostics::distance_ratio_monotonicity_check(t)))
        .collect();
    let circle_r = r
        .circle
        .records
        .iter()
        .filter_map(|x| x.r_ratio)
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let wiggly_r0 = r.wiggly.records[0].r_ratio.unwrap_or(f64::NAN);
    out.push(Outcome {
        id: 5,
        name: "distance-ratio monotonicity",
        pass: ratio.iter().all(|(_, c)| c.passed()) && circle_r <= 1e-4,
        detail: format!(
            "{} (slack 1e-4); circle max |R-1| {circle_r:.3e} (tol 1e-4); wiggly R(0)={wiggly_r0:.3}",
            margins(&ratio.iter().map(|(n, c)| (*n, c)).collect::<Vec<_>>())
        ),
    });

    // 6. Harnack
    let harnack = diagnostics::harnack_check(&r.ellipse);
    out.push(Outcome {
        id: 6,
        name: "Harnack bound",
        pass: harnack.passed(),
        detail: format!("ellipse max F margin {:.3e} below 1/2 + 1e-2 over {} records", harnack.worst_margin, harnack.evaluated),
    });

    // 7. total absolute curvature
    let flower_tac = diagnostics::total_abs_curvature_check(&r.flower);
    let gb: Vec<(&str, CheckReport)> =
        [("circle", &r.circle), ("ellipse", &r.ellipse)].iter().map(|(n, t)| (*n, diagnostics::gauss_bonnet_check(t, 1e-3))).collect();
    out.push(Outcome {
        id: 7,
        name: "total absolute curvature",
        pass: flower_tac.passed() && gb.iter().all(|(_, c)| c.passed()),
        detail: format!(
            "flower nonincreasing margin {:.3e} (slack 1e-4); {} (2pi +- 1e-3)",
            flower_tac.worst_margin,
            margins(&gb.iter().map(|(n, c)| (*n, c)).collect::<Vec<_>>())
        ),
    });

    // 8. Grayson convergence at desk scale
    let fx0 = singularity::detect_blowup_point(&r.flower).unwrap();
    let ft = ExtinctionEstimate::FinalArea.estimate(&r.flower).unwrap();
    let mut pass8 = true;
    let mut detail8 = String::new();
    let mut table = String::from("lambda,t_rescaled,fit_radius,deviation_ratio,shrinker_residual\n");
    for lambda in [8.0, 16.0] {
        let frame = RescaleFrame::new(fx0, ft, lambda).unwrap();
        let rep = singularity::analyze_slice(&r.flower, &frame, -1.0).unwrap();
        pass8 &= rep.roundness.deviation_ratio < 1e-2 && rep.shrinker_residual < 0.05;
        let _ = write!(
            detail8,
            "lambda={lambda}: deviation {:.3e} (tol 1e-2) shrinker residual {:.3e} (tol 0.05); ",
            rep.roundness.deviation_ratio, rep.shrinker_residual
        );
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            fmt_f64(lambda),
            fmt_f64(-1.0),
            fmt_f64(rep.roundness.fit_radius),
            fmt_f64(rep.roundness.deviation_ratio),
            fmt_f64(rep.shrinker_residual)
        );
    }
    fs::write(dir.join("flower_roundness.csv"), table).unwrap();
    let type1 = singularity::type1_rate(&r.flower, ft).unwrap();
    pass8 &= type1.sup < 10.0;
    let _ = write!(detail8, "type I sup {:.3} (< 10)", type1.sup);
    out.push(Outcome { id: 8, name: "Grayson convergence", pass: pass8, detail: detail8 });

    // 9. engine cross-validation
    let m = 1024;
    let base = BaseCurveData::ellipse(2.0, 1.0, m).unwrap();
    let u0 = vec![0.0; m];
    let run = graph_flow::graph_evolve(&base, &u0, 0.01, base.stable_dt(&u0), usize::MAX).unwrap();
    let graph_curve = graph_flow::to_curve(run.final_state(), &base).unwrap();
    let start = graph_flow::to_curve(&GraphState::new(u0, 0.0), &base).unwrap();
    let polygon = evolve(&start, &StepControl { t_max: 0.01, ..StepControl::default() }, usize::MAX).unwrap();
    let dist = hausdorff_distance(&graph_curve, &polygon.final_state().unwrap().curve);
    out.push(Outcome {
        id: 9,
        name: "engine cross-validation",
        pass: dist < 1e-3 && polygon.remesh_count() == 0,
        detail: format!("Hausdorff distance at t=0.01, n=1024: {dist:.3e} (tol 1e-3)"),
    });

    // 10. exact-solution residuals
    let h = exact::DEFAULT_TIME_STEP;
    let rc = exact::normal_velocity_residual(&ExactSolutionSpec::circle(1.0, PlanePoint::ORIGIN, 1024), 0.0, h).unwrap();
    let rg = exact::normal_velocity_residual(&ExactSolutionSpec::grim_reaper(1.2, 1024), 0.0, h).unwrap();
    let rp = exact::normal_velocity_residual(&ExactSolutionSpec::paperclip(1024), -3.0, h).unwrap();
    let roundness: Vec<f64> =
        [-2.0, -0.5, -0.1, -0.01].iter().map(|&t| exact::paperclip_extinction_roundness(t, 1024).unwrap()).collect();
    let decreasing = roundness.windows(2).all(|w| w[1] < w[0]);
    out.push(Outcome {
        id: 10,
        name: "exact-solution residuals",
        pass: rc < 1e-3 && rg < 1e-3 && rp < 1e-2 && decreasing,
        detail: format!(
            "circle {rc:.3e}, grim reaper {rg:.3e} (tol 1e-3); paperclip {rp:.3e} (tol 1e-2); paperclip roundness {:?}",
            roundness.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    });

    // 11. convexity and kappa_min bound
    let mono = flow::convexity_monotone_check(&r.ellipse, 0.0);
    let displayed = flow::kappa_min_bound_check(&r.ellipse, KappaMinBound::Displayed).unwrap();
    let sharp = flow::kappa_min_bound_check(&r.ellipse, KappaMinBound::Sharp).unwrap();
    let convex = r.ellipse.records.iter().all(|x| x.kappa_min > 0.0);
    out.push(Outcome {
        id: 11,
        name: "convexity and kappa_min bound",
        pass: convex && mono.passed() && displayed.passed() && sharp.passed(),
        detail: format!(
            "kappa_min nondecreasing margin {:.3e}; displayed bound margin {:.3e}, sharp bound margin {:.3e} (slack 1%)",
            mono.worst_margin, displayed.worst_margin, sharp.worst_margin
        ),
    });
    out
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    let (mut fa, mut fb) = (fs::File::open(a).unwrap(), fs::File::open(b).unwrap());
    if fa.metadata().unwrap().len() != fb.metadata().unwrap().len() {
        return false;
    }
    let (mut ba, mut bb) = (vec![0u8; 1 << 20], vec![0u8; 1 << 20]);
    loop {
        let na = fa.read(&mut ba).unwrap();
        if na == 0 {
            return true;
        }
        fb.read_exact(&mut bb[..na]).unwrap();
        if ba[..na] != bb[..na] {
            return false;
        }
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let scratch = tempfile::tempdir().unwrap();
    let (first, second) = (scratch.path().join("first"), scratch.path().join("second"));
    let (runs, mut outcomes) = produce(&first);
    println!(
        "runs: circle {:.1} s, flower {:.1} s, {} flower records",
        runs.circle_secs,
        runs.flower_secs,
        runs.flower.records.len()
    );
    if let Some(o) = outcomes.iter_mut().find(|o| o.id == 1) {
        o.pass &= runs.circle_secs <= 60.0;
        let _ = write!(o.detail, "; runtime {:.1} s (<= 60 s)", runs.circle_secs);
    }
    if let Some(o) = outcomes.iter_mut().find(|o| o.id == 8) {
        o.pass &= runs.flower_secs <= 600.0;
        let _ = write!(o.detail, "; runtime {:.0} s (<= 600 s)", runs.flower_secs);
    }
    drop(runs);
    let _ = produce(&second);
    let (fa, fb) = (files_under(&first), files_under(&second));
    let mismatched: Vec<String> = if fa != fb {
        vec!["file lists differ".into()]
    } else {
        fa.iter()
            .filter(|p| !same_bytes(&first.join(p), &second.join(p)))
            .map(|p| p.display().to_string())
            .collect()
    };
    outcomes.push(Outcome {
        id: 12,
        name: "determinism",
        pass: mismatched.is_empty() && !fa.is_empty(),
        detail: format!("{} artifact files compared byte for byte, {} differ {:?}", fa.len(), mismatched.len(), mismatched),
    });

    let mut failed = 0;
    for o in &outcomes {
        println!("ACCEPTANCE {:>2} {} {}: {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
