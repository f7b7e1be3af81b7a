use csflow::flow::{evolve, StepControl};
use csflow::geometry::hausdorff_distance;
use csflow::graph_flow::{graph_curvature, graph_evolve, to_curve, BaseCurveData, GraphState, GraphStop};
use std::f64::consts::TAU;

fn engines_on_ellipse(m: usize, t: f64) -> f64 {
    let base = BaseCurveData::ellipse(2.0, 1.0, m).unwrap();
    let u0 = vec![0.0; m];
    let dt = base.stable_dt(&u0);
    let run = graph_evolve(&base, &u0, t, dt, usize::MAX).unwrap();
    assert_eq!(run.stop, GraphStop::Completed);
    let graph_curve = to_curve(run.final_state(), &base).unwrap();

    let control = StepControl { t_max: t, ..StepControl::default() };
    let traj = evolve(&base_polygon(&base), &control, usize::MAX).unwrap();
    assert_eq!(traj.remesh_count(), 0);
    let flow_curve = &traj.final_state().unwrap().curve;
    assert!((traj.end_time() - t).abs() < 1e-15);
    hausdorff_distance(&graph_curve, flow_curve)
}

fn base_polygon(base: &BaseCurveData) -> csflow::DiscreteCurve {
    to_curve(&GraphState::new(vec![0.0; base.len()], 0.0), base).unwrap()
}

#[test]
fn graph_and_polygon_engines_agree_on_ellipse() {
    let d = engines_on_ellipse(1024, 0.01);
    assert!(d < 1e-3, "hausdorff {d}");
}

#[test]
fn engine_gap_shrinks_with_resolution() {
    let coarse = engines_on_ellipse(128, 0.01);
    let fine = engines_on_ellipse(256, 0.01);
    assert!(fine < 0.5 * coarse, "{coarse} -> {fine}");
}

fn curvature_gap(m: usize) -> f64 {
    let base = BaseCurveData::ellipse(2.0, 1.0, m).unwrap();
    let u: Vec<f64> = (0..m)
        .map(|j| {
            let x = TAU * j as f64 / m as f64;
            0.05 * (2.0 * x).cos() + 0.03 * (5.0 * x).sin()
        })
        .collect();
    let state = GraphState::new(u, 0.0);
    let graph = graph_curvature(&state, &base).unwrap();
    let polygon = to_curve(&state, &base).unwrap().geometry_fields().kappa;
    graph.iter().zip(&polygon).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn graph_curvature_matches_polygon_curvature_at_second_order() {
    let e: Vec<f64> = [128, 256, 512].iter().map(|&m| curvature_gap(m)).collect();
    assert!(e[2] < 1e-3, "{e:?}");
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "{e:?} order {order}");
    }
}

#[test]
fn graph_trajectory_reloads() {
    let base = BaseCurveData::circle(1.0, 64).unwrap();
    let dt = base.stable_dt(&vec![0.0; 64]);
    let run = graph_evolve(&base, &vec![0.0; 64], 0.05, dt, 100).unwrap();
    let traj = run.to_trajectory(&base, &Default::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    traj.write_dir(dir.path()).unwrap();
    let back = csflow::flow::Trajectory::read_dir(dir.path()).unwrap();
    assert_eq!(back.snapshots.len(), traj.snapshots.len());
    assert_eq!(back.stop_event().unwrap().kind.name(), "stop_tmax");
}
