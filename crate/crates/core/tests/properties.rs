use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use csflow::diagnostics::{self, huisken_functional, RecordOptions, SpacetimePoint};
use csflow::exact::ExactSolutionSpec;
use csflow::flow::{self, advance, evolve, StepControl};
use csflow::geometry::{
    edge_clearance, first_crossing, first_crossing_brute_force, polygon_separation, segment_distance,
};
use csflow::graph_flow::{self, fourier_amplitude, BaseCurveData, GraphStop, VALIDITY_MARGIN};
use csflow::singularity::{self, RescaleFrame};
use csflow::{shapes, DiscreteCurve, PlanePoint};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn star(seed: u64, amplitude: f64, n: usize) -> DiscreteCurve {
    shapes::random_star(7, amplitude, seed, n).unwrap()
}

fn fast() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

fn slow() -> ProptestConfig {
    ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(fast())]

    #[test]
    fn rigid_motions_preserve_geometry(
        seed in any::<u64>(), amp in 0.0..0.5f64, n in 32usize..256,
        angle in -PI..PI, dx in -5.0..5.0f64, dy in -5.0..5.0f64,
    ) {
        let c = star(seed, amp, n);
        let moved = c.rotated(angle).translated(PlanePoint::new(dx, dy));
        let (f, g) = (c.geometry_fields(), moved.geometry_fields());
        prop_assert!(close(c.length(), moved.length(), 1e-12));
        prop_assert!(close(c.enclosed_area(), moved.enclosed_area(), 1e-12));
        // curvature comes from vertex differences: coordinate roundoff of
        // size eps |x| is amplified by 1 / h
        let conditioning = (1.0 + dx.hypot(dy) + 2.0) / f.min_edge();
        for i in 0..n {
            prop_assert!(
                close(f.kappa[i], g.kappa[i], 1e-12 * conditioning),
                "{} {}", f.kappa[i], g.kappa[i]
            );
        }
        let (j, k) = (0, n / 3);
        let (l0, d0) = c.intrinsic_extrinsic(j, k).unwrap();
        let (l1, d1) = moved.intrinsic_extrinsic(j, k).unwrap();
        prop_assert!(close(l0, l1, 1e-12) && close(d0, d1, 1e-12));
        let r0 = diagnostics::distance_ratio(&c).value;
        let r1 = diagnostics::distance_ratio(&moved).value;
        prop_assert!(close(r0, r1, 1e-12));
        let (t0, _) = diagnostics::total_abs_curvature(&c);
        let (t1, _) = diagnostics::total_abs_curvature(&moved);
        prop_assert!(close(t0, t1, 1e-12));
    }

    #[test]
    fn scaling_weights(seed in any::<u64>(), amp in 0.0..0.5f64, n in 32usize..256, lambda in 0.05..20.0f64) {
        let c = star(seed, amp, n);
        let s = c.scaled(lambda);
        let (f, g) = (c.geometry_fields(), s.geometry_fields());
        prop_assert!(close(s.length(), lambda * c.length(), 1e-12));
        prop_assert!(close(s.enclosed_area(), lambda * lambda * c.enclosed_area(), 1e-12));
        for i in 0..n {
            prop_assert!(close(g.kappa[i], f.kappa[i] / lambda, 1e-12));
        }
        let opts = RecordOptions { distance_ratio: true, ..RecordOptions::default() };
        let (a, b) = (diagnostics::record(&c, &f, 0.0, &opts), diagnostics::record(&s, &g, 0.0, &opts));
        prop_assert!(close(b.int_kappa_sq, a.int_kappa_sq / lambda, 1e-12));
        prop_assert!(close(b.kappa_max, a.kappa_max / lambda, 1e-12));
        prop_assert!(close(b.total_abs_curv, a.total_abs_curv, 1e-12));
        prop_assert_eq!(a.inflections, b.inflections);
        prop_assert!(close(diagnostics::distance_ratio(&c).value, diagnostics::distance_ratio(&s).value, 1e-12));
    }

    #[test]
    fn resample_is_idempotent(seed in any::<u64>(), amp in 0.0..0.5f64, n in 32usize..200, m in 16usize..300) {
        let c = star(seed, amp, n);
        let once = c.resample(m).unwrap();
        let twice = once.resample(m).unwrap();
        let shift = once
            .vertices()
            .iter()
            .zip(twice.vertices())
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        prop_assert!(shift < 1e-9, "{}", shift);
    }

    #[test]
    fn grid_crossing_matches_brute_force(
        pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4..160),
    ) {
        let p: Vec<PlanePoint> = pts.iter().map(|&(x, y)| PlanePoint::new(x, y)).collect();
        prop_assert_eq!(first_crossing(&p).is_some(), first_crossing_brute_force(&p).is_some());
    }

    #[test]
    fn grid_crossing_on_jittered_stars(
        seed in any::<u64>(), n in 64usize..400, jitter in 0.0..3.0f64,
        noise in prop::collection::vec(-1.0..1.0f64, 400),
    ) {
        // angular jitter of up to a few vertex spacings reorders vertices
        let c = star(seed, 0.5, n);
        let v: Vec<PlanePoint> = c
            .vertices()
            .iter()
            .zip(&noise)
            .map(|(p, e)| PlanePoint::from_polar(p.norm(), p.y.atan2(p.x) + jitter * e * TAU / n as f64))
            .collect();
        prop_assert_eq!(first_crossing(&v).is_some(), first_crossing_brute_force(&v).is_some());
    }

    #[test]
    fn clearance_matches_brute_force(seed in any::<u64>(), amp in 0.0..0.5f64, n in 16usize..200, cap in 0.01..2.0f64) {
        let c = star(seed, amp, n);
        let p = c.vertices();
        let mut best = cap;
        for i in 0..n {
            for j in i + 2..n {
                if (j + 1) % n == i {
                    continue;
                }
                best = best.min(segment_distance(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]));
            }
        }
        prop_assert!((edge_clearance(p, cap) - best).abs() < 1e-15);
    }

    #[test]
    fn discrete_gauss_bonnet(seed in any::<u64>(), amp in 0.0..0.5f64, n in 256usize..1024) {
        let c = star(seed, amp, n);
        let total = c.geometry_fields().total_curvature();
        prop_assert!((total - TAU).abs() < 1e-3, "{}", total);
    }

    #[test]
    fn exact_samplers_satisfy_equations(t in -6.0..-0.01f64, tc in 0.0..3.0f64, kind in 0usize..4) {
        let (spec, time) = match kind {
            0 => (ExactSolutionSpec::circle(1.5, PlanePoint::new(0.3, -0.2), 256), 0.9 * tc / 3.0),
            1 => (ExactSolutionSpec::grim_reaper(1.2, 256), tc),
            2 => (ExactSolutionSpec::paperclip(256), t),
            _ => (ExactSolutionSpec::hairclip(256), tc),
        };
        let sample = spec.sample(time).unwrap();
        for &p in sample.points() {
            prop_assert!(spec.implicit_residual(time, p).abs() < 1e-10);
        }
    }

    #[test]
    fn paperclip_symmetry(t in -6.0..-0.01f64) {
        let sample = ExactSolutionSpec::paperclip(512).sample(t).unwrap();
        let pts = sample.points();
        for &p in pts {
            for q in [PlanePoint::new(-p.x, p.y), PlanePoint::new(p.x, -p.y)] {
                let nearest = pts.iter().map(|r| r.distance(q)).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest < 1e-12, "{}", nearest);
            }
        }
    }

    #[test]
    fn hairclip_flattens_late(t in 10.0..30.0f64) {
        let sample = ExactSolutionSpec::hairclip(512).sample(t).unwrap();
        let sup = sample.points().iter().map(|p| p.y.abs()).fold(0.0, f64::max);
        prop_assert!(sup < 1e-3);
    }

    #[test]
    fn rescaling_composes(
        seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64, t_sing in 0.1..2.0f64,
        lambda in 0.5..8.0f64, mu in 0.5..8.0f64,
    ) {
        let c = star(seed, 0.3, 64);
        let x0 = PlanePoint::new(x, y);
        let a = RescaleFrame::new(x0, t_sing, lambda).unwrap();
        let b = RescaleFrame::new(PlanePoint::ORIGIN, 0.0, mu).unwrap();
        let ab = RescaleFrame::new(x0, t_sing, lambda * mu).unwrap();
        let twice = b.map_curve(&a.map_curve(&c));
        let once = ab.map_curve(&c);
        for (p, q) in twice.vertices().iter().zip(once.vertices()) {
            prop_assert!(p.distance(*q) < 1e-12 * (1.0 + q.norm()));
        }
        let t = t_sing - 0.05;
        prop_assert!(close(b.rescaled_time(a.rescaled_time(t)), ab.rescaled_time(t), 1e-12));
    }

    #[test]
    fn huisken_functional_is_parabolically_invariant(
        seed in any::<u64>(), x in -0.5..0.5f64, y in -0.5..0.5f64, lambda in 0.5..6.0f64, gap in 0.05..1.0f64,
    ) {
        let c = star(seed, 0.3, 512);
        let t = 0.0;
        let center = SpacetimePoint::new(PlanePoint::new(x, y), t + gap);
        let frame = RescaleFrame::new(center.x0, center.t0, lambda).unwrap();
        let before = huisken_functional(&c, &center, t).unwrap();
        let after = huisken_functional(
            &frame.map_curve(&c),
            &SpacetimePoint::new(PlanePoint::ORIGIN, 0.0),
            frame.rescaled_time(t),
        )
        .unwrap();
        prop_assert!((before - after).abs() < 1e-6 * before.max(1.0), "{} {}", before, after);
    }

    #[test]
    fn huisken_functional_rigid_invariance(seed in any::<u64>(), angle in -PI..PI, dx in -3.0..3.0f64, gap in 0.05..1.0f64) {
        let c = star(seed, 0.3, 256);
        let shift = PlanePoint::new(dx, -dx / 2.0);
        let center = SpacetimePoint::new(PlanePoint::new(0.1, 0.2), gap);
        let moved_center = SpacetimePoint::new(center.x0.rotated(angle) + shift, gap);
        let a = huisken_functional(&c, &center, 0.0).unwrap();
        let b = huisken_functional(&c.rotated(angle).translated(shift), &moved_center, 0.0).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }
}

proptest! {
    #![proptest_config(slow())]

    #[test]
    fn nested_curves_stay_apart(seed_in in any::<u64>(), seed_out in any::<u64>(), amp in 0.0..0.3f64) {
        let mut inner = star(seed_in, amp, 96).scaled(0.5);
        let mut outer = star(seed_out, amp, 128);
        let control = StepControl::default();
        let mut gap = polygon_separation(&inner, &outer);
        prop_assert!(gap > 0.0);
        for _ in 0..400 {
            let (fi, fo) = (inner.geometry_fields(), outer.geometry_fields());
            let dt = control.time_step(&fi, 0.0).min(control.time_step(&fo, 0.0));
            inner = advance(&inner, &fi, dt).unwrap();
            outer = advance(&outer, &fo, dt).unwrap();
            let next = polygon_separation(&inner, &outer);
            prop_assert!(next >= gap - 1e-6, "{} -> {}", gap, next);
            gap = next;
        }
    }

    #[test]
    fn star_runs_obey_flow_laws(seed in any::<u64>(), amp in 0.0..0.5f64) {
        let c = star(seed, amp, 128);
        let control = StepControl { kappa_stop: 20.0, ..StepControl::default() };
        let traj = evolve(&c, &control, 100).unwrap();
        for s in &traj.snapshots {
            prop_assert!(s.state.curve.is_embedded());
        }
        prop_assert!(diagnostics::length_monotone_check(&traj).passed());
        prop_assert!(diagnostics::area_law_check(&traj).passed());
        prop_assert!(diagnostics::distance_ratio_monotonicity_check(&traj).passed());
        prop_assert!(diagnostics::total_abs_curvature_check(&traj).passed());
        // step-wise area identity dA/dt = -2 pi away from remeshes
        let flags = traj.remesh_flags();
        for (k, w) in traj.records.windows(2).enumerate() {
            if !flags[k + 1] {
                let rate = (w[1].area - w[0].area) / (w[1].t - w[0].t);
                prop_assert!((rate + TAU).abs() < 1e-2 * TAU, "{}", rate);
            }
        }
    }

    #[test]
    fn convex_runs_stay_convex(a in 1.0..3.0f64, b in 0.5..1.0f64) {
        let c = shapes::ellipse_arclength(a, b, 128).unwrap();
        let control = StepControl { kappa_stop: 20.0, ..StepControl::default() };
        let traj = evolve(&c, &control, 100).unwrap();
        for r in &traj.records {
            prop_assert!(r.kappa_min >= -1e-9);
        }
        prop_assert!(diagnostics::harnack_check(&traj).passed());
        prop_assert!(flow::convexity_monotone_check(&traj, 0.0).passed());
    }

    #[test]
    fn huisken_nonincreasing_for_late_centres(x in -1.0..1.0f64, y in -1.0..1.0f64, late in 0.0..0.5f64) {
        let c = shapes::ellipse_arclength(2.0, 1.0, 256).unwrap();
        let control = StepControl { t_max: 0.3, ..StepControl::default() };
        let traj = evolve(&c, &control, 500).unwrap();
        let center = SpacetimePoint::new(PlanePoint::new(x, y), traj.end_time() + 0.01 + late);
        let (mono, _) = diagnostics::huisken_monotonicity_check(&traj, &center).unwrap();
        prop_assert!(mono.passed(), "{:?}", mono.worst_margin);
    }

    #[test]
    fn graph_states_respect_validity(amp in -0.4..0.4f64, mode in 2usize..6) {
        let m = 128;
        let base = BaseCurveData::circle(1.0, m).unwrap();
        let u0: Vec<f64> = (0..m).map(|j| amp * (mode as f64 * TAU * j as f64 / m as f64).cos()).collect();
        let run = graph_flow::graph_evolve(&base, &u0, 0.3, 0.5 * base.stable_dt(&u0), 10).unwrap();
        prop_assert!(run.stop != GraphStop::Unstable);
        for s in &run.states {
            prop_assert!(base.validity(&s.u) <= VALIDITY_MARGIN);
        }
    }

    #[test]
    fn circle_modes_do_not_grow(amp in 0.001..0.02f64, mode in 2usize..7) {
        let m = 128;
        let base = BaseCurveData::circle(1.0, m).unwrap();
        let u0: Vec<f64> = (0..m).map(|j| amp * (mode as f64 * TAU * j as f64 / m as f64).sin()).collect();
        let run = graph_flow::graph_evolve(&base, &u0, 0.1, base.stable_dt(&u0), 5).unwrap();
        let amps: Vec<f64> = run.states.iter().map(|s| fourier_amplitude(&s.u, mode)).collect();
        for w in amps.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn type1_rate_is_scale_invariant(lambda in 0.5..10.0f64, x in -1.0..1.0f64) {
        let c = shapes::ellipse_arclength(2.0, 1.0, 128).unwrap();
        let traj = evolve(&c, &StepControl { t_max: 0.5, ..StepControl::default() }, 50).unwrap();
        let t_sing = flow::ExtinctionEstimate::FinalArea.estimate(&traj).unwrap() + 0.1;
        let frame = RescaleFrame::new(PlanePoint::new(x, 0.0), t_sing, lambda).unwrap();
        let scaled = singularity::rescale_trajectory(&traj, &frame);
        let a = singularity::type1_rate(&traj, t_sing).unwrap();
        let b = singularity::type1_rate(&scaled, 0.0).unwrap();
        for ((_, u), (_, v)) in a.series.iter().zip(&b.series) {
            prop_assert!((u - v).abs() < 1e-9 * u.max(1.0));
        }
    }
}
