//! Lagrangian curve shortening: every vertex moves by `dt kappa_i N_i`.
//!
//! The step is explicit Euler with `dt = cfl h_min^2`. The vertex count is
//! fixed for a run; whenever the edge-length ratio exceeds the remesh
//! trigger the polygon is resampled to the same count and a
//! [`EventKind::Remesh`] event is logged.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{self, CheckReport, DiagnosticRecord, RecordOptions, SpacetimePoint, RECORDS_HEADER};
use crate::error::{Error, Result};
use crate::geometry::{edge_clearance, first_crossing, DiscreteCurve, GeometryFields, MIN_VERTICES};
use crate::io::{self, fmt_f64};

/// Vertex count policy for a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VertexSpacing {
    /// Keep the input vertex count.
    Auto,
    /// Resample the initial curve to `round(L / h)` vertices (at least 16).
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub remesh_ratio: f64,
    pub target_vertex_spacing: VertexSpacing,
    pub kappa_stop: f64,
    pub area_stop: f64,
    pub t_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.25,
            dt_max: 1e-2,
            remesh_ratio: 3.0,
            target_vertex_spacing: VertexSpacing::Auto,
            kappa_stop: 1e3,
            area_stop: 1e-10,
            t_max: 1e6,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("cfl", self.cfl)?;
        if self.cfl > 0.5 {
            return Err(Error::param("cfl", format!("must not exceed 0.5, got {}", self.cfl)));
        }
        positive("dt_max", self.dt_max)?;
        positive("kappa_stop", self.kappa_stop)?;
        positive("area_stop", self.area_stop)?;
        positive("t_max", self.t_max)?;
        if !(self.remesh_ratio > 1.0 && self.remesh_ratio.is_finite()) {
            return Err(Error::param("remesh_ratio", format!("must exceed 1, got {}", self.remesh_ratio)));
        }
        if let VertexSpacing::Fixed(h) = self.target_vertex_spacing {
            positive("target_vertex_spacing", h)?;
        }
        Ok(())
    }

    /// `min(dt_max, cfl h_min^2, t_max - t)`.
    pub fn time_step(&self, fields: &GeometryFields, t: f64) -> f64 {
        let h = fields.min_edge();
        self.dt_max.min(self.cfl * h * h).min(self.t_max - t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub curve: DiscreteCurve,
    pub t: f64,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve, t: f64) -> Self {
        FlowState { curve, t }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Remesh,
    StopCurvature,
    StopArea,
    StopTmax,
    StopEmbeddedness,
    /// Graph engine left its validity region.
    StopValidity,
    /// Graph engine detected numerical blowup.
    StopUnstable,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Remesh => "remesh",
            EventKind::StopCurvature => "stop_curvature",
            EventKind::StopArea => "stop_area",
            EventKind::StopTmax => "stop_tmax",
            EventKind::StopEmbeddedness => "stop_embeddedness",
            EventKind::StopValidity => "stop_validity",
            EventKind::StopUnstable => "stop_unstable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "remesh" => EventKind::Remesh,
            "stop_curvature" => EventKind::StopCurvature,
            "stop_area" => EventKind::StopArea,
            "stop_tmax" => EventKind::StopTmax,
            "stop_embeddedness" => EventKind::StopEmbeddedness,
            "stop_validity" => EventKind::StopValidity,
            "stop_unstable" => EventKind::StopUnstable,
            _ => return None,
        })
    }

    pub fn is_stop(self) -> bool {
        self != EventKind::Remesh
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    /// Index of the record (step) at which the event happened.
    pub step: usize,
    pub kind: EventKind,
    /// Human-readable cause, e.g. the error behind `stop_embeddedness`.
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: FlowState,
}

/// Curve at an arbitrary time recovered from snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatedCurve {
    pub curve: DiscreteCurve,
    /// The bracketing snapshots straddle a remesh, so the nearer one was
    /// used instead of interpolating.
    pub across_remesh: bool,
}

/// Snapshots, events and one [`DiagnosticRecord`] per step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<Event>,
    pub records: Vec<DiagnosticRecord>,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.snapshots.first().map_or(0.0, |s| s.state.t)
    }

    pub fn end_time(&self) -> f64 {
        let snap = self.snapshots.last().map_or(f64::NEG_INFINITY, |s| s.state.t);
        let rec = self.records.last().map_or(f64::NEG_INFINITY, |r| r.t);
        snap.max(rec)
    }

    pub fn final_state(&self) -> Option<&FlowState> {
        self.snapshots.last().map(|s| &s.state)
    }

    pub fn stop_event(&self) -> Option<&Event> {
        self.events.iter().rev().find(|e| e.kind.is_stop())
    }

    pub fn remesh_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Remesh).count()
    }

    /// Per record: whether the step that produced it ended in a remesh.
    pub fn remesh_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.records.len()];
        for e in self.events.iter().filter(|e| e.kind == EventKind::Remesh) {
            if let Some(flag) = flags.get_mut(e.step) {
                *flag = true;
            }
        }
        flags
    }

    /// True when a remesh happened in `(ta, tb]`.
    pub fn remesh_between(&self, ta: f64, tb: f64) -> bool {
        self.events
            .iter()
            .any(|e| e.kind == EventKind::Remesh && e.t > ta && e.t <= tb)
    }

    /// Curve at time `t`: linear in vertex positions between the bracketing
    /// snapshots, or the nearer snapshot when a remesh lies between them.
    pub fn curve_at(&self, t: f64) -> Result<InterpolatedCurve> {
        let (start, end) = (self.start_time(), self.snapshots.last().map_or(f64::NAN, |s| s.state.t));
        if self.snapshots.is_empty() || !(t >= start && t <= end) {
            return Err(Error::OutOfSpan { t, start, end });
        }
        let hi = self.snapshots.partition_point(|s| s.state.t < t);
        let b = &self.snapshots[hi];
        if b.state.t == t || hi == 0 {
            return Ok(InterpolatedCurve {
                curve: b.state.curve.clone(),
                across_remesh: false,
            });
        }
        let a = &self.snapshots[hi - 1];
        let (ta, tb) = (a.state.t, b.state.t);
        if self.remesh_between(ta, tb) || a.state.curve.len() != b.state.curve.len() {
            let nearer = if t - ta <= tb - t { a } else { b };
            return Ok(InterpolatedCurve {
                curve: nearer.state.curve.clone(),
                across_remesh: true,
            });
        }
        let w = (t - ta) / (tb - ta);
        let vertices = a
            .state
            .curve
            .vertices()
            .iter()
            .zip(b.state.curve.vertices())
            .map(|(p, q)| p.lerp(*q, w))
            .collect();
        Ok(InterpolatedCurve {
            curve: DiscreteCurve::new(vertices)?,
            across_remesh: false,
        })
    }

    /// Writes `snapshots/curve_<step:08>.csv`, `records.csv` and
    /// `events.csv` under `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        for s in &self.snapshots {
            io::write_curve(&snapshot_path(dir, s.step), &s.state.curve)?;
        }
        io::write_atomic_with(&dir.join("records.csv"), |out| {
            writeln!(out, "{RECORDS_HEADER}")?;
            for r in &self.records {
                writeln!(out, "{}", r.to_csv_row())?;
            }
            Ok(())
        })?;
        let mut ev = String::from("t,kind\n");
        for e in &self.events {
            let _ = writeln!(ev, "{},{}", fmt_f64(e.t), e.kind.name());
        }
        io::write_atomic(&dir.join("events.csv"), &ev)
    }

    /// Loads a trajectory directory.
    ///
    /// Snapshot files are matched to rows of `records.csv` by step index.
    /// When `records.csv` is missing or too short for that, the records are
    /// rebuilt from the snapshots alone (one row per snapshot) and the steps
    /// renumbered. Snapshot times come from the records when available;
    /// otherwise snapshots are spaced by their file order.
    pub fn read_dir(dir: &Path) -> Result<Trajectory> {
        let snap_dir = dir.join("snapshots");
        let mut files: Vec<(usize, std::path::PathBuf)> = Vec::new();
        for entry in fs::read_dir(&snap_dir).map_err(|e| Error::io(&snap_dir, e))? {
            let path = entry.map_err(|e| Error::io(&snap_dir, e))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if let Some(step) = name
                .strip_prefix("curve_")
                .and_then(|s| s.strip_suffix(".csv"))
                .and_then(|s| s.parse::<usize>().ok())
            {
                files.push((step, path));
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(Error::param("trajectory", format!("no snapshot files in {}", snap_dir.display())));
        }

        let records_path = dir.join("records.csv");
        let records = if records_path.exists() {
            let text = io::read_to_string(&records_path)?;
            let mut rows = Vec::new();
            for (idx, line) in text.lines().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                rows.push(DiagnosticRecord::from_csv_row(line).map_err(|message| Error::Parse {
                    path: records_path.clone(),
                    line: idx + 1,
                    message,
                })?);
            }
            rows
        } else {
            Vec::new()
        };

        let max_step = files.last().map_or(0, |f| f.0);
        let mut traj = Trajectory::default();
        if records.len() > max_step {
            for (step, path) in &files {
                let curve = io::read_curve(path)?;
                traj.snapshots.push(Snapshot {
                    step: *step,
                    state: FlowState::new(curve, records[*step].t),
                });
            }
            traj.records = records;
        } else {
            for (k, (_, path)) in files.iter().enumerate() {
                let curve = io::read_curve(path)?;
                let t = records.get(k).map_or(k as f64, |r| r.t);
                let fields = curve.geometry_fields();
                let opts = RecordOptions {
                    distance_ratio: true,
                    ..RecordOptions::default()
                };
                traj.records.push(diagnostics::record(&curve, &fields, t, &opts));
                traj.snapshots.push(Snapshot {
                    step: k,
                    state: FlowState::new(curve, t),
                });
            }
        }

        let events_path = dir.join("events.csv");
        if events_path.exists() {
            let text = io::read_to_string(&events_path)?;
            for (idx, line) in text.lines().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                let parse_err = |message: String| Error::Parse {
                    path: events_path.clone(),
                    line: idx + 1,
                    message,
                };
                let (ts, kind) = line
                    .split_once(',')
                    .ok_or_else(|| parse_err(format!("expected `t,kind`, found `{line}`")))?;
                let t: f64 = ts.trim().parse().map_err(|e| parse_err(format!("`{ts}`: {e}")))?;
                let kind = EventKind::parse(kind.trim()).ok_or_else(|| parse_err(format!("unknown event `{kind}`")))?;
                let step = traj.records.partition_point(|r| r.t < t).min(traj.records.len().saturating_sub(1));
                traj.events.push(Event {
                    t,
                    step,
                    kind,
                    detail: None,
                });
            }
        }
        Ok(traj)
    }
}

fn snapshot_path(dir: &Path, step: usize) -> std::path::PathBuf {
    dir.join("snapshots").join(format!("curve_{step:08}.csv"))
}

/// Moves every vertex by `dt kappa_i N_i` and validates the result.
pub fn advance(curve: &DiscreteCurve, fields: &GeometryFields, dt: f64) -> Result<DiscreteCurve> {
    let moved = curve
        .vertices()
        .iter()
        .zip(fields.kappa.iter().zip(&fields.normal))
        .map(|(&p, (&k, &n))| p + n * (dt * k))
        .collect();
    DiscreteCurve::new(moved)
}

/// Like [`advance`] but leaves the embeddedness test to the caller.
fn advance_trusted(curve: &DiscreteCurve, fields: &GeometryFields, dt: f64) -> Result<DiscreteCurve> {
    let moved = curve
        .vertices()
        .iter()
        .zip(fields.kappa.iter().zip(&fields.normal))
        .map(|(&p, (&k, &n))| p + n * (dt * k))
        .collect();
    DiscreteCurve::new_without_embedding_check(moved)
}

/// Clearance between non-adjacent edges, capped at the longest edge; an
/// error when the polygon crosses itself.
fn measure_clearance(curve: &DiscreteCurve) -> Result<f64> {
    let cap = curve.edge_lengths().iter().copied().fold(0.0, f64::max);
    let c = edge_clearance(curve.vertices(), cap);
    if c > 0.0 {
        return Ok(c);
    }
    match first_crossing(curve.vertices()) {
        Some((first, second)) => Err(Error::NotEmbedded { first, second }),
        // distance rounded to zero without a crossing: measure again next step
        None => Ok(0.0),
    }
}

/// One explicit step with the CFL time step.
pub fn step(state: &FlowState, control: &StepControl) -> Result<FlowState> {
    control.validate()?;
    let fields = state.curve.geometry_fields();
    let dt = control.time_step(&fields, state.t);
    if !(dt > 0.0) {
        return Err(Error::param("t_max", format!("no time left to step at t = {}", state.t)));
    }
    let curve = advance(&state.curve, &fields, dt)?;
    let t = if state.t + dt >= control.t_max || dt == control.t_max - state.t {
        control.t_max
    } else {
        state.t + dt
    };
    Ok(FlowState { curve, t })
}

/// Settings of [`evolve_with`] beyond the step control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Snapshot every `record_stride` steps (the final state is always kept).
    pub record_stride: usize,
    /// Kernel centre for the per-step Huisken column.
    pub huisken: Option<SpacetimePoint>,
    /// Fill the shrinker-residual column (meaningful in rescaled frames).
    pub shrinker_residual: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            record_stride: 1000,
            huisken: None,
            shrinker_residual: false,
        }
    }
}

pub fn evolve(initial: &DiscreteCurve, control: &StepControl, record_stride: usize) -> Result<Trajectory> {
    evolve_with(
        initial,
        control,
        &EvolveOptions {
            record_stride,
            ..EvolveOptions::default()
        },
    )
}

/// Runs the flow from `t = 0` until a stop condition. Numerical failures
/// end the run with a `stop_embeddedness` event; only invalid controls are
/// returned as errors.
pub fn evolve_with(initial: &DiscreteCurve, control: &StepControl, options: &EvolveOptions) -> Result<Trajectory> {
    control.validate()?;
    if options.record_stride == 0 {
        return Err(Error::param("record_stride", "must be at least 1"));
    }
    let mut curve = match control.target_vertex_spacing {
        VertexSpacing::Auto => initial.clone(),
        VertexSpacing::Fixed(h) => {
            let n = ((initial.length() / h).round() as usize).max(MIN_VERTICES);
            initial.resample(n)?
        }
    };
    let n = curve.len();
    let convex_start = curve.geometry_fields().kappa_min() > 0.0;
    let base_opts = RecordOptions {
        distance_ratio: false,
        huisken: options.huisken,
        harnack_origin: convex_start.then_some(0.0),
        shrinker_residual: options.shrinker_residual,
    };

    let mut clearance = measure_clearance(&curve)?;
    let mut traj = Trajectory::default();
    let mut t = 0.0;
    let mut step_index = 0usize;
    loop {
        let fields = curve.geometry_fields();
        let mut rec = diagnostics::record(&curve, &fields, t, &base_opts);
        let rec_kappa_max = rec.kappa_max;
        let stop = if rec.kappa_max >= control.kappa_stop {
            Some(EventKind::StopCurvature)
        } else if rec.area <= control.area_stop {
            Some(EventKind::StopArea)
        } else if t >= control.t_max {
            Some(EventKind::StopTmax)
        } else {
            None
        };
        let is_snapshot = step_index % options.record_stride == 0 || stop.is_some();
        if is_snapshot {
            rec.r_ratio = Some(diagnostics::distance_ratio(&curve).value);
        }
        traj.records.push(rec);
        if is_snapshot {
            traj.snapshots.push(Snapshot {
                step: step_index,
                state: FlowState::new(curve.clone(), t),
            });
        }
        if let Some(kind) = stop {
            traj.events.push(Event {
                t,
                step: step_index,
                kind,
                detail: None,
            });
            break;
        }

        let dt = control.time_step(&fields, t);
        let next_t = if t + dt >= control.t_max || dt == control.t_max - t {
            control.t_max
        } else {
            t + dt
        };
        // Vertices move at most dt * kappa_max, so the gap between any two
        // non-adjacent edges shrinks by at most twice that. While the
        // accumulated shrinkage stays below the last measured clearance the
        // polygon cannot have crossed itself.
        clearance -= 2.0 * dt * rec_kappa_max;
        let moved = advance_trusted(&curve, &fields, dt).and_then(|c| {
            let edges = c.edge_lengths();
            let (lo, hi) = edges.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
            if hi > control.remesh_ratio * lo {
                let r = c.resample_smooth(n)?;
                clearance = measure_clearance(&r)?;
                Ok((r, true))
            } else {
                if !(clearance > 0.0) {
                    clearance = measure_clearance(&c)?;
                }
                Ok((c, false))
            }
        });
        match moved {
            Ok((next, remeshed)) => {
                curve = next;
                t = next_t;
                step_index += 1;
                if remeshed {
                    traj.events.push(Event {
                        t,
                        step: step_index,
                        kind: EventKind::Remesh,
                        detail: None,
                    });
                }
            }
            Err(e) => {
                if !is_snapshot {
                    let last = traj.records.last_mut().expect("record pushed above");
                    last.r_ratio = Some(diagnostics::distance_ratio(&curve).value);
                    traj.snapshots.push(Snapshot {
                        step: step_index,
                        state: FlowState::new(curve.clone(), t),
                    });
                }
                traj.events.push(Event {
                    t,
                    step: step_index,
                    kind: EventKind::StopEmbeddedness,
                    detail: Some(e.to_string()),
                });
                break;
            }
        }
    }
    Ok(traj)
}

/// `A / 2 pi`: the extinction time of an embedded curve.
pub fn extinction_time_estimate(curve: &DiscreteCurve) -> f64 {
    curve.enclosed_area() / TAU
}

/// How to estimate the singular time `T` of a finished run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtinctionEstimate {
    /// `A(0) / 2 pi`.
    InitialArea,
    /// `t_end + A(t_end) / 2 pi`: the area law applied to the last record,
    /// which removes the accumulated time-stepping drift.
    FinalArea,
    /// `t_end + 1 / (2 kappa_max^2)`, the circle law on the final curvature.
    CurvatureExtrapolation,
}

impl ExtinctionEstimate {
    pub fn estimate(self, traj: &Trajectory) -> Result<f64> {
        let (Some(first), Some(last)) = (traj.records.first(), traj.records.last()) else {
            return Err(Error::EmptyWindow("trajectory has no records".into()));
        };
        let value = match self {
            ExtinctionEstimate::InitialArea => first.t + first.area / TAU,
            ExtinctionEstimate::FinalArea => last.t + last.area / TAU,
            ExtinctionEstimate::CurvatureExtrapolation => last.t + 0.5 / (last.kappa_max * last.kappa_max),
        };
        if !value.is_finite() {
            return Err(Error::EmptyWindow("records lack area or curvature values".into()));
        }
        Ok(value)
    }
}

/// Lower bound for `kappa_min(t)` given `kappa_min(0) = k0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaMinBound {
    /// `k0 / (1 - 2 t k0^2)`.
    Displayed,
    /// `k0 / sqrt(1 - 2 t k0^2)`, the solution of `k' = k^3` and the
    /// value attained by the shrinking circle.
    Sharp,
}

impl KappaMinBound {
    /// Bound at time `t`; infinite once `1 - 2 t k0^2 <= 0`.
    pub fn value(self, k0: f64, t: f64) -> f64 {
        let q = 1.0 - 2.0 * t * k0 * k0;
        if q <= 0.0 {
            return f64::INFINITY;
        }
        match self {
            KappaMinBound::Displayed => k0 / q,
            KappaMinBound::Sharp => k0 / q.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KappaMinBound::Displayed => "kappa_min_bound_displayed",
            KappaMinBound::Sharp => "kappa_min_bound_sharp",
        }
    }
}

/// Multiplicative slack on the `kappa_min` lower bound.
pub const KAPPA_MIN_SLACK: f64 = 1e-2;

/// `kappa_min(t) >= (1 - 1e-2) bound(t)` at every record where the bound is
/// finite.
pub fn kappa_min_bound_check(traj: &Trajectory, bound: KappaMinBound) -> Result<CheckReport> {
    let first = traj
        .records
        .first()
        .ok_or_else(|| Error::EmptyWindow("trajectory has no records".into()))?;
    let k0 = first.kappa_min;
    if !(k0 > 0.0) {
        return Err(Error::NotConvex { index: 0, kappa: k0 });
    }
    let mut report = CheckReport::new(bound.name());
    for r in &traj.records {
        let b = bound.value(k0, r.t - first.t);
        if b.is_finite() {
            report.observe(r.t, (1.0 - KAPPA_MIN_SLACK) * b, r.kappa_min);
        }
    }
    Ok(report)
}

/// `kappa_min` nondecreasing up to `slack` per flow step. Comparisons
/// across a remesh are skipped: resampling moves vertices along the curve
/// and shifts the discrete minimum without any flow.
pub fn convexity_monotone_check(traj: &Trajectory, slack: f64) -> CheckReport {
    let mut report = CheckReport::new("kappa_min_nondecreasing");
    let remeshed = traj.remesh_flags();
    for (k, w) in traj.records.windows(2).enumerate() {
        if !remeshed[k + 1] {
            report.observe(w[1].t, w[0].kappa_min - w[1].kappa_min, slack);
        }
    }
    report
}

/// `sqrt(t) max |kappa_s|` on each snapshot after the start.
pub fn derivative_estimate_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    let t0 = traj.start_time();
    traj.snapshots
        .iter()
        .filter(|s| s.state.t > t0)
        .map(|s| {
            let f = s.state.curve.geometry_fields();
            let ks = f.kappa_s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (s.state.t, (s.state.t - t0).sqrt() * ks)
        })
        .collect()
}

/// Mean distance of the vertices from their centroid.
pub fn mean_radius(curve: &DiscreteCurve) -> f64 {
    let c = curve.centroid();
    curve.vertices().iter().map(|p| p.distance(c)).sum::<f64>() / curve.len() as f64
}
