//! Curve shortening written as a quasilinear parabolic equation for the
//! normal offset `u` over a fixed base curve: `gamma = gamma0 + u N`.
//!
//! The tangential reparametrization is not tracked, so results are compared
//! with the polygon engine as point sets.

use crate::diagnostics::{self, DiagnosticRecord, RecordOptions};
use crate::flow::{Event, EventKind, FlowState, Snapshot, Trajectory};
use crate::geometry::{DiscreteCurve, PlanePoint};
use crate::shapes::EllipseArc;
use crate::{Error, Result};
use std::f64::consts::TAU;

/// Below this value of `1 - k u` the gauge is considered degenerate.
pub const GAUGE_FLOOR: f64 = 1e-6;
/// Runs stop once `max |k u|` exceeds this.
pub const VALIDITY_MARGIN: f64 = 0.45;
/// Largest admissible `|k u|` for a state.
pub const VALIDITY_LIMIT: f64 = 0.5;
/// Per-step growth factor of `max |u|` treated as numerical blowup.
pub const INSTABILITY_GROWTH: f64 = 10.0;

/// Smooth closed base curve sampled on a uniform periodic arclength grid.
#[derive(Clone, Debug)]
pub struct BaseCurveData {
    pub dx: f64,
    pub position: Vec<PlanePoint>,
    pub tangent: Vec<PlanePoint>,
    /// Inward unit normal (tangent rotated by +pi/2).
    pub normal: Vec<PlanePoint>,
    pub k: Vec<f64>,
    /// Arclength derivative of `k`.
    pub k_s: Vec<f64>,
}

impl BaseCurveData {
    pub fn circle(radius: f64, m: usize) -> Result<Self> {
        check_grid(m)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param("radius", "must be positive"));
        }
        let angles: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        Ok(BaseCurveData {
            dx: TAU * radius / m as f64,
            position: angles.iter().map(|&a| PlanePoint::from_polar(radius, a)).collect(),
            tangent: angles.iter().map(|&a| PlanePoint::new(-a.sin(), a.cos())).collect(),
            normal: angles.iter().map(|&a| PlanePoint::new(-a.cos(), -a.sin())).collect(),
            k: vec![1.0 / radius; m],
            k_s: vec![0.0; m],
        })
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, exact arclength grid.
    pub fn ellipse(a: f64, b: f64, m: usize) -> Result<Self> {
        check_grid(m)?;
        let arc = EllipseArc::new(a, b)?;
        let dx = arc.perimeter() / m as f64;
        let angles: Vec<f64> = (0..m).map(|j| arc.angle_at(dx * j as f64)).collect();
        let tangent: Vec<PlanePoint> = angles.iter().map(|&t| arc.tangent(t)).collect();
        Ok(BaseCurveData {
            dx,
            position: angles.iter().map(|&t| arc.point(t)).collect(),
            normal: tangent.iter().map(|t| t.perp()).collect(),
            tangent,
            k: angles.iter().map(|&t| arc.curvature(t)).collect(),
            k_s: angles.iter().map(|&t| arc.curvature_s(t)).collect(),
        })
    }

    /// Base data from a polygon: spline-resampled to `m` equally spaced
    /// points, with discrete tangent, normal and curvature fields.
    pub fn from_curve(curve: &DiscreteCurve, m: usize) -> Result<Self> {
        check_grid(m)?;
        let fine = curve.resample_smooth(m)?;
        let fields = fine.geometry_fields();
        Ok(BaseCurveData {
            dx: fine.length() / m as f64,
            position: fine.vertices().to_vec(),
            tangent: fields.tangent,
            normal: fields.normal,
            k: fields.kappa,
            k_s: fields.kappa_s,
        })
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.dx * self.len() as f64
    }

    /// Largest `|k u|` over the grid.
    pub fn validity(&self, u: &[f64]) -> f64 {
        self.k.iter().zip(u).map(|(k, u)| (k * u).abs()).fold(0.0, f64::max)
    }

    /// Step-size heuristic `0.25 dx^2 min((1 - k u)^2 + u'^2)`.
    pub fn stable_dt(&self, u: &[f64]) -> f64 {
        let (du, _) = derivatives(u, self.dx);
        let den = (0..self.len())
            .map(|j| (1.0 - self.k[j] * u[j]).powi(2) + du[j] * du[j])
            .fold(f64::INFINITY, f64::min);
        0.25 * self.dx * self.dx * den
    }
}

fn check_grid(m: usize) -> Result<()> {
    if m < 8 {
        return Err(Error::param("m", "grid needs at least 8 points"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphState {
    pub u: Vec<f64>,
    pub t: f64,
}

impl GraphState {
    pub fn new(u: Vec<f64>, t: f64) -> Self {
        GraphState { u, t }
    }
}

/// Centered periodic first and second differences.
fn derivatives(u: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let m = u.len();
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    for j in 0..m {
        let up = u[(j + 1) % m];
        let um = u[(j + m - 1) % m];
        d1[j] = (up - um) / (2.0 * dx);
        d2[j] = (up - 2.0 * u[j] + um) / (dx * dx);
    }
    (d1, d2)
}

fn check_len(u: &[f64], base: &BaseCurveData) -> Result<()> {
    if u.len() != base.len() {
        return Err(Error::param("u", format!("has {} values for a grid of {}", u.len(), base.len())));
    }
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    Ok(())
}

/// `(g, numerator terms)` at each point, where `g = 1 - k u` and the terms
/// are `2k u'^2 + k' u u' - 2k^2 u + k^3 u^2 + k`.
fn gauge_terms(u: &[f64], base: &BaseCurveData) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_len(u, base)?;
    let (d1, d2) = derivatives(u, base.dx);
    let mut g = Vec::with_capacity(u.len());
    let mut rest = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let (k, ks, uj, p) = (base.k[j], base.k_s[j], u[j], d1[j]);
        let gj = 1.0 - k * uj;
        if gj <= GAUGE_FLOOR {
            return Err(Error::DegenerateGauge { index: j, value: gj });
        }
        g.push(gj);
        rest.push(2.0 * k * p * p + ks * uj * p - 2.0 * k * k * uj + k * k * k * uj * uj + k);
    }
    Ok((g, rest, d1, d2))
}

/// Time derivative of `u` under curve shortening.
pub fn graph_rhs(state: &GraphState, base: &BaseCurveData) -> Result<Vec<f64>> {
    let (g, rest, d1, d2) = gauge_terms(&state.u, base)?;
    Ok((0..g.len())
        .map(|j| (d2[j] + rest[j] / g[j]) / (g[j] * g[j] + d1[j] * d1[j]))
        .collect())
}

/// Curvature of the offset curve from the graph formula.
pub fn graph_curvature(state: &GraphState, base: &BaseCurveData) -> Result<Vec<f64>> {
    let (g, rest, d1, d2) = gauge_terms(&state.u, base)?;
    Ok((0..g.len())
        .map(|j| (g[j] * d2[j] + rest[j]) / (g[j] * g[j] + d1[j] * d1[j]).powf(1.5))
        .collect())
}

/// Polygon with vertices `gamma0 + u N`.
pub fn to_curve(state: &GraphState, base: &BaseCurveData) -> Result<DiscreteCurve> {
    check_len(&state.u, base)?;
    let v = base.validity(&state.u);
    if v > VALIDITY_LIMIT {
        return Err(Error::param("u", format!("|k u| = {v} leaves the validity region")));
    }
    let vertices = base
        .position
        .iter()
        .zip(&base.normal)
        .zip(&state.u)
        .map(|((&p, &n), &u)| p + n * u)
        .collect();
    DiscreteCurve::new(vertices)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphStop {
    /// Reached `t_end`.
    Completed,
    /// `|k u|` crossed the validity margin or the gauge degenerated.
    Validity,
    /// `max |u|` jumped by more than the instability factor in one step.
    Unstable,
}

impl GraphStop {
    pub fn event_kind(self) -> EventKind {
        match self {
            GraphStop::Completed => EventKind::StopTmax,
            GraphStop::Validity => EventKind::StopValidity,
            GraphStop::Unstable => EventKind::StopUnstable,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GraphRun {
    /// Accepted states at the requested stride; the last one is always kept.
    pub states: Vec<GraphState>,
    pub stop: GraphStop,
    /// Time at which the run stopped and a short description.
    pub stop_t: f64,
    pub detail: String,
}

impl GraphRun {
    pub fn final_state(&self) -> &GraphState {
        self.states.last().expect("run holds at least its initial state")
    }

    /// Stored states as a trajectory: one snapshot and one record per state.
    pub fn to_trajectory(&self, base: &BaseCurveData, opts: &RecordOptions) -> Result<Trajectory> {
        let mut snapshots = Vec::with_capacity(self.states.len());
        let mut records: Vec<DiagnosticRecord> = Vec::with_capacity(self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            let curve = to_curve(s, base)?;
            let fields = curve.geometry_fields();
            let mut rec = diagnostics::record(&curve, &fields, s.t, opts);
            if opts.distance_ratio {
                rec.r_ratio = Some(diagnostics::distance_ratio(&curve).value);
            }
            records.push(rec);
            snapshots.push(Snapshot { step: i, state: FlowState::new(curve, s.t) });
        }
        let events = vec![Event {
            t: self.stop_t,
            step: self.states.len() - 1,
            kind: self.stop.event_kind(),
            detail: (!self.detail.is_empty()).then(|| self.detail.clone()),
        }];
        Ok(Trajectory { snapshots, events, records })
    }
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(u: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    u.iter().zip(k).map(|(u, k)| u + a * k).collect()
}

fn rk4_step(u: &[f64], t: f64, dt: f64, base: &BaseCurveData) -> Result<Vec<f64>> {
    let k1 = graph_rhs(&GraphState::new(u.to_vec(), t), base)?;
    let k2 = graph_rhs(&GraphState::new(axpy(u, 0.5 * dt, &k1), t + 0.5 * dt), base)?;
    let k3 = graph_rhs(&GraphState::new(axpy(u, 0.5 * dt, &k2), t + 0.5 * dt), base)?;
    let k4 = graph_rhs(&GraphState::new(axpy(u, dt, &k3), t + dt), base)?;
    Ok((0..u.len())
        .map(|j| u[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        .collect())
}

/// Classical Runge-Kutta from `u0` at time 0 up to `t_end`, keeping every
/// `stride`-th state. The last step is shortened to land on `t_end`.
pub fn graph_evolve(base: &BaseCurveData, u0: &[f64], t_end: f64, dt: f64, stride: usize) -> Result<GraphRun> {
    check_len(u0, base)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::param("t_end", "must be finite and non-negative"));
    }
    if stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let v0 = base.validity(u0);
    if v0 > VALIDITY_MARGIN {
        return Err(Error::param("u0", format!("|k u| = {v0} exceeds the validity margin {VALIDITY_MARGIN}")));
    }
    let limit = base.stable_dt(u0);
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::param("dt", format!("{dt} outside (0, {limit:.3e}]")));
    }

    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut step = 0usize;
    let mut states = vec![GraphState::new(u.clone(), t)];
    let mut last_stored = 0usize;
    let (stop, detail) = loop {
        if t >= t_end {
            break (GraphStop::Completed, String::new());
        }
        let h = dt.min(t_end - t);
        let next = match rk4_step(&u, t, h, base) {
            Ok(v) => v,
            Err(Error::DegenerateGauge { index, value }) => {
                break (GraphStop::Validity, format!("degenerate gauge at grid point {index}: 1-ku={value:.3e}"));
            }
            Err(e) => return Err(e),
        };
        let (before, after) = (max_abs(&u), max_abs(&next));
        if !after.is_finite() || after > INSTABILITY_GROWTH * before.max(base.dx) {
            break (GraphStop::Unstable, format!("max|u| grew from {before:.3e} to {after:.3e}"));
        }
        let v = base.validity(&next);
        if v > VALIDITY_MARGIN {
            break (GraphStop::Validity, format!("|ku|={v:.4} above margin {VALIDITY_MARGIN}"));
        }
        u = next;
        t = if h < dt { t_end } else { t + h };
        step += 1;
        if step % stride == 0 {
            states.push(GraphState::new(u.clone(), t));
            last_stored = step;
        }
    };
    if last_stored != step {
        states.push(GraphState::new(u, t));
    }
    Ok(GraphRun { states, stop, stop_t: t, detail })
}

/// Amplitude of the Fourier mode `m` of a periodic grid function.
pub fn fourier_amplitude(u: &[f64], m: usize) -> f64 {
    let n = u.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for (j, v) in u.iter().enumerate() {
        let a = TAU * (m * j) as f64 / n;
        c += v * a.cos();
        s += v * a.sin();
    }
    let scale = if m == 0 { 1.0 / n } else { 2.0 / n };
    scale * c.hypot(s)
}
