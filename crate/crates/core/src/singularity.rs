//! Blowup analysis: type I rate, blowup point, parabolic rescaling,
//! roundness and the type II point selection.

use nalgebra::{Matrix3, Vector3};

use crate::diagnostics::{shrinker_residual, DiagnosticRecord};
use crate::error::{Error, Result};
use crate::flow::{EventKind, FlowState, Snapshot, Trajectory};
use crate::geometry::{DiscreteCurve, PlanePoint};

/// Least-squares circle fit and radial deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundnessReport {
    pub fit_center: PlanePoint,
    pub fit_radius: f64,
    pub max_radial_deviation: f64,
    /// `max_radial_deviation / fit_radius`.
    pub deviation_ratio: f64,
}

/// Algebraic (Kåsa) circle fit: minimizes `sum (|p - c|^2 - r^2)^2` through
/// the linear model `x^2 + y^2 + D x + E y + F = 0`.
pub fn roundness(curve: &DiscreteCurve) -> Result<RoundnessReport> {
    roundness_of_points(curve.vertices())
}

pub fn roundness_of_points(points: &[PlanePoint]) -> Result<RoundnessReport> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit("fewer than three points"));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(PlanePoint::ORIGIN, |a, &p| a + p) * (1.0 / n);
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &p in points {
        let q = p - mean;
        let row = Vector3::new(q.x, q.y, 1.0);
        ata += row * row.transpose();
        atb -= row * q.norm_sq();
    }
    let scale = ata.abs().max();
    // LU happily solves nearly singular systems; reject them by the
    // determinant of the normalized matrix.
    if !((ata / scale).determinant().abs() > 1e-14) {
        return Err(Error::DegenerateFit("singular normal equations (collinear points)"));
    }
    let sol = ata
        .lu()
        .solve(&atb)
        .ok_or(Error::DegenerateFit("singular normal equations (collinear points)"))?;
    let c = PlanePoint::new(-0.5 * sol[0], -0.5 * sol[1]);
    let r_sq = c.norm_sq() - sol[2];
    if !(r_sq > 0.0) {
        return Err(Error::DegenerateFit("negative squared radius"));
    }
    let fit_radius = r_sq.sqrt();
    let fit_center = c + mean;
    let max_radial_deviation = points
        .iter()
        .map(|p| (p.distance(fit_center) - fit_radius).abs())
        .fold(0.0, f64::max);
    Ok(RoundnessReport {
        fit_center,
        fit_radius,
        max_radial_deviation,
        deviation_ratio: max_radial_deviation / fit_radius,
    })
}

/// Blowup centre `x0`, singular time `t_sing` and zoom factor `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaleFrame {
    pub x0: PlanePoint,
    pub t_sing: f64,
    pub lambda: f64,
}

impl RescaleFrame {
    pub fn new(x0: PlanePoint, t_sing: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        if !(x0.is_finite() && t_sing.is_finite()) {
            return Err(Error::param("frame", "centre and time must be finite"));
        }
        Ok(RescaleFrame { x0, t_sing, lambda })
    }

    /// Original time of rescaled time `s`: `T + s / lambda^2`.
    pub fn original_time(&self, s: f64) -> f64 {
        self.t_sing + s / (self.lambda * self.lambda)
    }

    /// Rescaled time of original time `t`: `lambda^2 (t - T)`.
    pub fn rescaled_time(&self, t: f64) -> f64 {
        self.lambda * self.lambda * (t - self.t_sing)
    }

    pub fn map_point(&self, p: PlanePoint) -> PlanePoint {
        (p - self.x0) * self.lambda
    }

    pub fn map_curve(&self, curve: &DiscreteCurve) -> DiscreteCurve {
        curve.translated(-self.x0).scaled(self.lambda)
    }
}

/// A rescaled slice `lambda (Gamma_{T + s/lambda^2} - x0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaledSlice {
    pub curve: DiscreteCurve,
    /// Nearest snapshot used because a remesh separates the bracketing
    /// snapshots.
    pub across_remesh: bool,
}

pub fn parabolic_rescale(traj: &Trajectory, frame: &RescaleFrame, t_rescaled: f64) -> Result<RescaledSlice> {
    if !(t_rescaled < 0.0) {
        return Err(Error::param("t_rescaled", format!("must be negative, got {t_rescaled}")));
    }
    let at = traj.curve_at(frame.original_time(t_rescaled))?;
    Ok(RescaledSlice {
        curve: frame.map_curve(&at.curve),
        across_remesh: at.across_remesh,
    })
}

/// Rescaled slice together with its roundness and shrinker residual.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceReport {
    pub lambda: f64,
    pub t_rescaled: f64,
    pub slice: RescaledSlice,
    pub roundness: RoundnessReport,
    pub shrinker_residual: f64,
}

pub fn analyze_slice(traj: &Trajectory, frame: &RescaleFrame, t_rescaled: f64) -> Result<SliceReport> {
    let slice = parabolic_rescale(traj, frame, t_rescaled)?;
    Ok(SliceReport {
        lambda: frame.lambda,
        t_rescaled,
        roundness: roundness(&slice.curve)?,
        shrinker_residual: shrinker_residual(&slice.curve),
        slice,
    })
}

/// The whole trajectory in the rescaled frame. Scalars transform with their
/// weights; the Harnack and Huisken columns depend on the clock origin and
/// kernel centre and are dropped.
pub fn rescale_trajectory(traj: &Trajectory, frame: &RescaleFrame) -> Trajectory {
    let l = frame.lambda;
    Trajectory {
        snapshots: traj
            .snapshots
            .iter()
            .map(|s| Snapshot {
                step: s.step,
                state: FlowState::new(frame.map_curve(&s.state.curve), frame.rescaled_time(s.state.t)),
            })
            .collect(),
        events: traj
            .events
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.t = frame.rescaled_time(e.t);
                e
            })
            .collect(),
        records: traj
            .records
            .iter()
            .map(|r| DiagnosticRecord {
                t: frame.rescaled_time(r.t),
                length: r.length * l,
                area: r.area * l * l,
                int_kappa_sq: r.int_kappa_sq / l,
                kappa_max: r.kappa_max / l,
                kappa_min: r.kappa_min / l,
                harnack_f_max: None,
                huisken_value: None,
                shrinker_residual: None,
                ..r.clone()
            })
            .collect(),
    }
}

/// `(T - t_k) kappa_max(t_k)^2` per record and its supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct Type1Rate {
    pub sup: f64,
    pub series: Vec<(f64, f64)>,
}

pub fn type1_rate(traj: &Trajectory, t_sing: f64) -> Result<Type1Rate> {
    let mut series = Vec::with_capacity(traj.records.len());
    let mut sup = f64::NEG_INFINITY;
    for r in &traj.records {
        if !(r.t < t_sing) {
            return Err(Error::TimeDomain {
                what: "type I rate",
                t: r.t,
                reason: "record time is not before the singular time",
            });
        }
        let v = (t_sing - r.t) * r.kappa_max * r.kappa_max;
        sup = sup.max(v);
        series.push((r.t, v));
    }
    if series.is_empty() {
        return Err(Error::EmptyWindow("trajectory has no records".into()));
    }
    Ok(Type1Rate { sup, series })
}

/// Vertices within this fraction of `kappa_max` share the blowup estimate.
const NEAR_MAX_FRACTION: f64 = 0.01;
/// Number of final snapshots averaged by [`detect_blowup_point`].
const BLOWUP_WINDOW: usize = 5;

/// Curvature-weighted mean position of the vertices whose `|kappa|` is
/// within 1% of the maximum.
fn peak_position(curve: &DiscreteCurve) -> (PlanePoint, f64) {
    let f = curve.geometry_fields();
    let (_, kmax) = f.kappa_abs_max();
    let mut sum = PlanePoint::ORIGIN;
    let mut weight = 0.0;
    for (p, k) in curve.vertices().iter().zip(&f.kappa) {
        let k = k.abs();
        if k >= (1.0 - NEAR_MAX_FRACTION) * kmax {
            sum += *p * k;
            weight += k;
        }
    }
    (sum * (1.0 / weight), kmax)
}

/// Blowup point of a run that ended near its singularity: the peak
/// positions of the last (up to) five snapshots averaged with weights
/// `kappa_max`. A peak position is the `|kappa|`-weighted mean of the
/// vertices within 1% of the maximal curvature, which stays at the centre
/// for nearly round final curves where the single argmax is arbitrary.
pub fn detect_blowup_point(traj: &Trajectory) -> Result<PlanePoint> {
    match traj.stop_event().map(|e| e.kind) {
        Some(EventKind::StopCurvature) | Some(EventKind::StopArea) => {}
        Some(kind) => return Err(Error::NoSingularity(kind.name())),
        None => return Err(Error::NoSingularity("no stop event")),
    }
    let start = traj.snapshots.len().saturating_sub(BLOWUP_WINDOW);
    let mut sum = PlanePoint::ORIGIN;
    let mut weight = 0.0;
    for s in &traj.snapshots[start..] {
        let (p, k) = peak_position(&s.state.curve);
        sum += p * k;
        weight += k;
    }
    if !(weight > 0.0) {
        return Err(Error::EmptyWindow("no snapshots".into()));
    }
    Ok(sum * (1.0 / weight))
}

/// Result of the type II point selection for one `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Type2Selection {
    pub record_index: usize,
    pub t_k: f64,
    /// Vertex attaining `kappa_max` at the selected record, when known.
    pub vertex: Option<usize>,
    /// `lambda_k = kappa_max(t_k)`.
    pub lambda_k: f64,
    /// Maximized value `kappa^2 (T - 1/k - t_k)`.
    pub value: f64,
    /// `lambda_k^2 (T - 1/k - t_k)`, the rescaled time still available.
    pub t1: f64,
}

/// Maximizes `kappa_max(t)^2 (T - 1/k - t)` over records with
/// `t <= T - 1/k`. Ties go to the earliest record.
pub fn type2_point_selection(traj: &Trajectory, t_sing: f64, k: usize) -> Result<Type2Selection> {
    if k == 0 || (k as f64) < (1.0 / t_sing).ceil() {
        return Err(Error::param("k", format!("must be at least ceil(1/T) = {}", (1.0 / t_sing).ceil())));
    }
    let horizon = t_sing - 1.0 / k as f64;
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in traj.records.iter().enumerate().take_while(|(_, r)| r.t <= horizon) {
        let v = r.kappa_max * r.kappa_max * (horizon - r.t);
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, value) = best.ok_or_else(|| Error::EmptyWindow(format!("no record at or before t = {horizon}")))?;
    let r = &traj.records[i];
    let vertex = r.kappa_argmax.or_else(|| {
        traj.snapshots
            .iter()
            .find(|s| s.step == i)
            .map(|s| s.state.curve.geometry_fields().kappa_abs_max().0)
    });
    Ok(Type2Selection {
        record_index: i,
        t_k: r.t,
        vertex,
        lambda_k: r.kappa_max,
        value,
        t1: value,
    })
}
