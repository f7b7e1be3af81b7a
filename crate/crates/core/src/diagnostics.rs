//! Monitored scalars and monotone quantities of the flow.
//!
//! Per-state quantities ([`huisken_functional`], [`distance_ratio`],
//! [`harnack_quantity`], ...) are pure functions of a curve. The `*_check`
//! functions scan a [`Trajectory`] and return a [`CheckReport`] listing
//! every record that breaks the expected inequality by more than its slack.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::geometry::{three_point_derivatives, DiscreteCurve, GeometryFields, PlanePoint};
use crate::io::{fmt_f64, fmt_opt};

/// Kernel mass beyond `12 sqrt(t0 - t)` is below `1e-31`.
const KERNEL_CUTOFF: f64 = 12.0;

/// Per-comparison slack of the Huisken functional monotonicity.
pub const HUISKEN_SLACK: f64 = 1e-5;
/// Relative tolerance of the Huisken rate identity.
pub const HUISKEN_RATE_TOL: f64 = 0.10;
/// Rates below this are not compared relatively.
pub const RATE_FLOOR: f64 = 1e-3;
/// Per-record slack of the distance-ratio monotonicity.
pub const DISTANCE_RATIO_SLACK: f64 = 1e-4;
/// Per-record slack of the total absolute curvature monotonicity.
pub const TOTAL_ABS_CURVATURE_SLACK: f64 = 1e-4;
/// Slack on the Harnack bound `F <= 1/2`.
pub const HARNACK_SLACK: f64 = 1e-2;
/// Relative tolerance of the length dissipation identity.
pub const LENGTH_RATE_TOL: f64 = 0.05;
/// Relative tolerance of the area law `A(t) = A(0) - 2 pi t`.
pub const AREA_LAW_TOL: f64 = 1e-2;

/// Space-time point `(x0, t0)` centring the backwards heat kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimePoint {
    pub x0: PlanePoint,
    pub t0: f64,
}

impl SpacetimePoint {
    pub fn new(x0: PlanePoint, t0: f64) -> Self {
        SpacetimePoint { x0, t0 }
    }

    /// `(4 pi tau)^{-1/2} exp(-|x - x0|^2 / 4 tau)` with `tau = t0 - t > 0`.
    pub fn kernel(&self, x: PlanePoint, t: f64) -> f64 {
        let tau = self.t0 - t;
        (4.0 * PI * tau).powf(-0.5) * (-(x - self.x0).norm_sq() / (4.0 * tau)).exp()
    }

    fn tau(&self, t: f64) -> Result<f64> {
        let tau = self.t0 - t;
        if !(tau > 0.0) {
            return Err(Error::param("t", format!("time {t} is not before the kernel centre t0 = {}", self.t0)));
        }
        Ok(tau)
    }
}

/// One row of monitored scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub length: f64,
    pub area: f64,
    /// `sum kappa^2 ds`, the length dissipation rate.
    pub int_kappa_sq: f64,
    /// Largest `|kappa|`.
    pub kappa_max: f64,
    pub kappa_min: f64,
    pub total_abs_curv: f64,
    pub inflections: usize,
    pub r_ratio: Option<f64>,
    pub harnack_f_max: Option<f64>,
    pub huisken_value: Option<f64>,
    pub shrinker_residual: Option<f64>,
    /// Vertex attaining `kappa_max`. Not persisted.
    pub kappa_argmax: Option<usize>,
}

pub const RECORDS_HEADER: &str =
    "t,L,A,int_kappa_sq,kappa_max,kappa_min,total_abs_curv,inflections,R_ratio,harnack_F_max,huisken_value,shrinker_residual";

impl DiagnosticRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.t),
            fmt_f64(self.length),
            fmt_f64(self.area),
            fmt_f64(self.int_kappa_sq),
            fmt_f64(self.kappa_max),
            fmt_f64(self.kappa_min),
            fmt_f64(self.total_abs_curv),
            self.inflections,
            fmt_opt(self.r_ratio),
            fmt_opt(self.harnack_f_max),
            fmt_opt(self.huisken_value),
            fmt_opt(self.shrinker_residual),
        )
    }

    /// Parses a row written by [`to_csv_row`](Self::to_csv_row). Only `t` is
    /// required; empty numeric cells become NaN (scalars) or `None`.
    pub fn from_csv_row(row: &str) -> std::result::Result<Self, String> {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        let get = |i: usize| cells.get(i).copied().unwrap_or("");
        let num = |i: usize| -> std::result::Result<f64, String> {
            let c = get(i);
            if c.is_empty() {
                Ok(f64::NAN)
            } else {
                c.parse::<f64>().map_err(|e| format!("column {}: `{c}`: {e}", i + 1))
            }
        };
        let opt = |i: usize| -> std::result::Result<Option<f64>, String> {
            let v = num(i)?;
            Ok(if v.is_nan() { None } else { Some(v) })
        };
        let t = num(0)?;
        if t.is_nan() {
            return Err("missing time".into());
        }
        let inflections = match get(7) {
            "" => 0,
            c => c.parse::<usize>().map_err(|e| format!("column 8: `{c}`: {e}"))?,
        };
        Ok(DiagnosticRecord {
            t,
            length: num(1)?,
            area: num(2)?,
            int_kappa_sq: num(3)?,
            kappa_max: num(4)?,
            kappa_min: num(5)?,
            total_abs_curv: num(6)?,
            inflections,
            r_ratio: opt(8)?,
            harnack_f_max: opt(9)?,
            huisken_value: opt(10)?,
            shrinker_residual: opt(11)?,
            kappa_argmax: None,
        })
    }

    /// True when every always-present scalar is a number (false for rows
    /// loaded from sparse hand-written files).
    pub fn is_complete(&self) -> bool {
        [self.length, self.area, self.int_kappa_sq, self.kappa_max, self.kappa_min, self.total_abs_curv]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Which optional columns to fill when building a record.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RecordOptions {
    pub distance_ratio: bool,
    pub huisken: Option<SpacetimePoint>,
    /// Start time of the run; enables the Harnack column on convex states.
    pub harnack_origin: Option<f64>,
    pub shrinker_residual: bool,
}

/// Builds the record of `curve` at time `t` from precomputed fields.
pub fn record(curve: &DiscreteCurve, fields: &GeometryFields, t: f64, opts: &RecordOptions) -> DiagnosticRecord {
    let (argmax, kappa_max) = fields.kappa_abs_max();
    let kappa_min = fields.kappa_min();
    let int_kappa_sq = fields.kappa.iter().zip(&fields.ds).map(|(k, w)| k * k * w).sum();
    let total_abs_curv = fields.kappa.iter().zip(&fields.ds).map(|(k, w)| k.abs() * w).sum();
    let harnack_f_max = match opts.harnack_origin {
        Some(t_start) if kappa_min > 0.0 => Some(harnack_from_fields(fields, t - t_start).max),
        _ => None,
    };
    let huisken_value = opts
        .huisken
        .filter(|x| x.t0 > t)
        .map(|x| huisken_from_fields(curve, fields, &x, t));
    DiagnosticRecord {
        t,
        length: fields.edge_lengths.iter().sum(),
        area: curve.enclosed_area(),
        int_kappa_sq,
        kappa_max,
        kappa_min,
        total_abs_curv,
        inflections: count_sign_changes(&fields.kappa),
        r_ratio: opts.distance_ratio.then(|| distance_ratio(curve).value),
        harnack_f_max,
        huisken_value,
        shrinker_residual: opts.shrinker_residual.then(|| shrinker_residual_from_fields(curve, fields)),
        kappa_argmax: Some(argmax),
    }
}

fn huisken_from_fields(curve: &DiscreteCurve, fields: &GeometryFields, x0: &SpacetimePoint, t: f64) -> f64 {
    let tau = x0.t0 - t;
    let cutoff_sq = KERNEL_CUTOFF * KERNEL_CUTOFF * tau;
    curve
        .vertices()
        .iter()
        .zip(&fields.ds)
        .filter(|(p, _)| (**p - x0.x0).norm_sq() <= cutoff_sq)
        .map(|(&p, w)| x0.kernel(p, t) * w)
        .sum()
}

/// Huisken's functional `sum_i rho_{X0}(p_i, t) ds_i`, the kernel truncated
/// at `|x - x0| > 12 sqrt(t0 - t)`.
pub fn huisken_functional(curve: &DiscreteCurve, x0: &SpacetimePoint, t: f64) -> Result<f64> {
    x0.tau(t)?;
    Ok(huisken_from_fields(curve, &curve.geometry_fields(), x0, t))
}

/// Right-hand side of the monotonicity formula,
/// `-sum_i |kappa_i + <p_i - x0, N_i> / 2(t0 - t)|^2 rho ds_i`.
pub fn huisken_rate(curve: &DiscreteCurve, x0: &SpacetimePoint, t: f64) -> Result<f64> {
    let tau = x0.tau(t)?;
    let f = curve.geometry_fields();
    Ok(-curve
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let defect = f.kappa[i] + (p - x0.x0).dot(f.normal[i]) / (2.0 * tau);
            defect * defect * x0.kernel(p, t) * f.ds[i]
        })
        .sum::<f64>())
}

/// Gaussian density: the Huisken functional at time `t0 - r^2`, on the
/// trajectory's curve at that time (interpolated between snapshots).
pub fn gaussian_density(traj: &Trajectory, x0: &SpacetimePoint, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let t = x0.t0 - r * r;
    let at = traj.curve_at(t)?;
    huisken_functional(&at.curve, x0, t)
}

/// Value and maximizing vertex pair of the distance ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRatio {
    pub value: f64,
    /// `None` when no vertex pair exceeds the coincident-point limit 1.
    pub pair: Option<(usize, usize)>,
}

/// `R = sup (L / pi d) sin(pi l / L)` over vertex pairs.
///
/// For two points on one edge the ratio tends to 1 as they merge, so the
/// supremum over the polygon is at least 1; the vertex-pair maximum is
/// therefore floored at 1.
pub fn distance_ratio(curve: &DiscreteCurve) -> DistanceRatio {
    let v = curve.vertices();
    let n = v.len();
    let edges = curve.edge_lengths();
    let mut cumulative = Vec::with_capacity(n);
    let mut s = 0.0;
    for e in &edges {
        cumulative.push(s);
        s += e;
    }
    let total = s;
    let scale = PI / total;
    let mut best = DistanceRatio { value: 1.0, pair: None };
    for i in 0..n {
        let (pi, si) = (v[i], cumulative[i]);
        for j in i + 1..n {
            let arc = cumulative[j] - si;
            let d = pi.distance(v[j]);
            // sin(pi l / L) is symmetric under l -> L - l, so the raw arc works.
            let ratio = (scale * arc).sin() / (scale * d);
            if ratio > best.value {
                best = DistanceRatio {
                    value: ratio,
                    pair: Some((i, j)),
                };
            }
        }
    }
    best
}

/// Per-vertex Harnack quantity `F = t (f_s^2 - f_t)` with `f = log kappa`
/// and its maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct Harnack {
    pub values: Vec<f64>,
    pub max: f64,
}

fn harnack_from_fields(f: &GeometryFields, t: f64) -> Harnack {
    let n = f.len();
    let logk: Vec<f64> = f.kappa.iter().map(|k| k.ln()).collect();
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let (fs, _) = three_point_derivatives(logk[im], logk[i], logk[ip], f.edge_lengths[im], f.edge_lengths[i]);
            // kappa_t from the curvature evolution equation
            let ft = (f.kappa_ss[i] + f.kappa[i].powi(3)) / f.kappa[i];
            t * (fs * fs - ft)
        })
        .collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Harnack { values, max }
}

/// Harnack quantity of a convex curve at time `t` since the start of the
/// convex run.
pub fn harnack_quantity(curve: &DiscreteCurve, t: f64) -> Result<Harnack> {
    let f = curve.geometry_fields();
    if let Some((index, &kappa)) = f.kappa.iter().enumerate().find(|(_, k)| **k <= 0.0) {
        return Err(Error::NotConvex { index, kappa });
    }
    Ok(harnack_from_fields(&f, t))
}

/// The eternal-solution Harnack expression
/// `Z = kappa_t / kappa - kappa_s^2 / kappa^2` with `kappa_t = kappa_ss +
/// kappa^3`; vanishes identically on translating solitons.
pub fn harnack_z(fields: &GeometryFields) -> Result<Vec<f64>> {
    fields
        .kappa
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            if k <= 0.0 {
                return Err(Error::NotConvex { index: i, kappa: k });
            }
            let ks = fields.kappa_s[i];
            Ok((fields.kappa_ss[i] + k * k * k) / k - ks * ks / (k * k))
        })
        .collect()
}

/// Sign changes of `values` around the cycle, ignoring exact zeros.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
    let m = signs.len();
    (0..m).filter(|&i| signs[i] != signs[(i + 1) % m]).count()
}

/// `sum |kappa_i| ds_i` and the number of inflections (curvature sign
/// changes around the cycle).
pub fn total_abs_curvature(curve: &DiscreteCurve) -> (f64, usize) {
    let f = curve.geometry_fields();
    let total = f.kappa.iter().zip(&f.ds).map(|(k, w)| k.abs() * w).sum();
    (total, count_sign_changes(&f.kappa))
}

fn shrinker_residual_from_fields(curve: &DiscreteCurve, f: &GeometryFields) -> f64 {
    curve
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &p)| (f.kappa[i] + 0.5 * p.dot(f.normal[i])).abs())
        .fold(0.0, f64::max)
}

/// `max_i |kappa_i + <p_i, N_i> / 2|`: zero on the time -1 slice of a
/// self-shrinker centred at the origin.
pub fn shrinker_residual(curve: &DiscreteCurve) -> f64 {
    shrinker_residual_from_fields(curve, &curve.geometry_fields())
}

/// Single violation of a checked inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub t: f64,
    /// Amount by which the inequality failed, beyond its slack.
    pub excess: f64,
}

/// Outcome of scanning a trajectory for one property.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    /// Number of comparisons performed.
    pub evaluated: usize,
    /// Smallest `allowed - observed` over all comparisons (negative when
    /// something failed).
    pub worst_margin: f64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            evaluated: 0,
            worst_margin: f64::INFINITY,
            violations: Vec::new(),
        }
    }

    /// Records `observed <= allowed` at time `t`.
    pub fn observe(&mut self, t: f64, observed: f64, allowed: f64) {
        self.evaluated += 1;
        let margin = allowed - observed;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if !(margin >= 0.0) {
            self.violations.push(Violation { t, excess: -margin });
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.evaluated > 0
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{}",
            self.name,
            if self.passed() { "pass" } else { "fail" },
            fmt_f64(self.worst_margin)
        )
    }
}

pub const CHECKS_HEADER: &str = "name,result,worst_margin";

/// Huisken functional along the snapshots: (a) nonincreasing up to
/// [`HUISKEN_SLACK`] per comparison; (b) its centred time difference
/// matches [`huisken_rate`] within [`HUISKEN_RATE_TOL`] wherever the rate
/// exceeds [`RATE_FLOOR`] and no remesh intervenes.
pub fn huisken_monotonicity_check(traj: &Trajectory, x0: &SpacetimePoint) -> Result<(CheckReport, CheckReport)> {
    let end = traj.end_time();
    if x0.t0 <= end {
        return Err(Error::CenterInsideSpan { t0: x0.t0, end });
    }
    let snaps = &traj.snapshots;
    let values: Vec<f64> = snaps
        .iter()
        .map(|s| huisken_functional(&s.state.curve, x0, s.state.t))
        .collect::<Result<_>>()?;
    let mut mono = CheckReport::new("huisken_monotone");
    for k in 1..snaps.len() {
        mono.observe(snaps[k].state.t, values[k] - values[k - 1], HUISKEN_SLACK);
    }
    let mut rate = CheckReport::new("huisken_rate");
    for k in 1..snaps.len().saturating_sub(1) {
        let (ta, tb) = (snaps[k - 1].state.t, snaps[k + 1].state.t);
        if traj.remesh_between(ta, tb) {
            continue;
        }
        let exact = huisken_rate(&snaps[k].state.curve, x0, snaps[k].state.t)?;
        if exact.abs() <= RATE_FLOOR {
            continue;
        }
        // second-order difference on a possibly uneven snapshot spacing
        let (h1, h2) = (snaps[k].state.t - ta, tb - snaps[k].state.t);
        let (fd, _) = three_point_derivatives(values[k - 1], values[k], values[k + 1], h1, h2);
        rate.observe(snaps[k].state.t, (fd - exact).abs() / exact.abs(), HUISKEN_RATE_TOL);
    }
    Ok((mono, rate))
}

/// Distance ratio along the run: nonincreasing within
/// [`DISTANCE_RATIO_SLACK`] between consecutive records that carry it.
pub fn distance_ratio_monotonicity_check(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("distance_ratio_monotone");
    let series: Vec<(f64, f64)> = traj.records.iter().filter_map(|r| r.r_ratio.map(|v| (r.t, v))).collect();
    for w in series.windows(2) {
        report.observe(w[1].0, w[1].1 - w[0].1, DISTANCE_RATIO_SLACK);
    }
    report
}

/// `max F <= 1/2 + HARNACK_SLACK` on every record with a Harnack value.
pub fn harnack_check(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("harnack_bound");
    for r in &traj.records {
        if let Some(f) = r.harnack_f_max {
            report.observe(r.t, f, 0.5 + HARNACK_SLACK);
        }
    }
    report
}

/// `sum |kappa| ds` nonincreasing within [`TOTAL_ABS_CURVATURE_SLACK`] per
/// flow step; comparisons across a remesh are skipped.
pub fn total_abs_curvature_check(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("total_abs_curvature_monotone");
    let remeshed = traj.remesh_flags();
    for (k, w) in traj.records.windows(2).enumerate() {
        if !remeshed[k + 1] {
            report.observe(w[1].t, w[1].total_abs_curv - w[0].total_abs_curv, TOTAL_ABS_CURVATURE_SLACK);
        }
    }
    report
}

/// `|sum |kappa| ds - 2 pi| <= tol` on every record.
pub fn gauss_bonnet_check(traj: &Trajectory, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("total_abs_curvature_2pi");
    for r in &traj.records {
        report.observe(r.t, (r.total_abs_curv - 2.0 * PI).abs(), tol);
    }
    report
}

/// `|A(t) - A(0) + 2 pi t| / A(0) <= AREA_LAW_TOL` on every record.
pub fn area_law_check(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("area_law");
    let Some(first) = traj.records.first() else {
        return report;
    };
    let (a0, t0) = (first.area, first.t);
    for r in &traj.records {
        let predicted = a0 - 2.0 * PI * (r.t - t0);
        report.observe(r.t, (r.area - predicted).abs() / a0, AREA_LAW_TOL);
    }
    report
}

/// Records produced by a remesh step, or preceding one.
fn remesh_adjacent(traj: &Trajectory) -> Vec<bool> {
    let flags = traj.remesh_flags();
    (0..flags.len())
        .map(|k| flags[k] || flags.get(k + 1).copied().unwrap_or(false))
        .collect()
}

/// Centred difference of `L` against `-sum kappa^2 ds`, within
/// [`LENGTH_RATE_TOL`] relative wherever `|dL/dt| > RATE_FLOOR`, skipping
/// remesh-adjacent steps.
pub fn length_dissipation_check(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("length_dissipation");
    let recs = &traj.records;
    let skip = remesh_adjacent(traj);
    for k in 1..recs.len().saturating_sub(1) {
        if skip[k - 1] || skip[k] || skip[k + 1] {
            continue;
        }
        let (a, b, c) = (&recs[k - 1], &recs[k], &recs[k + 1]);
        let (fd, _) = three_point_derivatives(a.length, b.length, c.length, b.t - a.t, c.t - b.t);
        if fd.abs() <= RATE_FLOOR {
            continue;
        }
        report.observe(b.t, (fd + b.int_kappa_sq).abs() / fd.abs(), LENGTH_RATE_TOL);
    }
    report
}

/// Length strictly decreasing from record to record.
pub fn length_monotone_check(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("length_decreasing");
    for w in traj.records.windows(2) {
        // strict: allowed margin is "just below zero"
        report.observe(w[1].t, w[1].length - w[0].length, -f64::MIN_POSITIVE);
    }
    report
}
