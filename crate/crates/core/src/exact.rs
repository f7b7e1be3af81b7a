//! Closed-form solutions of the flow, sampled as polygons.
//!
//! * shrinking circle: radius `sqrt(R^2 - 2t)`;
//! * grim reaper: `y = -log cos x + t`, translating upwards at unit speed;
//! * paperclip: `cosh y = e^{-t} cos x` for `t < 0`, a compact ancient
//!   solution that becomes extinct at the origin as `t -> 0`;
//! * hairclip: `sinh y = e^{-t} cos x`, an eternal solution flattening to
//!   the x-axis as `t -> +inf`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{DiscreteCurve, GeometryFields, PlanePoint, Polyline};
use crate::singularity;

/// Default half-width of the sampled grim reaper graph.
pub const DEFAULT_GRIM_REAPER_CLIP: f64 = 1.45;

/// Default time step of the centred time difference in
/// [`normal_velocity_residual`].
pub const DEFAULT_TIME_STEP: f64 = 1e-5;

/// Vertices excluded at each end of an open polyline by the residual.
pub const OPEN_END_SKIP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactKind {
    Circle { radius: f64, center: PlanePoint },
    GrimReaper { clip: f64 },
    Paperclip,
    Hairclip,
}

impl ExactKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExactKind::Circle { .. } => "circle",
            ExactKind::GrimReaper { .. } => "grim_reaper",
            ExactKind::Paperclip => "paperclip",
            ExactKind::Hairclip => "hairclip",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSolutionSpec {
    pub kind: ExactKind,
    pub sample_count: usize,
}

/// A sampled time slice: closed for the circle and paperclip, open for the
/// grim reaper and hairclip.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactSample {
    Closed(DiscreteCurve),
    Open(Polyline),
}

impl ExactSample {
    pub fn points(&self) -> &[PlanePoint] {
        match self {
            ExactSample::Closed(c) => c.vertices(),
            ExactSample::Open(p) => p.points(),
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, ExactSample::Open(_))
    }

    pub fn geometry_fields(&self) -> GeometryFields {
        match self {
            ExactSample::Closed(c) => c.geometry_fields(),
            ExactSample::Open(p) => p.geometry_fields(),
        }
    }

    pub fn closed(self) -> Option<DiscreteCurve> {
        match self {
            ExactSample::Closed(c) => Some(c),
            ExactSample::Open(_) => None,
        }
    }
}

impl ExactSolutionSpec {
    pub fn circle(radius: f64, center: PlanePoint, sample_count: usize) -> Self {
        ExactSolutionSpec {
            kind: ExactKind::Circle { radius, center },
            sample_count,
        }
    }

    pub fn grim_reaper(clip: f64, sample_count: usize) -> Self {
        ExactSolutionSpec {
            kind: ExactKind::GrimReaper { clip },
            sample_count,
        }
    }

    pub fn paperclip(sample_count: usize) -> Self {
        ExactSolutionSpec {
            kind: ExactKind::Paperclip,
            sample_count,
        }
    }

    pub fn hairclip(sample_count: usize) -> Self {
        ExactSolutionSpec {
            kind: ExactKind::Hairclip,
            sample_count,
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::TimeDomain {
                what: self.kind.name(),
                t,
                reason: "time must be finite",
            });
        }
        match self.kind {
            ExactKind::Circle { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(Error::param("radius", "must be positive"));
                }
                if t >= 0.5 * radius * radius {
                    return Err(Error::TimeDomain {
                        what: "circle",
                        t,
                        reason: "the circle is extinct at t = R^2/2",
                    });
                }
            }
            ExactKind::GrimReaper { clip } => {
                if !(clip > 0.0 && clip < FRAC_PI_2) {
                    return Err(Error::param("clip", "must lie in (0, pi/2)"));
                }
            }
            ExactKind::Paperclip => {
                if t >= 0.0 {
                    return Err(Error::TimeDomain {
                        what: "paperclip",
                        t,
                        reason: "the paperclip is extinct at t = 0",
                    });
                }
                if self.sample_count % 4 != 0 {
                    return Err(Error::param("sample_count", "paperclip needs a multiple of 4"));
                }
            }
            ExactKind::Hairclip => {}
        }
        let min = if matches!(self.kind, ExactKind::Circle { .. } | ExactKind::Paperclip) {
            crate::geometry::MIN_VERTICES
        } else {
            3
        };
        if self.sample_count < min {
            return Err(Error::TooFewVertices {
                count: self.sample_count,
                min,
            });
        }
        Ok(())
    }

    /// Samples the time-`t` slice.
    pub fn sample(&self, t: f64) -> Result<ExactSample> {
        self.check(t)?;
        let n = self.sample_count;
        match self.kind {
            ExactKind::Circle { radius, center } => {
                let r = (radius * radius - 2.0 * t).sqrt();
                crate::shapes::circle(r, center, n).map(ExactSample::Closed)
            }
            ExactKind::GrimReaper { clip } => {
                // x = atan(sinh s), y = log cosh s is the unit-speed
                // parametrization of y = -log cos x.
                let s_max = clip.tan().asinh();
                let points = (0..n)
                    .map(|k| {
                        let s = -s_max + 2.0 * s_max * k as f64 / (n - 1) as f64;
                        PlanePoint::new(s.sinh().atan(), log_cosh(s) + t)
                    })
                    .collect();
                Polyline::new(points).map(ExactSample::Open)
            }
            ExactKind::Paperclip => paperclip(t, n).map(ExactSample::Closed),
            ExactKind::Hairclip => {
                let c = (-t).exp();
                let points = (0..n)
                    .map(|k| {
                        let x = -PI + 2.0 * PI * k as f64 / (n - 1) as f64;
                        PlanePoint::new(x, (c * x.cos()).asinh())
                    })
                    .collect();
                Polyline::new(points).map(ExactSample::Open)
            }
        }
    }

    /// Residual of the defining equation at `p` and time `t`; zero on the
    /// solution.
    pub fn implicit_residual(&self, t: f64, p: PlanePoint) -> f64 {
        match self.kind {
            ExactKind::Circle { radius, center } => p.distance(center) - (radius * radius - 2.0 * t).sqrt(),
            ExactKind::GrimReaper { .. } => p.y + p.x.cos().ln() - t,
            ExactKind::Paperclip => p.y.cosh() - (-t).exp() * p.x.cos(),
            ExactKind::Hairclip => p.y.sinh() - (-t).exp() * p.x.cos(),
        }
    }
}

fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Distance from the origin to the paperclip along the ray at angle `phi`
/// in the first quadrant. The enclosed region `{cosh y < c cos x, |x| <
/// pi/2}` is convex, so the ray leaves it exactly once.
fn paperclip_ray(c: f64, phi: f64) -> f64 {
    let (s, co) = phi.sin_cos();
    let mut hi = f64::INFINITY;
    if co > 0.0 {
        hi = hi.min(FRAC_PI_2 / co);
    }
    if s > 0.0 {
        hi = hi.min(c.acosh() / s);
    }
    let inside = |rho: f64| c * (rho * co).cos() - (rho * s).cosh() > 0.0;
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn paperclip_point(c: f64, phi: f64) -> PlanePoint {
    if phi >= FRAC_PI_2 {
        return PlanePoint::new(0.0, c.acosh());
    }
    if phi <= 0.0 {
        return PlanePoint::new((1.0 / c).acos(), 0.0);
    }
    let rho = paperclip_ray(c, phi);
    PlanePoint::from_polar(rho, phi)
}

/// Samples the paperclip at uniform arclength. One quadrant is computed
/// and reflected, so the result is exactly symmetric under `x -> -x` and
/// `y -> -y`.
fn paperclip(t: f64, n: usize) -> Result<DiscreteCurve> {
    let c = (-t).exp();
    let q = n / 4;
    let dense = 64 * q;
    let angles: Vec<f64> = (0..=dense).map(|j| FRAC_PI_2 * j as f64 / dense as f64).collect();
    let pts: Vec<PlanePoint> = angles.iter().map(|&phi| paperclip_point(c, phi)).collect();
    let mut arc = Vec::with_capacity(dense + 1);
    arc.push(0.0);
    for j in 0..dense {
        arc.push(arc[j] + pts[j + 1].distance(pts[j]));
    }
    let quarter = arc[dense];
    let quadrant: Vec<PlanePoint> = (0..=q)
        .map(|k| {
            if k == 0 {
                return pts[0];
            }
            if k == q {
                return pts[dense];
            }
            let s = quarter * k as f64 / q as f64;
            let j = arc.partition_point(|&a| a <= s).saturating_sub(1).min(dense - 1);
            let w = (s - arc[j]) / (arc[j + 1] - arc[j]);
            paperclip_point(c, angles[j] + w * (angles[j + 1] - angles[j]))
        })
        .collect();

    let mut v = Vec::with_capacity(n);
    for j in 0..n {
        let p = if j <= q {
            quadrant[j]
        } else if j <= 2 * q {
            let p = quadrant[2 * q - j];
            PlanePoint::new(-p.x, p.y)
        } else if j <= 3 * q {
            let p = quadrant[j - 2 * q];
            PlanePoint::new(-p.x, -p.y)
        } else {
            let p = quadrant[4 * q - j];
            PlanePoint::new(p.x, -p.y)
        };
        v.push(p);
    }
    DiscreteCurve::new(v)
}

/// Largest deviation between the finite-difference normal speed of the
/// sampled family and its discrete curvature:
/// `max_i |<(p_i(t+h) - p_i(t-h)) / 2h, N_i> - kappa_i|`, with `N`, `kappa`
/// from the time-`t` slice. Open polylines skip [`OPEN_END_SKIP`] vertices
/// at each end.
pub fn normal_velocity_residual(spec: &ExactSolutionSpec, t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::param("h", "time step must be positive"));
    }
    let before = spec.sample(t - h)?;
    let now = spec.sample(t)?;
    let after = spec.sample(t + h)?;
    let fields = now.geometry_fields();
    let n = now.points().len();
    let skip = if now.is_open() { OPEN_END_SKIP } else { 0 };
    if n <= 2 * skip {
        return Err(Error::param("sample_count", "too few samples for the end exclusion"));
    }
    let (pb, pa) = (before.points(), after.points());
    Ok((skip..n - skip)
        .map(|i| {
            let v = (pa[i] - pb[i]) * (0.5 / h);
            (v.dot(fields.normal[i]) - fields.kappa[i]).abs()
        })
        .fold(0.0, f64::max))
}

/// Roundness defect (`deviation_ratio` of the least-squares circle) of the
/// paperclip at time `t < 0`; tends to zero as the paperclip becomes
/// extinct.
pub fn paperclip_extinction_roundness(t: f64, sample_count: usize) -> Result<f64> {
    let curve = ExactSolutionSpec::paperclip(sample_count).sample(t)?.closed().expect("paperclip is closed");
    Ok(singularity::roundness(&curve)?.deviation_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_residual(spec: &ExactSolutionSpec, t: f64) -> f64 {
        spec.sample(t)
            .unwrap()
            .points()
            .iter()
            .map(|&p| spec.implicit_residual(t, p).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn circle_radius_law() {
        let spec = ExactSolutionSpec::circle(1.0, PlanePoint::ORIGIN, 64);
        let c = spec.sample(0.375).unwrap().closed().unwrap();
        assert!(c.vertices().iter().all(|p| (p.norm() - 0.5).abs() < 1e-15));
        assert!(spec.sample(0.5).is_err());
    }

    #[test]
    fn grim_reaper_translates() {
        let spec = ExactSolutionSpec::grim_reaper(1.2, 65);
        let s0 = spec.sample(0.0).unwrap();
        let s1 = spec.sample(1.0).unwrap();
        assert_eq!(s0.points()[32], PlanePoint::new(0.0, 0.0));
        assert_eq!(s1.points()[32], PlanePoint::new(0.0, 1.0));
        assert!(ExactSolutionSpec::grim_reaper(1.6, 65).sample(0.0).is_err());
    }

    #[test]
    fn paperclip_at_minus_five() {
        // Oracle: bisection on cosh y = e^5, independent of the ray solver.
        let target = 5f64.exp();
        let (mut lo, mut hi) = (0.0f64, 20.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.cosh() < target {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((lo - 5.693_135_830_384).abs() < 1e-11);
        let c = ExactSolutionSpec::paperclip(512).sample(-5.0).unwrap().closed().unwrap();
        assert!((c.vertex(128).y - lo).abs() < 1e-12);
        assert_eq!(c.vertex(128).x, 0.0);
        assert!((c.vertex(384).y + lo).abs() < 1e-12);
    }

    #[test]
    fn samplers_satisfy_their_equations() {
        let cases = [
            (ExactSolutionSpec::circle(1.5, PlanePoint::new(0.3, -1.0), 128), 0.2),
            (ExactSolutionSpec::grim_reaper(1.45, 257), 0.7),
            (ExactSolutionSpec::paperclip(512), -3.0),
            (ExactSolutionSpec::paperclip(512), -0.01),
            (ExactSolutionSpec::hairclip(257), -2.0),
            (ExactSolutionSpec::hairclip(257), 3.0),
        ];
        for (spec, t) in cases {
            let r = max_residual(&spec, t);
            assert!(r < 1e-10, "{:?} at {t}: {r:e}", spec.kind);
        }
    }

    #[test]
    fn paperclip_is_symmetric() {
        let c = ExactSolutionSpec::paperclip(256).sample(-1.5).unwrap().closed().unwrap();
        let v = c.vertices();
        let n = v.len();
        for j in 0..n {
            let mx = v[(n / 2 + n - j) % n];
            assert!((mx.x + v[j].x).abs() < 1e-12 && (mx.y - v[j].y).abs() < 1e-12);
            let my = v[(n - j) % n];
            assert!((my.x - v[j].x).abs() < 1e-12 && (my.y + v[j].y).abs() < 1e-12);
        }
    }

    #[test]
    fn paperclip_spacing_is_uniform() {
        let c = ExactSolutionSpec::paperclip(512).sample(-3.0).unwrap().closed().unwrap();
        let e = c.edge_lengths();
        let mean = c.length() / 512.0;
        assert!(e.iter().all(|x| (x / mean - 1.0).abs() < 1e-3));
    }

    #[test]
    fn hairclip_flattens() {
        let s = ExactSolutionSpec::hairclip(201).sample(10.0).unwrap();
        assert!(s.points().iter().all(|p| p.y.abs() < 1e-3));
    }

    #[test]
    fn paperclip_rejects_nonnegative_time() {
        assert!(matches!(
            ExactSolutionSpec::paperclip(64).sample(0.0),
            Err(Error::TimeDomain { .. })
        ));
    }
}
