//! Canonical initial curves.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{DiscreteCurve, PlanePoint};

fn check_count(n: usize) -> Result<()> {
    if n < crate::geometry::MIN_VERTICES {
        return Err(Error::TooFewVertices {
            count: n,
            min: crate::geometry::MIN_VERTICES,
        });
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Regular `n`-gon inscribed in the circle of radius `radius`, first vertex
/// on the positive x-axis relative to `center`.
pub fn circle(radius: f64, center: PlanePoint, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    check_positive("radius", radius)?;
    DiscreteCurve::new(
        (0..n)
            .map(|i| center + PlanePoint::from_polar(radius, TAU * i as f64 / n as f64))
            .collect(),
    )
}

/// Ellipse with semi-axes `a` (along x) and `b`, uniform in the angle
/// parameter.
pub fn ellipse(a: f64, b: f64, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    check_positive("a", a)?;
    check_positive("b", b)?;
    DiscreteCurve::new(
        (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                PlanePoint::new(a * th.cos(), b * th.sin())
            })
            .collect(),
    )
}

/// Ellipse sampled at uniform arclength, starting at `(a, 0)`.
pub fn ellipse_arclength(a: f64, b: f64, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    let arc = EllipseArc::new(a, b)?;
    DiscreteCurve::new(
        (0..n)
            .map(|i| arc.point(arc.angle_at(arc.perimeter() * i as f64 / n as f64)))
            .collect(),
    )
}

/// Square of side `side` centred at the origin, `n` vertices (a multiple
/// of 4) evenly spaced with one at each corner.
pub fn square(side: f64, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    check_positive("side", side)?;
    if n % 4 != 0 {
        return Err(Error::param("n", "square needs a multiple of 4 vertices"));
    }
    let h = 0.5 * side;
    let corners = [
        PlanePoint::new(-h, -h),
        PlanePoint::new(h, -h),
        PlanePoint::new(h, h),
        PlanePoint::new(-h, h),
    ];
    let per_side = n / 4;
    let mut v = Vec::with_capacity(n);
    for c in 0..4 {
        for k in 0..per_side {
            v.push(corners[c].lerp(corners[(c + 1) % 4], k as f64 / per_side as f64));
        }
    }
    DiscreteCurve::new(v)
}

/// Square of side `side` with corners replaced by quarter circles of
/// radius `corner`, sampled at uniform arclength.
pub fn rounded_square(side: f64, corner: f64, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    check_positive("side", side)?;
    check_positive("corner", corner)?;
    if 2.0 * corner > side {
        return Err(Error::param("corner", "corner radius exceeds half the side"));
    }
    let flat = side - 2.0 * corner;
    let quarter = FRAC_PI_2 * corner;
    let piece = flat + quarter;
    let inner = 0.5 * side - corner;
    let total = 4.0 * piece;
    let point = |s: f64| {
        let k = ((s / piece) as usize).min(3);
        let local = s - k as f64 * piece;
        // side k runs counterclockwise starting from the bottom edge
        let base_angle = -FRAC_PI_2 + k as f64 * FRAC_PI_2;
        let dir = PlanePoint::from_polar(1.0, base_angle + FRAC_PI_2);
        let outward = PlanePoint::from_polar(1.0, base_angle);
        let start = outward * (0.5 * side) - dir * inner;
        if local <= flat {
            start + dir * local
        } else {
            let phi = (local - flat) / corner;
            let centre = outward * inner + dir * inner;
            centre + PlanePoint::from_polar(corner, base_angle + phi)
        }
    };
    DiscreteCurve::new((0..n).map(|i| point(total * i as f64 / n as f64)).collect())
}

/// Polar flower `r = radius (1 + amplitude cos(petals theta))`, resampled to
/// `n` evenly spaced vertices. Non-convex once
/// `amplitude > 1 / (1 + petals^2)`.
pub fn flower(petals: usize, amplitude: f64, radius: f64, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    check_positive("radius", radius)?;
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::param("amplitude", "must lie in [0, 1)"));
    }
    if petals == 0 {
        return Err(Error::param("petals", "must be at least 1"));
    }
    let fine = 16 * n;
    let dense = DiscreteCurve::new(
        (0..fine)
            .map(|i| {
                let th = TAU * i as f64 / fine as f64;
                PlanePoint::from_polar(radius * (1.0 + amplitude * (petals as f64 * th).cos()), th)
            })
            .collect(),
    )?;
    dense.resample(n)
}

/// Star-shaped curve `r = 1 + sum_m (a_m cos m theta + b_m sin m theta)`
/// over `m = 2..=modes`, with `a_m, b_m` drawn uniformly from
/// `[-amplitude / m^2, amplitude / m^2]` by a ChaCha generator seeded with
/// `seed`. `amplitude <= 0.5` keeps the radius above `1/3`.
pub fn random_star(modes: usize, amplitude: f64, seed: u64, n: usize) -> Result<DiscreteCurve> {
    check_count(n)?;
    if !(0.0..=0.5).contains(&amplitude) {
        return Err(Error::param("amplitude", "must lie in [0, 0.5]"));
    }
    if modes < 2 {
        return Err(Error::param("modes", "must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64, f64)> = (2..=modes)
        .map(|m| {
            let bound = amplitude / (m * m) as f64;
            let mf = m as f64;
            (mf, rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound))
        })
        .collect();
    let fine = 16 * n;
    let dense = DiscreteCurve::new(
        (0..fine)
            .map(|i| {
                let th = TAU * i as f64 / fine as f64;
                let r = 1.0 + coeffs.iter().map(|(m, a, b)| a * (m * th).cos() + b * (m * th).sin()).sum::<f64>();
                PlanePoint::from_polar(r, th)
            })
            .collect(),
    )?;
    dense.resample(n)
}

/// Arclength parametrization of the ellipse `(a cos t, b sin t)`.
#[derive(Clone, Debug)]
pub struct EllipseArc {
    a: f64,
    b: f64,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl EllipseArc {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("b", b)?;
        let m = 4096;
        let mut arc = EllipseArc {
            a,
            b,
            knots: (0..=m).map(|k| TAU * k as f64 / m as f64).collect(),
            cumulative: Vec::with_capacity(m + 1),
        };
        let mut s = 0.0;
        arc.cumulative.push(0.0);
        for k in 0..m {
            s += arc.integrate(arc.knots[k], arc.knots[k + 1]);
            arc.cumulative.push(s);
        }
        Ok(arc)
    }

    pub fn speed(&self, t: f64) -> f64 {
        (self.a * t.sin()).hypot(self.b * t.cos())
    }

    fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(x, w)| w * self.speed(mid + half * x))
            .sum::<f64>()
            * half
    }

    pub fn perimeter(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arclength from angle 0 to `t` in `[0, 2 pi]`.
    pub fn arclength(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|&x| x <= t).saturating_sub(1).min(self.knots.len() - 2);
        self.cumulative[k] + self.integrate(self.knots[k], t)
    }

    /// Angle parameter at arclength `s` (taken modulo the perimeter).
    pub fn angle_at(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.perimeter());
        let k = self
            .cumulative
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(self.knots.len() - 2);
        let mut t = self.knots[k]
            + (s - self.cumulative[k]) / (self.cumulative[k + 1] - self.cumulative[k])
                * (self.knots[k + 1] - self.knots[k]);
        for _ in 0..8 {
            let f = self.cumulative[k] + self.integrate(self.knots[k], t) - s;
            let step = f / self.speed(t);
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        t
    }

    pub fn point(&self, t: f64) -> PlanePoint {
        PlanePoint::new(self.a * t.cos(), self.b * t.sin())
    }

    /// Unit tangent in the direction of increasing parameter.
    pub fn tangent(&self, t: f64) -> PlanePoint {
        PlanePoint::new(-self.a * t.sin(), self.b * t.cos()).normalized()
    }

    /// Curvature `ab / (a^2 sin^2 t + b^2 cos^2 t)^{3/2}`.
    pub fn curvature(&self, t: f64) -> f64 {
        self.a * self.b / self.speed(t).powi(3)
    }

    /// Derivative of the curvature with respect to arclength.
    pub fn curvature_s(&self, t: f64) -> f64 {
        let v = self.speed(t);
        // d/dt of (a^2 sin^2 + b^2 cos^2) = (a^2 - b^2) sin 2t
        let dv2 = (self.a * self.a - self.b * self.b) * (2.0 * t).sin();
        let dk_dt = -1.5 * self.a * self.b * dv2 / v.powi(5);
        dk_dt / v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn random_star_is_seeded() {
        let a = random_star(6, 0.5, 7, 128).unwrap();
        let b = random_star(6, 0.5, 7, 128).unwrap();
        let c = random_star(6, 0.5, 8, 128).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.is_embedded());
        for p in a.vertices() {
            assert!(p.norm() > 1.0 / 3.0);
        }
    }

    #[test]
    fn ellipse_perimeter_matches_series() {
        // Ramanujan's second approximation is accurate to ~1e-10 at a/b = 2.
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ramanujan = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        let arc = EllipseArc::new(a, b).unwrap();
        assert!((arc.perimeter() - ramanujan).abs() < 1e-8);
        assert!((arc.arclength(PI) - 0.5 * arc.perimeter()).abs() < 1e-12);
    }

    #[test]
    fn ellipse_arclength_inversion_round_trips() {
        let arc = EllipseArc::new(2.0, 1.0).unwrap();
        for k in 0..50 {
            let s = arc.perimeter() * k as f64 / 50.0;
            let t = arc.angle_at(s);
            assert!((arc.arclength(t) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_curvature_derivative_matches_difference() {
        let arc = EllipseArc::new(2.0, 1.0).unwrap();
        let t = 0.7;
        let h = 1e-6;
        let ds = arc.arclength(t + h) - arc.arclength(t - h);
        let fd = (arc.curvature(t + h) - arc.curvature(t - h)) / ds;
        assert!((fd - arc.curvature_s(t)).abs() < 1e-6);
    }

    #[test]
    fn rounded_square_is_uniform_and_has_exact_area() {
        let c = rounded_square(2.0, 0.25, 512).unwrap();
        let exact = 4.0 - (4.0 - PI) * 0.25 * 0.25;
        // inscribed chords on the quarter arcs lose O(h^2) area and length
        assert!((c.enclosed_area() - exact).abs() < 5e-4);
        let perimeter = 4.0 * (2.0 - 0.5) + TAU * 0.25;
        assert!((c.length() - perimeter).abs() < 5e-4);
        let e = c.edge_lengths();
        let mean = c.length() / 512.0;
        assert!(e.iter().all(|x| (x - mean).abs() < 1e-3 * mean));
    }

    #[test]
    fn flower_has_inflections() {
        let c = flower(3, 0.25, 1.0, 512).unwrap();
        let f = c.geometry_fields();
        assert!(f.kappa_min() < 0.0);
        let changes = (0..512).filter(|&i| f.kappa[i].signum() != f.kappa[(i + 1) % 512].signum()).count();
        assert_eq!(changes, 6);
    }
}
