//! Periodic cubic spline through the vertices of a closed polygon, used to
//! place new vertices on a smooth curve when remeshing.

use crate::geometry::PlanePoint;

/// Solves a cyclic tridiagonal system with sub-diagonal `a`, diagonal `b`
/// and super-diagonal `c`; `a[0]` couples row 0 to the last unknown and
/// `c[n-1]` couples the last row to unknown 0.
fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let gamma = -b[0];
    let mut diag = b.to_vec();
    diag[0] -= gamma;
    diag[n - 1] -= a[0] * c[n - 1] / gamma;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c[n - 1];
    let x = solve_tridiagonal(a, &diag, c, d);
    let z = solve_tridiagonal(a, &diag, c, &u);
    let factor = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect()
}

/// Thomas algorithm; `a[0]` and `c[n-1]` are ignored.
fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// `C^2` periodic interpolant of a closed polygon, parametrized by
/// cumulative chord length.
pub(crate) struct PeriodicSpline {
    points: Vec<PlanePoint>,
    knots: Vec<f64>,
    second: Vec<PlanePoint>,
}

impl PeriodicSpline {
    pub(crate) fn new(points: &[PlanePoint]) -> Self {
        let n = points.len();
        let h: Vec<f64> = (0..n).map(|i| points[(i + 1) % n].distance(points[i])).collect();
        let mut knots = Vec::with_capacity(n + 1);
        let mut s = 0.0;
        knots.push(0.0);
        for e in &h {
            s += e;
            knots.push(s);
        }
        let a: Vec<f64> = (0..n).map(|i| h[(i + n - 1) % n]).collect();
        let b: Vec<f64> = (0..n).map(|i| 2.0 * (h[(i + n - 1) % n] + h[i])).collect();
        let rhs = |coord: fn(PlanePoint) -> f64| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let im = (i + n - 1) % n;
                    let ip = (i + 1) % n;
                    6.0 * ((coord(points[ip]) - coord(points[i])) / h[i]
                        - (coord(points[i]) - coord(points[im])) / h[im])
                })
                .collect()
        };
        let mx = solve_cyclic(&a, &b, &h, &rhs(|p| p.x));
        let my = solve_cyclic(&a, &b, &h, &rhs(|p| p.y));
        PeriodicSpline {
            points: points.to_vec(),
            knots,
            second: mx.into_iter().zip(my).map(|(x, y)| PlanePoint::new(x, y)).collect(),
        }
    }

    pub(crate) fn period(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Point on segment `i` at local parameter `u` in `[0, h_i]`.
    fn eval_segment(&self, i: usize, u: f64) -> PlanePoint {
        let n = self.points.len();
        let j = (i + 1) % n;
        let h = self.knots[i + 1] - self.knots[i];
        let v = h - u;
        let (m0, m1) = (self.second[i], self.second[j]);
        let (p0, p1) = (self.points[i], self.points[j]);
        m0 * (v * v * v / (6.0 * h))
            + m1 * (u * u * u / (6.0 * h))
            + (p0 * (1.0 / h) - m0 * (h / 6.0)) * v
            + (p1 * (1.0 / h) - m1 * (h / 6.0)) * u
    }

    pub(crate) fn eval(&self, s: f64) -> PlanePoint {
        let s = s.rem_euclid(self.period());
        let i = self
            .knots
            .partition_point(|&k| k <= s)
            .saturating_sub(1)
            .min(self.points.len() - 1);
        self.eval_segment(i, s - self.knots[i])
    }

    /// `n` points at (nearly) equal arclength along the spline, the first at
    /// parameter 0. Arclength is tabulated with `oversample` chords per
    /// segment and inverted linearly.
    pub(crate) fn equal_arclength(&self, n: usize, oversample: usize) -> Vec<PlanePoint> {
        let m = self.points.len() * oversample;
        let period = self.period();
        let params: Vec<f64> = (0..=m).map(|k| period * k as f64 / m as f64).collect();
        let mut arc = Vec::with_capacity(m + 1);
        arc.push(0.0);
        let mut prev = self.eval(0.0);
        let mut total = 0.0;
        for &s in &params[1..] {
            let p = self.eval(s);
            total += p.distance(prev);
            arc.push(total);
            prev = p;
        }
        (0..n)
            .map(|k| {
                let target = total * k as f64 / n as f64;
                let j = arc.partition_point(|&a| a <= target).saturating_sub(1).min(m - 1);
                let w = (target - arc[j]) / (arc[j + 1] - arc[j]);
                self.eval(params[j] + w * (params[j + 1] - params[j]))
            })
            .collect()
    }
}
