//! Closed embedded polygons and the pointwise geometry the flow consumes.
//!
//! A [`DiscreteCurve`] is a counterclockwise, embedded polygon with at least
//! [`MIN_VERTICES`] vertices. Curvature is the signed Menger curvature of
//! each vertex with its two neighbours, i.e. the reciprocal radius of the
//! circle through three consecutive vertices, which makes it exact on any
//! polygon inscribed in a circle. The unit normal points from a vertex
//! towards the centre of that circle (inward on convex stretches), so
//! `kappa * normal` is the curvature vector of the interpolating circle.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Fewest vertices a closed curve may carry; below this the three-point
/// stencils of neighbouring vertices overlap.
pub const MIN_VERTICES: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        PlanePoint::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, other: PlanePoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3d cross product.
    pub fn cross(self, other: PlanePoint) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        (self - other).norm()
    }

    /// Rotation by +pi/2.
    pub fn perp(self) -> PlanePoint {
        PlanePoint::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> PlanePoint {
        let (s, c) = angle.sin_cos();
        PlanePoint::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> PlanePoint {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: PlanePoint, w: f64) -> PlanePoint {
        self + (other - self) * w
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    fn add(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlanePoint {
    fn add_assign(&mut self, rhs: PlanePoint) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    fn sub(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = PlanePoint;
    fn mul(self, rhs: f64) -> PlanePoint {
        PlanePoint::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for PlanePoint {
    type Output = PlanePoint;
    fn neg(self) -> PlanePoint {
        PlanePoint::new(-self.x, -self.y)
    }
}

/// Twice the signed area enclosed by the closed polygon through `points`.
fn twice_signed_area(points: &[PlanePoint]) -> f64 {
    let n = points.len();
    // Shoelace about the first vertex keeps cancellation small for curves
    // far from the origin.
    let o = points[0];
    (0..n)
        .map(|i| (points[i] - o).cross(points[(i + 1) % n] - o))
        .sum()
}

/// Signed area of the closed polygon through `points` (positive when
/// counterclockwise).
pub fn signed_area(points: &[PlanePoint]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    0.5 * twice_signed_area(points)
}

/// Ordered closed polygon: the state of the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    vertices: Vec<PlanePoint>,
}

impl DiscreteCurve {
    /// Validates every curve invariant: vertex count, finiteness, nonzero
    /// edges, counterclockwise orientation and embeddedness.
    pub fn new(vertices: Vec<PlanePoint>) -> Result<Self> {
        validate_basic(&vertices)?;
        if let Some((first, second)) = first_crossing(&vertices) {
            return Err(Error::NotEmbedded { first, second });
        }
        Ok(DiscreteCurve { vertices })
    }

    /// Like [`DiscreteCurve::new`] but reverses a clockwise vertex list
    /// instead of rejecting it.
    pub fn with_positive_orientation(mut vertices: Vec<PlanePoint>) -> Result<Self> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        DiscreteCurve::new(vertices)
    }

    /// Skips the embeddedness test. Callers must know the polygon is simple.
    pub(crate) fn new_unchecked(vertices: Vec<PlanePoint>) -> Self {
        debug_assert!(vertices.len() >= MIN_VERTICES);
        DiscreteCurve { vertices }
    }

    /// Validates everything except embeddedness.
    pub(crate) fn new_without_embedding_check(vertices: Vec<PlanePoint>) -> Result<Self> {
        validate_basic(&vertices)?;
        Ok(DiscreteCurve { vertices })
    }

    pub fn vertices(&self) -> &[PlanePoint] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<PlanePoint> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> PlanePoint {
        self.vertices[i % self.vertices.len()]
    }

    /// `|p_{i+1} - p_i|` for every vertex `i`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        edge_lengths(&self.vertices, true)
    }

    /// Perimeter.
    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Shoelace area; positive by construction.
    pub fn enclosed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> PlanePoint {
        let n = self.vertices.len() as f64;
        let sum = self
            .vertices
            .iter()
            .fold(PlanePoint::ORIGIN, |acc, &p| acc + p);
        sum * (1.0 / n)
    }

    pub fn geometry_fields(&self) -> GeometryFields {
        GeometryFields::compute(&self.vertices, true)
    }

    pub fn is_embedded(&self) -> bool {
        is_embedded(&self.vertices)
    }

    /// Resamples to `n` vertices spread evenly along the current polygon,
    /// starting at vertex 0.
    ///
    /// The positions start at equal arclength and are then relaxed so that
    /// all output edges (chords) have equal length. That makes the map a
    /// projection: resampling an already resampled curve to the same count
    /// returns it unchanged.
    pub fn resample(&self, n: usize) -> Result<DiscreteCurve> {
        if n < MIN_VERTICES {
            return Err(Error::TooFewVertices {
                count: n,
                min: MIN_VERTICES,
            });
        }
        let path = ArclengthPath::closed(&self.vertices);
        let total = path.total();
        let mut increments = vec![total / n as f64; n];
        let mut params = vec![0.0; n];
        let mut points = Vec::with_capacity(n);
        for _ in 0..200 {
            let mut s = 0.0;
            for k in 0..n {
                params[k] = s;
                s += increments[k];
            }
            points.clear();
            points.extend(params.iter().map(|&s| path.point_at(s)));
            let chords: Vec<f64> = (0..n)
                .map(|k| points[(k + 1) % n].distance(points[k]))
                .collect();
            let mean = chords.iter().sum::<f64>() / n as f64;
            let spread = chords
                .iter()
                .map(|c| (c - mean).abs())
                .fold(0.0, f64::max)
                / mean;
            if spread < 1e-14 {
                break;
            }
            for (inc, c) in increments.iter_mut().zip(&chords) {
                *inc *= mean / c;
            }
            let sum: f64 = increments.iter().sum();
            for inc in &mut increments {
                *inc *= total / sum;
            }
        }
        DiscreteCurve::new(points)
    }

    /// Resamples to `n` vertices placed at equal arclength on the periodic
    /// cubic spline through the current vertices, starting at vertex 0.
    ///
    /// Unlike [`resample`](Self::resample) the new vertices lie on a smooth
    /// curve rather than on the old edges, so the discrete curvature does not
    /// pick up the kinks of the old polygon. Not idempotent.
    pub fn resample_smooth(&self, n: usize) -> Result<DiscreteCurve> {
        if n < MIN_VERTICES {
            return Err(Error::TooFewVertices {
                count: n,
                min: MIN_VERTICES,
            });
        }
        let spline = crate::spline::PeriodicSpline::new(&self.vertices);
        DiscreteCurve::new(spline.equal_arclength(n, 16))
    }

    /// Intrinsic distance (shorter arc, so at most half the perimeter) and
    /// extrinsic distance between vertices `i` and `j`.
    pub fn intrinsic_extrinsic(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        let n = self.len();
        if i >= n || j >= n {
            return Err(Error::param("vertex index", format!("({i}, {j}) with n = {n}")));
        }
        if i == j {
            return Err(Error::CoincidentVertices { first: i, second: j });
        }
        let edges = self.edge_lengths();
        let (lo, hi) = (i.min(j), i.max(j));
        let arc: f64 = edges[lo..hi].iter().sum();
        let total: f64 = edges.iter().sum();
        let d = self.vertices[i].distance(self.vertices[j]);
        if d == 0.0 {
            return Err(Error::CoincidentVertices { first: i, second: j });
        }
        Ok((arc.min(total - arc), d))
    }

    /// Applies `f` to every vertex. Orientation-reversing maps are rejected.
    pub fn map_points(&self, f: impl Fn(PlanePoint) -> PlanePoint) -> Result<DiscreteCurve> {
        DiscreteCurve::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    pub fn translated(&self, offset: PlanePoint) -> DiscreteCurve {
        DiscreteCurve::new_unchecked(self.vertices.iter().map(|&p| p + offset).collect())
    }

    pub fn rotated(&self, angle: f64) -> DiscreteCurve {
        DiscreteCurve::new_unchecked(self.vertices.iter().map(|&p| p.rotated(angle)).collect())
    }

    /// Homothety about the origin; `factor` must be positive.
    pub fn scaled(&self, factor: f64) -> DiscreteCurve {
        assert!(factor > 0.0, "scale factor must be positive");
        DiscreteCurve::new_unchecked(self.vertices.iter().map(|&p| p * factor).collect())
    }

    /// Starts the vertex cycle at `start` (same polygon, different labels).
    pub fn relabeled(&self, start: usize) -> DiscreteCurve {
        let mut v = self.vertices.clone();
        v.rotate_left(start % self.len());
        DiscreteCurve::new_unchecked(v)
    }
}

fn validate_basic(vertices: &[PlanePoint]) -> Result<()> {
    let n = vertices.len();
    if n < MIN_VERTICES {
        return Err(Error::TooFewVertices {
            count: n,
            min: MIN_VERTICES,
        });
    }
    if let Some(index) = vertices.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if let Some(index) = (0..n).find(|&i| vertices[i] == vertices[(i + 1) % n]) {
        return Err(Error::DegenerateEdge { index });
    }
    let area = signed_area(vertices);
    if area.is_nan() || area <= 0.0 {
        return Err(Error::Orientation { area });
    }
    Ok(())
}

fn edge_lengths(points: &[PlanePoint], closed: bool) -> Vec<f64> {
    let n = points.len();
    let m = if closed { n } else { n.saturating_sub(1) };
    (0..m)
        .map(|i| points[(i + 1) % n].distance(points[i]))
        .collect()
}

/// Open polyline, used for the non-compact exact solutions (grim reaper,
/// hairclip). Never a flow state.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    points: Vec<PlanePoint>,
}

impl Polyline {
    pub fn new(points: Vec<PlanePoint>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewVertices {
                count: points.len(),
                min: 3,
            });
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = (0..points.len() - 1).find(|&i| points[i] == points[i + 1]) {
            return Err(Error::DegenerateEdge { index });
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[PlanePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        edge_lengths(&self.points, false).iter().sum()
    }

    /// Same stencils as the closed case; the two end vertices copy the
    /// curvature data of their single neighbour and take the tangent of
    /// their only edge.
    pub fn geometry_fields(&self) -> GeometryFields {
        GeometryFields::compute(&self.points, false)
    }
}

/// Per-vertex geometric data of a polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryFields {
    /// Dual-cell arclength weight: half the sum of the two adjacent edges.
    pub ds: Vec<f64>,
    pub tangent: Vec<PlanePoint>,
    /// Tangent rotated by +pi/2; inward for a counterclockwise curve.
    pub normal: Vec<PlanePoint>,
    pub kappa: Vec<f64>,
    pub kappa_s: Vec<f64>,
    pub kappa_ss: Vec<f64>,
    /// `edge_lengths[i] = |p_{i+1} - p_i|`.
    pub edge_lengths: Vec<f64>,
}

impl GeometryFields {
    fn compute(points: &[PlanePoint], closed: bool) -> GeometryFields {
        let n = points.len();
        let edges = edge_lengths(points, closed);
        let mut ds = vec![0.0; n];
        let mut tangent = vec![PlanePoint::ORIGIN; n];
        let mut normal = vec![PlanePoint::ORIGIN; n];
        let mut kappa = vec![0.0; n];

        let interior = if closed { 0..n } else { 1..n - 1 };
        for i in interior.clone() {
            let prev = points[(i + n - 1) % n];
            let here = points[i];
            let next = points[(i + 1) % n];
            let (t, nrm, k) = circle_through(prev, here, next);
            tangent[i] = t;
            normal[i] = nrm;
            kappa[i] = k;
            ds[i] = 0.5 * (edges[(i + n - 1) % n] + edges[i % edges.len()]);
        }
        if !closed {
            let last = n - 1;
            tangent[0] = (points[1] - points[0]).normalized();
            tangent[last] = (points[last] - points[last - 1]).normalized();
            normal[0] = tangent[0].perp();
            normal[last] = tangent[last].perp();
            kappa[0] = kappa[1];
            kappa[last] = kappa[last - 1];
            ds[0] = 0.5 * edges[0];
            ds[last] = 0.5 * edges[last - 1];
        }

        let mut kappa_s = vec![0.0; n];
        let mut kappa_ss = vec![0.0; n];
        for i in interior {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let hm = edges[im];
            let hp = edges[i % edges.len()];
            let (d1, d2) = three_point_derivatives(kappa[im], kappa[i], kappa[ip], hm, hp);
            kappa_s[i] = d1;
            kappa_ss[i] = d2;
        }
        if !closed {
            kappa_s[0] = kappa_s[1];
            kappa_ss[0] = kappa_ss[1];
            kappa_s[n - 1] = kappa_s[n - 2];
            kappa_ss[n - 1] = kappa_ss[n - 2];
        }

        GeometryFields {
            ds,
            tangent,
            normal,
            kappa,
            kappa_s,
            kappa_ss,
            edge_lengths: edges,
        }
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `sum kappa_i ds_i`; `2 pi` up to discretization for an embedded
    /// counterclockwise curve.
    pub fn total_curvature(&self) -> f64 {
        self.kappa.iter().zip(&self.ds).map(|(k, w)| k * w).sum()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge(&self) -> f64 {
        self.edge_lengths.iter().copied().fold(0.0, f64::max)
    }

    /// Index and value of the largest `|kappa|`; ties go to the lowest index.
    pub fn kappa_abs_max(&self) -> (usize, f64) {
        let mut best = (0, self.kappa[0].abs());
        for (i, k) in self.kappa.iter().enumerate().skip(1) {
            if k.abs() > best.1 {
                best = (i, k.abs());
            }
        }
        best
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Unit tangent, unit normal (tangent rotated by +pi/2) and signed
/// curvature of the circle through `prev`, `here`, `next`, evaluated at
/// `here`. Collinear triples give zero curvature and the chord tangent.
fn circle_through(prev: PlanePoint, here: PlanePoint, next: PlanePoint) -> (PlanePoint, PlanePoint, f64) {
    let a = here - prev;
    let b = next - here;
    let chord = next - prev;
    let la = a.norm();
    let lb = b.norm();
    let lc = chord.norm();
    let cross = a.cross(b);
    let kappa = if lc > 0.0 { 2.0 * cross / (la * lb * lc) } else { 0.0 };

    // Circumcentre direction relative to `here`, up to sign; stays finite
    // (perpendicular to the chord) when the points are collinear.
    let back = -a;
    let w = PlanePoint::new(
        b.y * back.norm_sq() - back.y * b.norm_sq(),
        back.x * b.norm_sq() - b.x * back.norm_sq(),
    );
    let wn = w.norm();
    let mut normal = if wn > 0.0 { w * (1.0 / wn) } else { chord.normalized().perp() };
    let mut tangent = PlanePoint::new(normal.y, -normal.x);
    if tangent.dot(chord) < 0.0 {
        normal = -normal;
        tangent = -tangent;
    }
    (tangent, normal, kappa)
}

/// First and second derivative at the middle node of three samples with
/// spacings `hm` (left) and `hp` (right). Exact for quadratics.
pub(crate) fn three_point_derivatives(fm: f64, f0: f64, fp: f64, hm: f64, hp: f64) -> (f64, f64) {
    let denom = hm * hp * (hm + hp);
    let d1 = (-hp * hp * fm + (hp * hp - hm * hm) * f0 + hm * hm * fp) / denom;
    let d2 = 2.0 * (hp * fm - (hm + hp) * f0 + hm * fp) / denom;
    (d1, d2)
}

/// Arclength parametrization of a polygon.
pub(crate) struct ArclengthPath<'a> {
    points: &'a [PlanePoint],
    cumulative: Vec<f64>,
    closed: bool,
}

impl<'a> ArclengthPath<'a> {
    pub(crate) fn closed(points: &'a [PlanePoint]) -> Self {
        let mut cumulative = Vec::with_capacity(points.len() + 1);
        cumulative.push(0.0);
        let mut s = 0.0;
        for e in edge_lengths(points, true) {
            s += e;
            cumulative.push(s);
        }
        ArclengthPath {
            points,
            cumulative,
            closed: true,
        }
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub(crate) fn point_at(&self, s: f64) -> PlanePoint {
        let n = self.points.len();
        let total = self.total();
        let s = if self.closed { s.rem_euclid(total) } else { s.clamp(0.0, total) };
        let seg = self
            .cumulative
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(self.cumulative.len() - 2);
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let w = if len > 0.0 { (s - self.cumulative[seg]) / len } else { 0.0 };
        self.points[seg].lerp(self.points[(seg + 1) % n], w)
    }
}

/// Orientation sign of the triangle (a, b, c).
fn orient(a: PlanePoint, b: PlanePoint, c: PlanePoint) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: PlanePoint, b: PlanePoint, p: PlanePoint) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: PlanePoint, p2: PlanePoint, q1: PlanePoint, q2: PlanePoint) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn edges_adjacent(i: usize, j: usize, n: usize) -> bool {
    i == j || (i + 1) % n == j || (j + 1) % n == i
}

/// True iff no two non-adjacent edges of the closed polygon intersect.
pub fn is_embedded(points: &[PlanePoint]) -> bool {
    first_crossing(points).is_none()
}

/// Reference O(n^2) scan over all non-adjacent edge pairs.
pub fn first_crossing_brute_force(points: &[PlanePoint]) -> Option<(usize, usize)> {
    let n = points.len();
    for i in 0..n {
        for j in i + 2..n {
            if edges_adjacent(i, j, n) {
                continue;
            }
            if segments_intersect(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Calls `visit(i, j)` once for every pair of non-adjacent edges whose
/// bounding boxes, grown by `pad` on every side, overlap. Edges are binned
/// on a uniform grid with cells at least as large as the longest padded
/// edge, so the work is close to linear for well-spread polygons.
fn for_each_near_edge_pair(points: &[PlanePoint], pad: f64, mut visit: impl FnMut(usize, usize)) {
    let n = points.len();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut max_edge: f64 = 0.0;
    for i in 0..n {
        let p = points[i];
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
        max_edge = max_edge.max(p.distance(points[(i + 1) % n]));
    }
    let (xmin, ymin) = (xmin - pad, ymin - pad);
    let width = xmax + pad - xmin;
    let height = ymax + pad - ymin;
    let cell = (max_edge + 2.0 * pad)
        .max((width * height / (4.0 * n as f64)).sqrt())
        .max(1e-300);
    let nx = ((width / cell) as usize + 1).max(1);
    let ny = ((height / cell) as usize + 1).max(1);
    let cell_of = |v: f64, lo: f64, count: usize| (((v - lo) / cell) as usize).min(count - 1);

    let ranges: Vec<[usize; 4]> = (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            [
                cell_of(a.x.min(b.x) - pad, xmin, nx),
                cell_of(a.x.max(b.x) + pad, xmin, nx),
                cell_of(a.y.min(b.y) - pad, ymin, ny),
                cell_of(a.y.max(b.y) + pad, ymin, ny),
            ]
        })
        .collect();

    // Bucket edges by cell (counting sort).
    let mut counts = vec![0usize; nx * ny + 1];
    for r in &ranges {
        for cy in r[2]..=r[3] {
            for cx in r[0]..=r[1] {
                counts[cy * nx + cx + 1] += 1;
            }
        }
    }
    for c in 1..counts.len() {
        counts[c] += counts[c - 1];
    }
    let mut fill = counts.clone();
    let mut members = vec![0usize; counts[nx * ny]];
    for (i, r) in ranges.iter().enumerate() {
        for cy in r[2]..=r[3] {
            for cx in r[0]..=r[1] {
                let c = cy * nx + cx;
                members[fill[c]] = i;
                fill[c] += 1;
            }
        }
    }

    for cy in 0..ny {
        for cx in 0..nx {
            let c = cy * nx + cx;
            let bucket = &members[counts[c]..counts[c + 1]];
            for (k, &i) in bucket.iter().enumerate() {
                for &j in &bucket[k + 1..] {
                    if edges_adjacent(i, j, n) {
                        continue;
                    }
                    let (ri, rj) = (&ranges[i], &ranges[j]);
                    // Visit each pair once, in the first cell the two boxes share.
                    if ri[0].max(rj[0]) != cx || ri[2].max(rj[2]) != cy {
                        continue;
                    }
                    visit(i.min(j), i.max(j));
                }
            }
        }
    }
}

fn bounds_are_finite(points: &[PlanePoint]) -> bool {
    points.iter().all(|p| p.is_finite())
}

/// Lowest-indexed pair of crossing non-adjacent edges, if any. Agrees with
/// [`first_crossing_brute_force`].
pub fn first_crossing(points: &[PlanePoint]) -> Option<(usize, usize)> {
    let n = points.len();
    if n < 64 || !bounds_are_finite(points) {
        return first_crossing_brute_force(points);
    }
    let mut best: Option<(usize, usize)> = None;
    for_each_near_edge_pair(points, 0.0, |i, j| {
        if best.map_or(true, |b| (i, j) < b)
            && segments_intersect(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n])
        {
            best = Some((i, j));
        }
    });
    best
}

/// Distance between the closed segments `[a, b]` and `[c, d]`.
pub fn segment_distance(a: PlanePoint, b: PlanePoint, c: PlanePoint, d: PlanePoint) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// `min(cap, smallest distance between two non-adjacent edges)`. Zero
/// exactly when the polygon is not embedded.
pub fn edge_clearance(points: &[PlanePoint], cap: f64) -> f64 {
    let n = points.len();
    let mut best = cap;
    if n < 64 || !bounds_are_finite(points) {
        for i in 0..n {
            for j in i + 1..n {
                if !edges_adjacent(i, j, n) {
                    best = best.min(segment_distance(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]));
                }
            }
        }
        return best;
    }
    for_each_near_edge_pair(points, 0.5 * cap, |i, j| {
        best = best.min(segment_distance(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]));
    });
    best
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let w = if len_sq > 0.0 { ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * w)
}

/// Largest distance from a vertex of `from` to the closed polygon `to`.
fn directed_hausdorff(from: &[PlanePoint], to: &[PlanePoint]) -> f64 {
    let m = to.len();
    from.iter()
        .map(|&p| {
            (0..m)
                .map(|j| point_segment_distance(p, to[j], to[(j + 1) % m]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two closed polygons, measured from
/// the vertices of each to the edges of the other.
pub fn hausdorff_distance(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    directed_hausdorff(a.vertices(), b.vertices()).max(directed_hausdorff(b.vertices(), a.vertices()))
}

/// Smallest distance from a vertex of either polygon to the other polygon.
/// For disjoint polygons this is the distance between them.
pub fn polygon_separation(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    let one_way = |from: &[PlanePoint], to: &[PlanePoint]| {
        let m = to.len();
        from.iter()
            .flat_map(|&p| (0..m).map(move |j| point_segment_distance(p, to[j], to[(j + 1) % m])))
            .fold(f64::INFINITY, f64::min)
    };
    one_way(a.vertices(), b.vertices()).min(one_way(b.vertices(), a.vertices()))
}
