//! Closed bounded convex constraint sets and their exact projections.
//!
//! Every set lives in `R^1` or `R^2`. Points are passed around as `[f64; 2]`;
//! for the one-dimensional [`ConstraintSet::Interval`] only the first
//! coordinate is meaningful and the second is carried through as zero.

use thiserror::Error;

/// Slack used when deciding that a point already lies in the set. Points
/// inside this band are returned untouched, which makes projection exactly
/// idempotent in floating point.
const MEMBERSHIP_EPS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("interval requires finite lo < hi, got [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("disk radius must be finite and positive, got {0}")]
    BadRadius(f64),
    #[error("triangle vertices are collinear or not finite")]
    DegenerateTriangle,
    #[error("lens half-separation must be finite and positive (generating disks must overlap), got {0}")]
    BadLens(f64),
    #[error("point has {got} coordinates, set has dimension {expected}")]
    Dimension { expected: usize, got: usize },
}

/// A validated convex constraint set.
///
/// Construct through [`ConstraintSet::interval`], [`ConstraintSet::disk`],
/// [`ConstraintSet::triangle`] or [`ConstraintSet::lens`]; the constructors
/// reject degenerate parameters so projection itself never fails.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    Interval { lo: f64, hi: f64 },
    Disk { radius: f64 },
    /// Vertices stored counter-clockwise.
    Triangle { vertices: [[f64; 2]; 3] },
    /// Intersection of the disks centred at `(0, c)` and `(0, -c)` with
    /// radius `sqrt(1 + c^2)`. The tips sit at `(±1, 0)`.
    Lens { c: f64 },
}

/// Isolated minima of the radial potential over the set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhasePointList {
    pub points: Vec<[f64; 2]>,
}

impl PhasePointList {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

impl ConstraintSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, ConvexError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ConvexError::EmptyInterval { lo, hi });
        }
        Ok(Self::Interval { lo, hi })
    }

    pub fn disk(radius: f64) -> Result<Self, ConvexError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ConvexError::BadRadius(radius));
        }
        Ok(Self::Disk { radius })
    }

    /// Any non-degenerate triangle; vertex order is normalised to
    /// counter-clockwise while keeping the first vertex first.
    pub fn triangle(vertices: [[f64; 2]; 3]) -> Result<Self, ConvexError> {
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ConvexError::DegenerateTriangle);
        }
        let [a, b, c] = vertices;
        let area2 = cross(sub(b, a), sub(c, a));
        let scale = dist2(b, a).max(dist2(c, a)).max(dist2(c, b));
        if area2.abs() <= 1e-12 * scale {
            return Err(ConvexError::DegenerateTriangle);
        }
        let vertices = if area2 > 0.0 { [a, b, c] } else { [a, c, b] };
        Ok(Self::Triangle { vertices })
    }

    /// Equilateral triangle inscribed in the unit circle with a vertex at
    /// `(0, 1)`.
    pub fn unit_triangle() -> Self {
        let s = 3f64.sqrt() / 2.0;
        Self::triangle([[0.0, 1.0], [-s, -0.5], [s, -0.5]]).expect("unit triangle is valid")
    }

    pub fn lens(c: f64) -> Result<Self, ConvexError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ConvexError::BadLens(c));
        }
        Ok(Self::Lens { c })
    }

    /// Intrinsic dimension `m`.
    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Interval { .. } => "interval",
            Self::Disk { .. } => "disk",
            Self::Triangle { .. } => "triangle",
            Self::Lens { .. } => "lens",
        }
    }

    /// Radial extent `d_C = max |y|` over the set.
    pub fn radial_extent(&self) -> f64 {
        match *self {
            Self::Interval { lo, hi } => lo.abs().max(hi.abs()),
            Self::Disk { radius } => radius,
            Self::Triangle { vertices } => vertices
                .iter()
                .map(|v| dot(*v, *v).sqrt())
                .fold(0.0, f64::max),
            Self::Lens { .. } => 1.0,
        }
    }

    /// Radius of each generating disk of a lens.
    fn lens_radius(c: f64) -> f64 {
        (1.0 + c * c).sqrt()
    }

    /// Euclidean projection of `p` onto the set.
    ///
    /// Points already in the set (up to a `1e-14` band) come back bit-for-bit
    /// unchanged, so `project(project(p)) == project(p)` holds exactly.
    pub fn project_point(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            Self::Interval { lo, hi } => [p[0].clamp(lo, hi), 0.0],
            Self::Disk { radius } => project_disk(p, [0.0, 0.0], radius),
            Self::Triangle { vertices } => project_triangle(&vertices, p),
            Self::Lens { c } => project_lens(c, p),
        }
    }

    /// Slice-based projection; `p.len()` must equal [`Self::dim`].
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>, ConvexError> {
        let point = self.embed(p)?;
        let q = self.project_point(point);
        Ok(q[..self.dim()].to_vec())
    }

    /// True iff the distance from `p` to the set is at most `tol`.
    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool, ConvexError> {
        let point = self.embed(p)?;
        Ok(self.contains_point(point, tol))
    }

    pub fn contains_point(&self, p: [f64; 2], tol: f64) -> bool {
        let q = self.project_point(p);
        dist2(p, q).sqrt() <= tol
    }

    fn embed(&self, p: &[f64]) -> Result<[f64; 2], ConvexError> {
        let m = self.dim();
        if p.len() != m {
            return Err(ConvexError::Dimension {
                expected: m,
                got: p.len(),
            });
        }
        Ok(if m == 1 { [p[0], 0.0] } else { [p[0], p[1]] })
    }

    /// The isolated maximisers of `|p|` over the set, i.e. the distinct
    /// phases of the radial potential. A disk has a continuum of maximisers
    /// and returns an empty list.
    pub fn phase_points(&self) -> PhasePointList {
        let candidates: Vec<[f64; 2]> = match *self {
            Self::Interval { lo, hi } => vec![[lo, 0.0], [hi, 0.0]],
            Self::Disk { .. } => Vec::new(),
            Self::Triangle { vertices } => vertices.to_vec(),
            Self::Lens { .. } => vec![[-1.0, 0.0], [1.0, 0.0]],
        };
        let d = self.radial_extent();
        let points = candidates
            .into_iter()
            .filter(|p| (dot(*p, *p).sqrt() - d).abs() <= 1e-9 * d.max(1.0))
            .collect();
        PhasePointList { points }
    }

    /// Dense sample of the boundary, used by tests and diagnostics that need
    /// a geometric reference independent of the projection routine.
    pub fn boundary_sample(&self, n: usize) -> Vec<[f64; 2]> {
        let n = n.max(3);
        match *self {
            Self::Interval { lo, hi } => vec![[lo, 0.0], [hi, 0.0]],
            Self::Disk { radius } => (0..n)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n as f64;
                    [radius * t.cos(), radius * t.sin()]
                })
                .collect(),
            Self::Triangle { vertices } => {
                let per_edge = n / 3 + 1;
                let mut out = Vec::with_capacity(3 * per_edge);
                for e in 0..3 {
                    let a = vertices[e];
                    let b = vertices[(e + 1) % 3];
                    for i in 0..per_edge {
                        let t = i as f64 / per_edge as f64;
                        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                out
            }
            Self::Lens { c } => {
                let r = Self::lens_radius(c);
                // Lower arc belongs to the disk centred at (0, c).
                let half = (c / r).acos();
                let per_arc = n / 2 + 1;
                let mut out = Vec::with_capacity(2 * per_arc + 1);
                for (cy, mid) in [(c, -std::f64::consts::FRAC_PI_2), (-c, std::f64::consts::FRAC_PI_2)] {
                    for i in 0..=per_arc {
                        let t = mid - half + 2.0 * half * i as f64 / per_arc as f64;
                        out.push([r * t.cos(), cy + r * t.sin()]);
                    }
                }
                out
            }
        }
    }
}

#[inline]
fn project_disk(p: [f64; 2], centre: [f64; 2], radius: f64) -> [f64; 2] {
    let d = sub(p, centre);
    let n2 = dot(d, d);
    if n2 <= radius * radius * (1.0 + MEMBERSHIP_EPS) {
        return p;
    }
    let n = n2.sqrt();
    [centre[0] + d[0] / n * radius, centre[1] + d[1] / n * radius]
}

#[inline]
fn in_disk(p: [f64; 2], centre: [f64; 2], radius: f64) -> bool {
    dist2(p, centre) <= radius * radius * (1.0 + MEMBERSHIP_EPS)
}

/// Region classification: interior, three edge slabs, three vertex cones.
fn project_triangle(v: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 2] {
    let mut outside = [false; 3];
    for e in 0..3 {
        let a = v[e];
        let b = v[(e + 1) % 3];
        let ab = sub(b, a);
        // Counter-clockwise order: outward side has negative cross product.
        let signed = cross(ab, sub(p, a)) / dot(ab, ab).sqrt();
        outside[e] = signed < -MEMBERSHIP_EPS;
    }
    if !outside.iter().any(|&o| o) {
        return p;
    }
    for e in 0..3 {
        if !outside[e] {
            continue;
        }
        let a = v[e];
        let b = v[(e + 1) % 3];
        let ab = sub(b, a);
        let t = dot(sub(p, a), ab) / dot(ab, ab);
        if (0.0..=1.0).contains(&t) {
            return [a[0] + t * ab[0], a[1] + t * ab[1]];
        }
    }
    for i in 0..3 {
        let a = v[i];
        let next = v[(i + 1) % 3];
        let prev = v[(i + 2) % 3];
        let ap = sub(p, a);
        if dot(ap, sub(next, a)) <= 0.0 && dot(ap, sub(prev, a)) <= 0.0 {
            return a;
        }
    }
    // Unreachable in exact arithmetic; pick the nearest clamped edge point.
    let mut best = v[0];
    let mut best_d = f64::INFINITY;
    for e in 0..3 {
        let a = v[e];
        let ab = sub(v[(e + 1) % 3], a);
        let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
        let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = dist2(p, q);
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Closed-form projection onto the lens. Candidates are tried in the fixed
/// order: upper-centred disk, lower-centred disk, tip `(+1, 0)`, tip `(-1, 0)`.
fn project_lens(c: f64, p: [f64; 2]) -> [f64; 2] {
    let r = ConstraintSet::lens_radius(c);
    let ca = [0.0, c];
    let cb = [0.0, -c];
    let in_a = in_disk(p, ca, r);
    let in_b = in_disk(p, cb, r);
    if in_a && in_b {
        return p;
    }
    if !in_a {
        let q = project_disk(p, ca, r);
        if in_disk(q, cb, r) {
            return q;
        }
    }
    if !in_b {
        let q = project_disk(p, cb, r);
        if in_disk(q, ca, r) {
            return q;
        }
    }
    let plus = [1.0, 0.0];
    let minus = [-1.0, 0.0];
    if dist2(p, plus) <= dist2(p, minus) {
        plus
    } else {
        minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
        dist2(a, b).sqrt() <= tol
    }

    #[test]
    fn disk_scales_radially() {
        let d = ConstraintSet::disk(1.0).unwrap();
        assert_eq!(d.project(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
    }

    #[test]
    fn interval_clamps() {
        let s = ConstraintSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(s.project(&[1.7]).unwrap(), vec![1.0]);
        assert_eq!(s.project(&[-0.25]).unwrap(), vec![-0.25]);
    }

    #[test]
    fn triangle_vertex_and_edge_regions() {
        let t = ConstraintSet::unit_triangle();
        assert!(close(t.project_point([0.0, 2.0]), [0.0, 1.0], 1e-15));
        assert!(close(t.project_point([0.0, -1.0]), [0.0, -0.5], 1e-15));
    }

    #[test]
    fn triangle_orientation_is_normalised() {
        let s = 3f64.sqrt() / 2.0;
        let cw = ConstraintSet::triangle([[0.0, 1.0], [s, -0.5], [-s, -0.5]]).unwrap();
        assert_eq!(cw, ConstraintSet::unit_triangle());
    }

    #[test]
    fn lens_examples() {
        let l = ConstraintSet::lens(1.0).unwrap();
        assert!(close(l.project_point([2.0, 0.0]), [1.0, 0.0], 1e-15));
        let q = l.project_point([0.0, 3.0]);
        assert!(close(q, [0.0, 2f64.sqrt() - 1.0], 1e-15));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            ConstraintSet::triangle([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
            Err(ConvexError::DegenerateTriangle)
        ));
        assert!(matches!(ConstraintSet::lens(0.0), Err(ConvexError::BadLens(_))));
        assert!(matches!(ConstraintSet::lens(f64::INFINITY), Err(ConvexError::BadLens(_))));
        assert!(ConstraintSet::disk(-1.0).is_err());
        assert!(ConstraintSet::interval(1.0, 1.0).is_err());
    }

    #[test]
    fn contains_examples() {
        let d = ConstraintSet::disk(1.0).unwrap();
        assert!(d.contains(&[0.0, 0.0], 0.0).unwrap());
        assert!(!d.contains(&[1.0 + 1e-6, 0.0], 1e-9).unwrap());
        let l = ConstraintSet::lens(1.0).unwrap();
        assert!(l.contains(&[0.999, 0.0], 1e-9).unwrap());
        assert!(!l.contains(&[1.001, 0.0], 1e-9).unwrap());
        assert!(matches!(
            d.contains(&[0.0], 0.0),
            Err(ConvexError::Dimension { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn phase_points_per_set() {
        let i = ConstraintSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(i.phase_points().points, vec![[-1.0, 0.0], [1.0, 0.0]]);
        assert!(ConstraintSet::disk(1.0).unwrap().phase_points().is_empty());
        let t = ConstraintSet::unit_triangle();
        let ConstraintSet::Triangle { vertices } = t else { unreachable!() };
        assert_eq!(t.phase_points().points, vertices.to_vec());
        let l = ConstraintSet::lens(1.0).unwrap();
        assert_eq!(l.phase_points().points, vec![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn phase_points_maximise_norm_over_boundary() {
        for set in [
            ConstraintSet::interval(-1.0, 1.0).unwrap(),
            ConstraintSet::unit_triangle(),
            ConstraintSet::lens(1.0).unwrap(),
            ConstraintSet::lens(0.4).unwrap(),
        ] {
            let max = set
                .boundary_sample(20_000)
                .iter()
                .map(|q| dot(*q, *q).sqrt())
                .fold(0.0, f64::max);
            for p in set.phase_points().points {
                assert!((dot(p, p).sqrt() - max).abs() < 1e-9, "{set:?}");
            }
        }
    }

    #[test]
    fn asymmetric_interval_keeps_only_global_maximiser() {
        let i = ConstraintSet::interval(-0.5, 1.0).unwrap();
        assert_eq!(i.phase_points().points, vec![[1.0, 0.0]]);
    }

    #[test]
    fn lens_boundary_sample_lies_on_both_disks() {
        for c in [0.3, 1.0, 2.5] {
            let r = (1.0_f64 + c * c).sqrt();
            let set = ConstraintSet::lens(c).unwrap();
            let sample = set.boundary_sample(1000);
            assert!(sample.iter().any(|q| close(*q, [1.0, 0.0], 1e-12)));
            for q in sample {
            let da = dist2(q, [0.0, c]).sqrt();
            let db = dist2(q, [0.0, -c]).sqrt();
            assert!(da <= r + 1e-12 && db <= r + 1e-12);
                assert!((da - r).abs() < 1e-12 || (db - r).abs() < 1e-12);
            }
        }
    }
}
