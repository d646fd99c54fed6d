use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{wrap_half_turn, GeometryError};

/// Oriented rectangle in the plane.
///
/// `half_extents.x` runs along the direction `yaw` and is never shorter than
/// `half_extents.y`; `yaw` lies in `[-π/2, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect2 {
    pub center: Vector2<f64>,
    pub half_extents: Vector2<f64>,
    pub yaw: f64,
}

impl OrientedRect2 {
    /// Canonicalizes the extents ordering and yaw range. Returns `None` for
    /// non-positive extents.
    pub fn new(center: Vector2<f64>, half_extents: Vector2<f64>, yaw: f64) -> Option<Self> {
        if !(half_extents.x > 0.0 && half_extents.y > 0.0) {
            return None;
        }
        let (he, yaw) = if half_extents.x >= half_extents.y {
            (half_extents, yaw)
        } else {
            (
                Vector2::new(half_extents.y, half_extents.x),
                yaw + std::f64::consts::FRAC_PI_2,
            )
        };
        Some(Self {
            center,
            half_extents: he,
            yaw: wrap_half_turn(yaw),
        })
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.x * self.half_extents.y
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_extents.x
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_extents.y
    }

    /// Unit vectors along the long and short sides.
    pub fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let (s, c) = self.yaw.sin_cos();
        (Vector2::new(c, s), Vector2::new(-s, c))
    }

    /// Counter-clockwise corners starting at (-L/2, -W/2) in the local frame.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let (u, v) = self.axes();
        let (a, b) = (u * self.half_extents.x, v * self.half_extents.y);
        [
            self.center - a - b,
            self.center + a - b,
            self.center + a + b,
            self.center - a + b,
        ]
    }

    pub fn to_local(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let (u, v) = self.axes();
        let d = p - self.center;
        Vector2::new(u.dot(&d), v.dot(&d))
    }

    pub fn contains(&self, p: &Vector2<f64>, slack: f64) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x + slack && l.y.abs() <= self.half_extents.y + slack
    }
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull in counter-clockwise order (Andrew's monotone chain).
/// Collinear boundary points are dropped.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts: Vec<Vector2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Minimum-area enclosing rectangle.
///
/// Candidates are the rectangles with one side flush against a convex hull
/// edge; the optimum is always among them. For each edge the caliper extents
/// are found by projecting the hull onto the edge frame.
pub fn min_area_rect(points: &[Vector2<f64>]) -> Result<OrientedRect2, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateInput(
            "rectangle fit needs three points",
        ));
    }
    if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(GeometryError::DegenerateInput("non-finite point"));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(GeometryError::DegenerateInput("points are collinear"));
    }

    // (area, center, half extents, long-side direction)
    type Candidate = (f64, Vector2<f64>, Vector2<f64>, Vector2<f64>);
    let mut best: Option<Candidate> = None;
    for i in 0..hull.len() {
        let edge = hull[(i + 1) % hull.len()] - hull[i];
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        let u = edge / len;
        let v = Vector2::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let (a, b) = (u.dot(p), v.dot(p));
            umin = umin.min(a);
            umax = umax.max(a);
            vmin = vmin.min(b);
            vmax = vmax.max(b);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|b| area < b.0) {
            let center = u * (0.5 * (umin + umax)) + v * (0.5 * (vmin + vmax));
            let he = Vector2::new(0.5 * (umax - umin), 0.5 * (vmax - vmin));
            best = Some((area, center, he, u));
        }
    }
    let (_, center, he, u) = best.ok_or(GeometryError::DegenerateInput("empty hull"))?;

    let scale = hull.iter().map(|p| p.abs().max()).fold(1.0_f64, f64::max);
    if 2.0 * he.x.min(he.y) <= 1e-9 * scale {
        return Err(GeometryError::DegenerateInput("points are collinear"));
    }
    let yaw = u.y.atan2(u.x);
    OrientedRect2::new(center, he, yaw).ok_or(GeometryError::DegenerateInput("zero-area rectangle"))
}

/// Axis-aligned bounding box area of a point set.
pub fn aabb_area(points: &[Vector2<f64>]) -> f64 {
    let (mut lo, mut hi) = (Vector2::repeat(f64::MAX), Vector2::repeat(f64::MIN));
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi.x - lo.x) * (hi.y - lo.y)
}

pub fn rotation2(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}
