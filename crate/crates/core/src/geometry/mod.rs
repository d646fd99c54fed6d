//! SE(3) pose algebra and the fitting primitives used by calibration,
//! perception and placement.

mod fit;
mod pose;
mod rect;

pub use fit::{
    closest_point_to_lines, fit_line_pca, line_normal_equations, lines_conditioning,
    orthonormalize_frame, sum_squared_line_distances, Line3, LineFit,
};
pub use pose::{rot_x, rot_z, rotation_angle, wrap_half_turn, Pose};
pub use rect::{aabb_area, convex_hull, min_area_rect, rotation2, OrientedRect2};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("singular configuration: lines are (nearly) parallel")]
    SingularConfiguration,
}

/// Plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl Plane {
    pub fn new(point: Vector3<f64>, normal: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = normal.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(GeometryError::DegenerateInput(
                "plane normal has zero length",
            ));
        }
        Ok(Self {
            point,
            normal: normal / n,
        })
    }

    /// Horizontal plane `z = height` with upward normal.
    pub fn horizontal(height: f64) -> Self {
        Self {
            point: Vector3::new(0.0, 0.0, height),
            normal: Vector3::z(),
        }
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(&(p - self.point))
    }

    /// Ray parameter `t > 0` where `origin + t·dir` meets the plane, if any.
    pub fn intersect_ray(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-12 * dir.norm() {
            return None;
        }
        let t = self.normal.dot(&(self.point - origin)) / denom;
        (t > 0.0 && t.is_finite()).then_some(t)
    }

    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            point: pose.transform_point(&self.point),
            normal: pose.transform_vector(&self.normal),
        }
    }
}
