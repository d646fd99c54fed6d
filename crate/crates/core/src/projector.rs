//! Reversed-pinhole projector model.
//!
//! Points in the projector frame `{P}` (Z along the projection direction) map
//! to normalized image coordinates `(u, v)`, where `u = 0, 1` are the left and
//! right frame bounds and `v = 0, 1` the top and bottom bounds.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{orthonormalize_frame, GeometryError, Pose};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectorError {
    #[error("point{} is behind the projector", index.map(|i| format!(" {i}")).unwrap_or_default())]
    BehindProjector { index: Option<usize> },
    #[error("invalid projector model: {0}")]
    InvalidModel(&'static str),
    #[error("cue has no points")]
    EmptyCue,
    #[error("planned projector pose is not reachable")]
    Unreachable,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Extrinsic `TCP → projector` transform plus field-of-view angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectorModel {
    pub extrinsic: Pose,
    pub fov_x: f64,
    pub fov_y: f64,
}

impl ProjectorModel {
    pub fn new(extrinsic: Pose, fov_x: f64, fov_y: f64) -> Result<Self, ProjectorError> {
        let valid = |a: f64| a > 0.0 && a < std::f64::consts::PI;
        if !valid(fov_x) || !valid(fov_y) {
            return Err(ProjectorError::InvalidModel(
                "field of view must lie in (0, π)",
            ));
        }
        Ok(Self {
            extrinsic,
            fov_x,
            fov_y,
        })
    }

    /// Mount used by the shipped scenarios: 40°×25° field of view, offset to
    /// the side of the gripper and pitched 15° about the gripper X axis.
    pub fn reference() -> Self {
        Self {
            extrinsic: Pose::from_axis_angle(
                &Vector3::x(),
                15f64.to_radians(),
                Vector3::new(0.05, -0.12, 0.03),
            ),
            fov_x: 40f64.to_radians(),
            fov_y: 25f64.to_radians(),
        }
    }

    pub fn tan_half_x(&self) -> f64 {
        (0.5 * self.fov_x).tan()
    }

    pub fn tan_half_y(&self) -> f64 {
        (0.5 * self.fov_y).tan()
    }
}

impl<'de> Deserialize<'de> for ProjectorModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            extrinsic: Pose,
            fov_x: f64,
            fov_y: f64,
        }
        let r = Repr::deserialize(d)?;
        ProjectorModel::new(r.extrinsic, r.fov_x, r.fov_y).map_err(serde::de::Error::custom)
    }
}

/// Ordered world-frame points describing what to display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialCue {
    pub points: Vec<Vector3<f64>>,
    #[serde(default)]
    pub closed: bool,
}

impl SpatialCue {
    pub fn new(points: Vec<Vector3<f64>>, closed: bool) -> Result<Self, ProjectorError> {
        if points.is_empty() {
            return Err(ProjectorError::EmptyCue);
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(ProjectorError::InvalidModel("cue point is not finite"));
        }
        Ok(Self { points, closed })
    }

    /// Center of the axis-aligned bounding box.
    pub fn bbox_centroid(&self) -> Vector3<f64> {
        let mut lo = Vector3::repeat(f64::MAX);
        let mut hi = Vector3::repeat(f64::MIN);
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo + hi) * 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub in_frame: bool,
}

impl ImagePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self {
            u,
            v,
            in_frame: (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v),
        }
    }
}

/// Normalized image coordinates of a point given in the projector frame.
pub fn project_point(
    model: &ProjectorModel,
    p: &Vector3<f64>,
) -> Result<ImagePoint, ProjectorError> {
    if !(p.z > 0.0) {
        return Err(ProjectorError::BehindProjector { index: None });
    }
    let u = 0.5 * (1.0 + p.x / (p.z * model.tan_half_x()));
    let v = 0.5 * (1.0 + p.y / (p.z * model.tan_half_y()));
    Ok(ImagePoint::new(u, v))
}

/// Inverse of [`project_point`]: the projector-frame point at depth `z` that
/// lands on `(u, v)`.
pub fn unproject(model: &ProjectorModel, u: f64, v: f64, z: f64) -> Vector3<f64> {
    Vector3::new(
        (2.0 * u - 1.0) * z * model.tan_half_x(),
        (2.0 * v - 1.0) * z * model.tan_half_y(),
        z,
    )
}

/// Direction (in `{P}`, not normalized) of the ray through `(u, v)`.
pub fn ray_direction(model: &ProjectorModel, u: f64, v: f64) -> Vector3<f64> {
    unproject(model, u, v, 1.0)
}

/// Placement of the projector relative to a cue: the optical center sits
/// `standoff` meters back from the cue centroid along `approach_dir`, looking
/// at the centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosePlanner {
    pub standoff: f64,
    pub approach_dir: Vector3<f64>,
    /// Projected onto the image plane to fix the image X axis.
    pub up_hint: Vector3<f64>,
}

impl Default for PosePlanner {
    fn default() -> Self {
        Self {
            standoff: 0.8,
            approach_dir: -Vector3::z(),
            up_hint: Vector3::x(),
        }
    }
}

pub fn plan_projector_pose(
    cue: &SpatialCue,
    planner: &PosePlanner,
) -> Result<Pose, ProjectorError> {
    if cue.points.is_empty() {
        return Err(ProjectorError::EmptyCue);
    }
    if !(planner.standoff > 0.0) {
        return Err(ProjectorError::InvalidModel("standoff must be positive"));
    }
    let n = planner.approach_dir.norm();
    if !n.is_finite() || n < 1e-300 {
        return Err(GeometryError::DegenerateInput("approach direction has zero length").into());
    }
    let approach = planner.approach_dir / n;
    let centroid = cue.bbox_centroid();
    let origin = centroid - approach * planner.standoff;
    let rotation = orthonormalize_frame(&approach, &planner.up_hint)?;
    Ok(Pose::new(rotation, origin))
}

/// Like [`plan_projector_pose`], additionally rejecting plans whose TCP pose
/// fails the supplied reachability predicate.
pub fn plan_reachable_projector_pose(
    model: &ProjectorModel,
    cue: &SpatialCue,
    planner: &PosePlanner,
    reachable: impl Fn(&Pose) -> bool,
) -> Result<Pose, ProjectorError> {
    let pose = plan_projector_pose(cue, planner)?;
    if reachable(&tcp_pose_for_projection(model, &pose)) {
        Ok(pose)
    } else {
        Err(ProjectorError::Unreachable)
    }
}

/// TCP pose that puts the projector at `projector_pose_world`.
pub fn tcp_pose_for_projection(model: &ProjectorModel, projector_pose_world: &Pose) -> Pose {
    projector_pose_world.compose(&model.extrinsic.inverse())
}

pub fn render_cue(
    model: &ProjectorModel,
    projector_pose_world: &Pose,
    cue: &SpatialCue,
) -> Result<Vec<ImagePoint>, ProjectorError> {
    let world_to_projector = projector_pose_world.inverse();
    cue.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            project_point(model, &world_to_projector.transform_point(p))
                .map_err(|_| ProjectorError::BehindProjector { index: Some(i) })
        })
        .collect()
}
