//! Projector extrinsic and field-of-view recovery from probed frame corners.
//!
//! A full-frame rectangle is projected onto a flat surface from several TCP
//! poses and its four corners are probed in world coordinates. Expressed in
//! the TCP frame, each corner's samples lie on one edge ray of the viewing
//! cone. Fitting those four rays gives the optical center (nearest point to
//! all four), the optical axis (mean ray direction), the image axes (opposing
//! ray pairs) and the field of view (ray slopes in the recovered frame).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    closest_point_to_lines, fit_line_pca, lines_conditioning, orthonormalize_frame,
    sum_squared_line_distances, GeometryError, Line3, Plane, Pose,
};
use crate::projector::{ray_direction, tcp_pose_for_projection, ProjectorModel};
use crate::random::{gaussian, stream};

/// Sessions with fewer shots than this are rejected.
pub const MIN_SHOTS: usize = 3;

/// Below this smallest/largest singular value ratio of the apex normal
/// matrix the result is flagged [`ConditionFlag::NearParallel`].
pub const NEAR_PARALLEL_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("insufficient shots: {found} given, at least {MIN_SHOTS} required")]
    InsufficientShots { found: usize },
    #[error("inconsistent corner labels: {0}")]
    InconsistentLabels(String),
    #[error("singular configuration: fitted cone edges are (nearly) parallel")]
    SingularConfiguration,
    #[error(
        "ray for shot {shot}, corner {corner} does not hit the surface in front of the projector"
    )]
    NoIntersection { shot: usize, corner: Corner },
    #[error(transparent)]
    Geometry(GeometryError),
}

impl From<GeometryError> for CalibrationError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::SingularConfiguration => CalibrationError::SingularConfiguration,
            other => CalibrationError::Geometry(other),
        }
    }
}

/// Frame corner label; `(u, v)` = TL (0,0), TR (1,0), BR (1,1), BL (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    TL,
    TR,
    BR,
    BL,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::TL, Corner::TR, Corner::BR, Corner::BL];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn uv(self) -> (f64, f64) {
        match self {
            Corner::TL => (0.0, 0.0),
            Corner::TR => (1.0, 0.0),
            Corner::BR => (1.0, 1.0),
            Corner::BL => (0.0, 1.0),
        }
    }

    /// Signs of the ray's `(x, y)` components in the projector frame.
    pub fn signs(self) -> (f64, f64) {
        let (u, v) = self.uv();
        (2.0 * u - 1.0, 2.0 * v - 1.0)
    }
}

impl std::fmt::Display for Corner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Four labeled points, one per frame corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerSet {
    #[serde(rename = "TL")]
    pub tl: Vector3<f64>,
    #[serde(rename = "TR")]
    pub tr: Vector3<f64>,
    #[serde(rename = "BR")]
    pub br: Vector3<f64>,
    #[serde(rename = "BL")]
    pub bl: Vector3<f64>,
}

impl CornerSet {
    pub fn from_array(a: [Vector3<f64>; 4]) -> Self {
        Self {
            tl: a[0],
            tr: a[1],
            br: a[2],
            bl: a[3],
        }
    }

    pub fn get(&self, c: Corner) -> Vector3<f64> {
        match c {
            Corner::TL => self.tl,
            Corner::TR => self.tr,
            Corner::BR => self.br,
            Corner::BL => self.bl,
        }
    }

    pub fn to_array(&self) -> [Vector3<f64>; 4] {
        [self.tl, self.tr, self.br, self.bl]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationShot {
    pub tcp_pose: Pose,
    pub corners: CornerSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSession {
    pub shots: Vec<CalibrationShot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionFlag {
    WellConditioned,
    NearParallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: ProjectorModel,
    /// RMS perpendicular residual of each corner's line fit, indexed by [`Corner::index`].
    pub per_line_rms_residual: [f64; 4],
    /// Summed squared distance from the recovered optical center to the four lines (m²).
    pub apex_objective: f64,
    pub condition_flag: ConditionFlag,
    /// Smallest/largest singular value ratio of the apex normal matrix.
    pub conditioning: f64,
    /// Oriented cone-edge lines in the TCP frame.
    pub lines: [Line3; 4],
}

/// Probed corners re-expressed in the TCP frame of the shot they were
/// recorded in, grouped by label.
pub fn corners_to_tcp_frame(session: &CalibrationSession) -> [Vec<Vector3<f64>>; 4] {
    let mut out: [Vec<Vector3<f64>>; 4] = Default::default();
    for shot in &session.shots {
        let world_to_tcp = shot.tcp_pose.inverse();
        for c in Corner::ALL {
            out[c.index()].push(world_to_tcp.transform_point(&shot.corners.get(c)));
        }
    }
    out
}

pub fn calibrate(session: &CalibrationSession) -> Result<CalibrationResult, CalibrationError> {
    if session.shots.len() < MIN_SHOTS {
        return Err(CalibrationError::InsufficientShots {
            found: session.shots.len(),
        });
    }
    let grouped = corners_to_tcp_frame(session);

    let mut lines = [Line3 {
        point: Vector3::zeros(),
        direction: Vector3::z(),
    }; 4];
    let mut residuals = [0.0; 4];
    for c in Corner::ALL {
        let fit = fit_line_pca(&grouped[c.index()])?;
        // Orient each edge away from the TCP: the point of the line nearest
        // the TCP origin lies before the probed corners' centroid.
        let l = fit.line;
        lines[c.index()] = if l.direction.dot(&l.point) < 0.0 {
            l.flipped()
        } else {
            l
        };
        residuals[c.index()] = fit.rms_residual;
    }

    let apex = closest_point_to_lines(&lines)?;
    let conditioning = lines_conditioning(&lines);
    let dir = |c: Corner| lines[c.index()].direction;

    let axis = lines.iter().map(|l| l.direction).sum::<Vector3<f64>>() / 4.0;
    let x_axis =
        (dir(Corner::TR) + dir(Corner::BR)) * 0.5 - (dir(Corner::TL) + dir(Corner::BL)) * 0.5;
    let rotation = orthonormalize_frame(&axis, &x_axis)?;

    // The recovered frame must reproduce the label layout; a swapped or
    // mirrored labeling shows up as a wrong sign pattern.
    let mut slope_x = 0.0;
    let mut slope_y = 0.0;
    for c in Corner::ALL {
        let d = rotation.transpose() * dir(c);
        let (sx, sy) = c.signs();
        if !(d.z > 0.0) || d.x * sx <= 0.0 || d.y * sy <= 0.0 {
            return Err(CalibrationError::InconsistentLabels(format!(
                "corner {c} ray does not fall in its frame quadrant"
            )));
        }
        slope_x += d.x.abs() / d.z;
        slope_y += d.y.abs() / d.z;
    }
    let fov_x = 2.0 * (slope_x / 4.0).atan();
    let fov_y = 2.0 * (slope_y / 4.0).atan();

    let model = ProjectorModel::new(Pose::new(rotation, apex), fov_x, fov_y)
        .map_err(|e| CalibrationError::InconsistentLabels(e.to_string()))?;
    Ok(CalibrationResult {
        model,
        per_line_rms_residual: residuals,
        apex_objective: sum_squared_line_distances(&lines, &apex),
        condition_flag: if conditioning < NEAR_PARALLEL_RATIO {
            ConditionFlag::NearParallel
        } else {
            ConditionFlag::WellConditioned
        },
        conditioning,
        lines,
    })
}

/// Forward model of a calibration session: for each TCP pose, intersect the
/// four frame-corner rays with `surface` and perturb the hits with isotropic
/// Gaussian probe noise.
pub fn synthesize_session(
    model: &ProjectorModel,
    tcp_poses: &[Pose],
    surface: &Plane,
    probe_noise_sigma: f64,
    seed: u64,
) -> Result<CalibrationSession, CalibrationError> {
    let mut rng = stream(seed, 0);
    let mut shots = Vec::with_capacity(tcp_poses.len());
    for (i, tcp) in tcp_poses.iter().enumerate() {
        let projector = tcp.compose(&model.extrinsic);
        let mut corners = [Vector3::zeros(); 4];
        for c in Corner::ALL {
            let (u, v) = c.uv();
            let d = projector.transform_vector(&ray_direction(model, u, v));
            let t = surface
                .intersect_ray(&projector.translation, &d)
                .ok_or(CalibrationError::NoIntersection { shot: i, corner: c })?;
            let hit = projector.translation + d * t;
            let noise = Vector3::new(
                gaussian(&mut rng, probe_noise_sigma),
                gaussian(&mut rng, probe_noise_sigma),
                gaussian(&mut rng, probe_noise_sigma),
            );
            corners[c.index()] = hit + noise;
        }
        shots.push(CalibrationShot {
            tcp_pose: *tcp,
            corners: CornerSet::from_array(corners),
        });
    }
    Ok(CalibrationSession { shots })
}

/// TCP poses for a calibration survey over the horizontal plane `z =
/// surface_z`: the projector looks down from each height in `distances`,
/// with the view direction tilted by `tilt` (radians) and the heading
/// rotated between shots so the shots are not coplanar.
pub fn survey_poses(
    model: &ProjectorModel,
    surface_z: f64,
    distances: &[f64],
    tilt: f64,
) -> Vec<Pose> {
    let n = distances.len().max(1) as f64;
    distances
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let phase = i as f64 / n * std::f64::consts::TAU;
            let heading = Pose::from_yaw(0.4 * phase, Vector3::zeros());
            let tilt_axis = Vector3::new(phase.cos(), phase.sin(), 0.0);
            let down = Pose::from_rotation(crate::geometry::rot_x(std::f64::consts::PI));
            let tilted = Pose::from_axis_angle(&tilt_axis, tilt, Vector3::zeros());
            let rotation = tilted.compose(&heading).compose(&down).rotation;
            let origin = Vector3::new(0.05 * phase.cos(), 0.05 * phase.sin(), surface_z + d);
            tcp_pose_for_projection(model, &Pose::new(rotation, origin))
        })
        .collect()
}

/// Survey used by the shipped fixtures and regression tests.
pub fn default_survey(model: &ProjectorModel) -> Vec<Pose> {
    survey_poses(model, 0.0, &[0.45, 0.75, 1.05, 1.35], 6f64.to_radians())
}

/// Translation, rotation and per-axis FOV error between two models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelError {
    pub translation: f64,
    pub rotation: f64,
    pub fov_x: f64,
    pub fov_y: f64,
}

impl ModelError {
    pub fn between(estimate: &ProjectorModel, truth: &ProjectorModel) -> Self {
        Self {
            translation: estimate.extrinsic.translation_distance_to(&truth.extrinsic),
            rotation: estimate.extrinsic.rotation_angle_to(&truth.extrinsic),
            fov_x: (estimate.fov_x - truth.fov_x).abs(),
            fov_y: (estimate.fov_y - truth.fov_y).abs(),
        }
    }

    pub fn fov(&self) -> f64 {
        self.fov_x.max(self.fov_y)
    }
}
