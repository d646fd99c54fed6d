//! Grasp and placement correction from scan observations.
//!
//! Placement poses are brick top-center frames with Z up. The corrected pose
//! is `nominal · ΔT_z · ΔT_xy`: a vertical shift putting the brick top at
//! `z' + h'_b + h_a` (course height + scanned brick height + adhesive), then
//! a shift along the brick's length that keeps a constrained end face on its
//! wall-edge reference plane.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{Plane, Pose};
use crate::perception::{BrickObservation, CourseScan};

/// Default adhesive layer thickness (m).
pub const ADHESIVE_THICKNESS: f64 = 0.0008;
/// Default lateral gap between neighbouring nominal bricks (m).
pub const NOMINAL_GAP: f64 = 0.003;

const FLAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdaptiveError {
    #[error("nominal pose of brick {brick_id} is not Z-up")]
    NotFlat { brick_id: String },
    #[error("edge constraint plane of brick {brick_id} is not vertical")]
    PlaneNotVertical { brick_id: String },
    #[error("edge plane of brick {brick_id} is parallel to the brick length axis")]
    PlaneParallelToAxis { brick_id: String },
    #[error("invalid adaptive configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BrickEnd {
    PlusX,
    MinusX,
}

impl BrickEnd {
    pub fn sign(self) -> f64 {
        match self {
            BrickEnd::PlusX => 1.0,
            BrickEnd::MinusX => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeConstraint {
    pub reference_plane: Plane,
    pub brick_end: BrickEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub brick_id: String,
    /// Designed top-center pose of the placed brick.
    pub nominal_pose: Pose,
    pub course_index: usize,
    pub nominal_length: f64,
    #[serde(default)]
    pub edge_constraint: Option<EdgeConstraint>,
}

impl PlacementPlan {
    pub fn validate(&self) -> Result<(), AdaptiveError> {
        if (self.nominal_pose.z_axis() - Vector3::z()).norm() > FLAT_TOL {
            return Err(AdaptiveError::NotFlat {
                brick_id: self.brick_id.clone(),
            });
        }
        if let Some(edge) = &self.edge_constraint {
            if edge.reference_plane.normal.z.abs() > FLAT_TOL {
                return Err(AdaptiveError::PlaneNotVertical {
                    brick_id: self.brick_id.clone(),
                });
            }
            if edge
                .reference_plane
                .normal
                .dot(&self.nominal_pose.x_axis())
                .abs()
                < 1e-6
            {
                return Err(AdaptiveError::PlaneParallelToAxis {
                    brick_id: self.brick_id.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub adhesive_thickness: f64,
    pub nominal_gap: f64,
    /// Grasp (TCP) pose in the brick frame.
    pub grasp_offset: Pose,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            adhesive_thickness: ADHESIVE_THICKNESS,
            nominal_gap: NOMINAL_GAP,
            grasp_offset: Pose::identity(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<(), AdaptiveError> {
        if !(self.adhesive_thickness > 0.0) {
            return Err(AdaptiveError::InvalidConfig(
                "adhesive thickness must be positive",
            ));
        }
        if !(self.nominal_gap >= 0.0) {
            return Err(AdaptiveError::InvalidConfig(
                "nominal gap must be non-negative",
            ));
        }
        Ok(())
    }
}

/// TCP pose for grasping an observed brick.
pub fn grasp_pose(obs: &BrickObservation, cfg: &AdaptiveConfig) -> Pose {
    obs.pose.compose(&cfg.grasp_offset)
}

/// World z of the placed brick's top-center frame.
pub fn placement_height(scan: &CourseScan, obs: &BrickObservation, cfg: &AdaptiveConfig) -> f64 {
    course_base_height(scan, cfg) + obs.height
}

/// The course-shared part of the placement height: measured course top plus
/// adhesive. Each brick adds its own scanned height on top.
pub fn course_base_height(scan: &CourseScan, cfg: &AdaptiveConfig) -> f64 {
    scan.mean_top_height + cfg.adhesive_thickness
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralCorrection {
    /// Pure translation along the brick's local X axis.
    pub delta: Pose,
    /// The length deviation exceeded the gap budget and the shift was clamped.
    pub saturated: bool,
}

impl LateralCorrection {
    pub fn shift(&self) -> f64 {
        self.delta.translation.x
    }
}

/// Shift along the brick length that puts the constrained end face (at
/// `±measured_length / 2` from the center) on the reference plane. Bricks
/// without a constraint get no correction.
pub fn lateral_correction(
    plan: &PlacementPlan,
    obs: &BrickObservation,
    cfg: &AdaptiveConfig,
) -> LateralCorrection {
    let Some(edge) = &plan.edge_constraint else {
        return LateralCorrection {
            delta: Pose::identity(),
            saturated: false,
        };
    };
    let axis = plan.nominal_pose.x_axis();
    let end = plan.nominal_pose.translation + axis * (edge.brick_end.sign() * 0.5 * obs.length);
    let along = edge.reference_plane.normal.dot(&axis);
    let mut shift = -edge.reference_plane.signed_distance(&end) / along;

    let saturated =
        (obs.length - plan.nominal_length).abs() > cfg.nominal_gap || shift.abs() > cfg.nominal_gap;
    if saturated {
        shift = shift.clamp(-cfg.nominal_gap, cfg.nominal_gap);
    }
    LateralCorrection {
        delta: Pose::from_translation(Vector3::new(shift, 0.0, 0.0)),
        saturated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPlacement {
    pub pose: Pose,
    pub vertical: Pose,
    pub lateral: LateralCorrection,
    /// Target top height of this brick.
    pub target_top_z: f64,
}

pub fn corrected_placement(
    plan: &PlacementPlan,
    scan: &CourseScan,
    obs: &BrickObservation,
    cfg: &AdaptiveConfig,
) -> Result<CorrectedPlacement, AdaptiveError> {
    plan.validate()?;
    cfg.validate()?;
    let target_top_z = placement_height(scan, obs, cfg);
    // Z-up nominal: local Z is world Z, so a local shift sets world height.
    let vertical = Pose::from_translation(Vector3::new(
        0.0,
        0.0,
        target_top_z - plan.nominal_pose.translation.z,
    ));
    let lateral = lateral_correction(plan, obs, cfg);
    let mut pose = plan.nominal_pose.compose(&vertical).compose(&lateral.delta);
    pose.translation.z = target_top_z;
    Ok(CorrectedPlacement {
        pose,
        vertical,
        lateral,
        target_top_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(length: f64, height: f64) -> BrickObservation {
        BrickObservation {
            pose: Pose::from_yaw(0.3, Vector3::new(1.0, 2.0, 0.1)),
            length,
            width: 0.1,
            height,
            residual_rms: 0.0,
        }
    }

    fn scan(z: f64) -> CourseScan {
        CourseScan {
            course_index: 0,
            mean_top_height: z,
            sample_count: 10,
            height_spread: 0.0,
        }
    }

    fn plan(edge: Option<EdgeConstraint>) -> PlacementPlan {
        PlacementPlan {
            brick_id: "b".into(),
            nominal_pose: Pose::from_translation(Vector3::new(0.0, 0.0, 0.0658)),
            course_index: 0,
            nominal_length: 0.2,
            edge_constraint: edge,
        }
    }

    fn west_edge() -> Option<EdgeConstraint> {
        Some(EdgeConstraint {
            reference_plane: Plane::new(Vector3::new(-0.1, 0.0, 0.0), -Vector3::x()).unwrap(),
            brick_end: BrickEnd::MinusX,
        })
    }

    #[test]
    fn identity_grasp_offset() {
        let o = obs(0.2, 0.065);
        assert_eq!(grasp_pose(&o, &AdaptiveConfig::default()), o.pose);
    }

    #[test]
    fn grasp_offset_along_brick_z() {
        let cfg = AdaptiveConfig {
            grasp_offset: Pose::from_translation(Vector3::new(0.0, 0.0, 0.02)),
            ..Default::default()
        };
        let o = obs(0.2, 0.065);
        let g = grasp_pose(&o, &cfg);
        assert!((g.translation - (o.pose.translation + o.pose.z_axis() * 0.02)).norm() < 1e-15);
    }

    #[test]
    fn placement_height_sums() {
        let cfg = AdaptiveConfig::default();
        assert!((placement_height(&scan(0.100), &obs(0.2, 0.065), &cfg) - 0.1658).abs() < 1e-15);
        assert!((placement_height(&scan(0.0), &obs(0.2, 0.0655), &cfg) - 0.0663).abs() < 1e-15);
    }

    #[test]
    fn no_correction_when_on_plane() {
        let c = lateral_correction(
            &plan(west_edge()),
            &obs(0.2, 0.065),
            &AdaptiveConfig::default(),
        );
        assert_eq!(c.shift(), 0.0);
        assert!(!c.saturated);
    }

    #[test]
    fn short_brick_shifts_toward_plane() {
        let p = plan(west_edge());
        let c = lateral_correction(&p, &obs(0.198, 0.065), &AdaptiveConfig::default());
        assert!((c.shift() + 0.001).abs() < 1e-15);
        let center = p.nominal_pose.compose(&c.delta).translation;
        let end = center - Vector3::x() * 0.099;
        assert!(
            p.edge_constraint
                .unwrap()
                .reference_plane
                .signed_distance(&end)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn long_brick_saturates() {
        let c = lateral_correction(
            &plan(west_edge()),
            &obs(0.206, 0.065),
            &AdaptiveConfig::default(),
        );
        assert!(c.saturated);
        assert!((c.shift() - 0.003).abs() < 1e-15);
    }

    #[test]
    fn unconstrained_brick_is_not_shifted() {
        let c = lateral_correction(&plan(None), &obs(0.19, 0.065), &AdaptiveConfig::default());
        assert_eq!(c.delta, Pose::identity());
    }

    #[test]
    fn zero_deviation_keeps_nominal_xy() {
        let p = plan(west_edge());
        let cp = corrected_placement(&p, &scan(0.0), &obs(0.2, 0.065), &AdaptiveConfig::default())
            .unwrap();
        let mut expected = p.nominal_pose;
        expected.translation.z = 0.0658;
        assert!(cp.pose.max_deviation(&expected) < 1e-15);
    }

    #[test]
    fn tilted_nominal_is_rejected() {
        let mut p = plan(None);
        p.nominal_pose = Pose::from_axis_angle(&Vector3::x(), 0.1, Vector3::zeros());
        assert!(matches!(
            corrected_placement(&p, &scan(0.0), &obs(0.2, 0.065), &AdaptiveConfig::default()),
            Err(AdaptiveError::NotFlat { .. })
        ));
    }

    #[test]
    fn correction_order_is_immaterial_for_translations() {
        let p = plan(west_edge());
        let cp = corrected_placement(
            &p,
            &scan(0.07),
            &obs(0.197, 0.066),
            &AdaptiveConfig::default(),
        )
        .unwrap();
        let swapped = p
            .nominal_pose
            .compose(&cp.lateral.delta)
            .compose(&cp.vertical);
        assert!(cp.pose.max_deviation(&swapped) < 1e-15);
    }
}
