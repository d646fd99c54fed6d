use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::adaptive::{BrickEnd, EdgeConstraint, PlacementPlan, NOMINAL_GAP};
use crate::geometry::{Plane, Pose};
use crate::perception::BrickDims;

use super::SimError;

pub const DESIGN_SCHEMA_VERSION: u32 = 1;

/// Failure thresholds of the settling and collision model (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Commanded bottom this far below the support counts as a collision.
    pub collision_z: f64,
    /// Largest gap the adhesive bed can fill.
    pub max_bond_gap: f64,
    /// Plan-view penetration that counts as a collision between neighbours.
    pub xy_overlap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            collision_z: 0.002,
            max_bond_gap: 0.003,
            xy_overlap: 0.0005,
        }
    }
}

/// Raster pitches and course coverage of the laser scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanPlan {
    pub brick_pitch: f64,
    pub course_pitch: f64,
    /// Fraction of the previous course's bricks covered by a course scan.
    pub course_coverage: f64,
}

impl Default for ScanPlan {
    fn default() -> Self {
        Self {
            brick_pitch: 0.01,
            course_pitch: 0.02,
            course_coverage: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pickup {
    pub platform_top_z: f64,
    /// Nominal top-center poses of bricks waiting on the platform; reused
    /// cyclically when shorter than the brick list.
    pub queue: Vec<Pose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRef {
    pub plane: String,
    pub end: BrickEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignBrick {
    pub id: String,
    pub course: usize,
    /// Designed top-center pose, Z up.
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallDesign {
    pub schema_version: u32,
    pub name: String,
    pub nominal_brick: BrickDims,
    pub courses: usize,
    pub slab_top_z: f64,
    #[serde(default)]
    pub reference_planes: BTreeMap<String, Plane>,
    pub pickup: Pickup,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub scan: ScanPlan,
    /// Placement order.
    pub bricks: Vec<DesignBrick>,
}

impl WallDesign {
    /// Placement plans in build order, with edge planes resolved.
    pub fn plans(&self) -> Result<Vec<PlacementPlan>, SimError> {
        self.bricks
            .iter()
            .map(|b| {
                let edge_constraint = match &b.edge {
                    None => None,
                    Some(e) => Some(EdgeConstraint {
                        reference_plane: *self.reference_planes.get(&e.plane).ok_or_else(|| {
                            SimError::Config(format!(
                                "brick {} references unknown plane '{}'",
                                b.id, e.plane
                            ))
                        })?,
                        brick_end: e.end,
                    }),
                };
                Ok(PlacementPlan {
                    brick_id: b.id.clone(),
                    nominal_pose: b.pose,
                    course_index: b.course,
                    nominal_length: self.nominal_brick.length,
                    edge_constraint,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let cfg = |m: String| Err(SimError::Config(m));
        if self.schema_version != DESIGN_SCHEMA_VERSION {
            return cfg(format!(
                "unsupported design schema_version {}",
                self.schema_version
            ));
        }
        let d = self.nominal_brick;
        if !(d.length > 0.0 && d.width > 0.0 && d.height > 0.0) || d.length < d.width {
            return cfg("nominal brick needs length >= width > 0 and height > 0".into());
        }
        if self.bricks.is_empty() || self.courses == 0 {
            return cfg("design has no bricks".into());
        }
        if self.pickup.queue.is_empty() {
            return cfg("pickup queue is empty".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        let mut course_z: Vec<Option<f64>> = vec![None; self.courses];
        let mut last_course = 0;
        for b in &self.bricks {
            if !ids.insert(&b.id) {
                return cfg(format!("duplicate brick id {}", b.id));
            }
            if b.course >= self.courses {
                return cfg(format!(
                    "brick {} is in course {} of {}",
                    b.id, b.course, self.courses
                ));
            }
            if b.course < last_course {
                return cfg(format!("brick {} is listed after a higher course", b.id));
            }
            last_course = b.course;
            match course_z[b.course] {
                None => course_z[b.course] = Some(b.pose.translation.z),
                Some(z) if (z - b.pose.translation.z).abs() > 1e-9 => {
                    return cfg(format!("brick {} top height differs from its course", b.id));
                }
                _ => {}
            }
        }
        if let Some(k) = course_z.iter().position(Option::is_none) {
            return cfg(format!("course {k} has no bricks"));
        }
        for plan in self.plans()? {
            plan.validate()
                .map_err(|e| SimError::Config(e.to_string()))?;
        }
        let t = self.thresholds;
        if !(t.collision_z >= 0.0 && t.max_bond_gap >= 0.0 && t.xy_overlap >= 0.0) {
            return cfg("thresholds must be non-negative".into());
        }
        if !(self.scan.brick_pitch > 0.0 && self.scan.course_pitch > 0.0) {
            return cfg("scan pitches must be positive".into());
        }
        if !(self.scan.course_coverage > 0.0 && self.scan.course_coverage <= 1.0) {
            return cfg("course coverage must lie in (0, 1]".into());
        }
        Ok(())
    }

    /// Designed top height of course `k`.
    pub fn nominal_course_top(&self, k: usize) -> Option<f64> {
        self.bricks
            .iter()
            .find(|b| b.course == k)
            .map(|b| b.pose.translation.z)
    }

    /// Straight running bond, 3 bricks per course over 7 courses.
    pub fn conventional_21() -> Self {
        running_bond("conventional_21", 7, 3, 0.0)
    }

    /// Running bond of 4 bricks per course over 7 courses with every course
    /// rotated, alternating ±15°. The angle is illustrative.
    pub fn nonstandard_28() -> Self {
        running_bond("nonstandard_28", 7, 4, 15f64.to_radians())
    }
}

fn running_bond(name: &str, courses: usize, per_course: usize, rotation: f64) -> WallDesign {
    let dims = BrickDims::MODULAR;
    // Designs stack bare brick heights; the adhesive bed is not part of the plan.
    let course_pitch = dims.height;
    let slab_top_z = 0.0;
    let mut bricks = Vec::new();
    let mut planes = BTreeMap::new();
    for k in 0..courses {
        let yaw = if k % 2 == 0 { rotation } else { -rotation };
        // parallel bricks keep the nominal gap along their own length axis
        let pitch = (dims.length + NOMINAL_GAP) / yaw.cos();
        let offset = if k % 2 == 0 { 0.0 } else { 0.5 * pitch };
        let z = slab_top_z + (k + 1) as f64 * course_pitch;
        let parity = if k % 2 == 0 { "even" } else { "odd" };
        for i in 0..per_course {
            let pose = Pose::from_yaw(yaw, Vector3::new(offset + i as f64 * pitch, 0.0, z));
            let (edge, end) = if i == 0 {
                (Some(format!("west_{parity}")), BrickEnd::MinusX)
            } else if i + 1 == per_course {
                (Some(format!("east_{parity}")), BrickEnd::PlusX)
            } else {
                (None, BrickEnd::PlusX)
            };
            if let Some(plane) = &edge {
                let face = pose.translation + pose.x_axis() * (end.sign() * 0.5 * dims.length);
                let normal = Vector3::x() * end.sign();
                planes.entry(plane.clone()).or_insert(Plane {
                    point: Vector3::new(face.x, face.y, 0.0),
                    normal,
                });
            }
            bricks.push(DesignBrick {
                id: format!("c{k}b{i}"),
                course: k,
                pose,
                edge: edge.map(|plane| EdgeRef { plane, end }),
            });
        }
    }
    WallDesign {
        schema_version: DESIGN_SCHEMA_VERSION,
        name: name.into(),
        nominal_brick: dims,
        courses,
        slab_top_z,
        reference_planes: planes,
        pickup: Pickup {
            platform_top_z: 0.0,
            queue: vec![Pose::from_translation(Vector3::new(
                -0.6,
                0.45,
                dims.height,
            ))],
        },
        thresholds: Thresholds::default(),
        scan: ScanPlan::default(),
        bricks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_designs_are_valid() {
        for d in [WallDesign::conventional_21(), WallDesign::nonstandard_28()] {
            d.validate().unwrap();
            assert_eq!(d.courses, 7);
        }
        assert_eq!(WallDesign::conventional_21().bricks.len(), 21);
        assert_eq!(WallDesign::nonstandard_28().bricks.len(), 28);
    }

    #[test]
    fn edge_planes_pass_through_nominal_end_faces() {
        let d = WallDesign::nonstandard_28();
        for plan in d.plans().unwrap() {
            if let Some(e) = plan.edge_constraint {
                let face = plan.nominal_pose.translation
                    + plan.nominal_pose.x_axis() * (e.brick_end.sign() * 0.1);
                assert!(e.reference_plane.signed_distance(&face).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn course_heights_step_by_brick_height() {
        let d = WallDesign::conventional_21();
        let top3 = d.nominal_course_top(3).unwrap();
        assert!((top3 - 4.0 * 0.065).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_designs() {
        let mut d = WallDesign::conventional_21();
        d.bricks[4].pose.translation.z += 0.001;
        assert!(matches!(d.validate(), Err(SimError::Config(_))));

        let mut d = WallDesign::conventional_21();
        d.bricks[0].edge = Some(EdgeRef {
            plane: "nowhere".into(),
            end: BrickEnd::MinusX,
        });
        assert!(d.validate().is_err());

        let mut d = WallDesign::conventional_21();
        d.bricks.retain(|b| b.course != 2);
        assert!(d.validate().is_err());
    }
}
