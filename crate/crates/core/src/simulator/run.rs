use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::adaptive::{corrected_placement, grasp_pose, AdaptiveConfig, PlacementPlan};
use crate::geometry::{rot_z, Pose};
use crate::perception::{
    estimate_brick, simulate_brick_scan, simulate_course_scan, summarize_course, Brick, BrickDims,
    BrickObservation, CourseScan,
};
use crate::random::{derive_seed, gaussian, stream, truncated_gaussian};

use super::design::WallDesign;
use super::physics::{check_collisions, settle, SettleOutcome};
use super::timing::{Subprocess, TimingModel};
use super::SimError;

pub const NOISE_SCHEMA_VERSION: u32 = 1;
pub const BUILD_SCHEMA_VERSION: u32 = 1;

/// Dimension noise is truncated at this many standard deviations.
const DIM_TRUNCATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimSigma {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarSigma {
    pub xy: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuationSigma {
    pub xy: f64,
    pub z: f64,
    pub yaw: f64,
}

/// Sources of variability in a build. All values are standard deviations in
/// meters or radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub schema_version: u32,
    pub dim_sigma: DimSigma,
    /// Brick placement on the pickup platform relative to its queue pose.
    pub pickup_pose_sigma: PlanarSigma,
    pub scan_sigma: f64,
    pub actuation_sigma: ActuationSigma,
    /// Constant vertical offset added to every release (m).
    #[serde(default)]
    pub actuation_bias_z: f64,
    pub master_seed: u64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            schema_version: NOISE_SCHEMA_VERSION,
            dim_sigma: DimSigma::default(),
            pickup_pose_sigma: PlanarSigma::default(),
            scan_sigma: 0.0,
            actuation_sigma: ActuationSigma::default(),
            actuation_bias_z: 0.0,
            master_seed: 0,
        }
    }

    /// Noise levels of the shipped typical scenarios: 1 mm height and
    /// 0.5 mm length/width variation, 0.3 mm scan noise, 0.5 mm xy release
    /// error.
    pub fn typical() -> Self {
        Self {
            schema_version: NOISE_SCHEMA_VERSION,
            dim_sigma: DimSigma {
                length: 0.0005,
                width: 0.0005,
                height: 0.001,
            },
            pickup_pose_sigma: PlanarSigma {
                xy: 0.001,
                yaw: 0.3f64.to_radians(),
            },
            scan_sigma: 0.0003,
            actuation_sigma: ActuationSigma {
                xy: 0.0005,
                z: 0.0002,
                yaw: 0.1f64.to_radians(),
            },
            actuation_bias_z: 0.0,
            master_seed: 2026,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.schema_version != NOISE_SCHEMA_VERSION {
            return Err(SimError::Config(format!(
                "unsupported noise schema_version {}",
                self.schema_version
            )));
        }
        let all = [
            self.dim_sigma.length,
            self.dim_sigma.width,
            self.dim_sigma.height,
            self.pickup_pose_sigma.xy,
            self.pickup_pose_sigma.yaw,
            self.scan_sigma,
            self.actuation_sigma.xy,
            self.actuation_sigma.z,
            self.actuation_sigma.yaw,
        ];
        if all.iter().any(|s| !(*s >= 0.0)) || !self.actuation_bias_z.is_finite() {
            return Err(SimError::Config("noise sigmas must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    OpenLoop,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Warning {
    /// Lateral correction hit the gap budget.
    LateralSaturated { shift: f64 },
    /// Released below the support; rests on it without adhesive.
    RodeHigh { by: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedBrick {
    pub brick_id: String,
    pub course_index: usize,
    pub true_pose: Pose,
    pub true_dims: BrickDims,
    /// Brick pose the robot commanded at release.
    pub commanded_pose: Pose,
    /// Target top height: corrected height in adaptive mode, design height otherwise.
    pub target_top_z: f64,
    pub settle_gap: f64,
    /// Brick pose relative to where the robot believed it was while grasped.
    pub in_hand_offset: Pose,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Subprocess(Subprocess),
    CourseScan { course_index: usize },
    Placed,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Simulated time at the start of the event (s).
    pub time: f64,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brick_id: Option<String>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    CollisionFailure { brick_id: String },
    BondGapFailure { brick_id: String },
}

impl Outcome {
    pub fn is_failure(&self) -> bool {
        !matches!(self, Outcome::Completed)
    }

    pub fn is_collision(&self) -> bool {
        matches!(self, Outcome::CollisionFailure { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildState {
    pub schema_version: u32,
    pub design: String,
    pub mode: Mode,
    pub seed: u64,
    pub placed: Vec<PlacedBrick>,
    pub unplaced: Vec<String>,
    pub course_scans: Vec<CourseScan>,
    /// Level each started course aims for: scanned course below plus
    /// adhesive plus design brick height in adaptive mode, the design
    /// height otherwise.
    pub course_targets: Vec<f64>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

struct Clock {
    now: f64,
    events: Vec<Event>,
}

impl Clock {
    fn log(&mut self, duration: f64, brick_id: Option<&str>, kind: EventKind) {
        self.events.push(Event {
            time: self.now,
            duration,
            brick_id: brick_id.map(str::to_owned),
            kind,
        });
        self.now += duration;
    }
}

/// Simulates one build of `design`.
///
/// Per brick: sample true dimensions and platform pose; in adaptive mode scan
/// and estimate the brick, grasp at the estimated pose and place at the
/// course-corrected pose, otherwise grasp and place at nominal poses; add
/// release noise; settle; check neighbours. The build stops at the first
/// failure. Identical inputs give bit-identical states.
pub fn run_build(
    design: &WallDesign,
    noise: &NoiseModel,
    mode: Mode,
    timing: &TimingModel,
    cfg: &AdaptiveConfig,
) -> Result<BuildState, SimError> {
    design.validate()?;
    noise.validate()?;
    timing.validate().map_err(SimError::Config)?;
    cfg.validate()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let plans = design.plans()?;

    let seed = noise.master_seed;
    let mut clock = Clock {
        now: 0.0,
        events: Vec::new(),
    };
    let mut placed: Vec<PlacedBrick> = Vec::new();
    let mut course_scans: Vec<CourseScan> = Vec::new();
    let mut course_targets: Vec<f64> = Vec::new();
    let mut outcome = Outcome::Completed;
    let platform = design.pickup.platform_top_z;
    let nominal = design.nominal_brick;

    let mut i = 0;
    while i < plans.len() {
        let plan = &plans[i];
        let course = plan.course_index;
        let scan = if mode == Mode::Adaptive {
            if course_scans.last().map(|s| s.course_index) != Some(course) {
                let s = scan_course(design, &plans, &placed, course, noise, seed)?;
                clock.log(
                    0.0,
                    None,
                    EventKind::CourseScan {
                        course_index: course,
                    },
                );
                course_scans.push(s);
            }
            course_scans.last().copied()
        } else {
            None
        };
        if course_targets.len() == course {
            course_targets.push(match scan {
                Some(s) => s.mean_top_height + cfg.adhesive_thickness + nominal.height,
                None => plan.nominal_pose.translation.z,
            });
        }

        let brick_seed = derive_seed(seed, i as u64);
        let mut timing_rng = stream(brick_seed, 4);
        let mut tick = |clock: &mut Clock, p: Subprocess| {
            let d = timing.sample(p, &mut timing_rng);
            clock.log(d, Some(&plan.brick_id), EventKind::Subprocess(p));
        };

        let true_dims = sample_dims(&nominal, noise, brick_seed);
        let queue_pose = design.pickup.queue[i % design.pickup.queue.len()];
        let on_platform = Brick {
            pose: sample_pickup_pose(&queue_pose, platform + true_dims.height, noise, brick_seed),
            dims: true_dims,
        };

        // Where the robot believes the brick is when it grasps.
        let belief: BrickObservation = match mode {
            Mode::Adaptive => {
                tick(&mut clock, Subprocess::Scanning);
                let cloud = simulate_brick_scan(
                    &on_platform,
                    platform,
                    design.scan.brick_pitch,
                    noise.scan_sigma,
                    derive_seed(brick_seed, 2),
                )
                .map_err(|e| SimError::Model(e.to_string()))?;
                let mut obs =
                    estimate_brick(&cloud, platform).map_err(|e| SimError::Model(e.to_string()))?;
                obs.pose = align_half_turn(&obs.pose, &queue_pose);
                tick(&mut clock, Subprocess::DataCollection);
                obs
            }
            Mode::OpenLoop => BrickObservation {
                pose: queue_pose,
                length: nominal.length,
                width: nominal.width,
                height: nominal.height,
                residual_rms: 0.0,
            },
        };
        let grasp = grasp_pose(&belief, cfg);
        let in_hand = grasp
            .compose(&cfg.grasp_offset.inverse())
            .inverse()
            .compose(&on_platform.pose);

        let mut warnings = Vec::new();
        let (target, target_top_z) = match (mode, scan) {
            (Mode::Adaptive, Some(scan)) => {
                let cp = corrected_placement(plan, &scan, &belief, cfg)
                    .map_err(|e| SimError::Model(e.to_string()))?;
                if cp.lateral.saturated {
                    warnings.push(Warning::LateralSaturated {
                        shift: cp.lateral.shift(),
                    });
                }
                (cp.pose, cp.target_top_z)
            }
            _ => (plan.nominal_pose, plan.nominal_pose.translation.z),
        };
        tick(&mut clock, Subprocess::Traversal);
        tick(&mut clock, Subprocess::Adhesive);
        tick(&mut clock, Subprocess::UserWait);

        let released = Brick {
            pose: actuate(&target.compose(&in_hand), noise, brick_seed),
            dims: true_dims,
        };
        let supports: Vec<Brick> = placed
            .iter()
            .filter(|p| p.course_index < course)
            .map(|p| Brick {
                pose: p.true_pose,
                dims: p.true_dims,
            })
            .collect();
        let settled = settle(&released, &supports, design.slab_top_z, &design.thresholds);
        let failure = match settled.outcome {
            SettleOutcome::Collision => Some(Outcome::CollisionFailure {
                brick_id: plan.brick_id.clone(),
            }),
            SettleOutcome::BondGap => Some(Outcome::BondGapFailure {
                brick_id: plan.brick_id.clone(),
            }),
            SettleOutcome::RodeHigh { by } => {
                warnings.push(Warning::RodeHigh { by });
                None
            }
            SettleOutcome::Bonded => None,
        }
        .or_else(|| {
            let final_brick = Brick {
                pose: settled.pose,
                dims: true_dims,
            };
            let neighbours = placed.iter().filter(|p| p.course_index == course).map(|p| {
                let b = Brick {
                    pose: p.true_pose,
                    dims: p.true_dims,
                };
                (p.brick_id.as_str(), b.footprint())
            });
            check_collisions(
                &final_brick.footprint(),
                neighbours,
                design.thresholds.xy_overlap,
            )
            .map(|_| Outcome::CollisionFailure {
                brick_id: plan.brick_id.clone(),
            })
        });
        if let Some(f) = failure {
            clock.log(0.0, Some(&plan.brick_id), EventKind::Failure);
            outcome = f;
            break;
        }
        clock.log(0.0, Some(&plan.brick_id), EventKind::Placed);
        placed.push(PlacedBrick {
            brick_id: plan.brick_id.clone(),
            course_index: course,
            true_pose: settled.pose,
            true_dims,
            commanded_pose: target,
            target_top_z,
            settle_gap: settled.settle_gap,
            in_hand_offset: in_hand,
            warnings,
        });
        i += 1;
    }

    let unplaced = plans
        .iter()
        .skip(placed.len())
        .map(|p| p.brick_id.clone())
        .collect();
    Ok(BuildState {
        schema_version: BUILD_SCHEMA_VERSION,
        design: design.name.clone(),
        mode,
        seed,
        placed,
        unplaced,
        course_scans,
        course_targets,
        events: clock.events,
        outcome,
    })
}

fn sample_dims(nominal: &BrickDims, noise: &NoiseModel, brick_seed: u64) -> BrickDims {
    let mut rng = stream(brick_seed, 0);
    let s = noise.dim_sigma;
    let mut d = BrickDims {
        length: nominal.length + truncated_gaussian(&mut rng, s.length, DIM_TRUNCATION),
        width: nominal.width + truncated_gaussian(&mut rng, s.width, DIM_TRUNCATION),
        height: nominal.height + truncated_gaussian(&mut rng, s.height, DIM_TRUNCATION),
    };
    if d.width > d.length {
        std::mem::swap(&mut d.width, &mut d.length);
    }
    d
}

fn sample_pickup_pose(queue: &Pose, top_z: f64, noise: &NoiseModel, brick_seed: u64) -> Pose {
    let mut rng = stream(brick_seed, 1);
    let s = noise.pickup_pose_sigma;
    let dx = gaussian(&mut rng, s.xy);
    let dy = gaussian(&mut rng, s.xy);
    let dyaw = gaussian(&mut rng, s.yaw);
    let t = queue.translation + Vector3::new(dx, dy, 0.0);
    Pose::new(rot_z(dyaw) * queue.rotation, Vector3::new(t.x, t.y, top_z))
}

/// Release error: planar offset, height error plus bias, yaw about the brick
/// center.
fn actuate(pose: &Pose, noise: &NoiseModel, brick_seed: u64) -> Pose {
    let mut rng = stream(brick_seed, 3);
    let s = noise.actuation_sigma;
    let d = Vector3::new(
        gaussian(&mut rng, s.xy),
        gaussian(&mut rng, s.xy),
        gaussian(&mut rng, s.z) + noise.actuation_bias_z,
    );
    let dyaw = gaussian(&mut rng, s.yaw);
    Pose::new(rot_z(dyaw) * pose.rotation, pose.translation + d)
}

/// The rectangle fit cannot tell a brick from its half-turn; pick the
/// equivalent pose closest in heading to the expected one.
fn align_half_turn(pose: &Pose, expected: &Pose) -> Pose {
    let diff = crate::geometry::wrap_half_turn(expected.yaw() - pose.yaw());
    let turn = expected.yaw() - pose.yaw() - diff;
    if turn.abs() > 1.0 {
        Pose::new(rot_z(turn) * pose.rotation, pose.translation)
    } else {
        *pose
    }
}

/// Course-top scan before placing `course`: the bricks of the course below,
/// or the slab under the course's footprint for the first course.
fn scan_course(
    design: &WallDesign,
    plans: &[PlacementPlan],
    placed: &[PlacedBrick],
    course: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CourseScan, SimError> {
    let surfaces: Vec<Brick> = if course == 0 {
        plans
            .iter()
            .filter(|p| p.course_index == 0)
            .map(|p| {
                let mut pose = p.nominal_pose;
                pose.translation.z = design.slab_top_z;
                Brick {
                    pose,
                    dims: design.nominal_brick,
                }
            })
            .collect()
    } else {
        placed
            .iter()
            .filter(|p| p.course_index + 1 == course)
            .map(|p| Brick {
                pose: p.true_pose,
                dims: p.true_dims,
            })
            .collect()
    };
    let cloud = simulate_course_scan(
        &surfaces,
        design.scan.course_pitch,
        noise.scan_sigma,
        design.scan.course_coverage,
        derive_seed(seed, 1_000_000 + course as u64),
    )
    .map_err(|e| SimError::Model(e.to_string()))?;
    summarize_course(&cloud, course).map_err(|e| SimError::Model(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_turn_alignment() {
        let expected = Pose::from_yaw(0.0, Vector3::zeros());
        let flipped = Pose::from_yaw(std::f64::consts::PI - 0.01, Vector3::zeros());
        let a = align_half_turn(&flipped, &expected);
        assert!((a.yaw() + 0.01).abs() < 1e-12);
        let near = Pose::from_yaw(0.02, Vector3::zeros());
        assert_eq!(align_half_turn(&near, &expected), near);
    }

    #[test]
    fn noise_free_dims_are_nominal() {
        let d = sample_dims(&BrickDims::MODULAR, &NoiseModel::zero(), 5);
        assert_eq!(d, BrickDims::MODULAR);
    }

    fn build(noise: &NoiseModel, mode: Mode) -> BuildState {
        run_build(
            &WallDesign::conventional_21(),
            noise,
            mode,
            &TimingModel::default(),
            &AdaptiveConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn identical_inputs_give_identical_states() {
        let n = NoiseModel::typical();
        for mode in [Mode::OpenLoop, Mode::Adaptive] {
            let a = serde_json::to_string(&build(&n, mode)).unwrap();
            let b = serde_json::to_string(&build(&n, mode)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn placed_plus_unplaced_is_the_design() {
        let n = NoiseModel::typical();
        for seed in 0..20 {
            let s = build(&n.with_seed(seed), Mode::OpenLoop);
            assert_eq!(s.placed.len() + s.unplaced.len(), 21);
            assert_eq!(s.outcome.is_failure(), !s.unplaced.is_empty());
        }
    }

    #[test]
    fn adaptive_grasp_is_neutral_without_scan_noise() {
        let mut n = NoiseModel::typical();
        n.scan_sigma = 0.0;
        let s = build(&n, Mode::Adaptive);
        for p in &s.placed {
            assert!(
                p.in_hand_offset.max_deviation(&Pose::identity()) < 1e-9,
                "{}",
                p.brick_id
            );
        }
    }

    #[test]
    fn open_loop_in_hand_offset_is_true_minus_nominal() {
        let mut n = NoiseModel::zero();
        n.dim_sigma.height = 0.001;
        let s = build(&n.with_seed(3), Mode::OpenLoop);
        for p in &s.placed {
            let dz = p.true_dims.height - BrickDims::MODULAR.height;
            assert!((p.in_hand_offset.translation.z - dz).abs() < 1e-15);
        }
    }

    #[test]
    fn events_are_contiguous_in_time() {
        let n = NoiseModel::typical();
        let s = run_build(
            &WallDesign::conventional_21(),
            &n,
            Mode::Adaptive,
            &TimingModel {
                jitter: 0.2,
                ..Default::default()
            },
            &AdaptiveConfig::default(),
        )
        .unwrap();
        for w in s.events.windows(2) {
            assert_eq!(w[0].time + w[0].duration, w[1].time);
        }
    }

    #[test]
    fn bad_noise_is_a_config_error() {
        let mut n = NoiseModel::zero();
        n.scan_sigma = -1.0;
        let r = run_build(
            &WallDesign::conventional_21(),
            &n,
            Mode::Adaptive,
            &TimingModel::default(),
            &AdaptiveConfig::default(),
        );
        assert!(matches!(r, Err(SimError::Config(_))));
    }
}
