//! Z-clamp settling and plan-view collision checks.

use serde::{Deserialize, Serialize};

use crate::geometry::{OrientedRect2, Pose};
use crate::perception::Brick;

use super::design::Thresholds;

/// Gaps this close to zero are exact contact, not a ride-high.
const CONTACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SettleOutcome {
    /// Adhesive fills the gap; the brick stays where it was released.
    Bonded,
    /// Released slightly into the support; the brick rests on it instead.
    RodeHigh {
        by: f64,
    },
    Collision,
    BondGap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled {
    pub pose: Pose,
    /// Adhesive thickness under the brick after settling.
    pub settle_gap: f64,
    /// Commanded bottom minus the highest support top under the footprint.
    pub raw_gap: f64,
    pub outcome: SettleOutcome,
}

/// Signed plan-view penetration depth of two oriented rectangles: the
/// smallest projection overlap over the four side normals. Negative values
/// are a separation distance along the best separating axis.
pub fn overlap_depth(a: &OrientedRect2, b: &OrientedRect2) -> f64 {
    let (au, av) = a.axes();
    let (bu, bv) = b.axes();
    let d = b.center - a.center;
    let radius = |r: &OrientedRect2, axis: &nalgebra::Vector2<f64>| {
        let (u, v) = r.axes();
        r.half_extents.x * u.dot(axis).abs() + r.half_extents.y * v.dot(axis).abs()
    };
    [au, av, bu, bv]
        .iter()
        .map(|axis| radius(a, axis) + radius(b, axis) - d.dot(axis).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Settles a released brick onto the highest support under its footprint.
///
/// `supports` are bricks from lower courses; `slab_top_z` is always under
/// the footprint.
pub fn settle(brick: &Brick, supports: &[Brick], slab_top_z: f64, t: &Thresholds) -> Settled {
    let fp = brick.footprint();
    let support_top = supports
        .iter()
        .filter(|s| overlap_depth(&fp, &s.footprint()) > 0.0)
        .map(Brick::top_z)
        .fold(slab_top_z, f64::max);
    let gap = brick.bottom_z() - support_top;
    let mut pose = brick.pose;
    let (settle_gap, outcome) = if gap < -t.collision_z {
        (0.0, SettleOutcome::Collision)
    } else if gap < -CONTACT_TOLERANCE {
        pose.translation.z = support_top + brick.dims.height;
        (0.0, SettleOutcome::RodeHigh { by: -gap })
    } else if gap <= t.max_bond_gap {
        (gap.max(0.0), SettleOutcome::Bonded)
    } else {
        (gap, SettleOutcome::BondGap)
    };
    Settled {
        pose,
        settle_gap,
        raw_gap: gap,
        outcome,
    }
}

/// First same-course brick the new footprint penetrates by more than
/// `xy_overlap_threshold`, with the penetration depth.
pub fn check_collisions<'a, I>(
    new_footprint: &OrientedRect2,
    placed: I,
    xy_overlap_threshold: f64,
) -> Option<(&'a str, f64)>
where
    I: IntoIterator<Item = (&'a str, OrientedRect2)>,
{
    placed.into_iter().find_map(|(id, fp)| {
        let depth = overlap_depth(new_footprint, &fp);
        (depth > xy_overlap_threshold).then_some((id, depth))
    })
}
