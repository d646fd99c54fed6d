//! Laser-scan synthesis and estimation of brick poses, brick dimensions and
//! as-built course heights.

use std::io::{BufRead, Write};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{min_area_rect, GeometryError, OrientedRect2, Pose};
use crate::random::{gaussian, stream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerceptionError {
    #[error("scan produced no points")]
    EmptyScan,
    #[error("invalid scan parameters: {0}")]
    InvalidParameters(&'static str),
    #[error("estimated brick height is not positive ({height} m)")]
    NegativeHeight { height: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point cloud parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanSource {
    BrickTopScan,
    CourseTopScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub source: ScanSource,
}

/// Brick dimensions; `length ≥ width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrickDims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl BrickDims {
    /// 200 × 100 × 65 mm modular brick.
    pub const MODULAR: BrickDims = BrickDims {
        length: 0.2,
        width: 0.1,
        height: 0.065,
    };
}

/// Physical brick: pose at the top-face center with Z up, and its dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Brick {
    pub pose: Pose,
    pub dims: BrickDims,
}

impl Brick {
    pub fn top_z(&self) -> f64 {
        self.pose.translation.z
    }

    pub fn bottom_z(&self) -> f64 {
        self.pose.translation.z - self.dims.height
    }

    /// Plan-view footprint.
    pub fn footprint(&self) -> OrientedRect2 {
        footprint(&self.pose, self.dims.length, self.dims.width)
    }
}

/// Plan-view rectangle of a Z-up brick pose with the given length/width.
pub fn footprint(pose: &Pose, length: f64, width: f64) -> OrientedRect2 {
    let c = pose.translation.xy();
    OrientedRect2 {
        center: c,
        half_extents: Vector2::new(0.5 * length, 0.5 * width),
        yaw: crate::geometry::wrap_half_turn(pose.yaw()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrickObservation {
    /// Top-face center, Z up, X along the brick length.
    pub pose: Pose,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// RMS of top-face heights about their mean.
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CourseScan {
    pub course_index: usize,
    pub mean_top_height: f64,
    pub sample_count: usize,
    pub height_spread: f64,
}

/// Raster of the brick's top face.
///
/// The scan lines run along the brick axes and include the face boundary,
/// so a noise-free scan carries the exact outline. The effective pitch is the
/// largest spacing `≤ scan_pitch` that divides each side evenly.
pub fn simulate_brick_scan(
    brick: &Brick,
    platform_top_z: f64,
    scan_pitch: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<PointCloud, PerceptionError> {
    if !(scan_pitch > 0.0) {
        return Err(PerceptionError::InvalidParameters(
            "scan pitch must be positive",
        ));
    }
    if !(noise_sigma >= 0.0) {
        return Err(PerceptionError::InvalidParameters(
            "noise sigma must be non-negative",
        ));
    }
    let BrickDims {
        length,
        width,
        height,
    } = brick.dims;
    if scan_pitch > length && scan_pitch > width {
        return Err(PerceptionError::EmptyScan);
    }
    let top = platform_top_z + height;
    let local = grid(length, width, scan_pitch);
    let mut rng = stream(seed, 1);
    let points = local
        .into_iter()
        .map(|p| {
            let w = brick.pose.transform_point(&Vector3::new(p.x, p.y, 0.0));
            Vector3::new(w.x, w.y, top + gaussian(&mut rng, noise_sigma))
        })
        .collect();
    Ok(PointCloud {
        points,
        source: ScanSource::BrickTopScan,
    })
}

fn grid(length: f64, width: f64, pitch: f64) -> Vec<Vector2<f64>> {
    let nx = (length / pitch).ceil().max(1.0) as usize;
    let ny = (width / pitch).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        let x = -0.5 * length + length * i as f64 / nx as f64;
        for j in 0..=ny {
            let y = -0.5 * width + width * j as f64 / ny as f64;
            out.push(Vector2::new(x, y));
        }
    }
    out
}

/// Raster over the top faces of `bricks`, keeping each face with probability
/// `coverage` (at least one face is always scanned).
pub fn simulate_course_scan(
    bricks: &[Brick],
    scan_pitch: f64,
    noise_sigma: f64,
    coverage: f64,
    seed: u64,
) -> Result<PointCloud, PerceptionError> {
    use rand::RngExt;
    if !(scan_pitch > 0.0) {
        return Err(PerceptionError::InvalidParameters(
            "scan pitch must be positive",
        ));
    }
    if bricks.is_empty() {
        return Err(PerceptionError::EmptyScan);
    }
    let mut pick = stream(seed, 2);
    let mut noise = stream(seed, 3);
    let mut chosen: Vec<&Brick> = bricks
        .iter()
        .filter(|_| coverage >= 1.0 || pick.random::<f64>() < coverage)
        .collect();
    if chosen.is_empty() {
        chosen.push(&bricks[pick.random_range(0..bricks.len())]);
    }
    let mut points = Vec::new();
    for b in chosen {
        for p in grid(b.dims.length, b.dims.width, scan_pitch) {
            let w = b.pose.transform_point(&Vector3::new(p.x, p.y, 0.0));
            points.push(Vector3::new(
                w.x,
                w.y,
                w.z + gaussian(&mut noise, noise_sigma),
            ));
        }
    }
    Ok(PointCloud {
        points,
        source: ScanSource::CourseTopScan,
    })
}

/// Fits the plan-view minimum-area rectangle to a top-face scan; height is
/// measured from the known support surface under the brick.
pub fn estimate_brick(
    cloud: &PointCloud,
    support_top_z: f64,
) -> Result<BrickObservation, PerceptionError> {
    if cloud.points.is_empty() {
        return Err(PerceptionError::EmptyScan);
    }
    let xy: Vec<Vector2<f64>> = cloud.points.iter().map(|p| p.xy()).collect();
    let rect = min_area_rect(&xy)?;
    let n = cloud.points.len() as f64;
    let mean_z = cloud.points.iter().map(|p| p.z).sum::<f64>() / n;
    let height = mean_z - support_top_z;
    if !(height > 0.0) {
        return Err(PerceptionError::NegativeHeight { height });
    }
    let residual_rms = (cloud
        .points
        .iter()
        .map(|p| (p.z - mean_z).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(BrickObservation {
        pose: Pose::from_yaw(rect.yaw, Vector3::new(rect.center.x, rect.center.y, mean_z)),
        length: rect.length(),
        width: rect.width(),
        height,
        residual_rms,
    })
}

pub fn summarize_course(
    cloud: &PointCloud,
    course_index: usize,
) -> Result<CourseScan, PerceptionError> {
    if cloud.points.is_empty() {
        return Err(PerceptionError::EmptyScan);
    }
    let n = cloud.points.len();
    let (mut lo, mut hi, mut sum) = (f64::MAX, f64::MIN, 0.0);
    for p in &cloud.points {
        lo = lo.min(p.z);
        hi = hi.max(p.z);
        sum += p.z;
    }
    Ok(CourseScan {
        course_index,
        mean_top_height: sum / n as f64,
        sample_count: n,
        height_spread: hi - lo,
    })
}

/// Writes one `x y z` line per point. `{:?}` formatting of `f64` round-trips
/// exactly through [`read_xyz`].
pub fn write_xyz<W: Write>(cloud: &PointCloud, mut w: W) -> std::io::Result<()> {
    for p in &cloud.points {
        writeln!(w, "{:?} {:?} {:?}", p.x, p.y, p.z)?;
    }
    Ok(())
}

/// Reads whitespace-delimited XYZ text. Blank lines and `#` comments are
/// skipped.
pub fn read_xyz<R: BufRead>(r: R, source: ScanSource) -> Result<PointCloud, PerceptionError> {
    let mut points = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| PerceptionError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = t
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e: std::num::ParseFloatError| PerceptionError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(PerceptionError::Parse {
                line: i + 1,
                message: format!("expected three finite values, found {}", vals.len()),
            });
        }
        points.push(Vector3::new(vals[0], vals[1], vals[2]));
    }
    Ok(PointCloud { points, source })
}
