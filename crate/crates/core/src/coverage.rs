//! Adhesive quality metrics on binary masks, and a synthetic applicator that
//! produces masks for testing.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geometry::min_area_rect;
use crate::random::{gaussian, stream};

pub const MASK_SCHEMA_VERSION: u32 = 1;
pub const REGION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoverageError {
    #[error("target region covers no pixel of the mask")]
    EmptyRegion,
    #[error("mask must be at least 1x1 with a positive scale")]
    InvalidMask,
    #[error("malformed mask data: {0}")]
    Format(String),
    #[error("invalid application style: {0}")]
    InvalidStyle(&'static str),
}

/// Row-major binary occupancy grid. Pixel `(x, y)` covers
/// `[x, x+1) x [y, y+1)` in mask coordinates; `scale` is meters per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    pub scale: f64,
}

impl Mask {
    pub fn new(width: usize, height: usize, scale: f64) -> Result<Self, CoverageError> {
        if width == 0 || height == 0 || !(scale > 0.0) || !scale.is_finite() {
            return Err(CoverageError::InvalidMask);
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
            scale,
        })
    }

    pub fn from_bits(
        width: usize,
        height: usize,
        bits: Vec<bool>,
        scale: f64,
    ) -> Result<Self, CoverageError> {
        let mut m = Self::new(width, height, scale)?;
        if bits.len() != width * height {
            return Err(CoverageError::Format(format!(
                "expected {} pixels, found {}",
                width * height,
                bits.len()
            )));
        }
        m.bits = bits;
        Ok(m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Region coverage, exposed adhesive and largest missed patch, each a
/// fraction in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub region_coverage: f64,
    pub exposed_adhesive: f64,
    pub largest_missed_patch: f64,
}

/// Target region file contents: a simple polygon in mask pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub schema_version: u32,
    pub vertices: Vec<[f64; 2]>,
}

impl Region {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Self {
            schema_version: REGION_SCHEMA_VERSION,
            vertices,
        }
    }

    pub fn points(&self) -> Vec<Vector2<f64>> {
        self.vertices
            .iter()
            .map(|v| Vector2::new(v[0], v[1]))
            .collect()
    }
}

fn on_segment(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> bool {
    let ab = b - a;
    let ap = p - a;
    let cross = ab.x * ap.y - ab.y * ap.x;
    let tol = 1e-12 * (1.0 + ab.norm() * ap.norm());
    cross.abs() <= tol && ap.dot(&ab) >= -tol && (p - b).dot(&-ab) >= -tol
}

/// Point-in-polygon by even-odd crossing; points on an edge are inside.
pub fn point_in_polygon(p: &Vector2<f64>, poly: &[Vector2<f64>]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Pixels whose centers lie inside or on the polygon.
pub fn rasterize_polygon(poly: &[Vector2<f64>], width: usize, height: usize) -> Vec<bool> {
    let mut out = vec![false; width * height];
    if poly.len() < 3 {
        return out;
    }
    let (lo, hi) = poly.iter().fold(
        (
            Vector2::repeat(f64::INFINITY),
            Vector2::repeat(f64::NEG_INFINITY),
        ),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let range = |lo: f64, hi: f64, n: usize| {
        let a = (lo - 0.5).ceil().max(0.0) as usize;
        let b = ((hi - 0.5).floor() + 1.0).clamp(0.0, n as f64) as usize;
        a..b.max(a)
    };
    for y in range(lo.y, hi.y, height) {
        for x in range(lo.x, hi.x, width) {
            let c = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
            if point_in_polygon(&c, poly) {
                out[y * width + x] = true;
            }
        }
    }
    out
}

/// Size of the largest 4-connected component of set pixels.
pub fn largest_component(bits: &[bool], width: usize, height: usize) -> usize {
    let mut seen = vec![false; bits.len()];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % width, i / width);
            let mut visit = |j: usize| {
                if bits[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
        best = best.max(size);
    }
    best
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores an adhesive mask against the target bonding region.
///
/// Missed patches are 4-connected. An empty mask is valid and scores zero
/// coverage and zero exposure.
pub fn analyze(region: &[Vector2<f64>], adhesive: &Mask) -> Result<CoverageReport, CoverageError> {
    let (w, h) = (adhesive.width, adhesive.height);
    let inside = rasterize_polygon(region, w, h);
    let region_px = inside.iter().filter(|b| **b).count();
    if region_px == 0 {
        return Err(CoverageError::EmptyRegion);
    }
    let mut covered = 0;
    let mut exposed = 0;
    let missed: Vec<bool> = inside
        .iter()
        .zip(&adhesive.bits)
        .map(|(&r, &a)| {
            covered += (r && a) as usize;
            exposed += (!r && a) as usize;
            r && !a
        })
        .collect();
    Ok(CoverageReport {
        region_coverage: ratio(covered, region_px),
        exposed_adhesive: ratio(exposed, adhesive.count()),
        largest_missed_patch: ratio(largest_component(&missed, w, h), region_px),
    })
}

/// How a (simulated) worker lays adhesive beads across a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplicationStyle {
    pub bead_width: f64,
    pub stroke_count: usize,
    /// Standard deviation of each stroke endpoint offset (m).
    pub placement_jitter_sigma: f64,
    /// Standard deviation of each stroke's heading error (rad).
    pub angular_jitter_sigma: f64,
    pub seed: u64,
}

impl ApplicationStyle {
    /// Beads following a projected outline: 14 mm beads, 8 strokes,
    /// sub-millimetre placement error.
    pub fn guided(seed: u64) -> Self {
        Self {
            bead_width: 0.014,
            stroke_count: 8,
            placement_jitter_sigma: 0.0005,
            angular_jitter_sigma: 0.5f64.to_radians(),
            seed,
        }
    }

    /// Same stroke budget laid by eye: 10 mm placement error.
    pub fn unguided(seed: u64) -> Self {
        Self {
            placement_jitter_sigma: 0.010,
            angular_jitter_sigma: 3f64.to_radians(),
            ..Self::guided(seed)
        }
    }
}

fn point_segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

fn paint_capsule(mask: &mut Mask, a: &Vector2<f64>, b: &Vector2<f64>, radius: f64) {
    let lo = a.inf(b).add_scalar(-radius);
    let hi = a.sup(b).add_scalar(radius);
    let x0 = (lo.x - 0.5).ceil().max(0.0) as usize;
    let y0 = (lo.y - 0.5).ceil().max(0.0) as usize;
    let x1 = ((hi.x - 0.5).floor() + 1.0).clamp(0.0, mask.width as f64) as usize;
    let y1 = ((hi.y - 0.5).floor() + 1.0).clamp(0.0, mask.height as f64) as usize;
    for y in y0..y1 {
        for x in x0..x1 {
            let c = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
            if point_segment_distance(&c, a, b) <= radius {
                mask.set(x, y, true);
            }
        }
    }
}

/// Lays `stroke_count` capsule beads along the long axis of the region's
/// minimum-area rectangle, evenly spaced across its width and kept inside it
/// when jitter is zero. Endpoints and headings are jittered per stroke.
pub fn synth_application(
    region: &[Vector2<f64>],
    style: &ApplicationStyle,
    width: usize,
    height: usize,
    scale: f64,
) -> Result<Mask, CoverageError> {
    let mut mask = Mask::new(width, height, scale)?;
    if !(style.bead_width > 0.0)
        || !(style.placement_jitter_sigma >= 0.0)
        || !(style.angular_jitter_sigma >= 0.0)
    {
        return Err(CoverageError::InvalidStyle(
            "bead width must be positive and jitter non-negative",
        ));
    }
    if style.stroke_count == 0 {
        return Ok(mask);
    }
    let rect = min_area_rect(region).map_err(|_| CoverageError::EmptyRegion)?;
    let (u, v) = rect.axes();
    let bead = style.bead_width / scale;
    let radius = 0.5 * bead;
    let half_run = (rect.half_extents.x - radius).max(0.0);
    let span = (2.0 * rect.half_extents.y - bead).max(0.0);
    let n = style.stroke_count;
    let jitter = style.placement_jitter_sigma / scale;
    let mut rng = stream(style.seed, 0);
    for i in 0..n {
        let offset = if n == 1 {
            0.0
        } else {
            -0.5 * span + span * i as f64 / (n - 1) as f64
        };
        let mid = rect.center + v * offset;
        let mut a = mid - u * half_run;
        let mut b = mid + u * half_run;
        let turn = gaussian(&mut rng, style.angular_jitter_sigma);
        if turn != 0.0 {
            let r = crate::geometry::rotation2(turn);
            a = mid + r * (a - mid);
            b = mid + r * (b - mid);
        }
        a += Vector2::new(gaussian(&mut rng, jitter), gaussian(&mut rng, jitter));
        b += Vector2::new(gaussian(&mut rng, jitter), gaussian(&mut rng, jitter));
        paint_capsule(&mut mask, &a, &b, radius);
    }
    Ok(mask)
}

/// Binary PGM (P5); adhesive pixels are 255. The scale is kept in a comment.
pub fn write_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!(
        "P5\n# scale {:?}\n{} {}\n255\n",
        mask.scale, mask.width, mask.height
    )
    .into_bytes();
    out.extend(mask.bits.iter().map(|b| if *b { 255u8 } else { 0 }));
    out
}

/// Reads a binary PGM, thresholding at 128. `default_scale` applies when
/// the file carries no `# scale` comment.
pub fn read_pgm(data: &[u8], default_scale: f64) -> Result<Mask, CoverageError> {
    let mut pos = 0;
    let mut scale = default_scale;
    let mut fields: Vec<String> = Vec::new();
    while fields.len() < 4 {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= data.len() {
            return Err(CoverageError::Format("truncated PGM header".into()));
        }
        if data[pos] == b'#' {
            let end = data[pos..]
                .iter()
                .position(|c| *c == b'\n')
                .map_or(data.len(), |e| pos + e);
            let comment = String::from_utf8_lossy(&data[pos + 1..end]);
            if let Some(v) = comment.trim().strip_prefix("scale ") {
                scale = v
                    .trim()
                    .parse()
                    .map_err(|_| CoverageError::Format(format!("bad scale comment {v:?}")))?;
            }
            pos = end;
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(CoverageError::Format(format!(
            "expected binary PGM (P5), found {:?}",
            fields[0]
        )));
    }
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| CoverageError::Format(format!("bad {what} {s:?}")))
    };
    let (w, h, maxval) = (
        num(&fields[1], "width")?,
        num(&fields[2], "height")?,
        num(&fields[3], "maxval")?,
    );
    if maxval == 0 || maxval > 255 {
        return Err(CoverageError::Format(format!(
            "unsupported maxval {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = data
        .get(pos..pos + w * h)
        .ok_or_else(|| CoverageError::Format(format!("expected {} raster bytes", w * h)))?;
    Mask::from_bits(w, h, raster.iter().map(|v| *v >= 128).collect(), scale)
}

/// JSON bitmap: one string of '0'/'1' per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskJson {
    pub schema_version: u32,
    pub width: usize,
    pub height: usize,
    pub scale: f64,
    pub rows: Vec<String>,
}

impl From<&Mask> for MaskJson {
    fn from(m: &Mask) -> Self {
        Self {
            schema_version: MASK_SCHEMA_VERSION,
            width: m.width,
            height: m.height,
            scale: m.scale,
            rows: m
                .bits
                .chunks(m.width)
                .map(|r| r.iter().map(|b| if *b { '1' } else { '0' }).collect())
                .collect(),
        }
    }
}

impl TryFrom<&MaskJson> for Mask {
    type Error = CoverageError;

    fn try_from(j: &MaskJson) -> Result<Self, CoverageError> {
        if j.schema_version != MASK_SCHEMA_VERSION {
            return Err(CoverageError::Format(format!(
                "unsupported mask schema_version {}",
                j.schema_version
            )));
        }
        if j.rows.len() != j.height {
            return Err(CoverageError::Format(format!(
                "expected {} rows, found {}",
                j.height,
                j.rows.len()
            )));
        }
        let mut bits = Vec::with_capacity(j.width * j.height);
        for (y, row) in j.rows.iter().enumerate() {
            if row.len() != j.width {
                return Err(CoverageError::Format(format!(
                    "row {y} has {} pixels",
                    row.len()
                )));
            }
            for c in row.chars() {
                bits.push(match c {
                    '1' => true,
                    '0' => false,
                    _ => return Err(CoverageError::Format(format!("row {y}: unexpected {c:?}"))),
                });
            }
        }
        Mask::from_bits(j.width, j.height, bits, j.scale)
    }
}

pub const CSV_HEADER: &str =
    "source,region_coverage_pct,exposed_adhesive_pct,largest_missed_patch_pct,application_time_s";

fn pct(x: f64) -> f64 {
    (x * 1e6).round() / 1e4
}

/// One CSV row in the order coverage, exposed, missed patch, time (percent
/// values, time in seconds or empty).
pub fn csv_row(source: &str, r: &CoverageReport, time: Option<f64>) -> String {
    let mut s = format!(
        "{},{},{},{},",
        source,
        pct(r.region_coverage),
        pct(r.exposed_adhesive),
        pct(r.largest_missed_patch)
    );
    if let Some(t) = time {
        let _ = write!(s, "{t}");
    }
    s
}
