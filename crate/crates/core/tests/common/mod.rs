//! Brute-force reference implementations shared by the integration and
//! acceptance tests. Each one is written without calling the routine it
//! checks.

#![allow(dead_code)]

use brickwork::geometry::{Line3, OrientedRect2, Pose};
use brickwork::projector::ProjectorModel;
use nalgebra::{Vector2, Vector3};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector<R: Rng>(r: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_pose<R: Rng>(r: &mut R, max_angle: f64, max_offset: f64) -> Pose {
    let t = Vector3::new(
        r.random_range(-max_offset..max_offset),
        r.random_range(-max_offset..max_offset),
        r.random_range(-max_offset..max_offset),
    );
    Pose::from_axis_angle(&unit_vector(r), r.random_range(0.0..max_angle), t)
}

/// Projector mounts in the range a real tool flange would carry.
pub fn random_model<R: Rng>(r: &mut R) -> ProjectorModel {
    ProjectorModel::new(
        random_pose(r, 30f64.to_radians(), 0.15),
        r.random_range(25f64..60.0).to_radians(),
        r.random_range(15f64..45.0).to_radians(),
    )
    .expect("angles are inside (0, pi)")
}

/// Minimizer of the summed squared line distances by nested grid search.
/// The objective is a convex quadratic, so shrinking the box around the best
/// sample converges to the global minimum.
pub fn apex_by_grid(lines: &[Line3], start: Vector3<f64>, half_span: f64) -> Vector3<f64> {
    let f = |p: &Vector3<f64>| -> f64 {
        lines
            .iter()
            .map(|l| {
                let d = p - l.point;
                (d - l.direction * d.dot(&l.direction)).norm_squared()
            })
            .sum()
    };
    const N: i32 = 5;
    let mut center = start;
    let mut span = half_span;
    while span > 1e-12 {
        let step = span / N as f64;
        let mut best = (f(&center), center);
        for i in -N..=N {
            for j in -N..=N {
                for k in -N..=N {
                    let p = center + Vector3::new(i as f64, j as f64, k as f64) * step;
                    let v = f(&p);
                    if v < best.0 {
                        best = (v, p);
                    }
                }
            }
        }
        center = best.1;
        span = 2.0 * step;
    }
    center
}

fn rotated_aabb_area(points: &[Vector2<f64>], theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    let (mut ulo, mut uhi, mut vlo, mut vhi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        let u = c * p.x + s * p.y;
        let v = -s * p.x + c * p.y;
        ulo = ulo.min(u);
        uhi = uhi.max(u);
        vlo = vlo.min(v);
        vhi = vhi.max(v);
    }
    (uhi - ulo) * (vhi - vlo)
}

/// Smallest bounding-box area over headings: a 0.1 degree sweep of the
/// quarter turn, then repeated zooming sweeps around the three best coarse
/// headings.
pub fn min_rect_area_by_sweep(points: &[Vector2<f64>]) -> f64 {
    let coarse = 0.1f64.to_radians();
    let mut samples: Vec<(f64, f64)> = (0..900)
        .map(|i| {
            let t = i as f64 * coarse;
            (rotated_aabb_area(points, t), t)
        })
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = samples[0].0;
    for &(_, t0) in samples.iter().take(3) {
        let (mut center, mut step) = (t0, coarse);
        for _ in 0..8 {
            let fine = step / 50.0;
            let (area, t) = (-50..=50)
                .map(|j| {
                    let t = center + j as f64 * fine;
                    (rotated_aabb_area(points, t), t)
                })
                .fold((f64::MAX, center), |a, b| if b.0 < a.0 { b } else { a });
            best = best.min(area);
            center = t;
            step = fine;
        }
    }
    best
}

/// Whether two rectangles' interiors share a point, decided by sampling a
/// dense grid over each rectangle and testing it against the other.
pub fn rects_overlap_by_sampling(a: &OrientedRect2, b: &OrientedRect2, n: usize) -> bool {
    let inside = |r: &OrientedRect2, p: &Vector2<f64>| {
        let d = p - r.center;
        let (c, s) = (r.yaw.cos(), r.yaw.sin());
        let lx = c * d.x + s * d.y;
        let ly = -s * d.x + c * d.y;
        lx.abs() < r.half_extents.x && ly.abs() < r.half_extents.y
    };
    let samples = |r: &OrientedRect2| {
        let (c, s) = (r.yaw.cos(), r.yaw.sin());
        let mut pts = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            for j in 0..=n {
                let lx = r.half_extents.x * (2.0 * i as f64 / n as f64 - 1.0);
                let ly = r.half_extents.y * (2.0 * j as f64 / n as f64 - 1.0);
                pts.push(r.center + Vector2::new(c * lx - s * ly, s * lx + c * ly));
            }
        }
        pts
    };
    samples(a).iter().any(|p| inside(b, p)) || samples(b).iter().any(|p| inside(a, p))
}

/// Penetration depth as the shortest separating translation over a fine
/// sweep of directions.
pub fn penetration_by_sweep(a: &OrientedRect2, b: &OrientedRect2, steps: usize) -> f64 {
    let corners = |r: &OrientedRect2| {
        let (c, s) = (r.yaw.cos(), r.yaw.sin());
        [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].map(|(sx, sy): (f64, f64)| {
            let lx = sx * r.half_extents.x;
            let ly = sy * r.half_extents.y;
            r.center + Vector2::new(c * lx - s * ly, s * lx + c * ly)
        })
    };
    let (ca, cb) = (corners(a), corners(b));
    (0..steps)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / steps as f64;
            let axis = Vector2::new(t.cos(), t.sin());
            let range = |cs: &[Vector2<f64>; 4]| {
                cs.iter()
                    .map(|p| p.dot(&axis))
                    .fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)))
            };
            let (alo, ahi) = range(&ca);
            let (blo, bhi) = range(&cb);
            // Translation along this axis that separates the two.
            (ahi - blo).min(bhi - alo)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(p: &Vector2<f64>, poly: &[Vector2<f64>]) -> i32 {
    let mut w = 0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Largest 4-connected component via union-find.
pub fn largest_component_union_find(bits: &[bool], width: usize) -> usize {
    let mut parent: Vec<usize> = (0..bits.len()).collect();
    for i in 0..bits.len() {
        if !bits[i] {
            continue;
        }
        let (x, y) = (i % width, i / width);
        for j in [(x > 0).then(|| i - 1), (y > 0).then(|| i - width)]
            .into_iter()
            .flatten()
        {
            if bits[j] {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut sizes = vec![0usize; bits.len()];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            let r = find(&mut parent, i);
            sizes[r] += 1;
        }
    }
    sizes.into_iter().max().unwrap_or(0)
}

/// Coverage metrics computed pixel by pixel with the winding-number rule
/// and union-find components: (coverage, exposed, largest missed patch).
pub fn coverage_by_oracle(
    poly: &[Vector2<f64>],
    adhesive: &[bool],
    width: usize,
    height: usize,
) -> (f64, f64, f64) {
    let region: Vec<bool> = (0..width * height)
        .map(|i| {
            let c = Vector2::new((i % width) as f64 + 0.5, (i / width) as f64 + 0.5);
            winding_number(&c, poly) != 0
        })
        .collect();
    let region_px = region.iter().filter(|b| **b).count();
    let adhesive_px = adhesive.iter().filter(|b| **b).count();
    let covered = region
        .iter()
        .zip(adhesive)
        .filter(|(r, a)| **r && **a)
        .count();
    let exposed = region
        .iter()
        .zip(adhesive)
        .filter(|(r, a)| !**r && **a)
        .count();
    let missed: Vec<bool> = region
        .iter()
        .zip(adhesive)
        .map(|(r, a)| *r && !*a)
        .collect();
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    (
        ratio(covered, region_px),
        ratio(exposed, adhesive_px),
        ratio(largest_component_union_find(&missed, width), region_px),
    )
}

/// Simple polygon from sorted random angles around a center (star-shaped,
/// possibly concave), with vertices off the pixel-center lattice.
pub fn random_star_polygon<R: Rng>(r: &mut R, width: usize, height: usize) -> Vec<Vector2<f64>> {
    let n = r.random_range(3..9);
    let mut angles: Vec<f64> = (0..n)
        .map(|_| r.random_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    let c = Vector2::new(width as f64 * 0.5, height as f64 * 0.5);
    let rmax = 0.5 * width.min(height) as f64;
    angles
        .into_iter()
        .map(|a| {
            let rad = r.random_range(0.3 * rmax..rmax) + 0.0137;
            c + Vector2::new(a.cos(), a.sin()) * rad
        })
        .collect()
}

/// Random blobs of adhesive.
pub fn random_blob_mask<R: Rng>(r: &mut R, width: usize, height: usize) -> Vec<bool> {
    let mut bits = vec![false; width * height];
    for _ in 0..r.random_range(0..6) {
        let cx = r.random_range(0.0..width as f64);
        let cy = r.random_range(0.0..height as f64);
        let rad = r.random_range(1.0..(width.min(height) as f64 * 0.4));
        for y in 0..height {
            for x in 0..width {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= rad * rad {
                    bits[y * width + x] = true;
                }
            }
        }
    }
    for b in bits.iter_mut() {
        if r.random::<f64>() < 0.05 {
            *b = !*b;
        }
    }
    bits
}
