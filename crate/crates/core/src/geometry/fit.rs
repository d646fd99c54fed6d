use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Infinite line through `point` with unit `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line3 {
    pub point: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Line3 {
    /// Normalizes `direction`. Fails on a zero or non-finite direction.
    pub fn new(point: Vector3<f64>, direction: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = direction.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(GeometryError::DegenerateInput(
                "line direction has zero length",
            ));
        }
        Ok(Self {
            point,
            direction: direction / n,
        })
    }

    pub fn through(a: Vector3<f64>, b: Vector3<f64>) -> Result<Self, GeometryError> {
        Self::new(a, b - a)
    }

    /// Component of `p - point` orthogonal to the line.
    pub fn perpendicular(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let r = p - self.point;
        r - self.direction * self.direction.dot(&r)
    }

    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.perpendicular(p).norm()
    }

    /// Point on the line closest to `p`.
    pub fn foot(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.perpendicular(p)
    }

    pub fn flipped(&self) -> Self {
        Self {
            point: self.point,
            direction: -self.direction,
        }
    }
}

/// Result of [`fit_line_pca`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub line: Line3,
    /// Top two covariance eigenvalues agree within 1e-9 relative, so the
    /// direction is not well defined.
    pub ambiguous: bool,
    /// RMS perpendicular distance of the samples to the fitted line.
    pub rms_residual: f64,
}

/// Total least-squares line through a point set: passes through the centroid
/// along the principal eigenvector of the scatter matrix. Direction sign is
/// arbitrary.
pub fn fit_line_pca(points: &[Vector3<f64>]) -> Result<LineFit, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::DegenerateInput(
            "line fit needs at least two points",
        ));
    }
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(GeometryError::DegenerateInput("non-finite point"));
    }
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector3<f64>>() / n;
    let scatter = points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - centroid;
        acc + d * d.transpose()
    });
    let scale = points
        .iter()
        .map(|p| p.abs().max())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    if scatter.trace() <= (1e-12 * scale).powi(2) {
        return Err(GeometryError::DegenerateInput("all points coincide"));
    }

    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (l0, l1) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    let direction = eig.eigenvectors.column(order[0]).normalize();
    let ambiguous = (l0 - l1).abs() <= 1e-9 * l0.abs();

    let line = Line3 {
        point: centroid,
        direction,
    };
    let rms_residual = (points
        .iter()
        .map(|p| line.perpendicular(p).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LineFit {
        line,
        ambiguous,
        rms_residual,
    })
}

/// Normal equations of the least-squares "nearest point to a set of lines"
/// problem: `A = Σ (I − d dᵀ)`, `b = Σ (I − d dᵀ) x`.
pub fn line_normal_equations(lines: &[Line3]) -> (Matrix3<f64>, Vector3<f64>) {
    lines
        .iter()
        .fold((Matrix3::zeros(), Vector3::zeros()), |(a, b), l| {
            let proj = Matrix3::identity() - l.direction * l.direction.transpose();
            (a + proj, b + proj * l.point)
        })
}

/// Sum of squared perpendicular distances from `o` to every line.
pub fn sum_squared_line_distances(lines: &[Line3], o: &Vector3<f64>) -> f64 {
    lines
        .iter()
        .map(|l| l.perpendicular(o).norm_squared())
        .sum()
}

/// Ratio of smallest to largest singular value of the normal matrix; zero
/// when every line is parallel.
pub fn lines_conditioning(lines: &[Line3]) -> f64 {
    let (a, _) = line_normal_equations(lines);
    let sv = a.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

/// Point minimizing the summed squared distance to `lines`, solved in closed
/// form from the 3x3 normal equations.
pub fn closest_point_to_lines(lines: &[Line3]) -> Result<Vector3<f64>, GeometryError> {
    if lines.len() < 2 {
        return Err(GeometryError::DegenerateInput("need at least two lines"));
    }
    let (a, b) = line_normal_equations(lines);
    let svd = a.svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(max > 0.0) || min < 1e-9 * max {
        return Err(GeometryError::SingularConfiguration);
    }
    let mut o = svd
        .solve(&b, 0.0)
        .map_err(|_| GeometryError::SingularConfiguration)?;
    // One refinement step against the unfactored system keeps the optimality
    // residual at rounding level for lines far from the origin.
    let r = b - a * o;
    if let Ok(dx) = svd.solve(&r, 0.0) {
        o += dx;
    }
    Ok(o)
}

/// Right-handed frame whose Z column is `z_axis` (normalized, unchanged in
/// direction) and whose X column is `x_hint` with its Z component removed.
/// Y completes the frame as `z × x`.
pub fn orthonormalize_frame(
    z_axis: &Vector3<f64>,
    x_hint: &Vector3<f64>,
) -> Result<Matrix3<f64>, GeometryError> {
    let zn = z_axis.norm();
    if !zn.is_finite() || zn < 1e-300 {
        return Err(GeometryError::DegenerateInput("z axis has zero length"));
    }
    let z = z_axis / zn;
    let xh = x_hint.norm();
    if !xh.is_finite() || xh < 1e-300 {
        return Err(GeometryError::DegenerateInput("x hint has zero length"));
    }
    let x_raw = x_hint - z * z.dot(x_hint);
    if x_raw.norm() <= 1e-9 * xh {
        return Err(GeometryError::DegenerateInput(
            "x hint is parallel to z axis",
        ));
    }
    let x = x_raw.normalize();
    let y = z.cross(&x);
    Ok(Matrix3::from_columns(&[x, y, z]))
}
