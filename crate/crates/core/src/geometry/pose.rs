use nalgebra::{Matrix3, Matrix4, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::Mul;

/// Rigid transform in SE(3).
///
/// `rotation` is kept as a 3x3 matrix; quaternions only appear at the
/// serialization boundary (`[w, x, y, z]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), t)
    }

    pub fn from_rotation(r: Matrix3<f64>) -> Self {
        Self::new(r, Vector3::zeros())
    }

    /// Rotation of `angle` radians about world +Z, followed by translation `t`.
    pub fn from_yaw(angle: f64, t: Vector3<f64>) -> Self {
        Self::new(rot_z(angle), t)
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, t: Vector3<f64>) -> Self {
        let r = Rotation3::from_scaled_axis(axis.normalize() * angle);
        Self::new(*r.matrix(), t)
    }

    /// Builds a pose from a `[w, x, y, z]` quaternion. The quaternion is
    /// normalized; returns `None` if it has (near) zero norm or is not finite.
    pub fn from_quaternion_wxyz(q: [f64; 4], t: Vector3<f64>) -> Option<Self> {
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        let n = quat.norm();
        if !n.is_finite() || n < 1e-12 {
            return None;
        }
        let uq = UnitQuaternion::from_quaternion(quat);
        Some(Self::new(*uq.to_rotation_matrix().matrix(), t))
    }

    /// `[w, x, y, z]` with `w >= 0`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let r = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&r);
        let mut out = [q.w, q.i, q.j, q.k];
        if out[0] < 0.0 {
            out.iter_mut().for_each(|c| *c = -*c);
        }
        out
    }

    /// `self · other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn x_axis(&self) -> Vector3<f64> {
        self.rotation.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.rotation.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    /// Heading of the local X axis projected on the world XY plane.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    /// Angle of the relative rotation `selfᵀ · other`, in radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }

    pub fn translation_distance_to(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Max of translation distance and rotation angle; a loose "are these the
    /// same pose" measure for tests and diagnostics.
    pub fn max_deviation(&self, other: &Pose) -> f64 {
        self.translation_distance_to(other)
            .max(self.rotation_angle_to(other))
    }

    /// Orthonormality and determinant error of the rotation block.
    pub fn rotation_defect(&self) -> f64 {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        ortho.max((r.determinant() - 1.0).abs())
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// Rotation angle in `[0, π]` of a rotation matrix.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    // acos loses precision near 0, so use atan2 of the skew part against the trace.
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let s = 0.5 * skew.norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Wraps an angle into `[-π/2, π/2)`, treating `θ` and `θ + π` as the same
/// undirected axis.
pub fn wrap_half_turn(angle: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut a = (angle + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if a >= FRAC_PI_2 {
        a -= PI;
    }
    a
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            rotation: self.quaternion_wxyz(),
            translation: self.translation.into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        if repr.translation.iter().any(|c| !c.is_finite()) {
            return Err(serde::de::Error::custom("pose translation is not finite"));
        }
        Pose::from_quaternion_wxyz(repr.rotation, Vector3::from(repr.translation))
            .ok_or_else(|| serde::de::Error::custom("rotation quaternion has zero norm"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Pose, b: &Pose, tol: f64) -> bool {
        (a.rotation - b.rotation).abs().max() < tol && (a.translation - b.translation).norm() < tol
    }

    #[test]
    fn identity_is_neutral() {
        let p = Pose::from_axis_angle(
            &Vector3::new(1.0, 2.0, 0.5),
            0.7,
            Vector3::new(0.3, -1.0, 2.0),
        );
        assert!(close(&Pose::identity().compose(&p), &p, 1e-15));
        assert!(close(&p.compose(&p.inverse()), &Pose::identity(), 1e-12));
    }

    #[test]
    fn translations_commute() {
        let a = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let b = Pose::from_translation(Vector3::new(0.0, 2.0, 0.0));
        assert_eq!(a.compose(&b).translation, Vector3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn inverse_of_translation() {
        let p = Pose::from_translation(Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(p.inverse().translation, Vector3::new(-1.0, -2.0, -3.0));
        assert_eq!(Pose::identity().inverse(), Pose::identity());
    }

    #[test]
    fn inverse_of_yawed_pose() {
        let p = Pose::from_yaw(FRAC_PI_2, Vector3::new(1.0, 0.0, 0.0));
        let inv = p.inverse();
        assert!(close(
            &inv,
            &Pose::from_yaw(-FRAC_PI_2, Vector3::new(0.0, 1.0, 0.0)),
            1e-15
        ));
        assert!(close(&p.compose(&inv), &Pose::identity(), 1e-9));
    }

    #[test]
    fn quaternion_round_trip() {
        let p = Pose::from_axis_angle(
            &Vector3::new(0.2, -1.0, 0.4),
            2.9,
            Vector3::new(0.1, 0.2, 0.3),
        );
        let q = p.quaternion_wxyz();
        let back = Pose::from_quaternion_wxyz(q, p.translation).unwrap();
        assert!(close(&p, &back, 1e-12));
        assert!(Pose::from_quaternion_wxyz([0.0; 4], Vector3::zeros()).is_none());
    }

    #[test]
    fn json_encoding_uses_wxyz() {
        let p = Pose::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"rotation":[1.0,0.0,0.0,0.0],"translation":[1.0,2.0,3.0]}"#
        );
        let back: Pose = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn wrap_half_turn_range() {
        for k in -20..20 {
            let a = wrap_half_turn(k as f64 * 0.37);
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&a));
        }
        assert_eq!(wrap_half_turn(FRAC_PI_2), -FRAC_PI_2);
    }

    #[test]
    fn rotation_angle_small_values() {
        let r = rot_z(1e-9);
        assert!((rotation_angle(&r) - 1e-9).abs() < 1e-15);
    }
}
