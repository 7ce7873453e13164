use nalgebra::{Matrix3, Rotation3, Vector3};

/// Rigid homogeneous transform (rotation + translation in meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Products after which [`compose_chain`] re-orthonormalizes.
const RENORM_INTERVAL: usize = 100;

impl Default for Transform {
    fn default() -> Self {
        Transform::identity()
    }
}

impl Transform {
    pub fn identity() -> Transform {
        Transform { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Transform {
        Transform { rotation: Matrix3::identity(), translation: Vector3::new(x, y, z) }
    }

    /// `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Transform {
        Transform {
            rotation: *Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]).matrix(),
            translation: Vector3::new(xyz[0], xyz[1], xyz[2]),
        }
    }

    /// `[x, y, z, roll, pitch, yaw]`.
    pub fn from_vec6(v: &[f64; 6]) -> Transform {
        Transform::from_xyz_rpy([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }

    pub fn rpy(&self) -> [f64; 3] {
        let (r, p, y) = Rotation3::from_matrix_unchecked(self.rotation).euler_angles();
        [r, p, y]
    }

    pub fn to_vec6(&self) -> [f64; 6] {
        let [r, p, y] = self.rpy();
        [self.translation.x, self.translation.y, self.translation.z, r, p, y]
    }

    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform { rotation: rt, translation: -(rt * self.translation) }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Row-major 4x4 matrix.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix(m: &[[f64; 4]; 4]) -> Transform {
        let mut t = Transform {
            rotation: Matrix3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ),
            translation: Vector3::new(m[0][3], m[1][3], m[2][3]),
        };
        t.orthonormalize();
        t
    }

    /// Projects the rotation block back onto SO(3).
    pub fn orthonormalize(&mut self) {
        let r = Rotation3::from_matrix_eps(&self.rotation, 1e-15, 100, Rotation3::identity());
        self.rotation = *r.matrix();
    }

    pub fn det_error(&self) -> f64 {
        (self.rotation.determinant() - 1.0).abs()
    }

    /// Rotation angle of this transform, in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        Rotation3::from_matrix_unchecked(self.rotation).angle()
    }

    /// Axis-angle vector of the rotation block.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        Rotation3::from_matrix_unchecked(self.rotation).scaled_axis()
    }

    pub fn max_abs_diff(&self, other: &Transform) -> f64 {
        let a = self.to_matrix();
        let b = other.to_matrix();
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((a[i][j] - b[i][j]).abs());
            }
        }
        m
    }
}

/// Composes transforms left to right, re-orthonormalizing every 100
/// products so long chains keep `|det(R) - 1|` small.
pub fn compose_chain<'a>(items: impl IntoIterator<Item = &'a Transform>) -> Transform {
    let mut acc = Transform::identity();
    for (i, t) in items.into_iter().enumerate() {
        acc = acc.compose(t);
        if (i + 1) % RENORM_INTERVAL == 0 {
            acc.orthonormalize();
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rpy_round_trip() {
        let t = Transform::from_xyz_rpy([1.0, 2.0, 3.0], [0.1, -0.2, 0.3]);
        let v = t.to_vec6();
        let back = Transform::from_vec6(&v);
        assert!(t.max_abs_diff(&back) < 1e-12);
        assert!((v[3] - 0.1).abs() < 1e-12 && (v[4] + 0.2).abs() < 1e-12 && (v[5] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn yaw_is_rotation_about_z() {
        let t = Transform::from_xyz_rpy([0.0; 3], [0.0, 0.0, std::f64::consts::FRAC_PI_2]);
        let p = t.apply(&Vector3::new(1.0, 0.0, 0.0));
        assert!((p - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = Transform::from_xyz_rpy([0.3, -1.0, 2.0], [0.4, 0.5, -0.6]);
        assert!(t.compose(&t.inverse()).max_abs_diff(&Transform::identity()) < 1e-12);
    }

    #[test]
    fn long_chain_stays_orthonormal() {
        let step = Transform::from_xyz_rpy([0.01, 0.0, 0.0], [0.013, 0.007, 0.011]);
        let chain = vec![step; 1000];
        let t = compose_chain(chain.iter());
        assert!(t.det_error() <= 1e-9);
    }

    #[test]
    fn matrix_is_row_major() {
        let t = Transform::from_translation(1.0, 2.0, 3.0);
        let m = t.to_matrix();
        assert_eq!(m[0][3], 1.0);
        assert_eq!(m[2][3], 3.0);
        assert_eq!(m[3], [0.0, 0.0, 0.0, 1.0]);
    }
}
