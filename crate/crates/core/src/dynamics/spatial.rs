//! 6-D spatial vector algebra in body coordinates.
//!
//! Motion vectors are `[ω; v]` with `v` the velocity of the body-fixed point
//! at the frame origin; force vectors are `[n; f]` with the moment `n` taken
//! about the frame origin. All per-body quantities live in that body's frame.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpatialVec {
    pub ang: Vector3<f64>,
    pub lin: Vector3<f64>,
}

impl SpatialVec {
    pub const ZERO: SpatialVec = SpatialVec {
        ang: Vector3::new(0.0, 0.0, 0.0),
        lin: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn new(ang: Vector3<f64>, lin: Vector3<f64>) -> Self {
        Self { ang, lin }
    }

    pub fn dot(&self, other: &SpatialVec) -> f64 {
        self.ang.dot(&other.ang) + self.lin.dot(&other.lin)
    }

    /// Motion × motion (spatial cross product).
    pub fn cross_motion(&self, m: &SpatialVec) -> SpatialVec {
        SpatialVec {
            ang: self.ang.cross(&m.ang),
            lin: self.ang.cross(&m.lin) + self.lin.cross(&m.ang),
        }
    }

    /// Motion ×* force (dual cross product).
    pub fn cross_force(&self, f: &SpatialVec) -> SpatialVec {
        SpatialVec {
            ang: self.ang.cross(&f.ang) + self.lin.cross(&f.lin),
            lin: self.ang.cross(&f.lin),
        }
    }

    pub fn to_vector6(&self) -> Vector6<f64> {
        Vector6::new(
            self.ang.x, self.ang.y, self.ang.z, self.lin.x, self.lin.y, self.lin.z,
        )
    }

    pub fn from_vector6(v: &Vector6<f64>) -> Self {
        SpatialVec {
            ang: Vector3::new(v[0], v[1], v[2]),
            lin: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.ang.iter().chain(self.lin.iter()).all(|x| x.is_finite())
    }
}

impl Add for SpatialVec {
    type Output = SpatialVec;
    fn add(self, o: SpatialVec) -> SpatialVec {
        SpatialVec::new(self.ang + o.ang, self.lin + o.lin)
    }
}

impl AddAssign for SpatialVec {
    fn add_assign(&mut self, o: SpatialVec) {
        self.ang += o.ang;
        self.lin += o.lin;
    }
}

impl Sub for SpatialVec {
    type Output = SpatialVec;
    fn sub(self, o: SpatialVec) -> SpatialVec {
        SpatialVec::new(self.ang - o.ang, self.lin - o.lin)
    }
}

impl Mul<f64> for SpatialVec {
    type Output = SpatialVec;
    fn mul(self, s: f64) -> SpatialVec {
        SpatialVec::new(self.ang * s, self.lin * s)
    }
}

impl Neg for SpatialVec {
    type Output = SpatialVec;
    fn neg(self) -> SpatialVec {
        SpatialVec::new(-self.ang, -self.lin)
    }
}

/// Relative pose of a child frame in its parent frame: `x_p = rot·x_c + pos`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelPose {
    pub rot: Matrix3<f64>,
    pub pos: Vector3<f64>,
}

impl RelPose {
    pub fn identity() -> Self {
        RelPose {
            rot: Matrix3::identity(),
            pos: Vector3::zeros(),
        }
    }

    /// Express a motion vector given in parent coordinates in child coordinates.
    pub fn motion_to_child(&self, v: &SpatialVec) -> SpatialVec {
        let rt = self.rot.transpose();
        SpatialVec {
            ang: rt * v.ang,
            lin: rt * (v.lin + v.ang.cross(&self.pos)),
        }
    }

    /// Express a motion vector given in child coordinates in parent coordinates.
    pub fn motion_to_parent(&self, v: &SpatialVec) -> SpatialVec {
        let ang = self.rot * v.ang;
        SpatialVec {
            ang,
            lin: self.rot * v.lin - ang.cross(&self.pos),
        }
    }

    /// Express a force vector given in child coordinates in parent coordinates.
    pub fn force_to_parent(&self, f: &SpatialVec) -> SpatialVec {
        let lin = self.rot * f.lin;
        SpatialVec {
            ang: self.rot * f.ang + self.pos.cross(&lin),
            lin,
        }
    }

    /// 6×6 motion transform taking parent-coordinate vectors to child coordinates.
    pub fn motion_matrix_to_child(&self) -> Matrix6<f64> {
        let rt = self.rot.transpose();
        let px = skew(&self.pos);
        let mut x = Matrix6::zeros();
        x.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        x.fixed_view_mut::<3, 3>(3, 3).copy_from(&rt);
        x.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-rt * px));
        x
    }

    /// Transform a 6×6 spatial inertia expressed in child coordinates into
    /// parent coordinates: `X*_{p←c} · I · X_{c←p}`.
    pub fn inertia_to_parent(&self, inertia: &Matrix6<f64>) -> Matrix6<f64> {
        let xc = self.motion_matrix_to_child();
        // X*_{p←c} = X_{c←p}ᵀ
        xc.transpose() * inertia * xc
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rigid-body spatial inertia for a body frame at the CoG with diagonal
/// principal inertia.
pub fn body_inertia(mass: f64, inertia_diag: &Vector3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m[(0, 0)] = inertia_diag.x;
    m[(1, 1)] = inertia_diag.y;
    m[(2, 2)] = inertia_diag.z;
    m[(3, 3)] = mass;
    m[(4, 4)] = mass;
    m[(5, 5)] = mass;
    m
}

pub fn inertia_mul(inertia: &Matrix6<f64>, v: &SpatialVec) -> SpatialVec {
    SpatialVec::from_vector6(&(inertia * v.to_vector6()))
}

/// In-place Cholesky factorization of a small SPD matrix (n ≤ 6): the lower
/// triangle of `a` becomes L. Used for the per-joint `D` matrices of the
/// articulated-body pass.
pub fn spd_factor(a: &mut [[f64; 6]; 6], n: usize) -> bool {
    for k in 0..n {
        let mut d = a[k][k];
        for j in 0..k {
            d -= a[k][j] * a[k][j];
        }
        if !(d.is_finite() && d > 0.0) {
            return false;
        }
        let lkk = d.sqrt();
        a[k][k] = lkk;
        for i in (k + 1)..n {
            let mut s = a[i][k];
            for j in 0..k {
                s -= a[i][j] * a[k][j];
            }
            a[i][k] = s / lkk;
        }
    }
    true
}

/// Solve `A x = b` in place given the factorization from [`spd_factor`].
pub fn spd_solve(a: &[[f64; 6]; 6], n: usize, b: &mut [f64; 6]) {
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= a[i][j] * b[j];
        }
        b[i] = s / a[i][i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[j][i] * b[j];
        }
        b[i] = s / a[i][i];
    }
}

/// One-shot factor + solve of a small SPD system.
pub fn solve_spd_small(a: &mut [[f64; 6]; 6], n: usize, b: &mut [f64; 6]) -> bool {
    if !spd_factor(a, n) {
        return false;
    }
    spd_solve(a, n, b);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn motion_round_trip() {
        let pose = RelPose {
            rot: nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 0.9).into_inner(),
            pos: Vector3::new(0.1, -0.4, 0.25),
        };
        let v = SpatialVec::new(Vector3::new(1.0, -2.0, 0.5), Vector3::new(0.3, 0.7, -1.1));
        let back = pose.motion_to_parent(&pose.motion_to_child(&v));
        assert_relative_eq!(back.ang, v.ang, epsilon = 1e-12);
        assert_relative_eq!(back.lin, v.lin, epsilon = 1e-12);
    }

    #[test]
    fn force_motion_duality() {
        // Power f·v is frame invariant.
        let pose = RelPose {
            rot: nalgebra::Rotation3::from_euler_angles(-0.5, 0.1, 0.4).into_inner(),
            pos: Vector3::new(-0.2, 0.05, 0.3),
        };
        let v_c = SpatialVec::new(Vector3::new(0.2, 0.5, -0.1), Vector3::new(1.0, 0.0, 2.0));
        let f_c = SpatialVec::new(Vector3::new(-1.0, 0.3, 0.8), Vector3::new(0.4, -0.6, 1.5));
        let power_child = f_c.dot(&v_c);
        let power_parent = pose.force_to_parent(&f_c).dot(&pose.motion_to_parent(&v_c));
        assert_relative_eq!(power_child, power_parent, epsilon = 1e-12);
    }

    #[test]
    fn inertia_transform_preserves_kinetic_energy() {
        let pose = RelPose {
            rot: nalgebra::Rotation3::from_euler_angles(0.7, 0.2, -0.3).into_inner(),
            pos: Vector3::new(0.15, -0.08, 0.4),
        };
        let inertia = body_inertia(3.2, &Vector3::new(0.02, 0.05, 0.04));
        let v_c = SpatialVec::new(Vector3::new(0.4, -0.2, 1.0), Vector3::new(0.1, 0.9, -0.5));
        let ke_child = v_c.dot(&inertia_mul(&inertia, &v_c));
        let i_p = pose.inertia_to_parent(&inertia);
        let v_p = pose.motion_to_parent(&v_c);
        let ke_parent = v_p.dot(&SpatialVec::from_vector6(&(i_p * v_p.to_vector6())));
        assert_relative_eq!(ke_child, ke_parent, epsilon = 1e-10);
    }

    #[test]
    fn spd_solve_matches_nalgebra() {
        let mut a = [[0.0; 6]; 6];
        let src = nalgebra::Matrix4::new(
            4.0, 1.0, 0.2, 0.0, 1.0, 3.0, 0.5, 0.1, 0.2, 0.5, 2.0, 0.3, 0.0, 0.1, 0.3, 1.5,
        );
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = src[(i, j)];
            }
        }
        let mut b = [1.0, -2.0, 0.5, 3.0, 0.0, 0.0];
        assert!(solve_spd_small(&mut a, 4, &mut b));
        let rhs = nalgebra::Vector4::new(1.0, -2.0, 0.5, 3.0);
        let x = src.cholesky().unwrap().solve(&rhs);
        for i in 0..4 {
            assert_relative_eq!(b[i], x[i], epsilon = 1e-12);
        }
    }
}
