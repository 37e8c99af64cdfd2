//! Penetration-based contact between superellipsoids and planes or other
//! superellipsoids, with a non-tensile normal force and regularized Coulomb
//! friction.
//!
//! Detection is single-point (deepest point per pair). Superellipsoid–
//! superellipsoid contact locates the equal-value point of the two
//! inside–outside functions along the center line (deterministic bisection)
//! and refines the normal from their gradients.

use crate::model::GeomShape;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("degenerate pose at contact query (non-finite values)")]
    DegeneratePose,
    #[error("unsupported geometry pairing: {0}")]
    Unsupported(&'static str),
}

/// World pose of a shape frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomPose {
    pub rot: Matrix3<f64>,
    pub pos: Vector3<f64>,
}

impl GeomPose {
    pub fn translation(pos: Vector3<f64>) -> Self {
        GeomPose {
            rot: Matrix3::identity(),
            pos,
        }
    }

    fn is_finite(&self) -> bool {
        self.rot.iter().chain(self.pos.iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    pub friction_mu: f64,
    /// Friction regularization velocity, m/s.
    pub v_reg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactResult {
    pub in_contact: bool,
    /// Penetration depth, m (≥ 0 when in contact).
    pub depth: f64,
    /// Deepest point, world coordinates.
    pub point: Vector3<f64>,
    /// Unit normal, from surface B into body A.
    pub normal: Vector3<f64>,
    /// Velocity of A relative to B at the contact point (world), filled in by
    /// the caller before force evaluation.
    pub relative_velocity: Vector3<f64>,
}

impl ContactResult {
    pub fn separated() -> Self {
        ContactResult {
            in_contact: false,
            depth: 0.0,
            point: Vector3::zeros(),
            normal: Vector3::z(),
            relative_velocity: Vector3::zeros(),
        }
    }

    pub fn with_velocity(mut self, v: Vector3<f64>) -> Self {
        self.relative_velocity = v;
        self
    }
}

/// Support point of a superellipsoid (local frame) in local direction `m`:
/// the Lagrange condition gives `x_i = sign(m_i)·a_i·|a_i m_i|^(1/(n−1)) / Z`
/// with `Z` normalizing onto the surface. Closed form for every even degree;
/// degree 2 reduces to `a_i² m_i / |a∘m|`.
pub fn superellipsoid_support(semi_axes: &Vector3<f64>, degree: u32, m: &Vector3<f64>) -> Vector3<f64> {
    let n = f64::from(degree);
    let p = 1.0 / (n - 1.0);
    let mut w = [0.0; 3];
    let mut x = Vector3::zeros();
    for i in 0..3 {
        w[i] = (semi_axes[i] * m[i]).abs();
    }
    let z: f64 = (w[0].powf(n * p) + w[1].powf(n * p) + w[2].powf(n * p)).powf(1.0 / n);
    if !(z.is_finite() && z > 0.0) {
        return Vector3::zeros();
    }
    for i in 0..3 {
        x[i] = m[i].signum() * semi_axes[i] * w[i].powf(p) / z;
    }
    x
}

/// Inside–outside value Σ|u_i/a_i|^n − 1 at world point `p`.
fn io_value(semi_axes: &Vector3<f64>, degree: u32, pose: &GeomPose, p: &Vector3<f64>) -> f64 {
    let u = pose.rot.transpose() * (p - pose.pos);
    let n = f64::from(degree);
    (u.x / semi_axes.x).abs().powf(n) + (u.y / semi_axes.y).abs().powf(n)
        + (u.z / semi_axes.z).abs().powf(n)
        - 1.0
}

/// World-frame gradient of the inside–outside function at `p`.
fn io_gradient(semi_axes: &Vector3<f64>, degree: u32, pose: &GeomPose, p: &Vector3<f64>) -> Vector3<f64> {
    let u = pose.rot.transpose() * (p - pose.pos);
    let n = f64::from(degree);
    let mut g = Vector3::zeros();
    for i in 0..3 {
        let r = u[i] / semi_axes[i];
        g[i] = n * r.abs().powf(n - 1.0) * r.signum() / semi_axes[i];
    }
    pose.rot * g
}

const CENTERLINE_TOL: f64 = 1e-10;
const CENTERLINE_MAX_ITER: usize = 100;
const NORMAL_REFINE_ITER: usize = 3;

/// Deepest-point penetration query. `geom_a` must be a superellipsoid (the
/// slave); `geom_b` a plane or superellipsoid (the master).
pub fn detect_penetration(
    geom_a: &GeomShape,
    pose_a: &GeomPose,
    geom_b: &GeomShape,
    pose_b: &GeomPose,
) -> Result<ContactResult, ContactError> {
    if !pose_a.is_finite() || !pose_b.is_finite() {
        return Err(ContactError::DegeneratePose);
    }
    let GeomShape::Superellipsoid {
        semi_axes: axes_a,
        degree: deg_a,
    } = geom_a
    else {
        return Err(ContactError::Unsupported("slave must be a superellipsoid"));
    };

    match geom_b {
        GeomShape::Plane { point, normal } => {
            let n_w = pose_b.rot * normal;
            let p0 = pose_b.pos + pose_b.rot * point;
            // Support of A in the −normal direction (deepest toward the plane).
            let m_local = pose_a.rot.transpose() * (-n_w);
            let s_local = superellipsoid_support(axes_a, *deg_a, &m_local);
            let s_world = pose_a.pos + pose_a.rot * s_local;
            let depth = n_w.dot(&(p0 - s_world));
            if depth <= 0.0 {
                return Ok(ContactResult::separated());
            }
            Ok(ContactResult {
                in_contact: true,
                depth,
                point: s_world,
                normal: n_w,
                relative_velocity: Vector3::zeros(),
            })
        }
        GeomShape::Superellipsoid {
            semi_axes: axes_b,
            degree: deg_b,
        } => {
            let ca = pose_a.pos;
            let cb = pose_b.pos;
            if (cb - ca).norm() < 1e-12 {
                return Err(ContactError::DegeneratePose);
            }
            let fa = |p: &Vector3<f64>| io_value(axes_a, *deg_a, pose_a, p);
            let fb = |p: &Vector3<f64>| io_value(axes_b, *deg_b, pose_b, p);
            // Bisection for F_A(p(t)) = F_B(p(t)) on the center line: F_A
            // grows with t, F_B falls, so the difference is monotone.
            let g = |t: f64| {
                let p = ca + (cb - ca) * t;
                fa(&p) - fb(&p)
            };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            if g(lo) > 0.0 || g(hi) < 0.0 {
                return Ok(ContactResult::separated());
            }
            let mut iter = 0;
            while hi - lo > CENTERLINE_TOL && iter < CENTERLINE_MAX_ITER {
                let mid = 0.5 * (lo + hi);
                if g(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                iter += 1;
            }
            let t = 0.5 * (lo + hi);
            let p_star = ca + (cb - ca) * t;
            if fa(&p_star).max(fb(&p_star)) > 0.0 {
                return Ok(ContactResult::separated());
            }

            // Normal from the gradients, refined against the support points.
            let mut normal = {
                let g = io_gradient(axes_b, *deg_b, pose_b, &p_star)
                    - io_gradient(axes_a, *deg_a, pose_a, &p_star);
                if g.norm() < 1e-12 {
                    ca - cb
                } else {
                    g
                }
            };
            normal.normalize_mut();
            let mut s_a = Vector3::zeros();
            let mut s_b = Vector3::zeros();
            for _ in 0..NORMAL_REFINE_ITER {
                let ma = pose_a.rot.transpose() * (-normal);
                s_a = pose_a.pos + pose_a.rot * superellipsoid_support(axes_a, *deg_a, &ma);
                let mb = pose_b.rot.transpose() * normal;
                s_b = pose_b.pos + pose_b.rot * superellipsoid_support(axes_b, *deg_b, &mb);
                let g = io_gradient(axes_b, *deg_b, pose_b, &(0.5 * (s_a + s_b)))
                    - io_gradient(axes_a, *deg_a, pose_a, &(0.5 * (s_a + s_b)));
                if g.norm() > 1e-12 {
                    normal = g.normalize();
                }
            }
            let depth = (s_b - s_a).dot(&normal);
            if depth <= 0.0 {
                return Ok(ContactResult::separated());
            }
            Ok(ContactResult {
                in_contact: true,
                depth,
                point: 0.5 * (s_a + s_b),
                normal,
                relative_velocity: Vector3::zeros(),
            })
        }
    }
}

/// Contact force on body A at the contact point (B takes the opposite).
/// Normal part: `max(0, k·depth − c·v_n)` along the normal (no tension);
/// tangential part: `−μ·Fn·tanh(|v_t|/v_reg)·v̂_t`.
pub fn contact_force(result: &ContactResult, params: &ContactParams) -> Vector3<f64> {
    if !result.in_contact {
        return Vector3::zeros();
    }
    let v_n = result.normal.dot(&result.relative_velocity);
    let fn_mag = (params.stiffness * result.depth - params.damping * v_n).max(0.0);
    let mut force = result.normal * fn_mag;
    let v_t = result.relative_velocity - result.normal * v_n;
    let speed_t = v_t.norm();
    if speed_t > 1e-12 && params.friction_mu > 0.0 {
        force -= v_t * (params.friction_mu * fn_mag * (speed_t / params.v_reg).tanh() / speed_t);
    }
    force
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sphere(r: f64) -> GeomShape {
        GeomShape::Superellipsoid {
            semi_axes: Vector3::new(r, r, r),
            degree: 2,
        }
    }

    fn floor() -> GeomShape {
        GeomShape::Plane {
            point: Vector3::zeros(),
            normal: Vector3::z(),
        }
    }

    #[test]
    fn sphere_plane_depth() {
        let res = detect_penetration(
            &sphere(0.1),
            &GeomPose::translation(Vector3::new(0.0, 0.0, 0.09)),
            &floor(),
            &GeomPose::translation(Vector3::zeros()),
        )
        .unwrap();
        assert!(res.in_contact);
        assert_relative_eq!(res.depth, 0.01, epsilon = 1e-12);
        assert_relative_eq!(res.normal, Vector3::z(), epsilon = 1e-12);
        assert_relative_eq!(res.point, Vector3::new(0.0, 0.0, -0.01), epsilon = 1e-12);
    }

    #[test]
    fn sphere_plane_separated() {
        let res = detect_penetration(
            &sphere(0.1),
            &GeomPose::translation(Vector3::new(0.0, 0.0, 0.2)),
            &floor(),
            &GeomPose::translation(Vector3::zeros()),
        )
        .unwrap();
        assert!(!res.in_contact);
    }

    #[test]
    fn sphere_sphere_depth() {
        let res = detect_penetration(
            &sphere(0.1),
            &GeomPose::translation(Vector3::zeros()),
            &sphere(0.1),
            &GeomPose::translation(Vector3::new(0.19, 0.0, 0.0)),
        )
        .unwrap();
        assert!(res.in_contact);
        assert_relative_eq!(res.depth, 0.01, epsilon = 1e-9);
        // Normal points from B into A, i.e. −x.
        assert_relative_eq!(res.normal, -Vector3::x(), epsilon = 1e-9);
        assert_relative_eq!(res.point, Vector3::new(0.095, 0.0, 0.0), epsilon = 1e-9);
    }

    #[test]
    fn degenerate_pose_is_an_error() {
        let bad = GeomPose::translation(Vector3::new(f64::NAN, 0.0, 0.0));
        let err = detect_penetration(
            &sphere(0.1),
            &bad,
            &floor(),
            &GeomPose::translation(Vector3::zeros()),
        );
        assert!(err.is_err());
    }

    #[test]
    fn support_point_maximizes_direction_for_degree_4() {
        let axes = Vector3::new(0.2, 0.1, 0.05);
        let degree = 4;
        let m = Vector3::new(0.3, -0.8, 0.52).normalize();
        let s = superellipsoid_support(&axes, degree, &m);
        // On the surface…
        let f = (s.x / axes.x).abs().powi(4) + (s.y / axes.y).abs().powi(4)
            + (s.z / axes.z).abs().powi(4);
        assert_relative_eq!(f, 1.0, epsilon = 1e-10);
        // …and no sampled surface point does better.
        let best = m.dot(&s);
        let mut worst_gap = f64::INFINITY;
        for i in 0..40 {
            for j in 0..40 {
                let theta = std::f64::consts::PI * (i as f64 + 0.5) / 40.0;
                let phi = 2.0 * std::f64::consts::PI * j as f64 / 40.0;
                let d = Vector3::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                );
                // Scale onto the surface along d.
                let rho = ((d.x / axes.x).abs().powi(4)
                    + (d.y / axes.y).abs().powi(4)
                    + (d.z / axes.z).abs().powi(4))
                .powf(0.25);
                let p = d / rho;
                worst_gap = worst_gap.min(best - m.dot(&p));
            }
        }
        assert!(worst_gap >= -1e-10, "support point not maximal: {worst_gap}");
    }

    #[test]
    fn ellipsoid_plane_with_rotation() {
        // Ellipsoid (a=0.2, b=c=0.1) rotated 90° about y: the long axis now
        // points along z, so it reaches ±0.2 vertically.
        let shape = GeomShape::Superellipsoid {
            semi_axes: Vector3::new(0.2, 0.1, 0.1),
            degree: 2,
        };
        let rot = nalgebra::Rotation3::from_axis_angle(
            &Vector3::y_axis(),
            std::f64::consts::FRAC_PI_2,
        )
        .into_inner();
        let pose = GeomPose {
            rot,
            pos: Vector3::new(0.0, 0.0, 0.19),
        };
        let res = detect_penetration(&shape, &pose, &floor(), &GeomPose::translation(Vector3::zeros()))
            .unwrap();
        assert!(res.in_contact);
        assert_relative_eq!(res.depth, 0.01, epsilon = 1e-9);
    }

    #[test]
    fn force_hand_values() {
        let params = ContactParams {
            stiffness: 10_000.0,
            damping: 0.0,
            friction_mu: 0.0,
            v_reg: 0.01,
        };
        let res = ContactResult {
            in_contact: true,
            depth: 0.01,
            point: Vector3::zeros(),
            normal: Vector3::z(),
            relative_velocity: Vector3::zeros(),
        };
        assert_relative_eq!(contact_force(&res, &params), Vector3::new(0.0, 0.0, 100.0));
    }

    #[test]
    fn separating_contact_clamps_to_zero() {
        let params = ContactParams {
            stiffness: 10_000.0,
            damping: 100.0,
            friction_mu: 0.5,
            v_reg: 0.01,
        };
        let res = ContactResult {
            in_contact: true,
            depth: 0.001,
            point: Vector3::zeros(),
            normal: Vector3::z(),
            relative_velocity: Vector3::new(0.0, 0.0, 5.0), // separating fast
        };
        assert_eq!(contact_force(&res, &params), Vector3::zeros());
    }

    #[test]
    fn friction_saturates_at_coulomb_limit() {
        let params = ContactParams {
            stiffness: 10_000.0,
            damping: 0.0,
            friction_mu: 0.5,
            v_reg: 0.01,
        };
        let res = ContactResult {
            in_contact: true,
            depth: 0.01, // Fn = 100 N
            point: Vector3::zeros(),
            normal: Vector3::z(),
            relative_velocity: Vector3::new(10.0, 0.0, 0.0),
        };
        let f = contact_force(&res, &params);
        let ft = Vector3::new(f.x, f.y, 0.0);
        assert_relative_eq!(ft.norm(), 50.0, epsilon = 1e-6);
        assert!(f.x < 0.0, "friction opposes sliding");
    }

    #[test]
    fn no_force_when_separated() {
        let params = ContactParams {
            stiffness: 10_000.0,
            damping: 100.0,
            friction_mu: 0.5,
            v_reg: 0.01,
        };
        assert_eq!(contact_force(&ContactResult::separated(), &params), Vector3::zeros());
    }

    proptest! {
        #[test]
        fn friction_never_exceeds_coulomb_cone(
            depth in 0.0f64..0.05,
            vx in -5.0f64..5.0,
            vy in -5.0f64..5.0,
            vz in -5.0f64..5.0,
            mu in 0.0f64..2.0,
        ) {
            let params = ContactParams {
                stiffness: 20_000.0,
                damping: 500.0,
                friction_mu: mu,
                v_reg: 0.01,
            };
            let res = ContactResult {
                in_contact: true,
                depth,
                point: Vector3::zeros(),
                normal: Vector3::z(),
                relative_velocity: Vector3::new(vx, vy, vz),
            };
            let f = contact_force(&res, &params);
            let f_n = f.z;
            let f_t = Vector3::new(f.x, f.y, 0.0).norm();
            prop_assert!(f_n >= 0.0);
            prop_assert!(f_t <= mu * f_n + 1e-9);
        }

        #[test]
        fn sphere_sphere_matches_analytic(gap in -0.05f64..0.05) {
            // Two spheres of radius 0.1 with center distance 0.2 + gap.
            let d = 0.2 + gap;
            let res = detect_penetration(
                &sphere(0.1),
                &GeomPose::translation(Vector3::zeros()),
                &sphere(0.1),
                &GeomPose::translation(Vector3::new(d, 0.0, 0.0)),
            ).unwrap();
            if gap < -1e-6 {
                prop_assert!(res.in_contact);
                prop_assert!((res.depth - (-gap)).abs() < 1e-8);
            } else {
                prop_assert!(!res.in_contact);
            }
        }
    }
}
