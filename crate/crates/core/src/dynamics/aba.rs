//! Articulated-body forward dynamics (O(n) recursive method).

use super::spatial::{inertia_mul, spd_factor, spd_solve, SpatialVec};
use super::tree::{Kinematics, Tree};
use super::DynamicsError;
use nalgebra::{DVector, Matrix6, Vector3};

/// Recursive forward dynamics: generalized accelerations from applied
/// generalized forces `tau` and per-body external spatial forces `f_ext`
/// (body coordinates, about the body origin).
///
/// `base_acc` is the prescribed spatial acceleration of the base frame with
/// the gravity trick already applied: `[0; s̈ − g]`.
pub fn articulated_body_accel(
    tree: &Tree,
    kin: &Kinematics,
    tau: &DVector<f64>,
    f_ext: &[SpatialVec],
    base_acc: &SpatialVec,
) -> Result<DVector<f64>, DynamicsError> {
    let n = tree.bodies.len();
    let mut inertia_a: Vec<Matrix6<f64>> = Vec::with_capacity(n);
    let mut bias: Vec<SpatialVec> = Vec::with_capacity(n);
    let mut c: Vec<SpatialVec> = Vec::with_capacity(n);

    for i in 0..n {
        let m = &kin.motion[i];
        let v = kin.vel[i];
        c.push(m.cj + v.cross_motion(&m.vj));
        inertia_a.push(tree.bodies[i].inertia);
        bias.push(v.cross_force(&inertia_mul(&tree.bodies[i].inertia, &v)) - f_ext[i]);
    }

    let mut u_cols: Vec<[SpatialVec; 6]> = vec![[SpatialVec::ZERO; 6]; n];
    let mut d_fact: Vec<[[f64; 6]; 6]> = vec![[[0.0; 6]; 6]; n];
    let mut u_rhs: Vec<[f64; 6]> = vec![[0.0; 6]; n];

    for i in (0..n).rev() {
        let joint = &tree.joints[i];
        let dof = joint.dof;
        let (inertia_articulated, p_articulated) = if dof > 0 {
            let m = &kin.motion[i];
            let ia = inertia_a[i];
            let mut u = [SpatialVec::ZERO; 6];
            let mut d = [[0.0; 6]; 6];
            for k in 0..dof {
                u[k] = SpatialVec::from_vector6(&(ia * m.cols[k].to_vector6()));
            }
            for r in 0..dof {
                for col in 0..dof {
                    d[r][col] = m.cols[r].dot(&u[col]);
                }
            }
            let mut uu = [0.0; 6];
            for k in 0..dof {
                uu[k] = tau[joint.v_off + k] - m.cols[k].dot(&bias[i]);
            }
            if !spd_factor(&mut d, dof) {
                return Err(DynamicsError::Singular {
                    joint: joint.name.clone(),
                });
            }
            // Ia = IA − U D⁻¹ Uᵀ
            let mut dinv_ut = [[0.0; 6]; 6]; // rows: dof, cols: 6
            for col in 0..6 {
                let mut rhs = [0.0; 6];
                for k in 0..dof {
                    rhs[k] = u[k].to_vector6()[col];
                }
                spd_solve(&d, dof, &mut rhs);
                for k in 0..dof {
                    dinv_ut[k][col] = rhs[k];
                }
            }
            let mut ia_proj = ia;
            for r in 0..6 {
                for col in 0..6 {
                    let mut s = 0.0;
                    for k in 0..dof {
                        s += u[k].to_vector6()[r] * dinv_ut[k][col];
                    }
                    ia_proj[(r, col)] -= s;
                }
            }
            // pa = p + Ia c + U D⁻¹ u
            let mut du = uu;
            spd_solve(&d, dof, &mut du);
            let mut pa = bias[i]
                + SpatialVec::from_vector6(&(ia_proj * c[i].to_vector6()));
            for k in 0..dof {
                pa += u[k] * du[k];
            }
            u_cols[i] = u;
            d_fact[i] = d;
            u_rhs[i] = uu;
            (ia_proj, pa)
        } else {
            let pa = bias[i] + SpatialVec::from_vector6(&(inertia_a[i] * c[i].to_vector6()));
            (inertia_a[i], pa)
        };

        if let Some(p) = joint.parent {
            let rel = &kin.rel[i];
            inertia_a[p] += rel.inertia_to_parent(&inertia_articulated);
            bias[p] += rel.force_to_parent(&p_articulated);
        }
    }

    let mut qdd = DVector::zeros(tree.nv);
    let mut accel: Vec<SpatialVec> = vec![SpatialVec::ZERO; n];
    for i in 0..n {
        let joint = &tree.joints[i];
        let a_parent = match joint.parent {
            Some(p) => accel[p],
            None => *base_acc,
        };
        let mut a = kin.rel[i].motion_to_child(&a_parent) + c[i];
        let dof = joint.dof;
        if dof > 0 {
            let m = &kin.motion[i];
            let mut rhs = [0.0; 6];
            for k in 0..dof {
                rhs[k] = u_rhs[i][k] - u_cols[i][k].dot(&a);
            }
            spd_solve(&d_fact[i], dof, &mut rhs);
            for k in 0..dof {
                qdd[joint.v_off + k] = rhs[k];
                a += m.cols[k] * rhs[k];
            }
        }
        accel[i] = a;
    }
    Ok(qdd)
}

/// Propagate body spatial accelerations for a known `qdd` (true accelerations
/// when `base_acc` carries the real base acceleration, no gravity trick).
pub fn body_accelerations(
    tree: &Tree,
    kin: &Kinematics,
    qdd: &DVector<f64>,
    base_acc: &SpatialVec,
) -> Vec<SpatialVec> {
    let n = tree.bodies.len();
    let mut accel: Vec<SpatialVec> = Vec::with_capacity(n);
    for i in 0..n {
        let joint = &tree.joints[i];
        let a_parent = match joint.parent {
            Some(p) => accel[p],
            None => *base_acc,
        };
        let m = &kin.motion[i];
        let mut a = kin.rel[i].motion_to_child(&a_parent) + m.cj + kin.vel[i].cross_motion(&m.vj);
        for k in 0..joint.dof {
            a += m.cols[k] * qdd[joint.v_off + k];
        }
        accel.push(a);
    }
    accel
}

/// Spatial acceleration of the base frame including the gravity offset.
pub fn base_acceleration(gravity: &Vector3<f64>, prescribed_acc: &Vector3<f64>) -> SpatialVec {
    SpatialVec::new(Vector3::zeros(), prescribed_acc - gravity)
}
