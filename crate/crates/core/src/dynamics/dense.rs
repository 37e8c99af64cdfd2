//! Dense joint-space dynamics: composite-rigid-body mass matrix and recursive
//! Newton–Euler bias forces. This is the oracle route checked against the
//! articulated-body method.

use super::spatial::{inertia_mul, SpatialVec};
use super::tree::{Kinematics, Tree};
use super::DynamicsError;
use nalgebra::{DMatrix, DVector, Matrix6};

/// Joint-space inertia matrix over all velocity DoF (free base included),
/// symmetric positive definite away from singular configurations.
pub fn mass_matrix(tree: &Tree, kin: &Kinematics) -> DMatrix<f64> {
    let n = tree.bodies.len();
    let mut composite: Vec<Matrix6<f64>> = tree.bodies.iter().map(|b| b.inertia).collect();
    for i in (0..n).rev() {
        if let Some(p) = tree.joints[i].parent {
            let add = kin.rel[i].inertia_to_parent(&composite[i]);
            composite[p] += add;
        }
    }

    let mut m = DMatrix::zeros(tree.nv, tree.nv);
    for i in 0..n {
        let ji = &tree.joints[i];
        if ji.dof == 0 {
            continue;
        }
        let mi = &kin.motion[i];
        // F = I^c_i S_i, expressed in body-i coordinates, then climbed up.
        let mut f_cols: Vec<SpatialVec> = (0..ji.dof)
            .map(|k| SpatialVec::from_vector6(&(composite[i] * mi.cols[k].to_vector6())))
            .collect();
        for r in 0..ji.dof {
            for (c, fc) in f_cols.iter().enumerate() {
                m[(ji.v_off + r, ji.v_off + c)] = mi.cols[r].dot(fc);
            }
        }
        let mut body = i;
        while let Some(p) = tree.joints[body].parent {
            for col in f_cols.iter_mut() {
                *col = kin.rel[body].force_to_parent(col);
            }
            body = p;
            let jp = &tree.joints[body];
            if jp.dof == 0 {
                continue;
            }
            let mp = &kin.motion[body];
            for r in 0..jp.dof {
                for (c, fc) in f_cols.iter().enumerate() {
                    let value = mp.cols[r].dot(fc);
                    m[(jp.v_off + r, ji.v_off + c)] = value;
                    m[(ji.v_off + c, jp.v_off + r)] = value;
                }
            }
        }
    }
    m
}

/// Generalized bias forces: the `τ` required to produce zero acceleration,
/// i.e. `M q̈ = τ_applied − bias`. Includes velocity products, gravity (via
/// the base-acceleration trick in `base_acc`) and external forces.
pub fn bias_forces(
    tree: &Tree,
    kin: &Kinematics,
    f_ext: &[SpatialVec],
    base_acc: &SpatialVec,
) -> DVector<f64> {
    let n = tree.bodies.len();
    let mut accel: Vec<SpatialVec> = Vec::with_capacity(n);
    let mut force: Vec<SpatialVec> = Vec::with_capacity(n);
    for i in 0..n {
        let joint = &tree.joints[i];
        let a_parent = match joint.parent {
            Some(p) => accel[p],
            None => *base_acc,
        };
        let m = &kin.motion[i];
        let a = kin.rel[i].motion_to_child(&a_parent) + m.cj + kin.vel[i].cross_motion(&m.vj);
        accel.push(a);
        let v = kin.vel[i];
        force.push(
            inertia_mul(&tree.bodies[i].inertia, &a)
                + v.cross_force(&inertia_mul(&tree.bodies[i].inertia, &v))
                - f_ext[i],
        );
    }
    let mut bias = DVector::zeros(tree.nv);
    for i in (0..n).rev() {
        let joint = &tree.joints[i];
        let m = &kin.motion[i];
        for k in 0..joint.dof {
            bias[joint.v_off + k] = m.cols[k].dot(&force[i]);
        }
        if let Some(p) = joint.parent {
            let add = kin.rel[i].force_to_parent(&force[i]);
            force[p] += add;
        }
    }
    bias
}

/// Dense-route forward dynamics: `q̈ = M⁻¹ (τ − bias)` by Cholesky.
pub fn forward_dynamics_dense(
    tree: &Tree,
    kin: &Kinematics,
    tau: &DVector<f64>,
    f_ext: &[SpatialVec],
    base_acc: &SpatialVec,
) -> Result<DVector<f64>, DynamicsError> {
    let m = mass_matrix(tree, kin);
    let rhs = tau - bias_forces(tree, kin, f_ext, base_acc);
    m.cholesky()
        .map(|chol| chol.solve(&rhs))
        .ok_or(DynamicsError::SingularMassMatrix)
}
