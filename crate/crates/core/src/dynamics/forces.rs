//! Assembly of restraint, contact and point-restraint forces at one instant.

use super::spatial::SpatialVec;
use super::state::State;
use super::tree::{Anchor, GeomOwner, Kinematics, Tree};
use crate::contact::{contact_force, detect_penetration, ContactParams, GeomPose};
use crate::model::{JointKind, RestraintMode};
use crate::restraints::{
    cardan_angles, cardan_rates, cardan_torque_to_vector, CardanAngles,
};
use nalgebra::{DVector, Matrix3, Vector3};

/// Everything the solver needs for one dynamics evaluation.
pub struct ForceAssembly {
    /// Generalized forces (restraints plus any externally applied τ).
    pub tau: DVector<f64>,
    /// Per-body spatial forces, body coordinates about the body origin.
    pub f_ext: Vec<SpatialVec>,
    /// Total contact force from environment geoms on the body, world frame.
    pub env_contact_force: Vector3<f64>,
}

/// Instantaneous seat-frame motion used during assembly.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeatSample {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub acc: Vector3<f64>,
}

fn apply_world_force(
    f_ext: &mut [SpatialVec],
    kin: &Kinematics,
    body: usize,
    force: &Vector3<f64>,
    point: &Vector3<f64>,
) {
    let moment = (point - kin.pos[body]).cross(force);
    let rt = kin.rot[body].transpose();
    f_ext[body] += SpatialVec::new(rt * moment, rt * force);
}

/// World velocity of a body-fixed point.
fn point_velocity(kin: &Kinematics, body: usize, world_point: &Vector3<f64>) -> Vector3<f64> {
    let r_local = kin.rot[body].transpose() * (world_point - kin.pos[body]);
    let v = kin.vel[body];
    kin.rot[body] * (v.lin + v.ang.cross(&r_local))
}

fn geom_pose(tree: &Tree, kin: &Kinematics, geom: usize, seat: &SeatSample) -> GeomPose {
    match &tree.geoms[geom].owner {
        GeomOwner::Body(b, offset) => GeomPose {
            rot: kin.rot[*b],
            pos: kin.pos[*b] + kin.rot[*b] * offset,
        },
        GeomOwner::Seat(center) => GeomPose {
            rot: Matrix3::identity(),
            pos: center + seat.pos,
        },
    }
}

fn geom_point_velocity(
    tree: &Tree,
    kin: &Kinematics,
    geom: usize,
    seat: &SeatSample,
    world_point: &Vector3<f64>,
) -> Vector3<f64> {
    match &tree.geoms[geom].owner {
        GeomOwner::Body(b, _) => point_velocity(kin, *b, world_point),
        GeomOwner::Seat(_) => seat.vel,
    }
}

/// Per-DoF restraint errors `setpoint − coordinate`, in `pid_integrals`
/// layout. Spherical blocks use Cardan angles of the joint rotation.
pub fn restraint_errors(tree: &Tree, state: &State) -> Vec<f64> {
    let mut errors = vec![0.0; tree.ni];
    for r in &tree.restraints {
        let joint = &tree.joints[r.joint];
        let q = &state.q.as_slice()[joint.q_off..joint.q_off + joint.q_len];
        let e = &mut errors[r.int_off..r.int_off + joint.dof];
        match &joint.kind {
            JointKind::Spherical | JointKind::SphericalTranslation { .. } => {
                let rel = super::tree::joint_pose(joint, q);
                let (angles, _) = cardan_angles(&rel.rot);
                let phi = angles.as_vector();
                for k in 0..3 {
                    e[k] = r.spec.setpoint[k] - phi[k];
                }
                if joint.dof == 4 {
                    e[3] = r.spec.setpoint[3] - q[4];
                }
            }
            _ => {
                for k in 0..joint.dof {
                    e[k] = r.spec.setpoint[k] - q[k];
                }
            }
        }
    }
    errors
}

/// Evaluate all forces at the given state. PID integral terms use the frozen
/// `integrals` buffer (advanced once per step, outside the stage loop).
pub fn assemble_forces(
    tree: &Tree,
    state: &State,
    kin: &Kinematics,
    seat: &SeatSample,
    integrals: &[f64],
    extra_tau: Option<&DVector<f64>>,
) -> ForceAssembly {
    let n = tree.bodies.len();
    let mut tau = match extra_tau {
        Some(t) => t.clone(),
        None => DVector::zeros(tree.nv),
    };
    let mut f_ext = vec![SpatialVec::ZERO; n];
    let mut env_contact_force = Vector3::zeros();

    // Joint restraints → generalized forces on their own joint slots.
    for r in &tree.restraints {
        let joint = &tree.joints[r.joint];
        let q = &state.q.as_slice()[joint.q_off..joint.q_off + joint.q_len];
        let qd = &state.qd.as_slice()[joint.v_off..joint.v_off + joint.dof];
        let ints = &integrals[r.int_off..r.int_off + joint.dof];
        let spec = &r.spec;

        let scalar_force = |k: usize, coord: f64, rate: f64| -> f64 {
            let e = spec.setpoint[k] - coord;
            match spec.mode {
                RestraintMode::Cardan => spec.stiffness[k] * e - spec.damping[k] * rate,
                RestraintMode::Pid => {
                    spec.stiffness[k] * e + spec.integral_gain[k] * ints[k]
                        - spec.damping[k] * rate
                }
            }
        };

        match &joint.kind {
            JointKind::Spherical | JointKind::SphericalTranslation { .. } => {
                let rel = &kin.rel[r.joint];
                let (angles, _) = cardan_angles(&rel.rot);
                let omega_child = Vector3::new(qd[0], qd[1], qd[2]);
                let omega_parent = rel.rot * omega_child;
                let rates = cardan_rates(&angles, &omega_parent);
                let phi = angles.as_vector();
                let mut q_gen = Vector3::zeros();
                for k in 0..3 {
                    q_gen[k] = scalar_force(k, phi[k], rates[k]);
                }
                let tau_parent = cardan_torque_to_vector(&angles, &q_gen);
                let tau_child = rel.rot.transpose() * tau_parent;
                for k in 0..3 {
                    tau[joint.v_off + k] += tau_child[k];
                }
                if joint.dof == 4 {
                    tau[joint.v_off + 3] += scalar_force(3, q[4], qd[3]);
                }
            }
            _ => {
                for k in 0..joint.dof {
                    tau[joint.v_off + k] += scalar_force(k, q[k], qd[k]);
                }
            }
        }
    }

    // Point restraints.
    for p in &tree.point_restraints {
        let attach = kin.pos[p.body] + kin.rot[p.body] * p.offset;
        let v_attach = point_velocity(kin, p.body, &attach);
        let (anchor_pt, v_anchor, anchor_body) = match &p.anchor {
            Anchor::World(a) => (*a, Vector3::zeros(), None),
            Anchor::Seat(a) => (a + seat.pos, seat.vel, None),
            Anchor::Body(b, off) => {
                let pt = kin.pos[*b] + kin.rot[*b] * off;
                (pt, point_velocity(kin, *b, &pt), Some(*b))
            }
        };
        let force = crate::restraints::point_restraint_force(
            &(attach - anchor_pt),
            &(v_attach - v_anchor),
            p.stiffness,
            p.damping,
        );
        apply_world_force(&mut f_ext, kin, p.body, &force, &attach);
        if let Some(b) = anchor_body {
            apply_world_force(&mut f_ext, kin, b, &(-force), &anchor_pt);
        }
    }

    // Penetration contacts.
    for c in &tree.contacts {
        let pose_a = geom_pose(tree, kin, c.slave, seat);
        let pose_b = geom_pose(tree, kin, c.master, seat);
        let Ok(mut result) = detect_penetration(
            &tree.geoms[c.slave].shape,
            &pose_a,
            &tree.geoms[c.master].shape,
            &pose_b,
        ) else {
            continue;
        };
        if !result.in_contact {
            continue;
        }
        let v_a = geom_point_velocity(tree, kin, c.slave, seat, &result.point);
        let v_b = geom_point_velocity(tree, kin, c.master, seat, &result.point);
        result.relative_velocity = v_a - v_b;
        let params = ContactParams {
            stiffness: c.spec.stiffness,
            damping: c.spec.damping,
            friction_mu: c.spec.friction_mu,
            v_reg: c.spec.v_reg,
        };
        let force = contact_force(&result, &params);
        if let GeomOwner::Body(b, _) = tree.geoms[c.slave].owner {
            apply_world_force(&mut f_ext, kin, b, &force, &result.point);
        }
        match tree.geoms[c.master].owner {
            GeomOwner::Body(b, _) => {
                apply_world_force(&mut f_ext, kin, b, &(-force), &result.point);
            }
            GeomOwner::Seat(_) => env_contact_force += force,
        }
    }

    ForceAssembly {
        tau,
        f_ext,
        env_contact_force,
    }
}

/// Cardan angles of a joint's current relative rotation (for probes/tests).
pub fn joint_cardan(tree: &Tree, state: &State, joint: usize) -> CardanAngles {
    let rel = tree.joint_rel_pose(state, joint);
    cardan_angles(&rel.rot).0
}
