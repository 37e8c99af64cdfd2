//! Generalized coordinates, velocities and PID integrator memory.

use super::tree::{quat_from_slots, Tree};
use crate::model::JointKind;
use nalgebra::{DVector, UnitQuaternion, Vector3};

/// Configuration of the whole tree at one instant. Quaternion blocks are kept
/// unit-norm (renormalized every step); everything else is a plain scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    /// Accumulated PID integral error per restrained DoF.
    pub pid_integrals: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn zeros(nq: usize, nv: usize, ni: usize) -> State {
        State {
            q: DVector::zeros(nq),
            qd: DVector::zeros(nv),
            pid_integrals: vec![0.0; ni],
            time: 0.0,
        }
    }

    /// `self.q ⊞ scale·dq` where `dq` is a velocity-space tangent: quaternion
    /// blocks advance by the exponential map of the body-frame rotation
    /// increment, scalars linearly. Free-joint positions move in the parent
    /// frame using the block's own current orientation.
    pub fn apply_tangent(&self, tree: &Tree, dq: &DVector<f64>, scale: f64) -> DVector<f64> {
        let mut q = self.q.clone();
        for j in &tree.joints {
            let qs = j.q_off;
            let vs = j.v_off;
            match &j.kind {
                JointKind::Spherical | JointKind::SphericalTranslation { .. } | JointKind::Free => {
                    let rotvec =
                        Vector3::new(dq[vs], dq[vs + 1], dq[vs + 2]) * scale;
                    let quat = quat_from_slots(&self.q.as_slice()[qs..qs + 4]);
                    let next = quat * UnitQuaternion::from_scaled_axis(rotvec);
                    q[qs] = next.w;
                    q[qs + 1] = next.i;
                    q[qs + 2] = next.j;
                    q[qs + 3] = next.k;
                    match &j.kind {
                        JointKind::SphericalTranslation { .. } => {
                            q[qs + 4] = self.q[qs + 4] + scale * dq[vs + 3];
                        }
                        JointKind::Free => {
                            // Linear velocity is in the child frame; the
                            // position coordinate lives in the parent frame.
                            let v = Vector3::new(dq[vs + 3], dq[vs + 4], dq[vs + 5]);
                            let r = quat.to_rotation_matrix();
                            let dp = r * v * scale;
                            q[qs + 4] = self.q[qs + 4] + dp.x;
                            q[qs + 5] = self.q[qs + 5] + dp.y;
                            q[qs + 6] = self.q[qs + 6] + dp.z;
                        }
                        _ => {}
                    }
                }
                JointKind::Locked => {}
                _ => {
                    for k in 0..j.dof {
                        q[qs + k] = self.q[qs + k] + scale * dq[vs + k];
                    }
                }
            }
        }
        q
    }

    /// Renormalize quaternion blocks in place.
    pub fn renormalize(&mut self, tree: &Tree) {
        for j in &tree.joints {
            if matches!(
                j.kind,
                JointKind::Spherical | JointKind::SphericalTranslation { .. } | JointKind::Free
            ) {
                let qs = j.q_off;
                let n = (self.q[qs] * self.q[qs]
                    + self.q[qs + 1] * self.q[qs + 1]
                    + self.q[qs + 2] * self.q[qs + 2]
                    + self.q[qs + 3] * self.q[qs + 3])
                    .sqrt();
                if n > 0.0 {
                    for k in 0..4 {
                        self.q[qs + k] /= n;
                    }
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|x| x.is_finite())
            && self.qd.iter().all(|x| x.is_finite())
            && self.pid_integrals.iter().all(|x| x.is_finite())
    }

    pub fn max_speed(&self) -> f64 {
        self.qd.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
