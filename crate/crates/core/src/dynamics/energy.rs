//! Energy and momentum probes used by the conservation tests.

use super::spatial::inertia_mul;
use super::tree::{Kinematics, Tree};
use nalgebra::Vector3;

pub fn kinetic_energy(tree: &Tree, kin: &Kinematics) -> f64 {
    let mut ke = 0.0;
    for (i, body) in tree.bodies.iter().enumerate() {
        let v = kin.vel[i];
        ke += 0.5 * v.dot(&inertia_mul(&body.inertia, &v));
    }
    ke
}

pub fn gravitational_potential(tree: &Tree, kin: &Kinematics) -> f64 {
    let mut pe = 0.0;
    for (i, body) in tree.bodies.iter().enumerate() {
        pe -= body.mass * tree.gravity.dot(&kin.pos[i]);
    }
    pe
}

/// Linear momentum and angular momentum about the world origin.
pub fn momentum(tree: &Tree, kin: &Kinematics) -> (Vector3<f64>, Vector3<f64>) {
    let mut linear = Vector3::zeros();
    let mut angular = Vector3::zeros();
    for (i, body) in tree.bodies.iter().enumerate() {
        let v = kin.vel[i];
        let cog_vel = kin.rot[i] * v.lin;
        let l = cog_vel * body.mass;
        let spin = kin.rot[i] * Vector3::new(
            body.inertia_diag.x * v.ang.x,
            body.inertia_diag.y * v.ang.y,
            body.inertia_diag.z * v.ang.z,
        );
        linear += l;
        angular += spin + kin.pos[i].cross(&l);
    }
    (linear, angular)
}
