//! Joint-level resistance laws: Cardan spring–dampers, PID stabilization with
//! integral drift elimination, and point restraints for soft tissue.
//!
//! Cardan sequence is fixed as x–y–z (roll–pitch–yaw): R = Rx(φ1)·Ry(φ2)·Rz(φ3).

use nalgebra::{Matrix3, Vector3};

/// Margin below π/2 where pitch extraction is flagged as gimbal-locked.
pub const GIMBAL_EPS: f64 = 1e-3;

/// Successive x–y–z rotation angles describing a relative orientation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CardanAngles {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CardanAngles {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// Extract x–y–z Cardan angles from a rotation matrix. The boolean is a
/// gimbal-lock warning: near |φy| = π/2 the returned branch fixes φz = 0 and
/// puts the whole twist into φx.
pub fn cardan_angles(r: &Matrix3<f64>) -> (CardanAngles, bool) {
    // R = Rx·Ry·Rz gives R[(0,2)] = sin φy.
    let sy = r[(0, 2)].clamp(-1.0, 1.0);
    let y = sy.asin();
    if y.abs() >= std::f64::consts::FRAC_PI_2 - GIMBAL_EPS {
        // Canonical branch: φz = 0, φx = atan2(R21, R11).
        let x = r[(2, 1)].atan2(r[(1, 1)]);
        (CardanAngles::new(x, y, 0.0), true)
    } else {
        let x = (-r[(1, 2)]).atan2(r[(2, 2)]);
        let z = (-r[(0, 1)]).atan2(r[(0, 0)]);
        (CardanAngles::new(x, y, z), false)
    }
}

/// Compose the x–y–z elementary rotations back into a matrix.
pub fn cardan_compose(a: &CardanAngles) -> Matrix3<f64> {
    let (s1, c1) = a.x.sin_cos();
    let (s2, c2) = a.y.sin_cos();
    let (s3, c3) = a.z.sin_cos();
    // Rx(φ1)·Ry(φ2)·Rz(φ3), expanded.
    Matrix3::new(
        c2 * c3,
        -c2 * s3,
        s2,
        c1 * s3 + s1 * s2 * c3,
        c1 * c3 - s1 * s2 * s3,
        -s1 * c2,
        s1 * s3 - c1 * s2 * c3,
        s1 * c3 + c1 * s2 * s3,
        c1 * c2,
    )
}

/// Rate matrix E(φ): ω_parent = E·φ̇. Columns are the instantaneous Cardan
/// axes expressed in the parent frame.
pub fn cardan_rate_matrix(a: &CardanAngles) -> Matrix3<f64> {
    let (s1, c1) = a.x.sin_cos();
    let (s2, c2) = a.y.sin_cos();
    Matrix3::new(
        1.0, 0.0, s2, //
        0.0, c1, -s1 * c2, //
        0.0, s1, c1 * c2,
    )
}

/// Cardan rates from a relative angular velocity given in parent coordinates.
/// Falls back to the raw angular velocity at gimbal lock.
pub fn cardan_rates(a: &CardanAngles, omega_parent: &Vector3<f64>) -> Vector3<f64> {
    let e = cardan_rate_matrix(a);
    match e.lu().solve(omega_parent) {
        Some(rates) => rates,
        None => *omega_parent,
    }
}

/// Per-axis restraint torques conjugate to the Cardan angles:
/// τ_k = −K_k·(φ_k − φ_set,k) − C_k·φ̇_k.
pub fn cardan_restraint_torque(
    angles: &CardanAngles,
    rates: &Vector3<f64>,
    stiffness: &Vector3<f64>,
    damping: &Vector3<f64>,
    setpoint: &Vector3<f64>,
) -> Vector3<f64> {
    let phi = angles.as_vector();
    Vector3::new(
        -stiffness.x * (phi.x - setpoint.x) - damping.x * rates.x,
        -stiffness.y * (phi.y - setpoint.y) - damping.y * rates.y,
        -stiffness.z * (phi.z - setpoint.z) - damping.z * rates.z,
    )
}

/// Map generalized Cardan torques to the equivalent physical torque vector in
/// the parent frame (the vector τ with Eᵀτ = Q, so the virtual work matches).
pub fn cardan_torque_to_vector(angles: &CardanAngles, generalized: &Vector3<f64>) -> Vector3<f64> {
    let et = cardan_rate_matrix(angles).transpose();
    match et.lu().solve(generalized) {
        Some(tau) => tau,
        // Gimbal-locked: E is singular; the generalized torques are already a
        // usable approximation of the physical torque there.
        None => *generalized,
    }
}

/// Integral memory and gains for one restrained DoF group.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub integral: Vec<f64>,
    pub kp: Vec<f64>,
    pub ki: Vec<f64>,
    pub kd: Vec<f64>,
    /// |integral| bound per DoF (rad·s or m·s).
    pub clamp: Vec<f64>,
}

impl PidState {
    pub fn new(kp: Vec<f64>, ki: Vec<f64>, kd: Vec<f64>, clamp: Vec<f64>) -> Self {
        let n = kp.len();
        assert!(ki.len() == n && kd.len() == n && clamp.len() == n);
        PidState {
            integral: vec![0.0; n],
            kp,
            ki,
            kd,
            clamp,
        }
    }
}

/// One discrete PID update: the integral advances first by the trapezoidal
/// rule (the previous error is reconstructed as `e − ė·dt`), is clamped, and
/// the force `Kp·e + Ki·∫e + Kd·ė` is returned with the new state.
pub fn pid_update(
    pid: &PidState,
    error: &[f64],
    error_rate: &[f64],
    dt: f64,
) -> (Vec<f64>, PidState) {
    assert!(dt > 0.0, "pid_update requires dt > 0");
    let mut next = pid.clone();
    let mut force = vec![0.0; pid.kp.len()];
    for k in 0..pid.kp.len() {
        let e = error[k];
        let edot = error_rate[k];
        let prev = e - edot * dt;
        next.integral[k] =
            (pid.integral[k] + 0.5 * dt * (prev + e)).clamp(-pid.clamp[k], pid.clamp[k]);
        force[k] = pid.kp[k] * e + pid.ki[k] * next.integral[k] + pid.kd[k] * edot;
    }
    (force, next)
}

/// Point restraint: F = −k·d − c·v on the attachment, equal and opposite on
/// the anchor side.
pub fn point_restraint_force(
    displacement: &Vector3<f64>,
    velocity: &Vector3<f64>,
    stiffness: f64,
    damping: f64,
) -> Vector3<f64> {
    -displacement * stiffness - velocity * damping
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_rotation_gives_zero_angles() {
        let (a, gimbal) = cardan_angles(&Matrix3::identity());
        assert_eq!(a, CardanAngles::default());
        assert!(!gimbal);
    }

    #[test]
    fn pure_x_rotation() {
        let r = cardan_compose(&CardanAngles::new(0.2, 0.0, 0.0));
        let (a, gimbal) = cardan_angles(&r);
        assert!(!gimbal);
        assert_relative_eq!(a.x, 0.2, epsilon = 1e-12);
        assert_relative_eq!(a.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(a.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gimbal_branch_is_flagged() {
        let r = cardan_compose(&CardanAngles::new(0.3, std::f64::consts::FRAC_PI_2, 0.0));
        let (a, gimbal) = cardan_angles(&r);
        assert!(gimbal);
        assert_relative_eq!(a.y.abs(), std::f64::consts::FRAC_PI_2, epsilon = 1e-6);
    }

    #[test]
    fn restraint_torque_hand_values() {
        let k = Vector3::new(50.0, 50.0, 50.0);
        let zero = Vector3::zeros();
        let q = cardan_restraint_torque(
            &CardanAngles::new(0.1, 0.0, 0.0),
            &zero,
            &k,
            &zero,
            &zero,
        );
        assert_relative_eq!(q, Vector3::new(-5.0, 0.0, 0.0), epsilon = 1e-12);

        let c = Vector3::new(0.0, 2.0, 0.0);
        let q = cardan_restraint_torque(
            &CardanAngles::default(),
            &Vector3::new(0.0, 1.0, 0.0),
            &zero,
            &c,
            &zero,
        );
        assert_relative_eq!(q, Vector3::new(0.0, -2.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn neutral_posture_torque_is_zero() {
        let k = Vector3::new(10.0, 20.0, 30.0);
        let q = cardan_restraint_torque(
            &CardanAngles::default(),
            &Vector3::zeros(),
            &k,
            &k,
            &Vector3::zeros(),
        );
        assert_eq!(q, Vector3::zeros());
    }

    #[test]
    fn torque_vector_matches_generalized_for_single_axis() {
        // From the virtual-work mapping, a pure-x deflection keeps τ = Q.
        let a = CardanAngles::new(0.1, 0.0, 0.0);
        let tau = cardan_torque_to_vector(&a, &Vector3::new(-5.0, 0.0, 0.0));
        assert_relative_eq!(tau, Vector3::new(-5.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn pid_zero_error_stays_zero() {
        let pid = PidState::new(vec![10.0], vec![5.0], vec![1.0], vec![1.0]);
        let (f, next) = pid_update(&pid, &[0.0], &[0.0], 1e-3);
        assert_eq!(f[0], 0.0);
        assert_eq!(next.integral[0], 0.0);
    }

    #[test]
    fn pid_integral_ramp() {
        // Constant error 0.01 rad for 1 s at Ki = 10 → integral term 0.1 N·m.
        let mut pid = PidState::new(vec![0.0], vec![10.0], vec![0.0], vec![f64::INFINITY]);
        let dt = 1e-3;
        let mut force = 0.0;
        for _ in 0..1000 {
            let (f, next) = pid_update(&pid, &[0.01], &[0.0], dt);
            pid = next;
            force = f[0];
        }
        assert_relative_eq!(pid.integral[0], 0.01, epsilon = 1e-12);
        assert_relative_eq!(force, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn pid_integral_clamps() {
        let mut pid = PidState::new(vec![0.0], vec![10.0], vec![0.0], vec![0.05]);
        for _ in 0..20_000 {
            let (_, next) = pid_update(&pid, &[0.01], &[0.0], 1e-3);
            pid = next;
        }
        assert_relative_eq!(pid.integral[0], 0.05, epsilon = 1e-12);
        let (f, _) = pid_update(&pid, &[0.01], &[0.0], 1e-3);
        assert!(f[0] <= 10.0 * 0.05 + 1e-9);
    }

    #[test]
    fn pid_equals_cardan_when_integral_off() {
        // With Ki = 0 and (K, C) = (Kp, Kd) the two laws are the same formula.
        let phi = CardanAngles::new(0.05, -0.02, 0.01);
        let rates = Vector3::new(0.3, -0.1, 0.2);
        let k = Vector3::new(40.0, 50.0, 60.0);
        let c = Vector3::new(4.0, 5.0, 6.0);
        let set = Vector3::new(0.01, 0.0, -0.01);
        let cardan = cardan_restraint_torque(&phi, &rates, &k, &c, &set);
        let pid = PidState::new(
            vec![k.x, k.y, k.z],
            vec![0.0; 3],
            vec![c.x, c.y, c.z],
            vec![f64::INFINITY; 3],
        );
        let err: Vec<f64> = (0..3).map(|i| set[i] - phi.as_vector()[i]).collect();
        let err_rate: Vec<f64> = (0..3).map(|i| -rates[i]).collect();
        let (f, _) = pid_update(&pid, &err, &err_rate, 1e-3);
        for i in 0..3 {
            assert_relative_eq!(f[i], cardan[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn point_restraint_hand_values() {
        assert_eq!(
            point_restraint_force(&Vector3::zeros(), &Vector3::zeros(), 1000.0, 200.0),
            Vector3::zeros()
        );
        assert_relative_eq!(
            point_restraint_force(&Vector3::new(0.01, 0.0, 0.0), &Vector3::zeros(), 1000.0, 0.0),
            Vector3::new(-10.0, 0.0, 0.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            point_restraint_force(&Vector3::zeros(), &Vector3::new(0.0, 0.0, 0.5), 0.0, 200.0),
            Vector3::new(0.0, 0.0, -100.0),
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn cardan_round_trip(
            x in -1.4f64..1.4,
            y in -1.4f64..1.4,
            z in -1.4f64..1.4,
        ) {
            let r = cardan_compose(&CardanAngles::new(x, y, z));
            let (a, gimbal) = cardan_angles(&r);
            if !gimbal {
                let back = cardan_compose(&a);
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert!((back[(i, j)] - r[(i, j)]).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn rate_matrix_is_consistent_with_composition(
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
            z in -1.0f64..1.0,
            rx in -1.0f64..1.0,
            ry in -1.0f64..1.0,
            rz in -1.0f64..1.0,
        ) {
            // ω from E(φ)·φ̇ must match the numerical derivative of R(φ(t)).
            let a = CardanAngles::new(x, y, z);
            let rates = Vector3::new(rx, ry, rz);
            let h = 1e-6;
            let a2 = CardanAngles::new(x + h * rx, y + h * ry, z + h * rz);
            let r1 = cardan_compose(&a);
            let r2 = cardan_compose(&a2);
            let omega_skew = (r2 - r1) * r1.transpose() / h; // world (parent) frame
            let omega_num = Vector3::new(omega_skew[(2, 1)], omega_skew[(0, 2)], omega_skew[(1, 0)]);
            let omega = cardan_rate_matrix(&a) * rates;
            prop_assert!((omega - omega_num).norm() < 1e-4 * (1.0 + omega.norm()));
        }
    }
}
