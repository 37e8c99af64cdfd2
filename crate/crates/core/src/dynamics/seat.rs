//! Kinematically prescribed seat-frame motion (infinite-impedance base).

use super::forces::SeatSample;
use crate::excitation::{integrate_acceleration, SignalSeries};
use nalgebra::Vector3;

struct AxisMotion {
    rate: f64,
    pos: Vec<f64>,
    vel: Vec<f64>,
    acc: Vec<f64>,
}

/// Translation-only seat frame motion, zero during settling (t < 0) and
/// clamped to the last sample beyond the excitation window.
#[derive(Default)]
pub struct SeatMotion {
    axes: [Option<AxisMotion>; 3],
}

impl SeatMotion {
    /// A seat that never moves.
    pub fn static_seat() -> Self {
        SeatMotion::default()
    }

    /// Build from per-axis acceleration series; positions and velocities come
    /// from drift-free spectral double integration.
    pub fn from_accelerations(
        signals: &[Option<SignalSeries>; 3],
        highpass_corner: f64,
    ) -> SeatMotion {
        let mut axes: [Option<AxisMotion>; 3] = [None, None, None];
        for (i, sig) in signals.iter().enumerate() {
            if let Some(acc) = sig {
                let (pos, vel) = integrate_acceleration(acc, highpass_corner);
                axes[i] = Some(AxisMotion {
                    rate: acc.sample_rate,
                    pos: pos.samples,
                    vel: vel.samples,
                    acc: acc.samples.clone(),
                });
            }
        }
        SeatMotion { axes }
    }

    pub fn is_static(&self) -> bool {
        self.axes.iter().all(|a| a.is_none())
    }

    pub fn sample(&self, t: f64) -> SeatSample {
        let mut out = SeatSample::default();
        if t < 0.0 {
            return out;
        }
        for (i, axis) in self.axes.iter().enumerate() {
            let Some(a) = axis else { continue };
            out.pos[i] = interp(&a.pos, a.rate, t);
            out.vel[i] = interp(&a.vel, a.rate, t);
            out.acc[i] = interp(&a.acc, a.rate, t);
        }
        out
    }

    /// Seat position at `t` as a vector (convenience for recording).
    pub fn position(&self, t: f64) -> Vector3<f64> {
        self.sample(t).pos
    }
}

fn interp(samples: &[f64], rate: f64, t: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let x = t * rate;
    if x <= 0.0 {
        return samples[0];
    }
    let i = x.floor() as usize;
    if i + 1 >= n {
        return samples[n - 1];
    }
    let frac = x - i as f64;
    samples[i] * (1.0 - frac) + samples[i + 1] * frac
}
