//! Time-sampled marker history with a fixed-column CSV form.
//!
//! Column order: `time`, seat input block (`seat_{x,y,z}_pos`,
//! `seat_{x,y,z}_acc`), then per marker in model order:
//! `{m}_{px,py,pz}`, `{m}_{roll,pitch,yaw}`, `{m}_{vx,vy,vz}`,
//! `{m}_{wx,wy,wz}`, `{m}_{ax,ay,az}`, `{m}_{dwx,dwy,dwz}`. With contact
//! logging enabled, `contact_{fx,fy,fz}` (total environment contact force on
//! the body) closes the row. Settling samples carry negative time; the
//! excitation phase starts at t = 0.

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarkerSample {
    pub pos: Vector3<f64>,
    /// Cardan x-y-z angles of the segment orientation, rad.
    pub rpy: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub angvel: Vector3<f64>,
    pub acc: Vector3<f64>,
    pub angacc: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeatInputSample {
    pub pos: Vector3<f64>,
    pub acc: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_rate: f64,
    pub marker_names: Vec<String>,
    pub times: Vec<f64>,
    /// `samples[i][m]` = marker `m` at time `times[i]`.
    pub samples: Vec<Vec<MarkerSample>>,
    pub seat: Vec<SeatInputSample>,
    /// Total environment contact force on the body per sample.
    pub contact_force: Vec<Vector3<f64>>,
}

const MARKER_FIELDS: [&str; 18] = [
    "px", "py", "pz", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz", "ax", "ay",
    "az", "dwx", "dwy", "dwz",
];

impl Trajectory {
    pub fn new(sample_rate: f64, marker_names: Vec<String>) -> Self {
        Trajectory {
            sample_rate,
            marker_names,
            times: Vec::new(),
            samples: Vec::new(),
            seat: Vec::new(),
            contact_force: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        time: f64,
        markers: Vec<MarkerSample>,
        seat: SeatInputSample,
        contact: Vector3<f64>,
    ) {
        self.times.push(time);
        self.samples.push(markers);
        self.seat.push(seat);
        self.contact_force.push(contact);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the first excitation-phase sample (t ≥ 0).
    pub fn excitation_start(&self) -> usize {
        self.times.partition_point(|&t| t < 0.0)
    }

    pub fn header(&self, include_contact: bool) -> Vec<String> {
        let mut cols = vec!["time".to_string()];
        for ax in ["x", "y", "z"] {
            cols.push(format!("seat_{ax}_pos"));
        }
        for ax in ["x", "y", "z"] {
            cols.push(format!("seat_{ax}_acc"));
        }
        for m in &self.marker_names {
            for f in MARKER_FIELDS {
                cols.push(format!("{m}_{f}"));
            }
        }
        if include_contact {
            for ax in ["fx", "fy", "fz"] {
                cols.push(format!("contact_{ax}"));
            }
        }
        cols
    }

    /// One named column over the whole record (settling included).
    pub fn channel(&self, name: &str) -> Option<Vec<f64>> {
        if name == "time" {
            return Some(self.times.clone());
        }
        if let Some(rest) = name.strip_prefix("seat_") {
            let (ax, kind) = rest.split_once('_')?;
            let i = axis_index(ax)?;
            return Some(
                self.seat
                    .iter()
                    .map(|s| match kind {
                        "pos" => s.pos[i],
                        "acc" => s.acc[i],
                        _ => f64::NAN,
                    })
                    .collect(),
            );
        }
        if let Some(rest) = name.strip_prefix("contact_") {
            let i = match rest {
                "fx" => 0,
                "fy" => 1,
                "fz" => 2,
                _ => return None,
            };
            return Some(self.contact_force.iter().map(|f| f[i]).collect());
        }
        let (marker, field) = name.rsplit_once('_')?;
        let m = self.marker_names.iter().position(|n| n == marker)?;
        let k = MARKER_FIELDS.iter().position(|f| *f == field)?;
        Some(
            self.samples
                .iter()
                .map(|row| {
                    let s = &row[m];
                    match k {
                        0..=2 => s.pos[k],
                        3..=5 => s.rpy[k - 3],
                        6..=8 => s.vel[k - 6],
                        9..=11 => s.angvel[k - 9],
                        12..=14 => s.acc[k - 12],
                        _ => s.angacc[k - 15],
                    }
                })
                .collect(),
        )
    }

    /// Excitation-phase slice of a channel (t ≥ 0), for gain analysis.
    pub fn excitation_channel(&self, name: &str) -> Option<Vec<f64>> {
        let full = self.channel(name)?;
        Some(full[self.excitation_start()..].to_vec())
    }

    pub fn to_csv(&self, include_contact: bool) -> String {
        let mut out = String::new();
        out.push_str(&format!("# sample_rate_hz={}\n", self.sample_rate));
        out.push_str(&format!("# markers={}\n", self.marker_names.join(";")));
        out.push_str(&self.header(include_contact).join(","));
        out.push('\n');
        for i in 0..self.len() {
            let mut row: Vec<String> = vec![fmt(self.times[i])];
            for k in 0..3 {
                row.push(fmt(self.seat[i].pos[k]));
            }
            for k in 0..3 {
                row.push(fmt(self.seat[i].acc[k]));
            }
            for s in &self.samples[i] {
                for v in [s.pos, s.rpy, s.vel, s.angvel, s.acc, s.angacc] {
                    for k in 0..3 {
                        row.push(fmt(v[k]));
                    }
                }
            }
            if include_contact {
                for k in 0..3 {
                    row.push(fmt(self.contact_force[i][k]));
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trajectory, TrajectoryError> {
        let mut sample_rate = None;
        let mut marker_names: Vec<String> = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut header: Option<Vec<String>> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("sample_rate_hz=") {
                    sample_rate = Some(v.trim().parse::<f64>().map_err(|_| {
                        TrajectoryError::Parse("bad sample_rate_hz header".into())
                    })?);
                } else if let Some(v) = rest.strip_prefix("markers=") {
                    marker_names = v.split(';').map(|s| s.trim().to_string()).collect();
                }
                continue;
            }
            if header.is_none() {
                header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse()).collect();
            rows.push(row.map_err(|_| TrajectoryError::Parse("bad numeric row".into()))?);
        }
        let header = header.ok_or_else(|| TrajectoryError::Parse("missing header".into()))?;
        let sample_rate =
            sample_rate.ok_or_else(|| TrajectoryError::Parse("missing sample_rate_hz".into()))?;
        if marker_names.is_empty() {
            return Err(TrajectoryError::Parse("missing markers header".into()));
        }
        let include_contact = header.iter().any(|h| h == "contact_fx");
        let expected = 7 + 18 * marker_names.len() + if include_contact { 3 } else { 0 };
        if header.len() != expected {
            return Err(TrajectoryError::Parse(format!(
                "expected {expected} columns, found {}",
                header.len()
            )));
        }
        let mut traj = Trajectory::new(sample_rate, marker_names);
        for row in rows {
            if row.len() != expected {
                return Err(TrajectoryError::Parse("ragged row".into()));
            }
            let time = row[0];
            let seat = SeatInputSample {
                pos: Vector3::new(row[1], row[2], row[3]),
                acc: Vector3::new(row[4], row[5], row[6]),
            };
            let mut markers = Vec::with_capacity(traj.marker_names.len());
            for m in 0..traj.marker_names.len() {
                let b = 7 + m * 18;
                markers.push(MarkerSample {
                    pos: Vector3::new(row[b], row[b + 1], row[b + 2]),
                    rpy: Vector3::new(row[b + 3], row[b + 4], row[b + 5]),
                    vel: Vector3::new(row[b + 6], row[b + 7], row[b + 8]),
                    angvel: Vector3::new(row[b + 9], row[b + 10], row[b + 11]),
                    acc: Vector3::new(row[b + 12], row[b + 13], row[b + 14]),
                    angacc: Vector3::new(row[b + 15], row[b + 16], row[b + 17]),
                });
            }
            let contact = if include_contact {
                let b = 7 + traj.marker_names.len() * 18;
                Vector3::new(row[b], row[b + 1], row[b + 2])
            } else {
                Vector3::zeros()
            };
            traj.push(time, markers, seat, contact);
        }
        Ok(traj)
    }
}

fn axis_index(ax: &str) -> Option<usize> {
    match ax {
        "x" => Some(0),
        "y" => Some(1),
        "z" => Some(2),
        _ => None,
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_traj() -> Trajectory {
        let mut t = Trajectory::new(100.0, vec!["head".into(), "pelvis".into()]);
        for i in 0..5 {
            let time = -0.02 + i as f64 * 0.01;
            let mk = |s: f64| MarkerSample {
                pos: Vector3::new(s, s + 1.0, s + 2.0),
                rpy: Vector3::new(0.1 * s, 0.0, -0.1 * s),
                vel: Vector3::new(s, 0.0, 0.0),
                angvel: Vector3::zeros(),
                acc: Vector3::new(0.0, 0.0, s),
                angacc: Vector3::zeros(),
            };
            t.push(
                time,
                vec![mk(i as f64), mk(-(i as f64))],
                SeatInputSample {
                    pos: Vector3::new(0.0, 0.0, 0.001 * i as f64),
                    acc: Vector3::new(0.0, 0.0, 0.1 * i as f64),
                },
                Vector3::new(0.0, 0.0, 100.0 + i as f64),
            );
        }
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample_traj();
        let text = t.to_csv(true);
        let back = Trajectory::from_csv(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn channels_resolve() {
        let t = sample_traj();
        assert_eq!(t.channel("head_az").unwrap().len(), 5);
        assert_eq!(t.channel("pelvis_roll").unwrap().len(), 5);
        assert_eq!(t.channel("seat_z_acc").unwrap()[4], 0.4);
        assert_eq!(t.channel("contact_fz").unwrap()[0], 100.0);
        assert!(t.channel("nope_az").is_none());
    }

    #[test]
    fn excitation_slice_starts_at_zero() {
        let t = sample_traj();
        assert_eq!(t.excitation_start(), 2);
        assert_eq!(t.excitation_channel("head_px").unwrap().len(), 3);
    }
}
