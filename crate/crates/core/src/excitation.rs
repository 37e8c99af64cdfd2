//! Seat excitation signals: band-limited random acceleration at a target rms,
//! CSV load/save, and drift-free double integration to seat displacement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid band [{0}, {1}] Hz for sample rate {2} Hz")]
    InvalidBand(f64, f64, f64),
    #[error("duration {0} s too short: need at least 2 periods of {1} Hz")]
    DurationTooShort(f64, f64),
    #[error("signal parse error: {0}")]
    Parse(String),
    #[error("time column is not strictly increasing at row {0}")]
    NonMonotonicTime(usize),
    #[error("signal must have at least 2 samples")]
    TooShort,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Uniformly sampled scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub label: String,
}

impl SignalSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>, label: impl Into<String>) -> Self {
        SignalSeries {
            sample_rate,
            samples,
            label: label.into(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Linear interpolation with clamped ends.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        if n == 0 {
            return 0.0;
        }
        let x = t * self.sample_rate;
        if x <= 0.0 {
            return self.samples[0];
        }
        let i = x.floor() as usize;
        if i + 1 >= n {
            return self.samples[n - 1];
        }
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }
}

pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Gaussian white noise shaped to `[band_low, band_high]` by frequency-domain
/// masking, rescaled so the sample rms hits the target exactly. Deterministic
/// per seed.
pub fn generate_random_vibration(
    band_low: f64,
    band_high: f64,
    rms_target: f64,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<SignalSeries, SignalError> {
    if !(0.0 <= band_low && band_low < band_high && band_high <= sample_rate / 2.0) {
        return Err(SignalError::InvalidBand(band_low, band_high, sample_rate));
    }
    if band_low > 0.0 && duration < 2.0 / band_low {
        return Err(SignalError::DurationTooShort(duration, band_low));
    }
    let n = (duration * sample_rate).round() as usize;
    if n < 2 {
        return Err(SignalError::TooShort);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let df = sample_rate / n as f64;
    let mut kept = 0usize;
    for (k, c) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 {
            k as f64 * df
        } else {
            (n - k) as f64 * df
        };
        if f < band_low || f > band_high || k == 0 {
            *c = Complex::new(0.0, 0.0);
        } else {
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(SignalError::InvalidBand(band_low, band_high, sample_rate));
    }
    planner.plan_fft_inverse(n).process(&mut buf);

    let mut samples: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();
    let current = rms(&samples);
    if current > 0.0 {
        let scale = rms_target / current;
        for s in &mut samples {
            *s *= scale;
        }
    }
    Ok(SignalSeries::new(sample_rate, samples, "random_vibration"))
}

/// Result of [`load_signal`]: the series plus a flag set when non-uniform
/// timestamps forced a resample.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSignal {
    pub series: SignalSeries,
    pub resampled: bool,
}

pub fn load_signal(path: &std::path::Path) -> Result<LoadedSignal, SignalError> {
    let text = std::fs::read_to_string(path)?;
    parse_signal(&text)
}

/// Accepts either two-column `time,value` rows or a single value column with
/// a `# sample_rate_hz=<f>` header. Max timestamp jitter 1e-6 s before the
/// series is resampled onto a uniform grid.
pub fn parse_signal(text: &str) -> Result<LoadedSignal, SignalError> {
    let mut header_rate: Option<f64> = None;
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut two_column = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("sample_rate_hz=") {
                header_rate = Some(v.trim().parse().map_err(|_| {
                    SignalError::Parse(format!("bad sample_rate_hz on line {}", lineno + 1))
                })?);
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| -> Result<f64, SignalError> {
            s.parse()
                .map_err(|_| SignalError::Parse(format!("bad number `{s}` on line {}", lineno + 1)))
        };
        match cols.len() {
            1 => values.push(parse(cols[0])?),
            2 => {
                // Skip a textual header row like `time,value`.
                if values.is_empty() && parse(cols[0]).is_err() && lineno == 0 {
                    continue;
                }
                two_column = true;
                times.push(parse(cols[0])?);
                values.push(parse(cols[1])?);
            }
            _ => {
                return Err(SignalError::Parse(format!(
                    "expected 1 or 2 columns on line {}",
                    lineno + 1
                )))
            }
        }
    }

    if values.len() < 2 {
        return Err(SignalError::TooShort);
    }

    if !two_column {
        let rate = header_rate.ok_or_else(|| {
            SignalError::Parse("single-column signal needs a `# sample_rate_hz=` header".into())
        })?;
        return Ok(LoadedSignal {
            series: SignalSeries::new(rate, values, "file"),
            resampled: false,
        });
    }

    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            return Err(SignalError::NonMonotonicTime(i));
        }
    }
    let n = times.len();
    let dt_mean = (times[n - 1] - times[0]) / (n - 1) as f64;
    let mut jitter: f64 = 0.0;
    for i in 1..n {
        jitter = jitter.max(((times[i] - times[i - 1]) - dt_mean).abs());
    }
    let rate = 1.0 / dt_mean;
    if jitter < 1e-6 {
        return Ok(LoadedSignal {
            series: SignalSeries::new(rate, values, "file"),
            resampled: false,
        });
    }
    // Resample onto the uniform grid by linear interpolation.
    let mut resampled = Vec::with_capacity(n);
    let mut src = 0usize;
    for i in 0..n {
        let t = times[0] + i as f64 * dt_mean;
        while src + 1 < n - 1 && times[src + 1] < t {
            src += 1;
        }
        let t0 = times[src];
        let t1 = times[src + 1];
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        resampled.push(values[src] * (1.0 - w) + values[src + 1] * w);
    }
    Ok(LoadedSignal {
        series: SignalSeries::new(rate, resampled, "file"),
        resampled: true,
    })
}

/// Canonical signal CSV: single value column with a sample-rate header.
pub fn signal_to_csv(series: &SignalSeries) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sample_rate_hz={}", series.sample_rate);
    let _ = writeln!(out, "# label={}", series.label);
    for v in &series.samples {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Frequency-domain double integration with a high-pass weight
/// `(f²/(f²+fc²))²` that kills drift; DC is removed entirely, so the result
/// has zero mean. Returns (position, velocity).
pub fn integrate_acceleration(
    series: &SignalSeries,
    highpass_corner: f64,
) -> (SignalSeries, SignalSeries) {
    assert!(highpass_corner > 0.0, "high-pass corner must be positive");
    let n = series.samples.len();
    let mut acc: Vec<Complex<f64>> = series
        .samples
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut acc);

    let mut pos = acc.clone();
    let mut vel = acc;
    let df = series.sample_rate / n as f64;
    let fc2 = highpass_corner * highpass_corner;
    for k in 0..n {
        let f = if k <= n / 2 {
            k as f64 * df
        } else {
            -((n - k) as f64 * df) // negative frequencies
        };
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            pos[k] = Complex::new(0.0, 0.0);
            vel[k] = Complex::new(0.0, 0.0);
            continue;
        }
        let w = 2.0 * PI * f;
        let f2 = f * f;
        let g = (f2 / (f2 + fc2)).powi(2);
        let iw = Complex::new(0.0, w);
        pos[k] = pos[k] * (-g / (w * w));
        vel[k] = vel[k] * (g / (w * w)) * (-iw); // = pos · iw
    }
    planner.plan_fft_inverse(n).process(&mut pos);
    planner.plan_fft_inverse(n).process(&mut vel);
    let scale = 1.0 / n as f64;
    let pos_s: Vec<f64> = pos.iter().map(|c| c.re * scale).collect();
    let vel_s: Vec<f64> = vel.iter().map(|c| c.re * scale).collect();
    (
        SignalSeries::new(series.sample_rate, pos_s, format!("{}_pos", series.label)),
        SignalSeries::new(series.sample_rate, vel_s, format!("{}_vel", series.label)),
    )
}

/// Drift-free double integration to a zero-mean position series.
pub fn acceleration_to_pose(series: &SignalSeries, highpass_corner: f64) -> SignalSeries {
    integrate_acceleration(series, highpass_corner).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rms_hits_target_and_is_seeded() {
        let a = generate_random_vibration(0.1, 12.0, 0.3, 60.0, 1000.0, 42).unwrap();
        let b = generate_random_vibration(0.1, 12.0, 0.3, 60.0, 1000.0, 42).unwrap();
        assert!(a.rms() >= 0.2997 && a.rms() <= 0.3003, "rms = {}", a.rms());
        assert_eq!(a.samples, b.samples);
        let c = generate_random_vibration(0.1, 12.0, 0.3, 60.0, 1000.0, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn band_energy_is_contained() {
        let s = generate_random_vibration(0.1, 12.0, 0.3, 60.0, 1000.0, 7).unwrap();
        let n = s.samples.len();
        let mut buf: Vec<Complex<f64>> =
            s.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let df = s.sample_rate / n as f64;
        let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
        let outside: f64 = buf
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = if *k <= n / 2 {
                    *k as f64 * df
                } else {
                    (n - *k) as f64 * df
                };
                !(0.05..=13.0).contains(&f)
            })
            .map(|(_, c)| c.norm_sqr())
            .sum();
        assert!(outside < 0.01 * total, "out-of-band energy {outside} of {total}");
    }

    #[test]
    fn invalid_band_is_rejected() {
        assert!(generate_random_vibration(12.0, 0.1, 0.3, 60.0, 1000.0, 0).is_err());
        assert!(generate_random_vibration(0.1, 600.0, 0.3, 60.0, 1000.0, 0).is_err());
        assert!(generate_random_vibration(0.5, 12.0, 0.3, 1.0, 1000.0, 0).is_err());
    }

    #[test]
    fn parseval_rms_consistency() {
        let s = generate_random_vibration(0.5, 10.0, 1.0, 30.0, 500.0, 3).unwrap();
        let n = s.samples.len();
        let mut buf: Vec<Complex<f64>> =
            s.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let spec_rms = (buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / (n as f64).powi(2)).sqrt();
        assert_relative_eq!(spec_rms, s.rms(), max_relative = 1e-3);
    }

    #[test]
    fn load_two_column_sinusoid() {
        let rate = 100.0;
        let f = 1.0;
        let mut text = String::from("time,value\n");
        for i in 0..100 {
            let t = i as f64 / rate;
            text.push_str(&format!("{t},{}\n", (2.0 * PI * f * t).sin()));
        }
        let loaded = parse_signal(&text).unwrap();
        assert!(!loaded.resampled);
        assert_eq!(loaded.series.samples.len(), 100);
        assert_relative_eq!(loaded.series.sample_rate, 100.0, max_relative = 1e-9);
        assert_relative_eq!(
            loaded.series.rms(),
            1.0 / 2.0_f64.sqrt(),
            max_relative = 0.01
        );
    }

    #[test]
    fn shuffled_time_column_errors() {
        let text = "0.0,1.0\n0.2,2.0\n0.1,3.0\n";
        assert!(matches!(
            parse_signal(text),
            Err(SignalError::NonMonotonicTime(_))
        ));
    }

    #[test]
    fn degenerate_signals_error() {
        assert!(matches!(parse_signal(""), Err(SignalError::TooShort)));
        assert!(matches!(
            parse_signal("# sample_rate_hz=100\n1.0\n"),
            Err(SignalError::TooShort)
        ));
    }

    #[test]
    fn single_column_round_trip() {
        let s = SignalSeries::new(250.0, vec![0.0, 1.0, -1.0, 0.5], "x");
        let text = signal_to_csv(&s);
        let loaded = parse_signal(&text).unwrap();
        assert_eq!(loaded.series.sample_rate, 250.0);
        assert_eq!(loaded.series.samples, s.samples);
    }

    #[test]
    fn jittered_time_resamples_with_flag() {
        let mut text = String::new();
        let mut t = 0.0;
        for i in 0..50 {
            text.push_str(&format!("{t},{}\n", i as f64));
            t += if i % 2 == 0 { 0.010 } else { 0.012 };
        }
        let loaded = parse_signal(&text).unwrap();
        assert!(loaded.resampled);
    }

    #[test]
    fn double_integration_of_sine() {
        let rate = 1000.0;
        let f = 1.0;
        let amp = 2.0;
        let n = 20_000;
        let samples: Vec<f64> = (0..n)
            .map(|i| amp * (2.0 * PI * f * i as f64 / rate).sin())
            .collect();
        let acc = SignalSeries::new(rate, samples, "sine");
        let pos = acceleration_to_pose(&acc, 0.05);
        let expected_amp = amp / (2.0 * PI * f).powi(2);
        // Compare against the analytic −A/(2πf)²·sin(2πft).
        let mut err: f64 = 0.0;
        for i in 0..n {
            let t = i as f64 / rate;
            let expect = -expected_amp * (2.0 * PI * f * t).sin();
            err = err.max((pos.samples[i] - expect).abs());
        }
        assert!(err < 0.01 * expected_amp, "max error {err} vs {expected_amp}");
    }

    #[test]
    fn zero_in_zero_out() {
        let acc = SignalSeries::new(100.0, vec![0.0; 1000], "zero");
        let pos = acceleration_to_pose(&acc, 0.05);
        assert!(pos.samples.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn constant_offset_stays_bounded() {
        let amp = 1.0;
        let corner = 0.05;
        let acc = SignalSeries::new(100.0, vec![amp; 4000], "offset");
        let pos = acceleration_to_pose(&acc, corner);
        let bound = amp / (2.0 * PI * corner).powi(2);
        assert!(pos.samples.iter().all(|&x| x.abs() < bound));
    }

    #[test]
    fn double_differentiation_recovers_input() {
        let rate = 1000.0;
        let sig = generate_random_vibration(1.0, 5.0, 0.5, 30.0, rate, 11).unwrap();
        let pos = acceleration_to_pose(&sig, 0.05);
        // Central second difference.
        let n = pos.samples.len();
        let mut recovered = vec![0.0; n];
        for i in 1..n - 1 {
            recovered[i] = (pos.samples[i - 1] - 2.0 * pos.samples[i] + pos.samples[i + 1])
                * rate
                * rate;
        }
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for i in (rate as usize)..(n - rate as usize) {
            err2 += (recovered[i] - sig.samples[i]).powi(2);
            ref2 += sig.samples[i].powi(2);
        }
        assert!((err2 / ref2).sqrt() < 0.02, "recovery error {}", (err2 / ref2).sqrt());
    }
}
