//! Spectra, harmonic distortion and step-response metrics.

use std::f64::consts::TAU;
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::sim::TimeSeries;
use crate::{DriveError, Result};

/// One-sided amplitude spectrum, peak convention: a sinusoid of amplitude
/// `A` that lands on a bin reads `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin width, Hz.
    pub bin_width: f64,
    /// `n_samples / 2 + 1` bins from DC upward.
    pub magnitudes: Vec<f64>,
    pub n_samples: usize,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }

    /// Mean-square value of the original signal recovered from the
    /// magnitudes.
    pub fn mean_square(&self) -> f64 {
        let n = self.n_samples;
        self.magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                    m * m
                } else {
                    m * m / 2.0
                }
            })
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "f_hz,magnitude")?;
        for (k, m) in self.magnitudes.iter().enumerate() {
            writeln!(w, "{},{}", self.frequency(k), m)?;
        }
        Ok(())
    }
}

pub fn dft(series: &TimeSeries) -> Result<Spectrum> {
    let n = series.len();
    if n < 2 {
        return Err(DriveError::Size { needed: 2, got: n });
    }
    let mut buf: Vec<Complex<f64>> = series
        .samples
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let nf = n as f64;
    let magnitudes = buf[..=n / 2]
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let m = z.norm() / nf;
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                m
            } else {
                2.0 * m
            }
        })
        .collect();
    Ok(Spectrum {
        bin_width: 1.0 / (nf * series.dt),
        magnitudes,
        n_samples: n,
    })
}

/// `√(Σ_{h=2..n} M_h²) / M_1` over the harmonic bins of `f1`. Harmonics
/// above the last bin are ignored.
pub fn thd(spec: &Spectrum, f1: f64, n_harmonics: usize) -> Result<f64> {
    if n_harmonics < 2 {
        return Err(DriveError::Domain(format!(
            "need at least 2 harmonics, got {n_harmonics}"
        )));
    }
    let ratio = f1 / spec.bin_width;
    let k1 = ratio.round();
    if k1 < 1.0 || (ratio - k1).abs() > 1e-6 * k1 {
        return Err(DriveError::Alignment {
            f1,
            bin_width: spec.bin_width,
        });
    }
    let k1 = k1 as usize;
    let fundamental = spec.magnitudes.get(k1).copied().unwrap_or(0.0);
    if fundamental == 0.0 {
        return Err(DriveError::UndefinedFundamental);
    }
    let harmonic_power: f64 = (2..=n_harmonics)
        .map_while(|h| spec.magnitudes.get(h * k1))
        .map(|m| m * m)
        .sum();
    Ok(harmonic_power.sqrt() / fundamental)
}

/// Electrical fundamental frequency for a mechanical speed.
pub fn fundamental_frequency(omega_m: f64, pole_pairs: u32) -> f64 {
    pole_pairs as f64 * omega_m / TAU
}

/// Result of a windowed THD measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowThd {
    pub thd: f64,
    /// Fundamental re-derived from the whole-sample window length.
    pub f1: f64,
    pub t_start: f64,
    pub spectrum: Spectrum,
}

/// THD over the `n_cycles` fundamental cycles ending at `t_end`. The
/// window is rounded to a whole number of samples and `f1` re-derived
/// from it so the fundamental sits exactly on a bin.
pub fn thd_at_window(
    trace: &TimeSeries,
    t_end: f64,
    f1: f64,
    n_cycles: usize,
    n_harmonics: usize,
) -> Result<WindowThd> {
    if !(f1 > 0.0) || n_cycles == 0 {
        return Err(DriveError::Domain(format!(
            "window needs f1 > 0 and at least one cycle (f1 = {f1}, cycles = {n_cycles})"
        )));
    }
    let n = (n_cycles as f64 / (f1 * trace.dt)).round() as usize;
    let f1_used = n_cycles as f64 / (n as f64 * trace.dt);
    let t_start = t_end - n as f64 * trace.dt;
    let window = trace.extract_window(t_start, t_end)?;
    let spectrum = dft(&window)?;
    let thd = thd(&spectrum, f1_used, n_harmonics)?;
    Ok(WindowThd {
        thd,
        f1: f1_used,
        t_start,
        spectrum,
    })
}

/// Step-response figures; a metric the trace never achieves is `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpeedMetrics {
    /// 10 % → 90 % of the step, s.
    pub rise_time: Option<f64>,
    /// Time after the step from which the response stays within ±2 %.
    pub settling_time: Option<f64>,
    /// Peak excursion past the target as a fraction of the step.
    pub overshoot: Option<f64>,
    /// Final deviation from the target as a fraction of the step.
    pub steady_state_error: Option<f64>,
}

pub fn speed_metrics(
    trace: &TimeSeries,
    ref_before: f64,
    ref_after: f64,
    t_step: f64,
) -> Result<SpeedMetrics> {
    let step = ref_after - ref_before;
    if step == 0.0 {
        return Err(DriveError::Domain("reference step of zero size".into()));
    }
    if trace.is_empty() || trace.end_time() <= t_step || trace.t0 > t_step + trace.dt {
        return Err(DriveError::Range {
            start: t_step,
            end: trace.end_time(),
            t0: trace.t0,
            t_last: trace.end_time(),
        });
    }
    let norm = |x: f64| (x - ref_before) / step;
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|(t, _)| *t >= t_step - 1e-9 * trace.dt)
        .map(|(t, x)| (t, norm(x)))
        .collect();

    let crossing = |level: f64| -> Option<f64> {
        let i = pts.iter().position(|&(_, y)| y >= level)?;
        if i == 0 {
            return Some(pts[0].0);
        }
        let (t0, y0) = pts[i - 1];
        let (t1, y1) = pts[i];
        Some(t0 + (level - y0) / (y1 - y0) * (t1 - t0))
    };
    let rise_time = match (crossing(0.1), crossing(0.9)) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let reached = pts.iter().any(|&(_, y)| y >= 1.0 - 0.02);
    let overshoot = reached.then(|| pts.iter().fold(0.0f64, |m, &(_, y)| m.max(y - 1.0)));

    let settling_time = match pts.iter().rposition(|&(_, y)| (y - 1.0).abs() > 0.02) {
        None => Some(0.0),
        Some(i) if i + 1 < pts.len() => Some(pts[i + 1].0 - t_step),
        Some(_) => None,
    };

    let steady_state_error = pts.last().map(|&(_, y)| (1.0 - y).abs());

    Ok(SpeedMetrics {
        rise_time,
        settling_time,
        overshoot,
        steady_state_error,
    })
}
