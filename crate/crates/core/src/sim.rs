//! Fixed-step time base, RK4 stepping and sampled-signal records.

use std::io::Write;

use crate::{DriveError, Result};

/// Relative tolerance used when snapping times onto the sample grid.
const GRID_EPS: f64 = 1e-9;

/// Simulation clock on a fixed `dt` grid with a carrier period `t_pwm`
/// that is an integer multiple of `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    step: u64,
    dt: f64,
    t_pwm: f64,
    steps_per_pwm: u64,
}

impl SimClock {
    pub fn new(dt: f64, t_pwm: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DriveError::Config(format!("dt must be positive, got {dt}")));
        }
        if !(t_pwm > 0.0 && t_pwm.is_finite()) {
            return Err(DriveError::Config(format!(
                "t_pwm must be positive, got {t_pwm}"
            )));
        }
        let steps_per_pwm = grid_multiple(t_pwm, dt).ok_or_else(|| {
            DriveError::Config(format!("t_pwm = {t_pwm} is not a multiple of dt = {dt}"))
        })?;
        Ok(Self {
            step: 0,
            dt,
            t_pwm,
            steps_per_pwm,
        })
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_pwm(&self) -> f64 {
        self.t_pwm
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn steps_per_pwm(&self) -> u64 {
        self.steps_per_pwm
    }

    /// True on the first step of every carrier period.
    pub fn at_pwm_boundary(&self) -> bool {
        self.step.is_multiple_of(self.steps_per_pwm)
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// Returns `Some(n)` when `period ≈ n·dt` for an integer `n ≥ 1`.
pub fn grid_multiple(period: f64, dt: f64) -> Option<u64> {
    let ratio = period / dt;
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= 1e-6 * n.max(1.0) {
        Some(n as u64)
    } else {
        None
    }
}

/// One classic explicit fourth-order Runge-Kutta step.
///
/// Any inputs captured by `derivative` are held constant across the step.
pub fn rk4_step<const N: usize, F>(derivative: F, state: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    check_finite(state)?;
    let k1 = derivative(state);
    check_finite(&k1)?;
    let k2 = derivative(&axpy(state, &k1, 0.5 * dt));
    check_finite(&k2)?;
    let k3 = derivative(&axpy(state, &k2, 0.5 * dt));
    check_finite(&k3)?;
    let k4 = derivative(&axpy(state, &k3, dt));
    check_finite(&k4)?;

    let mut next = *state;
    for i in 0..N {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check_finite(&next)?;
    Ok(next)
}

fn axpy<const N: usize>(x: &[f64; N], k: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *x;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += h * ki;
    }
    out
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(component) => Err(DriveError::Diverged {
            component,
            value: v[component],
        }),
        None => Ok(()),
    }
}

/// Uniformly sampled signal. Sample `i` sits at `t0 + i·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub dt: f64,
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, dt: f64, t0: f64) -> Self {
        Self {
            label: label.into(),
            dt,
            t0,
            samples: Vec::new(),
        }
    }

    pub fn from_samples(label: impl Into<String>, dt: f64, t0: f64, samples: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            dt,
            t0,
            samples,
        }
    }

    pub fn with_capacity(label: impl Into<String>, dt: f64, t0: f64, capacity: usize) -> Self {
        Self {
            label: label.into(),
            dt,
            t0,
            samples: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, value: f64) {
        self.samples.push(value);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    /// Exclusive end of the recorded span, `t0 + len·dt`.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len())
    }

    pub fn last(&self) -> Option<f64> {
        self.samples.last().copied()
    }

    /// Iterator over `(t, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.time_at(i), v))
    }

    /// Index of the first sample at or after `t`.
    fn index_at_or_after(&self, t: f64) -> usize {
        let x = (t - self.t0) / self.dt;
        (x - GRID_EPS * x.abs().max(1.0)).ceil().max(0.0) as usize
    }

    /// Contiguous sub-series covering `[t_start, t_end)`.
    pub fn extract_window(&self, t_start: f64, t_end: f64) -> Result<TimeSeries> {
        let range_err = || DriveError::Range {
            start: t_start,
            end: t_end,
            t0: self.t0,
            t_last: self.end_time(),
        };
        let tol = GRID_EPS * self.dt;
        if !(t_start < t_end) || t_start < self.t0 - tol || t_end > self.end_time() + tol {
            return Err(range_err());
        }
        let first = self.index_at_or_after(t_start);
        let last = self.index_at_or_after(t_end).min(self.samples.len());
        if first >= last {
            return Err(range_err());
        }
        Ok(TimeSeries {
            label: self.label.clone(),
            dt: self.dt,
            t0: self.time_at(first),
            samples: self.samples[first..last].to_vec(),
        })
    }

    /// CSV with header `t,<label>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,{}", self.label)?;
        for (t, v) in self.iter() {
            writeln!(w, "{},{}", format_time(t), v)?;
        }
        Ok(())
    }
}

/// Time stamps are written with 11 significant digits.
pub fn format_time(t: f64) -> String {
    format!("{t:.10e}")
}

/// Writes several equally sampled series side by side under a shared `t` column.
pub fn write_csv_columns<W: Write>(mut w: W, columns: &[&TimeSeries]) -> Result<()> {
    let Some(first) = columns.first() else {
        return Ok(());
    };
    write!(w, "t")?;
    for c in columns {
        write!(w, ",{}", c.label)?;
    }
    writeln!(w)?;
    let n = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..n {
        write!(w, "{}", format_time(first.time_at(i)))?;
        for c in columns {
            write!(w, ",{}", c.samples[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_zero_dynamics() {
        let x = [1.5, -2.0, 0.25];
        let next = rk4_step(|_| [0.0; 3], &x, 1e-3).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn rk4_constant_rate_is_exact() {
        let x = [1.0, 2.0];
        let c = [3.0, -0.5];
        let next = rk4_step(|_| c, &x, 0.01).unwrap();
        assert!((next[0] - 1.03).abs() < 1e-15);
        assert!((next[1] - 1.995).abs() < 1e-15);
    }

    #[test]
    fn rk4_exponential_decay() {
        let next = rk4_step(|x: &[f64; 1]| [-x[0]], &[1.0], 1e-3).unwrap();
        assert!((next[0] - (-1e-3f64).exp()).abs() < 1e-12);
        assert!((next[0] - 0.999_000_499_8).abs() < 1e-10);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        // dx/dt = -λx with λ = 100: at λ·dt = 1e-3 the local error sits
        // below f64 resolution, so the steps are scaled into view
        let lambda = 100.0;
        let err = |dt: f64| {
            let x = rk4_step(|x: &[f64; 1]| [-lambda * x[0]], &[1.0], dt).unwrap()[0];
            (x - (-lambda * dt).exp()).abs()
        };
        let (e1, e2, e3) = (err(1e-3), err(5e-4), err(2.5e-4));
        assert!(e1 / e2 >= 15.0, "{e1} / {e2}");
        assert!(e2 / e3 >= 15.0, "{e2} / {e3}");
    }

    #[test]
    fn rk4_reports_diverged_component() {
        let err =
            rk4_step(|x: &[f64; 2]| [0.0, 1.0 / (x[1] - 1.0)], &[0.0, 1.0], 1e-3).unwrap_err();
        assert_eq!(
            err,
            DriveError::Diverged {
                component: 1,
                value: f64::INFINITY
            }
        );
        assert!(rk4_step(|_| [0.0], &[f64::NAN], 1e-3).is_err());
    }

    #[test]
    fn clock_rejects_non_multiple_pwm() {
        assert!(SimClock::new(1e-6, 1e-4).is_ok());
        assert_eq!(SimClock::new(1e-6, 1e-4).unwrap().steps_per_pwm(), 100);
        assert_eq!(SimClock::new(5e-6, 1e-4).unwrap().steps_per_pwm(), 20);
        assert!(SimClock::new(3e-6, 1e-4).is_err());
        assert!(SimClock::new(0.0, 1e-4).is_err());
    }

    #[test]
    fn clock_time_has_no_drift() {
        let mut clock = SimClock::new(1e-6, 1e-4).unwrap();
        for _ in 0..300_000 {
            clock.advance();
        }
        assert_eq!(clock.t(), 0.3);
        assert!(clock.at_pwm_boundary());
    }

    fn ramp(n: usize, dt: f64) -> TimeSeries {
        TimeSeries::from_samples("x", dt, 0.0, (0..n).map(|i| i as f64).collect())
    }

    #[test]
    fn window_full_range_is_identity() {
        let s = ramp(50, 0.01);
        assert_eq!(s.extract_window(0.0, s.end_time()).unwrap(), s);
    }

    #[test]
    fn window_minimal_is_one_sample() {
        let s = ramp(50, 0.01);
        let w = s.extract_window(0.30 - 0.01, 0.30).unwrap();
        assert_eq!(w.samples, vec![29.0]);
        assert!((w.t0 - 0.29).abs() < 1e-12);
    }

    #[test]
    fn window_sample_count() {
        let s = TimeSeries::from_samples("i", 1e-6, 0.0, vec![0.0; 250_000]);
        assert_eq!(s.extract_window(0.1, 0.2).unwrap().len(), 100_000);
    }

    #[test]
    fn window_starts_at_or_after_t_start() {
        let s = ramp(50, 0.01);
        let w = s.extract_window(0.105, 0.2).unwrap();
        assert_eq!(w.samples[0], 11.0);
    }

    #[test]
    fn window_is_idempotent() {
        let s = ramp(1000, 1e-3);
        let w1 = s.extract_window(0.123, 0.456).unwrap();
        let w2 = w1.extract_window(0.123, 0.456).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn window_out_of_range() {
        let s = ramp(50, 0.01);
        assert!(matches!(
            s.extract_window(-0.1, 0.2),
            Err(DriveError::Range { .. })
        ));
        assert!(matches!(
            s.extract_window(0.1, 0.6),
            Err(DriveError::Range { .. })
        ));
        assert!(matches!(
            s.extract_window(0.2, 0.1),
            Err(DriveError::Range { .. })
        ));
    }

    #[test]
    fn csv_header_and_precision() {
        let s = TimeSeries::from_samples("omega_m", 1e-6, 0.123456789, vec![1.0, 2.5]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,omega_m"));
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        let t: f64 = row[0].parse().unwrap();
        assert!((t - 0.123457789).abs() < 1e-12);
        assert_eq!(row[1], "2.5");
    }
}
