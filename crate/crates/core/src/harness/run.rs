use crate::analysis::{
    fundamental_frequency, speed_metrics, thd_at_window, SpeedMetrics, WindowThd,
};
use crate::control::{CurrentController, SpeedController};
use crate::machines::{spmsm_derivatives, spmsm_torque, SpmsmState};
use crate::modulation::{
    carrier_refs, hysteresis_step, spwm_step, triangular_carrier, vsi_phase_voltages,
    CarrierConfig, ModulatorConfig, SwitchState,
};
use crate::sim::{grid_multiple, rk4_step, SimClock, TimeSeries};
use crate::transforms::{clarke, dq_to_abc, inverse_park, park, AbcVector, DqVector};
use crate::{DriveError, Result};

use super::scenario::{ScenarioSpec, ThdWindow};

/// Over-modulation lasting longer than this is flagged in the report.
const OVER_MODULATION_WARN: f64 = 10e-3;

/// Signals recorded during a run. Phase currents and the tracking error
/// are kept at every step; the mechanical and voltage traces are
/// decimated; gate and modulator-reference captures cover the first few
/// milliseconds only.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub i_a: TimeSeries,
    pub i_b: TimeSeries,
    pub i_c: TimeSeries,
    /// Largest per-phase deviation from the current reference, A.
    pub current_error: TimeSeries,
    pub omega_m: TimeSeries,
    pub torque: TimeSeries,
    pub i_q_ref: TimeSeries,
    /// Inverter output in the rotor frame, averaged over each decimation
    /// interval.
    pub v_d: TimeSeries,
    pub v_q: TimeSeries,
    pub gate_a: TimeSeries,
    pub gate_b: TimeSeries,
    pub gate_c: TimeSeries,
    pub ref_a: TimeSeries,
    pub ref_b: TimeSeries,
    pub ref_c: TimeSeries,
}

impl Traces {
    fn new(dt: f64, decimated_dt: f64, full: usize, decimated: usize, gates: usize) -> Self {
        let full_rate = |l: &str| TimeSeries::with_capacity(l, dt, 0.0, full);
        let slow = |l: &str| TimeSeries::with_capacity(l, decimated_dt, 0.0, decimated);
        let gate = |l: &str| TimeSeries::with_capacity(l, dt, 0.0, gates);
        Self {
            i_a: full_rate("i_a"),
            i_b: full_rate("i_b"),
            i_c: full_rate("i_c"),
            current_error: full_rate("current_error"),
            omega_m: slow("omega_m"),
            torque: slow("torque"),
            i_q_ref: slow("i_q_ref"),
            v_d: slow("v_d"),
            v_q: slow("v_q"),
            gate_a: gate("sa"),
            gate_b: gate("sb"),
            gate_c: gate("sc"),
            ref_a: gate("va_ref"),
            ref_b: gate("vb_ref"),
            ref_c: gate("vc_ref"),
        }
    }

    pub fn named(&self) -> Vec<&TimeSeries> {
        vec![
            &self.i_a,
            &self.i_b,
            &self.i_c,
            &self.current_error,
            &self.omega_m,
            &self.torque,
            &self.i_q_ref,
            &self.v_d,
            &self.v_q,
            &self.gate_a,
            &self.gate_b,
            &self.gate_c,
            &self.ref_a,
            &self.ref_b,
            &self.ref_c,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub window: ThdWindow,
    /// Whether the fundamental came from the rotor speed or a fixed value.
    pub f1_from_speed: bool,
    pub result: Result<WindowThd>,
}

impl WindowReport {
    pub fn thd(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|w| w.thd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t_step: f64,
    pub ref_before: f64,
    pub ref_after: f64,
    pub metrics: SpeedMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub modulator: ModulatorConfig,
    pub thd_per_window: Vec<WindowReport>,
    /// One entry per speed-schedule step that changes the reference.
    pub metrics: Vec<StepReport>,
    pub traces: Traces,
    pub final_state: SpmsmState,
    pub warnings: Vec<String>,
    /// Resolved scenario, modulator and controller settings as TOML.
    pub config_echo: String,
}

impl RunReport {
    pub fn name(&self) -> &'static str {
        self.modulator.name()
    }

    pub fn thd_values(&self) -> Vec<Option<f64>> {
        self.thd_per_window.iter().map(WindowReport::thd).collect()
    }

    pub fn rise_time_at(&self, t_step: f64) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| (m.t_step - t_step).abs() < 1e-12)
            .and_then(|m| m.metrics.rise_time)
    }
}

/// Step-index form of a schedule so lookups are exact on the grid.
fn schedule_steps(schedule: &[[f64; 2]], dt: f64) -> Vec<(u64, f64)> {
    schedule
        .iter()
        .map(|[t, v]| ((t / dt).round() as u64, *v))
        .collect()
}

fn value_at_step(schedule: &[(u64, f64)], k: u64) -> f64 {
    schedule
        .iter()
        .take_while(|(ks, _)| *ks <= k)
        .last()
        .map(|(_, v)| *v)
        .unwrap_or(0.0)
}

/// Runs the closed loop: speed PI → current PI (carrier methods) or
/// current references (hysteresis) → gate signals → inverter → machine.
pub fn run_scenario(spec: &ScenarioSpec, modulator: &ModulatorConfig) -> Result<RunReport> {
    spec.validate()?;
    modulator.validate()?;
    let foc = spec.foc_config(modulator)?;
    let p = spec.machine;
    let dt = spec.sim.dt;
    let t_pwm = spec.sim.t_pwm;
    let v_dc = spec.inverter.v_dc;
    let mut clock = SimClock::new(dt, t_pwm)?;
    let carrier = CarrierConfig::from_period(t_pwm);
    let n_steps = (spec.duration / dt).round() as u64;
    let ctrl_every = grid_multiple(foc.control_period, dt).expect("validated control period");
    let decimation = spec.sim.decimation as u64;
    let gate_steps = ((spec.sim.gate_capture / dt).round() as u64).min(n_steps);

    let speed_sched = schedule_steps(&spec.speed_schedule, dt);
    let load_sched = schedule_steps(&spec.load_schedule, dt);

    let full_len = if n_steps > 0 { n_steps as usize + 1 } else { 0 };
    let mut tr = Traces::new(
        dt,
        dt * decimation as f64,
        full_len,
        full_len / decimation as usize + 1,
        gate_steps as usize,
    );

    let mut speed_ctl = SpeedController::new(&foc);
    let mut current_ctl = CurrentController::new(&foc);
    let mut state = SpmsmState::default();
    let mut gates = SwitchState::default();
    let mut refs = AbcVector::default();
    let mut i_dq_ref = DqVector::new(foc.i_d_ref, 0.0);
    let mut v_avg = DqVector::default();
    let mut over_mod_since: Option<f64> = None;
    let mut over_mod_warned = false;
    let mut warnings = Vec::new();

    let record = |tr: &mut Traces, state: &SpmsmState, i_dq_ref: DqVector| {
        let i_abc = dq_to_abc(state.i_dq(), state.theta_e);
        let i_ref = dq_to_abc(i_dq_ref, state.theta_e);
        tr.i_a.push(i_abc.a);
        tr.i_b.push(i_abc.b);
        tr.i_c.push(i_abc.c);
        let err = (i_ref.a - i_abc.a)
            .abs()
            .max((i_ref.b - i_abc.b).abs())
            .max((i_ref.c - i_abc.c).abs());
        tr.current_error.push(err);
    };
    let record_slow = |tr: &mut Traces, state: &SpmsmState, i_dq_ref: DqVector, v: DqVector| {
        tr.omega_m.push(state.omega_m);
        tr.torque.push(spmsm_torque(state.i_dq(), &p));
        tr.i_q_ref.push(i_dq_ref.q);
        tr.v_d.push(v.d);
        tr.v_q.push(v.q);
    };

    while clock.step_index() < n_steps {
        let k = clock.step_index();
        let t = clock.t();
        let omega_ref = value_at_step(&speed_sched, k);
        let t_load = value_at_step(&load_sched, k);

        if k % ctrl_every == 0 {
            let tc = foc.control_period;
            i_dq_ref.q = speed_ctl.step(omega_ref, state.omega_m, tc);
            if modulator.is_carrier_based() {
                let omega_e = p.electrical_speed(state.omega_m);
                let v_dq = current_ctl.step(i_dq_ref, state.i_dq(), omega_e, &p, tc);
                let v_ab = inverse_park(v_dq, state.theta_e);
                let cr =
                    carrier_refs(modulator, v_ab, v_dc, t_pwm).expect("carrier-based modulator");
                refs = cr.refs;
                if cr.over_modulated {
                    let since = *over_mod_since.get_or_insert(t);
                    if !over_mod_warned && t + tc - since > OVER_MODULATION_WARN {
                        warnings.push(format!("sustained over-modulation from t = {since:.6} s"));
                        over_mod_warned = true;
                    }
                } else {
                    over_mod_since = None;
                }
            }
        }

        record(&mut tr, &state, i_dq_ref);

        gates = match modulator {
            ModulatorConfig::Hcc(h) => {
                let i_ref = dq_to_abc(i_dq_ref, state.theta_e);
                let i_meas = dq_to_abc(state.i_dq(), state.theta_e);
                hysteresis_step(i_ref, i_meas, h.band, gates)
            }
            _ => spwm_step(refs, triangular_carrier(t + 0.5 * dt, carrier)),
        };
        if k < gate_steps {
            tr.gate_a.push(f64::from(u8::from(gates.s_a)));
            tr.gate_b.push(f64::from(u8::from(gates.s_b)));
            tr.gate_c.push(f64::from(u8::from(gates.s_c)));
            tr.ref_a.push(refs.a);
            tr.ref_b.push(refs.b);
            tr.ref_c.push(refs.c);
        }

        let v_ab = clarke(vsi_phase_voltages(gates, v_dc));
        let applied = park(v_ab, state.theta_e);
        if k % decimation == 0 {
            record_slow(&mut tr, &state, i_dq_ref, v_avg);
            v_avg = DqVector::default();
        }
        v_avg.d += applied.d / decimation as f64;
        v_avg.q += applied.q / decimation as f64;

        let next = rk4_step(
            |x| {
                let s = SpmsmState {
                    i_d: x[0],
                    i_q: x[1],
                    omega_m: x[2],
                    theta_e: x[3],
                };
                spmsm_derivatives(&s, park(v_ab, x[3]), t_load, &p)
            },
            &state.to_array(),
            dt,
        )
        .map_err(|_| DriveError::DivergedAt {
            t,
            state: state.to_array().to_vec(),
        })?;
        state = SpmsmState::from_array(next);
        clock.advance();
    }
    if n_steps > 0 {
        record(&mut tr, &state, i_dq_ref);
        if n_steps.is_multiple_of(decimation) {
            record_slow(&mut tr, &state, i_dq_ref, v_avg);
        }
    }

    let thd_per_window = spec
        .thd
        .windows
        .iter()
        .map(|w| window_thd(spec, &tr, *w))
        .collect();
    let metrics = step_metrics(spec, &tr.omega_m);

    let config_echo = format!(
        "{}\n[resolved.modulator]\n{}\n[resolved.foc]\n{}",
        spec.to_toml(),
        toml::to_string(modulator).expect("modulator serializes"),
        toml::to_string(&foc).expect("controller settings serialize"),
    );

    Ok(RunReport {
        modulator: *modulator,
        thd_per_window,
        metrics,
        traces: tr,
        final_state: state,
        warnings,
        config_echo,
    })
}

/// THD of phase a over one configured window. The fundamental follows the
/// mean rotor speed across the window unless a fixed value is configured.
fn window_thd(spec: &ScenarioSpec, tr: &Traces, w: ThdWindow) -> WindowReport {
    let n_h = spec.thd.n_harmonics;
    if let Some(f1) = spec.thd.f1_hz {
        return WindowReport {
            window: w,
            f1_from_speed: false,
            result: thd_at_window(&tr.i_a, w.t_end, f1, w.n_cycles, n_h),
        };
    }
    let pp = spec.machine.pole_pairs;
    let result = (|| {
        let probe = tr
            .omega_m
            .extract_window((w.t_end - tr.omega_m.dt).max(0.0), w.t_end)?
            .samples[0];
        let f_guess = fundamental_frequency(probe.abs(), pp);
        if !(f_guess > 0.0) {
            return Err(DriveError::UndefinedFundamental);
        }
        let span = w.n_cycles as f64 / f_guess;
        let speed = tr
            .omega_m
            .extract_window((w.t_end - span).max(0.0), w.t_end)?;
        let mean = speed.samples.iter().sum::<f64>() / speed.len() as f64;
        thd_at_window(
            &tr.i_a,
            w.t_end,
            fundamental_frequency(mean.abs(), pp),
            w.n_cycles,
            n_h,
        )
    })();
    WindowReport {
        window: w,
        f1_from_speed: true,
        result,
    }
}

fn step_metrics(spec: &ScenarioSpec, omega: &TimeSeries) -> Vec<StepReport> {
    let sched = &spec.speed_schedule;
    let mut out = Vec::new();
    for (i, [t_step, after]) in sched.iter().enumerate() {
        let before = if i == 0 { 0.0 } else { sched[i - 1][1] };
        if before == *after {
            continue;
        }
        let t_next = sched.get(i + 1).map(|s| s[0]).unwrap_or(omega.end_time());
        let Ok(segment) = omega.extract_window(*t_step, t_next.min(omega.end_time())) else {
            continue;
        };
        if let Ok(metrics) = speed_metrics(&segment, before, *after, *t_step) {
            out.push(StepReport {
                t_step: *t_step,
                ref_before: before,
                ref_after: *after,
                metrics,
            });
        }
    }
    out
}
