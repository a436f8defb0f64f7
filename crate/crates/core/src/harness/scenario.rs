use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{compute_default_gains, FocConfig, PiGains};
use crate::machines::{im_torque_slip_curve, ImParams, SpmsmParams, TorqueSlipRow};
use crate::modulation::{DpwmConfig, HysteresisConfig, ModulatorConfig};
use crate::sim::SimClock;
use crate::{DriveError, Result};

/// Complete description of one closed-loop experiment. Every field can be
/// set from a TOML file; anything omitted takes the value of
/// [`reference_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Seconds of simulated time.
    pub duration: f64,
    /// `[t, ω_ref]` steps, rad/s, right-continuous.
    pub speed_schedule: Vec<[f64; 2]>,
    /// `[t, T_L]` steps, N·m, right-continuous.
    pub load_schedule: Vec<[f64; 2]>,
    pub sim: SimSettings,
    pub machine: SpmsmParams,
    pub inverter: InverterSettings,
    pub control: ControlSettings,
    pub modulators: ModulatorSettings,
    pub thd: ThdSettings,
    pub induction: InductionSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub dt: f64,
    pub t_pwm: f64,
    /// Speed, torque and voltage traces keep every `decimation`-th step.
    pub decimation: usize,
    /// Length of the gate-signal capture at the start of a run, s.
    pub gate_capture: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-6,
            t_pwm: 1e-4,
            decimation: 100,
            gate_capture: 5e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverterSettings {
    pub v_dc: f64,
}

impl Default for InverterSettings {
    fn default() -> Self {
        Self { v_dc: 400.0 }
    }
}

/// Cascade settings. Gains left unset are derived from the bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSettings {
    pub i_d_ref: f64,
    pub i_q_limit: f64,
    pub decoupling: bool,
    /// Current-loop bandwidth, Hz.
    pub f_cc: f64,
    /// Speed-loop bandwidth, Hz.
    pub f_sc: f64,
    pub speed_pi: Option<PiGains>,
    pub current_pi: Option<PiGains>,
    /// Overrides the per-modulator dq voltage cap, V.
    pub v_limit: Option<f64>,
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self {
            i_d_ref: 0.0,
            i_q_limit: DEFAULT_IQ_LIMIT,
            decoupling: true,
            f_cc: 1000.0,
            f_sc: 50.0,
            speed_pi: None,
            current_pi: None,
            v_limit: None,
        }
    }
}

/// q-axis current limit of the speed loop, A.
pub const DEFAULT_IQ_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulatorSettings {
    pub hysteresis_band: f64,
    pub dpwm_delta: f64,
    pub dpwm_phi: f64,
}

impl Default for ModulatorSettings {
    fn default() -> Self {
        Self {
            hysteresis_band: 0.1,
            dpwm_delta: 0.0,
            dpwm_phi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThdWindow {
    pub t_end: f64,
    pub n_cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThdSettings {
    pub windows: Vec<ThdWindow>,
    pub n_harmonics: usize,
    /// Fixed fundamental, Hz. When unset the fundamental follows the
    /// measured rotor speed.
    pub f1_hz: Option<f64>,
}

impl Default for ThdSettings {
    fn default() -> Self {
        Self {
            windows: vec![
                ThdWindow {
                    t_end: 0.8,
                    n_cycles: 10,
                },
                ThdWindow {
                    t_end: 1.9,
                    n_cycles: 10,
                },
            ],
            n_harmonics: 200,
            f1_hz: None,
        }
    }
}

/// Torque-slip sweep of the induction machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InductionSettings {
    pub params: ImParams,
    /// Phase voltage phasor magnitude, V.
    pub v_s: f64,
    /// Supply frequency, Hz.
    pub f_supply: f64,
    pub slip_min: f64,
    pub slip_points: usize,
}

impl Default for InductionSettings {
    fn default() -> Self {
        Self {
            params: ImParams::default(),
            v_s: 230.0,
            f_supply: 50.0,
            slip_min: 0.005,
            slip_points: 200,
        }
    }
}

impl InductionSettings {
    /// Evenly spaced slips from `slip_min` to 1.
    pub fn slip_grid(&self) -> Vec<f64> {
        let n = self.slip_points.max(1);
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|i| self.slip_min + (1.0 - self.slip_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn torque_slip_curve(&self) -> Result<Vec<TorqueSlipRow>> {
        self.params.validate()?;
        im_torque_slip_curve(
            &self.params,
            self.v_s,
            TAU * self.f_supply,
            &self.slip_grid(),
        )
    }
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        reference_scenario()
    }
}

/// Start-up at 100 rad/s under 5 N·m, a step to 300 rad/s at 0.3 s and a
/// load step to 8 N·m at 1 s, with THD taken over the ten cycles ending at
/// 0.8 s and 1.9 s.
pub fn reference_scenario() -> ScenarioSpec {
    ScenarioSpec {
        duration: 2.0,
        speed_schedule: vec![[0.0, 100.0], [0.3, 300.0]],
        load_schedule: vec![[0.0, 5.0], [1.0, 8.0]],
        sim: SimSettings::default(),
        machine: SpmsmParams::default(),
        inverter: InverterSettings::default(),
        control: ControlSettings::default(),
        modulators: ModulatorSettings::default(),
        thd: ThdSettings::default(),
        induction: InductionSettings::default(),
    }
}

/// Value of a right-continuous step schedule at `t`.
pub fn schedule_value(schedule: &[[f64; 2]], t: f64) -> f64 {
    schedule
        .iter()
        .take_while(|[ts, _]| *ts <= t)
        .last()
        .map(|[_, v]| *v)
        .unwrap_or(0.0)
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DriveError::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DriveError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// Coarser 5 µs step with the same carrier.
    pub fn fast(mut self) -> Self {
        self.sim.dt = 5e-6;
        self
    }

    pub fn speed_ref_at(&self, t: f64) -> f64 {
        schedule_value(&self.speed_schedule, t)
    }

    pub fn load_at(&self, t: f64) -> f64 {
        schedule_value(&self.load_schedule, t)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(DriveError::Config(m));
        SimClock::new(self.sim.dt, self.sim.t_pwm)?;
        self.machine.validate()?;
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return cfg_err(format!(
                "duration must be non-negative, got {}",
                self.duration
            ));
        }
        if self.sim.decimation == 0 {
            return cfg_err("decimation must be at least 1".into());
        }
        if !(self.inverter.v_dc > 0.0) {
            return cfg_err(format!("V_dc must be positive, got {}", self.inverter.v_dc));
        }
        for (name, sched) in [
            ("speed_schedule", &self.speed_schedule),
            ("load_schedule", &self.load_schedule),
        ] {
            match sched.first() {
                Some([t, _]) if *t == 0.0 => {}
                _ => return cfg_err(format!("{name} must start at t = 0")),
            }
            if sched.windows(2).any(|w| w[1][0] <= w[0][0]) {
                return cfg_err(format!("{name} must be strictly increasing in time"));
            }
            if sched.iter().flatten().any(|x| !x.is_finite()) {
                return cfg_err(format!("{name} has non-finite entries"));
            }
            if sched
                .last()
                .map(|[t, _]| *t > self.duration)
                .unwrap_or(false)
            {
                return cfg_err(format!("{name} extends past the duration"));
            }
        }
        for w in &self.thd.windows {
            if w.t_end > self.duration || w.n_cycles == 0 {
                return cfg_err(format!("THD window {w:?} is empty or past the duration"));
            }
        }
        if self.thd.n_harmonics < 2 {
            return cfg_err("thd.n_harmonics must be at least 2".into());
        }
        if let Some(f) = self.thd.f1_hz {
            if !(f > 0.0) {
                return cfg_err(format!("thd.f1_hz must be positive, got {f}"));
            }
        }
        Ok(())
    }

    pub fn modulator(&self, name: &str) -> Result<ModulatorConfig> {
        match name.to_ascii_lowercase().as_str() {
            "hcc" | "hysteresis" => Ok(ModulatorConfig::Hcc(HysteresisConfig {
                band: self.modulators.hysteresis_band,
            })),
            "spwm" => Ok(ModulatorConfig::Spwm),
            "dpwm" => Ok(ModulatorConfig::Dpwm(DpwmConfig {
                delta: self.modulators.dpwm_delta,
                phi: self.modulators.dpwm_phi,
            })),
            "svpwm" => Ok(ModulatorConfig::Svpwm),
            other => Err(DriveError::Config(format!("unknown modulator '{other}'"))),
        }
    }

    /// The four methods in the row order of the comparison table.
    pub fn standard_modulators(&self) -> Vec<ModulatorConfig> {
        ["hcc", "dpwm", "spwm", "svpwm"]
            .iter()
            .map(|n| self.modulator(n).expect("built-in modulator name"))
            .collect()
    }

    /// Controller settings resolved for one modulator: gains from the
    /// bandwidths unless given, the method's linear-range voltage cap, and
    /// a control period of one carrier period (one step for hysteresis).
    pub fn foc_config(&self, modulator: &ModulatorConfig) -> Result<FocConfig> {
        let c = &self.control;
        let gains = compute_default_gains(&self.machine, c.f_cc, c.f_sc, self.sim.t_pwm)?;
        let current = c.current_pi.unwrap_or(gains.current);
        let control_period = if modulator.is_carrier_based() {
            self.sim.t_pwm
        } else {
            self.sim.dt
        };
        let cfg = FocConfig {
            i_d_ref: c.i_d_ref,
            i_q_limit: c.i_q_limit,
            v_limit: c
                .v_limit
                .unwrap_or_else(|| modulator.voltage_limit(self.inverter.v_dc)),
            decoupling: c.decoupling,
            speed_pi: c.speed_pi.unwrap_or(gains.speed),
            id_pi: current,
            iq_pi: current,
            control_period,
        };
        cfg.validate(self.sim.dt)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenario_values() {
        let s = reference_scenario();
        assert_eq!(s.speed_ref_at(0.29), 100.0);
        assert_eq!(s.speed_ref_at(0.3), 300.0);
        assert_eq!(s.load_at(1.5), 8.0);
        assert_eq!(s.load_at(0.999), 5.0);
        assert_eq!(s.machine.r_s, 0.675);
        assert_eq!(s.machine.inductance, 0.000835);
        assert_eq!(s.machine.pole_pairs, 4);
        assert_eq!(s.machine.inertia, 0.01);
        assert_eq!(s.machine.lambda_m, 0.11);
        assert_eq!((s.sim.dt, s.sim.t_pwm), (1e-6, 1e-4));
        assert_eq!(s.duration, 2.0);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn foc_config_per_modulator() {
        let s = reference_scenario();
        let sv = s.foc_config(&ModulatorConfig::Svpwm).unwrap();
        assert!((sv.v_limit - 400.0 / 3f64.sqrt()).abs() < 1e-9);
        assert_eq!(sv.control_period, 1e-4);
        let hcc = s.foc_config(&s.modulator("hcc").unwrap()).unwrap();
        assert_eq!(hcc.v_limit, 200.0);
        assert_eq!(hcc.control_period, 1e-6);
        assert!((sv.iq_pi.kp - 5.2465).abs() < 1e-3);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let s = reference_scenario();
        assert_eq!(ScenarioSpec::from_toml_str(&s.to_toml()).unwrap(), s);

        let partial = "duration = 0.5\n[inverter]\nv_dc = 300.0\n[thd]\nwindows = [{ t_end = 0.4, n_cycles = 5 }]\n";
        let p = ScenarioSpec::from_toml_str(partial).unwrap();
        assert_eq!(p.duration, 0.5);
        assert_eq!(p.inverter.v_dc, 300.0);
        assert_eq!(p.machine, SpmsmParams::default());
        assert_eq!(p.thd.windows.len(), 1);
        assert!(
            p.validate().is_err(),
            "speed step at 0.3 s is inside 0.5 s, load step at 1 s is not"
        );

        assert!(ScenarioSpec::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn validation_catches_bad_schedules() {
        let mut s = reference_scenario();
        s.speed_schedule = vec![[0.1, 100.0]];
        assert!(s.validate().is_err());
        let mut s = reference_scenario();
        s.load_schedule = vec![[0.0, 5.0], [0.0, 8.0]];
        assert!(s.validate().is_err());
        let mut s = reference_scenario();
        s.sim.dt = 3e-6;
        assert!(s.validate().is_err());
    }

    #[test]
    fn slip_grid_spans_to_standstill() {
        let g = InductionSettings::default().slip_grid();
        assert_eq!(g.len(), 200);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
