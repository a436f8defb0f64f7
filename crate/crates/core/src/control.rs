//! PI regulators and the speed (outer) / current (inner) cascade that turns
//! a speed command into rotor-frame voltage references.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::machines::SpmsmParams;
use crate::transforms::DqVector;
use crate::{DriveError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

/// Forward-Euler PI with output clamp and conditional-integration
/// anti-windup: the integrator only advances on unclamped steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiController {
    pub kp: f64,
    pub ki: f64,
    pub integrator: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl PiController {
    pub fn new(gains: PiGains, out_min: f64, out_max: f64) -> Self {
        assert!(out_min < out_max, "PI clamp must satisfy out_min < out_max");
        Self {
            kp: gains.kp,
            ki: gains.ki,
            integrator: 0.0,
            out_min,
            out_max,
        }
    }

    pub fn symmetric(gains: PiGains, limit: f64) -> Self {
        Self::new(gains, -limit, limit)
    }

    /// Unclamped output for `error` without touching the state.
    pub fn unclamped(&self, error: f64) -> f64 {
        self.kp * error + self.integrator
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.out_min, self.out_max)
    }

    pub fn is_clamped(&self, u: f64) -> bool {
        u < self.out_min || u > self.out_max
    }

    pub fn integrate(&mut self, error: f64, dt: f64) {
        self.integrator += self.ki * error * dt;
    }

    pub fn step(&mut self, error: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let u = self.unclamped(error);
        if !self.is_clamped(u) {
            self.integrate(error, dt);
        }
        self.clamp(u)
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
    }
}

/// Controller settings for the speed/current cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocConfig {
    pub i_d_ref: f64,
    /// Symmetric clamp on the speed loop's i_q demand, A.
    pub i_q_limit: f64,
    /// Magnitude cap on the dq voltage reference, V.
    pub v_limit: f64,
    pub decoupling: bool,
    pub speed_pi: PiGains,
    pub id_pi: PiGains,
    pub iq_pi: PiGains,
    /// Seconds between controller updates.
    pub control_period: f64,
}

impl FocConfig {
    pub fn validate(&self, dt: f64) -> Result<()> {
        if !(self.i_q_limit > 0.0 && self.v_limit > 0.0) {
            return Err(DriveError::Config(format!(
                "i_q_limit and v_limit must be positive (got {}, {})",
                self.i_q_limit, self.v_limit
            )));
        }
        if crate::sim::grid_multiple(self.control_period, dt).is_none() {
            return Err(DriveError::Config(format!(
                "control period {} is not a multiple of dt = {dt}",
                self.control_period
            )));
        }
        Ok(())
    }
}

/// Outer loop: speed error to q-axis current demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedController {
    pub pi: PiController,
}

impl SpeedController {
    pub fn new(cfg: &FocConfig) -> Self {
        Self {
            pi: PiController::symmetric(cfg.speed_pi, cfg.i_q_limit),
        }
    }

    pub fn step(&mut self, omega_ref: f64, omega_m: f64, dt: f64) -> f64 {
        self.pi.step(omega_ref - omega_m, dt)
    }
}

/// Inner loop: dq current errors to dq voltage references, with optional
/// back-EMF and cross-coupling feedforward and an angle-preserving
/// magnitude limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentController {
    pub d: PiController,
    pub q: PiController,
    pub decoupling: bool,
    pub v_limit: f64,
    /// Whether the last step hit the voltage limit.
    pub saturated: bool,
}

impl CurrentController {
    pub fn new(cfg: &FocConfig) -> Self {
        // the vector magnitude limit is the only clamp on this loop
        Self {
            d: PiController::symmetric(cfg.id_pi, f64::INFINITY),
            q: PiController::symmetric(cfg.iq_pi, f64::INFINITY),
            decoupling: cfg.decoupling,
            v_limit: cfg.v_limit,
            saturated: false,
        }
    }

    pub fn step(
        &mut self,
        i_ref: DqVector,
        i_meas: DqVector,
        omega_e: f64,
        params: &SpmsmParams,
        dt: f64,
    ) -> DqVector {
        let e_d = i_ref.d - i_meas.d;
        let e_q = i_ref.q - i_meas.q;
        let u_d = self.d.unclamped(e_d);
        let u_q = self.q.unclamped(e_q);

        let (ff_d, ff_q) = if self.decoupling {
            let l = params.inductance;
            (
                -omega_e * l * i_meas.q,
                omega_e * (l * i_meas.d + params.lambda_m),
            )
        } else {
            (0.0, 0.0)
        };
        let mut v = DqVector::new(self.d.clamp(u_d) + ff_d, self.q.clamp(u_q) + ff_q);
        let mag = v.magnitude();
        self.saturated = mag > self.v_limit;
        if self.saturated {
            v = v.scale(self.v_limit / mag);
        }

        if !self.saturated && !self.d.is_clamped(u_d) {
            self.d.integrate(e_d, dt);
        }
        if !self.saturated && !self.q.is_clamped(u_q) {
            self.q.integrate(e_q, dt);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGains {
    pub speed: PiGains,
    pub current: PiGains,
}

/// Pole-zero-cancelling current-loop gains for bandwidth `f_cc` and a
/// speed-loop PI for bandwidth `f_sc`, with its zero a fifth of the way
/// down.
pub fn compute_default_gains(
    p: &SpmsmParams,
    f_cc: f64,
    f_sc: f64,
    t_pwm: f64,
) -> Result<ControlGains> {
    if !(f_cc >= 0.0 && f_sc >= 0.0) {
        return Err(DriveError::Config("bandwidths must be non-negative".into()));
    }
    if f_sc > f_cc / 10.0 {
        return Err(DriveError::Config(format!(
            "speed bandwidth {f_sc} Hz exceeds a tenth of the current bandwidth {f_cc} Hz"
        )));
    }
    if f_cc > 1.0 / (10.0 * t_pwm) * (1.0 + 1e-12) {
        return Err(DriveError::Config(format!(
            "current bandwidth {f_cc} Hz exceeds a tenth of the switching frequency"
        )));
    }
    let w_cc = TAU * f_cc;
    let w_sc = TAU * f_sc;
    let speed_kp = p.inertia * w_sc / p.torque_constant();
    Ok(ControlGains {
        speed: PiGains {
            kp: speed_kp,
            ki: speed_kp * w_sc / 5.0,
        },
        current: PiGains {
            kp: p.inductance * w_cc,
            ki: p.r_s * w_cc,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gains(kp: f64, ki: f64) -> PiGains {
        PiGains { kp, ki }
    }

    #[test]
    fn proportional_only() {
        let mut pi = PiController::symmetric(gains(2.0, 0.0), 10.0);
        assert_eq!(pi.step(1.5, 1e-3), 3.0);
    }

    #[test]
    fn integral_only_reaches_analytic_value() {
        let mut pi = PiController::symmetric(gains(0.0, 10.0), 10.0);
        let dt = 1e-4;
        let mut out = 0.0;
        for _ in 0..=1000 {
            out = pi.step(1.0, dt);
        }
        assert!((out - 1.0).abs() < 1e-9, "{out}");
    }

    #[test]
    fn clamp_freezes_integrator() {
        let mut pi = PiController::symmetric(gains(1.0, 5.0), 1.0);
        pi.integrator = 0.3;
        assert_eq!(pi.step(1e6, 1e-3), 1.0);
        assert_eq!(pi.integrator, 0.3);
    }

    fn foc(kp_speed: f64, i_q_limit: f64) -> FocConfig {
        FocConfig {
            i_d_ref: 0.0,
            i_q_limit,
            v_limit: 200.0,
            decoupling: true,
            speed_pi: gains(kp_speed, 10.0),
            id_pi: gains(5.0, 4000.0),
            iq_pi: gains(5.0, 4000.0),
            control_period: 1e-4,
        }
    }

    #[test]
    fn speed_loop_cases() {
        let mut c = SpeedController::new(&foc(4.0, 20.0));
        c.pi.integrator = 2.5;
        assert_eq!(c.step(100.0, 100.0, 1e-4), 2.5);

        let mut c = SpeedController::new(&FocConfig {
            speed_pi: PiGains::default(),
            ..foc(0.0, 20.0)
        });
        assert_eq!(c.step(300.0, 100.0, 1e-4), 0.0);

        // unsaturated demand 3·limit
        let mut c = SpeedController::new(&foc(1.0, 20.0));
        assert_eq!(c.step(60.0, 0.0, 1e-4), 20.0);
        assert_eq!(c.pi.integrator, 0.0);
    }

    #[test]
    fn current_loop_feedforward_only() {
        let p = SpmsmParams::default();
        let mut c = CurrentController::new(&foc(1.0, 20.0));
        c.d.integrator = 3.0;
        c.q.integrator = -2.0;
        let we = 400.0;
        let v = c.step(DqVector::default(), DqVector::default(), we, &p, 1e-4);
        assert!((v.d - 3.0).abs() < 1e-12);
        assert!((v.q - (-2.0 + we * p.lambda_m)).abs() < 1e-12);
    }

    #[test]
    fn current_loop_disabled() {
        let p = SpmsmParams::default();
        let mut cfg = foc(1.0, 20.0);
        cfg.decoupling = false;
        cfg.id_pi = PiGains::default();
        cfg.iq_pi = PiGains::default();
        let mut c = CurrentController::new(&cfg);
        let v = c.step(
            DqVector::new(1.0, 5.0),
            DqVector::new(-2.0, 0.5),
            900.0,
            &p,
            1e-4,
        );
        assert_eq!(v, DqVector::default());
    }

    #[test]
    fn current_loop_angle_preserving_clamp() {
        let p = SpmsmParams::default();
        let mut cfg = foc(1.0, 20.0);
        cfg.decoupling = false;
        cfg.v_limit = 100.0;
        cfg.id_pi = gains(1.0, 0.0);
        cfg.iq_pi = gains(1.0, 0.0);
        let mut c = CurrentController::new(&cfg);
        // demand ‖v‖ = 200 at 30°
        let a = 30f64.to_radians();
        let demand = DqVector::new(200.0 * a.cos(), 200.0 * a.sin());
        let v = c.step(demand, DqVector::default(), 0.0, &p, 1e-4);
        assert!((v.magnitude() - 100.0).abs() < 1e-9);
        assert!((v.q.atan2(v.d) - a).abs() < 1e-12);
        assert!(c.saturated);
    }

    #[test]
    fn saturated_current_loop_does_not_integrate() {
        let p = SpmsmParams::default();
        let mut c = CurrentController::new(&foc(1.0, 20.0));
        c.step(
            DqVector::new(0.0, 100.0),
            DqVector::default(),
            1200.0,
            &p,
            1e-4,
        );
        assert!(c.saturated);
        assert_eq!(c.q.integrator, 0.0);
    }

    #[test]
    fn default_gains_table1() {
        let p = SpmsmParams::default();
        let g = compute_default_gains(&p, 1000.0, 50.0, 1e-4).unwrap();
        assert!((g.current.kp - 5.2465).abs() < 1e-3);
        assert!((g.current.ki - 4241.15).abs() < 0.1);
        let expect_speed = 0.01 * TAU * 50.0 / 0.66;
        assert!((g.speed.kp - expect_speed).abs() < 1e-12);
        assert!((g.speed.ki - expect_speed * TAU * 50.0 / 5.0).abs() < 1e-9);

        let z = compute_default_gains(&p, 0.0, 0.0, 1e-4).unwrap();
        assert_eq!(z.current, PiGains::default());
        assert_eq!(z.speed, PiGains::default());

        let g2 = compute_default_gains(&p, 500.0, 10.0, 1e-4).unwrap();
        let g4 = compute_default_gains(&p, 1000.0, 10.0, 1e-4).unwrap();
        assert!((g4.current.kp - 2.0 * g2.current.kp).abs() < 1e-12);
        assert!((g4.current.ki - 2.0 * g2.current.ki).abs() < 1e-9);
    }

    #[test]
    fn default_gains_bandwidth_ladder() {
        let p = SpmsmParams::default();
        assert!(compute_default_gains(&p, 1000.0, 150.0, 1e-4).is_err());
        assert!(compute_default_gains(&p, 2000.0, 50.0, 1e-4).is_err());
    }

    proptest! {
        #[test]
        fn anti_windup_bounds(
            kp in 0.0..10.0f64,
            ki in 0.0..1e4f64,
            errors in proptest::collection::vec(-100.0..100.0f64, 1..400),
        ) {
            let dt = 1e-4;
            let mut pi = PiController::new(PiGains { kp, ki }, -2.0, 5.0);
            let e_max = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            let bound = (pi.out_max - pi.out_min) + (ki * e_max * dt).abs();
            for e in errors {
                let y = pi.step(e, dt);
                prop_assert!((pi.out_min..=pi.out_max).contains(&y));
                prop_assert!(pi.integrator.abs() <= bound + 1e-9);
            }
        }
    }
}
