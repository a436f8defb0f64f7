use serde::{Deserialize, Serialize};

use crate::transforms::{wrap_angle, DqVector};
use crate::{DriveError, Result};

/// Surface-mounted PMSM constants (L_d = L_q = `inductance`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpmsmParams {
    /// Stator resistance, Ω.
    pub r_s: f64,
    /// Stator inductance, H.
    pub inductance: f64,
    pub pole_pairs: u32,
    /// Permanent-magnet flux linkage, Wb.
    pub lambda_m: f64,
    /// Rotor inertia, kg·m².
    pub inertia: f64,
    /// Viscous friction, N·m·s/rad.
    pub friction: f64,
}

impl Default for SpmsmParams {
    fn default() -> Self {
        Self {
            r_s: 0.675,
            inductance: 0.000835,
            pole_pairs: 4,
            lambda_m: 0.11,
            inertia: 0.01,
            friction: 0.001,
        }
    }
}

impl SpmsmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_s > 0.0
            && self.inductance > 0.0
            && self.pole_pairs >= 1
            && self.lambda_m > 0.0
            && self.inertia > 0.0
            && self.friction >= 0.0
            && [
                self.r_s,
                self.inductance,
                self.lambda_m,
                self.inertia,
                self.friction,
            ]
            .iter()
            .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(DriveError::Config(format!(
                "invalid machine parameters: {self:?}"
            )))
        }
    }

    /// Torque per ampere of i_q, (3/2)·p·λ_m.
    pub fn torque_constant(&self) -> f64 {
        1.5 * self.pole_pairs as f64 * self.lambda_m
    }

    pub fn electrical_speed(&self, omega_m: f64) -> f64 {
        self.pole_pairs as f64 * omega_m
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpmsmState {
    pub i_d: f64,
    pub i_q: f64,
    /// Mechanical speed, rad/s.
    pub omega_m: f64,
    /// Electrical angle in `[0, 2π)`.
    pub theta_e: f64,
}

impl SpmsmState {
    pub fn to_array(self) -> [f64; 4] {
        [self.i_d, self.i_q, self.omega_m, self.theta_e]
    }

    /// Builds a state from an integrator vector, wrapping the angle.
    pub fn from_array(x: [f64; 4]) -> Self {
        Self {
            i_d: x[0],
            i_q: x[1],
            omega_m: x[2],
            theta_e: wrap_angle(x[3]),
        }
    }

    pub fn i_dq(&self) -> DqVector {
        DqVector::new(self.i_d, self.i_q)
    }
}

/// Electromagnetic torque with λ_d = λ_m + L·i_d and λ_q = L·i_q.
pub fn spmsm_torque(i_dq: DqVector, p: &SpmsmParams) -> f64 {
    let lambda_d = p.lambda_m + p.inductance * i_dq.d;
    let lambda_q = p.inductance * i_dq.q;
    1.5 * p.pole_pairs as f64 * (lambda_d * i_dq.q - lambda_q * i_dq.d)
}

/// Time derivatives `[di_d, di_q, dω_m, dθ_e]` of the rotor-frame model.
pub fn spmsm_derivatives(s: &SpmsmState, v_dq: DqVector, t_load: f64, p: &SpmsmParams) -> [f64; 4] {
    let omega_e = p.electrical_speed(s.omega_m);
    let l = p.inductance;
    let di_d = (v_dq.d - p.r_s * s.i_d + omega_e * l * s.i_q) / l;
    let di_q = (v_dq.q - p.r_s * s.i_q - omega_e * l * s.i_d - omega_e * p.lambda_m) / l;
    let t_e = spmsm_torque(s.i_dq(), p);
    let domega = (t_e - t_load - p.friction * s.omega_m) / p.inertia;
    [di_d, di_q, domega, omega_e]
}
