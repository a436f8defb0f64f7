use serde::{Deserialize, Serialize};

use super::SwitchState;
use crate::transforms::AbcVector;

/// Symmetric triangular carrier with unit amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierConfig {
    pub frequency: f64,
}

impl CarrierConfig {
    pub fn from_period(t_pwm: f64) -> Self {
        Self {
            frequency: 1.0 / t_pwm,
        }
    }
}

/// −1 at the start of each period, +1 at the half period.
pub fn triangular_carrier(t: f64, cfg: CarrierConfig) -> f64 {
    let phase = (t * cfg.frequency).rem_euclid(1.0);
    if phase < 0.5 {
        -1.0 + 4.0 * phase
    } else {
        3.0 - 4.0 * phase
    }
}

/// Upper leg on wherever the normalised reference exceeds the carrier.
pub fn spwm_step(v_ref_norm: AbcVector, carrier: f64) -> SwitchState {
    SwitchState {
        s_a: v_ref_norm.a > carrier,
        s_b: v_ref_norm.b > carrier,
        s_c: v_ref_norm.c > carrier,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpwmConfig {
    /// Modulation phase angle, rad.
    pub delta: f64,
    /// Load power-factor angle, rad.
    pub phi: f64,
}

/// Clamp selector: 1 clamps the most positive phase to the positive rail,
/// 0 clamps the most negative phase to the negative rail. sgn(0) is +1.
pub fn dpwm_alpha(omega_t: f64, cfg: &DpwmConfig) -> f64 {
    if (3.0 * (omega_t + cfg.delta + cfg.phi)).cos() >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Adds the discontinuous zero-sequence signal to balanced normalised
/// references. `omega_t` is the angle of the reference vector.
pub fn dpwm_modified_refs(v_ref_norm: AbcVector, omega_t: f64, cfg: &DpwmConfig) -> AbcVector {
    let alpha = dpwm_alpha(omega_t, cfg);
    let v_zs = alpha * (1.0 - v_ref_norm.max()) + (1.0 - alpha) * (-1.0 - v_ref_norm.min());
    v_ref_norm.map(|x| x + v_zs)
}
