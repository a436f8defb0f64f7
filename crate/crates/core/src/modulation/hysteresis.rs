use serde::{Deserialize, Serialize};

use super::SwitchState;
use crate::transforms::AbcVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisConfig {
    /// Half-width of the current band, A.
    pub band: f64,
}

impl Default for HysteresisConfig {
    fn default() -> Self {
        Self { band: 0.1 }
    }
}

/// Per-phase bang-bang switching on the current error `i_ref − i_meas`.
/// Inside the band the previous leg state is held.
pub fn hysteresis_step(
    i_ref: AbcVector,
    i_meas: AbcVector,
    band: f64,
    prev: SwitchState,
) -> SwitchState {
    let leg = |err: f64, prev: bool| {
        if err >= band {
            true
        } else if err <= -band {
            false
        } else {
            prev
        }
    };
    SwitchState {
        s_a: leg(i_ref.a - i_meas.a, prev.s_a),
        s_b: leg(i_ref.b - i_meas.b, prev.s_b),
        s_c: leg(i_ref.c - i_meas.c, prev.s_c),
    }
}
