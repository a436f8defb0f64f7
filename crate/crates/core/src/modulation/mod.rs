//! Two-level voltage-source inverter and the four gate-signal generators
//! that drive it.
//!
//! Carrier-based methods (SPWM, DPWM, SVPWM) all reduce to a per-phase
//! normalised comparison reference in `[-1, 1]` that is held for one
//! carrier period and compared against the shared triangular carrier.
//! Hysteresis control bypasses the current regulator and switches each leg
//! directly from the phase-current error.

mod carrier;
mod hysteresis;
mod inverter;
mod svpwm;

use serde::{Deserialize, Serialize};

pub use carrier::{
    dpwm_alpha, dpwm_modified_refs, spwm_step, triangular_carrier, CarrierConfig, DpwmConfig,
};
pub use hysteresis::{hysteresis_step, HysteresisConfig};
pub use inverter::{vsi_phase_voltages, SwitchState};
pub use svpwm::{
    active_vector, svpwm_duties, svpwm_sector, svpwm_sequence, svpwm_times, SvpwmTimes,
};

use crate::transforms::{inverse_clarke, AbcVector, AlphaBetaVector};
use crate::Result;

/// Which switching technique drives the inverter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModulatorConfig {
    Hcc(HysteresisConfig),
    Spwm,
    Dpwm(DpwmConfig),
    Svpwm,
}

impl ModulatorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModulatorConfig::Hcc(_) => "hcc",
            ModulatorConfig::Spwm => "spwm",
            ModulatorConfig::Dpwm(_) => "dpwm",
            ModulatorConfig::Svpwm => "svpwm",
        }
    }

    pub fn is_carrier_based(&self) -> bool {
        !matches!(self, ModulatorConfig::Hcc(_))
    }

    /// Largest dq voltage magnitude the current loop may request: the
    /// linear range of the method.
    pub fn voltage_limit(&self, v_dc: f64) -> f64 {
        match self {
            ModulatorConfig::Hcc(_) | ModulatorConfig::Spwm => v_dc / 2.0,
            ModulatorConfig::Dpwm(_) | ModulatorConfig::Svpwm => v_dc / 3f64.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModulatorConfig::Hcc(h) if !(h.band > 0.0) => Err(crate::DriveError::Config(format!(
                "hysteresis band must be positive, got {}",
                h.band
            ))),
            ModulatorConfig::Dpwm(d) if !(d.delta.is_finite() && d.phi.is_finite()) => Err(
                crate::DriveError::Config("DPWM angles must be finite".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Normalised comparison references for one carrier period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierRefs {
    pub refs: AbcVector,
    /// The request lay outside the method's linear range and was scaled
    /// or clipped.
    pub over_modulated: bool,
}

/// Maps a stationary-frame voltage request (volts) to per-phase comparison
/// references for the carrier-based methods. Returns `None` for hysteresis.
pub fn carrier_refs(
    modulator: &ModulatorConfig,
    v: AlphaBetaVector,
    v_dc: f64,
    t_pwm: f64,
) -> Option<CarrierRefs> {
    let half = v_dc / 2.0;
    let out = match modulator {
        ModulatorConfig::Hcc(_) => return None,
        ModulatorConfig::Spwm => {
            let refs = inverse_clarke(AlphaBetaVector::new(v.alpha, v.beta)).map(|x| x / half);
            let over = refs.max() > 1.0 || refs.min() < -1.0;
            CarrierRefs {
                refs: refs.map(|x| x.clamp(-1.0, 1.0)),
                over_modulated: over,
            }
        }
        ModulatorConfig::Dpwm(cfg) => {
            let raw = inverse_clarke(AlphaBetaVector::new(v.alpha, v.beta)).map(|x| x / half);
            let over = raw.max() - raw.min() > 2.0;
            let refs = dpwm_modified_refs(raw, v.angle(), cfg);
            CarrierRefs {
                refs: refs.map(|x| x.clamp(-1.0, 1.0)),
                over_modulated: over,
            }
        }
        ModulatorConfig::Svpwm => {
            let mut v = AlphaBetaVector::new(v.alpha, v.beta);
            let sector = svpwm_sector(v);
            let (times, over) = match svpwm_times(v, v_dc, t_pwm, sector) {
                Ok(t) => (t, false),
                Err(crate::DriveError::OverModulation { scale }) => {
                    v = v.scale(scale);
                    let t = svpwm_times(v, v_dc, t_pwm, sector)
                        .expect("rescaled reference lies on the hexagon");
                    (t, true)
                }
                Err(e) => unreachable!("svpwm_times on its own sector: {e}"),
            };
            let d = svpwm_duties(&times);
            CarrierRefs {
                refs: d.map(|x| 2.0 * x - 1.0),
                over_modulated: over,
            }
        }
    };
    Some(out)
}

/// Largest balanced reference amplitude (volts, phase peak) that SPWM
/// reproduces without clipping, found by sweeping the amplitude upward in
/// steps of `step` volts and checking every whole-degree angle.
pub fn spwm_linear_limit(v_dc: f64, step: f64) -> f64 {
    sweep_amplitude(step, |v| {
        let refs = inverse_clarke(v).map(|x| x / (v_dc / 2.0));
        refs.max() <= 1.0 && refs.min() >= -1.0
    })
}

/// Same sweep for SVPWM: the largest amplitude for which every angle has
/// valid dwell times.
pub fn svpwm_linear_limit(v_dc: f64, step: f64) -> f64 {
    sweep_amplitude(step, |v| svpwm_times(v, v_dc, 1.0, svpwm_sector(v)).is_ok())
}

fn sweep_amplitude(step: f64, linear: impl Fn(AlphaBetaVector) -> bool) -> f64 {
    let angles: Vec<f64> = (0..360).map(|d| (d as f64).to_radians()).collect();
    let mut best = 0.0;
    for k in 1.. {
        let amp = k as f64 * step;
        let ok = angles
            .iter()
            .all(|th| linear(AlphaBetaVector::new(amp * th.cos(), amp * th.sin())));
        if !ok {
            break;
        }
        best = amp;
    }
    best
}
