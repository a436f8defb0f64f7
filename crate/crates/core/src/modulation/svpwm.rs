use std::f64::consts::FRAC_PI_3;

use super::SwitchState;
use crate::transforms::{AbcVector, AlphaBetaVector};
use crate::{DriveError, Result};

/// Dwell times of the two adjacent active vectors and the zero vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvpwmTimes {
    pub t1: f64,
    pub t2: f64,
    pub t0: f64,
    /// 1..=6, counter-clockwise from the α axis.
    pub sector: u8,
}

impl SvpwmTimes {
    pub fn period(&self) -> f64 {
        self.t1 + self.t2 + self.t0
    }
}

/// Active vector `V_k` (k = 1..=6); `V_1 = 100` on the α axis and each
/// successor rotated by 60°.
pub fn active_vector(k: u8) -> SwitchState {
    const BITS: [[u8; 3]; 6] = [
        [1, 0, 0],
        [1, 1, 0],
        [0, 1, 0],
        [0, 1, 1],
        [0, 0, 1],
        [1, 0, 1],
    ];
    SwitchState::from_bits(BITS[(k as usize + 5) % 6])
}

/// Sector of the reference angle; the zero vector falls in sector 1.
pub fn svpwm_sector(v: AlphaBetaVector) -> u8 {
    if v.alpha == 0.0 && v.beta == 0.0 {
        return 1;
    }
    let n = (v.angle() / FRAC_PI_3).floor() as i64;
    (n.clamp(0, 5) + 1) as u8
}

/// Dwell times for reference `v` (volts) in sector `n` over period `t_s`.
///
/// Fails with [`DriveError::OverModulation`] when the reference lies
/// outside the hexagon; the error carries the factor that brings it back
/// onto the boundary.
pub fn svpwm_times(v: AlphaBetaVector, v_dc: f64, t_s: f64, n: u8) -> Result<SvpwmTimes> {
    if !(v_dc > 0.0) {
        return Err(DriveError::Domain(format!(
            "V_dc must be positive, got {v_dc}"
        )));
    }
    if !(1..=6).contains(&n) {
        return Err(DriveError::Domain(format!("sector {n} outside 1..=6")));
    }
    let mag = v.magnitude();
    if mag == 0.0 {
        return Ok(SvpwmTimes {
            t1: 0.0,
            t2: 0.0,
            t0: t_s,
            sector: n,
        });
    }
    let theta = v.angle();
    let k = 3f64.sqrt() * t_s * mag / v_dc;
    let nf = n as f64;
    let mut t1 = k * (nf * FRAC_PI_3 - theta).sin();
    let mut t2 = k * (theta - (nf - 1.0) * FRAC_PI_3).sin();
    // wrap-around of sector 6 at θ → 2π and rounding at sector edges
    let tiny = 1e-12 * t_s;
    if t1 < -tiny || t2 < -tiny {
        return Err(DriveError::Domain(format!(
            "reference at {theta} rad is not in sector {n}"
        )));
    }
    t1 = t1.max(0.0);
    t2 = t2.max(0.0);

    let active = t1 + t2;
    if active > t_s * (1.0 + 1e-12) {
        return Err(DriveError::OverModulation {
            scale: t_s / active,
        });
    }
    if active > t_s {
        let s = t_s / active;
        t1 *= s;
        t2 *= s;
    }
    // make (t1 + t2) + t0 reproduce t_s bit-for-bit
    loop {
        let active = t1 + t2;
        let mut t0 = (t_s - active).max(0.0);
        while active + t0 > t_s {
            t0 = t0.next_down();
        }
        while active + t0 < t_s {
            t0 = t0.next_up();
        }
        if active + t0 == t_s {
            return Ok(SvpwmTimes {
                t1,
                t2,
                t0,
                sector: n,
            });
        }
        // rounding tie stepped over t_s; move the active time by one ulp
        if t1 >= t2 {
            t1 = t1.next_down();
        } else {
            t2 = t2.next_down();
        }
    }
}

/// Per-phase duty cycles of the symmetric seven-segment pattern: half the
/// zero time in each of V0 and V7, active vectors in between.
pub fn svpwm_duties(t: &SvpwmTimes) -> AbcVector {
    let period = t.period();
    let first = active_vector(t.sector);
    let second = active_vector(t.sector % 6 + 1);
    let leg = |on_first: bool, on_second: bool| {
        (t.t1 * f64::from(u8::from(on_first)) + t.t2 * f64::from(u8::from(on_second)) + 0.5 * t.t0)
            / period
    };
    AbcVector::new(
        leg(first.s_a, second.s_a),
        leg(first.s_b, second.s_b),
        leg(first.s_c, second.s_c),
    )
}

/// The seven segments of one carrier period: `0-1-2-7-2-1-0` in odd
/// sectors, `0-2-1-7-1-2-0` in even ones, so consecutive segments differ
/// in one leg.
pub fn svpwm_sequence(sector: u8) -> [SwitchState; 7] {
    let v0 = SwitchState::default();
    let v7 = SwitchState::new(true, true, true);
    let (x, y) = if sector % 2 == 1 {
        (active_vector(sector), active_vector(sector % 6 + 1))
    } else {
        (active_vector(sector % 6 + 1), active_vector(sector))
    };
    [v0, x, y, v7, y, x, v0]
}
