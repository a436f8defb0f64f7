use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{DriveError, Result};

/// Per-phase equivalent-circuit constants, rotor quantities referred to
/// the stator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImParams {
    pub r_s: f64,
    pub r_r: f64,
    pub l_ls: f64,
    pub l_lr: f64,
    pub l_m: f64,
    pub pole_pairs: u32,
}

impl Default for ImParams {
    fn default() -> Self {
        Self {
            r_s: 0.5,
            r_r: 0.4,
            l_ls: 2.0e-3,
            l_lr: 2.0e-3,
            l_m: 70.0e-3,
            pole_pairs: 2,
        }
    }
}

impl ImParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.r_s, self.r_r, self.l_ls, self.l_lr, self.l_m];
        if vals.iter().all(|v| *v > 0.0 && v.is_finite()) && self.pole_pairs >= 1 {
            Ok(())
        } else {
            Err(DriveError::Domain(format!(
                "invalid induction-motor parameters: {self:?}"
            )))
        }
    }
}

/// Slip from electrical supply speed and mechanical rotor speed.
pub fn im_slip(omega_e: f64, omega_r: f64, pole_pairs: u32) -> Result<f64> {
    if omega_e == 0.0 {
        return Err(DriveError::DivisionByZero("slip at zero supply frequency"));
    }
    Ok((omega_e - pole_pairs as f64 * omega_r) / omega_e)
}

fn check_slip(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(DriveError::Domain(format!("slip {s} outside (0, 1]")))
    }
}

/// Stator and rotor phasor currents `(I, I_r)` of the per-phase circuit
/// driven by `v_s` at `omega_e`.
pub fn im_solve_circuit(
    v_s: Complex64,
    omega_e: f64,
    slip: f64,
    p: &ImParams,
) -> Result<(Complex64, Complex64)> {
    check_slip(slip)?;
    if !(omega_e > 0.0) {
        return Err(DriveError::Domain(format!(
            "omega_e must be positive, got {omega_e}"
        )));
    }
    p.validate()?;
    let j = Complex64::i();
    let z_m = j * omega_e * p.l_m;
    let z_s = p.r_s + j * omega_e * p.l_ls;
    let z_r = p.r_r / slip + j * omega_e * p.l_lr;
    // eliminate I_r through the rotor loop, then solve the stator loop
    let z_rm = z_r + z_m;
    if z_rm.norm() == 0.0 {
        return Err(DriveError::Domain("singular rotor loop".into()));
    }
    let z_in = z_s + z_m - z_m * z_m / z_rm;
    if z_in.norm() <= f64::EPSILON * (z_s + z_m).norm() {
        return Err(DriveError::Domain("singular circuit".into()));
    }
    let i_s = v_s / z_in;
    let i_r = -z_m * i_s / z_rm;
    Ok((i_s, i_r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImOutput {
    pub p_out: f64,
    pub torque: f64,
}

/// Air-gap power converted to mechanical power and the resulting torque.
/// Torque divides by the electrical speed.
pub fn im_output(i_r: Complex64, slip: f64, r_r: f64, omega_e: f64) -> Result<ImOutput> {
    check_slip(slip)?;
    if omega_e == 0.0 {
        return Err(DriveError::DivisionByZero(
            "torque at zero supply frequency",
        ));
    }
    let p_out = 3.0 * i_r.norm_sqr() * r_r * (1.0 - slip) / slip;
    Ok(ImOutput {
        p_out,
        torque: p_out / omega_e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueSlipRow {
    pub slip: f64,
    pub torque: f64,
    pub p_out: f64,
    /// Stator current magnitude.
    pub i_mag: f64,
}

pub fn im_torque_slip_curve(
    p: &ImParams,
    v_s: f64,
    omega_e: f64,
    slip_grid: &[f64],
) -> Result<Vec<TorqueSlipRow>> {
    slip_grid
        .iter()
        .map(|&slip| {
            let tag = |e: DriveError| DriveError::Domain(format!("at S = {slip}: {e}"));
            let (i_s, i_r) =
                im_solve_circuit(Complex64::new(v_s, 0.0), omega_e, slip, p).map_err(tag)?;
            let out = im_output(i_r, slip, p.r_r, omega_e).map_err(tag)?;
            Ok(TorqueSlipRow {
                slip,
                torque: out.torque,
                p_out: out.p_out,
                i_mag: i_s.norm(),
            })
        })
        .collect()
}

pub fn write_torque_slip_csv<W: Write>(mut w: W, rows: &[TorqueSlipRow]) -> Result<()> {
    writeln!(w, "S,Te,Pout,I_mag")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.slip, r.torque, r.p_out, r.i_mag)?;
    }
    Ok(())
}
