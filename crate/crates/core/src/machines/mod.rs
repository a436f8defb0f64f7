//! Machine models: the SPMSM dq dynamics used in closed-loop runs and the
//! induction-motor per-phase steady-state circuit.

mod induction;
mod spmsm;

pub use induction::{
    im_output, im_slip, im_solve_circuit, im_torque_slip_curve, write_torque_slip_csv, ImOutput,
    ImParams, TorqueSlipRow,
};
pub use spmsm::{spmsm_derivatives, spmsm_torque, SpmsmParams, SpmsmState};
