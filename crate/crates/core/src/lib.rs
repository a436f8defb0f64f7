//! Field-oriented control of a surface-mounted PMSM driven through a
//! two-level voltage-source inverter, with four interchangeable switching
//! techniques (hysteresis, SPWM, DPWM, SVPWM) and the spectral tooling used
//! to compare them.
//!
//! The crate is organised bottom-up:
//!
//! - [`sim`]: fixed-step time base, RK4 stepping and uniformly sampled series.
//! - [`transforms`]: Clarke / Park frame changes.
//! - [`machines`]: SPMSM dq dynamics and induction-motor steady-state circuit.
//! - [`control`]: PI regulators and the speed/current cascade.
//! - [`modulation`]: the inverter and its four gate-signal generators.
//! - [`analysis`]: DFT, THD and step-response metrics.
//! - [`harness`]: scenario configuration, closed-loop runs and comparisons.

// NaN must fail range checks, so `!(x > 0.0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod control;
pub mod error;
pub mod harness;
pub mod machines;
pub mod modulation;
pub mod sim;
pub mod transforms;

pub use error::{DriveError, Result};
