//! Scenario configuration, closed-loop runs and the modulator comparison.

mod compare;
mod run;
mod scenario;

pub use compare::{
    compare_modulators, write_comparison, write_report_csv, write_run_outputs, ComparisonReport,
    ComparisonRow,
};
pub use run::{run_scenario, RunReport, StepReport, Traces, WindowReport};
pub use scenario::{
    reference_scenario, schedule_value, ControlSettings, InductionSettings, InverterSettings,
    ModulatorSettings, ScenarioSpec, SimSettings, ThdSettings, ThdWindow, DEFAULT_IQ_LIMIT,
};
