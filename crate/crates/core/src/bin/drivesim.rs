use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use drivesim::harness::{
    compare_modulators, run_scenario, write_comparison, write_run_outputs, RunReport, ScenarioSpec,
};
use drivesim::machines::write_torque_slip_csv;
use drivesim::{DriveError, Result};

#[derive(Parser)]
#[command(
    name = "drivesim",
    version,
    about = "Closed-loop PMSM drive simulation and inverter switching comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Modulator {
    Hcc,
    Spwm,
    Dpwm,
    Svpwm,
}

impl Modulator {
    fn name(self) -> &'static str {
        match self {
            Modulator::Hcc => "hcc",
            Modulator::Spwm => "spwm",
            Modulator::Dpwm => "dpwm",
            Modulator::Svpwm => "svpwm",
        }
    }
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// TOML scenario file; the built-in scenario when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use a 5 µs integration step
    #[arg(long)]
    fast: bool,
    /// Fixed THD fundamental in Hz instead of the rotor-speed estimate
    #[arg(long = "thd-f1")]
    thd_f1: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioSpec> {
        let mut spec = match &self.config {
            Some(path) => ScenarioSpec::from_file(path)?,
            None => ScenarioSpec::default(),
        };
        if self.fast {
            spec = spec.fast();
        }
        if let Some(f1) = self.thd_f1 {
            spec.thd.f1_hz = Some(f1);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario with one switching method
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        modulator: Modulator,
        /// Directory for CSV outputs
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several switching methods on the same scenario and tabulate them
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Methods to compare, in row order
        #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
        modulators: Vec<Modulator>,
        #[arg(long, default_value = "compare_out")]
        out: PathBuf,
    },
    /// Induction-machine torque-slip curve as CSV
    Imcurve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn summary(run: &RunReport) -> serde_json::Value {
    let windows: Vec<_> = run
        .thd_per_window
        .iter()
        .map(|w| match &w.result {
            Ok(r) => json!({
                "t_end": w.window.t_end,
                "thd": r.thd,
                "f1_hz": r.f1,
                "f1_source": if w.f1_from_speed { "speed" } else { "fixed" },
            }),
            Err(e) => {
                json!({ "t_end": w.window.t_end, "error": e.kind(), "message": e.to_string() })
            }
        })
        .collect();
    let steps: Vec<_> = run
        .metrics
        .iter()
        .map(|s| {
            json!({
                "t_step": s.t_step,
                "from": s.ref_before,
                "to": s.ref_after,
                "rise_time": s.metrics.rise_time,
                "settling_time": s.metrics.settling_time,
                "overshoot": s.metrics.overshoot,
                "steady_state_error": s.metrics.steady_state_error,
            })
        })
        .collect();
    json!({
        "modulator": run.name(),
        "thd": windows,
        "speed_steps": steps,
        "final_speed": run.final_state.omega_m,
        "warnings": run.warnings,
    })
}

/// Writes to stdout; a reader that has gone away is not an error.
fn emit(bytes: &[u8]) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(bytes).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            modulator,
            out,
        } => {
            let spec = scenario.load()?;
            let run = run_scenario(&spec, &spec.modulator(modulator.name())?)?;
            if let Some(dir) = out {
                write_run_outputs(&dir, &run)?;
            }
            emit(format!("{}\n", summary(&run)).as_bytes())?;
        }
        Command::Compare {
            scenario,
            modulators,
            out,
        } => {
            let spec = scenario.load()?;
            let mods = if modulators.is_empty() {
                spec.standard_modulators()
            } else {
                modulators
                    .iter()
                    .map(|m| spec.modulator(m.name()))
                    .collect::<Result<Vec<_>>>()?
            };
            let report = compare_modulators(&spec, &mods)?;
            write_comparison(&out, &report)?;
            emit(report.to_csv().as_bytes())?;
            if let Some(row) = report.rows.iter().find(|r| r.run.is_err()) {
                let name = row.modulator.name();
                let e = row.run.as_ref().unwrap_err();
                return Err(DriveError::Domain(format!("{name} run failed: {e}")));
            }
        }
        Command::Imcurve { config, out } => {
            let spec = match &config {
                Some(path) => ScenarioSpec::from_file(path)?,
                None => ScenarioSpec::default(),
            };
            let rows = spec.induction.torque_slip_curve()?;
            match out {
                Some(path) => write_csv_file(&path, |f| write_torque_slip_csv(f, &rows))?,
                None => {
                    let mut buf = Vec::new();
                    write_torque_slip_csv(&mut buf, &rows)?;
                    emit(&buf)?;
                }
            }
        }
    }
    Ok(())
}

fn write_csv_file(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    body(&mut f)?;
    f.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
