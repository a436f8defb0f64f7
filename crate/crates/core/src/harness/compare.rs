use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::modulation::ModulatorConfig;
use crate::sim::write_csv_columns;
use crate::{DriveError, Result};

use super::run::{run_scenario, RunReport};
use super::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub modulator: ModulatorConfig,
    pub run: Result<RunReport>,
    /// 1 = lowest mean THD across the windows; absent for failed runs or
    /// runs with a failed window.
    pub thd_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub spec: ScenarioSpec,
    /// Rows in the order the modulators were given.
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.modulator.name() == name)
    }

    pub fn run(&self, name: &str) -> Option<&RunReport> {
        self.row(name).and_then(|r| r.run.as_ref().ok())
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.run.is_ok())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_report_csv(&mut out, self);
        out
    }
}

/// Runs every modulator against the same scenario, one worker thread per
/// run. A failing run keeps its row with the error attached.
pub fn compare_modulators(
    spec: &ScenarioSpec,
    modulators: &[ModulatorConfig],
) -> Result<ComparisonReport> {
    if modulators.len() < 2 {
        return Err(DriveError::Config(format!(
            "comparison needs at least two modulators, got {}",
            modulators.len()
        )));
    }
    spec.validate()?;
    let runs: Vec<Result<RunReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = modulators
            .iter()
            .map(|m| s.spawn(move || run_scenario(spec, m)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mean_thd: Vec<Option<f64>> = runs
        .iter()
        .map(|r| {
            let vals: Option<Vec<f64>> = r.as_ref().ok()?.thd_values().into_iter().collect();
            let vals = vals?;
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    // equal THD shares a rank
    let ranks: Vec<Option<usize>> = mean_thd
        .iter()
        .map(|m| {
            let m = (*m)?;
            Some(
                1 + mean_thd
                    .iter()
                    .flatten()
                    .filter(|other| **other < m)
                    .count(),
            )
        })
        .collect();

    let rows = modulators
        .iter()
        .zip(runs)
        .zip(ranks)
        .map(|((m, run), thd_rank)| ComparisonRow {
            modulator: *m,
            run,
            thd_rank,
        })
        .collect();
    Ok(ComparisonReport {
        spec: spec.clone(),
        rows,
    })
}

fn opt(v: Option<f64>, scale: f64) -> String {
    v.map(|x| format!("{:.4}", x * scale)).unwrap_or_default()
}

/// One row per modulator: THD (%) and fundamental per window, rise time
/// per speed step, THD rank and run status.
pub fn write_report_csv(out: &mut String, report: &ComparisonReport) {
    let spec = &report.spec;
    let steps: Vec<f64> = spec
        .speed_schedule
        .iter()
        .enumerate()
        .filter(|(i, s)| {
            s[1] != if *i == 0 {
                0.0
            } else {
                spec.speed_schedule[i - 1][1]
            }
        })
        .map(|(_, s)| s[0])
        .collect();

    out.push_str("modulator");
    for w in &spec.thd.windows {
        let _ = write!(out, ",thd_pct_{}s", w.t_end);
    }
    for w in &spec.thd.windows {
        let _ = write!(out, ",f1_hz_{}s", w.t_end);
    }
    for t in &steps {
        let _ = write!(out, ",rise_time_ms_{t}s");
    }
    out.push_str(",thd_rank,status\n");

    for row in &report.rows {
        out.push_str(row.modulator.name());
        match &row.run {
            Ok(run) => {
                for w in &run.thd_per_window {
                    let _ = write!(out, ",{}", opt(w.thd(), 100.0));
                }
                for w in &run.thd_per_window {
                    let _ = write!(out, ",{}", opt(w.result.as_ref().ok().map(|r| r.f1), 1.0));
                }
                for t in &steps {
                    let _ = write!(out, ",{}", opt(run.rise_time_at(*t), 1e3));
                }
                let rank = row.thd_rank.map(|r| r.to_string()).unwrap_or_default();
                let failed: Vec<String> = run
                    .thd_per_window
                    .iter()
                    .filter_map(|w| {
                        w.result
                            .as_ref()
                            .err()
                            .map(|e| format!("{}@{}s", e.kind(), w.window.t_end))
                    })
                    .collect();
                let status = if failed.is_empty() {
                    "ok".to_string()
                } else {
                    format!("window_failed:{}", failed.join(";"))
                };
                let _ = writeln!(out, ",{rank},{status}");
            }
            Err(e) => {
                let empty = 2 * spec.thd.windows.len() + steps.len();
                out.push_str(&",".repeat(empty));
                let _ = writeln!(out, ",,failed:{}", e.kind());
            }
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes the per-run CSVs and resolved configuration into `dir`.
pub fn write_run_outputs(dir: &Path, run: &RunReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = run.name();
    let tr = &run.traces;

    for (i, w) in run.thd_per_window.iter().enumerate() {
        if let Ok(thd) = &w.result {
            let file = if i == 0 {
                format!("spectrum_{name}.csv")
            } else {
                format!("spectrum_{name}_{}.csv", i + 1)
            };
            let mut f = create(&dir.join(file))?;
            thd.spectrum.write_csv(&mut f)?;
            f.flush()?;
        }
    }

    let mut f = create(&dir.join(format!("speed_{name}.csv")))?;
    write_csv_columns(
        &mut f,
        &[&tr.omega_m, &tr.torque, &tr.i_q_ref, &tr.v_d, &tr.v_q],
    )?;
    f.flush()?;

    let mut f = create(&dir.join(format!("gates_{name}.csv")))?;
    write_csv_columns(&mut f, &[&tr.gate_a, &tr.gate_b, &tr.gate_c])?;
    f.flush()?;

    if run.modulator.is_carrier_based() {
        let mut f = create(&dir.join(format!("refs_{name}.csv")))?;
        write_csv_columns(&mut f, &[&tr.ref_a, &tr.ref_b, &tr.ref_c])?;
        f.flush()?;
    }

    let mut echo = run.config_echo.clone();
    if !run.warnings.is_empty() {
        echo.push_str("\n[warnings]\nmessages = [\n");
        for w in &run.warnings {
            let _ = writeln!(echo, "  {w:?},");
        }
        echo.push_str("]\n");
    }
    fs::write(dir.join(format!("config_{name}.toml")), echo)?;
    Ok(())
}

/// Writes `report.csv`, `config.toml` and every successful run's outputs.
pub fn write_comparison(dir: &Path, report: &ComparisonReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), report.to_csv())?;
    fs::write(dir.join("config.toml"), report.spec.to_toml())?;
    for row in &report.rows {
        if let Ok(run) = &row.run {
            write_run_outputs(dir, run)?;
        }
    }
    Ok(())
}
