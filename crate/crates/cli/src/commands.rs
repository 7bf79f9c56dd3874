//! The verbs behind the `adcons` binary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use adaptive_consensus::Scenario;

use crate::error::CliError;
use crate::report::{render_run, run_dir, RenderedRun, RunSummary};
use crate::scenario::{load_scenario, load_scenario_file, EXTRAS, FIGURE_SUITE};
use crate::sweep::{sweep, sweep_csv, SweepAxis, SweepRow};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Render every run twice and require identical bytes.
    pub seed_free: bool,
    pub stride: Option<usize>,
}

/// Names of the eight figure scenarios, in suite order.
pub fn figure_suite_names() -> Vec<String> {
    FIGURE_SUITE.iter().map(|b| b.name.to_string()).collect()
}

pub fn prepare(arg: &str, stride: Option<usize>) -> Result<Scenario, CliError> {
    let mut sc = load_scenario(arg)?;
    if let Some(s) = stride {
        if s == 0 {
            return Err(CliError::Validation {
                field: "--stride".into(),
                message: "must be at least 1".into(),
            });
        }
        sc.sim.stride = s;
    }
    Ok(sc)
}

fn render_checked(sc: &Scenario, seed_free: bool) -> Result<RenderedRun, CliError> {
    let first = render_run(sc)?;
    if seed_free && render_run(sc)? != first {
        return Err(CliError::Nondeterministic(sc.name.clone()));
    }
    Ok(first)
}

fn run_one(arg: &str, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let sc = prepare(arg, opts.stride)?;
    let rendered = render_checked(&sc, opts.seed_free)?;
    rendered.write_to(&run_dir(&opts.out, &sc.name))?;
    match rendered.divergence() {
        Some(e) => Err(e),
        None => Ok(rendered.summary),
    }
}

/// Runs each scenario on its own thread, writing `<out>/<name>/`. Results
/// keep the order of `args`.
pub fn run_scenarios(args: &[String], opts: &RunOptions) -> Vec<(String, Result<RunSummary, CliError>)> {
    let mut seen = BTreeSet::new();
    for a in args {
        if !seen.insert(a) {
            return vec![(a.clone(), Err(CliError::Usage(format!("scenario '{a}' listed twice"))))];
        }
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = args
            .iter()
            .map(|a| s.spawn(move || run_one(a, opts)))
            .collect();
        args.iter()
            .cloned()
            .zip(handles.into_iter().map(|h| h.join().expect("run worker panicked")))
            .collect()
    })
}

pub fn validate_scenarios(args: &[String]) -> Vec<(String, Result<Scenario, CliError>)> {
    args.iter().map(|a| (a.clone(), load_scenario(a))).collect()
}

pub fn list_scenarios() -> Vec<(&'static str, String)> {
    FIGURE_SUITE
        .iter()
        .chain(EXTRAS.iter())
        .map(|b| {
            let desc = load_scenario_file(b.name).map(|f| f.description).unwrap_or_default();
            (b.name, desc)
        })
        .collect()
}

pub fn sweep_file(out: &Path, name: &str, axis: SweepAxis) -> PathBuf {
    out.join(format!("sweep_{name}_{axis}.csv"))
}

/// Runs a sweep and, when `out` is given, writes its table there. The table
/// is also returned for printing.
pub fn sweep_command(
    arg: &str,
    axis: SweepAxis,
    values: &[f64],
    out: Option<&Path>,
) -> Result<(Vec<SweepRow>, String), CliError> {
    let sc = load_scenario(arg)?;
    let rows = sweep(&sc, axis, values)?;
    let table = sweep_csv(&rows);
    if let Some(out) = out {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let path = sweep_file(out, &sc.name, axis);
        std::fs::write(&path, &table).map_err(|e| CliError::io(&path, e))?;
    }
    Ok((rows, table))
}
