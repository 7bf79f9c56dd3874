use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_consensus_cli::commands::{
    figure_suite_names, list_scenarios, run_scenarios, sweep_command, validate_scenarios, RunOptions,
};
use adaptive_consensus_cli::error::exit;
use adaptive_consensus_cli::sweep::SweepAxis;
use adaptive_consensus_cli::CliError;
use clap::{Args, Parser, Subcommand};

/// Adaptive consensus over uncertain graphs: simulate, sweep, export.
#[derive(Parser)]
#[command(name = "adcons", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate scenarios and write trajectory, diagnostics and summary files.
    Run(RunArgs),
    /// Vary one parameter of a scenario and tabulate the outcome.
    Sweep(SweepArgs),
    /// Check scenario files without simulating.
    Validate(ValidateArgs),
    /// Print the bundled scenarios.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file or bundled name; repeat for a batch.
    #[arg(long, short, required_unless_present = "all")]
    scenario: Vec<String>,
    /// Run the eight bundled figure scenarios.
    #[arg(long)]
    all: bool,
    /// Output directory; each run writes to `<out>/<name>/`.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Run everything twice and fail unless the outputs are byte-identical.
    #[arg(long)]
    seed_free: bool,
    /// Steps between recorded rows, overriding the scenario.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    stride: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, short)]
    scenario: String,
    /// One of gamma-scale, k-scale, derivative-scale, step.
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Directory for the sweep table; printed to stdout regardless.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, short, required_unless_present = "all")]
    scenario: Vec<String>,
    #[arg(long)]
    all: bool,
}

fn report_error(name: &str, e: &CliError) -> u8 {
    eprintln!("error: {name}: {e}");
    e.exit_code()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => {
            let mut names = args.scenario;
            if args.all {
                names.extend(figure_suite_names());
            }
            let opts = RunOptions {
                out: args.out,
                seed_free: args.seed_free,
                stride: args.stride.map(|s| s as usize),
            };
            let mut code = exit::SUCCESS;
            for (name, result) in run_scenarios(&names, &opts) {
                match result {
                    Ok(s) => println!(
                        "{name}: {} (gap {:.3e}, |e(T)| {:.3e}) -> {}",
                        s.verdict,
                        s.final_gap,
                        s.final_e_norm,
                        opts.out.join(&s.scenario).display()
                    ),
                    Err(e) => {
                        let c = report_error(&name, &e);
                        if code == exit::SUCCESS {
                            code = c;
                        }
                    }
                }
            }
            code
        }
        Command::Sweep(args) => {
            match sweep_command(&args.scenario, args.axis, &args.values, args.out.as_deref()) {
                Ok((rows, table)) => {
                    print!("{table}");
                    if rows.iter().any(|r| r.diverged) {
                        eprintln!("error: {}: at least one sweep row diverged", args.scenario);
                        exit::DIVERGENCE
                    } else {
                        exit::SUCCESS
                    }
                }
                Err(e) => report_error(&args.scenario, &e),
            }
        }
        Command::Validate(args) => {
            let mut names = args.scenario;
            if args.all {
                names.extend(list_scenarios().into_iter().map(|(n, _)| n.to_string()));
            }
            let mut code = exit::SUCCESS;
            for (name, result) in validate_scenarios(&names) {
                match result {
                    Ok(sc) => println!(
                        "{name}: ok ({} agents, {} edges, controller {})",
                        sc.graph.node_count(),
                        sc.graph.edge_count(),
                        if sc.controller.is_some() { "on" } else { "off" }
                    ),
                    Err(e) => {
                        let c = report_error(&name, &e);
                        if code == exit::SUCCESS {
                            code = c;
                        }
                    }
                }
            }
            code
        }
        Command::ListScenarios => {
            for (name, desc) in list_scenarios() {
                println!("{name}\t{desc}");
            }
            exit::SUCCESS
        }
    };
    ExitCode::from(code)
}
