use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sirw::graph::GraphSpec;
use sirw::harness::{self, ExperimentConfig, Format, RunOptions};
use sirw::rng::SimRng;
use sirw::walk::{self, Mode};
use sirw::weights::WeightSpec;

#[derive(Parser)]
#[command(name = "sirw", version, about = "Self-interacting random walk simulator and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog experiments with their descriptions.
    ListExperiments {
        /// Print the catalog, default configs included, as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment and report pass/fail against its thresholds.
    Run {
        /// Experiment config (JSON).
        #[arg(long, conflicts_with = "experiment")]
        config: Option<PathBuf>,
        /// Run a catalog experiment under its default config.
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long, env = "SIRW_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        /// Output directory for the JSON report and CSV series.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        /// Worker threads; does not change the output.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Simulate a single walk.
    Simulate {
        /// `line`, `line:<center>`, `cycle:<length>` or `grid`.
        #[arg(long, default_value = "line")]
        graph: GraphSpec,
        /// `power:<delta>:<rho>`, `geometric:<base>` or `table:<v1>,<v2>,...`.
        #[arg(long, default_value = "power:0:1")]
        weight: WeightSpec,
        #[arg(long, default_value = "vertex", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        steps: u64,
        #[arg(long, env = "SIRW_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        x0: i64,
        /// Write the trace as CSV (`step,position`).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "vertex" => Ok(Mode::Vertex),
        "edge" => Ok(Mode::Edge),
        _ => Err(format!("unknown mode `{s}` (vertex or edge)")),
    }
}

const EXIT_THRESHOLD: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TIE: u8 = 3;

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<sirw::Error>() {
        Some(err) if err.is_tie() => EXIT_TIE,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListExperiments { json } => list(json),
        Command::Run {
            config,
            experiment,
            seed,
            reps,
            steps,
            out,
            format,
            parallel,
        } => load_config(config, experiment).and_then(|mut c| {
            if let Some(s) = seed {
                c.seed = s;
            }
            if let Some(r) = reps {
                c.replications = r;
            }
            if let Some(n) = steps {
                c.steps = n;
            }
            if let Some(d) = out {
                c.output.dir = Some(d);
            }
            if let Some(f) = format {
                c.output.format = f;
            }
            run(&c, parallel)
        }),
        Command::Simulate {
            graph,
            weight,
            mode,
            steps,
            seed,
            x0,
            trace,
        } => simulate(&graph, &weight, mode, steps, seed, x0, trace).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_THRESHOLD),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn list(json: bool) -> Result<bool> {
    let catalog = harness::list_experiments();
    if json {
        println!("{}", serde_json::to_string_pretty(&catalog)?);
    } else {
        for e in catalog {
            println!("{:<28} {}", e.id, e.description);
        }
    }
    Ok(true)
}

fn load_config(path: Option<PathBuf>, experiment: Option<String>) -> Result<ExperimentConfig> {
    match (path, experiment) {
        (Some(p), _) => {
            let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            Ok(ExperimentConfig::from_json(&text)?)
        }
        (None, Some(id)) => Ok(harness::default_config(&id)?),
        (None, None) => Err(sirw::Error::Config("pass --config <file> or --experiment <id>".into()).into()),
    }
}

fn run(config: &ExperimentConfig, parallel: Option<usize>) -> Result<bool> {
    let report = harness::run_experiment(config, &RunOptions { parallel })?;
    if config.output.dir.is_none() {
        print!("{}", report.to_json());
    }
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let rel = serde_json::to_value(c.relation)?;
        eprintln!(
            "{verdict} {}: {} (threshold {} {})",
            c.name,
            c.value,
            rel.as_str().unwrap_or("?"),
            c.threshold
        );
    }
    Ok(report.passed)
}

fn simulate(
    graph: &GraphSpec,
    weight: &WeightSpec,
    mode: Mode,
    steps: u64,
    seed: u64,
    x0: i64,
    trace_path: Option<PathBuf>,
) -> Result<()> {
    let g = graph.build()?;
    let w = weight.build()?;
    let trace = walk::run(&g, &w, x0, steps, mode, SimRng::from_seed(seed), &mut [])?;
    match trace_path {
        Some(p) => {
            let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
            let mut out = BufWriter::new(f);
            trace.write_csv(&mut out)?;
            out.flush()?;
        }
        None => {
            let visited = trace.final_state.visited().count();
            println!(
                "steps {steps}, final position {}, distinct vertices {visited}",
                trace.positions.last().unwrap()
            );
        }
    }
    Ok(())
}
