//! `gsroute`: plan, execute and verify entanglement routing workloads.
//!
//! Exit codes: 0 ok, 1 schema or IO error, 2 some requests rejected (or a
//! verification trial failed), 3 state too large for the oracle.

mod workload;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsroute::oracle::{verify_plan, OracleError};
use gsroute::MeasurementPlan;

use workload::{
    compile_workload, graph_record, to_dot, write_json, Compiled, InputError, Workload,
};

#[derive(Parser)]
#[command(
    name = "gsroute",
    version,
    about = "Route Bell pairs and linear clusters through 2D cluster states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Workload JSON file.
    workload: PathBuf,
    /// Seed for route jitter and oracle sampling; overrides the workload.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the workload and write plan.json and report.json.
    Plan(Common),
    /// Compile, execute at graph level and write the final graph as well.
    Run {
        #[command(flatten)]
        common: Common,
        /// Sampled-outcome trials when verifying (default 20).
        #[arg(long)]
        trials: Option<usize>,
        /// Largest active qubit count the oracle will simulate.
        #[arg(long)]
        oracle_cap: Option<usize>,
    },
    /// Check a plan against the state-vector oracle.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Plan to check instead of compiling the workload.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Sampled-outcome trials when verifying (default 20).
        #[arg(long)]
        trials: Option<usize>,
        /// Largest active qubit count the oracle will simulate.
        #[arg(long)]
        oracle_cap: Option<usize>,
    },
    /// Write the final graph as Graphviz DOT (to stdout without --out).
    ExportDot {
        #[command(flatten)]
        common: Common,
        /// Plan to execute instead of compiling the workload.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

enum Failure {
    Input(InputError),
    Overflow(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<Option<&Path>, InputError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

/// Replace the compiled plan with one read from disk.
fn with_plan(mut c: Compiled, plan: &Option<PathBuf>) -> Result<Compiled, InputError> {
    if let Some(path) = plan {
        let p: MeasurementPlan = workload::read_json(path)?;
        p.validate(c.initial.vertex_count())
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        c.plan = p;
    }
    Ok(c)
}

fn served_code(c: &Compiled) -> u8 {
    for r in &c.report.requests.rejected {
        eprintln!("request {} rejected: {}", r.request, r.reason);
    }
    if let Some(err) = c.report.blocks.as_ref().and_then(|b| b.error.as_ref()) {
        eprintln!("blocks rejected: {err}");
    }
    if c.report.all_served() {
        0
    } else {
        2
    }
}

fn write_plan(c: &Compiled, dir: Option<&Path>) -> Result<(), InputError> {
    if let Some(dir) = dir {
        write_json(&dir.join("plan.json"), &c.plan)?;
        write_json(&dir.join("report.json"), &c.report)?;
    }
    Ok(())
}

fn execute(c: &Compiled) -> Result<gsroute::GraphState, InputError> {
    let mut g = c.initial.clone();
    c.plan.execute(&mut g)?;
    Ok(g)
}

fn verify(
    c: &Compiled,
    trials: usize,
    seed: u64,
    cap: usize,
    dir: Option<&Path>,
) -> Result<bool, Failure> {
    if c.initial.active_count() > cap {
        return Err(Failure::Overflow(format!(
            "{} qubits exceed the oracle cap of {cap}; verify at graph level or on a smaller grid",
            c.initial.active_count()
        )));
    }
    let predicted = execute(c)?;
    let report = match verify_plan(&c.initial, &c.plan, &predicted, trials, seed, cap) {
        Ok(r) => r,
        Err(OracleError::TooManyQubits { active, cap }) => {
            return Err(Failure::Overflow(format!(
                "{active} qubits exceed the oracle cap of {cap}"
            )))
        }
        Err(e) => return Err(InputError(e.to_string()).into()),
    };
    if let Some(dir) = dir {
        write_json(&dir.join("verification.json"), &report)?;
    }
    println!(
        "{} trials, worst deviation {:.3e}: {}",
        report.trials.len(),
        report.worst_deviation,
        if report.passed { "ok" } else { "FAILED" }
    );
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Plan(common) => {
            let w = Workload::load(&common.workload)?;
            let c = compile_workload(&w, w.seed(common.seed))?;
            write_plan(&c, out_dir(&common.out)?)?;
            if common.out.is_none() {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&c.plan).map_err(InputError::from)?
                );
            }
            Ok(served_code(&c))
        }
        Command::Run {
            common,
            trials,
            oracle_cap,
        } => {
            let w = Workload::load(&common.workload)?;
            let seed = w.seed(common.seed);
            let c = compile_workload(&w, seed)?;
            let dir = out_dir(&common.out)?;
            write_plan(&c, dir)?;
            let g = execute(&c)?;
            if let Some(dir) = dir {
                write_json(&dir.join("graph.json"), &graph_record(&g))?;
                std::fs::write(dir.join("graph.dot"), to_dot(&g, &c.lattice, &c.report))
                    .map_err(InputError::from)?;
            }
            let counts = c.plan.counts();
            println!(
                "served {}/{} requests; {} X, {} Y, {} Z; {} active edges remain",
                c.report.requests.served.len(),
                w.requests.len(),
                counts.x,
                counts.y,
                counts.z,
                g.edge_count()
            );
            let code = served_code(&c);
            if w.options.verify
                && !verify(&c, w.trials(trials), seed, w.oracle_cap(oracle_cap), dir)?
            {
                return Ok(2);
            }
            Ok(code)
        }
        Command::Verify {
            common,
            plan,
            trials,
            oracle_cap,
        } => {
            let w = Workload::load(&common.workload)?;
            let seed = w.seed(common.seed);
            let cap = w.oracle_cap(oracle_cap);
            let lat = w.lattice()?;
            if lat.vertex_count() > cap {
                return Err(Failure::Overflow(format!("{} qubits exceed the oracle cap of {cap}; verify at graph level or on a smaller grid", lat.vertex_count())));
            }
            let c = with_plan(compile_workload(&w, seed)?, &plan)?;
            let passed = verify(&c, w.trials(trials), seed, cap, out_dir(&common.out)?)?;
            Ok(if passed { 0 } else { 2 })
        }
        Command::ExportDot { common, plan } => {
            let w = Workload::load(&common.workload)?;
            let c = with_plan(compile_workload(&w, w.seed(common.seed))?, &plan)?;
            let g = execute(&c)?;
            let dot = to_dot(&g, &c.lattice, &c.report);
            match out_dir(&common.out)? {
                Some(dir) => {
                    std::fs::write(dir.join("graph.dot"), dot).map_err(InputError::from)?
                }
                None => print!("{dot}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Overflow(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
