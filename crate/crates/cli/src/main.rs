//! `ela` — batch front end for the lattice agreement toolkit.
//!
//! Every run is fully determined by (subcommand, flags, input files, seed):
//! repeated invocations produce byte-identical output. Exit codes: 0 success,
//! 1 verification found violations, 2 usage error, 3 malformed input
//! document, 4 budget violation, 5 runtime error.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ela_core::{
    check_normality, compliance_report, format as doc, verify_lattice, verify_quasi_metric,
    AgreementInstance, LatticeSpace,
};
use ela_model::{
    render_csv, render_text, sweep, InitialCondition, Sampling, SweepGrid, SweepRow,
};
use ela_protocols::{
    replay, run_async_dr, run_sync, CrashDoc, CrashSchedule, Mode, NetworkConfig,
    ProtocolOutcome, SchedulerPolicy, SimRun, Trace,
};

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INPUT: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

struct CliError {
    code: u8,
    msg: String,
}

type CliResult<T> = Result<T, CliError>;

impl From<ela_core::Error> for CliError {
    fn from(e: ela_core::Error) -> CliError {
        use ela_core::Error::*;
        let code = match &e {
            Parse(_) | UnknownLabel(_) | MalformedInstance(_) | InvalidParams(_) => EXIT_INPUT,
            _ => EXIT_RUNTIME,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<ela_protocols::Error> for CliError {
    fn from(e: ela_protocols::Error) -> CliError {
        use ela_protocols::Error::*;
        let code = match &e {
            Core(inner) => return CliError::from(inner.clone()),
            CrashBudget { .. } | InvalidConfig(_) => EXIT_BUDGET,
            InvalidSchedule(_) | TraceParse(_) => EXIT_INPUT,
            _ => EXIT_RUNTIME,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<ela_model::ModelError> for CliError {
    fn from(e: ela_model::ModelError) -> CliError {
        CliError {
            code: EXIT_BUDGET,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError {
            code: EXIT_RUNTIME,
            msg: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "ela",
    version,
    about = "Join-semilattice agreement toolkit: verification, reconciliation simulation, model sweeps"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the lattice and quasi-metric axiom checkers on a lattice document.
    VerifyLattice {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a valid agreement instance (the base-LA oracle) over a lattice.
    GenInstance {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconcile an instance's outputs with the synchronous flooding protocol.
    RunSync {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        f: usize,
        #[arg(long)]
        crash_schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Reconcile an instance's outputs with the k-round heuristic.
    RunDr {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        f: usize,
        #[arg(long)]
        k: u32,
        /// deliver-all | uniform-random | delay:<ids>
        #[arg(long, default_value = "uniform-random")]
        scheduler: String,
        #[arg(long)]
        crash_schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the approximate round model at a single parameter point.
    RunModel {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        f: usize,
        #[arg(long)]
        pf: f64,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// without | with (replacement)
        #[arg(long, default_value = "without")]
        sampling: String,
        /// random | worst | explicit:<cells>
        #[arg(long, default_value = "random")]
        initial: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the model over a parameter grid (comma-separated axis values);
    /// k values share trajectories, so rates are monotone per seed.
    Sweep {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        f: String,
        #[arg(long)]
        pf: String,
        #[arg(long)]
        k: String,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "without")]
        sampling: String,
        #[arg(long, default_value = "random")]
        initial: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a recorded trace and check it reproduces its decisions.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: code={} msg={:?}", e.code, e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_INPUT,
        msg: format!("cannot read {}: {}", path.display(), e),
    })
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{}", text),
    }
    Ok(())
}

fn load_space(path: &Path) -> CliResult<LatticeSpace> {
    Ok(doc::load_lattice(&read_file(path)?)?)
}

fn load_crash(path: Option<&PathBuf>) -> CliResult<CrashSchedule> {
    match path {
        None => Ok(CrashSchedule::none()),
        Some(p) => Ok(CrashDoc::parse(&read_file(p)?)?.to_schedule()?),
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.cmd {
        Cmd::VerifyLattice { lattice, format, out } => {
            let space = load_space(&lattice)?;
            cmd_verify(&space, format, out.as_deref())
        }
        Cmd::GenInstance { lattice, n, seed, out } => {
            let space = load_space(&lattice)?;
            let inst = ela_protocols::generate_valid_instance(
                &space,
                n,
                seed,
                &ela_protocols::InputSampler::Uniform,
            )?;
            emit(&doc::dump_instance(&space, &inst), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::RunSync {
            lattice,
            instance,
            f,
            crash_schedule,
            seed,
            out,
            format,
        } => {
            let space = load_space(&lattice)?;
            let inst = doc::load_instance(&read_file(&instance)?, &space)?;
            let cfg = NetworkConfig::new(
                inst.n(),
                f,
                Mode::SyncRounds,
                SchedulerPolicy::DeliverAll,
                seed,
            )?;
            let crash = load_crash(crash_schedule.as_ref())?;
            let run = run_sync(&cfg, &crash, &inst.outputs, &space)?;
            finish_protocol_run(&space, inst, &cfg, run, format, out.as_deref(), None)
        }
        Cmd::RunDr {
            lattice,
            instance,
            f,
            k,
            scheduler,
            crash_schedule,
            seed,
            out,
            format,
        } => {
            let space = load_space(&lattice)?;
            let inst = doc::load_instance(&read_file(&instance)?, &space)?;
            let policy = SchedulerPolicy::parse(&scheduler)?;
            let cfg = NetworkConfig::new(inst.n(), f, Mode::Async, policy, seed)?;
            let crash = load_crash(crash_schedule.as_ref())?;
            let run = run_async_dr(&cfg, &crash, k, &inst.outputs, &space)?;
            finish_protocol_run(&space, inst, &cfg, run, format, out.as_deref(), Some(k))
        }
        Cmd::RunModel {
            n,
            f,
            pf,
            k,
            runs,
            seed,
            sampling,
            initial,
            format,
            out,
        } => {
            let grid = SweepGrid {
                n,
                f: vec![f],
                p_f: vec![pf],
                k: vec![k],
                initial: vec![InitialCondition::parse(&initial)?],
                sampling: vec![Sampling::parse(&sampling)?],
                runs,
                seed,
            };
            let rows = sweep(&grid)?;
            report_exits(&rows);
            emit(&render_rows(&rows, seed, format), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep {
            n,
            f,
            pf,
            k,
            runs,
            seed,
            sampling,
            initial,
            format,
            out,
        } => {
            let grid = SweepGrid {
                n,
                f: parse_list(&f, "f")?,
                p_f: parse_list(&pf, "pf")?,
                k: parse_list(&k, "k")?,
                initial: parse_variants(&initial, InitialCondition::parse)?,
                sampling: parse_variants(&sampling, Sampling::parse)?,
                runs,
                seed,
            };
            if grid.k.is_empty() || grid.f.is_empty() || grid.p_f.is_empty() {
                return Err(CliError {
                    code: EXIT_BUDGET,
                    msg: "empty sweep grid".into(),
                });
            }
            let rows = sweep(&grid)?;
            report_exits(&rows);
            emit(&render_rows(&rows, seed, format), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { trace, format, out } => {
            let t = Trace::from_text(&read_file(&trace)?)?;
            let outcome = replay(&t)?;
            let space = t.header.lattice.to_space()?;
            let mut text = String::new();
            let _ = writeln!(text, "replay: OK");
            let _ = writeln!(text, "mode: {}", t.header.mode);
            summary_outcome_lines(&mut text, &space, &outcome, format);
            emit(&text, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, name: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|part| {
            part.trim().parse::<T>().map_err(|_| CliError {
                code: EXIT_INPUT,
                msg: format!("bad {} value {:?}", name, part),
            })
        })
        .collect()
}

fn parse_variants<T>(
    s: &str,
    parse: impl Fn(&str) -> Result<T, ela_model::ModelError>,
) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|part| parse(part.trim()).map_err(CliError::from))
        .collect()
}

fn render_rows(rows: &[SweepRow], seed: u64, format: Format) -> String {
    match format {
        Format::Text => render_text(rows, seed),
        Format::Csv => render_csv(rows, seed),
    }
}

/// State-space exits (the unique 1 crashed) go to stderr: part of the run
/// log, not the table.
fn report_exits(rows: &[SweepRow]) {
    for row in rows {
        if row.exits > 0 {
            eprintln!(
                "note: f={} p_f={} k={} initial={} sampling={}: {} of {} runs left the state space (no 1 remained); classified via the improvement predicate",
                row.f, row.p_f, row.k, row.initial, row.sampling, row.exits, row.runs
            );
        }
    }
}

fn cmd_verify(space: &LatticeSpace, format: Format, out: Option<&Path>) -> CliResult<ExitCode> {
    let lattice_violations = verify_lattice(space)?;
    let metric_violations = verify_quasi_metric(space)?;
    let (_, witness) = check_normality(space);
    let sep = match format {
        Format::Text => ": ",
        Format::Csv => ",",
    };
    let mut text = String::new();
    let _ = writeln!(
        text,
        "lattice{}family={} elements={}",
        sep,
        space.family_name(),
        space.card()
    );
    for (name, violations) in [
        ("verify_lattice", &lattice_violations),
        ("verify_quasi_metric", &metric_violations),
    ] {
        if violations.is_empty() {
            let _ = writeln!(text, "{}{}OK, 0 violations", name, sep);
        } else {
            let _ = writeln!(text, "{}{}{} violations", name, sep, violations.len());
            for v in violations {
                let _ = writeln!(text, "violation{}{}", sep, v);
            }
        }
    }
    match witness {
        None => {
            let _ = writeln!(text, "normality{}normal", sep);
        }
        Some(w) => {
            let labels: Vec<String> = w.iter().map(|&e| space.label(e)).collect();
            let _ = writeln!(
                text,
                "normality{}not normal, witness ({})",
                sep,
                labels.join(",")
            );
        }
    }
    emit(&text, out)?;
    if lattice_violations.is_empty() && metric_violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_VIOLATIONS))
    }
}

fn summary_outcome_lines(
    text: &mut String,
    space: &LatticeSpace,
    outcome: &ProtocolOutcome,
    _format: Format,
) {
    let decisions: Vec<String> = outcome
        .decisions
        .iter()
        .enumerate()
        .map(|(i, d)| match d {
            Some(e) => format!("p{}={}", i + 1, space.label(*e)),
            None => format!("p{}=-", i + 1),
        })
        .collect();
    let _ = writeln!(text, "decisions: {}", decisions.join(" "));
    let crashed: Vec<String> = outcome
        .crash_round
        .iter()
        .enumerate()
        .filter_map(|(i, cr)| cr.map(|r| format!("p{}@r{}", i + 1, r)))
        .collect();
    let _ = writeln!(
        text,
        "crashed: {}",
        if crashed.is_empty() {
            "-".to_string()
        } else {
            crashed.join(" ")
        }
    );
    let correct = outcome.correct_decisions();
    let agreement = correct.windows(2).all(|w| w[0] == w[1]);
    let _ = writeln!(text, "agreement: {}", agreement);
}

fn finish_protocol_run(
    space: &LatticeSpace,
    mut inst: AgreementInstance,
    cfg: &NetworkConfig,
    run: SimRun,
    format: Format,
    trace_out: Option<&Path>,
    k: Option<u32>,
) -> CliResult<ExitCode> {
    inst.reconciled = Some(run.outcome.final_values().to_vec());
    inst.crashed = run
        .outcome
        .crash_round
        .iter()
        .enumerate()
        .filter_map(|(i, cr)| cr.map(|_| i))
        .collect::<BTreeSet<usize>>();
    let report = compliance_report(space, &inst)?;

    let mut text = String::new();
    let _ = writeln!(text, "mode: {}", cfg.mode.name());
    let _ = writeln!(text, "n: {}", cfg.n);
    let _ = writeln!(text, "f: {}", cfg.f);
    if let Some(k) = k {
        let _ = writeln!(text, "k: {}", k);
    }
    let _ = writeln!(text, "scheduler: {}", cfg.scheduler.name());
    let _ = writeln!(text, "seed: {}", cfg.seed);
    summary_outcome_lines(&mut text, space, &run.outcome, format);
    let _ = writeln!(text, "gamma: {}", report.gamma);
    if let Some(g) = report.gamma_reconciled {
        let _ = writeln!(text, "gamma_prime: {}", g);
    }
    let _ = writeln!(text, "D: {}", report.d);
    let _ = writeln!(text, "D_prime: {}", report.d_prime);
    let _ = writeln!(text, "M: {}", report.m);
    if let Some(improved) = report.improved {
        let _ = writeln!(text, "improved: {}", improved);
    }
    print!("{}", text);
    if let Some(path) = trace_out {
        fs::write(path, run.trace.to_text())?;
    }
    Ok(ExitCode::SUCCESS)
}
