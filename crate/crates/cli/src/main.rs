//! `hdcascade`: capacities, rate regions, cut-set checks and pipeline
//! simulations for half-duplex relay cascades.
//!
//! Exit codes: 0 success, 2 usage, 3 solver, 4 zero-error violation,
//! 5 cut-set violation, 1 for I/O failures.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdcascade::capacity::solve_cascade_profile;
use hdcascade::region::{curves_to_csv, outer_boundary_curve, sum_cap_line};
use hdcascade::simulator::render_trace;
use hdcascade::{
    achievable_segment, finite_n_achievable, run_pipeline, run_two_source, solve_cascade,
    solve_cascade_full_support, solve_single_relay, sweep_rates, verify_ascending_minimality,
    verify_two_source_ascending, CapacityResult, CodebookSpec, Error, ExperimentConfig,
    MessageSource, RelayModelVariant, TwoSourceSpec,
};
use serde::Serialize;

const OUTPUT_DIR_ENV: &str = "HDCASCADE_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "hdcascade",
    version,
    about = "Half-duplex relay cascade experiments"
)]
struct Cli {
    /// Write here instead of standard output. Without it, output goes to
    /// `$HDCASCADE_OUTPUT_DIR/<command>.<ext>` when that variable is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Zero-error capacity of an m-relay cascade.
    Capacity(CapacityArgs),
    /// Two-source rate-region curves for one relay.
    Region(RegionArgs),
    /// Run the block-pipelined code through the network.
    Simulate(SimulateArgs),
    /// Brute-force check that ascending cut sets attain the minimum.
    CutsetCheck(CutsetArgs),
    /// Code rate against capacity over a list of block lengths.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    ClosedForm,
    Optimize,
    Both,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[arg(long, default_value = "ternary")]
    model: RelayModelVariant,
    #[arg(long, default_value_t = 1)]
    relays: usize,
    #[arg(long, value_enum, default_value = "optimize")]
    method: Method,
    /// Seed for the unrestricted cross-check of `--method both`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Achievable curve of the relay-source code at this block length.
    #[arg(long, conflicts_with = "asymptotic")]
    n_finite: Option<usize>,
    /// Asymptotic achievable curve (the default).
    #[arg(long)]
    asymptotic: bool,
    #[arg(long, default_value_t = 100)]
    points: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    relays: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    blocks: usize,
    /// Transmit-slot budgets `n_1,...,n_m`.
    #[arg(
        long,
        value_delimiter = ',',
        required_unless_present = "optimize_slots",
        conflicts_with = "optimize_slots"
    )]
    slots: Vec<usize>,
    #[arg(long)]
    optimize_slots: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "ternary")]
    model: RelayModelVariant,
    /// Send messages `0, 1, 2, ...` instead of random ones.
    #[arg(long)]
    exhaustive: bool,
    /// Include the per-block transmitted symbols.
    #[arg(long)]
    trace: bool,
    /// The relay also sources its own message.
    #[arg(long, requires = "k0")]
    two_source: bool,
    /// Relay payload bits given to the source message.
    #[arg(long)]
    k0: Option<usize>,
}

#[derive(Args, Debug)]
struct CutsetArgs {
    #[arg(long)]
    relays: usize,
    #[arg(long)]
    relay_source: Option<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    relays: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Solver(String),
    ZeroError(String),
    CutSet(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
            Failure::ZeroError(_) => 4,
            Failure::CutSet(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(s)
            | Failure::Solver(s)
            | Failure::ZeroError(s)
            | Failure::CutSet(s)
            | Failure::Io(s) => s,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NonConvergence { .. } => Failure::Solver(msg),
            Error::ZeroErrorViolation { .. }
            | Error::Integrity(_)
            | Error::ConstraintViolation { .. } => Failure::ZeroError(msg),
            _ => Failure::Usage(msg),
        }
    }
}

type Outcome = Result<Rendered, Failure>;

/// Command output plus the exit failure to report after writing it.
struct Rendered {
    text: String,
    ext: &'static str,
    after: Option<Failure>,
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Io(e.to_string()))
}

fn render_json<T: Serialize>(value: &T) -> Outcome {
    Ok(Rendered {
        text: json(value)?,
        ext: "json",
        after: None,
    })
}

#[derive(Serialize)]
struct CapacityOutput {
    model: RelayModelVariant,
    relays: usize,
    method: &'static str,
    #[serde(flatten)]
    result: CapacityResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    silence_profile: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check_capacity_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check_delta: Option<f64>,
}

fn cmd_capacity(a: &CapacityArgs, format: Format) -> Outcome {
    if a.relays == 0 {
        return Err(Failure::Usage("--relays must be at least 1".into()));
    }
    let closed_form = || {
        if a.relays == 1 {
            Ok(solve_single_relay(a.model))
        } else {
            Err(Failure::Usage(
                "a closed form exists only for one relay".into(),
            ))
        }
    };
    let (method, result, cross) = match a.method {
        Method::ClosedForm => ("closed-form", closed_form()?, None),
        Method::Optimize => ("optimize", solve_cascade(a.relays, a.model)?, None),
        Method::Both => {
            let primary = solve_cascade(a.relays, a.model)?;
            let check = if a.relays == 1 {
                closed_form()?
            } else {
                solve_cascade_full_support(a.relays, a.model, a.seed)?
            };
            ("both", primary, Some(check.capacity_bits))
        }
    };
    let profile = solve_cascade_profile(a.relays, a.model)
        .ok()
        .map(|p| p.silence().to_vec());
    let out = CapacityOutput {
        model: a.model,
        relays: a.relays,
        method,
        cross_check_delta: cross.map(|c| result.capacity_bits - c),
        cross_check_capacity_bits: cross,
        silence_profile: profile.filter(|_| a.method != Method::ClosedForm),
        result,
    };
    match format {
        Format::Json => render_json(&out),
        Format::Csv => {
            let mut text = String::from("model,relays,method,capacity_bits,cross_check_delta\n");
            let delta = out
                .cross_check_delta
                .map(|d| format!("{d:.6}"))
                .unwrap_or_default();
            let _ = writeln!(
                text,
                "{},{},{},{:.6},{delta}",
                out.model, out.relays, out.method, out.result.capacity_bits
            );
            Ok(Rendered {
                text,
                ext: "csv",
                after: None,
            })
        }
    }
}

fn cmd_region(a: &RegionArgs, format: Format) -> Outcome {
    if a.points == 0 {
        return Err(Failure::Usage("--points must be at least 1".into()));
    }
    let mut curves = vec![
        sum_cap_line(a.points.max(2))?,
        outer_boundary_curve(a.points)?,
    ];
    curves.push(match a.n_finite {
        Some(n) => finite_n_achievable(n)?,
        None => achievable_segment(a.points.max(2))?,
    });
    match format {
        Format::Csv => Ok(Rendered {
            text: curves_to_csv(&curves),
            ext: "csv",
            after: None,
        }),
        Format::Json => render_json(&curves),
    }
}

fn cmd_simulate(a: &SimulateArgs, format: Format) -> Outcome {
    let messages = if a.exhaustive {
        MessageSource::Exhaustive
    } else {
        MessageSource::Random
    };
    let report = if a.two_source {
        if a.relays != 1 {
            return Err(Failure::Usage("--two-source needs --relays 1".into()));
        }
        let k0 = a.k0.unwrap_or(0);
        let spec = if a.optimize_slots {
            TwoSourceSpec::threshold(a.n)?
        } else {
            match a.slots.as_slice() {
                [n1] => TwoSourceSpec::new(a.n, *n1, k0)?,
                _ => return Err(Failure::Usage("--two-source takes one slot budget".into())),
            }
        };
        let mut cfg = ExperimentConfig::two_source(spec, a.blocks, a.seed).with_trace(a.trace);
        cfg.messages = messages.clone();
        cfg.relay_messages = messages;
        run_two_source(&cfg)
    } else {
        let spec = if a.optimize_slots {
            hdcascade::coding::optimize_slot_counts_for(a.n, a.relays, a.model)?
        } else {
            if a.slots.len() != a.relays {
                return Err(Failure::Usage(format!("--slots needs {} values", a.relays)));
            }
            CodebookSpec::new(a.n, a.slots.clone(), a.model)?
        };
        run_pipeline(
            &ExperimentConfig::single(spec, a.blocks, a.seed, messages).with_trace(a.trace),
        )
    };
    let report = report?;
    match format {
        Format::Json => render_json(&report),
        Format::Csv => {
            let mut text =
                String::from("messages_sent,messages_correct,rate_bits,relay_rate_bits\n");
            let r1 = report
                .relay_rate_bits_per_use
                .map(|r| format!("{r:.6}"))
                .unwrap_or_default();
            let _ = writeln!(
                text,
                "{},{},{:.6},{r1}",
                report.messages_sent, report.messages_correct, report.achieved_rate_bits_per_use
            );
            if let Some(t) = &report.per_block_trace {
                eprintln!("{}", render_trace(t));
            }
            Ok(Rendered {
                text,
                ext: "csv",
                after: None,
            })
        }
    }
}

fn cmd_cutset(a: &CutsetArgs, format: Format) -> Outcome {
    let base = solve_cascade(a.relays, RelayModelVariant::Ternary)?.chain;
    let report = match a.relay_source {
        Some(r) => verify_two_source_ascending(&base, r, a.trials, a.seed)?,
        None => verify_ascending_minimality(&base, a.trials, a.seed)?,
    };
    let after = (!report.passed())
        .then(|| Failure::CutSet(format!("{} cut-set violations", report.violations.len())));
    let text = match format {
        Format::Json => json(&report)?,
        Format::Csv => format!(
            "trials,chains_checked,subsets_checked,violations\n{},{},{},{}\n",
            report.trials,
            report.chains_checked,
            report.subsets_checked,
            report.violations.len()
        ),
    };
    let ext = if format == Format::Json {
        "json"
    } else {
        "csv"
    };
    Ok(Rendered { text, ext, after })
}

fn cmd_sweep(a: &SweepArgs, format: Format) -> Outcome {
    if a.n_list.iter().any(|&n| n < a.relays + 1) {
        return Err(Failure::Usage(
            "every block length must exceed the relay count".into(),
        ));
    }
    let rows = sweep_rates(&a.n_list, a.relays, a.seed)?;
    match format {
        Format::Json => render_json(&rows),
        Format::Csv => {
            let mut text = String::from(
                "n,n_counts,rate_bits,pipeline_rate_bits,capacity_bits,gap_bits,plateau\n",
            );
            for r in &rows {
                let counts: Vec<String> = r.n_counts.iter().map(usize::to_string).collect();
                let _ = writeln!(
                    text,
                    "{},{},{:.6},{:.6},{:.6},{:.6},{}",
                    r.n,
                    counts.join(";"),
                    r.rate,
                    r.pipeline_rate,
                    r.capacity,
                    r.gap,
                    r.plateau
                );
            }
            Ok(Rendered {
                text,
                ext: "csv",
                after: None,
            })
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Capacity(_) => "capacity",
        Command::Region(_) => "region",
        Command::Simulate(_) => "simulate",
        Command::CutsetCheck(_) => "cutset-check",
        Command::Sweep(_) => "sweep",
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let rendered = match &cli.command {
        Command::Capacity(a) => cmd_capacity(a, cli.format.unwrap_or(Format::Json)),
        Command::Region(a) => cmd_region(a, cli.format.unwrap_or(Format::Csv)),
        Command::Simulate(a) => cmd_simulate(a, cli.format.unwrap_or(Format::Json)),
        Command::CutsetCheck(a) => cmd_cutset(a, cli.format.unwrap_or(Format::Json)),
        Command::Sweep(a) => cmd_sweep(a, cli.format.unwrap_or(Format::Csv)),
    }?;
    let target = cli.output.clone().or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV).map(|dir| {
            PathBuf::from(dir).join(format!("{}.{}", command_name(&cli.command), rendered.ext))
        })
    });
    match target {
        Some(path) => std::fs::write(&path, &rendered.text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", rendered.text),
    }
    rendered.after.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_mapping() {
        let best = Box::new(solve_single_relay(RelayModelVariant::Ternary));
        let f: Failure = Error::NonConvergence {
            iterations: 1,
            best,
        }
        .into();
        assert_eq!(f.code(), 3);
        let f: Failure = Error::Domain("x".into()).into();
        assert_eq!(f.code(), 2);
        let f: Failure = Error::ZeroErrorViolation {
            block: 0,
            sent: "1".into(),
            decoded: "2".into(),
        }
        .into();
        assert_eq!(f.code(), 4);
    }

    #[test]
    fn simulate_requires_slots_or_optimize() {
        assert!(Cli::try_parse_from(["hdcascade", "simulate", "--n", "6"]).is_err());
        assert!(Cli::try_parse_from([
            "hdcascade",
            "simulate",
            "--n",
            "6",
            "--slots",
            "2",
            "--optimize-slots"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["hdcascade", "simulate", "--n", "6", "--slots", "2"]).is_ok());
    }
}
