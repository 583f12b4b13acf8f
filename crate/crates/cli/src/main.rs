use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qratpp_core::oracle::{check_truth_preserving, differential_checks, propagation_episodes, CorpusSpec};
use qratpp_core::{
    compute_stats, parse_qdimacs, reduction_report, run_pipeline, write_qdimacs, CheckMode, Config, Verdict,
};

/// Simplify a QBF in QDIMACS format by removing redundant clauses and
/// universal literals.
#[derive(Parser, Debug)]
#[command(name = "qratpp", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Input file; standard input if omitted.
    file: Option<PathBuf>,

    #[command(flatten)]
    rules: RuleFlags,

    /// Shuffle clause order with this seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Stop after the current check once this many seconds have passed.
    #[arg(long, value_name = "SECS")]
    soft_time_limit: Option<f64>,

    /// Stop after this many rounds of the main loop.
    #[arg(long, value_name = "N")]
    max_rounds: Option<u32>,

    /// Print statistics and the reduction report to standard error.
    #[arg(long)]
    stats: bool,

    /// Write the result here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct RuleFlags {
    #[arg(long)]
    no_qbce: bool,
    #[arg(long)]
    no_qat: bool,
    #[arg(long)]
    no_qrate: bool,
    #[arg(long)]
    no_ble: bool,
    #[arg(long)]
    no_qratu: bool,
    /// Check QRAT with full abstraction and plain unit propagation.
    #[arg(long)]
    qrat: bool,
}

impl RuleFlags {
    fn config(&self) -> Config {
        Config {
            qbce: !self.no_qbce,
            qat: !self.no_qat,
            qrate: !self.no_qrate,
            ble: !self.no_ble,
            qratu: !self.no_qratu,
            mode: if self.qrat {
                CheckMode::QratClassic
            } else {
                CheckMode::QratPlus
            },
            ..Config::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a randomized self-check against the brute-force evaluator.
    Harness(HarnessArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum HarnessKind {
    Truth,
    Differential,
    Propagation,
}

#[derive(Args, Debug)]
struct HarnessArgs {
    #[arg(long, value_enum, default_value = "truth")]
    kind: HarnessKind,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    max_vars: u32,
    #[arg(long, default_value_t = 3)]
    max_blocks: u32,
    #[arg(long, default_value_t = 16)]
    max_clauses: u32,
    #[arg(long, default_value_t = 4)]
    max_clause_len: u32,
    /// Seed for clause shuffling inside the pipeline (truth harness).
    #[arg(long)]
    shuffle: Option<u64>,
    /// Propagation episodes per instance.
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[command(flatten)]
    rules: RuleFlags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Harness(args)) => Ok(harness(args)),
        None => preprocess(&cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("qratpp: {msg}");
            ExitCode::from(1)
        }
    }
}

fn preprocess(cli: &Cli) -> Result<u8, String> {
    let text = match &cli.file {
        Some(path) => fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| format!("stdin: {e}"))?;
            buf
        }
    };
    let name = cli
        .file
        .as_ref()
        .map_or("<stdin>".to_string(), |p| p.display().to_string());
    let input = parse_qdimacs(&text).map_err(|e| format!("{name}: {e}"))?;

    let mut config = cli.rules.config();
    config.seed = cli.seed;
    config.max_outer_rounds = cli.max_rounds;
    config.soft_time_limit = match cli.soft_time_limit {
        Some(secs) => Some(Duration::try_from_secs_f64(secs).map_err(|e| format!("--soft-time-limit: {e}"))?),
        None => None,
    };

    let outcome = run_pipeline(&input, &config);
    let mut out = String::new();
    match outcome.verdict {
        Verdict::SolvedSat => out.push_str("c solved: SAT\n"),
        Verdict::SolvedUnsat => out.push_str("c solved: UNSAT\n"),
        Verdict::Simplified => {}
    }
    if outcome.counters.timed_out {
        out.push_str("c soft time limit reached\n");
    }
    out.push_str(&write_qdimacs(&outcome.formula));

    match &cli.out {
        Some(path) => fs::write(path, out).map_err(|e| format!("{}: {e}", path.display()))?,
        None => io::stdout()
            .lock()
            .write_all(out.as_bytes())
            .map_err(|e| format!("stdout: {e}"))?,
    }

    if cli.stats {
        let before = compute_stats(&input);
        let after = compute_stats(&outcome.formula);
        eprintln!("c before {before}");
        eprintln!("c after  {after}");
        eprintln!("c {}", outcome.counters);
        if input.tautologies_dropped() > 0 {
            eprintln!("c tautologies dropped on input: {}", input.tautologies_dropped());
        }
        eprintln!("c reduction {}", reduction_report(&before, &after));
    }

    Ok(match outcome.verdict {
        Verdict::Simplified => 0,
        Verdict::SolvedSat => 10,
        Verdict::SolvedUnsat => 20,
    })
}

fn harness(args: &HarnessArgs) -> u8 {
    let spec = CorpusSpec {
        max_vars: args.max_vars,
        max_blocks: args.max_blocks,
        max_clauses: args.max_clauses,
        max_clause_len: args.max_clause_len,
        count: args.count,
        seed: args.seed,
    };
    let violations = match args.kind {
        HarnessKind::Truth => {
            let mut config = args.rules.config();
            config.seed = args.shuffle;
            let found = check_truth_preserving(&spec, &config);
            for v in &found {
                println!("{v}");
            }
            println!("summary kind=truth instances={} violations={}", spec.count, found.len());
            found.len() as u64
        }
        HarnessKind::Differential => {
            let report = differential_checks(&spec);
            for line in &report.details {
                println!("violation {line}");
            }
            println!(
                "summary kind=differential instances={} checks={} separations={} qbce_holds={} ble_holds={} violations={}",
                report.instances,
                report.checks,
                report.separations,
                report.qbce_holds,
                report.ble_holds,
                report.violations()
            );
            report.violations()
        }
        HarnessKind::Propagation => {
            let report = propagation_episodes(&spec, args.episodes);
            for line in &report.details {
                println!("violation {line}");
            }
            let violations = report.mismatches + report.invariant_failures;
            println!(
                "summary kind=propagation episodes={} conflicts={} violations={}",
                report.episodes, report.conflicts, violations
            );
            violations
        }
    };
    if violations == 0 {
        0
    } else {
        1
    }
}
