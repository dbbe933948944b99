use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use remedibench::runner::{
    create_remediator, events_ndjson, results_csv, run_detailed, score_sli_csv, RunError,
};
use remedibench::{builtin_strategies, compare, parse_scenario, parse_slos, scenario_digest};
use remedibench::{RunReport, ScenarioConfig};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "remedibench",
    version,
    about = "Benchmark remediation strategies on a simulated edge-cloud inference cluster"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under one strategy and write its report.
    Run(RunArgs),
    /// Rank strategies by mean V_total over repeated seeds.
    Compare(CompareArgs),
    /// Check a scenario file and print its digest.
    Validate {
        /// Scenario JSON file.
        scenario: PathBuf,
    },
    /// Score an SLI CSV against a set of SLOs.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory, created if missing.
    #[arg(long, env = "ECOSCAPE_OUT", default_value = "results")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Strategy name; defaults to the scenario's remediator, else `noop`.
    #[arg(long)]
    strategy: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the full event log and per-message results.
    #[arg(long)]
    full_log: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Strategies to compare, comma separated or repeated.
    #[arg(
        long = "strategies",
        short = 's',
        value_delimiter = ',',
        required = true
    )]
    strategies: Vec<String>,
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScoreArgs {
    /// SLI CSV with at least `t_ms`, `slo` and `value` columns.
    #[arg(long)]
    sli: PathBuf,
    /// SLO definitions: a JSON array, or an object with a `slos` key.
    #[arg(long)]
    slos: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

/// Failure classes, mapped to exit codes 1 and 2.
enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Score(args) => cmd_score(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut cfg = parse_scenario(&text).with_context(|| format!("{}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run_failure(e: RunError) -> Failure {
    match e {
        RunError::Fault(_) | RunError::Slo(_) => Failure::Internal(e.into()),
        _ => Failure::Input(e.into()),
    }
}

/// Writes all `files` into `dir`, refusing to clobber any of them unless
/// `force` is set. Nothing is written when one would be refused.
fn write_outputs(
    dir: &Path,
    force: bool,
    files: &[(&str, String)],
) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let paths: Vec<PathBuf> = files.iter().map(|(name, _)| dir.join(name)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(anyhow!("{} exists; pass --force to overwrite", p.display()).into());
        }
    }
    for (path, (_, body)) in paths.iter().zip(files) {
        fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(paths)
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let cfg = load_scenario(&args.scenario, args.seed)?;
    let registry = builtin_strategies();
    let name = args
        .strategy
        .or_else(|| cfg.remediator.as_ref().map(|r| r.name.clone()))
        .unwrap_or_else(|| "noop".into());
    let mut remediator = create_remediator(&registry, &cfg, &name)
        .with_context(|| format!("{}: remediator", args.scenario.display()))?;
    let detailed = run_detailed(&cfg, remediator.as_mut()).map_err(run_failure)?;
    let report = &detailed.report;
    check_report(report)?;

    let summary = json!({
        "scenario_digest": report.scenario_digest,
        "seed": report.seed,
        "strategy": report.strategy,
        "events": report.events,
        "conservation": report.conservation,
        "transitions": report.transitions,
        "rejected_actions": report.rejected_actions,
    });
    let mut files = vec![
        ("report.json", report.to_json() + "\n"),
        ("sli.csv", report.sli_csv()),
        (
            "events_summary.json",
            serde_json::to_string_pretty(&summary)? + "\n",
        ),
    ];
    if args.full_log {
        files.push(("events.ndjson", events_ndjson(&detailed.finished.events)));
        files.push(("results.csv", results_csv(&detailed.finished)));
    }
    let written = write_outputs(&args.output.out, args.output.force, &files)?;

    match args.output.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Csv => {
            println!("slo,weight,score");
            for s in &report.slos {
                println!("{},{},{}", s.name, s.weight, s.score);
            }
            println!("total,,{}", report.v_total);
        }
        Format::Text => {
            print!("{}", run_text(report));
            for p in written {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

/// Guards the report against internal scoring inconsistencies.
fn check_report(report: &RunReport) -> CmdResult {
    let recomputed: f64 = report.slos.iter().map(|s| s.weight * s.score).sum();
    if (recomputed - report.v_total).abs() > 1e-12 {
        return Err(Failure::Internal(anyhow!(
            "V_total {} does not match weighted scores {recomputed}",
            report.v_total
        )));
    }
    if !report.conservation.holds() {
        return Err(Failure::Internal(anyhow!(
            "message conservation violated: {:?}",
            report.conservation
        )));
    }
    Ok(())
}

fn run_text(report: &RunReport) -> String {
    let mut out = String::new();
    writeln!(out, "scenario {}", report.scenario_digest).unwrap();
    writeln!(out, "strategy {}  seed {}", report.strategy, report.seed).unwrap();
    writeln!(
        out,
        "{:<12} {:>6} {:>7} {:>9}",
        "slo", "weight", "score", "compliant"
    )
    .unwrap();
    for s in &report.slos {
        writeln!(
            out,
            "{:<12} {:>6.3} {:>7.3} {:>8.1}%",
            s.name,
            s.weight,
            s.score,
            s.compliant_fraction * 100.0
        )
        .unwrap();
    }
    let e = &report.events;
    writeln!(
        out,
        "messages: {} produced, {} completed, {} dropped; energy {:.1} J",
        e.produced, e.completed, e.dropped, e.energy_j
    )
    .unwrap();
    writeln!(out, "V_total = {:.3}", report.v_total).unwrap();
    out
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let cfg = load_scenario(&args.scenario, args.seed)?;
    let registry = builtin_strategies();
    let report =
        compare(&cfg, &args.strategies, args.repetitions, &registry).map_err(run_failure)?;
    let written = write_outputs(
        &args.output.out,
        args.output.force,
        &[
            ("comparison.csv", report.to_csv()),
            ("comparison.json", report.to_json() + "\n"),
        ],
    )?;
    match args.output.format {
        Format::Text => {
            print!("{}", report.to_text());
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> CmdResult {
    let cfg = load_scenario(path, None)?;
    println!("{}", scenario_digest(&cfg));
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> CmdResult {
    let slo_text = fs::read_to_string(&args.slos)
        .with_context(|| format!("cannot read {}", args.slos.display()))?;
    let slos = parse_slos(&slo_text).with_context(|| format!("{}", args.slos.display()))?;
    let csv = fs::read_to_string(&args.sli)
        .with_context(|| format!("cannot read {}", args.sli.display()))?;
    let score = score_sli_csv(&csv, &slos).with_context(|| format!("{}", args.sli.display()))?;
    match args.format {
        Format::Text => {
            for (s, w) in score.slos.iter().zip(&score.weights) {
                println!("{:<12} weight {:.3}  score {:.3}", s.name, w, s.score);
            }
            println!("V_total = {:.3}", score.v_total);
        }
        Format::Csv => {
            println!("slo,weight,score");
            for (s, w) in score.slos.iter().zip(&score.weights) {
                println!("{},{},{}", s.name, w, s.score);
            }
            println!("total,,{}", score.v_total);
        }
        Format::Json => {
            let slos: Vec<_> = score
                .slos
                .iter()
                .zip(&score.weights)
                .map(|(s, w)| json!({"name": s.name, "weight": w, "score": s.score}))
                .collect();
            let doc = json!({"slos": slos, "v_total": score.v_total});
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(())
}
