//! `fplab` — run, validate, and audit repeated-play learning experiments.
//!
//! Exit codes: 0 on success, 2 on configuration errors (bad flags, bad
//! config files, uncertifiable schedules), 3 when an assumption audit
//! fails (post-run under `--strict`, or via the `audit` command).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fplab_core::audit::{audit_trace, AuditReport};
use fplab_core::config::{ExperimentConfig, ResolvedExperiment, RhoSpec, VariantKind};
use fplab_core::game::TieBreak;
use fplab_core::games::BUILTIN_GAMES;
use fplab_core::presets::{experiment_preset, experiment_preset_names, EXPERIMENT_PRESETS};
use fplab_core::runner::{run_experiment, trace_file_name, ExperimentSummary};
use fplab_core::schedule::RhoFamily;
use fplab_core::trace::read_trace;
use fplab_core::AlgorithmSpec;

/// Default output directory when `--out-dir` is not given.
const OUT_DIR_ENV: &str = "FPLAB_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "fplab",
    version,
    about = "Repeated-play learning simulator: fictitious-play-type algorithms, \
             a strongly convergent randomized variant, and equilibrium diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a preset or a config file
    Run(RunArgs),
    /// List experiment presets, algorithm presets, and built-in games
    List,
    /// Parse and validate a config without running it
    Validate(ValidateArgs),
    /// Re-check the rate assumptions on a stored run directory
    Audit(AuditArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Experiment preset name (see `fplab list`)
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a TOML experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run this many seeds (0..N), replacing the config's seed list
    #[arg(long, value_name = "N")]
    seeds: Option<u64>,
    /// Number of rounds
    #[arg(long, value_name = "T")]
    horizon: Option<usize>,
    /// Make the run strong with uniform activation rates t^(-R)
    #[arg(long, value_name = "R")]
    rho_exponent: Option<f64>,
    /// Best-response tie-breaking rule
    #[arg(long, value_enum)]
    tie_break: Option<TieBreakArg>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Where to write config.toml, trace CSVs, and summary.toml
    /// (default: $FPLAB_OUT_DIR if set, else keep everything in memory)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Exit nonzero if the post-run assumption audit fails
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Print the fully resolved config, defaults included
    #[arg(long)]
    show_defaults: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// Run directory containing config.toml and trace_seed*.csv files
    dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    /// Deterministic: lowest action index among the tied set
    LowestIndex,
    /// Uniform draw from the tied set (seeded)
    Random,
}

impl From<TieBreakArg> for TieBreak {
    fn from(arg: TieBreakArg) -> Self {
        match arg {
            TieBreakArg::LowestIndex => TieBreak::LowestIndex,
            TieBreakArg::Random => TieBreak::Random,
        }
    }
}

/// An error plus the exit code it should produce.
enum Failure {
    /// Bad flags, configs, or schedules → exit 2.
    Config(anyhow::Error),
    /// I/O or internal failures → exit 1.
    Runtime(anyhow::Error),
}

fn config_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(err.into())
}

fn runtime_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(err.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::List => cmd_list(),
        Command::Validate(args) => cmd_validate(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Loads the experiment from `--preset` or `--config` and applies the
/// shared command-line overrides.
fn load_config(source: &SourceArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match (&source.preset, &source.config) {
        (Some(name), None) => experiment_preset(name).ok_or_else(|| {
            Failure::Config(anyhow!(
                "unknown preset '{name}'; available: {}",
                experiment_preset_names().join(", ")
            ))
        })?,
        (None, Some(path)) => ExperimentConfig::from_path(path).map_err(config_err)?,
        (None, None) => {
            return Err(Failure::Config(anyhow!(
                "nothing to run; pass --preset <name> or --config <path>"
            )))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --preset with --config"),
    };
    if let Some(n) = source.seeds {
        config.seeds = None;
        config.seed_count = Some(n);
    }
    if let Some(t) = source.horizon {
        config.horizon = t;
    }
    if let Some(r) = source.rho_exponent {
        config.variant.kind = VariantKind::Strong;
        config.variant.rho = Some(RhoSpec::Uniform(
            RhoFamily::power(1.0, r).map_err(config_err)?,
        ));
    }
    if let Some(tb) = source.tie_break {
        config.tie_break = tb.into();
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Failure> {
    let mut config = load_config(&args.source)?;
    if let Some(dir) = &args.out_dir {
        config.output.dir = Some(dir.clone());
    } else if config.output.dir.is_none() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            config.output.dir = Some(PathBuf::from(dir));
        }
    }
    let resolved = config.validate().map_err(config_err)?;
    let auditable = resolved.out_dir.is_some() && resolved.write_traces;
    if args.strict && !auditable {
        return Err(Failure::Config(anyhow!(
            "--strict audits the produced traces, so they must be kept: \
             pass --out-dir (or set {OUT_DIR_ENV}) and leave output.write_traces on"
        )));
    }

    if let Some(dir) = &resolved.out_dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))
            .map_err(runtime_err)?;
        let echo = resolved.to_config(&config).to_toml_string();
        write_file(&dir.join("config.toml"), echo.as_bytes()).map_err(runtime_err)?;
    }

    let outcome = run_experiment(&resolved).map_err(runtime_err)?;
    print_summary(&resolved, &outcome.summary);

    if let Some(dir) = &resolved.out_dir {
        let summary_path = dir.join("summary.toml");
        write_file(&summary_path, outcome.summary.to_toml_string().as_bytes())
            .map_err(runtime_err)?;
        println!("artifacts written to {}", dir.display());
    }

    if !auditable {
        println!("assumption audit skipped (traces not retained; pass --out-dir to keep them)");
        return Ok(ExitCode::SUCCESS);
    }
    let dir = resolved.out_dir.as_ref().expect("auditable implies out_dir");
    let failures = audit_stored_traces(dir, &resolved)?;
    if failures > 0 && args.strict {
        eprintln!("strict mode: {failures} seed(s) failed the assumption audit");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_list() -> Result<ExitCode, Failure> {
    println!("experiment presets:");
    for preset in EXPERIMENT_PRESETS {
        println!("  {:<26} {}", preset.name, preset.summary);
    }
    println!();
    println!("algorithm presets:");
    for name in AlgorithmSpec::preset_names() {
        let spec = AlgorithmSpec::preset(name).map_err(runtime_err)?;
        println!(
            "  {:<26} target: {}",
            name,
            fplab_core::config::MetricKind::for_target(spec.target).name()
        );
    }
    println!();
    println!("built-in games:");
    for game in BUILTIN_GAMES {
        println!("  {:<26} {}", game.name, game.summary);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, Failure> {
    let config = load_config(&args.source)?;
    let resolved = config.validate().map_err(config_err)?;
    if args.show_defaults {
        print!("{}", resolved.to_config(&config).to_toml_string());
    } else {
        println!(
            "ok: '{}' — {} players, horizon {}, {} seed(s), algorithm {}{}",
            resolved.name,
            resolved.game.players(),
            resolved.horizon,
            resolved.seeds.len(),
            resolved.spec.name,
            if resolved.strong.is_some() {
                " (strong)"
            } else {
                ""
            },
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode, Failure> {
    let config_path = args.dir.join("config.toml");
    let config = ExperimentConfig::from_path(&config_path).map_err(config_err)?;
    let resolved = config.validate().map_err(config_err)?;
    let failures = audit_stored_traces(&args.dir, &resolved)?;
    if failures > 0 {
        eprintln!("{failures} seed(s) failed the assumption audit");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

/// Audits every stored seed trace; returns the number of failing seeds.
fn audit_stored_traces(dir: &Path, resolved: &ResolvedExperiment) -> Result<usize, Failure> {
    let mut failures = 0;
    let mut audited = 0;
    for &seed in &resolved.seeds {
        let path = dir.join(trace_file_name(seed));
        if !path.exists() {
            println!("seed {seed}: no trace file at {}, skipped", path.display());
            continue;
        }
        let file = fs::File::open(&path)
            .with_context(|| format!("opening {}", path.display()))
            .map_err(runtime_err)?;
        let (_, records) = read_trace(file)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(runtime_err)?;
        let report = audit_trace(&records, resolved)
            .with_context(|| format!("auditing {}", path.display()))
            .map_err(runtime_err)?;
        audited += 1;
        print_audit_line(seed, &report);
        if !report.passed() {
            failures += 1;
        }
    }
    if audited == 0 {
        return Err(Failure::Config(anyhow!(
            "no trace files found in {} for seeds {:?}",
            dir.display(),
            resolved.seeds
        )));
    }
    println!(
        "assumption audit: {}/{audited} seed(s) pass",
        audited - failures
    );
    Ok(failures)
}

fn print_audit_line(seed: u64, report: &AuditReport) {
    let ratios = report
        .counting_ratios
        .iter()
        .map(|r| format!("{r:.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    if report.passed() {
        println!("seed {seed}: audit pass (counting ratios {ratios})");
    } else {
        let problems = report
            .problems()
            .iter()
            .map(|(id, status)| format!("{id}: {status:?}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!("seed {seed}: audit FAIL — {problems} (counting ratios {ratios})");
    }
}

fn print_summary(resolved: &ResolvedExperiment, summary: &ExperimentSummary) {
    println!(
        "'{}' — {} players, horizon {}, {} seed(s), algorithm {}{}",
        summary.name,
        resolved.game.players(),
        summary.horizon,
        summary.seeds.len(),
        resolved.spec.name,
        if resolved.strong.is_some() {
            " (strong)"
        } else {
            ""
        },
    );
    let xi = &summary.final_xi_metric;
    let g = &summary.final_g_metric;
    println!(
        "final {} of empirical statistic: min {:.4}  median {:.4}  max {:.4}",
        resolved.xi_metric.name(),
        xi.min,
        xi.median,
        xi.max
    );
    println!(
        "final {} of realized play:       min {:.4}  median {:.4}  max {:.4}",
        resolved.g_metric.name(),
        g.min,
        g.median,
        g.max
    );
    for seed in &summary.per_seed {
        println!(
            "  seed {:>3}: xi {:.4}  g {:.4}  windowed utility {}",
            seed.seed,
            seed.final_xi_metric,
            seed.final_g_metric,
            seed.windowed_utility_final
                .iter()
                .map(|u| format!("{u:+.4}"))
                .collect::<Vec<_>>()
                .join(" / "),
        );
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
