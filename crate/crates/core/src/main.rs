use causebound::bounds::Query;
use causebound::cli::{
    self, CliError, GammaValue, OutputFormat, ResolvedRun, RunConfig,
};
use causebound::decompose::{ExploreConfig, GammaSpec, SolverPath};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "causebound",
    version,
    about = "Bounds causal effects from finite samples, splits the uncertainty into its \
             non-identifiability core and finite-sample band, and recommends the next move"
)]
struct TopLevel {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds on the empirical joint of one dataset (no candidate search).
    Bounds(RunArgs),
    /// Full pipeline: confidence box, candidate net, per-candidate bounds,
    /// inner/outer decomposition, decision.
    Decompose(RunArgs),
    /// Like decompose, but the exit code encodes the verdict:
    /// 10 return, 11 observe, 12 collect.
    Decide(RunArgs),
    /// Run a scripted experiment spec (TOML or JSON).
    Simulate(SimulateArgs),
    /// Cross-check the exact LP against the brute-force oracle.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Graph JSON file.
    #[arg(long)]
    graph: PathBuf,
    /// Dataset CSV (header = variable names, rows = integer codes).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Joint-table JSON instead of a dataset.
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Config file (TOML or JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    treatment: Option<String>,
    #[arg(long)]
    outcome: Option<String>,
    #[arg(long)]
    treatment_value: Option<usize>,
    #[arg(long)]
    outcome_value: Option<usize>,
    /// Bound the average treatment effect instead of a single do-query.
    #[arg(long)]
    ate: bool,
    /// Threshold: a number, or "empirical" for the observed outcome rate.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps_s: Option<f64>,
    #[arg(long)]
    net_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write an SVG interval plot.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Write the surviving candidate net as JSON (reproducibility audit).
    #[arg(long)]
    dump_net: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SolverArg {
    Lp,
    Gradient,
    Both,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment spec file (TOML or JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory paths inside the spec are resolved against.
    #[arg(long, default_value = ".")]
    base_dir: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    joint: PathBuf,
    #[arg(long)]
    treatment: String,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    treatment_value: Option<usize>,
    #[arg(long)]
    outcome_value: Option<usize>,
    #[arg(long)]
    ate: bool,
    /// Random-walk budget; 0 forces exact vertex enumeration.
    #[arg(long, default_value_t = 0)]
    budget: usize,
    /// Agreement tolerance for the printed verdict.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

fn main() -> ExitCode {
    let top = TopLevel::parse();
    match dispatch(top) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(top: TopLevel) -> Result<ExitCode, CliError> {
    match top.command {
        Command::Bounds(args) => {
            let run = resolve(args)?;
            let out = cli::cmd_bounds(&run)?;
            emit(&run, &serde_json::to_string_pretty(&out).expect("serializable"), || {
                cli::render_bounds_text(&out)
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Decompose(args) => {
            let run = resolve(args)?;
            let report = cli::cmd_decompose(&run)?;
            emit(&run, &serde_json::to_string_pretty(&report).expect("serializable"), || {
                cli::render_report_text(&report)
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Decide(args) => {
            let run = resolve(args)?;
            let report = cli::cmd_decide(&run)?;
            emit(&run, &serde_json::to_string_pretty(&report).expect("serializable"), || {
                cli::render_report_text(&report)
            })?;
            Ok(ExitCode::from(report.decision.exit_code() as u8))
        }
        Command::Simulate(args) => {
            let out = cli::cmd_simulate(&args.spec, &args.base_dir)?;
            match args.format {
                FormatArg::Json => {
                    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"))
                }
                FormatArg::Text => {
                    print!("{}", out.summary_csv);
                    eprintln!("{} runs completed", out.runs);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle(args) => {
            let graph = cli::load_graph(&args.graph)?;
            let joint = cli::load_joint(&args.joint)?;
            let query = if args.ate {
                Query::Ate { treatment: args.treatment.clone(), outcome: args.outcome.clone() }
            } else {
                Query::Do {
                    treatment: args.treatment.clone(),
                    t_value: args.treatment_value.unwrap_or(1),
                    outcome: args.outcome.clone(),
                    y_value: args.outcome_value.unwrap_or(1),
                }
            };
            let out = cli::cmd_oracle(&graph, &joint, &query, args.budget, args.tolerance)?;
            match args.format {
                FormatArg::Json => {
                    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"))
                }
                FormatArg::Text => {
                    println!("{}", out.query);
                    println!("  lp      [{:.6}, {:.6}]", out.lp.lower, out.lp.upper);
                    println!(
                        "  {:<7} [{:.6}, {:.6}]",
                        out.oracle.method, out.oracle.lower, out.oracle.upper
                    );
                    println!("  max gap {:.3e} ({})", out.max_gap, if out.agree { "agree" } else { "DISAGREE" });
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit(
    run: &ResolvedRun,
    json: &str,
    text: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let rendered = match run.format {
        OutputFormat::Json => format!("{}\n", json),
        OutputFormat::Text => text(),
    };
    print!("{}", rendered);
    if let Some(path) = &run.out {
        // Files always get the JSON form for downstream tooling.
        std::fs::write(path, format!("{}\n", json)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Merges config-file values and flags (flags win) into a resolved run.
fn resolve(args: RunArgs) -> Result<ResolvedRun, CliError> {
    let file_cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let graph = cli::load_graph(&args.graph)?;
    let data = match &args.data {
        Some(p) => Some(cli::load_dataset(p, &graph)?),
        None => None,
    };
    let joint = match &args.joint {
        Some(p) => Some(cli::load_joint(p)?),
        None => None,
    };

    let treatment = args
        .treatment
        .or(file_cfg.treatment)
        .ok_or_else(|| CliError::Parse("missing --treatment".into()))?;
    let outcome = args
        .outcome
        .or(file_cfg.outcome)
        .ok_or_else(|| CliError::Parse("missing --outcome".into()))?;
    let ate_mode = args.ate || file_cfg.mode.as_deref() == Some("ate");
    let query = if ate_mode {
        Query::Ate { treatment, outcome }
    } else {
        Query::Do {
            treatment,
            t_value: args.treatment_value.or(file_cfg.treatment_value).unwrap_or(1),
            outcome,
            y_value: args.outcome_value.or(file_cfg.outcome_value).unwrap_or(1),
        }
    };

    let gamma = match args.gamma {
        Some(ref w) if w == "empirical" => GammaSpec::Empirical,
        Some(ref w) => GammaSpec::Fixed(
            w.parse::<f64>()
                .map_err(|_| CliError::Parse(format!("--gamma must be a number or \"empirical\", got `{}`", w)))?,
        ),
        None => match file_cfg.gamma {
            Some(GammaValue::Fixed(v)) => GammaSpec::Fixed(v),
            Some(GammaValue::Word(ref w)) if w == "empirical" => GammaSpec::Empirical,
            Some(GammaValue::Word(w)) => {
                return Err(CliError::Parse(format!("unknown gamma `{}` in config", w)))
            }
            None => GammaSpec::Empirical,
        },
    };

    let defaults = ExploreConfig::default();
    let config = ExploreConfig {
        alpha: args.alpha.or(file_cfg.alpha).unwrap_or(defaults.alpha),
        eps_s: args.eps_s.or(file_cfg.eps_s).unwrap_or(defaults.eps_s),
        net_samples: args.net_samples.or(file_cfg.net_samples).unwrap_or(defaults.net_samples),
        seed: args.seed.or(file_cfg.seed).unwrap_or(defaults.seed),
        solver: match args.solver {
            Some(SolverArg::Lp) => SolverPath::Lp,
            Some(SolverArg::Gradient) => SolverPath::Gradient,
            Some(SolverArg::Both) => SolverPath::Both,
            None => file_cfg.solver.unwrap_or(defaults.solver),
        },
        gamma,
        trainer_step: file_cfg.trainer_step.unwrap_or(defaults.trainer_step),
        trainer_dual_lr: file_cfg.trainer_dual_lr.unwrap_or(defaults.trainer_dual_lr),
        trainer_weight: file_cfg.trainer_weight.unwrap_or(defaults.trainer_weight),
        trainer_epochs: file_cfg.trainer_epochs.unwrap_or(defaults.trainer_epochs),
    };

    Ok(ResolvedRun {
        graph,
        data,
        joint,
        query,
        config,
        format: match args.format {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
        },
        out: args.out,
        plot: args.plot,
        dump_net: args.dump_net,
    })
}
