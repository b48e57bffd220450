use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use gridsim_dbc::harness::{
    emit_report, load_config, preset, preset_text, run_sweep, summary_table, SweepConfig, PRESETS,
};
use gridsim_dbc::plan::{
    binding_table, generate_jobs, job_count, parse_plan, substitute, NodeEnv, Overrides,
};

#[derive(Parser)]
#[command(name = "gridsim", version, about = "Grid simulator with a deadline/budget constrained broker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment sweeps.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Inspect parameter-sweep plan files.
    #[command(subcommand)]
    Plan(PlanCommand),
}

#[derive(Subcommand)]
enum SimCommand {
    /// Run the sweep described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in preset, or print its config with --print.
    Preset {
        name: String,
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Write summary.tsv and per-cell traces here instead of printing the
    /// summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the configured seeds, e.g. `--seeds 1,2,3`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum PlanCommand {
    /// Print the job binding table, or instantiate a template per job.
    Expand {
        plan: PathBuf,
        /// Override a parameter's values: `--set name=v1,v2`.
        #[arg(long = "set", value_name = "NAME=VALUES")]
        sets: Vec<String>,
        /// Template to substitute for every job; needs --out.
        #[arg(long, requires = "out")]
        template: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a plan and report its job count.
    Check { plan: PathBuf },
}

fn run(mut cfg: SweepConfig, opts: RunOpts) -> Result<bool> {
    if let Some(seeds) = opts.seeds {
        cfg.seeds = seeds;
    }
    if opts.parallel == Some(0) {
        bail!("--parallel must be at least 1");
    }
    let result = run_sweep(&cfg, opts.parallel)?;
    match &opts.out {
        Some(dir) => {
            let files = emit_report(&result, dir)?;
            eprintln!("{} cells, {} files written to {}", result.cells.len(), files.len(), dir.display());
        }
        None => print!("{}", summary_table(&result)),
    }
    for (key, err) in result.failures() {
        eprintln!(
            "cell {} (users {}, {}, deadline {}, budget {}, seed {}) failed: {err}",
            key.index, key.users, key.strategy, key.deadline, key.budget, key.seed
        );
    }
    Ok(result.all_ok())
}

fn parse_overrides(sets: &[String]) -> Result<Overrides> {
    let mut out = Overrides::new();
    for s in sets {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects NAME=VALUES, got `{s}`"))?;
        out.insert(name.to_string(), values.split(',').map(str::to_string).collect());
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn plan(cmd: PlanCommand) -> Result<bool> {
    match cmd {
        PlanCommand::Check { plan } => {
            let ast = parse_plan(&read(&plan)?).with_context(|| plan.display().to_string())?;
            let n = job_count(&ast, &Overrides::new())?;
            println!(
                "{}: {} parameters, {} tasks, {n} jobs",
                plan.display(),
                ast.parameters.len(),
                ast.tasks.len()
            );
        }
        PlanCommand::Expand {
            plan,
            sets,
            template,
            out,
        } => {
            let ast = parse_plan(&read(&plan)?).with_context(|| plan.display().to_string())?;
            let jobs = generate_jobs(&ast, &parse_overrides(&sets)?, &NodeEnv::default())?;
            match (template, out) {
                (Some(template), Some(dir)) => {
                    let text = read(&template)?;
                    let base = template
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "template".into());
                    std::fs::create_dir_all(&dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    for job in &jobs {
                        let p = dir.join(format!("{}.{base}", job.job_index));
                        std::fs::write(&p, substitute(&text, job)?)
                            .with_context(|| format!("writing {}", p.display()))?;
                    }
                    eprintln!("{} files written to {}", jobs.len(), dir.display());
                }
                _ => print!("{}", binding_table(&ast, &jobs)),
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sim(SimCommand::Run { config, opts }) => {
            load_config(&config).map_err(Into::into).and_then(|cfg| run(cfg, opts))
        }
        Command::Sim(SimCommand::Preset { name, print, opts }) => {
            if print {
                match preset_text(&name) {
                    Some(text) => {
                        print!("{text}");
                        Ok(true)
                    }
                    None => Err(anyhow!(
                        "unknown preset `{name}`; available: {}",
                        PRESETS.map(|p| p.0).join(", ")
                    )),
                }
            } else {
                preset(&name).map_err(Into::into).and_then(|cfg| run(cfg, opts))
            }
        }
        Command::Plan(cmd) => plan(cmd),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
