use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qevo_core::evolution::Strategy;
use qevo_core::harness::{
    aggregate, read_aggregate, read_records, render_plots, replay_best, run_experiment, write_aggregate,
    AgentKind, Checkpoint, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "qevo", version, about = "Evolve quantum circuit agents for the Coin Game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an evolutionary experiment over one or more seeds.
    Run(RunArgs),
    /// Average per-generation metrics across seeds.
    Aggregate {
        /// Per-run CSV files written by `run`.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Output file (default: `<first input>_aggregate.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw SVG line charts from aggregate CSV files.
    Plot {
        /// Aggregate CSV files; each becomes one labelled pair of series.
        #[arg(required = true)]
        aggregates: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Play one episode with the best agent of a checkpoint.
    Replay {
        checkpoint: PathBuf,
        /// Episode seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    concept: Option<AgentKind>,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Master seed; repeat for several independent runs.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Evaluate every individual on the same episode seed.
    #[arg(long)]
    fixed_eval_seed: bool,
    /// Continue from checkpoint files of this experiment.
    #[arg(long, num_args = 1..)]
    resume: Vec<PathBuf>,
    /// Suppress per-generation progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Aggregate { csv, out } => aggregate_cmd(&csv, out),
        Command::Plot { aggregates, out } => plot(&aggregates, &out),
        Command::Replay { checkpoint, seed, out } => replay(&checkpoint, seed, out),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let resume = args
        .resume
        .iter()
        .map(|p| Checkpoint::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let resolved = match (&args.config, args.concept, resume.first()) {
        // Continue exactly the checkpointed experiment, possibly for longer.
        (None, None, Some(first)) => {
            let mut c = first.config.clone();
            c.seeds = resume.iter().map(|cp| cp.seed).collect();
            c.generations = args.generations.unwrap_or(c.generations);
            c.out_dir = args.out.clone().unwrap_or(c.out_dir);
            c.jobs = args.jobs.unwrap_or(c.jobs);
            c
        }
        _ => experiment_config(&args)?.resolve()?,
    };
    eprintln!(
        "{}: {} seeds, {} generations, population {}, {} jobs",
        resolved.label(),
        resolved.seeds.len(),
        resolved.generations,
        resolved.evo.population,
        resolved.jobs
    );
    let quiet = args.quiet;
    let output = run_experiment(&resolved, &resume, |r| {
        if !quiet {
            eprintln!(
                "seed {:>3} gen {:>4}  best {:>4}  avg {:>8.3}  gates {:>4}",
                r.seed, r.generation, r.best_score, r.avg_score, r.best_gates_total
            );
        }
    })?;
    println!("{}", output.csv_path.display());
    for cp in &output.checkpoints {
        println!("{}", cp.display());
    }
    Ok(())
}

fn experiment_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.config, args.concept) {
        (Some(path), concept) => {
            let mut c = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(concept) = concept {
                c.concept = concept;
            }
            c
        }
        (None, Some(concept)) => ExperimentConfig::new(concept),
        (None, None) => bail!("one of --config, --concept or --resume is required"),
    };
    config.strategy = args.strategy.or(config.strategy);
    config.generations = args.generations.or(config.generations);
    config.population = args.population.or(config.population);
    config.steps = args.steps.or(config.steps);
    config.out_dir = args.out.clone().or(config.out_dir);
    config.jobs = args.jobs.or(config.jobs);
    config.fixed_eval_seed |= args.fixed_eval_seed;
    if !args.seeds.is_empty() {
        config.seeds = Some(args.seeds.clone());
    }
    Ok(config)
}

fn aggregate_cmd(inputs: &[PathBuf], out: Option<PathBuf>) -> Result<()> {
    let mut records = Vec::new();
    for path in inputs {
        records.extend(read_records(path).with_context(|| format!("reading {}", path.display()))?);
    }
    let rows = aggregate(&records)?;
    let out = out.unwrap_or_else(|| {
        let first = &inputs[0];
        let stem = first.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        first.with_file_name(format!("{stem}_aggregate.csv"))
    });
    write_aggregate(&out, &rows)?;
    println!("{}", out.display());
    Ok(())
}

fn plot(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let mut runs = Vec::new();
    for path in inputs {
        let rows = read_aggregate(path).with_context(|| format!("reading {}", path.display()))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        runs.push((stem.trim_end_matches("_aggregate").to_string(), rows));
    }
    let files = render_plots(&runs, out)?;
    if files.is_empty() {
        eprintln!("warning: no data rows, nothing plotted");
    }
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn replay(checkpoint: &Path, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let trace = replay_best(checkpoint, seed)?;
    match out {
        Some(path) => fs::write(&path, trace.to_string()).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{trace}"),
    }
    let m = trace.evaluation.stats.metrics();
    eprintln!(
        "score {}  total coins {}  own coins {}  own coin rate {:.3}",
        m.score, m.total_coins, m.own_coins, m.own_coin_rate
    );
    Ok(())
}
