//! Seeded experiment campaigns: configuration, the generation loop, CSV
//! metrics, checkpoints, aggregation across seeds, charts, and replay.
//!
//! Output files of a run with label `<concept>_<strategy>` in `out_dir`:
//!
//! * `<label>.csv`: one [`GenerationRecord`] row per (seed, generation).
//! * `<label>_timing.csv`: wall-clock seconds per (seed, generation). Kept
//!   apart so the metrics file is byte-reproducible.
//! * `<label>_seed<seed>.checkpoint.json`: the last evaluated population of
//!   each seed, see [`Checkpoint`].

mod config;
mod replay;
mod report;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{AgentKind, ExperimentConfig, ResolvedConfig};
pub use replay::{replay_best, Trace, TraceLine, TRACE_HEADER};
pub use report::{
    aggregate, read_aggregate, read_records, render_plots, write_aggregate, AggregateRow, CHART_FILES, METRICS,
};

use crate::evolution::{
    elite_index, evaluate_population, init_rng, next_generation, AgentGenome, EvolutionError, Individual,
};
use crate::genome::random_init;
use crate::policy::NnGenome;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("cannot aggregate: {0}")]
    Ragged(String),
    #[error("plotting failed: {0}")]
    Plot(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Metrics of one generation of one seed. "Best" refers to the elite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub seed: u64,
    pub generation: usize,
    pub best_score: i64,
    pub avg_score: f64,
    pub best_total_coins: u32,
    pub avg_total_coins: f64,
    pub best_own_coins: u32,
    pub avg_own_coins: f64,
    pub best_own_coin_rate: f64,
    pub avg_own_coin_rate: f64,
    pub best_gates_total: usize,
    pub best_gates_parameterized: usize,
    pub best_param_count: usize,
}

impl GenerationRecord {
    pub fn from_population(seed: u64, generation: usize, population: &[Individual]) -> Option<Self> {
        let elite = &population[elite_index(population)?];
        let best = elite.evaluation.stats.metrics();
        let n = population.len() as f64;
        let mean = |f: &dyn Fn(&Individual) -> f64| population.iter().map(f).sum::<f64>() / n;
        let gates = elite.genome.gate_count();
        Some(Self {
            seed,
            generation,
            best_score: best.score,
            avg_score: mean(&|i| i.fitness() as f64),
            best_total_coins: best.total_coins,
            avg_total_coins: mean(&|i| f64::from(i.evaluation.stats.metrics().total_coins)),
            best_own_coins: best.own_coins,
            avg_own_coins: mean(&|i| f64::from(i.evaluation.stats.metrics().own_coins)),
            best_own_coin_rate: best.own_coin_rate,
            avg_own_coin_rate: mean(&|i| i.evaluation.stats.metrics().own_coin_rate),
            best_gates_total: gates.total,
            best_gates_parameterized: gates.parameterized,
            best_param_count: elite.genome.param_count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub seed: u64,
    pub generation: usize,
    pub wall_clock_seconds: f64,
}

/// Random-stream position of a run. Every stream is derived from the master
/// seed and a generation index, so these two numbers are the whole state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub master_seed: u64,
    pub next_generation: usize,
}

/// Evaluated population of the last finished generation of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ResolvedConfig,
    pub seed: u64,
    pub generation: usize,
    pub rng: RngState,
    pub population: Vec<Individual>,
    pub records: Vec<GenerationRecord>,
}

impl Checkpoint {
    pub fn path_for(config: &ResolvedConfig, seed: u64) -> PathBuf {
        config.out_dir.join(format!("{}_seed{seed}.checkpoint.json", config.label()))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string(self).map_err(|e| HarnessError::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let checkpoint: Checkpoint = serde_json::from_str(&text).map_err(|e| HarnessError::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let corrupt = |message: String| HarnessError::Checkpoint {
            path: path.to_path_buf(),
            message,
        };
        if checkpoint.population.is_empty() {
            return Err(corrupt("population is empty".into()));
        }
        for individual in &checkpoint.population {
            individual.genome.validate().map_err(|e| corrupt(e.to_string()))?;
        }
        Ok(checkpoint)
    }

    pub fn elite(&self) -> &Individual {
        &self.population[elite_index(&self.population).expect("checked non-empty on load")]
    }
}

/// The initial population of `seed`.
pub fn initial_population(config: &ResolvedConfig, seed: u64) -> Result<Vec<AgentGenome>, HarnessError> {
    (0..config.evo.population)
        .map(|i| {
            let mut rng = init_rng(seed, i);
            Ok(match config.kind.circuit_concept() {
                Some(concept) => AgentGenome::Circuit(random_init(concept, &config.init, &mut rng).map_err(EvolutionError::from)?),
                None if config.kind == AgentKind::Nn => AgentGenome::Network(NnGenome::random(config.hidden, &mut rng)),
                None => AgentGenome::Random,
            })
        })
        .collect()
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<GenerationRecord>,
    pub timings: Vec<TimingRecord>,
    pub csv_path: PathBuf,
    pub checkpoints: Vec<PathBuf>,
}

/// Run (or continue) the generation loop for one seed.
///
/// `on_generation` sees each record as soon as its generation is evaluated.
pub fn run_seed(
    config: &ResolvedConfig,
    seed: u64,
    resume: Option<Checkpoint>,
    mut on_generation: impl FnMut(&GenerationRecord) + Send,
) -> Result<(Vec<GenerationRecord>, Vec<TimingRecord>, Checkpoint), HarnessError> {
    let (mut genomes, mut records, start) = match resume {
        Some(cp) => {
            if cp.config.evo != config.evo || cp.config.kind != config.kind || cp.seed != seed {
                return Err(HarnessError::Config("checkpoint was written by a different experiment".into()));
            }
            let next = cp.rng.next_generation;
            if next >= config.generations {
                return Ok((cp.records.clone(), Vec::new(), cp));
            }
            let genomes = next_generation(&cp.population, &config.evo, seed, cp.generation as u64)?;
            (genomes, cp.records, next)
        }
        None => (initial_population(config, seed)?, Vec::new(), 0),
    };
    let mut timings = Vec::new();
    let mut last = None;
    for generation in start..config.generations {
        let clock = Instant::now();
        let population = evaluate_population(genomes, &config.evo, seed, generation as u64)?;
        let record = GenerationRecord::from_population(seed, generation, &population)
            .ok_or(EvolutionError::EmptyPopulation)?;
        on_generation(&record);
        records.push(record);
        genomes = if generation + 1 < config.generations {
            next_generation(&population, &config.evo, seed, generation as u64)?
        } else {
            Vec::new()
        };
        timings.push(TimingRecord {
            seed,
            generation,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
        });
        last = Some((generation, population));
    }
    let (generation, population) = last.expect("at least one generation runs");
    let checkpoint = Checkpoint {
        config: config.clone(),
        seed,
        generation,
        rng: RngState {
            master_seed: seed,
            next_generation: generation + 1,
        },
        population,
        records: records.clone(),
    };
    Ok((records, timings, checkpoint))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))
}

/// Run every seed of `config` and write its CSV files and checkpoints.
///
/// With `resume`, seeds that have a checkpoint continue from it.
pub fn run_experiment(
    config: &ResolvedConfig,
    resume: &[Checkpoint],
    mut on_generation: impl FnMut(&GenerationRecord) + Send,
) -> Result<ExperimentOutput, HarnessError> {
    fs::create_dir_all(&config.out_dir).map_err(|e| HarnessError::io(&config.out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut checkpoints = Vec::new();
    for &seed in &config.seeds {
        let start = resume.iter().find(|cp| cp.seed == seed).cloned();
        let (seed_records, seed_timings, checkpoint) =
            pool.install(|| run_seed(config, seed, start, &mut on_generation))?;
        let path = Checkpoint::path_for(config, seed);
        checkpoint.save(&path)?;
        checkpoints.push(path);
        records.extend(seed_records);
        timings.extend(seed_timings);
    }
    let csv_path = config.out_dir.join(format!("{}.csv", config.label()));
    write_csv(&csv_path, &records)?;
    write_csv(&config.out_dir.join(format!("{}_timing.csv", config.label())), &timings)?;
    Ok(ExperimentOutput {
        records,
        timings,
        csv_path,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: AgentKind, dir: &Path) -> ResolvedConfig {
        let mut c = ExperimentConfig::new(kind);
        c.generations = Some(3);
        c.population = Some(4);
        c.steps = Some(10);
        c.seeds = Some(vec![1, 2]);
        c.gates = Some(8);
        c.hidden = Some([3, 4]);
        c.out_dir = Some(dir.to_path_buf());
        c.jobs = Some(2);
        c.resolve().unwrap()
    }

    #[test]
    fn degenerate_random_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new(AgentKind::Random);
        c.generations = Some(1);
        c.population = Some(2);
        c.seeds = Some(vec![0, 1, 2]);
        c.out_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(&c.resolve().unwrap(), &[], |_| {}).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.records.iter().all(|r| r.generation == 0 && r.best_gates_total == 0));
        let text = fs::read_to_string(&out.csv_path).unwrap();
        assert!(text.starts_with("seed,generation,best_score,avg_score,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn records_satisfy_conservation() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [AgentKind::Gate, AgentKind::Layer, AgentKind::Prototype, AgentKind::Fixed, AgentKind::Nn] {
            let out = run_experiment(&tiny(kind, dir.path()), &[], |_| {}).unwrap();
            assert_eq!(out.records.len(), 6);
            for r in &out.records {
                assert_eq!(r.best_score, 2 * i64::from(r.best_own_coins) - i64::from(r.best_total_coins));
                assert!(r.best_score as f64 >= r.avg_score - 1e-9);
            }
        }
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let dir = tempfile::tempdir().unwrap();
        let full = tiny(AgentKind::Gate, &dir.path().join("full"));
        let expected = run_experiment(&full, &[], |_| {}).unwrap();

        let mut short = full.clone();
        short.generations = 1;
        short.out_dir = dir.path().join("short");
        let first = run_experiment(&short, &[], |_| {}).unwrap();
        let checkpoints: Vec<Checkpoint> = first.checkpoints.iter().map(|p| Checkpoint::load(p).unwrap()).collect();

        let mut resumed = full.clone();
        resumed.out_dir = dir.path().join("resumed");
        let out = run_experiment(&resumed, &checkpoints, |_| {}).unwrap();
        assert_eq!(out.records, expected.records);
        assert_eq!(
            fs::read(&out.csv_path).unwrap(),
            fs::read(&expected.csv_path).unwrap()
        );
    }

    #[test]
    fn corrupt_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{not json").unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(HarnessError::Checkpoint { .. })));
        assert!(matches!(
            Checkpoint::load(&dir.path().join("missing.json")),
            Err(HarnessError::Io { .. })
        ));
    }
}
