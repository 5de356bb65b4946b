use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::evolution::{EvoConfig, Strategy};
use crate::genome::{Concept, InitConfig};

/// Agent family of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Fixed,
    Layer,
    Gate,
    Prototype,
    Nn,
    Random,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Fixed,
        AgentKind::Layer,
        AgentKind::Gate,
        AgentKind::Prototype,
        AgentKind::Nn,
        AgentKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Fixed => "fixed",
            AgentKind::Layer => "layer",
            AgentKind::Gate => "gate",
            AgentKind::Prototype => "prototype",
            AgentKind::Nn => "nn",
            AgentKind::Random => "random",
        }
    }

    pub fn circuit_concept(self) -> Option<Concept> {
        match self {
            AgentKind::Fixed => Some(Concept::Fixed),
            AgentKind::Layer => Some(Concept::Layer),
            AgentKind::Gate => Some(Concept::Gate),
            AgentKind::Prototype => Some(Concept::Prototype),
            AgentKind::Nn | AgentKind::Random => None,
        }
    }

    fn default_strategy(self) -> Strategy {
        match self {
            AgentKind::Layer | AgentKind::Gate | AgentKind::Prototype => Strategy::ArchMu,
            AgentKind::Fixed | AgentKind::Nn | AgentKind::Random => Strategy::Mu,
        }
    }

    fn supports(self, strategy: Strategy) -> bool {
        match strategy {
            Strategy::Mu => true,
            Strategy::RaReMu | Strategy::LaReMu => matches!(self, AgentKind::Fixed | AgentKind::Layer | AgentKind::Nn),
            Strategy::ArchMu | Strategy::ArchReMu => {
                matches!(self, AgentKind::Layer | AgentKind::Gate | AgentKind::Prototype)
            }
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown concept `{s}` (expected fixed, layer, gate, prototype, nn or random)"))
    }
}

/// Experiment description as read from a TOML file or the command line.
/// Unset fields take the per-family defaults in [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub concept: AgentKind,
    pub strategy: Option<Strategy>,
    pub generations: Option<usize>,
    pub population: Option<usize>,
    pub steps: Option<usize>,
    pub selection: Option<usize>,
    pub sigma_param: Option<f64>,
    pub sigma_arch: Option<f64>,
    pub rate: Option<f64>,
    pub num_qubits: Option<usize>,
    /// Initial layers (Fixed, Layer) or repetitions (Prototype).
    pub layers: Option<usize>,
    /// Initial gates (Gate) or template length (Prototype).
    pub gates: Option<usize>,
    pub hidden: Option<[usize; 2]>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub fixed_eval_seed: bool,
}

impl ExperimentConfig {
    pub fn new(concept: AgentKind) -> Self {
        Self {
            concept,
            strategy: None,
            generations: None,
            population: None,
            steps: None,
            selection: None,
            sigma_param: None,
            sigma_arch: None,
            rate: None,
            num_qubits: None,
            layers: None,
            gates: None,
            hidden: None,
            seeds: None,
            out_dir: None,
            jobs: None,
            fixed_eval_seed: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Fill in defaults and validate.
    pub fn resolve(&self) -> Result<ResolvedConfig, HarnessError> {
        let kind = self.concept;
        let strategy = self.strategy.unwrap_or_else(|| kind.default_strategy());
        if !kind.supports(strategy) {
            return Err(HarnessError::Config(format!(
                "strategy {} does not apply to {} agents",
                strategy.name(),
                kind.name()
            )));
        }
        let population = self.population.unwrap_or(250);
        let selection = self.selection.unwrap_or(if strategy.uses_tournament() {
            ((0.4 * population as f64).round() as usize).clamp(1, population.max(1))
        } else {
            5.min(population.max(1))
        });
        let (sigma_param, sigma_arch) = match kind {
            AgentKind::Fixed | AgentKind::Nn | AgentKind::Gate => (0.01, if kind == AgentKind::Gate { 1.0 } else { 0.0 }),
            AgentKind::Layer | AgentKind::Prototype => (0.05, 10.0),
            AgentKind::Random => (0.0, 0.0),
        };
        let (layers, gates) = match kind {
            AgentKind::Fixed => (4, 0),
            AgentKind::Layer => (1, 0),
            AgentKind::Gate => (0, 70),
            AgentKind::Prototype => (8, 18),
            AgentKind::Nn | AgentKind::Random => (0, 0),
        };
        let evo = EvoConfig {
            population,
            steps: self.steps.unwrap_or(50),
            selection,
            sigma_param: self.sigma_param.unwrap_or(sigma_param),
            sigma_arch: self.sigma_arch.unwrap_or(sigma_arch),
            rate: self.rate.unwrap_or(0.1),
            strategy,
            fixed_eval_seed: self.fixed_eval_seed,
        };
        evo.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let generations = self.generations.unwrap_or(200);
        if generations == 0 {
            return Err(HarnessError::Config("generation count must be positive".into()));
        }
        let seeds = self.seeds.clone().unwrap_or_else(|| (0..5).collect());
        if seeds.is_empty() {
            return Err(HarnessError::Config("seed list is empty".into()));
        }
        let jobs = self.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if jobs == 0 {
            return Err(HarnessError::Config("parallelism must be positive".into()));
        }
        let resolved = ResolvedConfig {
            kind,
            evo,
            generations,
            init: InitConfig {
                num_qubits: self.num_qubits.unwrap_or(6),
                layers: self.layers.unwrap_or(layers),
                gates: self.gates.unwrap_or(gates),
            },
            hidden: self.hidden.unwrap_or([64, 64]),
            seeds,
            out_dir: self.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs")),
            jobs,
        };
        resolved.check_init()?;
        Ok(resolved)
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub kind: AgentKind,
    pub evo: EvoConfig,
    pub generations: usize,
    pub init: InitConfig,
    pub hidden: [usize; 2],
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl ResolvedConfig {
    /// `<concept>_<strategy>`, the stem of every output file of this run.
    pub fn label(&self) -> String {
        format!("{}_{}", self.kind.name(), self.evo.strategy.name())
    }

    fn check_init(&self) -> Result<(), HarnessError> {
        if let Some(concept) = self.kind.circuit_concept() {
            let mut rng = crate::evolution::init_rng(0, 0);
            crate::genome::random_init(concept, &self.init, &mut rng).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.kind == AgentKind::Nn && self.hidden.contains(&0) {
            return Err(HarnessError::Config("hidden layer sizes must be positive".into()));
        }
        Ok(())
    }
}
