//! Generational evolution of agent genomes through self-play fitness.
//!
//! A generation is evaluated independently per individual (both Coin Game
//! seats are driven by the same genome), then the next population is built
//! from the unaltered elite plus `η − 1` children. Every child draws from its
//! own RNG stream derived from `(master seed, generation, child index)`, so
//! results do not depend on how evaluation is scheduled across threads.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coin_game::{Action, CoinGame, CoinGameError, CoinGameState, EpisodeStats};
use crate::genome::{
    random_angle, random_gate, random_layer, random_placement, CircuitGenome, GateCount, GenomeError,
};
use crate::policy::{NnGenome, Policy, PolicyError, VqcPolicy};
use crate::quantum::Placement;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("parents have different architectures")]
    ArchitectureMismatch,
    #[error("operator {operator} does not apply to {genome} genomes")]
    Unsupported { operator: &'static str, genome: String },
    #[error("population is empty")]
    EmptyPopulation,
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Game(#[from] CoinGameError),
}

/// What an individual is: a circuit, a classical network, or a random mover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentGenome {
    Circuit(CircuitGenome),
    Network(NnGenome),
    Random,
}

impl AgentGenome {
    pub fn label(&self) -> String {
        match self {
            AgentGenome::Circuit(c) => format!("{:?}", c.concept()).to_lowercase(),
            AgentGenome::Network(_) => "nn".to_string(),
            AgentGenome::Random => "random".to_string(),
        }
    }

    pub fn policy(&self) -> Policy {
        match self {
            AgentGenome::Circuit(c) => Policy::Vqc(VqcPolicy::new(c)),
            AgentGenome::Network(n) => Policy::Network(n.clone()),
            AgentGenome::Random => Policy::Random,
        }
    }

    pub fn gate_count(&self) -> GateCount {
        match self {
            AgentGenome::Circuit(c) => c.gate_count(),
            _ => GateCount {
                total: 0,
                parameterized: 0,
            },
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            AgentGenome::Circuit(c) => c.param_count(),
            AgentGenome::Network(n) => n.param_count(),
            AgentGenome::Random => 0,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            AgentGenome::Circuit(c) => c.params(),
            AgentGenome::Network(n) => n.params().to_vec(),
            AgentGenome::Random => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut f64> {
        match self {
            AgentGenome::Circuit(c) => c.params_mut(),
            AgentGenome::Network(n) => n.params_mut().iter_mut().collect(),
            AgentGenome::Random => Vec::new(),
        }
    }

    /// True when both genomes have the same structure and differ at most in
    /// parameter values.
    pub fn same_architecture(&self, other: &AgentGenome) -> bool {
        match (self, other) {
            (AgentGenome::Circuit(a), AgentGenome::Circuit(b)) => {
                a.concept() == b.concept()
                    && a.num_qubits() == b.num_qubits()
                    && a.lower().iter().map(|g| g.placement()).eq(b.lower().iter().map(|g| g.placement()))
            }
            (AgentGenome::Network(a), AgentGenome::Network(b)) => a.hidden() == b.hidden(),
            (AgentGenome::Random, AgentGenome::Random) => true,
            _ => false,
        }
    }

    fn layer_cuts(&self) -> Option<Vec<usize>> {
        match self {
            AgentGenome::Circuit(c) => c.layer_cuts(),
            AgentGenome::Network(n) => Some(n.layer_cuts()),
            AgentGenome::Random => None,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        match self {
            AgentGenome::Circuit(c) => c.validate()?,
            AgentGenome::Network(n) => n.validate()?,
            AgentGenome::Random => {}
        }
        Ok(())
    }
}

/// Outcome of one self-play episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Sum of both agents' undiscounted rewards.
    pub fitness: i64,
    pub stats: EpisodeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: AgentGenome,
    pub evaluation: Evaluation,
}

impl Individual {
    pub fn fitness(&self) -> i64 {
        self.evaluation.fitness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Truncation selection, parameter mutation only.
    Mu,
    /// Truncation selection, random-point parameter crossover, rate mutation.
    RaReMu,
    /// Truncation selection, layer-boundary parameter crossover, rate mutation.
    LaReMu,
    /// Tournament selection, parameter and architecture mutation.
    ArchMu,
    /// Tournament selection, architecture crossover, rate mutation.
    ArchReMu,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Mu,
        Strategy::RaReMu,
        Strategy::LaReMu,
        Strategy::ArchMu,
        Strategy::ArchReMu,
    ];

    pub fn uses_tournament(self) -> bool {
        matches!(self, Strategy::ArchMu | Strategy::ArchReMu)
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mu => "mu",
            Strategy::RaReMu => "raremu",
            Strategy::LaReMu => "laremu",
            Strategy::ArchMu => "archmu",
            Strategy::ArchReMu => "archremu",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy `{s}` (expected mu, raremu, laremu, archmu or archremu)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoConfig {
    /// Population size η.
    pub population: usize,
    /// Environment steps κ per evaluation, shared by both agents.
    pub steps: usize,
    /// Truncation count or tournament size τ.
    pub selection: usize,
    /// Parameter mutation power σ_p.
    pub sigma_param: f64,
    /// Architecture mutation power σ_a.
    pub sigma_arch: f64,
    /// Mutation rate φ.
    pub rate: f64,
    pub strategy: Strategy,
    /// Evaluate every individual of every generation on the same episode seed.
    pub fixed_eval_seed: bool,
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let fail = |msg: String| Err(EvolutionError::InvalidConfig(msg));
        if self.population == 0 {
            return fail("population size must be positive".into());
        }
        if self.selection == 0 || self.selection > self.population {
            return fail(format!(
                "selection size {} must lie in 1..={}",
                self.selection, self.population
            ));
        }
        if self.steps == 0 || !self.steps.is_multiple_of(2) {
            return fail(format!("evaluation steps must be positive and even, got {}", self.steps));
        }
        if !(self.sigma_param >= 0.0 && self.sigma_param.is_finite()) {
            return fail(format!("parameter mutation power {} must be >= 0", self.sigma_param));
        }
        if !(self.sigma_arch >= 0.0 && self.sigma_arch.is_finite()) {
            return fail(format!("architecture mutation power {} must be >= 0", self.sigma_arch));
        }
        if !(0.0..=1.0).contains(&self.rate) {
            return fail(format!("mutation rate {} must lie in [0, 1]", self.rate));
        }
        Ok(())
    }
}

const STREAM_EPISODE: u64 = 1;
const STREAM_POLICY: u64 = 2;
const STREAM_CHILD: u64 = 3;
const STREAM_INIT: u64 = 4;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Hash a sequence of words into one seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream_rng(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parts))
}

/// RNG for creating individual `index` of the initial population.
pub fn init_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    stream_rng(&[master_seed, STREAM_INIT, index as u64])
}

/// Seeds for the environment and for policy randomness of one evaluation.
pub fn evaluation_seeds(master_seed: u64, generation: u64, index: usize, fixed_eval_seed: bool) -> (u64, u64) {
    let episode = if fixed_eval_seed {
        derive_seed(&[master_seed, STREAM_EPISODE])
    } else {
        derive_seed(&[master_seed, STREAM_EPISODE, generation, index as u64])
    };
    let policy = derive_seed(&[master_seed, STREAM_POLICY, generation, index as u64]);
    (episode, policy)
}

/// One environment transition as seen by an observer of [`play_episode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    pub step: usize,
    pub agent: usize,
    /// `None` when the agent had no legal move and passed.
    pub action: Option<Action>,
    pub before: CoinGameState,
    pub after: CoinGameState,
    pub rewards: [i64; 2],
}

/// Self-play `steps` alternating turns with one policy driving both agents.
pub fn play_episode(
    policy: &Policy,
    steps: usize,
    episode_seed: u64,
    policy_seed: u64,
    mut observe: impl FnMut(&StepEvent),
) -> Result<Evaluation, EvolutionError> {
    let mut game = CoinGame::new(episode_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
    for step in 0..steps {
        let before = *game.state();
        let agent = game.turn();
        let mask = game.legal_actions();
        let (action, rewards) = if mask.iter().any(|&m| m) {
            let index = policy.act(&game.observation(), &mask, &mut rng)?;
            let action = Action::from_index(index).expect("policies return action indices");
            (Some(action), game.step(action)?)
        } else {
            (None, game.pass()?)
        };
        observe(&StepEvent {
            step,
            agent,
            action,
            before,
            after: *game.state(),
            rewards,
        });
    }
    let stats = *game.stats();
    Ok(Evaluation {
        fitness: stats.metrics().score,
        stats,
    })
}

/// Utilitarian fitness of `genome` over one seeded episode of `steps` turns.
pub fn evaluate_fitness(
    genome: &AgentGenome,
    steps: usize,
    episode_seed: u64,
    policy_seed: u64,
) -> Result<Evaluation, EvolutionError> {
    if !steps.is_multiple_of(2) {
        return Err(EvolutionError::InvalidConfig(format!(
            "evaluation steps must be even, got {steps}"
        )));
    }
    play_episode(&genome.policy(), steps, episode_seed, policy_seed, |_| {})
}

/// Evaluate a generation in parallel on the current rayon pool.
pub fn evaluate_population(
    genomes: Vec<AgentGenome>,
    config: &EvoConfig,
    master_seed: u64,
    generation: u64,
) -> Result<Vec<Individual>, EvolutionError> {
    genomes
        .into_par_iter()
        .enumerate()
        .map(|(index, genome)| {
            let (episode, policy) = evaluation_seeds(master_seed, generation, index, config.fixed_eval_seed);
            let evaluation = evaluate_fitness(&genome, config.steps, episode, policy)?;
            Ok(Individual { genome, evaluation })
        })
        .collect()
}

/// Indices of the `count` fittest; ties go to the lower index.
pub fn truncation_select(fitness: &[i64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].cmp(&fitness[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Fittest of `size` distinct uniformly drawn individuals; ties go to the lower index.
///
/// Panics unless `1 <= size <= fitness.len()`.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[i64], size: usize, rng: &mut R) -> usize {
    assert!(size >= 1 && size <= fitness.len(), "tournament size {size} out of range");
    sample(rng, fitness.len(), size)
        .into_iter()
        .min_by(|&a, &b| fitness[b].cmp(&fitness[a]).then(a.cmp(&b)))
        .expect("tournament is non-empty")
}

/// Best individual by fitness, then fewer gates, then fewer parameters, then lower index.
pub fn elite_index(population: &[Individual]) -> Option<usize> {
    (0..population.len()).min_by(|&a, &b| {
        let (x, y) = (&population[a], &population[b]);
        y.fitness()
            .cmp(&x.fitness())
            .then(x.genome.gate_count().total.cmp(&y.genome.gate_count().total))
            .then(x.genome.param_count().cmp(&y.genome.param_count()))
            .then(a.cmp(&b))
    })
}

/// Add `N(0, sigma^2)` to every parameter.
pub fn mutate_params<R: Rng + ?Sized>(genome: &AgentGenome, sigma: f64, rng: &mut R) -> AgentGenome {
    let mut child = genome.clone();
    if sigma == 0.0 {
        return child;
    }
    for p in child.params_mut() {
        let eps: f64 = StandardNormal.sample(rng);
        *p += sigma * eps;
    }
    child
}

/// Like [`mutate_params`], but each parameter is touched with probability `rate`.
pub fn mutate_params_with_rate<R: Rng + ?Sized>(genome: &AgentGenome, sigma: f64, rate: f64, rng: &mut R) -> AgentGenome {
    let mut child = genome.clone();
    if sigma == 0.0 || rate == 0.0 {
        return child;
    }
    for p in child.params_mut() {
        if rng.random_bool(rate) {
            let eps: f64 = StandardNormal.sample(rng);
            *p += sigma * eps;
        }
    }
    child
}

/// Number of structural edits for architecture mutation power `sigma`.
pub fn edit_count<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> usize {
    if sigma == 0.0 {
        return 1;
    }
    let draw: f64 = Normal::new(0.0, sigma).expect("sigma validated").sample(rng);
    (draw.abs().round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edit {
    Insert,
    Delete,
    Replace,
}

fn pick_edit<R: Rng + ?Sized>(units: usize, allow_replace: bool, rng: &mut R) -> Edit {
    let mut legal = vec![Edit::Insert];
    if units > 1 {
        legal.push(Edit::Delete);
    }
    if allow_replace {
        legal.push(Edit::Replace);
    }
    legal[rng.random_range(0..legal.len())]
}

/// Apply `max(1, round(|N(0, sigma^2)|))` structural edits.
///
/// Layer genomes gain or lose whole layers; gate genomes and prototype
/// templates gain, lose, or swap single gates. No edit empties a genome.
pub fn mutate_architecture<R: Rng + ?Sized>(genome: &AgentGenome, sigma: f64, rng: &mut R) -> Result<AgentGenome, EvolutionError> {
    let mut child = genome.clone();
    let AgentGenome::Circuit(circuit) = &mut child else {
        return Err(EvolutionError::Unsupported {
            operator: "architecture mutation",
            genome: genome.label(),
        });
    };
    let edits = edit_count(sigma, rng);
    match circuit {
        CircuitGenome::Layer(g) => {
            for _ in 0..edits {
                match pick_edit(g.layers.len(), false, rng) {
                    Edit::Insert => {
                        let pos = rng.random_range(0..=g.layers.len());
                        g.layers.insert(pos, random_layer(g.num_qubits, rng));
                    }
                    _ => {
                        let pos = rng.random_range(0..g.layers.len());
                        g.layers.remove(pos);
                    }
                }
            }
        }
        CircuitGenome::Gate(g) => {
            for _ in 0..edits {
                match pick_edit(g.gates.len(), true, rng) {
                    Edit::Insert => {
                        let pos = rng.random_range(0..=g.gates.len());
                        g.gates.insert(pos, random_gate(g.num_qubits, rng));
                    }
                    Edit::Delete => {
                        let pos = rng.random_range(0..g.gates.len());
                        g.gates.remove(pos);
                    }
                    Edit::Replace => {
                        let pos = rng.random_range(0..g.gates.len());
                        g.gates[pos] = random_gate(g.num_qubits, rng);
                    }
                }
            }
        }
        CircuitGenome::Prototype(g) => {
            let mut per_rep = split_repetitions(&g.angles, g.repetitions);
            for _ in 0..edits {
                let edit = pick_edit(g.prototype.len(), true, rng);
                let pos = match edit {
                    Edit::Insert => rng.random_range(0..=g.prototype.len()),
                    _ => rng.random_range(0..g.prototype.len()),
                };
                let slot = g.prototype[..pos].iter().filter(|p| p.is_parameterized()).count();
                if matches!(edit, Edit::Delete | Edit::Replace) {
                    let old = if edit == Edit::Delete {
                        g.prototype.remove(pos)
                    } else {
                        g.prototype[pos]
                    };
                    if old.is_parameterized() {
                        per_rep.iter_mut().for_each(|angles| {
                            angles.remove(slot);
                        });
                    }
                }
                if matches!(edit, Edit::Insert | Edit::Replace) {
                    let new = random_placement(g.num_qubits, rng);
                    if edit == Edit::Insert {
                        g.prototype.insert(pos, new);
                    } else {
                        g.prototype[pos] = new;
                    }
                    if new.is_parameterized() {
                        for angles in per_rep.iter_mut() {
                            angles.insert(slot, random_angle(rng));
                        }
                    }
                }
            }
            g.angles = per_rep.concat();
        }
        CircuitGenome::Fixed(_) => {
            return Err(EvolutionError::Unsupported {
                operator: "architecture mutation",
                genome: genome.label(),
            })
        }
    }
    child.validate()?;
    Ok(child)
}

fn split_repetitions(angles: &[f64], repetitions: usize) -> Vec<Vec<f64>> {
    let width = angles.len() / repetitions;
    if width == 0 {
        return vec![Vec::new(); repetitions];
    }
    angles.chunks(width).map(<[f64]>::to_vec).collect()
}

fn swap_tails(a: &AgentGenome, b: &AgentGenome, cut: usize) -> (AgentGenome, AgentGenome) {
    let (pa, pb) = (a.params(), b.params());
    let mut first = a.clone();
    let mut second = b.clone();
    for (i, p) in first.params_mut().into_iter().enumerate().skip(cut) {
        *p = pb[i];
    }
    for (i, p) in second.params_mut().into_iter().enumerate().skip(cut) {
        *p = pa[i];
    }
    (first, second)
}

/// Single-point crossover of the flattened parameters at a cut in `1..len`.
pub fn recombine_random_point<R: Rng + ?Sized>(
    a: &AgentGenome,
    b: &AgentGenome,
    rng: &mut R,
) -> Result<(AgentGenome, AgentGenome), EvolutionError> {
    if !a.same_architecture(b) {
        return Err(EvolutionError::ArchitectureMismatch);
    }
    let len = a.param_count();
    if len < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.random_range(1..len);
    Ok(swap_tails(a, b, cut))
}

/// Single-point crossover with the cut on a layer boundary.
pub fn recombine_layerwise<R: Rng + ?Sized>(
    a: &AgentGenome,
    b: &AgentGenome,
    rng: &mut R,
) -> Result<(AgentGenome, AgentGenome), EvolutionError> {
    if !a.same_architecture(b) {
        return Err(EvolutionError::ArchitectureMismatch);
    }
    let cuts = a.layer_cuts().ok_or_else(|| EvolutionError::Unsupported {
        operator: "layer-wise crossover",
        genome: a.label(),
    })?;
    let cut = cuts[rng.random_range(0..cuts.len())];
    Ok(swap_tails(a, b, cut))
}

/// Where to split two unit sequences for architecture crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitCut {
    /// Split both parents after this many units.
    At(usize),
    /// Both parents have a single unit: the offspring are `a + b` and `b + a`.
    Concatenate,
}

/// A cut strictly inside both parents, or just after a lone unit.
pub fn choose_unit_cut<R: Rng + ?Sized>(len_a: usize, len_b: usize, rng: &mut R) -> UnitCut {
    match (len_a, len_b) {
        (1, 1) => UnitCut::Concatenate,
        (a, b) if a.min(b) == 1 => UnitCut::At(1),
        (a, b) => UnitCut::At(rng.random_range(1..a.min(b))),
    }
}

/// Offspring `front(a) + back(b)` and `front(b) + back(a)`.
pub fn cross_units<T: Clone>(a: &[T], b: &[T], cut: UnitCut) -> (Vec<T>, Vec<T>) {
    match cut {
        UnitCut::Concatenate => ([a, b].concat(), [b, a].concat()),
        UnitCut::At(c) => ([&a[..c], &b[c..]].concat(), [&b[..c], &a[c..]].concat()),
    }
}

/// Crossover of circuit structure: layers, gates, or prototype gates.
///
/// Unit parameters travel with their unit. The biases, which act after the
/// last gate, follow the back segment.
pub fn recombine_architecture<R: Rng + ?Sized>(
    a: &AgentGenome,
    b: &AgentGenome,
    rng: &mut R,
) -> Result<(AgentGenome, AgentGenome), EvolutionError> {
    let (AgentGenome::Circuit(ca), AgentGenome::Circuit(cb)) = (a, b) else {
        return Err(EvolutionError::Unsupported {
            operator: "architecture crossover",
            genome: a.label(),
        });
    };
    if ca.concept() != cb.concept() || ca.num_qubits() != cb.num_qubits() {
        return Err(EvolutionError::ArchitectureMismatch);
    }
    let (mut first, mut second) = (ca.clone(), cb.clone());
    match (&mut first, &mut second, ca, cb) {
        (CircuitGenome::Layer(f), CircuitGenome::Layer(s), CircuitGenome::Layer(pa), CircuitGenome::Layer(pb)) => {
            let cut = choose_unit_cut(pa.layers.len(), pb.layers.len(), rng);
            (f.layers, s.layers) = cross_units(&pa.layers, &pb.layers, cut);
            (f.biases, s.biases) = (pb.biases, pa.biases);
        }
        (CircuitGenome::Gate(f), CircuitGenome::Gate(s), CircuitGenome::Gate(pa), CircuitGenome::Gate(pb)) => {
            let cut = choose_unit_cut(pa.gates.len(), pb.gates.len(), rng);
            (f.gates, s.gates) = cross_units(&pa.gates, &pb.gates, cut);
            (f.biases, s.biases) = (pb.biases, pa.biases);
        }
        (
            CircuitGenome::Prototype(f),
            CircuitGenome::Prototype(s),
            CircuitGenome::Prototype(pa),
            CircuitGenome::Prototype(pb),
        ) => {
            if pa.repetitions != pb.repetitions {
                return Err(EvolutionError::ArchitectureMismatch);
            }
            let cut = choose_unit_cut(pa.prototype.len(), pb.prototype.len(), rng);
            (f.prototype, s.prototype) = cross_units(&pa.prototype, &pb.prototype, cut);
            let slot = |proto: &[Placement], units: usize| proto[..units].iter().filter(|p| p.is_parameterized()).count();
            let (angle_cut_a, angle_cut_b) = match cut {
                UnitCut::At(c) => (slot(&pa.prototype, c), slot(&pb.prototype, c)),
                UnitCut::Concatenate => (0, 0),
            };
            let reps_a = split_repetitions(&pa.angles, pa.repetitions);
            let reps_b = split_repetitions(&pb.angles, pb.repetitions);
            let mut angles_f = Vec::new();
            let mut angles_s = Vec::new();
            for (ra, rb) in reps_a.iter().zip(&reps_b) {
                match cut {
                    UnitCut::Concatenate => {
                        angles_f.extend(ra.iter().chain(rb));
                        angles_s.extend(rb.iter().chain(ra));
                    }
                    UnitCut::At(_) => {
                        angles_f.extend(ra[..angle_cut_a].iter().chain(&rb[angle_cut_b..]));
                        angles_s.extend(rb[..angle_cut_b].iter().chain(&ra[angle_cut_a..]));
                    }
                }
            }
            (f.angles, s.angles) = (angles_f, angles_s);
            (f.biases, s.biases) = (pb.biases, pa.biases);
        }
        _ => {
            return Err(EvolutionError::Unsupported {
                operator: "architecture crossover",
                genome: a.label(),
            })
        }
    }
    first.validate()?;
    second.validate()?;
    Ok((AgentGenome::Circuit(first), AgentGenome::Circuit(second)))
}

fn make_child<R: Rng + ?Sized>(
    population: &[Individual],
    fitness: &[i64],
    truncated: &[usize],
    config: &EvoConfig,
    rng: &mut R,
) -> Result<AgentGenome, EvolutionError> {
    let pick = |rng: &mut R| -> usize {
        if config.strategy.uses_tournament() {
            tournament_select(fitness, config.selection, rng)
        } else {
            truncated[rng.random_range(0..truncated.len())]
        }
    };
    match config.strategy {
        Strategy::Mu => {
            let parent = &population[pick(rng)].genome;
            Ok(mutate_params(parent, config.sigma_param, rng))
        }
        Strategy::RaReMu | Strategy::LaReMu => {
            let a = &population[pick(rng)].genome;
            let b = &population[pick(rng)].genome;
            let (offspring, _) = if config.strategy == Strategy::RaReMu {
                recombine_random_point(a, b, rng)?
            } else {
                recombine_layerwise(a, b, rng)?
            };
            Ok(mutate_params_with_rate(&offspring, config.sigma_param, config.rate, rng))
        }
        Strategy::ArchMu => {
            let parent = &population[pick(rng)].genome;
            let child = mutate_params(parent, config.sigma_param, rng);
            mutate_architecture(&child, config.sigma_arch, rng)
        }
        Strategy::ArchReMu => {
            let a = &population[pick(rng)].genome;
            let b = &population[pick(rng)].genome;
            let (offspring, _) = recombine_architecture(a, b, rng)?;
            let child = mutate_params_with_rate(&offspring, config.sigma_param, config.rate, rng);
            if rng.random_bool(config.rate) {
                mutate_architecture(&child, config.sigma_arch, rng)
            } else {
                Ok(child)
            }
        }
    }
}

/// Build the next population: the unaltered elite first, then `η − 1`
/// children produced by `config.strategy`.
pub fn next_generation(
    population: &[Individual],
    config: &EvoConfig,
    master_seed: u64,
    generation: u64,
) -> Result<Vec<AgentGenome>, EvolutionError> {
    config.validate()?;
    let elite = elite_index(population).ok_or(EvolutionError::EmptyPopulation)?;
    if config.selection > population.len() {
        return Err(EvolutionError::InvalidConfig(format!(
            "selection size {} exceeds population {}",
            config.selection,
            population.len()
        )));
    }
    let fitness: Vec<i64> = population.iter().map(Individual::fitness).collect();
    let truncated = truncation_select(&fitness, config.selection);
    let mut next = Vec::with_capacity(config.population);
    next.push(population[elite].genome.clone());
    for child in 1..config.population {
        let mut rng = stream_rng(&[master_seed, STREAM_CHILD, generation, child as u64]);
        next.push(make_child(population, &fitness, &truncated, config, &mut rng)?);
    }
    Ok(next)
}
