//! Action selection from circuits, neural networks, or uniform chance.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coin_game::{ActionMask, NUM_ACTIONS, OBSERVATION_LEN};
use crate::genome::{Biases, CircuitGenome, NUM_OUTPUTS};
use crate::quantum::{amplitude_embed, run_circuit, GateOp, QuantumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("action mask has no legal action")]
    NoLegalAction,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("network expects {expected} parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
}

/// Index of the largest value among legal entries; ties go to the lowest index.
pub fn masked_argmax(values: &[f64; NUM_ACTIONS], mask: &ActionMask) -> Result<usize, PolicyError> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if mask[i] && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best.ok_or(PolicyError::NoLegalAction)
}

/// Min-max scale to `[0, 1]`; a constant vector maps to all 0.5.
pub fn min_max_normalize(values: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range > 0.0 {
        values.map(|v| (v - lo) / range)
    } else {
        [0.5; NUM_ACTIONS]
    }
}

/// A circuit lowered once and reused for every decision of an episode.
#[derive(Debug, Clone)]
pub struct VqcPolicy {
    gates: Vec<GateOp>,
    biases: Biases,
    num_qubits: usize,
}

impl VqcPolicy {
    pub fn new(genome: &CircuitGenome) -> Self {
        Self {
            gates: genome.lower(),
            biases: *genome.biases(),
            num_qubits: genome.num_qubits(),
        }
    }

    /// Biased expectations of the first four qubits, min-max scaled to `[0, 1]`.
    pub fn action_values(&self, observation: &[f64]) -> Result<[f64; NUM_ACTIONS], PolicyError> {
        let input = amplitude_embed(observation, self.num_qubits)?;
        let expectations = run_circuit(&self.gates, &input, NUM_OUTPUTS)?;
        let mut values = [0.0; NUM_ACTIONS];
        for (v, (e, b)) in values.iter_mut().zip(expectations.iter().zip(&self.biases)) {
            *v = e + b;
        }
        Ok(min_max_normalize(&values))
    }

    pub fn act(&self, observation: &[f64], mask: &ActionMask) -> Result<usize, PolicyError> {
        if !mask.iter().any(|&m| m) {
            return Err(PolicyError::NoLegalAction);
        }
        let mut values = self.action_values(observation)?;
        for (v, &legal) in values.iter_mut().zip(mask) {
            if !legal {
                *v = -1.0;
            }
        }
        masked_argmax(&values, mask)
    }
}

pub fn vqc_action(genome: &CircuitGenome, observation: &[f64], mask: &ActionMask) -> Result<usize, PolicyError> {
    VqcPolicy::new(genome).act(observation, mask)
}

/// Parameter count of a 36 -> h1 -> h2 -> 4 network with biases.
pub fn nn_param_count(hidden: [usize; 2]) -> usize {
    let [h1, h2] = hidden;
    OBSERVATION_LEN * h1 + h1 + h1 * h2 + h2 + h2 * NUM_ACTIONS + NUM_ACTIONS
}

/// Two hidden tanh layers and a linear output over the four actions.
///
/// `params` holds each affine layer in turn: the row-major `out x in` weight
/// matrix followed by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnGenome {
    hidden: [usize; 2],
    params: Vec<f64>,
}

impl NnGenome {
    pub fn new(hidden: [usize; 2], params: Vec<f64>) -> Result<Self, PolicyError> {
        let expected = nn_param_count(hidden);
        if params.len() != expected {
            return Err(PolicyError::ParamCount {
                expected,
                found: params.len(),
            });
        }
        Ok(Self { hidden, params })
    }

    pub fn zeros(hidden: [usize; 2]) -> Self {
        Self {
            hidden,
            params: vec![0.0; nn_param_count(hidden)],
        }
    }

    /// Weights and biases uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(hidden: [usize; 2], rng: &mut R) -> Self {
        let params = (0..nn_param_count(hidden)).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { hidden, params }
    }

    pub fn hidden(&self) -> [usize; 2] {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let expected = nn_param_count(self.hidden);
        if self.params.len() != expected {
            return Err(PolicyError::ParamCount {
                expected,
                found: self.params.len(),
            });
        }
        Ok(())
    }

    fn layer_shapes(&self) -> [(usize, usize); 3] {
        let [h1, h2] = self.hidden;
        [(OBSERVATION_LEN, h1), (h1, h2), (h2, NUM_ACTIONS)]
    }

    /// Flattened-parameter indices at the end of each affine layer except the last.
    pub fn layer_cuts(&self) -> Vec<usize> {
        let mut offset = 0;
        let mut cuts = Vec::new();
        for (inputs, outputs) in &self.layer_shapes()[..2] {
            offset += inputs * outputs + outputs;
            cuts.push(offset);
        }
        cuts
    }

    pub fn forward(&self, observation: &[f64]) -> [f64; NUM_ACTIONS] {
        let mut activations = observation.to_vec();
        let mut offset = 0;
        for (layer, (inputs, outputs)) in self.layer_shapes().into_iter().enumerate() {
            let weights = &self.params[offset..offset + inputs * outputs];
            let biases = &self.params[offset + inputs * outputs..offset + inputs * outputs + outputs];
            offset += inputs * outputs + outputs;
            activations = weights
                .chunks_exact(inputs)
                .zip(biases)
                .map(|(row, b)| {
                    let z = row.iter().zip(&activations).map(|(w, x)| w * x).sum::<f64>() + b;
                    if layer < 2 {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
        }
        let mut out = [0.0; NUM_ACTIONS];
        out.copy_from_slice(&activations);
        out
    }

    pub fn act(&self, observation: &[f64], mask: &ActionMask) -> Result<usize, PolicyError> {
        let mut values = self.forward(observation);
        for (v, &legal) in values.iter_mut().zip(mask) {
            if !legal {
                *v = f64::NEG_INFINITY;
            }
        }
        masked_argmax(&values, mask)
    }
}

pub fn nn_action(genome: &NnGenome, observation: &[f64], mask: &ActionMask) -> Result<usize, PolicyError> {
    genome.act(observation, mask)
}

/// Uniform choice among legal actions.
pub fn random_action<R: Rng + ?Sized>(mask: &ActionMask, rng: &mut R) -> Result<usize, PolicyError> {
    let legal: Vec<usize> = (0..NUM_ACTIONS).filter(|&i| mask[i]).collect();
    if legal.is_empty() {
        return Err(PolicyError::NoLegalAction);
    }
    Ok(legal[rng.random_range(0..legal.len())])
}

/// A ready-to-run policy for one agent genome.
#[derive(Debug, Clone)]
pub enum Policy {
    Vqc(VqcPolicy),
    Network(NnGenome),
    Random,
}

impl Policy {
    /// `rng` is only drawn from by the random policy.
    pub fn act<R: Rng + ?Sized>(&self, observation: &[f64], mask: &ActionMask, rng: &mut R) -> Result<usize, PolicyError> {
        match self {
            Policy::Vqc(p) => p.act(observation, mask),
            Policy::Network(n) => n.act(observation, mask),
            Policy::Random => random_action(mask, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::coin_game::{encode_observation, CoinGameState};
    use crate::genome::{random_init, Concept, GateGenome, InitConfig};

    fn identity_circuit() -> CircuitGenome {
        CircuitGenome::Gate(GateGenome::new(6, vec![GateOp::rz(0, 0.0)], [0.0; 4]).unwrap())
    }

    #[test]
    fn equal_values_pick_first_legal() {
        // Observation mass only on qubits 4 and 5 leaves ⟨Z⟩ = 1 on qubits 0..4.
        let mut obs = [0.0; 36];
        obs[1] = 1.0;
        obs[2] = 1.0;
        let g = identity_circuit();
        assert_eq!(vqc_action(&g, &obs, &[true; 4]).unwrap(), 0);
        assert_eq!(vqc_action(&g, &obs, &[false, false, true, true]).unwrap(), 2);
    }

    #[test]
    fn single_legal_action_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_init(Concept::Gate, &InitConfig { num_qubits: 6, layers: 1, gates: 30 }, &mut rng).unwrap();
        let obs = encode_observation(&CoinGameState::random(&mut rng), 0);
        for i in 0..4 {
            let mut mask = [false; 4];
            mask[i] = true;
            assert_eq!(vqc_action(&g, &obs, &mask).unwrap(), i);
        }
        assert_eq!(vqc_action(&g, &obs, &[false; 4]), Err(PolicyError::NoLegalAction));
    }

    #[test]
    fn biases_steer_choice() {
        let mut obs = [0.0; 36];
        obs[0] = 1.0;
        let mut g = identity_circuit();
        *g.biases_mut() = [0.0, 0.0, 0.5, 0.0];
        assert_eq!(vqc_action(&g, &obs, &[true; 4]).unwrap(), 2);
    }

    #[test]
    fn normalization() {
        assert_eq!(min_max_normalize(&[1.0, 3.0, 2.0, 5.0]), [0.0, 0.5, 0.25, 1.0]);
        assert_eq!(min_max_normalize(&[0.3; 4]), [0.5; 4]);
    }

    #[test]
    fn nn_parameter_counts() {
        assert_eq!(nn_param_count([3, 4]), 147);
        assert_eq!(nn_param_count([64, 64]), 6788);
        assert_eq!(NnGenome::zeros([3, 4]).layer_cuts(), vec![111, 127]);
        assert!(NnGenome::new([3, 4], vec![0.0; 146]).is_err());
    }

    #[test]
    fn zero_network_picks_first_legal() {
        let net = NnGenome::zeros([3, 4]);
        let obs = [1.0; 36];
        assert_eq!(nn_action(&net, &obs, &[true; 4]).unwrap(), 0);
        assert_eq!(nn_action(&net, &obs, &[false, true, true, false]).unwrap(), 1);
        assert_eq!(nn_action(&net, &obs, &[false; 4]), Err(PolicyError::NoLegalAction));
    }

    #[test]
    fn nn_forward_by_hand() {
        // 36 -> 1 -> 1 -> 4 network with all weights 0.5 and biases 0.
        let mut net = NnGenome::zeros([1, 1]);
        net.params_mut().fill(0.5);
        let cuts = net.layer_cuts();
        net.params_mut()[cuts[0] - 1] = 0.0;
        net.params_mut()[cuts[1] - 1] = 0.0;
        let n = net.param_count();
        net.params_mut()[n - 4..].fill(0.0);
        let mut obs = [0.0; 36];
        obs[3] = 2.0;
        let h1 = (0.5f64 * 2.0).tanh();
        let h2 = (0.5 * h1).tanh();
        let out = net.forward(&obs);
        for v in out {
            assert!((v - 0.5 * h2).abs() < 1e-15);
        }
    }

    #[test]
    fn random_action_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(random_action(&[false, false, true, false], &mut rng).unwrap(), 2);
        assert_eq!(random_action(&[false; 4], &mut rng), Err(PolicyError::NoLegalAction));
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[random_action(&[true; 4], &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    proptest! {
        #[test]
        fn argmax_invariant_under_monotone_maps(
            values in prop::array::uniform4(-2.0f64..2.0),
            mask in prop::array::uniform4(any::<bool>()),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
            power in 1u32..4,
        ) {
            prop_assume!(mask.iter().any(|&m| m));
            let expected = masked_argmax(&min_max_normalize(&values), &mask).unwrap();
            let f = |v: f64| (scale * v + shift).powi(2 * power as i32 - 1) + v;
            let mapped = values.map(f);
            prop_assert_eq!(masked_argmax(&mapped, &mask).unwrap(), expected);
            prop_assert_eq!(masked_argmax(&values, &mask).unwrap(), expected);
        }

        #[test]
        fn vqc_never_picks_illegal(seed in any::<u64>(), mask in prop::array::uniform4(any::<bool>())) {
            prop_assume!(mask.iter().any(|&m| m));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_init(Concept::Prototype, &InitConfig { num_qubits: 6, layers: 2, gates: 10 }, &mut rng).unwrap();
            let obs = encode_observation(&CoinGameState::random(&mut rng), 1);
            let a = vqc_action(&g, &obs, &mask).unwrap();
            prop_assert!(mask[a]);
            prop_assert_eq!(a, vqc_action(&g, &obs, &mask).unwrap());
        }
    }
}
