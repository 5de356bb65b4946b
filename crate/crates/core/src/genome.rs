//! Circuit representations and their lowering to gate sequences.
//!
//! Four concepts share one measurement stage (⟨Z⟩ on the first four qubits
//! plus four biases) and differ in how the variational part is described:
//!
//! * [`FixedGenome`]: layers of CNOT chains followed by RZ-RY-RZ triples, with
//!   the chain offset shifting from layer to layer. Only its angles evolve.
//! * [`LayerGenome`]: strongly entangling layers (CNOT ring, then RX-RY-RZ on
//!   every qubit). Layers may be added and removed.
//! * [`GateGenome`]: a free list of gates.
//! * [`PrototypeGenome`]: one gate template repeated a fixed number of times,
//!   with its own angle for every rotation instance.
//!
//! Parameters are always flattened in the order their angle slots appear in
//! the lowered circuit, followed by the four biases.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{Axis, GateOp, Placement, QuantumError};

/// Number of measured qubits and of biases; one per Coin Game action.
pub const NUM_OUTPUTS: usize = 4;

pub type Biases = [f64; NUM_OUTPUTS];

#[derive(Debug, Error)]
pub enum GenomeError {
    #[error("{0} must contain at least one unit")]
    Empty(&'static str),
    #[error("invalid genome configuration: {0}")]
    InvalidConfig(String),
    #[error("layer {layer} has {found} qubit triples, expected {expected}")]
    LayerWidth { layer: usize, found: usize, expected: usize },
    #[error("prototype stores {found} angles, expected {expected}")]
    AngleCount { found: usize, expected: usize },
    #[error(transparent)]
    Gate(#[from] QuantumError),
    #[error("malformed genome document: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Which circuit representation to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concept {
    Fixed,
    Layer,
    Gate,
    Prototype,
}

/// Sizes used by [`random_init`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitConfig {
    pub num_qubits: usize,
    /// Layer count for Fixed and Layer, repetition count for Prototype.
    pub layers: usize,
    /// Gate count for Gate, template length for Prototype.
    pub gates: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            num_qubits: 6,
            layers: 1,
            gates: 70,
        }
    }
}

/// Total and parameterized gate counts of a lowered circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCount {
    pub total: usize,
    pub parameterized: usize,
}

/// Per-qubit `[a, b, c]` angle triples of one layer.
pub type LayerAngles = Vec<[f64; 3]>;

fn check_qubits(num_qubits: usize) -> Result<(), GenomeError> {
    if num_qubits < 2 {
        return Err(GenomeError::InvalidConfig(format!(
            "circuits need at least 2 qubits, got {num_qubits}"
        )));
    }
    Ok(())
}

fn check_layers(layers: &[LayerAngles], num_qubits: usize, what: &'static str) -> Result<(), GenomeError> {
    if layers.is_empty() {
        return Err(GenomeError::Empty(what));
    }
    for (layer, angles) in layers.iter().enumerate() {
        if angles.len() != num_qubits {
            return Err(GenomeError::LayerWidth {
                layer,
                found: angles.len(),
                expected: num_qubits,
            });
        }
    }
    Ok(())
}

pub(crate) fn random_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-PI..PI)
}

pub(crate) fn random_layer<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> LayerAngles {
    (0..num_qubits)
        .map(|_| [random_angle(rng), random_angle(rng), random_angle(rng)])
        .collect()
}

/// Uniform gate kind on a uniform qubit; CNOT gets a distinct uniform control.
pub(crate) fn random_placement<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Placement {
    let qubit = rng.random_range(0..num_qubits);
    match rng.random_range(0..4) {
        0 => Placement::Rotation { axis: Axis::X, qubit },
        1 => Placement::Rotation { axis: Axis::Y, qubit },
        2 => Placement::Rotation { axis: Axis::Z, qubit },
        _ => {
            let mut control = rng.random_range(0..num_qubits - 1);
            if control >= qubit {
                control += 1;
            }
            Placement::Cnot { control, target: qubit }
        }
    }
}

pub(crate) fn random_gate<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> GateOp {
    let placement = random_placement(num_qubits, rng);
    if placement.is_parameterized() {
        placement.with_angle(random_angle(rng))
    } else {
        placement.with_angle(0.0)
    }
}

/// The circuit of the original evolutionary VQC policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedGenome {
    pub(crate) num_qubits: usize,
    /// `layers[l][q] = [alpha, beta, gamma]` for RZ(alpha) RY(beta) RZ(gamma).
    pub(crate) layers: Vec<LayerAngles>,
    pub(crate) biases: Biases,
}

impl FixedGenome {
    pub fn new(num_qubits: usize, layers: Vec<LayerAngles>, biases: Biases) -> Result<Self, GenomeError> {
        let genome = Self {
            num_qubits,
            layers,
            biases,
        };
        genome.validate()?;
        Ok(genome)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        check_qubits(self.num_qubits)?;
        check_layers(&self.layers, self.num_qubits, "fixed circuit")
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// CNOT offset of 1-based layer `layer`: cycles through `1..n` so that the
    /// control never equals the target.
    pub fn cnot_offset(&self, layer: usize) -> usize {
        (layer - 1) % (self.num_qubits - 1) + 1
    }

    pub fn lower(&self) -> Vec<GateOp> {
        let n = self.num_qubits;
        let mut gates = Vec::with_capacity(self.layers.len() * 4 * n);
        for (l, angles) in self.layers.iter().enumerate() {
            let offset = self.cnot_offset(l + 1);
            gates.extend((0..n).map(|i| GateOp::cnot(i, (i + offset) % n)));
            for (q, [a, b, c]) in angles.iter().copied().enumerate() {
                gates.extend([GateOp::rz(q, a), GateOp::ry(q, b), GateOp::rz(q, c)]);
            }
        }
        gates
    }
}

/// Strongly entangling layers whose count may change during evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGenome {
    pub(crate) num_qubits: usize,
    /// `layers[l][q] = [x, y, z]` for RX(x) RY(y) RZ(z).
    pub(crate) layers: Vec<LayerAngles>,
    pub(crate) biases: Biases,
}

impl LayerGenome {
    pub fn new(num_qubits: usize, layers: Vec<LayerAngles>, biases: Biases) -> Result<Self, GenomeError> {
        let genome = Self {
            num_qubits,
            layers,
            biases,
        };
        genome.validate()?;
        Ok(genome)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        check_qubits(self.num_qubits)?;
        check_layers(&self.layers, self.num_qubits, "layer-based circuit")
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn lower(&self) -> Vec<GateOp> {
        let n = self.num_qubits;
        let mut gates = Vec::with_capacity(self.layers.len() * 4 * n);
        for angles in &self.layers {
            gates.extend((0..n).map(|i| GateOp::cnot(i, (i + n - 1) % n)));
            for (q, [x, y, z]) in angles.iter().copied().enumerate() {
                gates.extend([GateOp::rx(q, x), GateOp::ry(q, y), GateOp::rz(q, z)]);
            }
        }
        gates
    }
}

/// An unstructured gate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateGenome {
    pub(crate) num_qubits: usize,
    pub(crate) gates: Vec<GateOp>,
    pub(crate) biases: Biases,
}

impl GateGenome {
    pub fn new(num_qubits: usize, gates: Vec<GateOp>, biases: Biases) -> Result<Self, GenomeError> {
        let genome = Self {
            num_qubits,
            gates,
            biases,
        };
        genome.validate()?;
        Ok(genome)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        check_qubits(self.num_qubits)?;
        if self.gates.is_empty() {
            return Err(GenomeError::Empty("gate-based circuit"));
        }
        for gate in &self.gates {
            gate.validate(self.num_qubits)?;
        }
        Ok(())
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn lower(&self) -> Vec<GateOp> {
        self.gates.clone()
    }
}

/// A gate template repeated `repetitions` times.
///
/// `angles` is instance-major: the angle of the `j`-th rotation in the
/// template during repetition `r` is `angles[r * rotations + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeGenome {
    pub(crate) num_qubits: usize,
    pub(crate) prototype: Vec<Placement>,
    pub(crate) repetitions: usize,
    pub(crate) angles: Vec<f64>,
    pub(crate) biases: Biases,
}

impl PrototypeGenome {
    pub fn new(
        num_qubits: usize,
        prototype: Vec<Placement>,
        repetitions: usize,
        angles: Vec<f64>,
        biases: Biases,
    ) -> Result<Self, GenomeError> {
        let genome = Self {
            num_qubits,
            prototype,
            repetitions,
            angles,
            biases,
        };
        genome.validate()?;
        Ok(genome)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        check_qubits(self.num_qubits)?;
        if self.prototype.is_empty() {
            return Err(GenomeError::Empty("prototype"));
        }
        if self.repetitions == 0 {
            return Err(GenomeError::Empty("prototype repetition list"));
        }
        for placement in &self.prototype {
            placement.validate(self.num_qubits)?;
        }
        let expected = self.repetitions * self.rotations_per_repetition();
        if self.angles.len() != expected {
            return Err(GenomeError::AngleCount {
                found: self.angles.len(),
                expected,
            });
        }
        Ok(())
    }

    pub fn prototype(&self) -> &[Placement] {
        &self.prototype
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn rotations_per_repetition(&self) -> usize {
        self.prototype.iter().filter(|p| p.is_parameterized()).count()
    }

    pub fn lower(&self) -> Vec<GateOp> {
        let mut gates = Vec::with_capacity(self.repetitions * self.prototype.len());
        let mut angles = self.angles.iter().copied();
        for _ in 0..self.repetitions {
            for placement in &self.prototype {
                let angle = if placement.is_parameterized() {
                    angles.next().expect("angle count checked by validate")
                } else {
                    0.0
                };
                gates.push(placement.with_angle(angle));
            }
        }
        gates
    }
}

/// Any of the four circuit representations.
///
/// Serialized as a JSON object tagged by `"concept"`; see the README for the
/// full schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "concept", rename_all = "lowercase")]
pub enum CircuitGenome {
    Fixed(FixedGenome),
    Layer(LayerGenome),
    Gate(GateGenome),
    Prototype(PrototypeGenome),
}

impl CircuitGenome {
    pub fn concept(&self) -> Concept {
        match self {
            CircuitGenome::Fixed(_) => Concept::Fixed,
            CircuitGenome::Layer(_) => Concept::Layer,
            CircuitGenome::Gate(_) => Concept::Gate,
            CircuitGenome::Prototype(_) => Concept::Prototype,
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            CircuitGenome::Fixed(g) => g.num_qubits,
            CircuitGenome::Layer(g) => g.num_qubits,
            CircuitGenome::Gate(g) => g.num_qubits,
            CircuitGenome::Prototype(g) => g.num_qubits,
        }
    }

    pub fn biases(&self) -> &Biases {
        match self {
            CircuitGenome::Fixed(g) => &g.biases,
            CircuitGenome::Layer(g) => &g.biases,
            CircuitGenome::Gate(g) => &g.biases,
            CircuitGenome::Prototype(g) => &g.biases,
        }
    }

    pub fn biases_mut(&mut self) -> &mut Biases {
        match self {
            CircuitGenome::Fixed(g) => &mut g.biases,
            CircuitGenome::Layer(g) => &mut g.biases,
            CircuitGenome::Gate(g) => &mut g.biases,
            CircuitGenome::Prototype(g) => &mut g.biases,
        }
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        match self {
            CircuitGenome::Fixed(g) => g.validate(),
            CircuitGenome::Layer(g) => g.validate(),
            CircuitGenome::Gate(g) => g.validate(),
            CircuitGenome::Prototype(g) => g.validate(),
        }
    }

    pub fn lower(&self) -> Vec<GateOp> {
        match self {
            CircuitGenome::Fixed(g) => g.lower(),
            CircuitGenome::Layer(g) => g.lower(),
            CircuitGenome::Gate(g) => g.lower(),
            CircuitGenome::Prototype(g) => g.lower(),
        }
    }

    pub fn gate_count(&self) -> GateCount {
        match self {
            CircuitGenome::Fixed(g) => layered_count(g.num_qubits, g.layers.len()),
            CircuitGenome::Layer(g) => layered_count(g.num_qubits, g.layers.len()),
            CircuitGenome::Gate(g) => GateCount {
                total: g.gates.len(),
                parameterized: g.gates.iter().filter(|gate| gate.is_parameterized()).count(),
            },
            CircuitGenome::Prototype(g) => GateCount {
                total: g.repetitions * g.prototype.len(),
                parameterized: g.repetitions * g.rotations_per_repetition(),
            },
        }
    }

    /// Number of trainable values: one per rotation instance plus the biases.
    pub fn param_count(&self) -> usize {
        self.gate_count().parameterized + NUM_OUTPUTS
    }

    /// All angles in lowering order, followed by the biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        match self {
            CircuitGenome::Fixed(FixedGenome { layers, .. }) | CircuitGenome::Layer(LayerGenome { layers, .. }) => {
                out.extend(layers.iter().flatten().flatten().copied());
            }
            CircuitGenome::Gate(g) => out.extend(g.gates.iter().filter_map(GateOp::angle)),
            CircuitGenome::Prototype(g) => out.extend_from_slice(&g.angles),
        }
        out.extend_from_slice(self.biases());
        out
    }

    /// Mutable references to the values of [`params`](Self::params), same order.
    pub fn params_mut(&mut self) -> Vec<&mut f64> {
        let (angles, biases): (Vec<&mut f64>, &mut Biases) = match self {
            CircuitGenome::Fixed(FixedGenome { layers, biases, .. })
            | CircuitGenome::Layer(LayerGenome { layers, biases, .. }) => {
                (layers.iter_mut().flatten().flatten().collect(), biases)
            }
            CircuitGenome::Gate(g) => (g.gates.iter_mut().filter_map(GateOp::angle_mut).collect(), &mut g.biases),
            CircuitGenome::Prototype(g) => (g.angles.iter_mut().collect(), &mut g.biases),
        };
        let mut out = angles;
        out.extend(biases.iter_mut());
        out
    }

    /// Flattened-parameter indices that fall between two layers, for the
    /// layered concepts. A single-layer circuit yields the boundary between
    /// its angles and the biases.
    pub fn layer_cuts(&self) -> Option<Vec<usize>> {
        let (n, layers) = match self {
            CircuitGenome::Fixed(g) => (g.num_qubits, g.layers.len()),
            CircuitGenome::Layer(g) => (g.num_qubits, g.layers.len()),
            _ => return None,
        };
        let width = 3 * n;
        if layers == 1 {
            Some(vec![width])
        } else {
            Some((1..layers).map(|l| l * width).collect())
        }
    }

    pub fn to_json(&self) -> Result<String, GenomeError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, GenomeError> {
        let genome: CircuitGenome = serde_json::from_str(text)?;
        genome.validate()?;
        Ok(genome)
    }
}

fn layered_count(num_qubits: usize, layers: usize) -> GateCount {
    GateCount {
        total: layers * 4 * num_qubits,
        parameterized: layers * 3 * num_qubits,
    }
}

/// Build a random genome of the given concept. Biases start at zero.
pub fn random_init<R: Rng + ?Sized>(concept: Concept, config: &InitConfig, rng: &mut R) -> Result<CircuitGenome, GenomeError> {
    let n = config.num_qubits;
    check_qubits(n)?;
    let need = |value: usize, name: &str| {
        if value == 0 {
            Err(GenomeError::InvalidConfig(format!("{name} must be positive")))
        } else {
            Ok(())
        }
    };
    let biases = [0.0; NUM_OUTPUTS];
    Ok(match concept {
        Concept::Fixed => {
            need(config.layers, "layer count")?;
            let layers = (0..config.layers).map(|_| random_layer(n, rng)).collect();
            CircuitGenome::Fixed(FixedGenome::new(n, layers, biases)?)
        }
        Concept::Layer => {
            need(config.layers, "layer count")?;
            let layers = (0..config.layers).map(|_| random_layer(n, rng)).collect();
            CircuitGenome::Layer(LayerGenome::new(n, layers, biases)?)
        }
        Concept::Gate => {
            need(config.gates, "gate count")?;
            let gates = (0..config.gates).map(|_| random_gate(n, rng)).collect();
            CircuitGenome::Gate(GateGenome::new(n, gates, biases)?)
        }
        Concept::Prototype => {
            need(config.gates, "prototype length")?;
            need(config.layers, "repetition count")?;
            let prototype: Vec<Placement> = (0..config.gates).map(|_| random_placement(n, rng)).collect();
            let rotations = prototype.iter().filter(|p| p.is_parameterized()).count();
            let angles = (0..config.layers * rotations).map(|_| random_angle(rng)).collect();
            CircuitGenome::Prototype(PrototypeGenome::new(n, prototype, config.layers, angles, biases)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::quantum::GateKind;

    fn fixed(n: usize, layers: usize) -> CircuitGenome {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        random_init(Concept::Fixed, &InitConfig { num_qubits: n, layers, gates: 1 }, &mut rng).unwrap()
    }

    fn layer(n: usize, layers: usize) -> CircuitGenome {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        random_init(Concept::Layer, &InitConfig { num_qubits: n, layers, gates: 1 }, &mut rng).unwrap()
    }

    #[test]
    fn fixed_single_layer_six_qubits() {
        let gates = fixed(6, 1).lower();
        assert_eq!(gates.len(), 24);
        for (i, gate) in gates[..6].iter().enumerate() {
            assert_eq!(*gate, GateOp::cnot(i, (i + 1) % 6));
        }
        let kinds: Vec<_> = gates[6..9].iter().map(GateOp::kind).collect();
        assert_eq!(kinds, [GateKind::Rz, GateKind::Ry, GateKind::Rz]);
        assert!(gates[6..].iter().all(GateOp::is_parameterized));
    }

    #[test]
    fn fixed_two_qubits() {
        let gates = fixed(2, 1).lower();
        assert_eq!(gates.len(), 8);
        assert_eq!(&gates[..2], &[GateOp::cnot(0, 1), GateOp::cnot(1, 0)]);
        assert!(gates[2..].iter().all(GateOp::is_parameterized));
    }

    #[test]
    fn fixed_offset_never_degenerate() {
        let CircuitGenome::Fixed(g) = fixed(6, 16) else { unreachable!() };
        let offsets: Vec<_> = (1..=7).map(|l| g.cnot_offset(l)).collect();
        assert_eq!(offsets, [1, 2, 3, 4, 5, 1, 2]);
        for gate in g.lower() {
            gate.validate(6).unwrap();
        }
    }

    #[test]
    fn fixed_four_qubits_two_layers_uses_second_offset() {
        let gates = fixed(4, 2).lower();
        let second_chain: Vec<_> = gates[16..20].to_vec();
        assert_eq!(
            second_chain,
            vec![GateOp::cnot(0, 2), GateOp::cnot(1, 3), GateOp::cnot(2, 0), GateOp::cnot(3, 1)]
        );
    }

    #[test]
    fn fixed_parameter_counts() {
        for (layers, expected) in [(4, 76), (6, 112), (8, 148), (16, 292)] {
            assert_eq!(fixed(6, layers).param_count(), expected);
            assert_eq!(layer(6, layers).param_count(), expected);
        }
    }

    #[test]
    fn layer_based_lowering() {
        let gates = layer(6, 1).lower();
        assert_eq!(gates.len(), 24);
        for (i, gate) in gates[..6].iter().enumerate() {
            assert_eq!(*gate, GateOp::cnot(i, (i + 5) % 6));
        }
        let kinds: Vec<_> = gates[6..9].iter().map(GateOp::kind).collect();
        assert_eq!(kinds, [GateKind::Rx, GateKind::Ry, GateKind::Rz]);
        assert_eq!(layer(6, 1).param_count(), 22);
    }

    #[test]
    fn gate_genome_must_not_be_empty() {
        assert!(matches!(GateGenome::new(6, vec![], [0.0; 4]), Err(GenomeError::Empty(_))));
    }

    #[test]
    fn gate_genome_counts() {
        let mut gates: Vec<GateOp> = (0..53).map(|i| GateOp::ry(i % 6, 0.1)).collect();
        gates.extend((0..17).map(|i| GateOp::cnot(i % 6, (i + 1) % 6)));
        let g = CircuitGenome::Gate(GateGenome::new(6, gates, [0.0; 4]).unwrap());
        assert_eq!(g.lower().len(), 70);
        assert_eq!(g.gate_count(), GateCount { total: 70, parameterized: 53 });
        assert_eq!(g.param_count(), 57);

        let gates: Vec<GateOp> = (0..52).map(|i| GateOp::rx(i % 6, 0.0)).collect();
        assert_eq!(CircuitGenome::Gate(GateGenome::new(6, gates, [0.0; 4]).unwrap()).param_count(), 56);
    }

    #[test]
    fn prototype_counts() {
        let mut prototype: Vec<Placement> = (0..13).map(|q| Placement::Rotation { axis: Axis::Z, qubit: q % 6 }).collect();
        prototype.extend((0..5).map(|q| Placement::Cnot { control: q, target: q + 1 }));
        let angles = (0..8 * 13).map(|i| i as f64 * 0.01).collect();
        let g = CircuitGenome::Prototype(PrototypeGenome::new(6, prototype, 8, angles, [0.0; 4]).unwrap());
        assert_eq!(g.gate_count(), GateCount { total: 144, parameterized: 104 });
        assert_eq!(g.param_count(), 108);
        assert_eq!(g.lower().len(), 144);
    }

    #[test]
    fn prototype_single_repetition_matches_gate_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = InitConfig { num_qubits: 6, layers: 1, gates: 18 };
        let CircuitGenome::Prototype(p) = random_init(Concept::Prototype, &config, &mut rng).unwrap() else {
            unreachable!()
        };
        let gate_genome = GateGenome::new(6, p.lower(), p.biases).unwrap();
        assert_eq!(gate_genome.lower(), p.lower());
        assert_eq!(
            CircuitGenome::Gate(gate_genome).param_count(),
            CircuitGenome::Prototype(p).param_count()
        );
    }

    #[test]
    fn prototype_angle_count_checked() {
        let prototype = vec![Placement::Rotation { axis: Axis::X, qubit: 0 }];
        assert!(matches!(
            PrototypeGenome::new(6, prototype, 2, vec![0.0], [0.0; 4]),
            Err(GenomeError::AngleCount { found: 1, expected: 2 })
        ));
    }

    #[test]
    fn random_init_rejects_bad_config() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = [
            (Concept::Gate, InitConfig { num_qubits: 6, layers: 1, gates: 0 }),
            (Concept::Layer, InitConfig { num_qubits: 6, layers: 0, gates: 1 }),
            (Concept::Prototype, InitConfig { num_qubits: 6, layers: 0, gates: 18 }),
            (Concept::Fixed, InitConfig { num_qubits: 1, layers: 1, gates: 1 }),
        ];
        for (concept, config) in bad {
            assert!(random_init(concept, &config, &mut rng).is_err(), "{concept:?} {config:?}");
        }
    }

    #[test]
    fn random_init_biases_zero_angles_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let config = InitConfig { num_qubits: 6, layers: 3, gates: 40 };
        for concept in [Concept::Fixed, Concept::Layer, Concept::Gate, Concept::Prototype] {
            for _ in 0..20 {
                let g = random_init(concept, &config, &mut rng).unwrap();
                assert_eq!(g.biases(), &[0.0; 4]);
                let params = g.params();
                assert!(params.iter().all(|a| (-PI..PI).contains(a)));
            }
        }
    }

    #[test]
    fn layer_cuts() {
        assert_eq!(fixed(6, 4).layer_cuts(), Some(vec![18, 36, 54]));
        assert_eq!(layer(6, 1).layer_cuts(), Some(vec![18]));
    }

    fn arb_genome() -> impl Strategy<Value = CircuitGenome> {
        (0usize..4, any::<u64>(), 1usize..5, 1usize..30).prop_map(|(c, seed, layers, gates)| {
            let concept = [Concept::Fixed, Concept::Layer, Concept::Gate, Concept::Prototype][c];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = random_init(concept, &InitConfig { num_qubits: 6, layers, gates }, &mut rng).unwrap();
            for (i, b) in g.biases_mut().iter_mut().enumerate() {
                *b = i as f64 * 0.3 - 0.5;
            }
            g
        })
    }

    proptest! {
        #[test]
        fn param_count_matches_lowered_angle_slots(g in arb_genome()) {
            let slots = g.lower().iter().filter(|gate| gate.is_parameterized()).count();
            prop_assert_eq!(g.param_count(), slots + 4);
            prop_assert_eq!(g.params().len(), g.param_count());
            let lowered_angles: Vec<f64> = g.lower().iter().filter_map(GateOp::angle).collect();
            prop_assert_eq!(&g.params()[..slots], &lowered_angles[..]);
            prop_assert_eq!(g.lower(), g.clone().lower());
        }

        #[test]
        fn json_round_trip(g in arb_genome()) {
            let back = CircuitGenome::from_json(&g.to_json().unwrap()).unwrap();
            prop_assert_eq!(back.lower(), g.lower());
            prop_assert_eq!(back.gate_count(), g.gate_count());
            prop_assert_eq!(back.param_count(), g.param_count());
            prop_assert_eq!(back, g);
        }

        #[test]
        fn prototype_instances_repeat(seed in any::<u64>(), reps in 1usize..9, len in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_init(Concept::Prototype, &InitConfig { num_qubits: 6, layers: reps, gates: len }, &mut rng).unwrap();
            let lowered = g.lower();
            prop_assert_eq!(lowered.len(), reps * len);
            for j in 0..lowered.len() - len {
                prop_assert_eq!(lowered[j].placement(), lowered[j + len].placement());
            }
        }
    }
}
