//! Dense statevector simulation for small circuits over the gate set
//! {RX, RY, RZ, CNOT}.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so on three
//! qubits the basis state `|q0 q1 q2>` has index `4*q0 + 2*q1 + q2`.
//! Rotations follow `R_G(theta) = exp(-i * theta * G / 2)`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that a state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("qubit index {index} out of range for {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("CNOT control and target are both qubit {0}")]
    ControlIsTarget(usize),
    #[error("feature vector has zero norm")]
    ZeroNorm,
    #[error("{features} features do not fit into {num_qubits} qubits")]
    TooManyFeatures { features: usize, num_qubits: usize },
    #[error("amplitude vector of length {0} is not a power of two")]
    BadLength(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("cannot measure {measured} qubits of a {num_qubits}-qubit state")]
    TooManyMeasured { measured: usize, num_qubits: usize },
}

/// Rotation axis of a single-qubit gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Gate kind as it appears in serialized gate records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Cnot];

    pub fn axis(self) -> Option<Axis> {
        match self {
            GateKind::Rx => Some(Axis::X),
            GateKind::Ry => Some(Axis::Y),
            GateKind::Rz => Some(Axis::Z),
            GateKind::Cnot => None,
        }
    }

    pub fn from_axis(axis: Axis) -> Self {
        match axis {
            Axis::X => GateKind::Rx,
            Axis::Y => GateKind::Ry,
            Axis::Z => GateKind::Rz,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cnot => "CNOT",
        };
        f.write_str(s)
    }
}

/// Flat on-disk form shared by [`GateOp`] and [`Placement`]:
/// `{"kind": "rx", "target": 2, "angle": 0.5}` or
/// `{"kind": "cnot", "target": 1, "control": 0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// Where a gate sits in a circuit, without its rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GateRecord", into = "GateRecord")]
pub enum Placement {
    Rotation { axis: Axis, qubit: usize },
    Cnot { control: usize, target: usize },
}

impl Placement {
    pub fn kind(&self) -> GateKind {
        match *self {
            Placement::Rotation { axis, .. } => GateKind::from_axis(axis),
            Placement::Cnot { .. } => GateKind::Cnot,
        }
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, Placement::Rotation { .. })
    }

    /// Attach an angle. The angle is dropped for CNOT.
    pub fn with_angle(self, angle: f64) -> GateOp {
        match self {
            Placement::Rotation { axis, qubit } => GateOp::Rotation { axis, qubit, angle },
            Placement::Cnot { control, target } => GateOp::Cnot { control, target },
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<(), QuantumError> {
        let check = |index: usize| {
            if index < num_qubits {
                Ok(())
            } else {
                Err(QuantumError::QubitOutOfRange { index, num_qubits })
            }
        };
        match *self {
            Placement::Rotation { qubit, .. } => check(qubit),
            Placement::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(QuantumError::ControlIsTarget(control));
                }
                Ok(())
            }
        }
    }
}

impl TryFrom<GateRecord> for Placement {
    type Error = String;

    fn try_from(record: GateRecord) -> Result<Self, Self::Error> {
        match (record.kind.axis(), record.control) {
            (Some(axis), None) => Ok(Placement::Rotation {
                axis,
                qubit: record.target,
            }),
            (Some(_), Some(_)) => Err(format!("{} gate record carries a control qubit", record.kind)),
            (None, Some(control)) => Ok(Placement::Cnot {
                control,
                target: record.target,
            }),
            (None, None) => Err("CNOT gate record is missing its control qubit".to_string()),
        }
    }
}

impl From<Placement> for GateRecord {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Rotation { axis, qubit } => GateRecord {
                kind: GateKind::from_axis(axis),
                target: qubit,
                control: None,
                angle: None,
            },
            Placement::Cnot { control, target } => GateRecord {
                kind: GateKind::Cnot,
                target,
                control: Some(control),
                angle: None,
            },
        }
    }
}

/// A concrete gate with its angle bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRecord", into = "GateRecord")]
pub enum GateOp {
    Rotation { axis: Axis, qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn rx(qubit: usize, angle: f64) -> Self {
        GateOp::Rotation { axis: Axis::X, qubit, angle }
    }

    pub fn ry(qubit: usize, angle: f64) -> Self {
        GateOp::Rotation { axis: Axis::Y, qubit, angle }
    }

    pub fn rz(qubit: usize, angle: f64) -> Self {
        GateOp::Rotation { axis: Axis::Z, qubit, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    pub fn placement(&self) -> Placement {
        match *self {
            GateOp::Rotation { axis, qubit, .. } => Placement::Rotation { axis, qubit },
            GateOp::Cnot { control, target } => Placement::Cnot { control, target },
        }
    }

    pub fn kind(&self) -> GateKind {
        self.placement().kind()
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, GateOp::Rotation { .. })
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateOp::Rotation { angle, .. } => Some(angle),
            GateOp::Cnot { .. } => None,
        }
    }

    pub fn angle_mut(&mut self) -> Option<&mut f64> {
        match self {
            GateOp::Rotation { angle, .. } => Some(angle),
            GateOp::Cnot { .. } => None,
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<(), QuantumError> {
        self.placement().validate(num_qubits)
    }
}

impl TryFrom<GateRecord> for GateOp {
    type Error = String;

    fn try_from(record: GateRecord) -> Result<Self, Self::Error> {
        let angle = record.angle;
        let placement = Placement::try_from(record)?;
        match (placement, angle) {
            (Placement::Rotation { .. }, Some(angle)) => Ok(placement.with_angle(angle)),
            (Placement::Rotation { .. }, None) => Err("rotation gate record is missing its angle".to_string()),
            (Placement::Cnot { .. }, None) => Ok(placement.with_angle(0.0)),
            (Placement::Cnot { .. }, Some(_)) => Err("CNOT gate record carries an angle".to_string()),
        }
    }
}

impl From<GateOp> for GateRecord {
    fn from(gate: GateOp) -> Self {
        let mut record = GateRecord::from(gate.placement());
        record.angle = gate.angle();
        record
    }
}

/// Unit-norm state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amplitudes: Vec<Complex64>,
    num_qubits: usize,
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state `|index>`.
    ///
    /// Panics if `index >= 2^num_qubits`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes, num_qubits }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QuantumError::BadLength(len));
        }
        let state = Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize, QuantumError> {
        if qubit >= self.num_qubits {
            return Err(QuantumError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    /// Apply a 2x2 unitary `[[m00, m01], [m10, m11]]` to one qubit.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) -> Result<(), QuantumError> {
        let mask = self.mask(qubit)?;
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<(), QuantumError> {
        match *gate {
            GateOp::Rotation { axis, qubit, angle } => self.apply_single(qubit, rotation_matrix(axis, angle)),
            GateOp::Cnot { control, target } => {
                let cmask = self.mask(control)?;
                let tmask = self.mask(target)?;
                if control == target {
                    return Err(QuantumError::ControlIsTarget(control));
                }
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
                Ok(())
            }
        }
    }

    /// ⟨Z⟩ on `qubit`: weight of bit 0 minus weight of bit 1.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64, QuantumError> {
        let mask = self.mask(qubit)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }
}

/// The 2x2 matrix of `exp(-i * angle * G / 2)` for `G` the Pauli matrix of `axis`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    match axis {
        Axis::X => [[re(c), im(-s)], [im(-s), re(c)]],
        Axis::Y => [[re(c), re(-s)], [re(s), re(c)]],
        Axis::Z => [[Complex64::new(c, -s), re(0.0)], [re(0.0), Complex64::new(c, s)]],
    }
}

/// Return `gate` applied to `state`.
pub fn apply_gate(state: &Statevector, gate: &GateOp) -> Result<Statevector, QuantumError> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// Zero-pad `features` to `2^num_qubits` entries and normalize them into a state.
///
/// The amplitudes are written directly; this is the state a Möttönen
/// state-preparation circuit would produce on `|0...0>`.
pub fn amplitude_embed(features: &[f64], num_qubits: usize) -> Result<Statevector, QuantumError> {
    let dim = 1usize << num_qubits;
    if features.len() > dim {
        return Err(QuantumError::TooManyFeatures {
            features: features.len(),
            num_qubits,
        });
    }
    let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(QuantumError::ZeroNorm);
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    for (a, &x) in amplitudes.iter_mut().zip(features) {
        *a = Complex64::new(x / norm, 0.0);
    }
    Ok(Statevector { amplitudes, num_qubits })
}

/// Apply `gates` to a copy of `input` and return ⟨Z⟩ of qubits `0..measured`.
pub fn run_circuit(gates: &[GateOp], input: &Statevector, measured: usize) -> Result<Vec<f64>, QuantumError> {
    if measured > input.num_qubits() {
        return Err(QuantumError::TooManyMeasured {
            measured,
            num_qubits: input.num_qubits(),
        });
    }
    let mut state = input.clone();
    for gate in gates {
        state.apply(gate)?;
    }
    (0..measured).map(|q| state.expectation_z(q)).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |10> has index 2 with qubit 0 as the high bit.
        let mut s = Statevector::basis(2, 0b10);
        s.apply(&GateOp::cnot(0, 1)).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b11));

        let mut s = Statevector::basis(2, 0b01);
        s.apply(&GateOp::cnot(0, 1)).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b01));
    }

    #[test]
    fn rx_pi_maps_zero_to_minus_i_one() {
        let s = apply_gate(&Statevector::zero(1), &GateOp::rx(0, PI)).unwrap();
        let a = s.amplitudes();
        assert_abs_diff_eq!(a[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[0].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn gate_errors() {
        let mut s = Statevector::zero(2);
        assert_eq!(
            s.apply(&GateOp::rx(2, 0.1)),
            Err(QuantumError::QubitOutOfRange { index: 2, num_qubits: 2 })
        );
        assert_eq!(s.apply(&GateOp::cnot(1, 1)), Err(QuantumError::ControlIsTarget(1)));
        assert!(s.apply(&GateOp::cnot(0, 5)).is_err());
    }

    #[test]
    fn embed_basis_state() {
        let s = amplitude_embed(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s, Statevector::zero(2));
    }

    #[test]
    fn embed_three_four() {
        let s = amplitude_embed(&[3.0, 4.0], 1).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn embed_pads_with_zeros() {
        let s = amplitude_embed(&[1.0; 36], 6).unwrap();
        assert_eq!(s.amplitudes().len(), 64);
        for (i, a) in s.amplitudes().iter().enumerate() {
            let expected = if i < 36 { 1.0 / 6.0 } else { 0.0 };
            assert_abs_diff_eq!(a.re, expected, epsilon = 1e-15);
            assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn embed_errors() {
        assert_eq!(amplitude_embed(&[0.0; 4], 2), Err(QuantumError::ZeroNorm));
        assert_eq!(
            amplitude_embed(&[1.0; 5], 2),
            Err(QuantumError::TooManyFeatures { features: 5, num_qubits: 2 })
        );
    }

    #[test]
    fn expectation_on_basis_and_superposition() {
        assert_eq!(Statevector::basis(3, 0b000).expectation_z(1).unwrap(), 1.0);
        assert_eq!(Statevector::basis(3, 0b010).expectation_z(1).unwrap(), -1.0);
        let plus = apply_gate(&Statevector::zero(1), &GateOp::ry(0, PI / 2.0)).unwrap();
        assert_abs_diff_eq!(plus.expectation_z(0).unwrap(), 0.0, epsilon = 1e-12);
        assert!(plus.expectation_z(1).is_err());
    }

    #[test]
    fn expectation_ignores_global_phase() {
        let mut s = Statevector::zero(2);
        s.apply(&GateOp::ry(0, 0.7)).unwrap();
        s.apply(&GateOp::rx(1, 1.3)).unwrap();
        let phase = Complex64::from_polar(1.0, 0.9);
        let rotated =
            Statevector::from_amplitudes(s.amplitudes().iter().map(|a| a * phase).collect()).unwrap();
        for q in 0..2 {
            assert_abs_diff_eq!(
                s.expectation_z(q).unwrap(),
                rotated.expectation_z(q).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn rz_on_basis_state_keeps_probabilities() {
        for index in 0..8 {
            let s = apply_gate(&Statevector::basis(3, index), &GateOp::rz(1, 1.1)).unwrap();
            for (i, a) in s.amplitudes().iter().enumerate() {
                let p = if i == index { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a.norm_sqr(), p, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn run_circuit_examples() {
        let zero = Statevector::zero(4);
        assert_eq!(run_circuit(&[], &zero, 4).unwrap(), vec![1.0; 4]);
        let out = run_circuit(&[GateOp::rx(0, PI)], &Statevector::zero(1), 1).unwrap();
        assert_abs_diff_eq!(out[0], -1.0, epsilon = 1e-15);
        assert!(run_circuit(&[], &zero, 5).is_err());
    }

    #[test]
    fn from_amplitudes_checks() {
        assert_eq!(
            Statevector::from_amplitudes(vec![c(1.0, 0.0); 3]),
            Err(QuantumError::BadLength(3))
        );
        assert!(matches!(
            Statevector::from_amplitudes(vec![c(1.0, 0.0); 2]),
            Err(QuantumError::NotNormalized(_))
        ));
    }

    #[test]
    fn gate_record_json() {
        let gate = GateOp::rz(3, 0.25);
        let json = serde_json::to_string(&gate).unwrap();
        assert_eq!(json, r#"{"kind":"rz","target":3,"angle":0.25}"#);
        let cnot: GateOp = serde_json::from_str(r#"{"kind":"cnot","target":1,"control":0}"#).unwrap();
        assert_eq!(cnot, GateOp::cnot(0, 1));
        assert!(serde_json::from_str::<GateOp>(r#"{"kind":"rx","target":1}"#).is_err());
        assert!(serde_json::from_str::<GateOp>(r#"{"kind":"cnot","target":1}"#).is_err());
    }
}
