//! Bell operators for both protocols and the inequality checks built on them.
//!
//! The two-qutrit expression `I3` and the six-qubit expression `|F6|` are
//! both bounded by 2 for local hidden-variable models. Their values are
//! computed as expectation values of the operators below on the residual
//! states.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    c, expectation, sample_index, CMatrix, Hermitian, Layout, Operator, PureState, QuantumState,
};
use crate::qubit::{self, parse_bits};
use crate::types::{Protocol, ResidualId};

/// Classical bound shared by `I3` and `|F6|`.
pub const LHV_BOUND: f64 = 2.0;

/// Quantum value of `I3` on the matching residual, `4(3 + 2√3)/9`.
pub fn qutrit_max() -> f64 {
    4.0 * (3.0 + 2.0 * 3f64.sqrt()) / 9.0
}

/// `|F6|` on the matching residual, `16/3`.
pub fn qubit_max() -> f64 {
    16.0 / 3.0
}

pub fn protocol_max(protocol: Protocol) -> f64 {
    match protocol {
        Protocol::Qutrit => qutrit_max(),
        Protocol::Qubit => qubit_max(),
    }
}

#[derive(Clone, Debug)]
pub struct BellOperator {
    pub protocol: Protocol,
    pub id: ResidualId,
    op: Hermitian,
}

impl BellOperator {
    pub fn new(protocol: Protocol, id: ResidualId, op: Operator) -> Result<Self> {
        Ok(Self {
            protocol,
            id,
            op: Hermitian::new(op)?,
        })
    }

    pub fn operator(&self) -> &Hermitian {
        &self.op
    }

    pub fn lhv_bound(&self) -> f64 {
        LHV_BOUND
    }

    pub fn expectation(&self, state: &dyn QuantumState) -> Result<f64> {
        expectation(&self.op, state)
    }

    pub fn evaluate(&self, state: &dyn QuantumState) -> Result<BellValue> {
        Ok(BellValue::new(self.expectation(state)?))
    }

    /// Sign of the operator's value on its own residual. The printed
    /// six-qubit dyads give `-16/3` for φb0 and φb2 and `+16/3` for φb1.
    pub fn orientation(&self) -> f64 {
        match (self.protocol, self.id) {
            (Protocol::Qubit, ResidualId::Phi0 | ResidualId::Phi2) => -1.0,
            _ => 1.0,
        }
    }
}

/// Signed value, its magnitude and the violation ratio `|value| / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellValue {
    pub value: f64,
    pub abs_value: f64,
    pub ratio: f64,
}

impl BellValue {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            abs_value: value.abs(),
            ratio: value.abs() / LHV_BOUND,
        }
    }
}

fn qutrit_bell_layout() -> Layout {
    Layout::new(&[("q1", 3), ("q2", 3)]).expect("static")
}

fn qubit_bell_layout() -> Layout {
    Layout::uniform("q", 6, 2).expect("static")
}

fn symmetric(layout: Layout, upper: &[(usize, usize, f64)]) -> Operator {
    let d = layout.dim();
    let mut m = CMatrix::zeros(d, d);
    for &(r, col, v) in upper {
        m[(r, col)] = c(v, 0.0);
        m[(col, r)] = c(v, 0.0);
    }
    Operator::new(layout, m).expect("square")
}

/// Two-qutrit operator maximally violating `I3` on φ_j, indexed `3q1 + q2`.
pub fn qutrit_bell(id: ResidualId) -> &'static BellOperator {
    static OPS: OnceLock<[BellOperator; 3]> = OnceLock::new();
    let ops = OPS.get_or_init(|| {
        let t = 2.0 / 3f64.sqrt();
        let upper: [Vec<(usize, usize, f64)>; 3] = [
            vec![(0, 4, t), (0, 8, 2.0), (1, 5, t), (3, 7, t), (4, 8, t)],
            vec![(1, 5, t), (1, 6, 2.0), (2, 3, t), (4, 8, t), (5, 6, t)],
            vec![(0, 4, t), (2, 3, t), (2, 7, 2.0), (3, 7, t), (5, 6, t)],
        ];
        ResidualId::ALL.map(|id| {
            let op = symmetric(qutrit_bell_layout(), &upper[id.index()]);
            BellOperator::new(Protocol::Qutrit, id, op).expect("symmetric")
        })
    });
    &ops[id.index()]
}

/// Six-qubit operator: `8|x⟩⟨y| + 8|y⟩⟨x| - 8|u⟩⟨v| - 8|v⟩⟨u|`.
pub fn qubit_bell(id: ResidualId) -> &'static BellOperator {
    static OPS: OnceLock<[BellOperator; 3]> = OnceLock::new();
    let ops = OPS.get_or_init(|| {
        let dyads: [[(&str, &str, f64); 2]; 3] = [
            [("101110", "011001", 8.0), ("100110", "010001", -8.0)],
            [("011010", "000101", 8.0), ("111010", "100101", -8.0)],
            [("110101", "011010", 8.0), ("100101", "001010", -8.0)],
        ];
        ResidualId::ALL.map(|id| {
            let layout = qubit_bell_layout();
            let upper: Vec<(usize, usize, f64)> = dyads[id.index()]
                .iter()
                .map(|&(ket, bra, v)| (bit_index(&layout, ket), bit_index(&layout, bra), v))
                .collect();
            let op = symmetric(layout, &upper);
            BellOperator::new(Protocol::Qubit, id, op).expect("symmetric")
        })
    });
    &ops[id.index()]
}

fn bit_index(layout: &Layout, bits: &str) -> usize {
    parse_bits(bits, layout.len())
        .and_then(|d| layout.index(&d))
        .expect("valid bitstring")
}

pub fn bell_operator(protocol: Protocol, id: ResidualId) -> &'static BellOperator {
    match protocol {
        Protocol::Qutrit => qutrit_bell(id),
        Protocol::Qubit => qubit_bell(id),
    }
}

fn check_dim(state: &dyn QuantumState, expected: usize) -> Result<()> {
    let found = state.layout().dim();
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `I3` for a two-qutrit state.
pub fn i3(state: &dyn QuantumState, id: ResidualId) -> Result<BellValue> {
    check_dim(state, 9)?;
    qutrit_bell(id).evaluate(state)
}

/// `F6` for a six-qubit state.
pub fn f6(state: &dyn QuantumState, id: ResidualId) -> Result<BellValue> {
    check_dim(state, 64)?;
    qubit_bell(id).evaluate(state)
}

pub fn bell_value(
    protocol: Protocol,
    state: &dyn QuantumState,
    id: ResidualId,
) -> Result<BellValue> {
    match protocol {
        Protocol::Qutrit => i3(state, id),
        Protocol::Qubit => f6(state, id),
    }
}

/// The residual each operator is paired with.
pub fn residual_state(protocol: Protocol, id: ResidualId) -> PureState {
    match protocol {
        Protocol::Qutrit => crate::qutrit::phi(id),
        Protocol::Qubit => qubit::phi_b(id),
    }
}

/// Agreed acceptance bound `χ`, strictly above the LHV bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SecurityThreshold(f64);

impl SecurityThreshold {
    pub fn new(chi: f64) -> Result<Self> {
        if chi.is_finite() && chi > LHV_BOUND {
            Ok(Self(chi))
        } else {
            Err(Error::ChiTooLow(chi))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SecurityThreshold {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SecurityThreshold> for f64 {
    fn from(t: SecurityThreshold) -> f64 {
        t.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Safe,
    Compromised,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "safe",
            Verdict::Compromised => "compromised",
        })
    }
}

pub fn verdict_for(abs_value: f64, chi: SecurityThreshold) -> Verdict {
    if abs_value >= chi.value() {
        Verdict::Safe
    } else {
        Verdict::Compromised
    }
}

pub fn violation_verdict(value: &BellValue, chi: SecurityThreshold) -> Verdict {
    verdict_for(value.abs_value, chi)
}

/// Shot-based estimate of `⟨B⟩`: measure in the eigenbasis of `B` and average
/// the observed eigenvalues.
#[derive(Clone, Debug)]
pub struct BellSampler {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl BellSampler {
    pub fn new(op: &BellOperator) -> Self {
        let (eigenvalues, eigenvectors) = op.operator().eigen();
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn outcome_probabilities(&self, state: &PureState) -> Result<Vec<f64>> {
        if state.layout().dim() != self.eigenvectors.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.eigenvectors.nrows(),
                found: state.layout().dim(),
            });
        }
        let amps = self.eigenvectors.adjoint() * state.amplitudes();
        Ok(amps.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Mean and standard error of `shots` single-shot eigenvalue readings.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        state: &PureState,
        shots: u64,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        if shots == 0 {
            return Err(Error::InvalidConfig("zero shots".into()));
        }
        let probs = self.outcome_probabilities(state)?;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..shots {
            let v = self.eigenvalues[sample_index(&probs, rng)?];
            sum += v;
            sum_sq += v * v;
        }
        let n = shots as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        Ok((mean, (var / n).sqrt()))
    }

    pub fn exact_mean(&self, state: &PureState) -> Result<f64> {
        let probs = self.outcome_probabilities(state)?;
        Ok(probs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(p, v)| p * v)
            .sum())
    }
}
