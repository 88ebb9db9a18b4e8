//! The eight-qubit protocol. Each qutrit digit is carried by a pair of qubits
//! (0 ↔ 00, 1 ↔ 01, 2 ↔ 10); the pairs are `B_ns O B_s A`, written left to
//! right with `B_ns` most significant. Within a pair the left qubit (`*1`) is
//! the high bit and the right qubit (`*0`) the low bit.
//!
//! The encoded operators act as their qutrit counterparts on the encoded
//! subspace and as the identity on any basis state holding a `11` pair.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, Layout, Operator, PureState};
use crate::types::{ResidualId, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pair {
    /// Bob's "no switch" copy, used as the control of the switch.
    Bns,
    /// Opened door / victory pair.
    O,
    /// Bob's "switch" copy.
    Bs,
    /// Alice's pair; the only one sent over the channel.
    A,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::Bns, Pair::O, Pair::Bs, Pair::A];

    pub fn high(self) -> &'static str {
        match self {
            Pair::Bns => "bns1",
            Pair::O => "o1",
            Pair::Bs => "bs1",
            Pair::A => "a1",
        }
    }

    pub fn low(self) -> &'static str {
        match self {
            Pair::Bns => "bns0",
            Pair::O => "o0",
            Pair::Bs => "bs0",
            Pair::A => "a0",
        }
    }

    pub fn qubits(self) -> [&'static str; 2] {
        [self.high(), self.low()]
    }
}

/// Two measured or prepared bits of a pair, `high << 1 | low`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairValue(u8);

impl PairValue {
    pub fn from_bits(high: u8, low: u8) -> Self {
        PairValue(((high & 1) << 1) | (low & 1))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn high(self) -> u8 {
        self.0 >> 1
    }

    pub fn low(self) -> u8 {
        self.0 & 1
    }

    pub fn encode(digit: usize) -> Result<Self> {
        match digit {
            0..=2 => Ok(PairValue(digit as u8)),
            _ => Err(Error::DigitOutOfRange { digit, dim: 3 }),
        }
    }

    pub fn decode(self) -> Result<usize> {
        match self.0 {
            3 => Err(Error::InvalidEncoding),
            v => Ok(v as usize),
        }
    }
}

impl fmt::Display for PairValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.high(), self.low())
    }
}

impl std::str::FromStr for PairValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(PairValue(0)),
            "01" => Ok(PairValue(1)),
            "10" => Ok(PairValue(2)),
            "11" => Ok(PairValue(3)),
            _ => Err(Error::InvalidConfig(format!("bad pair value `{s}`"))),
        }
    }
}

impl Serialize for PairValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PairValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn qubit_layout(names: &[&str]) -> Layout {
    let regs: Vec<(&str, usize)> = names.iter().map(|n| (*n, 2)).collect();
    Layout::new(&regs).expect("distinct qubit names")
}

fn pairs_layout(pairs: &[Pair]) -> Layout {
    let names: Vec<&str> = pairs.iter().flat_map(|p| p.qubits()).collect();
    qubit_layout(&names)
}

/// All eight qubits, `B_ns O B_s A`.
pub fn full_layout() -> Layout {
    pairs_layout(&Pair::ALL)
}

/// Six qubits `B_ns B_s A` left after the O pair is measured.
pub fn residual_layout() -> Layout {
    pairs_layout(&[Pair::Bns, Pair::Bs, Pair::A])
}

/// Equal superposition of bitstrings (most significant qubit first).
pub fn bit_state(layout: Layout, bitstrings: &[&str]) -> Result<PureState> {
    let terms = bitstrings
        .iter()
        .map(|s| parse_bits(s, layout.len()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[usize]> = terms.iter().map(|t| t.as_slice()).collect();
    PureState::uniform(layout, &refs)
}

pub(crate) fn parse_bits(s: &str, n: usize) -> Result<Vec<usize>> {
    if s.len() != n || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::InvalidConfig(format!(
            "`{s}` is not a {n}-bit string"
        )));
    }
    Ok(s.bytes().map(|b| (b - b'0') as usize).collect())
}

/// Pair digits from a list of qubit digits laid out as consecutive pairs.
fn pair_values(bits: &[usize]) -> Vec<PairValue> {
    bits.chunks(2)
        .map(|p| PairValue::from_bits(p[0] as u8, p[1] as u8))
        .collect()
}

fn decode_all(bits: &[usize]) -> Option<Vec<usize>> {
    pair_values(bits).iter().map(|p| p.decode().ok()).collect()
}

fn encode_all(digits: &[usize]) -> Vec<usize> {
    digits
        .iter()
        .flat_map(|&d| {
            let p = PairValue(d as u8);
            [p.high() as usize, p.low() as usize]
        })
        .collect()
}

/// Lift a map on qutrit digits to the given pairs; basis states holding a
/// `11` pair are left alone.
fn encoded_map(pairs: &[Pair], f: impl Fn(&[usize]) -> Vec<usize>) -> Operator {
    Operator::basis_map(pairs_layout(pairs), |bits| match decode_all(bits) {
        Some(digits) => encode_all(&f(&digits)),
        None => bits.to_vec(),
    })
    .expect("encoded map is a permutation")
}

/// `U3(θ, φ, λ)` single-qubit gate.
pub fn u3_gate(theta: f64, phi: f64, lambda: f64) -> Operator {
    let (s, co) = (theta / 2.0).sin_cos();
    let m = crate::qcore::CMatrix::from_row_slice(
        2,
        2,
        &[
            c(co, 0.0),
            -c(0.0, lambda).exp() * s,
            c(0.0, phi).exp() * s,
            c(0.0, lambda + phi).exp() * co,
        ],
    );
    Operator::new(qubit_layout(&["q"]), m).expect("2x2")
}

fn hadamard() -> Operator {
    let h = 1.0 / 2f64.sqrt();
    Operator::from_real_rows(qubit_layout(&["q"]), &[vec![h, h], vec![h, -h]]).expect("2x2")
}

fn pauli_x() -> Operator {
    Operator::permutation(qubit_layout(&["q"]), |i| 1 - i).expect("2x2")
}

/// Controlled gate on `[control, target]`, firing when control is |1⟩.
fn controlled(gate: &Operator) -> Operator {
    let mut m = crate::qcore::CMatrix::identity(4, 4);
    for r in 0..2 {
        for col in 0..2 {
            m[(2 + r, 2 + col)] = gate.entry(r, col);
        }
    }
    Operator::new(qubit_layout(&["c", "t"]), m).expect("4x4")
}

/// Gates of the preparation circuit taking |0⟩⊗8 to
/// (|00000000⟩ + |01000101⟩ + |10001010⟩)/√3, in application order and
/// lifted to the full layout.
pub fn init_circuit() -> &'static [Operator] {
    static OPS: OnceLock<Vec<Operator>> = OnceLock::new();
    OPS.get_or_init(|| {
        let full = full_layout();
        let theta = 2.0 * (1.0 / 2f64.sqrt()).atan();
        let steps: Vec<(Operator, Vec<&str>)> = vec![
            // amplitudes √(2/3), √(1/3) on the high qubit of B_ns
            (u3_gate(theta, 0.0, std::f64::consts::PI), vec!["bns1"]),
            // split the |0⟩ branch evenly over the low qubit
            (pauli_x(), vec!["bns1"]),
            (controlled(&hadamard()), vec!["bns1", "bns0"]),
            (pauli_x(), vec!["bns1"]),
            // copy B_ns into B_s and A
            (controlled(&pauli_x()), vec!["bns1", "bs1"]),
            (controlled(&pauli_x()), vec!["bns0", "bs0"]),
            (controlled(&pauli_x()), vec!["bns1", "a1"]),
            (controlled(&pauli_x()), vec!["bns0", "a0"]),
        ];
        steps
            .into_iter()
            .map(|(gate, targets)| gate.embed(&full, &targets).expect("gate targets exist"))
            .collect()
    })
}

/// The preparation circuit as a single 256×256 unitary.
pub fn init_op() -> Operator {
    init_circuit()
        .iter()
        .fold(Operator::identity(full_layout()), |acc, g| {
            g.compose(&acc).expect("same layout")
        })
}

/// Step 1: the prepared eight-qubit state.
pub fn init_state() -> PureState {
    static STATE: OnceLock<PureState> = OnceLock::new();
    STATE
        .get_or_init(|| {
            let zero = PureState::basis(full_layout(), &[0; 8]).expect("basis");
            init_circuit()
                .iter()
                .try_fold(zero, |s, g| s.apply(g))
                .expect("same layout")
        })
        .clone()
}

/// Strategy on one pair: G0 cycles 00→01→10→00, G1 the reverse; 11 fixed.
pub fn strategy_op_b(bit: Strategy) -> Operator {
    let shift = bit.shift();
    Operator::basis_map(
        qubit_layout(&["hi", "lo"]),
        |bits| match PairValue::from_bits(bits[0] as u8, bits[1] as u8).decode() {
            Ok(d) => encode_all(&[(d + shift) % 3]),
            Err(_) => bits.to_vec(),
        },
    )
    .expect("permutation")
}

/// Empty-door opening on pairs `O B_s A` (local index order O, B_s, A).
pub fn open_op_b() -> Operator {
    encoded_map(&[Pair::O, Pair::Bs, Pair::A], |d| {
        let (l, b, a) = (d[0], d[1], d[2]);
        let o = if b != a {
            (3 - b - a + l) % 3
        } else {
            (b + l + 1) % 3
        };
        vec![o, b, a]
    })
}

/// Door switching on pairs `O B_s B_ns` (local order O, B_s, B_ns). With
/// `B_ns != O` the `B_s` door is exchanged between `B_ns` and the third door
/// `t ∉ {B_ns, O}`; otherwise identity.
pub fn switch_op_b() -> Operator {
    encoded_map(&[Pair::O, Pair::Bs, Pair::Bns], |d| {
        let (o, bs, bns) = (d[0], d[1], d[2]);
        if bns == o {
            return d.to_vec();
        }
        let t = 3 - bns - o;
        let bs = if bs == bns {
            t
        } else if bs == t {
            bns
        } else {
            bs
        };
        vec![o, bs, bns]
    })
}

/// Victory encoding on pairs `O B_s A`: `O := O + B_s + A mod 3`.
pub fn victory_op_b() -> Operator {
    encoded_map(&[Pair::O, Pair::Bs, Pair::A], |d| {
        vec![(d[0] + d[1] + d[2]) % 3, d[1], d[2]]
    })
}

fn local_names(op: &Operator) -> Vec<&str> {
    op.layout().names().collect()
}

/// Full-register steps of a round as permutation tables.
struct FullOps {
    bob: [Vec<usize>; 2],
    alice: [Vec<usize>; 2],
    finish: Vec<usize>,
}

fn full_ops() -> &'static FullOps {
    static OPS: OnceLock<FullOps> = OnceLock::new();
    OPS.get_or_init(|| {
        let full = full_layout();
        let on_pair = |bit: Strategy, p: Pair| {
            strategy_op_b(bit)
                .embed(&full, &p.qubits())
                .expect("pair exists")
        };
        let lift = |op: Operator| op.embed(&full, &local_names(&op)).expect("names exist");
        let table = |op: Operator| {
            op.permutation_table()
                .expect("protocol steps permute the basis")
        };
        let bob = Strategy::ALL.map(|g| {
            table(
                on_pair(g, Pair::Bs)
                    .compose(&on_pair(g, Pair::Bns))
                    .expect("same layout"),
            )
        });
        let finish = lift(victory_op_b())
            .compose(&lift(switch_op_b()))
            .and_then(|vs| vs.compose(&lift(open_op_b())))
            .expect("same layout");
        FullOps {
            bob,
            alice: Strategy::ALL.map(|g| table(on_pair(g, Pair::A))),
            finish: table(finish),
        }
    })
}

/// Step 2: Bob applies his strategy to both `B_s` and `B_ns`.
pub fn bob_strategy(state: &PureState, k_b: Strategy) -> Result<PureState> {
    full_layout().check_compatible(state.layout())?;
    state.permute(&full_ops().bob[k_b.bit() as usize])
}

/// Step 4: Alice applies her strategy to pair `A`.
pub fn alice_strategy(state: &PureState, k_a: Strategy) -> Result<PureState> {
    full_layout().check_compatible(state.layout())?;
    state.permute(&full_ops().alice[k_a.bit() as usize])
}

/// Steps 6 to 8: open, switch and victory encoding.
pub fn bob_finish(state: &PureState) -> Result<PureState> {
    full_layout().check_compatible(state.layout())?;
    state.permute(&full_ops().finish)
}

/// Full evolution before the O measurement.
pub fn evolve_round_b(k_a: Strategy, k_b: Strategy) -> PureState {
    let s = init_state();
    bob_strategy(&s, k_b)
        .and_then(|s| alice_strategy(&s, k_a))
        .and_then(|s| bob_finish(&s))
        .expect("fixed layouts")
}

#[derive(Clone, Debug)]
pub struct OMeasurement {
    pub o_pair: PairValue,
    /// Six-qubit state over `B_ns B_s A`.
    pub residual: PureState,
    /// 1 when Bob must flip his key bit.
    pub flip: u8,
    pub residual_id: ResidualId,
}

/// Step 9: Bob measures both qubits of `O`.
pub fn measure_o<R: Rng + ?Sized>(state: &PureState, rng: &mut R) -> Result<OMeasurement> {
    let (hi, s) = state.measure(Pair::O.high(), rng)?;
    let (lo, residual) = s.measure(Pair::O.low(), rng)?;
    let o_pair = PairValue::from_bits(hi as u8, lo as u8);
    let residual_id = match o_pair.decode() {
        Ok(j) => ResidualId::from_index(j)?,
        Err(_) => {
            return Err(Error::ProtocolViolation(
                "O pair measured as 11".to_string(),
            ))
        }
    };
    Ok(OMeasurement {
        o_pair,
        residual,
        flip: u8::from(o_pair.bits() != 0),
        residual_id,
    })
}

/// Residual states over `B_ns B_s A` named by the O outcome.
pub fn phi_b(id: ResidualId) -> PureState {
    let strings: [&str; 3] = match id {
        ResidualId::Phi0 => ["001000", "010001", "100110"],
        ResidualId::Phi1 => ["000101", "011010", "100000"],
        ResidualId::Phi2 => ["001010", "010000", "100101"],
    };
    bit_state(residual_layout(), &strings).expect("valid bitstrings")
}
