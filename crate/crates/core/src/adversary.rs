//! Eve's intercept-and-resend attacks and channel noise.
//!
//! Eve measures the travelling system in the computational basis and forwards
//! the collapsed state. In the qutrit protocol the travelling system is Bob's
//! qutrit `b`; in the qubit protocol it is Alice's pair `A`. Each round offers
//! two legs: before the receiving party applies a strategy and after.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_value, residual_state, LHV_BOUND};
use crate::error::{Error, Result};
use crate::qcore::{mix, CMatrix, MixedState, PureState, QuantumState};
use crate::qubit::{self, Pair, PairValue};
use crate::qutrit;
use crate::types::{Protocol, ResidualId, Strategy, Switch};

/// One qubit of Alice's pair: `A0` is the low (right) bit, `A1` the high one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairQubit {
    A0,
    A1,
}

impl PairQubit {
    pub fn register(self) -> &'static str {
        match self {
            PairQubit::A0 => Pair::A.low(),
            PairQubit::A1 => Pair::A.high(),
        }
    }
}

impl std::str::FromStr for PairQubit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a0" => Ok(PairQubit::A0),
            "a1" => Ok(PairQubit::A1),
            other => Err(Error::InvalidConfig(format!("unknown qubit `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AttackKind {
    None,
    IrFirstLeg,
    IrSecondLeg,
    DoubleIr,
    /// Qubit protocol only: one qubit of pair `A` on each leg.
    SingleQubitIr {
        first: PairQubit,
        second: PairQubit,
    },
}

/// What Eve does and how often, plus channel noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackPolicy {
    pub kind: AttackKind,
    /// Per-round probability that the attack is executed.
    pub p: f64,
    /// Per-round probability that the channel dephases the travelling system.
    pub noise: f64,
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange { name, value })
    }
}

impl AttackPolicy {
    pub fn new(kind: AttackKind, p: f64, noise: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("noise", noise)?;
        Ok(Self { kind, p, noise })
    }

    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            p: 0.0,
            noise: 0.0,
        }
    }

    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        check_probability("p", self.p)?;
        check_probability("noise", self.noise)?;
        if protocol == Protocol::Qutrit && matches!(self.kind, AttackKind::SingleQubitIr { .. }) {
            return Err(Error::InvalidConfig(
                "single-qubit attacks apply to the qubit protocol only".into(),
            ));
        }
        Ok(())
    }

    /// Registers Eve measures on the first and second leg when she attacks.
    pub fn legs(&self, protocol: Protocol) -> (Vec<&'static str>, Vec<&'static str>) {
        let channel = channel_registers(protocol);
        match self.kind {
            AttackKind::None => (vec![], vec![]),
            AttackKind::IrFirstLeg => (channel, vec![]),
            AttackKind::IrSecondLeg => (vec![], channel),
            AttackKind::DoubleIr => (channel.clone(), channel),
            AttackKind::SingleQubitIr { first, second } => {
                (vec![first.register()], vec![second.register()])
            }
        }
    }

    /// Attacks that let Eve read the strategy bit.
    pub fn reveals_key(&self) -> bool {
        matches!(self.kind, AttackKind::DoubleIr)
    }
}

/// Registers of the system that crosses the quantum channel.
pub fn channel_registers(protocol: Protocol) -> Vec<&'static str> {
    match protocol {
        Protocol::Qutrit => vec![qutrit::BOB],
        Protocol::Qubit => Pair::A.qubits().to_vec(),
    }
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub attacked: bool,
    pub eve_observations: Vec<usize>,
    pub post_state: PureState,
}

impl AttackOutcome {
    pub fn untouched(state: PureState) -> Self {
        Self {
            attacked: false,
            eve_observations: Vec::new(),
            post_state: state,
        }
    }
}

/// Measure each target in the computational basis and resend the collapsed
/// state; the registers stay in the layout.
pub fn intercept_resend<R: Rng + ?Sized>(
    state: &PureState,
    targets: &[&str],
    rng: &mut R,
) -> Result<AttackOutcome> {
    if targets.is_empty() {
        return Ok(AttackOutcome::untouched(state.clone()));
    }
    let mut post = state.clone();
    let mut obs = Vec::with_capacity(targets.len());
    for t in targets {
        let (k, collapsed) = post.measure_keep(t, rng)?;
        obs.push(k);
        post = collapsed;
    }
    Ok(AttackOutcome {
        attacked: true,
        eve_observations: obs,
        post_state: post,
    })
}

/// Every outcome sequence of measuring `targets` in order, with its
/// probability and collapsed (registers kept) state.
pub fn resend_branches(
    state: &PureState,
    targets: &[&str],
) -> Result<Vec<(f64, Vec<usize>, PureState)>> {
    let mut out = vec![(1.0, Vec::new(), state.clone())];
    for t in targets {
        let mut next = Vec::new();
        for (p, obs, s) in out {
            for (k, q) in s.probabilities(t)?.into_iter().enumerate() {
                if q > 1e-15 {
                    let mut o = obs.clone();
                    o.push(k);
                    next.push((p * q, o, s.collapse(t, k)?));
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Strategy and switch bits of one round; `k_s` is ignored by the qubit protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundChoice {
    pub k_a: Strategy,
    pub k_b: Strategy,
    pub k_s: Switch,
}

impl RoundChoice {
    pub fn all(protocol: Protocol) -> Vec<RoundChoice> {
        let switches: &[Switch] = match protocol {
            Protocol::Qutrit => &Switch::ALL,
            Protocol::Qubit => &[Switch::Stay],
        };
        let mut v = Vec::new();
        for k_a in Strategy::ALL {
            for k_b in Strategy::ALL {
                for &k_s in switches {
                    v.push(RoundChoice { k_a, k_b, k_s });
                }
            }
        }
        v
    }
}

/// A possible end of a round: probability, Eve's readings, the residual and
/// which φ the honest parties believe remains.
#[derive(Clone, Debug)]
pub struct EndBranch {
    pub probability: f64,
    pub eve: Vec<usize>,
    pub residual_id: ResidualId,
    pub residual: PureState,
}

/// Exhaustive enumeration of a round with Eve measuring `leg1` before the
/// receiving party's strategy and `leg2` after it.
pub fn round_branches(
    protocol: Protocol,
    choice: RoundChoice,
    leg1: &[&str],
    leg2: &[&str],
) -> Result<Vec<EndBranch>> {
    let mut out = Vec::new();
    match protocol {
        Protocol::Qutrit => {
            let s = qutrit::alice_hides(&qutrit::initial_state(), choice.k_a)?;
            for (p1, o1, s1) in resend_branches(&s, leg1)? {
                let s1 = qutrit::bob_chooses(&s1, choice.k_b)?;
                for (p2, o2, s2) in resend_branches(&s1, leg2)? {
                    let fin = qutrit::open_switch_encode(&s2, choice.k_s)?;
                    for b in fin.branches(qutrit::OPENED)? {
                        let k_r = u8::from(b.outcome != 0);
                        out.push(EndBranch {
                            probability: p1 * p2 * b.probability,
                            eve: [o1.clone(), o2.clone()].concat(),
                            residual_id: qutrit::residual_id(choice.k_a, choice.k_s, k_r),
                            residual: b.residual,
                        });
                    }
                }
            }
        }
        Protocol::Qubit => {
            let s = qubit::bob_strategy(&qubit::init_state(), choice.k_b)?;
            for (p1, o1, s1) in resend_branches(&s, leg1)? {
                let s1 = qubit::alice_strategy(&s1, choice.k_a)?;
                for (p2, o2, s2) in resend_branches(&s1, leg2)? {
                    let fin = qubit::bob_finish(&s2)?;
                    for hi in fin.branches(Pair::O.high())? {
                        for lo in hi.residual.branches(Pair::O.low())? {
                            let pair = PairValue::from_bits(hi.outcome as u8, lo.outcome as u8);
                            let id = ResidualId::from_index(pair.decode()?)?;
                            out.push(EndBranch {
                                probability: p1 * p2 * hi.probability * lo.probability,
                                eve: [o1.clone(), o2.clone()].concat(),
                                residual_id: id,
                                residual: lo.residual,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn residual_dim(protocol: Protocol) -> usize {
    match protocol {
        Protocol::Qutrit => 9,
        Protocol::Qubit => 64,
    }
}

/// Residual after Eve attacks both legs of every round, averaged over her
/// outcomes and over all rounds whose honest residual is φ_j.
pub fn double_ir_residual(id: ResidualId, protocol: Protocol) -> Result<MixedState> {
    let channel = channel_registers(protocol);
    let honest: Vec<RoundChoice> = RoundChoice::all(protocol)
        .into_iter()
        .filter(|&c| {
            round_branches(protocol, c, &[], &[])
                .map(|b| b.iter().all(|e| e.residual_id == id))
                .unwrap_or(false)
        })
        .collect();
    if honest.is_empty() {
        return Err(Error::ProtocolViolation(format!("no round leaves {id}")));
    }
    let d = residual_dim(protocol);
    let mut rho = CMatrix::zeros(d, d);
    let mut layout = None;
    let weight = 1.0 / honest.len() as f64;
    for choice in honest {
        for b in round_branches(protocol, choice, &channel, &channel)? {
            if b.residual_id != id {
                return Err(Error::ProtocolViolation(
                    "attack changed the public outcome".into(),
                ));
            }
            let dm = b.residual.density();
            rho += dm.matrix() * crate::qcore::c(weight * b.probability, 0.0);
            layout.get_or_insert_with(|| b.residual.layout().clone());
        }
    }
    MixedState::new(layout.expect("at least one branch"), rho)
}

fn cached_double_ir(id: ResidualId, protocol: Protocol) -> &'static MixedState {
    static QUTRIT: OnceLock<Vec<MixedState>> = OnceLock::new();
    static QUBIT: OnceLock<Vec<MixedState>> = OnceLock::new();
    let cell = match protocol {
        Protocol::Qutrit => &QUTRIT,
        Protocol::Qubit => &QUBIT,
    };
    &cell.get_or_init(|| {
        ResidualId::ALL
            .iter()
            .map(|&j| double_ir_residual(j, protocol).expect("enumeration succeeds"))
            .collect()
    })[id.index()]
}

/// `(1 - p)|φ_j⟩⟨φ_j| + p ϱ_j`.
pub fn attacked_residual(id: ResidualId, p: f64, protocol: Protocol) -> Result<MixedState> {
    check_probability("p", p)?;
    let phi = residual_state(protocol, id);
    let varrho = cached_double_ir(id, protocol);
    mix(&[(1.0 - p, &phi as &dyn QuantumState), (p, varrho)])
}

/// `|Bell value|` of the attacked residual at attack probability `p`.
pub fn bell_curve(protocol: Protocol, id: ResidualId, p: f64) -> Result<f64> {
    let rho = attacked_residual(id, p, protocol)?;
    Ok(bell_value(protocol, &rho, id)?.abs_value)
}

/// Tolerance on `p` for the threshold bisection.
pub const THRESHOLD_TOL: f64 = 1e-10;

/// Attack probability at which the Bell value falls to the LHV bound,
/// by bisection on the simulated curve.
pub fn threshold_p(protocol: Protocol) -> Result<f64> {
    let id = ResidualId::Phi0;
    let f = |p: f64| bell_curve(protocol, id, p).map(|v| v - LHV_BOUND);
    let (mut lo, mut hi) = (0.0, 1.0);
    if f(lo)? <= 0.0 || f(hi)? >= 0.0 {
        return Err(Error::ProtocolViolation(
            "Bell curve does not cross 2".into(),
        ));
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `11/2 - 3√3` for qutrits, `5/8` for qubits.
pub fn closed_form_threshold(protocol: Protocol) -> f64 {
    match protocol {
        Protocol::Qutrit => 5.5 - 3.0 * 3f64.sqrt(),
        Protocol::Qubit => 0.625,
    }
}

/// `(1 - w) ρ + w · dephase(ρ)` in the computational basis.
pub fn noise_channel(state: &dyn QuantumState, w: f64) -> Result<MixedState> {
    check_probability("noise", w)?;
    let rho = state.to_density();
    let deph = rho.dephased();
    mix(&[(1.0 - w, &rho as &dyn QuantumState), (w, &deph)])
}

/// Eve reads one qubit of pair `A` on each leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingleQubitCase {
    pub k_a: Strategy,
    pub k_b: Strategy,
    pub first: PairQubit,
    pub second: PairQubit,
}

impl SingleQubitCase {
    /// The measurement order that leaves a superposition for these strategies:
    /// `A0` then `A1` when Alice plays G0, `A1` then `A0` when she plays G1.
    pub fn entangled(k_a: Strategy, k_b: Strategy) -> Self {
        let (first, second) = match k_a {
            Strategy::G0 => (PairQubit::A0, PairQubit::A1),
            Strategy::G1 => (PairQubit::A1, PairQubit::A0),
        };
        Self {
            k_a,
            k_b,
            first,
            second,
        }
    }

    fn choice(&self) -> RoundChoice {
        RoundChoice {
            k_a: self.k_a,
            k_b: self.k_b,
            k_s: Switch::Stay,
        }
    }
}

/// All outcome branches of a single-qubit attack.
pub fn single_qubit_branches(case: SingleQubitCase) -> Result<Vec<EndBranch>> {
    round_branches(
        Protocol::Qubit,
        case.choice(),
        &[case.first.register()],
        &[case.second.register()],
    )
}

#[derive(Clone, Debug)]
pub struct SingleQubitOutcome {
    pub outcomes: [u8; 2],
    pub residual_id: ResidualId,
    /// Six-qubit state after Bob's O measurement.
    pub residual: PureState,
}

/// Run one qubit round under a single-qubit attack with sampled outcomes.
pub fn single_qubit_attack<R: Rng + ?Sized>(
    case: SingleQubitCase,
    rng: &mut R,
) -> Result<SingleQubitOutcome> {
    let s = qubit::bob_strategy(&qubit::init_state(), case.k_b)?;
    let first = intercept_resend(&s, &[case.first.register()], rng)?;
    let s = qubit::alice_strategy(&first.post_state, case.k_a)?;
    let second = intercept_resend(&s, &[case.second.register()], rng)?;
    let m = qubit::measure_o(&qubit::bob_finish(&second.post_state)?, rng)?;
    Ok(SingleQubitOutcome {
        outcomes: [
            first.eve_observations[0] as u8,
            second.eve_observations[0] as u8,
        ],
        residual_id: m.residual_id,
        residual: m.residual,
    })
}

/// The non-classical residuals left when both of Eve's readings are 0 in the
/// matching order, over `B_ns B_s A`.
pub fn lambda_state(k_a: Strategy, k_b: Strategy) -> PureState {
    let strings: [&str; 2] = match (k_b, k_a) {
        (Strategy::G0, Strategy::G0) => ["001000", "010001"],
        (Strategy::G0, Strategy::G1) => ["011010", "100000"],
        (Strategy::G1, Strategy::G0) => ["010000", "100101"],
        (Strategy::G1, Strategy::G1) => ["001000", "100110"],
    };
    qubit::bit_state(qubit::residual_layout(), &strings).expect("valid bitstrings")
}
