//! The qutrit protocol: the quantum Monty Hall game on three qutrits
//! `|o b a⟩` (opened door, Bob's door, Alice's prize door).
//!
//! Ket strings are written `o b a` left to right with `o` the most
//! significant digit, so `|o b a⟩` has basis index `9o + 3b + a`. The
//! victory measurement acts on `o`.

use std::sync::OnceLock;

use rand::Rng;

use crate::error::Result;
use crate::qcore::{Layout, Operator, PureState};
use crate::types::{ResidualId, Strategy, Switch};

pub const OPENED: &str = "o";
pub const BOB: &str = "b";
pub const ALICE: &str = "a";

pub fn game_layout() -> Layout {
    Layout::new(&[(OPENED, 3), (BOB, 3), (ALICE, 3)]).expect("static layout")
}

/// Two-qutrit layout `[b, a]` left after the victory register is measured.
pub fn residual_layout() -> Layout {
    Layout::new(&[(BOB, 3), (ALICE, 3)]).expect("static layout")
}

fn qutrit_layout() -> Layout {
    Layout::single("q", 3).expect("static layout")
}

/// Door left over when two distinct doors are taken.
fn third_door(x: usize, y: usize) -> usize {
    debug_assert_ne!(x, y);
    3 - x - y
}

/// Strategy operator on a single qutrit: G0 adds 1 mod 3, G1 subtracts 1.
pub fn strategy_op(bit: Strategy) -> Operator {
    let rows = match bit {
        Strategy::G0 => vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ],
        Strategy::G1 => vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ],
    };
    Operator::from_real_rows(qutrit_layout(), &rows).expect("3x3")
}

/// Empty-door-opening operator. For `b != a` the opened door is shifted by the
/// door neither party holds; for `b == a` it is shifted by `b + 1`.
pub fn open_op() -> &'static Operator {
    static OP: OnceLock<Operator> = OnceLock::new();
    OP.get_or_init(|| {
        Operator::basis_map(game_layout(), |d| {
            let (l, j, k) = (d[0], d[1], d[2]);
            let o = if j != k {
                (third_door(j, k) + l) % 3
            } else {
                (j + l + 1) % 3
            };
            vec![o, j, k]
        })
        .expect("permutation")
    })
}

/// Door-switching operator: Bob's door moves to the one that is neither his
/// nor the opened door; identity when the two coincide.
pub fn switch_op() -> &'static Operator {
    static OP: OnceLock<Operator> = OnceLock::new();
    OP.get_or_init(|| {
        Operator::basis_map(game_layout(), |d| {
            let (i, j, k) = (d[0], d[1], d[2]);
            let b = if i != j { third_door(i, j) } else { j };
            vec![i, b, k]
        })
        .expect("permutation")
    })
}

/// Victory-encoding operator `|i j k⟩ → |(i+j+k) mod 3, j, k⟩`.
pub fn victory_op() -> &'static Operator {
    static OP: OnceLock<Operator> = OnceLock::new();
    OP.get_or_init(|| {
        Operator::basis_map(game_layout(), |d| {
            vec![(d[0] + d[1] + d[2]) % 3, d[1], d[2]]
        })
        .expect("permutation")
    })
}

/// `cos γ Ŝ + sin γ I`. Only γ ∈ {0, π/2} is unitary and used by the protocol.
pub fn switch_superposition(gamma: f64) -> Operator {
    switch_op()
        .scale(gamma.cos())
        .add(&Operator::identity(game_layout()).scale(gamma.sin()))
        .expect("same layout")
}

fn switch_choice(k_s: Switch) -> Operator {
    match k_s {
        Switch::Switch => switch_op().clone(),
        Switch::Stay => Operator::identity(game_layout()),
    }
}

/// `(|00⟩ + |11⟩ + |22⟩)/√3` over the given two qutrit registers.
pub fn ghz(first: &str, second: &str) -> PureState {
    let l = Layout::new(&[(first, 3), (second, 3)]).expect("distinct names");
    PureState::uniform(l, &[&[0, 0], &[1, 1], &[2, 2]]).expect("nonzero")
}

/// `|0⟩_o ⊗ (|00⟩ + |11⟩ + |22⟩)/√3`.
pub fn initial_state() -> PureState {
    PureState::basis(Layout::single(OPENED, 3).expect("static"), &[0])
        .and_then(|o| o.tensor(&ghz(BOB, ALICE)))
        .expect("disjoint registers")
}

pub fn apply_on(state: &PureState, op: &Operator, register: &str) -> Result<PureState> {
    state.apply(&op.embed(state.layout(), &[register])?)
}

/// Step 2: Alice hides the prize with her strategy on register `a`.
pub fn alice_hides(state: &PureState, k_a: Strategy) -> Result<PureState> {
    apply_on(state, &strategy_op(k_a), ALICE)
}

/// Step 4: Bob picks a door with his strategy on register `b`.
pub fn bob_chooses(state: &PureState, k_b: Strategy) -> Result<PureState> {
    apply_on(state, &strategy_op(k_b), BOB)
}

/// Steps 6 to 9: open an empty door, switch or stay, encode the victory.
pub fn open_switch_encode(state: &PureState, k_s: Switch) -> Result<PureState> {
    state
        .apply(open_op())?
        .apply(&switch_choice(k_s))?
        .apply(victory_op())
}

/// Full round evolution `V (S or I) O (I ⊗ G_kb ⊗ G_ka) ψ_i`.
pub fn evolve_round(k_a: Strategy, k_b: Strategy, k_s: Switch) -> PureState {
    let state = initial_state();
    alice_hides(&state, k_a)
        .and_then(|s| bob_chooses(&s, k_b))
        .and_then(|s| open_switch_encode(&s, k_s))
        .expect("protocol layouts are fixed")
}

#[derive(Clone, Debug)]
pub struct VictoryOutcome {
    /// 0 when Bob lost (o = 0), 1 when he won.
    pub k_r: u8,
    pub opened: usize,
    /// Remaining two-qutrit state over `[b, a]`.
    pub residual: PureState,
}

/// Step 10: Alice measures the victory register.
pub fn measure_victory<R: Rng + ?Sized>(state: &PureState, rng: &mut R) -> Result<VictoryOutcome> {
    let (opened, residual) = state.measure(OPENED, rng)?;
    Ok(VictoryOutcome {
        k_r: u8::from(opened != 0),
        opened,
        residual,
    })
}

/// Which φ remains, from public `k_s`, `k_r` and Alice's private `k_a`.
pub fn residual_id(k_a: Strategy, k_s: Switch, k_r: u8) -> ResidualId {
    match (k_a, k_s, k_r) {
        (_, _, 1) => ResidualId::Phi0,
        (Strategy::G0, Switch::Stay, _) => ResidualId::Phi2,
        _ => ResidualId::Phi1,
    }
}

/// The three entangled residuals over `[b, a]`:
/// φ0 = (|00⟩+|11⟩+|22⟩)/√3, φ1 = (|01⟩+|12⟩+|20⟩)/√3, φ2 = (|02⟩+|10⟩+|21⟩)/√3.
pub fn phi(id: ResidualId) -> PureState {
    let j = id.index();
    let terms: Vec<[usize; 2]> = (0..3).map(|b| [b, (b + j) % 3]).collect();
    let refs: Vec<&[usize]> = terms.iter().map(|t| t.as_slice()).collect();
    PureState::uniform(residual_layout(), &refs).expect("nonzero")
}

/// Probability that Bob's door equals the prize door.
pub fn win_probability(state: &PureState) -> f64 {
    let l = state.layout();
    let (b, a) = match (l.position(BOB), l.position(ALICE)) {
        (Ok(b), Ok(a)) => (b, a),
        _ => return 0.0,
    };
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| l.digit(*i, b) == l.digit(*i, a))
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Single-qutrit strategy that reproduces the classical game from `|000⟩`.
pub fn classical_strategy() -> Operator {
    let s3 = 1.0 / 3f64.sqrt();
    let s2 = 1.0 / 2f64.sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let rows = vec![
        vec![s3, 0.0, (2.0f64 / 3.0).sqrt()],
        vec![s3, -s2, -s6],
        vec![s3, s2, -s6],
    ];
    Operator::from_real_rows(qutrit_layout(), &rows).expect("3x3")
}

/// Final game state `(S or I) O (I ⊗ B ⊗ A) ψ_i` for arbitrary single-qutrit
/// strategies, without victory encoding.
pub fn play(
    initial: &PureState,
    alice: &Operator,
    bob: &Operator,
    k_s: Switch,
) -> Result<PureState> {
    let s = apply_on(initial, alice, ALICE)?;
    let s = apply_on(&s, bob, BOB)?;
    s.apply(open_op())?.apply(&switch_choice(k_s))
}

/// Bob's win probability in the classical-recovery setting.
pub fn classical_win_probability(k_s: Switch) -> f64 {
    let start = PureState::basis(game_layout(), &[0, 0, 0]).expect("basis");
    let m = classical_strategy();
    let fin = play(&start, &m, &m, k_s).expect("fixed layouts");
    win_probability(&fin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{seeded_rng, EPS};

    fn ket(o: usize, b: usize, a: usize) -> usize {
        9 * o + 3 * b + a
    }

    #[test]
    fn strategy_ops_match_printed_matrices() {
        let g0 = strategy_op(Strategy::G0);
        let g1 = strategy_op(Strategy::G1);
        assert_eq!(g0.permuted_index(2), Some(0));
        assert_eq!(g0.permuted_index(0), Some(1));
        assert_eq!(g1.permuted_index(0), Some(2));
        assert!(g1.approx_eq(&g0.transpose(), 1e-15));
        let prod = g0.compose(&g1).unwrap();
        assert!(prod.approx_eq(&Operator::identity(g0.layout().clone()), 1e-15));
    }

    #[test]
    fn open_op_examples() {
        let o = open_op();
        assert!(o.is_permutation());
        assert_eq!(o.permuted_index(ket(0, 0, 1)), Some(ket(2, 0, 1)));
        assert_eq!(o.permuted_index(ket(0, 0, 0)), Some(ket(1, 0, 0)));
    }

    #[test]
    fn switch_op_examples() {
        let s = switch_op();
        assert!(s.is_permutation());
        assert_eq!(s.permuted_index(ket(2, 0, 1)), Some(ket(2, 1, 1)));
        assert_eq!(s.permuted_index(ket(0, 0, 1)), Some(ket(0, 0, 1)));
        // involution on the o != b subspace
        for o in 0..3 {
            for b in (0..3).filter(|&b| b != o) {
                for a in 0..3 {
                    let once = s.permuted_index(ket(o, b, a)).unwrap();
                    assert_eq!(s.permuted_index(once), Some(ket(o, b, a)));
                }
            }
        }
    }

    #[test]
    fn victory_op_examples() {
        let v = victory_op();
        assert!(v.is_permutation());
        assert_eq!(v.permuted_index(ket(2, 1, 1)), Some(ket(1, 1, 1)));
        assert_eq!(v.permuted_index(ket(0, 0, 0)), Some(ket(0, 0, 0)));
        let l = game_layout();
        for i in 0..27 {
            let j = v.permuted_index(i).unwrap();
            assert_eq!(l.digit(i, 1), l.digit(j, 1));
            assert_eq!(l.digit(i, 2), l.digit(j, 2));
        }
    }

    #[test]
    fn all_game_operators_unitary() {
        for op in [open_op(), switch_op(), victory_op()] {
            assert!(op.is_unitary());
        }
    }

    #[test]
    fn initial_state_amplitudes() {
        let s = initial_state();
        let r = 1.0 / 3f64.sqrt();
        assert!((s.amplitude(&[0, 0, 0]).unwrap().re - r).abs() < EPS);
        assert!((s.amplitude(&[0, 1, 1]).unwrap().re - r).abs() < EPS);
        assert_eq!(s.amplitude(&[0, 1, 2]).unwrap().norm(), 0.0);
        assert!((s.norm_sqr() - 1.0).abs() < EPS);
    }

    #[test]
    fn switch_superposition_endpoints() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!(switch_superposition(0.0).approx_eq(switch_op(), 1e-15));
        assert!(switch_superposition(half_pi).approx_eq(&Operator::identity(game_layout()), 1e-15));
    }

    #[test]
    fn measure_victory_examples() {
        let mut rng = seeded_rng(1);
        let out = measure_victory(
            &evolve_round(Strategy::G0, Strategy::G0, Switch::Stay),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.k_r, 1);
        assert!(out.residual.approx_eq(&phi(ResidualId::Phi0), EPS));

        let out = measure_victory(
            &evolve_round(Strategy::G0, Strategy::G0, Switch::Switch),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.k_r, 0);
        assert!(out.residual.approx_eq(&phi(ResidualId::Phi1), EPS));

        let out = measure_victory(
            &evolve_round(Strategy::G0, Strategy::G1, Switch::Stay),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.k_r, 0);
        assert!(out.residual.approx_eq(&phi(ResidualId::Phi2), EPS));
    }

    #[test]
    fn residual_id_bullets() {
        assert_eq!(residual_id(Strategy::G1, Switch::Stay, 1), ResidualId::Phi0);
        assert_eq!(
            residual_id(Strategy::G1, Switch::Switch, 0),
            ResidualId::Phi1
        );
        assert_eq!(residual_id(Strategy::G0, Switch::Stay, 0), ResidualId::Phi2);
    }

    #[test]
    fn win_probability_examples() {
        let won = evolve_round(Strategy::G0, Strategy::G0, Switch::Stay);
        let lost = evolve_round(Strategy::G0, Strategy::G0, Switch::Switch);
        assert!((win_probability(&won) - 1.0).abs() < EPS);
        assert!(win_probability(&lost).abs() < EPS);
        let single = PureState::basis(game_layout(), &[0, 1, 1]).unwrap();
        assert!((win_probability(&single) - 1.0).abs() < EPS);
    }

    #[test]
    fn classical_strategy_recovers_classical_odds() {
        let m = classical_strategy();
        assert!(m.is_unitary());
        assert!((m.entry(0, 0).re - 1.0 / 3f64.sqrt()).abs() < EPS);
        assert!((classical_win_probability(Switch::Switch) - 2.0 / 3.0).abs() < EPS);
        assert!((classical_win_probability(Switch::Stay) - 1.0 / 3.0).abs() < EPS);
    }
}
