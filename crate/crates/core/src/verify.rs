//! Reproduces every published constant and protocol table, reporting expected
//! against computed.

use std::fmt;

use crate::adversary::{
    closed_form_threshold, double_ir_residual, lambda_state, single_qubit_branches,
    SingleQubitCase, THRESHOLD_TOL,
};
use crate::bell::{bell_operator, qubit_max, qutrit_max, residual_state, LHV_BOUND};
use crate::error::Result;
use crate::figures::sweep;
use crate::qcore::{
    c, random_special_unitary, seeded_rng, CMatrix, Layout, Operator, PureState, QuantumState,
};
use crate::qubit::{self, PairValue};
use crate::qutrit;
use crate::session::{reconcile, run_session, SessionConfig};
use crate::types::{Protocol, ResidualId, Strategy, Switch};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, expected: f64, computed: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            computed,
            tolerance,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, 1.0, if ok { 1.0 } else { 0.0 }, 0.0)
    }

    pub fn passed(&self) -> bool {
        self.computed.is_finite() && (self.computed - self.expected).abs() <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}  {:<48} expected {:>18.12}  computed {:>18.12}  tol {:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.computed,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// The Bell operators under test, so that a corrupted table can be fed in.
#[derive(Clone, Debug)]
pub struct BellOperators {
    pub qutrit: [Operator; 3],
    pub qubit: [Operator; 3],
}

impl BellOperators {
    pub fn standard() -> Self {
        let get =
            |p| ResidualId::ALL.map(|id| bell_operator(p, id).operator().clone().into_inner());
        Self {
            qutrit: get(Protocol::Qutrit),
            qubit: get(Protocol::Qubit),
        }
    }

    fn get(&self, protocol: Protocol, id: ResidualId) -> &Operator {
        match protocol {
            Protocol::Qutrit => &self.qutrit[id.index()],
            Protocol::Qubit => &self.qubit[id.index()],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Rounds in the statistical session check.
    pub session_rounds: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            session_rounds: 100_000,
            seed: 2024,
        }
    }
}

// `t` = 2/√3, `2` = 2, `.` = 0.
const QUTRIT_TABLE: [[&str; 9]; 3] = [
    [
        ". . . . t . . . 2",
        ". . . . . t . . .",
        ". . . . . . . . .",
        ". . . . . . . t .",
        "t . . . . . . . t",
        ". t . . . . . . .",
        ". . . . . . . . .",
        ". . . t . . . . .",
        "2 . . . t . . . .",
    ],
    [
        ". . . . . . . . .",
        ". . . . . t 2 . .",
        ". . . t . . . . .",
        ". . t . . . . . .",
        ". . . . . . . . t",
        ". t . . . . t . .",
        ". 2 . . . t . . .",
        ". . . . . . . . .",
        ". . . . t . . . .",
    ],
    [
        ". . . . t . . . .",
        ". . . . . . . . .",
        ". . . t . . . 2 .",
        ". . t . . . . t .",
        "t . . . . . . . .",
        ". . . . . . t . .",
        ". . . . . t . . .",
        ". . 2 t . . . . .",
        ". . . . . . . . .",
    ],
];

// (row, column, value) of the upper triangle, indices as 6-bit integers.
const QUBIT_TABLE: [[(usize, usize, f64); 2]; 3] = [
    [(46, 25, 8.0), (38, 17, -8.0)],
    [(26, 5, 8.0), (58, 37, -8.0)],
    [(53, 26, 8.0), (37, 10, -8.0)],
];

fn qutrit_reference(id: ResidualId) -> CMatrix {
    let t = 2.0 / 3f64.sqrt();
    let mut m = CMatrix::zeros(9, 9);
    for (r, row) in QUTRIT_TABLE[id.index()].iter().enumerate() {
        for (col, sym) in row.split_whitespace().enumerate() {
            m[(r, col)] = c(
                match sym {
                    "t" => t,
                    "2" => 2.0,
                    _ => 0.0,
                },
                0.0,
            );
        }
    }
    m
}

fn qubit_reference(id: ResidualId) -> CMatrix {
    let mut m = CMatrix::zeros(64, 64);
    for &(r, col, v) in &QUBIT_TABLE[id.index()] {
        m[(r, col)] = c(v, 0.0);
        m[(col, r)] = c(v, 0.0);
    }
    m
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn expect(op: &Operator, state: &dyn QuantumState) -> f64 {
    state.raw_expectation(op).map(|z| z.re).unwrap_or(f64::NAN)
}

fn basis_terms(layout: &Layout, terms: &[&[usize]]) -> PureState {
    PureState::uniform(layout.clone(), terms).expect("printed terms")
}

/// Printed final state of a qutrit round.
fn printed_psi(k_a: Strategy, k_b: Strategy, k_s: Switch) -> PureState {
    let lose: [&[usize]; 3] = [&[0, 0, 1], &[0, 1, 2], &[0, 2, 0]];
    let win: [&[usize]; 3] = [&[1, 0, 0], &[1, 1, 1], &[1, 2, 2]];
    let win2: [&[usize]; 3] = [&[2, 0, 0], &[2, 1, 1], &[2, 2, 2]];
    let lose2: [&[usize]; 3] = [&[0, 0, 2], &[0, 1, 0], &[0, 2, 1]];
    let terms = match ((k_b.bit(), k_a.bit()), k_s) {
        ((0, 0) | (1, 1), Switch::Switch) => lose,
        ((0, 0) | (1, 1), Switch::Stay) => win,
        ((0, 1), Switch::Switch) => win,
        ((0, 1), Switch::Stay) => lose,
        ((1, 0), Switch::Switch) => win2,
        (_, _) => lose2,
    };
    basis_terms(&qutrit::game_layout(), &terms)
}

/// Printed final state of a qubit round, `O` pair then the residual bits.
fn printed_psi_b(k_a: Strategy, k_b: Strategy) -> PureState {
    let (o, terms): (&str, [&str; 3]) = match (k_b.bit(), k_a.bit()) {
        (0, 0) | (1, 1) => ("00", ["001000", "010001", "100110"]),
        (0, 1) => ("01", ["000101", "011010", "100000"]),
        _ => ("10", ["001010", "010000", "100101"]),
    };
    let full: Vec<String> = terms
        .iter()
        .map(|t| format!("{}{}{}", &t[..2], o, &t[2..]))
        .collect();
    let refs: Vec<&str> = full.iter().map(String::as_str).collect();
    qubit::bit_state(qubit::full_layout(), &refs).expect("printed bits")
}

fn qutrit_tuples() -> Vec<(Strategy, Strategy, Switch)> {
    let mut v = Vec::new();
    for a in Strategy::ALL {
        for b in Strategy::ALL {
            for s in Switch::ALL {
                v.push((a, b, s));
            }
        }
    }
    v
}

fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return f64::NAN;
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bell_checks(ops: &BellOperators, out: &mut Vec<Check>) -> Result<()> {
    for (protocol, label, max, ratio) in [
        (Protocol::Qutrit, "I3", qutrit_max(), None),
        (Protocol::Qubit, "|F6|", 16.0 / 3.0, Some(8.0 / 3.0)),
    ] {
        for id in ResidualId::ALL {
            let reference = match protocol {
                Protocol::Qutrit => qutrit_reference(id),
                Protocol::Qubit => qubit_reference(id),
            };
            out.push(Check::new(
                format!("{label} operator {} matches reference table", id.index()),
                0.0,
                max_diff(ops.get(protocol, id).matrix(), &reference),
                1e-12,
            ));
        }
        let mut values = Vec::new();
        for id in ResidualId::ALL {
            let v = expect(ops.get(protocol, id), &residual_state(protocol, id)).abs();
            values.push(v);
            out.push(Check::new(format!("{label} on {id}"), max, v, TOL));
        }
        let r = values[0] / LHV_BOUND;
        match ratio {
            None => {
                out.push(Check::new("I3 violation ratio", 1.4365, r, 0.0005));
                out.push(Check::flag("I3 ratio exceeds sqrt(2)", r > 2f64.sqrt()));
            }
            Some(expected) => out.push(Check::new("F6 violation ratio", expected, r, TOL)),
        }
        for id in ResidualId::ALL {
            let rho = double_ir_residual(id, protocol)?;
            let null = expect(ops.get(protocol, id), &rho);
            out.push(Check::new(
                format!("{label} on double-IR residual {id}"),
                0.0,
                null,
                TOL,
            ));
        }
        let id = ResidualId::Phi0;
        let op = ops.get(protocol, id);
        let e_phi = expect(op, &residual_state(protocol, id));
        let e_rho = expect(op, &double_ir_residual(id, protocol)?);
        let pc = bisect(|p| ((1.0 - p) * e_phi + p * e_rho).abs() - LHV_BOUND);
        out.push(Check::new(
            format!("{label} threshold p"),
            closed_form_threshold(protocol),
            pc,
            1e-8,
        ));
    }
    Ok(())
}

fn protocol_checks(out: &mut Vec<Check>) -> Result<()> {
    out.push(Check::new(
        "classical win probability, switch",
        2.0 / 3.0,
        qutrit::classical_win_probability(Switch::Switch),
        TOL,
    ));
    out.push(Check::new(
        "classical win probability, stay",
        1.0 / 3.0,
        qutrit::classical_win_probability(Switch::Stay),
        TOL,
    ));

    let mut rng = seeded_rng(0);
    let (mut states, mut agree, mut residuals) = (0, 0, 0);
    for (a, b, s) in qutrit_tuples() {
        let psi = qutrit::evolve_round(a, b, s);
        if psi.approx_eq(&printed_psi(a, b, s), TOL) {
            states += 1;
        }
        let v = qutrit::measure_victory(&psi, &mut rng)?;
        if reconcile(s.bit(), v.k_r, b.bit()) == a.bit() {
            agree += 1;
        }
        let id = qutrit::residual_id(a, s, v.k_r);
        if v.residual.approx_eq(&qutrit::phi(id), TOL) {
            residuals += 1;
        }
    }
    out.push(Check::new(
        "qutrit rounds matching printed states",
        8.0,
        states as f64,
        0.0,
    ));
    out.push(Check::new(
        "qutrit rounds with reconciled keys",
        8.0,
        agree as f64,
        0.0,
    ));
    out.push(Check::new(
        "qutrit residuals matching the φ table",
        8.0,
        residuals as f64,
        0.0,
    ));

    let (mut states, mut agree, mut residuals) = (0, 0, 0);
    for a in Strategy::ALL {
        for b in Strategy::ALL {
            let psi = qubit::evolve_round_b(a, b);
            if psi.approx_eq(&printed_psi_b(a, b), TOL) {
                states += 1;
            }
            let m = qubit::measure_o(&psi, &mut rng)?;
            if b.bit() ^ m.flip == a.bit() {
                agree += 1;
            }
            let expected_o = PairValue::encode(m.residual_id.index())?;
            if m.o_pair == expected_o && m.residual.approx_eq(&qubit::phi_b(m.residual_id), TOL) {
                residuals += 1;
            }
        }
    }
    out.push(Check::new(
        "qubit rounds matching printed states",
        4.0,
        states as f64,
        0.0,
    ));
    out.push(Check::new(
        "qubit rounds with flipped keys agreeing",
        4.0,
        agree as f64,
        0.0,
    ));
    out.push(Check::new(
        "qubit residuals matching the φ_b table",
        4.0,
        residuals as f64,
        0.0,
    ));

    let (mut found, mut worst) = (0, 0.0f64);
    for a in Strategy::ALL {
        for b in Strategy::ALL {
            let lambda = lambda_state(a, b);
            for br in single_qubit_branches(SingleQubitCase::entangled(a, b))? {
                if br.eve == [0, 0] && br.residual.approx_eq(&lambda, TOL) {
                    found += 1;
                    let f = expect(
                        bell_operator(Protocol::Qubit, br.residual_id).operator(),
                        &lambda,
                    );
                    worst = worst.max(f.abs());
                }
            }
        }
    }
    out.push(Check::new("λ states reproduced", 4.0, found as f64, 0.0));
    out.push(Check::new("max |F6| on λ states", 0.0, worst, TOL));
    Ok(())
}

fn ghz_check(seed: u64) -> Result<Check> {
    let mut rng = seeded_rng(seed);
    let ghz = qutrit::ghz("x", "y");
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let u = random_special_unitary(3, &mut rng);
        let ux = Operator::unitary(Layout::single("x", 3)?, u.conjugate())?;
        let uy = Operator::unitary(Layout::single("y", 3)?, u)?;
        let pair = ux.tensor(&uy)?;
        worst = worst.max(ghz.apply(&pair)?.max_abs_diff(&ghz));
    }
    Ok(Check::new(
        "GHZ invariance under U*⊗U, 50 SU(3) draws",
        0.0,
        worst,
        TOL,
    ))
}

/// Unattacked qutrit session: key agreement and the spread of a hypothetical
/// single-leg reading of Bob's qutrit.
fn session_checks(opts: &VerifyOptions, out: &mut Vec<Check>) -> Result<()> {
    let cfg =
        SessionConfig::new(Protocol::Qutrit, opts.session_rounds, 2.5, opts.seed)?.with_probe(true);
    let run = run_session(&cfg)?;
    out.push(Check::flag(
        format!("{}-round session keys agree", opts.session_rounds),
        run.result.keys_agree(),
    ));
    let h = run.result.leg_histograms.expect("probe enabled");
    let n = opts.session_rounds as f64;
    let sigma = (n * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    let z = h
        .first
        .iter()
        .chain(&h.second)
        .map(|&k| ((k as f64 - n / 3.0) / sigma).abs())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "max |z| of channel readings vs 1/3",
        0.0,
        z,
        4.0,
    ));
    Ok(())
}

fn figure_checks(out: &mut Vec<Check>) -> Result<()> {
    for (protocol, label, max) in [
        (Protocol::Qutrit, "I3", qutrit_max()),
        (Protocol::Qubit, "|F6|", qubit_max()),
    ] {
        let rows = sweep(protocol, 0.0, 1.0, 101)?;
        let dev = rows
            .iter()
            .map(|r| (r.bell - (1.0 - r.p) * max).abs())
            .fold(0.0, f64::max);
        out.push(Check::new(
            format!("{label} sweep deviation from affine"),
            0.0,
            dev,
            TOL,
        ));
        out.push(Check::new(
            format!("{label} sweep at p = 0"),
            max,
            rows[0].bell,
            TOL,
        ));
        let last = rows.last().expect("rows");
        out.push(Check::new(
            format!("{label} sweep at p = 1"),
            0.0,
            last.bell,
            TOL,
        ));
    }
    Ok(())
}

pub fn run_checks() -> Result<Report> {
    run_checks_with(&BellOperators::standard(), &VerifyOptions::default())
}

pub fn run_checks_with(ops: &BellOperators, opts: &VerifyOptions) -> Result<Report> {
    let mut checks = Vec::new();
    bell_checks(ops, &mut checks)?;
    protocol_checks(&mut checks)?;
    checks.push(ghz_check(opts.seed)?);
    session_checks(opts, &mut checks)?;
    figure_checks(&mut checks)?;
    Ok(Report { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            session_rounds: 3000,
            seed: 5,
        }
    }

    #[test]
    fn standard_operators_pass() {
        let report = run_checks_with(&BellOperators::standard(), &quick()).unwrap();
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn references_match_library_operators() {
        for id in ResidualId::ALL {
            let q = bell_operator(Protocol::Qutrit, id)
                .operator()
                .matrix()
                .clone();
            assert!(max_diff(&q, &qutrit_reference(id)) < 1e-12);
            let b = bell_operator(Protocol::Qubit, id)
                .operator()
                .matrix()
                .clone();
            assert!(max_diff(&b, &qubit_reference(id)) < 1e-12);
        }
    }

    #[test]
    fn perturbed_entries_fail() {
        let base = BellOperators::standard();
        for (protocol, r, col) in [
            (Protocol::Qutrit, 0, 0),
            (Protocol::Qutrit, 4, 8),
            (Protocol::Qubit, 63, 1),
            (Protocol::Qubit, 46, 25),
        ] {
            let mut ops = base.clone();
            let op = match protocol {
                Protocol::Qutrit => &mut ops.qutrit[1],
                Protocol::Qubit => &mut ops.qubit[2],
            };
            let mut m = op.matrix().clone();
            m[(r, col)] += c(1e-3, 0.0);
            *op = Operator::new(op.layout().clone(), m).unwrap();
            let report = run_checks_with(&ops, &quick()).unwrap();
            assert!(
                !report.all_passed(),
                "perturbation at ({r},{col}) went unnoticed"
            );
        }
    }
}
