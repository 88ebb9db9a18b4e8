use proptest::prelude::*;
use quanty_hall::bell::{bell_operator, i3};
use quanty_hall::qcore::{
    expectation, mix, random_special_unitary, random_unitary, seeded_rng, Layout, Operator,
    PureState, QuantumState, C64,
};
use quanty_hall::qutrit;
use quanty_hall::{Protocol, ResidualId};

fn two_qutrits() -> Layout {
    Layout::new(&[("x", 3), ("y", 3)]).unwrap()
}

prop_compose! {
    fn pure_state()(parts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9)) -> PureState {
        let terms: Vec<(C64, Vec<usize>)> = parts
            .iter()
            .enumerate()
            .map(|(i, &(re, im))| (C64::new(re + 1e-3, im), vec![i / 3, i % 3]))
            .collect();
        let refs: Vec<(C64, &[usize])> = terms.iter().map(|(z, d)| (*z, d.as_slice())).collect();
        PureState::from_terms(two_qutrits(), &refs).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(state in pure_state(), seed in any::<u64>()) {
        let u = Operator::unitary(two_qutrits(), random_unitary(9, &mut seeded_rng(seed))).unwrap();
        let out = state.apply(&u).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expectation_is_linear_in_mixtures(a in pure_state(), b in pure_state(), w in 0.0f64..=1.0) {
        let rho = mix(&[(w, &a as &dyn QuantumState), (1.0 - w, &b)]).unwrap();
        for id in ResidualId::ALL {
            let lhs = i3(&rho, id).unwrap().value;
            let rhs = w * i3(&a, id).unwrap().value + (1.0 - w) * i3(&b, id).unwrap().value;
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn density_and_vector_expectations_agree(state in pure_state()) {
        for id in ResidualId::ALL {
            let op = bell_operator(Protocol::Qutrit, id).operator();
            let pure = expectation(op, &state).unwrap();
            let mixed = expectation(op, &state.density()).unwrap();
            prop_assert!((pure - mixed).abs() < 1e-9);
            prop_assert!(pure.abs() <= quanty_hall::bell::qutrit_max() + 1e-9);
        }
    }

    #[test]
    fn ghz_is_invariant_under_conjugate_pairs(seed in any::<u64>()) {
        let u = random_special_unitary(3, &mut seeded_rng(seed));
        let ux = Operator::unitary(Layout::single("x", 3).unwrap(), u.conjugate()).unwrap();
        let uy = Operator::unitary(Layout::single("y", 3).unwrap(), u).unwrap();
        let ghz = qutrit::ghz("x", "y");
        let out = ghz.apply(&ux.tensor(&uy).unwrap()).unwrap();
        prop_assert!(out.max_abs_diff(&ghz) < 1e-9);
    }

    #[test]
    fn measurement_branches_sum_to_one(state in pure_state()) {
        let total: f64 = state.branches("x").unwrap().iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
