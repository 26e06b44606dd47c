//! Closed-form purification and swapping against the density-matrix oracle.

use proptest::prelude::*;
use qrcost::protocols::oracle::{oracle_circuit, oracle_swap, TwoPairState};
use qrcost::protocols::{purify, swap, PurificationProtocol};
use qrcost::state::{werner_state, BellDiagonalState};

fn bell_state() -> impl Strategy<Value = BellDiagonalState> {
    (0.25f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(f, a, b, c)| {
        let sum = a + b + c;
        let rest = 1.0 - f;
        let (a, b, c) = if sum > 0.0 {
            (a / sum, b / sum, c / sum)
        } else {
            (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
        };
        BellDiagonalState::normalized([f, rest * a, rest * b, rest * c]).unwrap()
    })
}

fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noisy_symmetric_purification_matches_circuit(
        state in bell_state(),
        eps in 0.0f64..0.2,
        dejmps in any::<bool>(),
    ) {
        let protocol = if dejmps { PurificationProtocol::Dejmps } else { PurificationProtocol::Bbpssw };
        let closed = purify(&state, protocol, eps).unwrap();
        let circuit = oracle_circuit(&TwoPairState::product(&state, &state), protocol, eps).unwrap();
        prop_assert!((closed.success_prob - circuit.success_prob).abs() <= 1e-10);
        prop_assert!(close(closed.output_state.weights(), circuit.output_state.weights(), 1e-10));
    }

    #[test]
    fn swap_matches_bell_measurement(
        left in bell_state(),
        right in bell_state(),
        eps in 0.0f64..0.2,
    ) {
        let closed = swap(&left, &right, eps, 1.0).unwrap();
        let circuit = oracle_swap(&left, &right, eps).unwrap();
        prop_assert!(close(closed.state.weights(), circuit.weights(), 1e-10));
    }
}

#[test]
fn werner_swap_closed_form() {
    let w = werner_state(0.9).unwrap();
    let joined = oracle_swap(&w, &w, 0.0).unwrap();
    let want = 0.81 + 0.01 / 3.0;
    assert!((joined.fidelity() - want).abs() < 1e-12);
}

#[test]
fn bbpssw_below_half_is_not_distillable() {
    let w = werner_state(0.45).unwrap();
    let out = oracle_circuit(&TwoPairState::product(&w, &w), PurificationProtocol::Bbpssw, 0.0).unwrap();
    assert!(out.output_state.fidelity() < 0.5);
}
