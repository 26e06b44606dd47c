//! Bell-diagonal two-qubit states.
//!
//! Weights are always ordered `(Φ⁺, Φ⁻, Ψ⁺, Ψ⁻)`. Reading the index as two
//! bits `(x, z)` (bit flip, phase flip) gives Φ⁺ = 00, Φ⁻ = 01, Ψ⁺ = 10,
//! Ψ⁻ = 11, so composing Pauli errors is XOR on indices. The target state
//! is Φ⁺ and the fidelity is its weight.

use crate::error::{check_range, ModelError, Result};

pub const PHI_PLUS: usize = 0;
pub const PHI_MINUS: usize = 1;
pub const PSI_PLUS: usize = 2;
pub const PSI_MINUS: usize = 3;

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalState {
    weights: [f64; 4],
}

impl BellDiagonalState {
    /// Validates weights: each in `[0, 1]` and summing to one within 1e-12.
    pub fn new(weights: [f64; 4]) -> Result<Self> {
        for w in weights {
            if !(-SUM_TOLERANCE..=1.0 + SUM_TOLERANCE).contains(&w) {
                return Err(ModelError::InvalidState(format!(
                    "Bell weight {w} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::InvalidState(format!(
                "Bell weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Rescales nonnegative weights to unit sum.
    pub fn normalized(weights: [f64; 4]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(ModelError::InvalidState(format!(
                "cannot normalise weights {weights:?}"
            )));
        }
        Ok(Self {
            weights: weights.map(|w| w / sum),
        })
    }

    pub(crate) fn from_weights_unchecked(weights: [f64; 4]) -> Self {
        Self { weights }
    }

    pub fn phi_plus() -> Self {
        Self {
            weights: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn maximally_mixed() -> Self {
        Self { weights: [0.25; 4] }
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn fidelity(&self) -> f64 {
        self.weights[PHI_PLUS]
    }

    /// Probability of a bit flip, seen as an error in the Z basis.
    pub fn z_error_rate(&self) -> f64 {
        self.weights[PSI_PLUS] + self.weights[PSI_MINUS]
    }

    /// Probability of a phase flip, seen as an error in the X basis.
    pub fn x_error_rate(&self) -> f64 {
        self.weights[PHI_MINUS] + self.weights[PSI_MINUS]
    }

    /// The isotropic twirl of this state: same fidelity, Werner form.
    pub fn twirled(&self) -> Self {
        let f = self.fidelity();
        let rest = (1.0 - f) / 3.0;
        Self {
            weights: [f, rest, rest, rest],
        }
    }
}

/// Φ⁺ mixed with isotropic noise: `(F, (1-F)/3, (1-F)/3, (1-F)/3)`.
pub fn werner_state(fidelity: f64) -> Result<BellDiagonalState> {
    check_range("fidelity", fidelity, 0.25, 1.0, "Werner fidelity must lie in [0.25, 1]")?;
    let rest = (1.0 - fidelity) / 3.0;
    Ok(BellDiagonalState {
        weights: [fidelity, rest, rest, rest],
    })
}

/// Two-qubit depolarising channel in the Bell basis,
/// `(1 - q)·w + q·(¼, ¼, ¼, ¼)`.
pub fn depolarize(state: &BellDiagonalState, error_prob: f64) -> Result<BellDiagonalState> {
    check_range("error_prob", error_prob, 0.0, 1.0, "must lie in [0, 1]")?;
    Ok(depolarize_unchecked(state, error_prob))
}

pub(crate) fn depolarize_unchecked(state: &BellDiagonalState, q: f64) -> BellDiagonalState {
    BellDiagonalState {
        weights: state.weights.map(|w| (1.0 - q) * w + 0.25 * q),
    }
}

/// Binary Shannon entropy in bits; `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Asymptotic entanglement-based BB84 key fraction with one-way
/// post-processing, `max(0, 1 - h(e_Z) - h(e_X))`.
pub fn secret_fraction(state: &BellDiagonalState) -> f64 {
    let ez = state.z_error_rate();
    let ex = state.x_error_rate();
    if ez >= 0.5 || ex >= 0.5 {
        return 0.0;
    }
    (1.0 - binary_entropy(ez) - binary_entropy(ex)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn werner_examples() {
        assert_eq!(werner_state(1.0).unwrap().weights(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(werner_state(0.25).unwrap().weights(), [0.25; 4]);
        let w = werner_state(0.85).unwrap().weights();
        assert_relative_eq!(w[0], 0.85);
        for x in &w[1..] {
            assert_relative_eq!(*x, 0.05, max_relative = 1e-14);
        }
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, max_relative = 1e-15);
        assert!(werner_state(0.2).is_err());
        assert!(werner_state(1.01).is_err());
    }

    #[test]
    fn depolarize_examples() {
        let s = BellDiagonalState::new([0.6, 0.2, 0.15, 0.05]).unwrap();
        assert_eq!(depolarize(&s, 0.0).unwrap(), s);
        assert_eq!(depolarize(&s, 1.0).unwrap().weights(), [0.25; 4]);
        let d = depolarize(&BellDiagonalState::phi_plus(), 0.04).unwrap().weights();
        for (got, want) in d.iter().zip([0.97, 0.01, 0.01, 0.01]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
        assert!(depolarize(&s, 1.5).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(BellDiagonalState::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(BellDiagonalState::new([1.1, -0.1, 0.0, 0.0]).is_err());
        assert!(BellDiagonalState::normalized([0.0; 4]).is_err());
        let n = BellDiagonalState::normalized([2.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(n.weights(), [0.5, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn secret_fraction_examples() {
        assert_eq!(secret_fraction(&BellDiagonalState::phi_plus()), 1.0);
        assert_eq!(secret_fraction(&BellDiagonalState::maximally_mixed()), 0.0);
        // mpmath, 30 digits: 1 - 2 h(1/30)
        assert_relative_eq!(
            secret_fraction(&werner_state(0.95).unwrap()),
            0.578_315_399_362_935_7,
            max_relative = 1e-13
        );
        assert_eq!(secret_fraction(&werner_state(0.5).unwrap()), 0.0);
    }

    #[test]
    fn secret_fraction_monotone_in_werner_fidelity() {
        let mut last = 0.0;
        for i in 0..100 {
            let f = 0.25 + 0.75 * f64::from(i) / 99.0;
            let sf = secret_fraction(&werner_state(f).unwrap());
            assert!(sf >= last, "not monotone at F = {f}");
            last = sf;
        }
    }

    proptest! {
        #[test]
        fn werner_round_trips(f in 0.25f64..=1.0) {
            prop_assert_eq!(werner_state(f).unwrap().fidelity(), f);
        }

        #[test]
        fn twirls_compose(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in 0.0f64..1.0,
                          q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
            prop_assume!(a + b + c + d > 1e-6);
            let s = BellDiagonalState::normalized([a, b, c, d]).unwrap();
            let twice = depolarize(&depolarize(&s, q1).unwrap(), q2).unwrap();
            let once = depolarize(&s, q1 + q2 - q1 * q2).unwrap();
            prop_assert!((twice.fidelity() - once.fidelity()).abs() < 1e-12);
            prop_assert!((twice.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
