//! Entanglement purification and swapping on Bell-diagonal states.
//!
//! All maps here are closed forms. [`oracle`] runs the same circuits on full
//! 16×16 density matrices and is what the closed forms are tested against.
//!
//! Gate noise is modelled as a depolarising channel with `q = ε_G` applied
//! to the kept pair after the ideal operation, so every state stays
//! Bell-diagonal and success probabilities are those of the ideal circuit.

pub mod oracle;

use std::fmt;
use std::str::FromStr;

use crate::error::{ModelError, Result};
use crate::state::{depolarize, BellDiagonalState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PurificationProtocol {
    /// Twirl to Werner form, bilateral CNOT, keep on matching outcomes.
    Bbpssw,
    /// Bilateral ±π/2 X rotations, bilateral CNOT, keep on matching outcomes.
    Dejmps,
}

impl PurificationProtocol {
    pub fn name(self) -> &'static str {
        match self {
            PurificationProtocol::Bbpssw => "bbpssw",
            PurificationProtocol::Dejmps => "dejmps",
        }
    }
}

impl fmt::Display for PurificationProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PurificationProtocol {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bbpssw" => Ok(Self::Bbpssw),
            "dejmps" => Ok(Self::Dejmps),
            other => Err(ModelError::InvalidConfig(format!(
                "unknown purification protocol `{other}`, expected `bbpssw` or `dejmps`"
            ))),
        }
    }
}

/// Result of one postselected purification round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurificationOutcome {
    pub output_state: BellDiagonalState,
    /// Probability that both parties see matching outcomes.
    pub success_prob: f64,
}

/// Number of purification rounds applied at each nesting level, lowest
/// level first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PurificationSchedule(Vec<u32>);

impl PurificationSchedule {
    pub fn new(rounds_per_level: Vec<u32>) -> Result<Self> {
        if rounds_per_level.is_empty() {
            return Err(ModelError::InvalidConfig(
                "purification schedule needs at least one level".into(),
            ));
        }
        Ok(Self(rounds_per_level))
    }

    /// All-zero schedule for a chain with the given nesting level.
    pub fn none(nesting_level: u32) -> Self {
        Self(vec![0; nesting_level as usize + 1])
    }

    pub fn rounds_per_level(&self) -> &[u32] {
        &self.0
    }

    pub fn rounds_at(&self, level: usize) -> u32 {
        self.0.get(level).copied().unwrap_or(0)
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    pub fn total_rounds(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|r| *r == 0)
    }
}

impl fmt::Display for PurificationSchedule {
    /// `0|1|0`, lowest level first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for PurificationSchedule {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let rounds = s
            .split('|')
            .map(|part| {
                part.trim().parse::<u32>().map_err(|_| {
                    ModelError::InvalidConfig(format!("bad purification schedule `{s}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rounds)
    }
}

/// BBPSSW on two possibly different inputs. Each input is twirled to Werner
/// form at its own fidelity and the output is returned twirled.
pub fn bbpssw_pair(a: &BellDiagonalState, b: &BellDiagonalState) -> Result<PurificationOutcome> {
    let (fa, fb) = (a.fidelity(), b.fidelity());
    for f in [fa, fb] {
        if f < 0.25 {
            return Err(ModelError::Domain {
                name: "fidelity",
                value: f,
                constraint: "BBPSSW needs Werner fidelity >= 0.25",
            });
        }
    }
    let (ra, rb) = ((1.0 - fa) / 3.0, (1.0 - fb) / 3.0);
    // Kept iff both pairs carry the same bit-flip label. Φ⁺ comes out of
    // Φ⁺Φ⁺ and Φ⁻Φ⁻.
    let accept = (fa + ra) * (fb + rb) + 4.0 * ra * rb;
    let fidelity = (fa * fb + ra * rb) / accept;
    let rest = (1.0 - fidelity) / 3.0;
    Ok(PurificationOutcome {
        output_state: BellDiagonalState::from_weights_unchecked([fidelity, rest, rest, rest]),
        success_prob: accept,
    })
}

/// One symmetric BBPSSW round:
/// `F' = (F² + ((1-F)/3)²) / D`, `D = F² + ⅔F(1-F) + 5((1-F)/3)²`.
pub fn bbpssw_round(state: &BellDiagonalState) -> Result<PurificationOutcome> {
    bbpssw_pair(state, state)
}

/// DEJMPS on two possibly different Bell-diagonal inputs.
///
/// The local rotations exchange Φ⁻ and Ψ⁻; the bilateral CNOT then keeps the
/// source pair when both target qubits agree, i.e. when the bit-flip labels
/// match, and XORs the phase labels. For identical inputs
/// `(p₁, p₂, p₃, p₄)` this gives
/// `((p₁²+p₄²), 2p₁p₄, (p₂²+p₃²), 2p₂p₃) / N` with
/// `N = (p₁+p₄)² + (p₂+p₃)²`.
pub fn dejmps_pair(a: &BellDiagonalState, b: &BellDiagonalState) -> PurificationOutcome {
    let rotate = |w: [f64; 4]| [w[0], w[3], w[2], w[1]];
    let (ra, rb) = (rotate(a.weights()), rotate(b.weights()));
    let mut out = [0.0; 4];
    for x in 0..2 {
        for za in 0..2 {
            for zb in 0..2 {
                out[2 * x + (za ^ zb)] += ra[2 * x + za] * rb[2 * x + zb];
            }
        }
    }
    let norm: f64 = out.iter().sum();
    PurificationOutcome {
        output_state: BellDiagonalState::from_weights_unchecked(out.map(|w| w / norm)),
        success_prob: norm,
    }
}

pub fn dejmps_round(state: &BellDiagonalState) -> PurificationOutcome {
    dejmps_pair(state, state)
}

/// One round of `protocol` on two copies of `state`, followed by gate noise
/// on the kept pair.
pub fn purify(
    state: &BellDiagonalState,
    protocol: PurificationProtocol,
    gate_error: f64,
) -> Result<PurificationOutcome> {
    let ideal = match protocol {
        PurificationProtocol::Bbpssw => bbpssw_round(state)?,
        PurificationProtocol::Dejmps => dejmps_round(state),
    };
    Ok(PurificationOutcome {
        output_state: depolarize(&ideal.output_state, gate_error)?,
        success_prob: ideal.success_prob,
    })
}

/// Outcome of a Bell-state measurement joining two links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapOutcome {
    pub state: BellDiagonalState,
    /// Heralding probability of the measurement; 1 for memory-based BSMs.
    pub success_prob: f64,
}

/// Composes two Bell-diagonal links through a Bell-state measurement.
///
/// Output weight `k` is `Σ_{i⊕j=k} left_i · right_j`, then depolarised with
/// `q = gate_error`. `measurement_efficiency` is passed through as the
/// success probability.
pub fn swap(
    left: &BellDiagonalState,
    right: &BellDiagonalState,
    gate_error: f64,
    measurement_efficiency: f64,
) -> Result<SwapOutcome> {
    if !(measurement_efficiency > 0.0 && measurement_efficiency <= 1.0) {
        return Err(ModelError::Domain {
            name: "measurement_efficiency",
            value: measurement_efficiency,
            constraint: "must lie in (0, 1]",
        });
    }
    let ideal = BellDiagonalState::from_weights_unchecked(compose(left, right));
    Ok(SwapOutcome {
        state: depolarize(&ideal, gate_error)?,
        success_prob: measurement_efficiency,
    })
}

fn compose(left: &BellDiagonalState, right: &BellDiagonalState) -> [f64; 4] {
    let (l, r) = (left.weights(), right.weights());
    let mut out = [0.0; 4];
    for (i, li) in l.iter().enumerate() {
        for (j, rj) in r.iter().enumerate() {
            out[i ^ j] += li * rj;
        }
    }
    out
}

/// Result of iterated symmetric pumping.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpResult {
    pub state: BellDiagonalState,
    /// `2^rounds / Π success_probs`.
    pub expected_pairs_consumed: f64,
    pub success_probs: Vec<f64>,
}

/// Applies `rounds` noiseless rounds, each consuming two copies of the
/// current state.
pub fn pump_to_schedule(
    initial: &BellDiagonalState,
    rounds: u32,
    protocol: PurificationProtocol,
) -> Result<PumpResult> {
    pump_noisy(initial, rounds, protocol, 0.0)
}

/// As [`pump_to_schedule`] with depolarising gate noise after every round.
pub fn pump_noisy(
    initial: &BellDiagonalState,
    rounds: u32,
    protocol: PurificationProtocol,
    gate_error: f64,
) -> Result<PumpResult> {
    let mut state = *initial;
    let mut pairs = 1.0;
    let mut success_probs = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let outcome = purify(&state, protocol, gate_error)?;
        pairs = 2.0 * pairs / outcome.success_prob;
        success_probs.push(outcome.success_prob);
        state = outcome.output_state;
    }
    Ok(PumpResult {
        state,
        expected_pairs_consumed: pairs,
        success_probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::werner_state;
    use approx::assert_relative_eq;

    fn assert_weights(got: [f64; 4], want: [f64; 4], tol: f64) {
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn bbpssw_examples() {
        let one = bbpssw_round(&werner_state(1.0).unwrap()).unwrap();
        assert_eq!(one.output_state.fidelity(), 1.0);
        assert_eq!(one.success_prob, 1.0);

        let mixed = bbpssw_round(&werner_state(0.25).unwrap()).unwrap();
        assert_relative_eq!(mixed.output_state.fidelity(), 0.25, max_relative = 1e-14);

        // mpmath, 30 digits
        let r = bbpssw_round(&werner_state(0.8).unwrap()).unwrap();
        assert_relative_eq!(r.output_state.fidelity(), 0.838_150_289_017_341_04, max_relative = 1e-14);
        assert_relative_eq!(r.success_prob, 0.768_888_888_888_888_9, max_relative = 1e-14);

        let below = BellDiagonalState::new([0.2, 0.3, 0.3, 0.2]).unwrap();
        assert!(bbpssw_round(&below).is_err());
    }

    #[test]
    fn bbpssw_matches_textbook_formula() {
        for i in 0..=20 {
            let f = 0.25 + 0.75 * f64::from(i) / 20.0;
            let r = bbpssw_round(&werner_state(f).unwrap()).unwrap();
            let e = (1.0 - f) / 3.0;
            let d = f * f + 2.0 / 3.0 * f * (1.0 - f) + 5.0 * e * e;
            assert_relative_eq!(r.success_prob, d, max_relative = 1e-13);
            assert_relative_eq!(r.output_state.fidelity(), (f * f + e * e) / d, max_relative = 1e-13);
        }
    }

    #[test]
    fn bbpssw_gains_above_half() {
        for i in 1..100 {
            let f = 0.5 + 0.5 * f64::from(i) / 100.0;
            let out = bbpssw_round(&werner_state(f).unwrap()).unwrap();
            assert!(out.output_state.fidelity() > f, "no gain at F = {f}");
        }
    }

    #[test]
    fn dejmps_examples() {
        let pure = dejmps_round(&BellDiagonalState::phi_plus());
        assert_eq!(pure.output_state, BellDiagonalState::phi_plus());
        assert_eq!(pure.success_prob, 1.0);

        let mixed = dejmps_round(&BellDiagonalState::maximally_mixed());
        assert_weights(mixed.output_state.weights(), [0.25; 4], 1e-15);
        assert_relative_eq!(mixed.success_prob, 0.5);

        let s = BellDiagonalState::new([0.7, 0.1, 0.1, 0.1]).unwrap();
        let out = dejmps_round(&s);
        assert_relative_eq!(out.success_prob, 0.68, max_relative = 1e-14);
        assert_weights(
            out.output_state.weights(),
            [0.50 / 0.68, 0.14 / 0.68, 0.02 / 0.68, 0.02 / 0.68],
            1e-14,
        );
    }

    #[test]
    fn dejmps_success_is_sum_over_accepted_branches() {
        // Brute force over the 16 label pairs: after the rotation the pair is
        // kept iff the bit-flip labels agree.
        let s = BellDiagonalState::new([0.55, 0.2, 0.15, 0.1]).unwrap();
        let rotated = {
            let w = s.weights();
            [w[0], w[3], w[2], w[1]]
        };
        let mut accepted = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if (i >> 1) == (j >> 1) {
                    accepted += rotated[i] * rotated[j];
                }
            }
        }
        assert_relative_eq!(dejmps_round(&s).success_prob, accepted, max_relative = 1e-14);
    }

    #[test]
    fn swap_examples() {
        let phi = BellDiagonalState::phi_plus();
        let out = swap(&phi, &phi, 0.0, 1.0).unwrap();
        assert_eq!(out.state, phi);
        assert_eq!(out.success_prob, 1.0);

        for (fa, fb) in [(0.9, 0.8), (0.7, 0.95), (0.5, 0.5)] {
            let out = swap(&werner_state(fa).unwrap(), &werner_state(fb).unwrap(), 0.0, 1.0).unwrap();
            let want = fa * fb + (1.0 - fa) * (1.0 - fb) / 3.0;
            assert_relative_eq!(out.state.fidelity(), want, max_relative = 1e-14);
            let w = out.state.weights();
            assert_relative_eq!(w[1], w[2], max_relative = 1e-14);
            assert_relative_eq!(w[2], w[3], max_relative = 1e-14);
        }

        let w9 = werner_state(0.9).unwrap();
        let noisy = swap(&w9, &w9, 0.01, 1.0).unwrap();
        assert_relative_eq!(noisy.state.fidelity(), 0.8077, max_relative = 1e-13);

        assert!(swap(&phi, &phi, 0.0, 0.0).is_err());
    }

    #[test]
    fn swap_with_phi_plus_is_identity() {
        let s = BellDiagonalState::new([0.4, 0.3, 0.2, 0.1]).unwrap();
        let out = swap(&BellDiagonalState::phi_plus(), &s, 0.0, 1.0).unwrap();
        assert_eq!(out.state, s);
    }

    #[test]
    fn noisy_swap_is_strictly_worse() {
        let s = BellDiagonalState::new([0.8, 0.1, 0.05, 0.05]).unwrap();
        let ideal = swap(&s, &s, 0.0, 1.0).unwrap().state.fidelity();
        for q in [1e-4, 1e-2, 0.3] {
            assert!(swap(&s, &s, q, 1.0).unwrap().state.fidelity() < ideal);
        }
    }

    #[test]
    fn pumping() {
        let w = werner_state(0.8).unwrap();
        let zero = pump_to_schedule(&w, 0, PurificationProtocol::Bbpssw).unwrap();
        assert_eq!(zero.state, w);
        assert_eq!(zero.expected_pairs_consumed, 1.0);

        let one = pump_to_schedule(&w, 1, PurificationProtocol::Bbpssw).unwrap();
        assert_relative_eq!(one.state.fidelity(), 0.838_150_289_017_341_04, max_relative = 1e-14);
        assert_relative_eq!(one.expected_pairs_consumed, 2.601_156_069_364_161_8, max_relative = 1e-14);

        // mpmath, BBPSSW map applied twice
        let two = pump_to_schedule(&w, 2, PurificationProtocol::Bbpssw).unwrap();
        assert_relative_eq!(two.state.fidelity(), 0.873_584_515_298_498_9, max_relative = 1e-14);
        assert_relative_eq!(two.expected_pairs_consumed, 6.442_610_514_700_811_5, max_relative = 1e-13);
    }

    #[test]
    fn schedule_text_form() {
        let s: PurificationSchedule = "0|2|1".parse().unwrap();
        assert_eq!(s.rounds_per_level(), &[0, 2, 1]);
        assert_eq!(s.to_string(), "0|2|1");
        assert_eq!(s.total_rounds(), 3);
        assert!(PurificationSchedule::none(3).is_trivial());
        assert_eq!(PurificationSchedule::none(3).levels(), 4);
        assert!("0|x".parse::<PurificationSchedule>().is_err());
        assert!(PurificationSchedule::new(vec![]).is_err());
    }
}
