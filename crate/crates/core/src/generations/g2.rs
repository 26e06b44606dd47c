//! Second generation: heralded physical links feeding encoded teleportation.
//!
//! Every link must herald one Bell pair per physical qubit of the block
//! before the station can teleport the logical qubit onward, so the link
//! time is the expected maximum of `block_size` independent geometric
//! waiting times. Stations then work in parallel and one logical pair leaves
//! the chain every `max(t₀, T_link)`.

use crate::channel::{link_success_prob, multiplexed_success};
use crate::error::Result;
use crate::generations::g1::UNDERFLOW_PROBABILITY;
use crate::generations::{Degeneracy, PerformanceReport, RepeaterConfig};
use crate::state::{depolarize, BellDiagonalState};

/// Expected maximum of `n` i.i.d. geometric variables on `{1, 2, …}` with
/// success probability `p`.
///
/// Summed exactly as `Σ_{k≥0} 1 - (1 - (1-p)^k)^n` while the tail decays
/// quickly; for tiny `p` the Euler–Maclaurin form `H_n/λ + ½` with
/// `λ = -ln(1-p)` is used (plus `λ/12` when `n = 1`, where it is exact to
/// that order).
pub fn expected_max_geometric(p: f64, n: u32) -> f64 {
    debug_assert!(p > 0.0 && p <= 1.0 && n >= 1);
    if p >= 1.0 {
        return 1.0;
    }
    let lambda = -(-p).ln_1p();
    if lambda < 1e-3 {
        let harmonic: f64 = (1..=n).map(|k| 1.0 / f64::from(k)).sum();
        let correction = if n == 1 { lambda / 12.0 } else { 0.0 };
        return harmonic / lambda + 0.5 + correction;
    }
    let q = 1.0 - p;
    let mut total = 0.0;
    let mut qk = 1.0f64;
    loop {
        let term = 1.0 - (1.0 - qk).powi(n as i32);
        total += term;
        if term < 1e-17 * total {
            break;
        }
        qk *= q;
    }
    total
}

/// Accumulated logical error after `operations` encoded operations, each
/// failing independently with `ε_L`.
pub(crate) fn accumulated_error(logical_error: f64, operations: u64) -> f64 {
    let ops = operations as f64;
    -(ops * (-logical_error).ln_1p()).exp_m1()
}

pub fn g2_performance(config: &RepeaterConfig) -> Result<PerformanceReport> {
    config.validate()?;
    let block = config.code.block_size;
    let qubits = 2 * u64::from(block) * u64::from(config.memory_qubits_per_half_node);
    let l0 = config.link_length_km();
    let p = link_success_prob(l0, &config.channel)?;
    let success = multiplexed_success(
        p,
        config.memory_qubits_per_half_node,
        config.attempts_per_round,
    )?;
    if success < UNDERFLOW_PROBABILITY {
        return Ok(PerformanceReport::from_parts(
            config,
            BellDiagonalState::maximally_mixed(),
            None,
            qubits,
            f64::INFINITY,
            Some(Degeneracy::Underflow),
        ));
    }
    let link_time = config.channel.signal_delay_s(l0) * expected_max_geometric(success, block);
    let time = link_time.max(config.local_gate_time_s);

    let Some(logical) = config.code.logical_error(config.gate_error) else {
        return Ok(PerformanceReport::from_parts(
            config,
            BellDiagonalState::maximally_mixed(),
            None,
            qubits,
            time,
            Some(Degeneracy::AboveThreshold),
        ));
    };
    let total_error = accumulated_error(logical, config.link_count());
    let state = depolarize(&BellDiagonalState::phi_plus(), total_error)?;
    Ok(PerformanceReport::from_parts(
        config,
        state,
        Some(total_error),
        qubits,
        time,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelModel;
    use crate::generations::Generation;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Direct summation of `P(max > k)` with no switch-over.
    fn brute_expected_max(p: f64, n: u32) -> f64 {
        let mut total = 0.0;
        for k in 0..200_000 {
            total += 1.0 - (1.0 - (1.0 - p).powi(k)).powi(n as i32);
        }
        total
    }

    #[test]
    fn expected_max_examples() {
        assert_eq!(expected_max_geometric(1.0, 5), 1.0);
        assert_relative_eq!(expected_max_geometric(0.25, 1), 4.0, max_relative = 1e-14);
        // two fair coins: E[max] = 8/3
        assert_relative_eq!(expected_max_geometric(0.5, 2), 8.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn expected_max_asymptotic_branch_is_continuous() {
        for n in [1u32, 2, 7, 20] {
            let p = 1.0 - (-1.0e-3f64).exp();
            let exact = brute_expected_max(p * 1.0001, n);
            let approx = expected_max_geometric(p * 0.9999, n);
            assert_relative_eq!(approx, exact, max_relative = 5e-4);
        }
    }

    proptest! {
        #[test]
        fn expected_max_matches_brute(p in 0.01f64..0.99, n in 1u32..12) {
            let got = expected_max_geometric(p, n);
            let want = brute_expected_max(p, n);
            prop_assert!((got - want).abs() <= 1e-10 * want);
        }
    }

    fn config(eta: f64, eps: f64, spacing: f64) -> RepeaterConfig {
        RepeaterConfig::new(Generation::G2, 1000.0, ChannelModel::fiber(eta))
            .with_spacing(spacing)
            .with_gate_error(eps)
    }

    #[test]
    fn noiseless_gives_perfect_pairs() {
        let r = g2_performance(&config(1.0, 0.0, 10.0)).unwrap();
        assert_eq!(r.end_state.fidelity(), 1.0);
        assert_eq!(r.secret_fraction, 1.0);
        assert_eq!(r.logical_error, Some(0.0));
        assert_eq!(r.qubits_per_repeater, 14);
        assert_eq!(r.repeater_count, 99);
    }

    #[test]
    fn threshold_boundary_is_flagged() {
        let r = g2_performance(&config(0.9, 1e-2, 10.0)).unwrap();
        assert_eq!(r.flag, Some(Degeneracy::AboveThreshold));
        assert_eq!(r.rate_secret_bits_per_s, 0.0);
    }

    #[test]
    fn time_is_link_or_clock_bound() {
        let r = g2_performance(&config(0.9, 1e-3, 10.0)).unwrap();
        let p = 0.5 * 0.9 * (-0.5f64).exp();
        let want = (10.0 / 2e5) * expected_max_geometric(p, 7);
        assert_relative_eq!(r.total_time_per_pair_s, want, max_relative = 1e-14);

        let mut fast = config(1.0, 1e-3, 1e-3);
        fast.local_gate_time_s = 1.0;
        let r = g2_performance(&fast).unwrap();
        assert_eq!(r.total_time_per_pair_s, 1.0);
    }

    #[test]
    fn errors_accumulate_over_links() {
        let r = g2_performance(&config(0.9, 1e-3, 10.0)).unwrap();
        let want = 1.0 - (1.0 - 1e-3f64).powi(100);
        assert_relative_eq!(r.logical_error.unwrap(), want, max_relative = 1e-12);
        assert_relative_eq!(r.end_state.fidelity(), 1.0 - 0.75 * want, max_relative = 1e-12);
    }

    #[test]
    fn longer_attenuation_never_hurts() {
        for spacing in [1.0, 5.0, 20.0, 80.0] {
            let c = config(0.7, 1e-3, spacing);
            let mut better = c.clone();
            better.channel.attenuation_length_km *= 2.0;
            let a = g2_performance(&c).unwrap().rate_secret_bits_per_s;
            let b = g2_performance(&better).unwrap().rate_secret_bits_per_s;
            assert!(b >= a);
        }
    }
}
