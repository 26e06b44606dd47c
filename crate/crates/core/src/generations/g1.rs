//! First generation: heralded entanglement generation, purification and
//! nested swapping.
//!
//! Timing follows the 3/2 rule. Waiting for the slower of two independent
//! geometric processes costs about 3/2 of one of them, so every two-input
//! step at level `k` maps the input time `T` to
//! `(3/2·T + L_k/c) / P_step`, where `L_k = 2^k L₀` and `P_step` is the
//! purification or Bell-measurement success probability.

use crate::channel::{link_success_prob, multiplexed_success};
use crate::error::Result;
use crate::generations::{Degeneracy, PerformanceReport, RepeaterConfig};
use crate::protocols::{purify, swap};
use crate::state::{depolarize, werner_state, BellDiagonalState};

/// Link success below this is treated as unreachable.
pub const UNDERFLOW_PROBABILITY: f64 = 1e-30;

/// Per-level trace of the nested protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct G1Trace {
    /// Multiplexed elementary success probability.
    pub link_success: f64,
    /// Expected time to herald one elementary pair (s).
    pub link_time_s: f64,
    /// State and expected time after the purification rounds of each level.
    pub levels: Vec<(BellDiagonalState, f64)>,
}

/// The elementary pair as delivered to the memories, before any purification.
pub fn elementary_state(config: &RepeaterConfig) -> Result<BellDiagonalState> {
    depolarize(&werner_state(config.link_fidelity)?, config.gate_error)
}

/// Multiplexed elementary success probability, the state a fresh pair is
/// stored in and its expected heralding time. `None` on underflow.
pub(crate) fn elementary(config: &RepeaterConfig) -> Result<Option<(f64, BellDiagonalState, f64)>> {
    let l0 = config.link_length_km();
    let p = link_success_prob(l0, &config.channel)?;
    let success = multiplexed_success(
        p,
        config.memory_qubits_per_half_node,
        config.attempts_per_round,
    )?;
    if success < UNDERFLOW_PROBABILITY {
        return Ok(None);
    }
    let time = config.channel.signal_delay_s(l0) / success;
    Ok(Some((success, elementary_state(config)?, time)))
}

fn level_delay(config: &RepeaterConfig, level: u32) -> f64 {
    config
        .channel
        .signal_delay_s(config.link_length_km() * 2f64.powi(level as i32))
}

/// One purification round on pairs of `level`.
pub(crate) fn purify_step(
    config: &RepeaterConfig,
    state: &BellDiagonalState,
    time: f64,
    level: u32,
) -> Result<(BellDiagonalState, f64)> {
    let outcome = purify(state, config.protocol, config.gate_error)?;
    let time = (1.5 * time + level_delay(config, level)) / outcome.success_prob;
    Ok((outcome.output_state, time))
}

/// Joins two pairs of `level` into one pair of `level + 1`.
pub(crate) fn swap_step(
    config: &RepeaterConfig,
    state: &BellDiagonalState,
    time: f64,
    level: u32,
) -> Result<(BellDiagonalState, f64)> {
    let joined = swap(state, state, config.gate_error, config.measurement_efficiency)?;
    let time = (1.5 * time + level_delay(config, level)) / joined.success_prob;
    Ok((joined.state, time))
}

/// Runs the nesting recursion and returns per-level states and times.
/// `None` when the elementary success probability underflows.
pub fn g1_trace(config: &RepeaterConfig) -> Result<Option<G1Trace>> {
    config.validate()?;
    let Some((link_success, mut state, link_time_s)) = elementary(config)? else {
        return Ok(None);
    };
    let mut time = link_time_s;
    let mut levels = Vec::with_capacity(config.nesting_level as usize + 1);
    for level in 0..=config.nesting_level {
        for _ in 0..config.purification.rounds_at(level as usize) {
            (state, time) = purify_step(config, &state, time, level)?;
        }
        levels.push((state, time));
        if level < config.nesting_level {
            (state, time) = swap_step(config, &state, time, level)?;
        }
    }
    Ok(Some(G1Trace {
        link_success,
        link_time_s,
        levels,
    }))
}

/// Memory qubits at each intermediate station: two half-nodes, each holding
/// `M` memories for every one of the `2^(Σ M_k)` elementary pairs one
/// end-to-end pair consumes.
pub fn g1_qubits_per_repeater(config: &RepeaterConfig) -> u64 {
    qubits_for(config.memory_qubits_per_half_node, config.purification.total_rounds())
}

pub(crate) fn qubits_for(memory_qubits: u32, total_rounds: u32) -> u64 {
    2u64.saturating_mul(u64::from(memory_qubits))
        .saturating_mul(1u64 << total_rounds.min(62))
}

pub fn g1_performance(config: &RepeaterConfig) -> Result<PerformanceReport> {
    let qubits = g1_qubits_per_repeater(config);
    match g1_trace(config)? {
        Some(trace) => {
            let (state, time) = *trace.levels.last().expect("at least one level");
            Ok(PerformanceReport::from_parts(config, state, None, qubits, time, None))
        }
        None => Ok(PerformanceReport::from_parts(
            config,
            BellDiagonalState::maximally_mixed(),
            None,
            qubits,
            f64::INFINITY,
            Some(Degeneracy::Underflow),
        )),
    }
}

/// Secret bits per optical-mode use of a repeaterless link (nesting 0):
/// the key delivered per heralding round divided by the `M·n_EG` modes
/// sent in that round.
pub fn direct_bits_per_channel_use(config: &RepeaterConfig) -> Result<f64> {
    if config.nesting_level != 0 {
        return Err(crate::error::ModelError::InvalidConfig(
            "direct transmission needs nesting level 0".into(),
        ));
    }
    let report = g1_performance(config)?;
    let round = config.channel.signal_delay_s(config.link_length_km());
    let modes = f64::from(config.memory_qubits_per_half_node) * f64::from(config.attempts_per_round);
    Ok(report.rate_secret_bits_per_s * round / modes)
}
