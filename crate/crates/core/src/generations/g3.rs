//! Third generation: one-way forwarding of loss-tolerant encoded blocks.
//!
//! A block of `n` photons crosses each link; each photon survives with
//! `s = η_c exp(-L₀/L_att)`. The block is decodable when at most a
//! `loss_threshold` fraction is lost, i.e. when at least
//! `ceil(n (1 - loss_threshold))` photons arrive. Stations emit one block
//! per clock cycle `t₀` and no classical signal travels back.

use crate::channel::transmissivity;
use crate::error::{check_range, Result};
use crate::generations::g2::accumulated_error;
use crate::generations::{Degeneracy, PerformanceReport, RepeaterConfig};
use crate::state::{depolarize, BellDiagonalState};

/// `P[Binomial(n, s) ≥ k]`, summed term by term in log space.
pub fn binomial_tail(n: u32, s: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    if s <= 0.0 {
        return 0.0;
    }
    let (ln_s, ln_f) = (s.ln(), (-s).ln_1p());
    let mut ln_choose = 0.0f64;
    // ln C(n, j) built incrementally from j = 0
    for j in 0..k {
        ln_choose += (f64::from(n - j)).ln() - f64::from(j + 1).ln();
    }
    let mut total = 0.0;
    for j in k..=n {
        total += (ln_choose + f64::from(j) * ln_s + f64::from(n - j) * ln_f).exp();
        if j < n {
            ln_choose += (f64::from(n - j)).ln() - f64::from(j + 1).ln();
        }
    }
    total.min(1.0)
}

/// Minimum number of surviving photons for a decodable block.
pub fn required_survivors(block_size: u32, loss_threshold: f64) -> u32 {
    let needed = f64::from(block_size) * (1.0 - loss_threshold);
    // guard against 7 * 0.5 style products landing a hair above an integer
    (needed - 1e-12).ceil().max(0.0) as u32
}

/// Per-link block decoding probability.
pub fn g3_link_success(survival: f64, block_size: u32, loss_threshold: f64) -> Result<f64> {
    check_range("survival", survival, 0.0, 1.0, "must lie in [0, 1]")?;
    Ok(binomial_tail(
        block_size,
        survival,
        required_survivors(block_size, loss_threshold),
    ))
}

pub fn g3_performance(config: &RepeaterConfig) -> Result<PerformanceReport> {
    config.validate()?;
    let code = config.code;
    let qubits = 2 * u64::from(code.block_size);
    let l0 = config.link_length_km();
    let survival = config.channel.coupling_efficiency * transmissivity(l0, &config.channel)?;
    let links = config.link_count();
    let t0 = config.local_gate_time_s;

    let logical = code.logical_error(config.gate_error);
    let (state, total_error) = match logical {
        Some(e) => {
            let total = accumulated_error(e, links);
            (depolarize(&BellDiagonalState::phi_plus(), total)?, Some(total))
        }
        None => (BellDiagonalState::maximally_mixed(), None),
    };

    if 1.0 - survival >= code.loss_threshold {
        return Ok(PerformanceReport::from_parts(
            config,
            state,
            total_error,
            qubits,
            f64::INFINITY,
            Some(Degeneracy::BelowLossTolerance),
        ));
    }
    if logical.is_none() {
        return Ok(PerformanceReport::from_parts(
            config,
            state,
            None,
            qubits,
            t0,
            Some(Degeneracy::AboveThreshold),
        ));
    }
    let link = g3_link_success(survival, code.block_size, code.loss_threshold)?;
    let success = (links as f64 * link.ln()).exp();
    if success < crate::generations::g1::UNDERFLOW_PROBABILITY {
        return Ok(PerformanceReport::from_parts(
            config,
            state,
            total_error,
            qubits,
            f64::INFINITY,
            Some(Degeneracy::Underflow),
        ));
    }
    Ok(PerformanceReport::from_parts(
        config,
        state,
        total_error,
        qubits,
        t0 / success,
        None,
    ))
}

/// End-to-end block success probability `P_link^(repeater_count + 1)`.
pub fn g3_end_to_end_success(config: &RepeaterConfig) -> Result<f64> {
    let l0 = config.link_length_km();
    let survival = config.channel.coupling_efficiency * transmissivity(l0, &config.channel)?;
    let link = g3_link_success(survival, config.code.block_size, config.code.loss_threshold)?;
    Ok(link.powi(config.link_count().min(i32::MAX as u64) as i32))
}
