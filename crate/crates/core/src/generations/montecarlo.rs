//! Event-level sampling of the first-generation protocol.
//!
//! Each trial builds one end-to-end pair through the full nesting tree.
//! Elementary links take a geometric number of heralding rounds; every
//! two-input step waits for the slower input, adds its classical delay and
//! on failure discards both inputs and rebuilds them. Bell-state labels are
//! tracked alongside the clock so the fidelity estimate is exact up to
//! sampling error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::channel::{link_success_prob, multiplexed_success};
use crate::error::{ModelError, Result};
use crate::generations::g1::{elementary_state, UNDERFLOW_PROBABILITY};
use crate::generations::{Generation, RepeaterConfig};
use crate::protocols::PurificationProtocol;

/// Smallest trial count for which the normal-approximation intervals are
/// meaningful.
pub const MIN_TRIALS: u64 = 1_000;

const CHUNK: u64 = 4_096;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub mean_time_s: f64,
    /// 95% half-width of the mean pair time.
    pub time_half_width_s: f64,
    pub fidelity: f64,
    /// 95% half-width of the fidelity estimate.
    pub fidelity_half_width: f64,
    /// Standard error of the fidelity estimate.
    pub fidelity_std_error: f64,
}

/// Clock unit is the elementary delay `L₀/c`, so every sampled time is an
/// integer and sums stay exact.
struct Sampler {
    link: Geometric,
    initial_cdf: [f64; 4],
    delays: Vec<f64>,
    rounds: Vec<u32>,
    protocol: PurificationProtocol,
    gate_error: f64,
    swap_success: f64,
}

impl Sampler {
    fn label<R: Rng>(&self, rng: &mut R) -> u8 {
        let u: f64 = rng.random();
        self.initial_cdf.iter().position(|c| u < *c).unwrap_or(3) as u8
    }

    fn noise<R: Rng>(&self, label: u8, rng: &mut R) -> u8 {
        if self.gate_error > 0.0 && rng.random::<f64>() < self.gate_error {
            rng.random_range(0..4)
        } else {
            label
        }
    }

    /// A pair at `level` after `stage` purification rounds there.
    fn sample<R: Rng>(&self, level: usize, stage: u32, rng: &mut R) -> (f64, u8) {
        if stage == 0 {
            if level == 0 {
                let attempts = self.link.sample(rng) as f64 + 1.0;
                return (attempts, self.label(rng));
            }
            let below = level - 1;
            let top = self.rounds[below];
            let mut elapsed = 0.0;
            loop {
                let (ta, a) = self.sample(below, top, rng);
                let (tb, b) = self.sample(below, top, rng);
                elapsed += ta.max(tb) + self.delays[below];
                if self.swap_success >= 1.0 || rng.random::<f64>() < self.swap_success {
                    return (elapsed, self.noise(a ^ b, rng));
                }
            }
        }
        let mut elapsed = 0.0;
        loop {
            let (ta, a) = self.sample(level, stage - 1, rng);
            let (tb, b) = self.sample(level, stage - 1, rng);
            elapsed += ta.max(tb) + self.delays[level];
            if let Some(out) = self.purify(a, b, rng) {
                return (elapsed, self.noise(out, rng));
            }
        }
    }

    /// Label-level purification. Index bits are `(x, z)`; the pair survives
    /// iff the bit-flip labels agree and keeps the XOR of the phase labels.
    fn purify<R: Rng>(&self, a: u8, b: u8, rng: &mut R) -> Option<u8> {
        let (a, b) = match self.protocol {
            PurificationProtocol::Bbpssw => (twirl(a, rng), twirl(b, rng)),
            PurificationProtocol::Dejmps => (rotate(a), rotate(b)),
        };
        if a >> 1 != b >> 1 {
            return None;
        }
        let out = (a & 2) | ((a ^ b) & 1);
        Some(match self.protocol {
            PurificationProtocol::Bbpssw => twirl(out, rng),
            PurificationProtocol::Dejmps => out,
        })
    }
}

/// Random bilateral Clifford: Φ⁺ is fixed, the others are mixed uniformly.
fn twirl<R: Rng>(label: u8, rng: &mut R) -> u8 {
    if label == 0 {
        0
    } else {
        rng.random_range(1..4)
    }
}

/// Φ⁻ ↔ Ψ⁻.
fn rotate(label: u8) -> u8 {
    match label {
        1 => 3,
        3 => 1,
        other => other,
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    n: u64,
    sum_t: f64,
    sum_t2: f64,
    good: u64,
}

/// Samples `trials` end-to-end pairs of a first-generation chain.
///
/// Trials are split into fixed chunks, each drawing from its own ChaCha
/// stream, and partial sums are merged in chunk order, so results depend
/// only on `(config, trials, seed)`.
pub fn simulate_chain_monte_carlo(
    config: &RepeaterConfig,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    if config.generation != Generation::G1 {
        return Err(ModelError::InvalidConfig(
            "Monte Carlo sampling is defined for g1 chains only".into(),
        ));
    }
    if trials < MIN_TRIALS {
        return Err(ModelError::Domain {
            name: "trials",
            value: trials as f64,
            constraint: "must be >= 1000",
        });
    }
    config.validate()?;
    let l0 = config.link_length_km();
    let p = link_success_prob(l0, &config.channel)?;
    let success = multiplexed_success(
        p,
        config.memory_qubits_per_half_node,
        config.attempts_per_round,
    )?;
    if success < UNDERFLOW_PROBABILITY {
        return Err(ModelError::InvalidConfig(format!(
            "link success probability {success:e} underflows"
        )));
    }
    let w = elementary_state(config)?.weights();
    let mut initial_cdf = [0.0; 4];
    let mut acc = 0.0;
    for (c, wi) in initial_cdf.iter_mut().zip(w) {
        acc += wi;
        *c = acc;
    }
    initial_cdf[3] = f64::INFINITY;
    let levels = config.nesting_level as usize + 1;
    let sampler = Sampler {
        link: Geometric::new(success)
            .map_err(|e| ModelError::InvalidConfig(format!("geometric sampler: {e}")))?,
        initial_cdf,
        delays: (0..levels).map(|k| 2f64.powi(k as i32)).collect(),
        rounds: config.purification.rounds_per_level().to_vec(),
        protocol: config.protocol,
        gate_error: config.gate_error,
        swap_success: config.measurement_efficiency,
    };
    let top_level = levels - 1;
    let top_rounds = sampler.rounds[top_level];

    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = CHUNK.min(trials - chunk * CHUNK);
            let mut t = Tally::default();
            for _ in 0..n {
                let (time, label) = sampler.sample(top_level, top_rounds, &mut rng);
                t.n += 1;
                t.sum_t += time;
                t.sum_t2 += time * time;
                t.good += u64::from(label == 0);
            }
            t
        })
        .collect();
    let total = tallies.iter().fold(Tally::default(), |a, b| Tally {
        n: a.n + b.n,
        sum_t: a.sum_t + b.sum_t,
        sum_t2: a.sum_t2 + b.sum_t2,
        good: a.good + b.good,
    });

    let unit = config.channel.signal_delay_s(l0);
    let n = total.n as f64;
    let mean = total.sum_t / n;
    let var = ((total.sum_t2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let fidelity = total.good as f64 / n;
    let fidelity_std_error = (fidelity * (1.0 - fidelity) / n).sqrt();
    Ok(MonteCarloReport {
        trials,
        mean_time_s: mean * unit,
        time_half_width_s: Z95 * (var / n).sqrt() * unit,
        fidelity,
        fidelity_half_width: Z95 * fidelity_std_error,
        fidelity_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelModel;
    use crate::generations::g1::g1_performance;
    use crate::protocols::PurificationSchedule;
    use approx::assert_relative_eq;

    fn chain(nesting: u32, eta: f64, length: f64) -> RepeaterConfig {
        RepeaterConfig::new(Generation::G1, length, ChannelModel::fiber(eta)).with_nesting(nesting)
    }

    #[test]
    fn deterministic_link_has_no_variance() {
        // 200 lossless trials of p = 0.5 round to certainty
        let mut c = chain(0, 1.0, 10.0);
        c.channel.attenuation_length_km = f64::MAX;
        c.memory_qubits_per_half_node = 200;
        let r = simulate_chain_monte_carlo(&c, 2000, 1).unwrap();
        assert_eq!(r.mean_time_s, 10.0 / 2e5);
        assert_eq!(r.time_half_width_s, 0.0);
        assert_eq!(r.fidelity, 1.0);
    }

    #[test]
    fn geometric_mean_attempts() {
        // p = 0.25 with η = 0.5 and a lossless channel
        let mut c = chain(0, 0.5, 10.0);
        c.channel.attenuation_length_km = f64::MAX;
        let r = simulate_chain_monte_carlo(&c, 200_000, 7).unwrap();
        let want = 4.0 * 10.0 / 2e5;
        assert!((r.mean_time_s - want).abs() < 3.0 * r.time_half_width_s);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let c = chain(2, 0.8, 200.0).with_gate_error(0.01);
        let a = simulate_chain_monte_carlo(&c, 5000, 42).unwrap();
        let b = simulate_chain_monte_carlo(&c, 5000, 42).unwrap();
        assert_eq!(a, b);
        let d = simulate_chain_monte_carlo(&c, 5000, 43).unwrap();
        assert_ne!(a.mean_time_s, d.mean_time_s);
    }

    #[test]
    fn fidelity_matches_analytic_with_purification() {
        for protocol in [PurificationProtocol::Dejmps, PurificationProtocol::Bbpssw] {
            let mut c = chain(1, 0.9, 40.0)
                .with_gate_error(0.02)
                .with_schedule(PurificationSchedule::new(vec![1, 1]).unwrap());
            c.link_fidelity = 0.85;
            c.protocol = protocol;
            let mc = simulate_chain_monte_carlo(&c, 40_000, 3).unwrap();
            let analytic = g1_performance(&c).unwrap();
            let f = analytic.end_state.fidelity();
            assert!(
                (mc.fidelity - f).abs() < 4.0 * mc.fidelity_std_error,
                "{protocol}: {} vs {f}",
                mc.fidelity
            );
            let rel = (analytic.total_time_per_pair_s - mc.mean_time_s) / mc.mean_time_s;
            assert!(rel.abs() < 0.3, "{protocol}: time off by {rel}");
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let c = chain(1, 0.9, 40.0);
        assert!(simulate_chain_monte_carlo(&c, 10, 1).is_err());
        let mut g2 = c.clone();
        g2.generation = Generation::G2;
        assert!(simulate_chain_monte_carlo(&g2, 5000, 1).is_err());
    }

    #[test]
    fn nesting_zero_time_is_exact() {
        let c = chain(0, 0.9, 20.0);
        let mc = simulate_chain_monte_carlo(&c, 100_000, 11).unwrap();
        let analytic = g1_performance(&c).unwrap().total_time_per_pair_s;
        assert_relative_eq!(mc.mean_time_s, analytic, max_relative = 0.02);
    }
}
