//! Rate, fidelity and resource models for repeater chains of each
//! generation.
//!
//! * [`g1`]: heralded generation, nested swapping and purification with the
//!   3/2 waiting-time recursion.
//! * [`g2`]: heralded generation of physical Bell pairs feeding encoded
//!   teleportation at every station.
//! * [`g3`]: one-way transmission of loss-tolerant encoded blocks.
//! * [`montecarlo`]: event-level sampling of the first-generation protocol,
//!   used to check the analytic timing.

pub mod g1;
pub mod g2;
pub mod g3;
pub mod montecarlo;

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelModel;
use crate::error::{check_range, ModelError, Result};
use crate::protocols::{PurificationProtocol, PurificationSchedule};
use crate::state::BellDiagonalState;

pub use g1::g1_performance;
pub use g2::g2_performance;
pub use g3::g3_performance;
pub use montecarlo::{simulate_chain_monte_carlo, MonteCarloReport};

/// Default local operation time for second- and third-generation nodes (s).
pub const DEFAULT_LOCAL_GATE_TIME_S: f64 = 1.0e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generation {
    G1,
    G2,
    G3,
}

impl Generation {
    pub const ALL: [Generation; 3] = [Generation::G1, Generation::G2, Generation::G3];

    pub fn name(self) -> &'static str {
        match self {
            Generation::G1 => "g1",
            Generation::G2 => "g2",
            Generation::G3 => "g3",
        }
    }
}

impl fmt::Display for Generation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generation {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g1" | "1g" => Ok(Generation::G1),
            "g2" | "2g" => Ok(Generation::G2),
            "g3" | "3g" => Ok(Generation::G3),
            other => Err(ModelError::InvalidConfig(format!(
                "unknown generation `{other}`, expected one of g1, g2, g3"
            ))),
        }
    }
}

/// Parameters of the quantum error-correcting code used by 2G/3G nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    /// Physical qubits per logical qubit.
    pub block_size: u32,
    /// Largest tolerable fraction of lost qubits per block.
    pub loss_threshold: f64,
    /// Gate-error threshold `ε_th`.
    pub fault_threshold: f64,
    /// Exponent `κ` in `ε_L = 0.1 (ε_G / ε_th)^κ`.
    pub suppression_exponent: f64,
}

impl Default for CodeParams {
    fn default() -> Self {
        Self {
            block_size: 7,
            loss_threshold: 0.5,
            fault_threshold: 1e-2,
            suppression_exponent: 2.0,
        }
    }
}

impl CodeParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(ModelError::InvalidConfig("code.block_size must be >= 1".into()));
        }
        for (name, v) in [
            ("code.loss_threshold", self.loss_threshold),
            ("code.fault_threshold", self.fault_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ModelError::Domain {
                    name,
                    value: v,
                    constraint: "must lie in (0, 1)",
                });
            }
        }
        if !(self.suppression_exponent > 0.0) {
            return Err(ModelError::Domain {
                name: "code.suppression_exponent",
                value: self.suppression_exponent,
                constraint: "must be > 0",
            });
        }
        Ok(())
    }

    /// Logical error per encoded operation, `0.1 (ε_G / ε_th)^κ`, or `None`
    /// at or above threshold.
    pub fn logical_error(&self, gate_error: f64) -> Option<f64> {
        if gate_error >= self.fault_threshold {
            return None;
        }
        Some((0.1 * (gate_error / self.fault_threshold).powf(self.suppression_exponent)).min(1.0))
    }
}

/// One candidate repeater architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeaterConfig {
    pub generation: Generation,
    pub total_distance_km: f64,
    /// Doubling depth for 1G chains: `2^n` links of `L_tot / 2^n`.
    pub nesting_level: u32,
    /// Repeater spacing for 2G/3G chains. Falls back to `L_tot / 2^n`.
    pub spacing_km: Option<f64>,
    /// Rounds per nesting level (1G only).
    pub purification: PurificationSchedule,
    pub protocol: PurificationProtocol,
    pub memory_qubits_per_half_node: u32,
    pub attempts_per_round: u32,
    pub gate_error: f64,
    pub local_gate_time_s: f64,
    /// Fidelity of a freshly heralded elementary pair, before gate noise.
    pub link_fidelity: f64,
    /// Heralding probability of a swap's Bell-state measurement.
    pub measurement_efficiency: f64,
    pub code: CodeParams,
    pub channel: ChannelModel,
}

impl RepeaterConfig {
    /// A configuration with neutral defaults: no multiplexing, no purification,
    /// noiseless gates, DEJMPS, `[[7,1,3]]`-like code parameters.
    pub fn new(generation: Generation, total_distance_km: f64, channel: ChannelModel) -> Self {
        Self {
            generation,
            total_distance_km,
            nesting_level: 0,
            spacing_km: None,
            purification: PurificationSchedule::none(0),
            protocol: PurificationProtocol::Dejmps,
            memory_qubits_per_half_node: 1,
            attempts_per_round: 1,
            gate_error: 0.0,
            local_gate_time_s: DEFAULT_LOCAL_GATE_TIME_S,
            link_fidelity: 1.0,
            measurement_efficiency: 1.0,
            code: CodeParams::default(),
            channel,
        }
    }

    /// Sets the nesting level and resets the purification schedule to zeros.
    pub fn with_nesting(mut self, nesting_level: u32) -> Self {
        self.nesting_level = nesting_level;
        self.purification = PurificationSchedule::none(nesting_level);
        self
    }

    pub fn with_schedule(mut self, schedule: PurificationSchedule) -> Self {
        self.purification = schedule;
        self
    }

    pub fn with_spacing(mut self, spacing_km: f64) -> Self {
        self.spacing_km = Some(spacing_km);
        self
    }

    pub fn with_gate_error(mut self, gate_error: f64) -> Self {
        self.gate_error = gate_error;
        self
    }

    pub fn with_multiplexing(mut self, memory_qubits: u32, attempts: u32) -> Self {
        self.memory_qubits_per_half_node = memory_qubits;
        self.attempts_per_round = attempts;
        self
    }

    /// Elementary link length `L₀` (km).
    pub fn link_length_km(&self) -> f64 {
        match (self.generation, self.spacing_km) {
            (Generation::G2 | Generation::G3, Some(spacing)) => spacing,
            _ => self.total_distance_km / 2f64.powi(self.nesting_level as i32),
        }
    }

    /// Number of elementary links spanning the total distance.
    pub fn link_count(&self) -> u64 {
        match (self.generation, self.spacing_km) {
            (Generation::G2 | Generation::G3, Some(spacing)) => {
                // tolerate round-off when the spacing divides L_tot exactly
                let ratio = self.total_distance_km / spacing;
                ((ratio - 1e-9).ceil() as u64).max(1)
            }
            _ => 1u64 << self.nesting_level,
        }
    }

    /// Intermediate stations between the two end nodes.
    pub fn repeater_count(&self) -> u64 {
        self.link_count() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_distance_km > 0.0) || !self.total_distance_km.is_finite() {
            return Err(ModelError::Domain {
                name: "total_distance_km",
                value: self.total_distance_km,
                constraint: "must be finite and > 0",
            });
        }
        check_range("gate_error", self.gate_error, 0.0, 1.0, "must lie in [0, 1)")?;
        if self.gate_error >= 1.0 {
            return Err(ModelError::Domain {
                name: "gate_error",
                value: self.gate_error,
                constraint: "must lie in [0, 1)",
            });
        }
        if !(self.local_gate_time_s > 0.0) {
            return Err(ModelError::Domain {
                name: "local_gate_time_s",
                value: self.local_gate_time_s,
                constraint: "must be > 0",
            });
        }
        check_range("link_fidelity", self.link_fidelity, 0.25, 1.0, "must lie in [0.25, 1]")?;
        if !(self.measurement_efficiency > 0.0 && self.measurement_efficiency <= 1.0) {
            return Err(ModelError::Domain {
                name: "measurement_efficiency",
                value: self.measurement_efficiency,
                constraint: "must lie in (0, 1]",
            });
        }
        if self.memory_qubits_per_half_node == 0 || self.attempts_per_round == 0 {
            return Err(ModelError::InvalidConfig(
                "memory_qubits_per_half_node and attempts_per_round must be >= 1".into(),
            ));
        }
        if self.nesting_level > 40 {
            return Err(ModelError::Domain {
                name: "nesting_level",
                value: f64::from(self.nesting_level),
                constraint: "must be <= 40",
            });
        }
        if let Some(spacing) = self.spacing_km {
            if !(spacing > 0.0) || !spacing.is_finite() {
                return Err(ModelError::Domain {
                    name: "spacing_km",
                    value: spacing,
                    constraint: "must be finite and > 0",
                });
            }
        }
        if self.generation == Generation::G1
            && self.purification.levels() != self.nesting_level as usize + 1
        {
            return Err(ModelError::InvalidConfig(format!(
                "purification schedule has {} levels, nesting level {} needs {}",
                self.purification.levels(),
                self.nesting_level,
                self.nesting_level + 1
            )));
        }
        self.channel.validate()?;
        self.code.validate()
    }
}

/// Why a configuration delivers no secret key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// Link success probability underflowed below 1e-30.
    Underflow,
    /// Gate error at or above the code's fault-tolerance threshold.
    AboveThreshold,
    /// Per-link loss exceeds the code's loss tolerance.
    BelowLossTolerance,
    /// The end-to-end state has zero secret fraction.
    NoSecretKey,
}

impl Degeneracy {
    pub fn name(self) -> &'static str {
        match self {
            Degeneracy::Underflow => "underflow",
            Degeneracy::AboveThreshold => "above_threshold",
            Degeneracy::BelowLossTolerance => "below_loss_tolerance",
            Degeneracy::NoSecretKey => "no_secret_key",
        }
    }
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rate, end state and resources of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub rate_secret_bits_per_s: f64,
    pub end_state: BellDiagonalState,
    pub secret_fraction: f64,
    /// Accumulated logical error probability (2G/3G).
    pub logical_error: Option<f64>,
    pub qubits_per_repeater: u64,
    pub repeater_count: u64,
    /// Expected time to deliver one end-to-end pair (s); infinite when no
    /// pair can be delivered.
    pub total_time_per_pair_s: f64,
    pub link_length_km: f64,
    pub flag: Option<Degeneracy>,
}

impl PerformanceReport {
    pub fn is_viable(&self) -> bool {
        self.rate_secret_bits_per_s > 0.0
    }

    pub(crate) fn from_parts(
        config: &RepeaterConfig,
        end_state: BellDiagonalState,
        logical_error: Option<f64>,
        qubits_per_repeater: u64,
        total_time_per_pair_s: f64,
        flag: Option<Degeneracy>,
    ) -> Self {
        let secret_fraction = if flag.is_some() {
            0.0
        } else {
            crate::state::secret_fraction(&end_state)
        };
        let rate = if total_time_per_pair_s.is_finite() {
            secret_fraction / total_time_per_pair_s
        } else {
            0.0
        };
        let flag = match flag {
            None if secret_fraction == 0.0 => Some(Degeneracy::NoSecretKey),
            other => other,
        };
        Self {
            rate_secret_bits_per_s: rate,
            end_state,
            secret_fraction,
            logical_error,
            qubits_per_repeater,
            repeater_count: config.repeater_count(),
            total_time_per_pair_s,
            link_length_km: config.link_length_km(),
            flag,
        }
    }
}

/// Evaluates `config` with the model of its generation.
pub fn evaluate(config: &RepeaterConfig) -> Result<PerformanceReport> {
    match config.generation {
        Generation::G1 => g1_performance(config),
        Generation::G2 => g2_performance(config),
        Generation::G3 => g3_performance(config),
    }
}
