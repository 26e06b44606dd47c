//! Photon transmission through fiber and vacuum-beam-guide (VBG) media.
//!
//! A channel is described only by its attenuation length, a distance
//! independent coupling efficiency and the speed of the classical heralding
//! signal. Lens arrays, beam waists and alignment inside a VBG are not
//! modelled; the guide enters solely through its effective attenuation
//! length.

use std::fmt;

use crate::error::{check_range, ModelError, Result};

/// Attenuation length of telecom fiber (km).
pub const FIBER_ATTENUATION_KM: f64 = 20.0;
/// Effective attenuation length of a vacuum beam guide (km).
pub const VBG_ATTENUATION_KM: f64 = 42_000.0;
/// Speed of classical signals in fiber (km/s).
pub const FIBER_SIGNAL_SPEED: f64 = 2.0e5;
/// Speed of classical signals in vacuum (km/s).
pub const VACUUM_SIGNAL_SPEED: f64 = 3.0e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Medium {
    Fiber,
    VacuumBeamGuide,
    Custom,
}

impl Medium {
    /// Short name used in configuration files and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Medium::Fiber => "fiber",
            Medium::VacuumBeamGuide => "vbg",
            Medium::Custom => "custom",
        }
    }
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Transmission medium between two neighbouring repeater nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub medium: Medium,
    /// Distance over which transmissivity drops by a factor of e (km).
    pub attenuation_length_km: f64,
    /// Distance-independent collection/coupling/detection efficiency.
    pub coupling_efficiency: f64,
    /// Speed of the classical heralding signal (km/s).
    pub signal_speed_km_per_s: f64,
}

impl ChannelModel {
    pub fn new(
        medium: Medium,
        attenuation_length_km: f64,
        coupling_efficiency: f64,
        signal_speed_km_per_s: f64,
    ) -> Result<Self> {
        let channel = Self {
            medium,
            attenuation_length_km,
            coupling_efficiency,
            signal_speed_km_per_s,
        };
        channel.validate()?;
        Ok(channel)
    }

    /// Standard telecom fiber, `L_att = 20 km`.
    pub fn fiber(coupling_efficiency: f64) -> Self {
        Self {
            medium: Medium::Fiber,
            attenuation_length_km: FIBER_ATTENUATION_KM,
            coupling_efficiency,
            signal_speed_km_per_s: FIBER_SIGNAL_SPEED,
        }
    }

    /// Vacuum beam guide, `L_att = 42 000 km`.
    pub fn vacuum_beam_guide(coupling_efficiency: f64) -> Self {
        Self {
            medium: Medium::VacuumBeamGuide,
            attenuation_length_km: VBG_ATTENUATION_KM,
            coupling_efficiency,
            signal_speed_km_per_s: VACUUM_SIGNAL_SPEED,
        }
    }

    /// Looks up a preset by its configuration name (`"fiber"` or `"vbg"`).
    pub fn preset(name: &str, coupling_efficiency: f64) -> Option<Self> {
        match name {
            "fiber" => Some(Self::fiber(coupling_efficiency)),
            "vbg" | "vacuum_beam_guide" => Some(Self::vacuum_beam_guide(coupling_efficiency)),
            _ => None,
        }
    }

    pub fn with_coupling(mut self, coupling_efficiency: f64) -> Self {
        self.coupling_efficiency = coupling_efficiency;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation_length_km > 0.0) || !self.attenuation_length_km.is_finite() {
            return Err(ModelError::Domain {
                name: "attenuation_length_km",
                value: self.attenuation_length_km,
                constraint: "must be finite and > 0",
            });
        }
        if !(self.coupling_efficiency > 0.0 && self.coupling_efficiency <= 1.0) {
            return Err(ModelError::Domain {
                name: "coupling_efficiency",
                value: self.coupling_efficiency,
                constraint: "must lie in (0, 1]",
            });
        }
        if !(self.signal_speed_km_per_s > 0.0) || !self.signal_speed_km_per_s.is_finite() {
            return Err(ModelError::Domain {
                name: "signal_speed_km_per_s",
                value: self.signal_speed_km_per_s,
                constraint: "must be finite and > 0",
            });
        }
        Ok(())
    }

    /// One-way classical signalling delay over `length_km` (s).
    pub fn signal_delay_s(&self, length_km: f64) -> f64 {
        length_km / self.signal_speed_km_per_s
    }
}

/// `exp(-L / L_att)`.
pub fn transmissivity(length_km: f64, channel: &ChannelModel) -> Result<f64> {
    check_range("length_km", length_km, 0.0, f64::INFINITY, "must be >= 0")?;
    Ok((-length_km / channel.attenuation_length_km).exp())
}

/// Single-trial probability of heralding entanglement between two adjacent
/// memories: `p = ½ η_c exp(-L₀ / L_att)`.
pub fn link_success_prob(spacing_km: f64, channel: &ChannelModel) -> Result<f64> {
    if !(spacing_km > 0.0) || !spacing_km.is_finite() {
        return Err(ModelError::Domain {
            name: "spacing_km",
            value: spacing_km,
            constraint: "must be finite and > 0",
        });
    }
    Ok(0.5 * channel.coupling_efficiency * transmissivity(spacing_km, channel)?)
}

/// Success probability after `memory_qubits × attempts` independent trials,
/// `1 - (1 - p)^(M·n_EG)`.
pub fn multiplexed_success(p: f64, memory_qubits: u32, attempts: u32) -> Result<f64> {
    check_range("p", p, 0.0, 1.0, "must lie in [0, 1]")?;
    if memory_qubits == 0 || attempts == 0 {
        return Err(ModelError::Domain {
            name: "memory_qubits * attempts",
            value: f64::from(memory_qubits) * f64::from(attempts),
            constraint: "must be >= 1",
        });
    }
    let trials = f64::from(memory_qubits) * f64::from(attempts);
    // expm1/ln_1p keep precision for p far below machine epsilon
    Ok(-(trials * (-p).ln_1p()).exp_m1())
}

/// Repeaterless secret-key capacity per optical mode, `-log₂(1 - η)`.
pub fn plob_capacity(transmissivity: f64) -> Result<f64> {
    if transmissivity == 1.0 {
        return Err(ModelError::Saturated);
    }
    check_range("transmissivity", transmissivity, 0.0, 1.0, "must lie in [0, 1)")?;
    Ok(-(-transmissivity).ln_1p() / std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn transmissivity_examples() {
        let fiber = ChannelModel::fiber(1.0);
        let vbg = ChannelModel::vacuum_beam_guide(1.0);
        assert_eq!(transmissivity(0.0, &fiber).unwrap(), 1.0);
        assert_relative_eq!(
            transmissivity(20.0, &fiber).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        // mpmath, 30 digits
        assert_relative_eq!(
            transmissivity(20.0, &vbg).unwrap(),
            0.999_523_922_884_499_86,
            max_relative = 1e-15
        );
        assert!((transmissivity(20.0, &vbg).unwrap() - (1.0 - 20.0 / 42000.0)).abs() < 1e-6);
        assert!(transmissivity(-1.0, &fiber).is_err());
    }

    #[test]
    fn link_success_examples() {
        let ideal = ChannelModel::fiber(1.0);
        assert_relative_eq!(link_success_prob(1e-12, &ideal).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            link_success_prob(20.0, &ideal).unwrap(),
            0.5 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            link_success_prob(100.0, &ChannelModel::fiber(0.9)).unwrap(),
            0.003_032_076_149_588_460_2,
            max_relative = 1e-14
        );
        assert!(link_success_prob(0.0, &ideal).is_err());
        assert!(link_success_prob(-3.0, &ideal).is_err());
    }

    #[test]
    fn multiplexing_examples() {
        assert_eq!(multiplexed_success(0.0, 10, 10).unwrap(), 0.0);
        assert_relative_eq!(multiplexed_success(0.5, 1, 1).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            multiplexed_success(0.1, 2, 3).unwrap(),
            0.468_559,
            max_relative = 1e-14
        );
        assert_eq!(multiplexed_success(1.0, 3, 1).unwrap(), 1.0);
        assert!(multiplexed_success(1.2, 1, 1).is_err());
        assert!(multiplexed_success(-0.1, 1, 1).is_err());
        assert!(multiplexed_success(0.1, 0, 1).is_err());
    }

    /// Every outcome string of six Bernoulli(0.1) trials, summed over the
    /// strings that contain at least one success.
    #[test]
    fn multiplexing_matches_enumeration() {
        let p = 0.1f64;
        let mut total = 0.0;
        for mask in 0u32..(1 << 6) {
            let ones = mask.count_ones() as i32;
            if ones > 0 {
                total += p.powi(ones) * (1.0 - p).powi(6 - ones);
            }
        }
        assert_relative_eq!(multiplexed_success(p, 2, 3).unwrap(), total, max_relative = 1e-13);
    }

    #[test]
    fn plob_examples() {
        assert_eq!(plob_capacity(0.0).unwrap(), 0.0);
        assert_relative_eq!(plob_capacity(0.5).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(plob_capacity(0.75).unwrap(), 2.0, max_relative = 1e-15);
        assert_eq!(plob_capacity(1.0), Err(ModelError::Saturated));
        assert!(plob_capacity(1.5).is_err());
        assert!(plob_capacity(-0.5).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(ChannelModel::fiber(0.5).attenuation_length_km, 20.0);
        assert_eq!(ChannelModel::vacuum_beam_guide(0.5).attenuation_length_km, 42_000.0);
        assert_eq!(ChannelModel::preset("vbg", 0.3).unwrap().medium, Medium::VacuumBeamGuide);
        assert!(ChannelModel::preset("copper", 0.3).is_none());
        assert!(ChannelModel::new(Medium::Custom, -1.0, 0.5, 1.0).is_err());
        assert!(ChannelModel::new(Medium::Custom, 10.0, 0.0, 1.0).is_err());
        assert!(ChannelModel::new(Medium::Custom, 10.0, 1.0, 1.0).is_ok());
    }
}
