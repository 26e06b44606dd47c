//! Entanglement-distribution and cost models for first-, second- and
//! third-generation quantum repeater chains over optical fiber and vacuum
//! beam guides.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: transmissivity, heralded link success, multiplexing and the
//!   repeaterless PLOB capacity.
//! - [`state`]: Bell-diagonal two-qubit states, depolarising noise and the
//!   asymptotic BB84 secret fraction.
//! - [`protocols`]: BBPSSW/DEJMPS purification, entanglement swapping and a
//!   16×16 density-matrix circuit oracle.
//! - [`generations`]: rate, fidelity and resource models per repeater
//!   generation plus a Monte Carlo validator for the first-generation timing.
//! - [`cost`]: the qubit·time per secret bit per km cost coefficient and an
//!   exhaustive grid optimizer.
//! - [`scenario`]: declarative run configurations, builtin figure scenarios
//!   and CSV reporting.

pub mod channel;
pub mod cost;
pub mod error;
pub mod generations;
pub mod protocols;
pub mod scenario;
pub mod state;

pub use channel::{ChannelModel, Medium};
pub use cost::{CostReport, SearchSpace};
pub use error::{ModelError, Result};
pub use generations::{CodeParams, Generation, PerformanceReport, RepeaterConfig};
pub use protocols::{PurificationOutcome, PurificationProtocol, PurificationSchedule};
pub use state::BellDiagonalState;
