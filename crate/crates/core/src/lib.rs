//! Reliability analysis of redundant angle-of-attack (AOA) sensor
//! architectures and the trim-intervention logic they feed.
//!
//! The crate has five parts:
//!
//! - [`sensor`]: a probabilistic sensor model (binary defect, uniform
//!   output when defective, exact output otherwise) and panel sampling;
//! - [`protocol`]: the reading protocols that combine panel readings into
//!   a tri-state decision (Positive / Negative / Neutral);
//! - [`analytics`]: exact false-positive / false-negative / neutral rates
//!   by exhaustive enumeration over defect subsets, a catalog of published
//!   closed forms (including erroneous ones, kept for auditing), and a
//!   Monte Carlo estimator that arbitrates between them;
//! - [`flight`]: a discrete-time flight state machine with intervention
//!   policies (legacy, upgraded, disabled) and fleet-level statistics;
//! - [`forensic`]: an ordinal plausibility scale, implication-graph
//!   consistency checking, and prior-odds x likelihood-ratio updating.
//!
//! All randomness flows through explicitly seeded substreams
//! ([`rng::substream`]); parallel and serial runs produce identical
//! results.

pub mod analytics;
pub mod error;
pub mod flight;
pub mod forensic;
pub mod protocol;
pub mod rng;
pub mod sensor;

pub use error::Error;
pub use protocol::{DisagreementMode, ProtocolSpec, TriState};
pub use sensor::{FaultModel, PanelSample, ThresholdConfig};

pub type Result<T> = std::result::Result<T, Error>;
