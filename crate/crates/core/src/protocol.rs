//! Reading protocols: how an `n`-sensor panel is condensed into the
//! tri-state decision delivered to the intervention logic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sensor::{PanelSample, ThresholdConfig};
use crate::Result;

/// Sensor-system verdict. Neutral means "sensor system out of order";
/// downstream it acts as a non-trigger, exactly like Negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Positive,
    Negative,
    Neutral,
}

/// How a guarded protocol detects disagreement between its two sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisagreementMode {
    /// Readings disagree iff they are not bitwise equal. This is the
    /// analytically tractable mode: a sound sensor reproduces the true
    /// value exactly, so inequality means at least one defect (a.s.).
    ExactEquality,
    /// Readings disagree iff |left - right| >= d. Monte Carlo and flight
    /// simulation only; exact rates are not defined for this mode.
    Threshold,
}

/// A reading protocol over a fixed-arity panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolSpec {
    /// Always read sensor `index`.
    SingleSensor { index: usize },
    /// Per-flight alternation between the two sensors of a pair.
    Alternating { flight_parity: bool },
    /// Positive iff both sensors read above threshold.
    Conjunctive,
    /// Positive iff at least one sensor reads above threshold.
    Disjunctive,
    /// Disagreement check gates a single-sensor read; disagreement
    /// yields Neutral.
    GuardedSingle {
        lead: usize,
        mode: DisagreementMode,
    },
    /// Odd-panel boolean vote: Positive iff a majority of readings
    /// exceed the threshold.
    MajorityBoolean { n: usize },
    /// Odd-panel agreement vote: the value shared by at least two
    /// sensors decides; no shared value yields Neutral.
    MajorityAgreementGated { n: usize },
}

impl ProtocolSpec {
    /// Number of sensors the protocol reads.
    pub fn arity(&self) -> usize {
        match self {
            ProtocolSpec::SingleSensor { .. } => 1,
            ProtocolSpec::Alternating { .. }
            | ProtocolSpec::Conjunctive
            | ProtocolSpec::Disjunctive
            | ProtocolSpec::GuardedSingle { .. } => 2,
            ProtocolSpec::MajorityBoolean { n }
            | ProtocolSpec::MajorityAgreementGated { n } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProtocolSpec::SingleSensor { .. }
            | ProtocolSpec::Alternating { .. }
            | ProtocolSpec::Conjunctive
            | ProtocolSpec::Disjunctive => Ok(()),
            ProtocolSpec::GuardedSingle { lead, .. } => {
                if *lead < 2 {
                    Ok(())
                } else {
                    Err(Error::invalid("guarded lead sensor index must be 0 or 1"))
                }
            }
            ProtocolSpec::MajorityBoolean { n }
            | ProtocolSpec::MajorityAgreementGated { n } => {
                if *n >= 3 && *n % 2 == 1 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "majority protocols require odd n >= 3, got {n}"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolSpec::SingleSensor { .. } => write!(f, "single"),
            ProtocolSpec::Alternating { .. } => write!(f, "alternating"),
            ProtocolSpec::Conjunctive => write!(f, "conj2"),
            ProtocolSpec::Disjunctive => write!(f, "disj2"),
            ProtocolSpec::GuardedSingle { .. } => write!(f, "guarded2"),
            ProtocolSpec::MajorityBoolean { n } => write!(f, "majbool{n}"),
            ProtocolSpec::MajorityAgreementGated { n } => write!(f, "majgate{n}"),
        }
    }
}

impl FromStr for ProtocolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s {
            "single" => ProtocolSpec::SingleSensor { index: 0 },
            "alternating" => ProtocolSpec::Alternating {
                flight_parity: false,
            },
            "conj2" => ProtocolSpec::Conjunctive,
            "disj2" => ProtocolSpec::Disjunctive,
            "guarded2" => ProtocolSpec::GuardedSingle {
                lead: 0,
                mode: DisagreementMode::ExactEquality,
            },
            _ => {
                let parse_n = |rest: &str| -> Result<usize> {
                    rest.parse::<usize>()
                        .map_err(|_| Error::invalid(format!("unknown protocol token '{s}'")))
                };
                let spec = if let Some(rest) = s.strip_prefix("majbool") {
                    ProtocolSpec::MajorityBoolean { n: parse_n(rest)? }
                } else if let Some(rest) = s.strip_prefix("majgate") {
                    ProtocolSpec::MajorityAgreementGated { n: parse_n(rest)? }
                } else {
                    return Err(Error::invalid(format!("unknown protocol token '{s}'")));
                };
                spec
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Combine a panel sample into the tri-state decision.
pub fn decide(
    protocol: ProtocolSpec,
    sample: &PanelSample,
    thresholds: &ThresholdConfig,
) -> Result<TriState> {
    protocol.validate()?;
    let expected = protocol.arity();
    // A single-sensor read of a wider panel is fine; everything else
    // needs the exact arity.
    let arity_ok = match protocol {
        ProtocolSpec::SingleSensor { index } => index < sample.len(),
        _ => sample.len() == expected,
    };
    if !arity_ok {
        return Err(Error::ArityMismatch {
            expected,
            actual: sample.len(),
        });
    }

    let a = thresholds.trigger_threshold;
    let positive = |r: f64| r > a;
    let verdict = |p: bool| if p { TriState::Positive } else { TriState::Negative };

    let decision = match protocol {
        ProtocolSpec::SingleSensor { index } => verdict(positive(sample.readings[index])),
        ProtocolSpec::Alternating { flight_parity } => {
            let index = usize::from(flight_parity);
            verdict(positive(sample.readings[index]))
        }
        ProtocolSpec::Conjunctive => verdict(sample.readings.iter().all(|&r| positive(r))),
        ProtocolSpec::Disjunctive => verdict(sample.readings.iter().any(|&r| positive(r))),
        ProtocolSpec::GuardedSingle { lead, mode } => {
            let (l, r) = (sample.readings[0], sample.readings[1]);
            let disagree = match mode {
                DisagreementMode::ExactEquality => l.to_bits() != r.to_bits(),
                DisagreementMode::Threshold => {
                    let d = thresholds.disagreement_threshold.ok_or_else(|| {
                        Error::invalid("threshold disagreement mode requires d")
                    })?;
                    (l - r).abs() >= d
                }
            };
            if disagree {
                TriState::Neutral
            } else {
                verdict(positive(sample.readings[lead]))
            }
        }
        ProtocolSpec::MajorityBoolean { n } => {
            let votes = sample.readings.iter().filter(|&&r| positive(r)).count();
            verdict(votes * 2 > n)
        }
        ProtocolSpec::MajorityAgreementGated { .. } => {
            // Modal value shared exactly by >= 2 sensors; scanning in
            // sensor order makes the (measure-zero) multi-pair tie-break
            // deterministic: the pair containing the lowest index wins.
            let modal = sample.readings.iter().find(|&&v| {
                sample
                    .readings
                    .iter()
                    .filter(|&&w| w.to_bits() == v.to_bits())
                    .count()
                    >= 2
            });
            match modal {
                Some(&v) => verdict(positive(v)),
                None => TriState::Neutral,
            }
        }
    };
    Ok(decision)
}

/// Neutral and Negative both act as non-triggers downstream.
pub fn effective_trigger(decision: TriState) -> bool {
    decision == TriState::Positive
}
