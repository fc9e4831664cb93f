//! Exact and Monte Carlo rates of false positives, false negatives, and
//! neutral outcomes per protocol.
//!
//! The exact engine enumerates all `2^n` defect subsets. Per subset the
//! conditional event probabilities are closed-form under the sensor
//! model: a defective reading exceeds the threshold with probability
//! `1 - a`, a sound sensor is deterministic, and two continuous readings
//! coincide with probability zero. This enumeration, not the published
//! closed forms, is the ground truth here; the published forms (two of
//! which simplify incorrectly) are kept verbatim in [`paper_formula`]
//! so their discrepancies can be asserted.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::protocol::{decide, DisagreementMode, ProtocolSpec, TriState};
use crate::rng::substream2;
use crate::sensor::{sample_panel, FaultModel, ThresholdConfig};
use crate::Result;

/// Which side of the trigger threshold the true AOA is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conditioning {
    /// AOA <= a: the false-positive side.
    BelowThreshold,
    /// AOA > a: the false-negative side.
    AboveThreshold,
}

/// How Neutral outcomes enter the false-negative rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeutralPolicy {
    /// Neutral counts as a missed trigger: fn = P(not Positive | AOA > a).
    NeutralCountsNegative,
    /// Condition on the system being in order:
    /// fn = P(Negative | AOA > a, not Neutral).
    NeutralExcluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    pub protocol: ProtocolSpec,
    pub fault: FaultModel,
    pub thresholds: ThresholdConfig,
    pub neutral_policy: NeutralPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSource {
    ExactEnumeration,
    PaperClosedForm,
    MonteCarlo,
}

impl RateSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateSource::ExactEnumeration => "exact-enumeration",
            RateSource::PaperClosedForm => "paper-closed-form",
            RateSource::MonteCarlo => "monte-carlo",
        }
    }
}

/// A set of rates for one query, with standard errors when estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub query: RateQuery,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_rate: f64,
    pub p_neutral: f64,
    pub source: RateSource,
    pub trials: Option<u64>,
    pub se_fp: Option<f64>,
    pub se_fn: Option<f64>,
    pub se_neutral: Option<f64>,
    pub seed: Option<u64>,
}

fn validate_query(query: &RateQuery) -> Result<()> {
    query.protocol.validate()?;
    FaultModel::new(query.fault.defect_probability)?;
    ThresholdConfig::new(
        query.thresholds.trigger_threshold,
        query.thresholds.disagreement_threshold,
    )?;
    Ok(())
}

/// P(decision Positive | defect subset, AOA side) and P(Neutral | subset)
/// under the continuous sensor model. Neutral is defect-driven only, so
/// it does not depend on the side.
fn subset_outcome(
    protocol: ProtocolSpec,
    mask: u32,
    a: f64,
    above: bool,
) -> Result<(f64, f64)> {
    let n = protocol.arity();
    let defects = (mask as usize).count_ones() as usize;
    let defective = |i: usize| mask & (1 << i) != 0;
    // P(reading_i > a | subset, side)
    let p_above = |i: usize| -> f64 {
        if defective(i) {
            1.0 - a
        } else if above {
            1.0
        } else {
            0.0
        }
    };

    let out = match protocol {
        ProtocolSpec::SingleSensor { .. } => (p_above(0), 0.0),
        ProtocolSpec::Alternating { flight_parity } => (p_above(usize::from(flight_parity)), 0.0),
        ProtocolSpec::Conjunctive => ((0..n).map(p_above).product(), 0.0),
        ProtocolSpec::Disjunctive => {
            let none: f64 = (0..n).map(|i| 1.0 - p_above(i)).product();
            (1.0 - none, 0.0)
        }
        ProtocolSpec::GuardedSingle { mode, .. } => {
            if mode != DisagreementMode::ExactEquality {
                return Err(Error::Unsupported(
                    "exact rates for guarded reading are defined in exact-equality mode only; \
                     use Monte Carlo for a disagreement threshold d"
                        .into(),
                ));
            }
            // Any defect makes the readings differ almost surely.
            if defects > 0 {
                (0.0, 1.0)
            } else {
                (if above { 1.0 } else { 0.0 }, 0.0)
            }
        }
        ProtocolSpec::MajorityBoolean { n } => {
            // Sound sensors vote as a block; defective ones vote
            // positive independently with probability 1 - a.
            let good_votes = if above { n - defects } else { 0 };
            let q = 1.0 - a;
            let mut p_pos = 0.0;
            let mut binom = 1.0; // C(defects, j)
            for j in 0..=defects {
                if good_votes + j > n / 2 {
                    p_pos += binom * q.powi(j as i32) * (1.0 - q).powi((defects - j) as i32);
                }
                binom = binom * (defects - j) as f64 / (j + 1) as f64;
            }
            (p_pos, 0.0)
        }
        ProtocolSpec::MajorityAgreementGated { n } => {
            // With >= 2 sound sensors the modal value is the true AOA;
            // otherwise no two readings coincide, almost surely.
            if n - defects >= 2 {
                (if above { 1.0 } else { 0.0 }, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
    };
    Ok(out)
}

/// Exact rates by exhaustive enumeration over the `2^n` defect subsets.
pub fn exact_rates(query: &RateQuery) -> Result<RateReport> {
    validate_query(query)?;
    let n = query.protocol.arity();
    if n > 20 {
        return Err(Error::invalid("enumeration supports at most 20 sensors"));
    }
    let f = query.fault.defect_probability;
    let a = query.thresholds.trigger_threshold;

    let mut fp = 0.0;
    let mut p_pos_above = 0.0;
    let mut p_neutral = 0.0;
    for mask in 0..(1u32 << n) {
        let k = mask.count_ones() as i32;
        let weight = f.powi(k) * (1.0 - f).powi(n as i32 - k);
        if weight == 0.0 {
            continue;
        }
        let (pos_below, neu) = subset_outcome(query.protocol, mask, a, false)?;
        let (pos_above, _) = subset_outcome(query.protocol, mask, a, true)?;
        fp += weight * pos_below;
        p_pos_above += weight * pos_above;
        p_neutral += weight * neu;
    }

    let fn_rate = match query.neutral_policy {
        NeutralPolicy::NeutralCountsNegative => 1.0 - p_pos_above,
        NeutralPolicy::NeutralExcluded => {
            let in_order = 1.0 - p_neutral;
            if in_order <= 0.0 {
                0.0
            } else {
                ((1.0 - p_pos_above - p_neutral) / in_order).max(0.0)
            }
        }
    };

    Ok(RateReport {
        query: *query,
        fp,
        fn_rate,
        p_neutral,
        source: RateSource::ExactEnumeration,
        trials: None,
        se_fp: None,
        se_fn: None,
        se_neutral: None,
        seed: None,
    })
}

/// Identifiers for the published closed-form result lines.
pub const PAPER_FORMULAS: &[&str] = &[
    "single-fp",
    "single-fn",
    "conj-fp",
    "conj-fn",
    "disj-fp",
    "disj-fn",
    "guarded-fn",
    "p-disagree",
    "maj3-no-agreement",
];

/// Evaluate a published closed form verbatim.
///
/// The catalog reproduces the printed result lines exactly, including the
/// two whose simplifications the enumeration engine shows to be wrong
/// (`conj-fn` and `disj-fn`). They are retained so the discrepancy can be
/// audited and regression-tested, not because they are correct.
pub fn paper_formula(name: &str, f: f64, a: f64) -> Result<f64> {
    let value = match name {
        "single-fp" => f * (1.0 - a),
        "single-fn" => f * a,
        "conj-fp" => f * f * (1.0 - a) * (1.0 - a),
        // Printed simplification; enumeration gives f*a*(2 - f*a).
        "conj-fn" => f * a * (4.0 - a - 2.0 * f),
        "disj-fp" => f * (1.0 - a) * (f * (1.0 + a) + 2.0 * (1.0 - f)),
        // Printed simplification; enumeration gives f^2 * a^2.
        "disj-fn" => f * f * a * (1.0 - a),
        "guarded-fn" => f * a,
        "p-disagree" => f * (2.0 - f),
        "maj3-no-agreement" => f * f * (3.0 - 2.0 * f),
        _ => return Err(Error::invalid(format!("unknown formula name '{name}'"))),
    };
    Ok(value)
}

/// Conditional distribution of the true AOA given the conditioning side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AoaSampler {
    /// Uniform on [0, a] (below side) or (a, 1] (above side).
    UniformConditional,
    /// A fixed value; must lie on the requested side of the threshold.
    Fixed(f64),
}

impl AoaSampler {
    fn sample(&self, side: Conditioning, a: f64, rng: &mut impl Rng) -> Result<f64> {
        match *self {
            AoaSampler::UniformConditional => Ok(match side {
                Conditioning::BelowThreshold => a * rng.gen::<f64>(),
                Conditioning::AboveThreshold => {
                    loop {
                        let x = a + (1.0 - a) * rng.gen::<f64>();
                        if x > a {
                            break x;
                        }
                    }
                }
            }),
            AoaSampler::Fixed(x) => {
                let ok = match side {
                    Conditioning::BelowThreshold => x <= a && x >= 0.0,
                    Conditioning::AboveThreshold => x > a && x <= 1.0,
                };
                if ok {
                    Ok(x)
                } else {
                    Err(Error::invalid(format!(
                        "fixed AOA {x} is not on the conditioned side of a={a}"
                    )))
                }
            }
        }
    }
}

/// Monte Carlo estimate of the same rates, with binomial standard errors.
///
/// Trials parallelize across threads in fixed chunks; chunk `c` draws
/// from the stream `(seed, side, c)`, so results do not depend on the
/// degree of parallelism.
pub fn monte_carlo_rates(
    query: &RateQuery,
    sampler: AoaSampler,
    trials: u64,
    seed: u64,
) -> Result<RateReport> {
    validate_query(query)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let n = query.protocol.arity();
    let a = query.thresholds.trigger_threshold;

    const CHUNK: u64 = 4096;
    let run_side = |side: Conditioning| -> Result<(u64, u64, u64)> {
        let side_tag = match side {
            Conditioning::BelowThreshold => 0u64,
            Conditioning::AboveThreshold => 1u64,
        };
        let chunks = trials.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|chunk| -> Result<(u64, u64, u64)> {
                let mut rng = substream2(seed, side_tag, chunk);
                let mut tally = (0u64, 0u64, 0u64);
                let lo = chunk * CHUNK;
                for _ in lo..(lo + CHUNK).min(trials) {
                    let aoa = sampler.sample(side, a, &mut rng)?;
                    let panel = sample_panel(aoa, query.fault, n, &mut rng)?;
                    let d = decide(query.protocol, &panel, &query.thresholds)?;
                    tally.0 += u64::from(d == TriState::Positive);
                    tally.1 += u64::from(d == TriState::Negative);
                    tally.2 += u64::from(d == TriState::Neutral);
                }
                Ok(tally)
            })
            .try_reduce(
                || (0, 0, 0),
                |x, y| Ok((x.0 + y.0, x.1 + y.1, x.2 + y.2)),
            )
    };

    let (pos_below, _, neu_below) = run_side(Conditioning::BelowThreshold)?;
    let (pos_above, neg_above, neu_above) = run_side(Conditioning::AboveThreshold)?;

    let t = trials as f64;
    let fp = pos_below as f64 / t;
    let p_neutral = neu_below as f64 / t;
    let fn_rate = match query.neutral_policy {
        NeutralPolicy::NeutralCountsNegative => (neg_above + neu_above) as f64 / t,
        NeutralPolicy::NeutralExcluded => {
            let in_order = trials - neu_above;
            if in_order == 0 {
                0.0
            } else {
                neg_above as f64 / in_order as f64
            }
        }
    };
    let se = |p: f64, n: f64| (p * (1.0 - p) / n).sqrt();
    let fn_n = match query.neutral_policy {
        NeutralPolicy::NeutralCountsNegative => t,
        NeutralPolicy::NeutralExcluded => ((trials - neu_above) as f64).max(1.0),
    };
    let _ = pos_above;

    Ok(RateReport {
        query: *query,
        fp,
        fn_rate,
        p_neutral,
        source: RateSource::MonteCarlo,
        trials: Some(trials),
        se_fp: Some(se(fp, t)),
        se_fn: Some(se(fn_rate, fn_n)),
        se_neutral: Some(se(p_neutral, t)),
        seed: Some(seed),
    })
}

/// Outcome of comparing an exact (or printed) rate against a Monte Carlo
/// estimate at a `k_sigma` acceptance band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateComparison {
    pub z_fp: f64,
    pub z_fn: f64,
    pub z_neutral: f64,
    pub pass_fp: bool,
    pub pass_fn: bool,
    pub pass_neutral: bool,
    pub k_sigma: f64,
}

impl RateComparison {
    pub fn pass(&self) -> bool {
        self.pass_fp && self.pass_fn && self.pass_neutral
    }
}

/// Per-rate z-scores of `mc` against `exact`.
///
/// The null standard error is the Monte Carlo report's own SE; when the
/// empirical SE degenerates to zero (no observed events) the binomial SE
/// at the exact rate is used instead. A zero SE on both sides demands
/// exact agreement.
pub fn compare_reports(exact: &RateReport, mc: &RateReport, k_sigma: f64) -> Result<RateComparison> {
    if exact.query != mc.query {
        return Err(Error::invalid("reports answer different queries"));
    }
    let trials = mc
        .trials
        .ok_or_else(|| Error::invalid("comparison target has no trial count"))?
        as f64;

    let zscore = |e: f64, m: f64, se_mc: Option<f64>| -> (f64, bool) {
        let se_mc = se_mc.unwrap_or(0.0);
        let se = if se_mc > 0.0 {
            se_mc
        } else {
            (e * (1.0 - e) / trials).sqrt()
        };
        let diff = (e - m).abs();
        if se > 0.0 {
            (diff / se, diff / se <= k_sigma)
        } else if diff == 0.0 {
            (0.0, true)
        } else {
            (f64::INFINITY, false)
        }
    };

    let (z_fp, pass_fp) = zscore(exact.fp, mc.fp, mc.se_fp);
    let (z_fn, pass_fn) = zscore(exact.fn_rate, mc.fn_rate, mc.se_fn);
    let (z_neutral, pass_neutral) = zscore(exact.p_neutral, mc.p_neutral, mc.se_neutral);
    Ok(RateComparison {
        z_fp,
        z_fn,
        z_neutral,
        pass_fp,
        pass_fn,
        pass_neutral,
        k_sigma,
    })
}
