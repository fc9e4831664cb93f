//! Discrete-time flight simulation of the sensor/protocol stack feeding
//! an automatic trim-intervention component, under three behavioral
//! variants: the legacy algorithm, its upgrade (single intervention per
//! episode, disabled on disagreement, yoke-overridable, moderated
//! magnitude), and a variant with interventions disabled entirely.
//!
//! Randomness is split into per-flight channels (AOA process, sensor
//! readings, bird-strike schedule, pilot behavior) derived from
//! `(seed, flight_index, channel)`. The AOA and sensor channels consume
//! draws identically under every policy, so two policies replayed with
//! the same seed see the same angle history and the same panel readings;
//! only the interventions differ.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::protocol::{decide, effective_trigger, DisagreementMode, ProtocolSpec, TriState};
use crate::rng::substream2;
use crate::sensor::{draw_defect_mask, sample_panel_with_mask, FaultModel, ThresholdConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachBucket {
    Low,
    Mid,
    High,
}

/// Trim units per intervention, keyed by Mach bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeTable {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

impl MagnitudeTable {
    pub fn uniform(units: f64) -> Self {
        MagnitudeTable {
            low: units,
            mid: units,
            high: units,
        }
    }

    pub fn get(&self, bucket: MachBucket) -> f64 {
        match bucket {
            MachBucket::Low => self.low,
            MachBucket::Mid => self.mid,
            MachBucket::High => self.high,
        }
    }

    fn dominates(&self, other: &MagnitudeTable) -> bool {
        self.low >= other.low && self.mid >= other.mid && self.high >= other.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    McasLegacy,
    Mcasu,
    MaxMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisagreePolicy {
    Ignore,
    DisableForFlight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepeatPolicy {
    RepeatAfterPause,
    OncePerEpisode,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverridePolicy {
    YokeOverrides,
    YokeIgnored,
}

/// Behavioral policy of one intervention-logic variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantPolicy {
    pub name: VariantName,
    pub disagree_policy: DisagreePolicy,
    pub repeat_policy: RepeatPolicy,
    pub override_policy: OverridePolicy,
    pub intervention_magnitude: MagnitudeTable,
    /// Time steps over which one intervention spreads its trim change.
    pub intervention_duration: u32,
    /// Minimum steps between interventions under repeat-after-pause.
    pub pause_steps: u32,
}

impl VariantPolicy {
    /// Legacy behavior: repeats after a pause, ignores disagreement,
    /// ignores yoke input. The 2.0 trim-unit magnitude is an arbitrary
    /// scale, not a documented value.
    pub fn mcas_legacy() -> Self {
        VariantPolicy {
            name: VariantName::McasLegacy,
            disagree_policy: DisagreePolicy::Ignore,
            repeat_policy: RepeatPolicy::RepeatAfterPause,
            override_policy: OverridePolicy::YokeIgnored,
            intervention_magnitude: MagnitudeTable::uniform(2.0),
            intervention_duration: 5,
            pause_steps: 5,
        }
    }

    /// Upgraded behavior: disabled for the flight on disagreement, at
    /// most one intervention per episode, yoke counteraction terminates
    /// an intervention, magnitudes moderated to half the legacy scale.
    pub fn mcasu() -> Self {
        VariantPolicy {
            name: VariantName::Mcasu,
            disagree_policy: DisagreePolicy::DisableForFlight,
            repeat_policy: RepeatPolicy::OncePerEpisode,
            override_policy: OverridePolicy::YokeOverrides,
            intervention_magnitude: MagnitudeTable::uniform(1.0),
            intervention_duration: 5,
            pause_steps: 5,
        }
    }

    /// Interventions disabled entirely.
    pub fn max_min() -> Self {
        VariantPolicy {
            name: VariantName::MaxMin,
            disagree_policy: DisagreePolicy::Ignore,
            repeat_policy: RepeatPolicy::Never,
            override_policy: OverridePolicy::YokeOverrides,
            intervention_magnitude: MagnitudeTable::uniform(0.0),
            intervention_duration: 1,
            pause_steps: 0,
        }
    }

    pub fn by_name(name: VariantName) -> Self {
        match name {
            VariantName::McasLegacy => Self::mcas_legacy(),
            VariantName::Mcasu => Self::mcasu(),
            VariantName::MaxMin => Self::max_min(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.name {
            VariantName::Mcasu => {
                if self.disagree_policy != DisagreePolicy::DisableForFlight
                    || self.repeat_policy != RepeatPolicy::OncePerEpisode
                    || self.override_policy != OverridePolicy::YokeOverrides
                {
                    return Err(Error::invalid(
                        "upgraded variant requires disable-for-flight, once-per-episode, yoke-overrides",
                    ));
                }
                if !Self::mcas_legacy()
                    .intervention_magnitude
                    .dominates(&self.intervention_magnitude)
                {
                    return Err(Error::invalid(
                        "upgraded magnitudes must not exceed legacy magnitudes per bucket",
                    ));
                }
            }
            VariantName::MaxMin => {
                if self.repeat_policy != RepeatPolicy::Never {
                    return Err(Error::invalid("max-min variant never intervenes"));
                }
            }
            VariantName::McasLegacy => {}
        }
        if self.intervention_duration == 0 {
            return Err(Error::invalid("intervention duration must be at least 1"));
        }
        Ok(())
    }
}

/// Clamped first-order autoregressive AOA process on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoaProcess {
    pub mu: f64,
    pub rho: f64,
    pub sigma: f64,
    pub init: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirdStrike {
    pub prob: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotModel {
    /// Pilot cuts electric trim after observing this many interventions.
    pub cutout_after: Option<u32>,
    /// Per-step probability of yoke counteraction during an intervention.
    pub counteract_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub steps: u32,
    pub aoa_process: AoaProcess,
    pub bird_strike: BirdStrike,
    pub mach_profile: Vec<MachBucket>,
    pub pilot: PilotModel,
    pub protocol: ProtocolSpec,
    pub thresholds: ThresholdConfig,
    pub fault: FaultModel,
    pub seed: u64,
    /// Episode ends after this many consecutive non-positive decisions.
    pub episode_reset_steps: u32,
    /// Consecutive un-countered completed interventions flagged as runaway.
    pub runaway_limit: u32,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        let p = &self.aoa_process;
        if !(p.mu > 0.0 && p.mu < 1.0) {
            return Err(Error::invalid("AOA process mean must be in (0,1)"));
        }
        if !(0.0..1.0).contains(&p.rho) {
            return Err(Error::invalid("AOA persistence must be in [0,1)"));
        }
        if !(p.sigma >= 0.0) {
            return Err(Error::invalid("AOA volatility must be non-negative"));
        }
        if !(0.0..=1.0).contains(&p.init) {
            return Err(Error::invalid("AOA initial value must be in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.bird_strike.prob) {
            return Err(Error::invalid("bird strike probability must be in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.pilot.counteract_prob) {
            return Err(Error::invalid("counteract probability must be in [0,1]"));
        }
        if self.mach_profile.is_empty() {
            return Err(Error::invalid("mach profile must not be empty"));
        }
        if self.episode_reset_steps == 0 {
            return Err(Error::invalid("episode reset steps must be at least 1"));
        }
        self.protocol.validate()?;
        FaultModel::new(self.fault.defect_probability)?;
        ThresholdConfig::new(
            self.thresholds.trigger_threshold,
            self.thresholds.disagreement_threshold,
        )?;
        if matches!(
            self.protocol,
            ProtocolSpec::GuardedSingle {
                mode: DisagreementMode::Threshold,
                ..
            }
        ) && self.thresholds.disagreement_threshold.is_none()
        {
            return Err(Error::invalid(
                "threshold disagreement mode requires thresholds.d",
            ));
        }
        Ok(())
    }

    /// Mach bucket in effect at `step`, from the proportional schedule.
    pub fn mach_at(&self, step: u32) -> MachBucket {
        let idx = (step as usize * self.mach_profile.len()) / self.steps as usize;
        self.mach_profile[idx.min(self.mach_profile.len() - 1)]
    }
}

/// On-disk scenario schema. Parsing is strict: unknown keys are errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    steps: u32,
    aoa_process: AoaProcessFile,
    bird_strike: BirdStrikeFile,
    mach_profile: Vec<MachBucket>,
    pilot: PilotFile,
    protocol: String,
    fault: FaultFile,
    thresholds: ThresholdFile,
    policy: VariantName,
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AoaProcessFile {
    mu: f64,
    rho: f64,
    sigma: f64,
    init: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BirdStrikeFile {
    prob: f64,
    enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PilotFile {
    cutout_after: Option<u32>,
    counteract_prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultFile {
    f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdFile {
    a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
}

/// Parse a scenario file into a validated config and the named policy.
///
/// A `guarded2` protocol switches to threshold-disagreement mode when
/// `thresholds.d` is present.
pub fn load_scenario(json: &str) -> Result<(ScenarioConfig, VariantPolicy)> {
    let file: ScenarioFile =
        serde_json::from_str(json).map_err(|e| Error::invalid(e.to_string()))?;
    let mut protocol: ProtocolSpec = file.protocol.parse()?;
    if let ProtocolSpec::GuardedSingle { ref mut mode, .. } = protocol {
        if file.thresholds.d.is_some() {
            *mode = DisagreementMode::Threshold;
        }
    }
    let config = ScenarioConfig {
        steps: file.steps,
        aoa_process: AoaProcess {
            mu: file.aoa_process.mu,
            rho: file.aoa_process.rho,
            sigma: file.aoa_process.sigma,
            init: file.aoa_process.init,
        },
        bird_strike: BirdStrike {
            prob: file.bird_strike.prob,
            enabled: file.bird_strike.enabled,
        },
        mach_profile: file.mach_profile,
        pilot: PilotModel {
            cutout_after: file.pilot.cutout_after,
            counteract_prob: file.pilot.counteract_prob,
        },
        protocol,
        thresholds: ThresholdConfig::new(file.thresholds.a, file.thresholds.d)?,
        fault: FaultModel::new(file.fault.f)?,
        seed: file.seed,
        episode_reset_steps: 10,
        runaway_limit: 3,
    };
    config.validate()?;
    let policy = VariantPolicy::by_name(file.policy);
    Ok((config, policy))
}

/// Result of one simulated flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightOutcome {
    pub interventions: u32,
    pub disabled_at: Option<u32>,
    pub disagreement_events: u32,
    pub max_trim_excursion: f64,
    pub cutout_engaged_at: Option<u32>,
    pub episodes: u32,
    pub runaway_flag: bool,
}

/// What happened during one step; consumed by trace-level tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepEvents {
    pub step: u32,
    pub decision: TriState,
    pub intervention_started: bool,
    pub trim_delta: f64,
    pub disabled_now: bool,
    pub countered: bool,
    pub cutout_now: bool,
}

#[derive(Debug, Clone, Copy)]
struct ActiveIntervention {
    remaining: u32,
    per_step: f64,
}

/// Mutable per-flight state, including the per-channel RNG streams.
#[derive(Debug, Clone)]
pub struct FlightState {
    pub step: u32,
    pub aoa: f64,
    pub trim: f64,
    pub defect_mask: Vec<bool>,
    pub outcome: FlightOutcome,
    active: Option<ActiveIntervention>,
    episode_active: bool,
    intervened_this_episode: bool,
    consecutive_nonpositive: u32,
    pause_remaining: u32,
    consecutive_uncountered: u32,
    strike: Option<(u32, usize)>,
    aoa_rng: rand_chacha::ChaCha8Rng,
    sensor_rng: rand_chacha::ChaCha8Rng,
    pilot_rng: rand_chacha::ChaCha8Rng,
}

// RNG channel ids within a flight.
const CH_AOA: u64 = 0;
const CH_SENSOR: u64 = 1;
const CH_STRIKE: u64 = 2;
const CH_PILOT: u64 = 3;
const CH_DEFECT: u64 = 4;

impl FlightState {
    /// Initialize flight `flight_index` of the run seeded by `seed`.
    /// Defect flags and the bird-strike schedule are drawn here, once
    /// per flight.
    pub fn init(config: &ScenarioConfig, seed: u64, flight_index: u64) -> Result<Self> {
        config.validate()?;
        let channel = |ch: u64| substream2(seed, flight_index.wrapping_mul(8).wrapping_add(ch), 0);
        let n = config.protocol.arity();
        let mut defect_rng = channel(CH_DEFECT);
        let defect_mask = draw_defect_mask(config.fault, n, &mut defect_rng)?;

        let mut strike_rng = channel(CH_STRIKE);
        let strike = if config.bird_strike.enabled
            && strike_rng.gen::<f64>() < config.bird_strike.prob
        {
            let t = strike_rng.gen_range(0..config.steps);
            let s = strike_rng.gen_range(0..n);
            Some((t, s))
        } else {
            None
        };

        Ok(FlightState {
            step: 0,
            aoa: config.aoa_process.init,
            trim: 0.0,
            defect_mask,
            outcome: FlightOutcome {
                interventions: 0,
                disabled_at: None,
                disagreement_events: 0,
                max_trim_excursion: 0.0,
                cutout_engaged_at: None,
                episodes: 0,
                runaway_flag: false,
            },
            active: None,
            episode_active: false,
            intervened_this_episode: false,
            consecutive_nonpositive: 0,
            pause_remaining: 0,
            consecutive_uncountered: 0,
            strike,
            aoa_rng: channel(CH_AOA),
            sensor_rng: channel(CH_SENSOR),
            pilot_rng: channel(CH_PILOT),
        })
    }

    fn record_trim(&mut self, delta: f64) {
        self.trim += delta;
        if self.trim.abs() > self.outcome.max_trim_excursion {
            self.outcome.max_trim_excursion = self.trim.abs();
        }
    }
}

/// Advance the flight one time step.
pub fn step_flight(
    state: &mut FlightState,
    config: &ScenarioConfig,
    policy: &VariantPolicy,
) -> Result<StepEvents> {
    policy.validate()?;
    let t = state.step;
    let mut events = StepEvents {
        step: t,
        decision: TriState::Negative,
        intervention_started: false,
        trim_delta: 0.0,
        disabled_now: false,
        countered: false,
        cutout_now: false,
    };

    // AOA dynamics: clamped AR(1). One normal draw per step under every
    // policy, so the angle history is policy-independent.
    let p = &config.aoa_process;
    let noise = if p.sigma > 0.0 {
        Normal::new(0.0, p.sigma)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(&mut state.aoa_rng)
    } else {
        let _ = state.aoa_rng.gen::<f64>();
        0.0
    };
    state.aoa = (p.mu + p.rho * (state.aoa - p.mu) + noise).clamp(0.0, 1.0);

    // A struck vane stays defective for the rest of the flight.
    if let Some((strike_t, sensor)) = state.strike {
        if t >= strike_t {
            state.defect_mask[sensor] = true;
        }
    }

    let panel = sample_panel_with_mask(state.aoa, &state.defect_mask, &mut state.sensor_rng)?;
    let decision = decide(config.protocol, &panel, &config.thresholds)?;
    events.decision = decision;

    if decision == TriState::Neutral {
        state.outcome.disagreement_events += 1;
        if policy.disagree_policy == DisagreePolicy::DisableForFlight
            && state.outcome.disabled_at.is_none()
        {
            state.outcome.disabled_at = Some(t);
            events.disabled_now = true;
            // Disabling cancels any intervention in flight.
            state.active = None;
        }
    }

    // Episode bookkeeping.
    if decision == TriState::Positive {
        state.consecutive_nonpositive = 0;
        if !state.episode_active {
            state.episode_active = true;
            state.intervened_this_episode = false;
            state.outcome.episodes += 1;
        }
    } else {
        state.consecutive_nonpositive += 1;
        if state.episode_active && state.consecutive_nonpositive >= config.episode_reset_steps {
            state.episode_active = false;
            state.intervened_this_episode = false;
        }
    }

    // Progress an intervention already in flight.
    if let Some(mut active) = state.active.take() {
        state.record_trim(active.per_step);
        events.trim_delta += active.per_step;
        active.remaining -= 1;

        let countered = policy.override_policy == OverridePolicy::YokeOverrides
            && config.pilot.counteract_prob > 0.0
            && state.pilot_rng.gen::<f64>() < config.pilot.counteract_prob;
        if countered {
            events.countered = true;
            state.consecutive_uncountered = 0;
            state.pause_remaining = policy.pause_steps;
        } else if active.remaining == 0 {
            state.consecutive_uncountered += 1;
            if state.consecutive_uncountered >= config.runaway_limit {
                state.outcome.runaway_flag = true;
            }
            state.pause_remaining = policy.pause_steps;
        } else {
            state.active = Some(active);
        }
    } else if state.pause_remaining > 0 {
        state.pause_remaining -= 1;
    }

    // Possibly start a new intervention.
    let disabled = state.outcome.disabled_at.is_some();
    let cutout = state.outcome.cutout_engaged_at.is_some();
    if effective_trigger(decision) && !disabled && !cutout && state.active.is_none() {
        let allowed = match policy.repeat_policy {
            RepeatPolicy::Never => false,
            RepeatPolicy::OncePerEpisode => !state.intervened_this_episode,
            RepeatPolicy::RepeatAfterPause => state.pause_remaining == 0,
        };
        if allowed {
            state.outcome.interventions += 1;
            state.intervened_this_episode = true;
            events.intervention_started = true;
            let magnitude = policy.intervention_magnitude.get(config.mach_at(t));
            let per_step = magnitude / policy.intervention_duration as f64;
            state.record_trim(per_step);
            events.trim_delta += per_step;
            if policy.intervention_duration > 1 {
                state.active = Some(ActiveIntervention {
                    remaining: policy.intervention_duration - 1,
                    per_step,
                });
            } else {
                state.consecutive_uncountered += 1;
                if state.consecutive_uncountered >= config.runaway_limit {
                    state.outcome.runaway_flag = true;
                }
                state.pause_remaining = policy.pause_steps;
            }
            if let Some(limit) = config.pilot.cutout_after {
                if state.outcome.interventions >= limit {
                    state.outcome.cutout_engaged_at = Some(t);
                    events.cutout_now = true;
                    state.active = None;
                }
            }
        }
    }

    state.step += 1;
    Ok(events)
}

/// Run one flight to completion. Equivalent to the first flight of a
/// fleet seeded with `config.seed`.
pub fn run_flight(config: &ScenarioConfig, policy: &VariantPolicy) -> Result<FlightOutcome> {
    Ok(run_flight_traced(config, policy)?.0)
}

/// Like [`run_flight`] but also returns the per-step event trace.
pub fn run_flight_traced(
    config: &ScenarioConfig,
    policy: &VariantPolicy,
) -> Result<(FlightOutcome, Vec<StepEvents>)> {
    run_indexed_flight_traced(config, policy, config.seed, 0)
}

fn run_indexed_flight_traced(
    config: &ScenarioConfig,
    policy: &VariantPolicy,
    seed: u64,
    flight_index: u64,
) -> Result<(FlightOutcome, Vec<StepEvents>)> {
    let mut state = FlightState::init(config, seed, flight_index)?;
    let mut trace = Vec::with_capacity(config.steps as usize);
    for _ in 0..config.steps {
        trace.push(step_flight(&mut state, config, policy)?);
    }
    Ok((state.outcome, trace))
}

/// Aggregated outcomes over a fleet of flights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetStats {
    pub flights: u64,
    pub disabled_fraction: f64,
    pub disagreement_fraction: f64,
    pub runaway_fraction: f64,
    pub mean_interventions: f64,
    pub se_disabled: f64,
    pub se_disagreement: f64,
    pub se_runaway: f64,
    pub seed: u64,
}

/// Run `n_flights` independent flights with per-flight substreams and
/// aggregate. Flights execute in parallel; all reductions are integer
/// sums, so the aggregate does not depend on scheduling.
pub fn run_fleet(
    config: &ScenarioConfig,
    policy: &VariantPolicy,
    n_flights: u64,
    seed: u64,
) -> Result<FleetStats> {
    if n_flights == 0 {
        return Err(Error::invalid("fleet needs at least one flight"));
    }
    config.validate()?;
    policy.validate()?;

    let (disabled, disagreed, runaway, interventions) = (0..n_flights)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64, u64, u64)> {
            let (outcome, _) = run_indexed_flight_traced(config, policy, seed, i)?;
            Ok((
                u64::from(outcome.disabled_at.is_some()),
                u64::from(outcome.disagreement_events > 0),
                u64::from(outcome.runaway_flag),
                u64::from(outcome.interventions),
            ))
        })
        .try_reduce(
            || (0, 0, 0, 0),
            |x, y| Ok((x.0 + y.0, x.1 + y.1, x.2 + y.2, x.3 + y.3)),
        )?;

    let n = n_flights as f64;
    let frac = |c: u64| c as f64 / n;
    let se = |p: f64| (p * (1.0 - p) / n).sqrt();
    let (p_dis, p_neq, p_run) = (frac(disabled), frac(disagreed), frac(runaway));
    Ok(FleetStats {
        flights: n_flights,
        disabled_fraction: p_dis,
        disagreement_fraction: p_neq,
        runaway_fraction: p_run,
        mean_interventions: interventions as f64 / n,
        se_disabled: se(p_dis),
        se_disagreement: se(p_neq),
        se_runaway: se(p_run),
        seed,
    })
}
