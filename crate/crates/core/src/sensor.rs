//! Probabilistic AOA sensor model.
//!
//! A sensor is either defective (with probability `f`) or perfect. A
//! perfect sensor reports the true angle of attack exactly; a defective
//! one reports a value uniform on `[0, 1]`, independent of the true
//! angle. All angles are normalized to `[0, 1]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Per-sensor defect probability `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultModel {
    pub defect_probability: f64,
}

impl FaultModel {
    pub fn new(defect_probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&defect_probability) {
            return Err(Error::invalid(format!(
                "defect probability must be in [0,1], got {defect_probability}"
            )));
        }
        Ok(FaultModel { defect_probability })
    }
}

/// Trigger threshold `a` and optional disagreement threshold `d`, both in (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub trigger_threshold: f64,
    pub disagreement_threshold: Option<f64>,
}

impl ThresholdConfig {
    pub fn new(trigger_threshold: f64, disagreement_threshold: Option<f64>) -> Result<Self> {
        if !(trigger_threshold > 0.0 && trigger_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "trigger threshold must be in (0,1), got {trigger_threshold}"
            )));
        }
        if let Some(d) = disagreement_threshold {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::invalid(format!(
                    "disagreement threshold must be in (0,1), got {d}"
                )));
            }
        }
        Ok(ThresholdConfig {
            trigger_threshold,
            disagreement_threshold,
        })
    }
}

/// One sampling instant of an `n`-sensor panel.
///
/// Non-defective sensors report `true_aoa` bit-identically; agreement
/// between sensors is exact floating-point equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSample {
    pub true_aoa: f64,
    pub defect_mask: Vec<bool>,
    pub readings: Vec<f64>,
}

impl PanelSample {
    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

/// Draw `n` independent defect flags, each true with probability `f`.
pub fn draw_defect_mask(fault: FaultModel, n: usize, rng: &mut impl Rng) -> Result<Vec<bool>> {
    if n == 0 {
        return Err(Error::invalid("sensor count must be at least 1"));
    }
    let f = fault.defect_probability;
    Ok((0..n).map(|_| rng.gen::<f64>() < f).collect())
}

/// Read one sensor: the exact true value when sound, uniform on [0,1]
/// when defective.
pub fn read_sensor(true_aoa: f64, defective: bool, rng: &mut impl Rng) -> Result<f64> {
    if !(0.0..=1.0).contains(&true_aoa) {
        return Err(Error::invalid(format!(
            "true AOA must be in [0,1], got {true_aoa}"
        )));
    }
    if defective {
        Ok(rng.gen::<f64>())
    } else {
        Ok(true_aoa)
    }
}

/// Draw a defect mask once and read every sensor under it.
pub fn sample_panel(
    true_aoa: f64,
    fault: FaultModel,
    n: usize,
    rng: &mut impl Rng,
) -> Result<PanelSample> {
    let defect_mask = draw_defect_mask(fault, n, rng)?;
    sample_panel_with_mask(true_aoa, &defect_mask, rng)
}

/// Read every sensor under a pre-drawn defect mask. Used by the flight
/// simulation, where defects are drawn once per flight rather than once
/// per time step.
pub fn sample_panel_with_mask(
    true_aoa: f64,
    defect_mask: &[bool],
    rng: &mut impl Rng,
) -> Result<PanelSample> {
    if defect_mask.is_empty() {
        return Err(Error::invalid("sensor count must be at least 1"));
    }
    let readings = defect_mask
        .iter()
        .map(|&d| read_sensor(true_aoa, d, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(PanelSample {
        true_aoa,
        defect_mask: defect_mask.to_vec(),
        readings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn fault_model_bounds() {
        assert!(FaultModel::new(0.0).is_ok());
        assert!(FaultModel::new(1.0).is_ok());
        assert!(FaultModel::new(-0.1).is_err());
        assert!(FaultModel::new(1.1).is_err());
        assert!(FaultModel::new(f64::NAN).is_err());
    }

    #[test]
    fn threshold_bounds() {
        assert!(ThresholdConfig::new(0.5, None).is_ok());
        assert!(ThresholdConfig::new(0.0, None).is_err());
        assert!(ThresholdConfig::new(1.0, None).is_err());
        assert!(ThresholdConfig::new(0.5, Some(0.0)).is_err());
        assert!(ThresholdConfig::new(0.5, Some(0.99)).is_ok());
    }

    #[test]
    fn zero_and_certain_defect_masks() {
        let mut rng = substream(1, 0);
        for _ in 0..100 {
            let mask = draw_defect_mask(FaultModel::new(0.0).unwrap(), 3, &mut rng).unwrap();
            assert_eq!(mask, vec![false, false, false]);
            let mask = draw_defect_mask(FaultModel::new(1.0).unwrap(), 2, &mut rng).unwrap();
            assert_eq!(mask, vec![true, true]);
        }
    }

    #[test]
    fn empty_panel_rejected() {
        let mut rng = substream(1, 0);
        assert!(draw_defect_mask(FaultModel::new(0.5).unwrap(), 0, &mut rng).is_err());
        assert!(sample_panel_with_mask(0.5, &[], &mut rng).is_err());
    }

    #[test]
    fn sound_sensor_is_identity() {
        let mut rng = substream(2, 0);
        assert_eq!(read_sensor(0.42, false, &mut rng).unwrap(), 0.42);
    }

    #[test]
    fn out_of_range_aoa_rejected() {
        let mut rng = substream(2, 0);
        assert!(read_sensor(-0.1, false, &mut rng).is_err());
        assert!(read_sensor(1.5, true, &mut rng).is_err());
    }

    #[test]
    fn defective_read_is_seed_deterministic() {
        let a = read_sensor(0.9, true, &mut substream(7, 3)).unwrap();
        let b = read_sensor(0.9, true, &mut substream(7, 3)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    // fraction of 2-sensor panels with >=1 defect ~ 1-(1-f)^2 = f(2-f)
    #[test]
    fn at_least_one_defect_rate_matches_closed_form() {
        let f = 0.1;
        let fault = FaultModel::new(f).unwrap();
        let trials = 1_000_000u64;
        let mut hits = 0u64;
        let mut rng = substream(11, 0);
        for _ in 0..trials {
            let mask = draw_defect_mask(fault, 2, &mut rng).unwrap();
            if mask.iter().any(|&d| d) {
                hits += 1;
            }
        }
        let p = f * (2.0 - f); // 0.19
        let phat = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((phat - p).abs() <= 4.0 * se, "phat={phat} p={p} se={se}");
    }

    // P(reading in [p,q] | defect) = q-p
    #[test]
    fn defective_interval_mass_is_uniform() {
        let (p, q) = (0.2, 0.7);
        let trials = 1_000_000u64;
        let mut hits = 0u64;
        let mut rng = substream(12, 0);
        for _ in 0..trials {
            let r = read_sensor(0.5, true, &mut rng).unwrap();
            if (p..=q).contains(&r) {
                hits += 1;
            }
        }
        let expected = q - p;
        let phat = hits as f64 / trials as f64;
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((phat - expected).abs() <= 4.0 * se);
    }

    #[test]
    fn defective_readings_pass_chi_square_uniformity() {
        let bins = 10usize;
        let trials = 100_000u64;
        let mut counts = vec![0u64; bins];
        let mut rng = substream(13, 0);
        for _ in 0..trials {
            let r = read_sensor(0.5, true, &mut rng).unwrap();
            let b = ((r * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let expected = trials as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // chi-square critical value, 9 dof, p = 0.001
        assert!(chi2 < 27.877, "chi2={chi2}");
    }

    #[test]
    fn two_defective_readings_never_collide() {
        let fault = FaultModel::new(1.0).unwrap();
        let mut rng = substream(14, 0);
        for _ in 0..1_000_000 {
            let s = sample_panel(0.5, fault, 2, &mut rng).unwrap();
            assert_ne!(s.readings[0].to_bits(), s.readings[1].to_bits());
        }
    }

    #[test]
    fn panel_invariants_hold() {
        let fault = FaultModel::new(0.5).unwrap();
        let mut rng = substream(15, 0);
        let mut defect_total = 0u64;
        let samples = 100_000u64;
        for _ in 0..samples {
            let s = sample_panel(0.37, fault, 3, &mut rng).unwrap();
            assert_eq!(s.readings.len(), s.defect_mask.len());
            for i in 0..s.len() {
                assert!((0.0..=1.0).contains(&s.readings[i]));
                if !s.defect_mask[i] {
                    assert_eq!(s.readings[i].to_bits(), s.true_aoa.to_bits());
                }
            }
            defect_total += s.defect_mask.iter().filter(|&&d| d).count() as u64;
        }
        // binomial mean n*f = 1.5 per panel
        let mean = defect_total as f64 / samples as f64;
        let var = 3.0 * 0.5 * 0.5;
        let se = (var / samples as f64).sqrt();
        assert!((mean - 1.5).abs() <= 4.0 * se, "mean={mean}");
    }
}
