//! Thermometer-code ADC and the serial sensing cost model.
//!
//! The ADC compares the matchline current against references at
//! `(k + 0.5) * I_ON`, one stage per reference, so the code is the nearest
//! integer number of ON cells up to saturation. Stages fire serially: sensing
//! latency and energy scale with the number of stages used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default stage delay (s). Placeholder model value.
pub const DEFAULT_T_STAGE: f64 = 100e-12;
/// Default stage energy (J). Placeholder model value.
pub const DEFAULT_E_STAGE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub i_on_nominal: f64,
    pub n_stages: usize,
    pub t_stage: f64,
    pub e_stage: f64,
}

impl AdcConfig {
    pub fn new(i_on_nominal: f64, n_stages: usize) -> Self {
        Self {
            i_on_nominal,
            n_stages,
            t_stage: DEFAULT_T_STAGE,
            e_stage: DEFAULT_E_STAGE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.i_on_nominal) && ok(self.t_stage) && ok(self.e_stage)) || self.n_stages == 0 {
            return Err(Error::Config(format!("invalid ADC configuration {self:?}")));
        }
        Ok(())
    }
}

/// Number of reference levels below `i_ml`.
pub fn thermometer_code(i_ml: f64, cfg: &AdcConfig) -> usize {
    (0..cfg.n_stages)
        .take_while(|&k| i_ml > (k as f64 + 0.5) * cfg.i_on_nominal)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseCost {
    /// Seconds.
    pub latency: f64,
    /// Joules.
    pub energy: f64,
}

pub fn sense_cost(stages_used: usize, cfg: &AdcConfig) -> Result<SenseCost> {
    if stages_used == 0 || stages_used > cfg.n_stages {
        return Err(Error::Config(format!(
            "{stages_used} stages requested from a {}-stage ADC",
            cfg.n_stages
        )));
    }
    Ok(SenseCost {
        latency: stages_used as f64 * cfg.t_stage,
        energy: stages_used as f64 * cfg.e_stage,
    })
}

/// Stages needed to tell distance `<= threshold` from `> threshold`.
pub fn stages_for_threshold(threshold: usize) -> usize {
    threshold + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    const ION: f64 = 1e-7;

    #[test]
    fn codes() {
        let cfg = AdcConfig::new(ION, 8);
        assert_eq!(thermometer_code(0.0, &cfg), 0);
        assert_eq!(thermometer_code(3.2 * ION, &cfg), 3);
        assert_eq!(thermometer_code(8.0 * ION, &cfg), 8);
        assert_eq!(thermometer_code(50.0 * ION, &cfg), 8);
        assert_eq!(thermometer_code(0.5 * ION, &cfg), 0);
    }

    #[test]
    fn integer_multiples_are_exact() {
        let cfg = AdcConfig::new(ION, 64);
        for m in 0..=64 {
            assert_eq!(thermometer_code(m as f64 * ION, &cfg), m);
        }
    }

    #[test]
    fn code_is_monotone() {
        let cfg = AdcConfig::new(ION, 16);
        let mut prev = 0;
        for step in 0..2000 {
            let c = thermometer_code(step as f64 * 0.01 * ION, &cfg);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn cost_is_linear() {
        let cfg = AdcConfig::new(ION, 64);
        let one = sense_cost(1, &cfg).unwrap();
        assert_eq!((one.latency, one.energy), (cfg.t_stage, cfg.e_stage));
        let a = sense_cost(5, &cfg).unwrap();
        let b = sense_cost(10, &cfg).unwrap();
        assert!((b.latency - 2.0 * a.latency).abs() < 1e-24);
        assert!((b.energy - 2.0 * a.energy).abs() < 1e-30);
        assert!(sense_cost(0, &cfg).is_err());
        assert!(sense_cost(65, &cfg).is_err());
        assert_eq!(stages_for_threshold(3), 4);
    }
}
