//! Device-variation Monte Carlo over CAM words.
//!
//! Every trial builds a word of freshly sampled devices, runs the two-step
//! search and decodes it. Randomness is counter based: the stored/query
//! pattern and the device offsets of trial `t` in sub-scenario `s` come from
//! ChaCha streams keyed by `(seed, s, t)`, so results do not depend on the
//! evaluation order and adding trials leaves earlier ones untouched.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cam::{
    decode_hamming, decode_mlc_match, default_guard, make_ladder, two_step_search, CamWord, Mode,
    SearchQuery, SearchVoltageLadder, DEFAULT_MARGIN_FRACTION,
};
use crate::device::{draw_shift, CellConfig, DeviceInstance, DeviceParams};
use crate::error::{Error, Result};
use crate::sensing::{thermometer_code, AdcConfig};
use crate::stats::mean_std;

const PATTERN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stored/query pattern generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Every cell stores 0; `k` cells are searched with 1 (St0Sr1).
    CaseI,
    /// Every cell stores 1; `k` cells are searched with 0 (St1Sr0).
    #[serde(rename = "case-ii")]
    CaseII,
    /// Random stored word with `k` random cells flipped in the query.
    Mixed,
    /// Independent uniform stored word and query.
    Random,
    /// Four-level word storing `01` everywhere; exact match, or one cell
    /// searched with `00`, `10` or `11`.
    McamOneCell,
}

impl Scenario {
    fn is_sweep(self) -> bool {
        matches!(self, Scenario::CaseI | Scenario::CaseII | Scenario::Mixed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McExperimentConfig {
    pub wordlength: usize,
    pub trials: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub device: DeviceParams,
    pub cell: CellConfig,
    /// Ladder guard; `None` uses [`default_guard`].
    pub m_guard: Option<f64>,
    pub margin_fraction: f64,
}

impl McExperimentConfig {
    pub fn binary(wordlength: usize, scenario: Scenario) -> Self {
        Self {
            wordlength,
            trials: 1000,
            seed: 1,
            scenario,
            device: DeviceParams::binary(),
            cell: CellConfig::default(),
            m_guard: None,
            margin_fraction: DEFAULT_MARGIN_FRACTION,
        }
    }

    pub fn mcam(wordlength: usize) -> Self {
        Self {
            device: DeviceParams::four_level(),
            ..Self::binary(wordlength, Scenario::McamOneCell)
        }
    }

    pub fn with_sigma(mut self, sigma_vth: f64) -> Self {
        self.device.sigma_vth = sigma_vth;
        self
    }

    pub fn with_limiter(mut self, enabled: bool) -> Self {
        self.cell.limiter_enabled = enabled;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sigma_vth(&self) -> f64 {
        self.device.sigma_vth
    }

    pub fn limiter_enabled(&self) -> bool {
        self.cell.limiter_enabled
    }

    pub fn mode(&self) -> Result<Mode> {
        Mode::for_params(&self.device)
    }

    pub fn ladder(&self) -> Result<SearchVoltageLadder> {
        make_ladder(&self.device, self.m_guard.unwrap_or_else(|| default_guard(&self.device)))
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.cell.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.wordlength == 0 {
            return Err(Error::Config("wordlength must be at least 1".into()));
        }
        if !(self.margin_fraction > 0.0 && self.margin_fraction < 0.5) {
            return Err(Error::Config(format!(
                "margin_fraction must lie in (0, 0.5), got {}",
                self.margin_fraction
            )));
        }
        let mode = self.mode()?;
        match (self.scenario, mode) {
            (Scenario::McamOneCell, Mode::Multilevel { bits_per_cell: 2 }) => Ok(()),
            (Scenario::McamOneCell, _) => Err(Error::Config(
                "the mcam-one-cell scenario needs a four-level device".into(),
            )),
            (_, Mode::Binary) => Ok(()),
            (s, _) => Err(Error::Config(format!(
                "scenario {s:?} needs a binary device"
            ))),
        }
    }
}

/// One trial of one sub-scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scenario: usize,
    pub trial: usize,
    pub i_mls1: f64,
    pub i_mls2: f64,
    /// Cells searched above their stored state (St0Sr1 for binary).
    pub above: usize,
    /// Cells searched below their stored state (St1Sr0 for binary).
    pub below: usize,
    /// Decoded Hamming distance, or 1/0 for match/mismatch in MCAM mode.
    pub decoded: usize,
    pub truth: usize,
    /// Thermometer codes of the two matchline currents.
    pub code1: usize,
    pub code2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub id: String,
    pub trials: usize,
    pub mean_i_mls1: f64,
    pub std_i_mls1: f64,
    pub mean_i_mls2: f64,
    pub std_i_mls2: f64,
    pub error_rate: f64,
    pub adc_accuracy: f64,
}

/// Separation of matchline-current distributions grouped by mismatch count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    /// Smallest gap between adjacent groups, in units of I_ON; negative when
    /// ranges overlap. `None` with fewer than two adjacent groups.
    pub margin: Option<f64>,
    /// Fraction of trials whose current lies inside the range of an adjacent group.
    pub overlap_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McResult {
    pub config: McExperimentConfig,
    pub i_on_nominal: f64,
    pub ladder: SearchVoltageLadder,
    pub scenarios: Vec<ScenarioSummary>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    pub error_rate: f64,
    pub adc_accuracy: f64,
    /// Step-1 currents grouped by the above-V_TH mismatch count.
    pub step1: Separation,
    /// Step-2 currents grouped by the below-V_TH mismatch count.
    pub step2: Separation,
}

impl McResult {
    /// Step-1 and step-2 samples of one sub-scenario, in trial order.
    pub fn samples(&self, scenario: usize) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter(|r| r.scenario == scenario)
            .map(|r| (r.i_mls1, r.i_mls2))
            .unzip()
    }

    /// Writes one row per trial: scenario id, trial, currents, decoded value, truth.
    pub fn write_trials_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "trial", "i_mls1", "i_mls2", "decoded", "truth"])?;
        for r in &self.records {
            w.write_record([
                self.scenarios[r.scenario].id.clone(),
                r.trial.to_string(),
                format!("{:e}", r.i_mls1),
                format!("{:e}", r.i_mls2),
                r.decoded.to_string(),
                r.truth.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Matched pair of runs with and without the series limiter.
#[derive(Debug, Clone, Serialize)]
pub struct AblationResult {
    pub with_limiter: McResult,
    pub without_limiter: McResult,
}

/// Sweeps the mismatch count `k = 0..=wordlength` for a binary scenario.
pub fn run_bcam_sweep(cfg: &McExperimentConfig) -> Result<McResult> {
    cfg.validate()?;
    if !cfg.scenario.is_sweep() {
        return Err(Error::Config(format!(
            "bcam sweep needs case-i, case-ii or mixed, got {:?}",
            cfg.scenario
        )));
    }
    run(cfg)
}

/// Runs the same binary experiment (same seed) with and without the limiter.
pub fn run_limiter_ablation(cfg: &McExperimentConfig) -> Result<AblationResult> {
    cfg.validate()?;
    if cfg.mode()? != Mode::Binary {
        return Err(Error::Config("limiter ablation needs a binary device".into()));
    }
    Ok(AblationResult {
        with_limiter: run(&cfg.clone().with_limiter(true))?,
        without_limiter: run(&cfg.clone().with_limiter(false))?,
    })
}

/// The four single-cell worst cases of a four-level word storing `01`.
pub fn run_mcam_worst_case(cfg: &McExperimentConfig) -> Result<McResult> {
    cfg.validate()?;
    if cfg.scenario != Scenario::McamOneCell {
        return Err(Error::Config("mcam worst case needs the mcam-one-cell scenario".into()));
    }
    run(cfg)
}

/// Sub-scenario ids and their parameter (mismatch count or queried symbol).
fn sub_scenarios(cfg: &McExperimentConfig) -> Vec<(String, usize)> {
    let n = cfg.wordlength;
    match cfg.scenario {
        Scenario::CaseI => (0..=n).map(|k| (format!("case-i/k={k}"), k)).collect(),
        Scenario::CaseII => (0..=n).map(|k| (format!("case-ii/k={k}"), k)).collect(),
        Scenario::Mixed => (0..=n).map(|k| (format!("mixed/k={k}"), k)).collect(),
        Scenario::Random => vec![("random".into(), 0)],
        Scenario::McamOneCell => [("query-00", 0), ("match", 1), ("query-10", 2), ("query-11", 3)]
            .into_iter()
            .map(|(id, q)| (id.to_string(), q))
            .collect(),
    }
}

fn trial_pattern(scenario: Scenario, param: usize, n: usize, rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<u8>) {
    match scenario {
        Scenario::CaseI | Scenario::CaseII => {
            let stored = if scenario == Scenario::CaseI { 0 } else { 1 };
            let mut query = vec![stored; n];
            for i in sample(rng, n, param) {
                query[i] = 1 - stored;
            }
            (vec![stored; n], query)
        }
        Scenario::Mixed => {
            let stored: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let mut query = stored.clone();
            for i in sample(rng, n, param) {
                query[i] ^= 1;
            }
            (stored, query)
        }
        Scenario::Random => {
            let stored = (0..n).map(|_| rng.random_range(0..2)).collect();
            let query = (0..n).map(|_| rng.random_range(0..2)).collect();
            (stored, query)
        }
        Scenario::McamOneCell => {
            let mut query = vec![1u8; n];
            query[rng.random_range(0..n)] = param as u8;
            (vec![1u8; n], query)
        }
    }
}

fn stream_id(sub: usize, trial: usize) -> u64 {
    ((sub as u64) << 40) | trial as u64
}

fn run_trial(
    cfg: &McExperimentConfig,
    ladder: &SearchVoltageLadder,
    adc: &AdcConfig,
    sub: usize,
    param: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let n = cfg.wordlength;
    let mut pattern_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ PATTERN_SALT);
    pattern_rng.set_stream(stream_id(sub, trial));
    let (stored, query) = trial_pattern(cfg.scenario, param, n, &mut pattern_rng);

    let mut device_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    device_rng.set_stream(stream_id(sub, trial));
    let cells = stored
        .iter()
        .map(|&s| {
            let shift = draw_shift(&mut device_rng, cfg.device.sigma_vth);
            DeviceInstance::with_shift(&cfg.device, s as usize, shift)
        })
        .collect::<Result<Vec<_>>>()?;
    let word = CamWord::new(cfg.device.clone(), cfg.cell, cells)?;
    let reading = two_step_search(&word, &SearchQuery::new(query.clone()), ladder)?;

    let above = stored.iter().zip(&query).filter(|(s, q)| q > s).count();
    let below = stored.iter().zip(&query).filter(|(s, q)| q < s).count();
    let i_on = cfg.cell.i_on_nominal();
    let (decoded, truth) = if cfg.scenario == Scenario::McamOneCell {
        let m = decode_mlc_match(&reading, n, i_on, cfg.margin_fraction);
        (m as usize, (above + below == 0) as usize)
    } else {
        (decode_hamming(&reading, n, i_on).hamming, above + below)
    };
    Ok(TrialRecord {
        scenario: sub,
        trial,
        i_mls1: reading.i_mls1,
        i_mls2: reading.i_mls2,
        above,
        below,
        decoded,
        truth,
        code1: thermometer_code(reading.i_mls1, adc),
        code2: thermometer_code(reading.i_mls2, adc),
    })
}

fn adc_correct(r: &TrialRecord, n: usize, mcam: bool) -> bool {
    if mcam {
        ((r.code1 == 0 && r.code2 == n) as usize) == r.truth
    } else {
        r.code1 == r.above && n - r.code2 == r.below
    }
}

fn run(cfg: &McExperimentConfig) -> Result<McResult> {
    let ladder = cfg.ladder()?;
    let i_on = cfg.cell.i_on_nominal();
    let adc = AdcConfig::new(i_on, cfg.wordlength);
    let subs = sub_scenarios(cfg);
    let jobs: Vec<(usize, usize, usize)> = subs
        .iter()
        .enumerate()
        .flat_map(|(s, (_, p))| (0..cfg.trials).map(move |t| (s, *p, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(s, p, t)| run_trial(cfg, &ladder, &adc, s, p, t))
        .collect::<Result<Vec<_>>>()?;

    let n = cfg.wordlength;
    let mcam = cfg.scenario == Scenario::McamOneCell;
    let scenarios = subs
        .iter()
        .enumerate()
        .map(|(s, (id, _))| {
            let recs = &records[s * cfg.trials..(s + 1) * cfg.trials];
            let i1: Vec<f64> = recs.iter().map(|r| r.i_mls1).collect();
            let i2: Vec<f64> = recs.iter().map(|r| r.i_mls2).collect();
            let (m1, s1) = mean_std(&i1);
            let (m2, s2) = mean_std(&i2);
            ScenarioSummary {
                id: id.clone(),
                trials: recs.len(),
                mean_i_mls1: m1,
                std_i_mls1: s1,
                mean_i_mls2: m2,
                std_i_mls2: s2,
                error_rate: fraction(recs, |r| r.decoded != r.truth),
                adc_accuracy: fraction(recs, |r| adc_correct(r, n, mcam)),
            }
        })
        .collect();

    Ok(McResult {
        i_on_nominal: i_on,
        ladder,
        scenarios,
        error_rate: fraction(&records, |r| r.decoded != r.truth),
        adc_accuracy: fraction(&records, |r| adc_correct(r, n, mcam)),
        step1: separation(&records, i_on, |r| (r.above, r.i_mls1), true),
        step2: separation(&records, i_on, |r| (r.below, r.i_mls2), false),
        records,
        config: cfg.clone(),
    })
}

fn fraction(recs: &[TrialRecord], pred: impl Fn(&TrialRecord) -> bool) -> f64 {
    if recs.is_empty() {
        return 0.0;
    }
    recs.iter().filter(|r| pred(r)).count() as f64 / recs.len() as f64
}

/// Range-inclusion overlap and worst adjacent gap. `rising` says whether the
/// current grows with the group count (step 1) or falls with it (step 2).
pub fn separation(
    records: &[TrialRecord],
    i_on: f64,
    key: impl Fn(&TrialRecord) -> (usize, f64),
    rising: bool,
) -> Separation {
    let mut ranges: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for r in records {
        let (g, i) = key(r);
        let e = ranges.entry(g).or_insert((i, i));
        e.0 = e.0.min(i);
        e.1 = e.1.max(i);
    }
    let margin = ranges
        .iter()
        .filter_map(|(&g, &(lo_a, hi_a))| {
            let &(lo_b, hi_b) = ranges.get(&(g + 1))?;
            Some(if rising { lo_b - hi_a } else { lo_a - hi_b } / i_on)
        })
        .reduce(f64::min);
    let inside = |g: Option<usize>, i: f64| {
        g.and_then(|g| ranges.get(&g))
            .is_some_and(|&(lo, hi)| lo <= i && i <= hi)
    };
    let overlapping = records
        .iter()
        .filter(|r| {
            let (g, i) = key(r);
            inside(g.checked_sub(1), i) || inside(Some(g + 1), i)
        })
        .count();
    Separation {
        margin,
        overlap_fraction: if records.is_empty() {
            0.0
        } else {
            overlapping as f64 / records.len() as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_case_i_is_a_staircase() {
        let cfg = McExperimentConfig::binary(8, Scenario::CaseI)
            .with_sigma(0.0)
            .with_trials(3);
        let res = run_bcam_sweep(&cfg).unwrap();
        let ion = res.i_on_nominal;
        assert_eq!(res.scenarios.len(), 9);
        for (k, s) in res.scenarios.iter().enumerate() {
            assert!((s.mean_i_mls1 - k as f64 * ion).abs() < 0.01 * ion, "{s:?}");
            assert!(s.std_i_mls1 <= 1e-12 * ion);
            assert_eq!(s.error_rate, 0.0);
        }
        assert_eq!(res.error_rate, 0.0);
        assert_eq!(res.adc_accuracy, 1.0);
    }

    #[test]
    fn ideal_case_ii_keeps_step1_below_match_boundary() {
        let cfg = McExperimentConfig::binary(8, Scenario::CaseII)
            .with_sigma(0.0)
            .with_trials(2);
        let res = run_bcam_sweep(&cfg).unwrap();
        for s in &res.scenarios {
            assert!(s.mean_i_mls1 < 0.5 * res.i_on_nominal);
        }
        assert_eq!(res.error_rate, 0.0);
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let cfg = McExperimentConfig::binary(8, Scenario::Mixed).with_trials(20).with_seed(5);
        let a = run_bcam_sweep(&cfg).unwrap();
        let b = run_bcam_sweep(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        let longer = run_bcam_sweep(&cfg.clone().with_trials(30)).unwrap();
        for r in &a.records {
            let same = longer
                .records
                .iter()
                .find(|x| x.scenario == r.scenario && x.trial == r.trial)
                .unwrap();
            assert_eq!(r, same);
        }
    }

    #[test]
    fn scenario_mode_mismatch_is_rejected() {
        let mut cfg = McExperimentConfig::binary(8, Scenario::McamOneCell);
        assert!(cfg.validate().is_err());
        cfg = McExperimentConfig::mcam(8);
        cfg.scenario = Scenario::CaseI;
        assert!(cfg.validate().is_err());
        assert!(run_bcam_sweep(&McExperimentConfig::binary(8, Scenario::Random)).is_err());
        assert!(McExperimentConfig::binary(8, Scenario::CaseI).with_trials(0).validate().is_err());
    }

    #[test]
    fn separation_metric() {
        let rec = |above: usize, i: f64| TrialRecord {
            scenario: 0,
            trial: 0,
            i_mls1: i,
            i_mls2: 0.0,
            above,
            below: 0,
            decoded: 0,
            truth: 0,
            code1: 0,
            code2: 0,
        };
        let recs = vec![rec(0, 0.0), rec(0, 0.2), rec(1, 1.0), rec(1, 0.9), rec(2, 2.0)];
        let s = separation(&recs, 1.0, |r| (r.above, r.i_mls1), true);
        assert!((s.margin.unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(s.overlap_fraction, 0.0);
        let recs = vec![rec(0, 0.0), rec(0, 1.2), rec(1, 1.0), rec(1, 3.0)];
        let s = separation(&recs, 1.0, |r| (r.above, r.i_mls1), true);
        assert_eq!(s.overlap_fraction, 0.5);
        assert!(s.margin.unwrap() < 0.0);
    }
}
