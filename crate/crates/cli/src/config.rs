//! Run configuration.
//!
//! A config file is TOML. Every key is optional; unknown keys are rejected.
//! Sections and their defaults:
//!
//! ```toml
//! kind = "bcam-sweep"      # device-iv | bcam-sweep | limiter-ablation | mcam-worst
//!                          # | adc-sweep | genome-build | genome-query | bench-report
//! seed = 1
//! out_dir = "fecam-out"    # also FECAM_OUT_DIR or --out
//! formats = ["csv", "json"] # any of csv, json, svg
//!
//! [device]                 # unset fields come from the preset
//! preset = "binary"        # binary | four-level; mcam-worst defaults to four-level
//! vth_levels = [0.4, 1.4]  # V
//! ss = 100.0               # mV/decade
//! i0 = 1e-9                # A
//! k_on = 1e-5              # A/V
//! sigma_vth = 0.05         # V
//! vd_sat = 0.002           # V
//!
//! [cell]
//! rs = 1e6                 # ohm
//! vd = 0.1                 # V
//! limiter_enabled = true
//!
//! [ladder]
//! m_guard = 0.3            # V; default 0.3 x smallest level spacing
//! margin_fraction = 0.4
//!
//! [mc]
//! wordlength = 8           # bcam-sweep 8, limiter-ablation 2, mcam-worst 64
//! trials = 1000
//! scenarios = ["case-i", "case-ii"] # bcam-sweep; limiter-ablation uses ["random"]
//!
//! [adc]
//! wordlength = 64          # thresholds 1..=wordlength, wordlength + 1 stages
//! t_stage = 1e-10          # s
//! e_stage = 1e-15          # J
//!
//! [device_iv]
//! devices = 60
//! vg_min = -0.5            # V
//! vg_max = 2.5             # V
//! vg_step = 0.02           # V
//!
//! [hdc]
//! k = 16
//! stride = 1
//! dim = 1024
//! reference = "ref.fa"     # FASTA; default: synthetic random reference
//! record = 0               # FASTA record to index
//! synthetic_length = 2000
//! queries = "queries.txt"  # one pattern per line; default: synthetic queries
//! synthetic_queries = 20   # half drawn from the reference, half random
//! threshold = 307          # default 0.3 x dim
//!
//! [bench]
//! inputs = []              # summary JSON files of earlier runs
//! ```

use std::path::PathBuf;

use clap::ValueEnum;
use fecam_core::cam::{default_guard, DEFAULT_MARGIN_FRACTION};
use fecam_core::device::{CellConfig, DeviceParams};
use fecam_core::hdc::HdcConfig;
use fecam_core::montecarlo::Scenario;
use fecam_core::sensing::{DEFAULT_E_STAGE, DEFAULT_T_STAGE};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    DeviceIv,
    BcamSweep,
    LimiterAblation,
    McamWorst,
    AdcSweep,
    GenomeBuild,
    GenomeQuery,
    BenchReport,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::DeviceIv => "device-iv",
            Kind::BcamSweep => "bcam-sweep",
            Kind::LimiterAblation => "limiter-ablation",
            Kind::McamWorst => "mcam-worst",
            Kind::AdcSweep => "adc-sweep",
            Kind::GenomeBuild => "genome-build",
            Kind::GenomeQuery => "genome-query",
            Kind::BenchReport => "bench-report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Binary,
    FourLevel,
}

/// Config file as written by the user.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub device: DeviceOverrides,
    pub cell: CellConfig,
    pub ladder: LadderOverrides,
    pub mc: McOverrides,
    pub adc: AdcOverrides,
    pub device_iv: IvConfig,
    pub hdc: HdcOverrides,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceOverrides {
    pub preset: Option<Preset>,
    pub vth_levels: Option<Vec<f64>>,
    pub ss: Option<f64>,
    pub i0: Option<f64>,
    pub k_on: Option<f64>,
    pub sigma_vth: Option<f64>,
    pub vd_sat: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderOverrides {
    pub m_guard: Option<f64>,
    pub margin_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McOverrides {
    pub wordlength: Option<usize>,
    pub trials: Option<usize>,
    pub scenarios: Option<Vec<Scenario>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdcOverrides {
    pub wordlength: Option<usize>,
    pub t_stage: Option<f64>,
    pub e_stage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IvConfig {
    pub devices: usize,
    pub vg_min: f64,
    pub vg_max: f64,
    pub vg_step: f64,
}

impl Default for IvConfig {
    fn default() -> Self {
        Self {
            devices: 60,
            vg_min: -0.5,
            vg_max: 2.5,
            vg_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdcOverrides {
    pub k: Option<usize>,
    pub stride: Option<usize>,
    pub dim: Option<usize>,
    pub reference: Option<PathBuf>,
    pub record: Option<usize>,
    pub synthetic_length: Option<usize>,
    pub queries: Option<PathBuf>,
    pub synthetic_queries: Option<usize>,
    pub threshold: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub inputs: Vec<PathBuf>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effective {
    pub kind: Kind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub device: DeviceParams,
    pub cell: CellConfig,
    pub ladder: LadderConfig,
    pub mc: McConfig,
    pub adc: AdcSettings,
    pub device_iv: IvConfig,
    pub hdc: HdcSettings,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderConfig {
    pub m_guard: f64,
    pub margin_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub wordlength: usize,
    pub trials: usize,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdcSettings {
    pub wordlength: usize,
    pub t_stage: f64,
    pub e_stage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdcSettings {
    pub k: usize,
    pub stride: usize,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    pub record: usize,
    pub synthetic_length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<PathBuf>,
    pub synthetic_queries: usize,
    pub threshold: usize,
}

impl HdcSettings {
    pub fn index_config(&self, seed: u64, m_guard: f64) -> HdcConfig {
        HdcConfig {
            k: self.k,
            stride: self.stride,
            dim: self.dim,
            seed,
            m_guard: Some(m_guard),
        }
    }
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

pub const DEFAULT_OUT_DIR: &str = "fecam-out";

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    /// Resolves every field. `kind` from the command line wins over the file.
    pub fn resolve(self, kind: Option<Kind>, flags: FlagOverrides) -> Result<Effective, CliError> {
        let kind = match (kind, self.kind) {
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => {
                return Err(CliError::Config("missing key `kind`".into()));
            }
        };
        let d = self.device;
        let preset = d.preset.unwrap_or(if kind == Kind::McamWorst {
            Preset::FourLevel
        } else {
            Preset::Binary
        });
        let base = match preset {
            Preset::Binary => DeviceParams::binary(),
            Preset::FourLevel => DeviceParams::four_level(),
        };
        let device = DeviceParams {
            vth_levels: d.vth_levels.unwrap_or(base.vth_levels),
            ss: d.ss.unwrap_or(base.ss),
            i0: d.i0.unwrap_or(base.i0),
            k_on: d.k_on.unwrap_or(base.k_on),
            sigma_vth: d.sigma_vth.unwrap_or(base.sigma_vth),
            vd_sat: d.vd_sat.unwrap_or(base.vd_sat),
        };
        device.validate()?;
        self.cell.validate()?;

        let ladder = LadderConfig {
            m_guard: self.ladder.m_guard.unwrap_or_else(|| default_guard(&device)),
            margin_fraction: self.ladder.margin_fraction.unwrap_or(DEFAULT_MARGIN_FRACTION),
        };
        let (wordlength, scenarios) = match kind {
            Kind::LimiterAblation => (2, vec![Scenario::Random]),
            Kind::McamWorst => (64, vec![Scenario::McamOneCell]),
            _ => (8, vec![Scenario::CaseI, Scenario::CaseII]),
        };
        let mc = McConfig {
            wordlength: self.mc.wordlength.unwrap_or(wordlength),
            trials: self.mc.trials.unwrap_or(1000),
            scenarios: self.mc.scenarios.unwrap_or(scenarios),
        };
        let adc = AdcSettings {
            wordlength: self.adc.wordlength.unwrap_or(64),
            t_stage: self.adc.t_stage.unwrap_or(DEFAULT_T_STAGE),
            e_stage: self.adc.e_stage.unwrap_or(DEFAULT_E_STAGE),
        };
        let defaults = HdcConfig::default();
        let h = self.hdc;
        let dim = h.dim.unwrap_or(defaults.dim);
        let hdc = HdcSettings {
            k: h.k.unwrap_or(defaults.k),
            stride: h.stride.unwrap_or(defaults.stride),
            dim,
            reference: h.reference,
            record: h.record.unwrap_or(0),
            synthetic_length: h.synthetic_length.unwrap_or(2_000),
            queries: h.queries,
            synthetic_queries: h.synthetic_queries.unwrap_or(20),
            threshold: h.threshold.unwrap_or((0.3 * dim as f64) as usize),
        };
        let out_dir = flags
            .out_dir
            .or(self.out_dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let mut formats = if flags.formats.is_empty() {
            self.formats.unwrap_or_else(|| vec![Format::Csv, Format::Json])
        } else {
            flags.formats
        };
        formats.sort();
        formats.dedup();
        let eff = Effective {
            kind,
            seed: flags.seed.or(self.seed).unwrap_or(1),
            out_dir,
            formats,
            device,
            cell: self.cell,
            ladder,
            mc,
            adc,
            device_iv: self.device_iv,
            hdc,
            bench: self.bench,
        };
        eff.validate()?;
        Ok(eff)
    }
}

impl Effective {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("{field}: {why}")));
        if !(self.ladder.margin_fraction > 0.0 && self.ladder.margin_fraction < 0.5) {
            return bad("ladder.margin_fraction", "must lie in (0, 0.5)");
        }
        if self.mc.wordlength == 0 || self.mc.trials == 0 {
            return bad("mc", "wordlength and trials must be at least 1");
        }
        if self.mc.scenarios.is_empty() {
            return bad("mc.scenarios", "needs at least one scenario");
        }
        if self.adc.wordlength == 0 {
            return bad("adc.wordlength", "must be at least 1");
        }
        if !(self.adc.t_stage > 0.0 && self.adc.e_stage > 0.0) {
            return bad("adc", "t_stage and e_stage must be > 0");
        }
        let iv = &self.device_iv;
        let ordered = iv.vg_step > 0.0 && iv.vg_max > iv.vg_min;
        if iv.devices == 0 || !ordered {
            return bad("device_iv", "needs devices >= 1, vg_step > 0 and vg_max > vg_min");
        }
        if self.hdc.threshold > self.hdc.dim {
            return bad("hdc.threshold", "exceeds hdc.dim");
        }
        Ok(())
    }

    /// Effective configuration rendered as TOML.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}
