//! CAM words and arrays built from 1FeFET1R cells, and the two-step search.
//!
//! A word is a set of cells in parallel on one matchline; its current is the
//! sum of the cell currents. Step 1 drives every cell just below the V_TH of the
//! searched symbol, so only cells holding a lower state conduct. Step 2 drives
//! just above it, so only cells holding a higher state stay dark. For binary
//! words these are the St0Sr1 and St1Sr0 mismatches, and their counts add up to
//! the Hamming distance.

mod array;
mod decode;
mod ladder;

pub use array::{CamArray, SearchPlan, WritePolicy};
pub use decode::{decode_hamming, decode_mlc_match, HammingDecode, DEFAULT_MARGIN_FRACTION};
pub use ladder::{
    default_guard, encode_query, encode_query_binary, encode_query_mlc, make_ladder,
    SearchVoltageLadder, DEFAULT_GUARD_FRACTION,
};

use serde::{Deserialize, Serialize};

use crate::device::{cell_current_at, CellConfig, DeviceInstance, DeviceParams};
use crate::error::{Error, Result};

/// Storage mode of an array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Binary,
    Multilevel { bits_per_cell: u32 },
}

impl Mode {
    pub fn levels(self) -> usize {
        match self {
            Mode::Binary => 2,
            Mode::Multilevel { bits_per_cell } => 1 << bits_per_cell,
        }
    }

    pub fn bits_per_cell(self) -> usize {
        match self {
            Mode::Binary => 1,
            Mode::Multilevel { bits_per_cell } => bits_per_cell as usize,
        }
    }

    /// Mode implied by the number of V_TH levels (must be a power of two).
    pub fn for_params(params: &DeviceParams) -> Result<Self> {
        let n = params.num_levels();
        if n == 2 {
            Ok(Mode::Binary)
        } else if n.is_power_of_two() && n <= 256 {
            Ok(Mode::Multilevel {
                bits_per_cell: n.trailing_zeros(),
            })
        } else {
            Err(Error::Config(format!(
                "{n} V_TH levels is not a power of two between 2 and 256"
            )))
        }
    }
}

/// Query symbols, one per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchQuery {
    pub symbols: Vec<u8>,
}

impl SearchQuery {
    pub fn new(symbols: Vec<u8>) -> Self {
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn validate(&self, levels: usize) -> Result<()> {
        match self.symbols.iter().position(|&s| s as usize >= levels) {
            Some(i) => Err(Error::Query(format!(
                "symbol {} at position {i} out of range for {levels} levels",
                self.symbols[i]
            ))),
            None => Ok(()),
        }
    }
}

/// Matchline currents of the two search steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlReading {
    pub i_mls1: f64,
    pub i_mls2: f64,
}

/// One matchline of cells sharing drain bias and limiter.
#[derive(Debug, Clone, PartialEq)]
pub struct CamWord {
    cells: Vec<DeviceInstance>,
    cell: CellConfig,
    params: DeviceParams,
}

impl CamWord {
    pub fn new(params: DeviceParams, cell: CellConfig, cells: Vec<DeviceInstance>) -> Result<Self> {
        params.validate()?;
        cell.validate()?;
        if cells.is_empty() {
            return Err(Error::Config("a word needs at least one cell".into()));
        }
        for (i, d) in cells.iter().enumerate() {
            if d.sampled_vth.len() != params.num_levels() || d.stored_state >= params.num_levels() {
                return Err(Error::InvalidParameter(format!(
                    "cell {i} does not match the {}-level device parameters",
                    params.num_levels()
                )));
            }
        }
        Ok(Self { cells, cell, params })
    }

    /// Word of nominal (variation-free) devices programmed to `states`.
    pub fn nominal(params: DeviceParams, cell: CellConfig, states: &[u8]) -> Result<Self> {
        let cells = states
            .iter()
            .map(|&s| DeviceInstance::nominal(&params, s as usize))
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, cell, cells)
    }

    pub fn wordlength(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[DeviceInstance] {
        &self.cells
    }

    pub fn cell_config(&self) -> &CellConfig {
        &self.cell
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn states(&self) -> Vec<u8> {
        self.cells.iter().map(|d| d.stored_state as u8).collect()
    }
}

/// Matchline current for one set of gate voltages.
pub fn search_word(word: &CamWord, step_voltages: &[f64]) -> Result<f64> {
    if step_voltages.len() != word.wordlength() {
        return Err(Error::Query(format!(
            "{} gate voltages for a word of {} cells",
            step_voltages.len(),
            word.wordlength()
        )));
    }
    word.cells
        .iter()
        .zip(step_voltages)
        .try_fold(0.0, |acc, (d, &vg)| {
            Ok(acc + cell_current_at(vg, d.vth(), &word.cell, &word.params)?)
        })
}

/// Both search steps of one word against one query.
pub fn two_step_search(
    word: &CamWord,
    query: &SearchQuery,
    ladder: &SearchVoltageLadder,
) -> Result<MlReading> {
    if ladder.num_levels() != word.params.num_levels() {
        return Err(Error::Query(format!(
            "{}-level ladder used on a {}-level word",
            ladder.num_levels(),
            word.params.num_levels()
        )));
    }
    if query.len() != word.wordlength() {
        return Err(Error::Query(format!(
            "query of length {} for a word of {} cells",
            query.len(),
            word.wordlength()
        )));
    }
    let (step1, step2) = encode_query(query, ladder)?;
    Ok(MlReading {
        i_mls1: search_word(word, &step1)?,
        i_mls2: search_word(word, &step2)?,
    })
}
