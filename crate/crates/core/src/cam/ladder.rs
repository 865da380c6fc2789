//! Search-voltage placement and query encoding.

use serde::{Deserialize, Serialize};

use super::SearchQuery;
use crate::device::DeviceParams;
use crate::error::{Error, Result};

/// Default guard margin as a fraction of the smallest level spacing:
/// 0.3 V for the binary defaults, 0.15 V for the four-level defaults.
pub const DEFAULT_GUARD_FRACTION: f64 = 0.3;

pub fn default_guard(params: &DeviceParams) -> f64 {
    DEFAULT_GUARD_FRACTION * params.min_level_spacing()
}

/// Gate voltages applied in the two search steps.
///
/// Binary: `vsl1 < VTH(LVT) < vsl2 < VTH(HVT) < vsl3`. Step 1 searches bit 0 with
/// `vsl1` and bit 1 with `vsl2`; step 2 searches bit 0 with `vsl2` and bit 1 with
/// `vsl3`.
///
/// Multilevel: symbol `s` is searched with `v_low[s]` (just below its level) in
/// step 1 and `v_high[s]` (just above it) in step 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchVoltageLadder {
    Binary { vsl1: f64, vsl2: f64, vsl3: f64 },
    Multilevel { v_low: Vec<f64>, v_high: Vec<f64> },
}

impl SearchVoltageLadder {
    pub fn num_levels(&self) -> usize {
        match self {
            Self::Binary { .. } => 2,
            Self::Multilevel { v_low, .. } => v_low.len(),
        }
    }

    /// (step 1, step 2) gate voltage for one query symbol.
    pub fn step_voltages(&self, symbol: u8) -> (f64, f64) {
        match self {
            Self::Binary { vsl1, vsl2, vsl3 } => {
                if symbol == 0 {
                    (*vsl1, *vsl2)
                } else {
                    (*vsl2, *vsl3)
                }
            }
            Self::Multilevel { v_low, v_high } => {
                let s = symbol as usize;
                (v_low[s], v_high[s])
            }
        }
    }
}

/// Places search voltages at the midpoints between adjacent levels, and
/// `m_guard` outside the lowest and highest levels.
pub fn make_ladder(params: &DeviceParams, m_guard: f64) -> Result<SearchVoltageLadder> {
    params.validate()?;
    if !(m_guard.is_finite() && m_guard > 0.0) {
        return Err(Error::Config(format!(
            "guard margin must be finite and > 0, got {m_guard}"
        )));
    }
    let levels = &params.vth_levels;
    if let Some(w) = levels.windows(2).find(|w| w[1] - w[0] <= 2.0 * m_guard) {
        return Err(Error::Config(format!(
            "levels {} V and {} V are too close for a {m_guard} V guard",
            w[0], w[1]
        )));
    }
    let n = levels.len();
    let mid = |i: usize| 0.5 * (levels[i] + levels[i + 1]);
    let v_low: Vec<f64> = (0..n)
        .map(|s| if s == 0 { levels[0] - m_guard } else { mid(s - 1) })
        .collect();
    let v_high: Vec<f64> = (0..n)
        .map(|s| if s + 1 == n { levels[n - 1] + m_guard } else { mid(s) })
        .collect();
    if n == 2 {
        Ok(SearchVoltageLadder::Binary {
            vsl1: v_low[0],
            vsl2: v_high[0],
            vsl3: v_high[1],
        })
    } else {
        Ok(SearchVoltageLadder::Multilevel { v_low, v_high })
    }
}

/// Step voltages for a binary query.
pub fn encode_query_binary(
    query: &SearchQuery,
    ladder: &SearchVoltageLadder,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !matches!(ladder, SearchVoltageLadder::Binary { .. }) {
        return Err(Error::Query("binary encoding needs a binary ladder".into()));
    }
    query.validate(2)?;
    Ok(encode(query, ladder))
}

/// Step voltages for a multilevel query.
pub fn encode_query_mlc(
    query: &SearchQuery,
    ladder: &SearchVoltageLadder,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !matches!(ladder, SearchVoltageLadder::Multilevel { .. }) {
        return Err(Error::Query(
            "multilevel encoding needs a multilevel ladder".into(),
        ));
    }
    query.validate(ladder.num_levels())?;
    Ok(encode(query, ladder))
}

/// Dispatches on the ladder kind.
pub fn encode_query(
    query: &SearchQuery,
    ladder: &SearchVoltageLadder,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match ladder {
        SearchVoltageLadder::Binary { .. } => encode_query_binary(query, ladder),
        SearchVoltageLadder::Multilevel { .. } => encode_query_mlc(query, ladder),
    }
}

fn encode(query: &SearchQuery, ladder: &SearchVoltageLadder) -> (Vec<f64>, Vec<f64>) {
    query.symbols.iter().map(|&s| ladder.step_voltages(s)).unzip()
}
