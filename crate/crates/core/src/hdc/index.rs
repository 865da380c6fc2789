use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_item_memory, encode_symbols, sequence_symbols, Hypervector, ItemMemory};
use crate::cam::{
    decode_hamming, default_guard, make_ladder, CamArray, SearchPlan, SearchQuery,
    SearchVoltageLadder,
};
use crate::device::{CellConfig, DeviceParams};
use crate::error::{Error, Result};

/// Cells per physical CAM word.
pub const SEGMENT_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdcConfig {
    pub k: usize,
    pub stride: usize,
    pub dim: usize,
    /// Seeds both the item memory and the array's device offsets.
    pub seed: u64,
    pub m_guard: Option<f64>,
}

impl Default for HdcConfig {
    fn default() -> Self {
        Self {
            k: 16,
            stride: 1,
            dim: 1024,
            seed: 1,
            m_guard: None,
        }
    }
}

/// One encoded reference window per entry, `dim / 64` CAM rows each.
#[derive(Debug, Clone)]
pub struct GenomeIndex {
    config: HdcConfig,
    item_memory: ItemMemory,
    array: CamArray,
    ladder: SearchVoltageLadder,
    positions: Vec<usize>,
}

impl GenomeIndex {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn stride(&self) -> usize {
        self.config.stride
    }

    pub fn config(&self) -> &HdcConfig {
        &self.config
    }

    pub fn item_memory(&self) -> &ItemMemory {
        &self.item_memory
    }

    pub fn array(&self) -> &CamArray {
        &self.array
    }

    pub fn segments(&self) -> usize {
        self.config.dim / SEGMENT_WIDTH
    }

    pub fn entries(&self) -> usize {
        self.positions.len()
    }

    /// Reference offset of each entry.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Hypervector reassembled from the stored segments of an entry.
    pub fn stored_hypervector(&self, entry: usize) -> Result<Hypervector> {
        if entry >= self.entries() {
            return Err(Error::Query(format!("entry {entry} out of range")));
        }
        let segs = self.segments();
        let words = (0..segs)
            .flat_map(|j| self.array.packed_binary(entry * segs + j).iter().copied())
            .collect();
        Hypervector::from_words(self.dim(), words)
    }

    pub fn encode_pattern(&self, pattern: &str) -> Result<Hypervector> {
        let symbols = sequence_symbols(pattern)?;
        if symbols.len() != self.k() {
            return Err(Error::Query(format!(
                "pattern of length {} for a {}-mer index",
                symbols.len(),
                self.k()
            )));
        }
        Ok(encode_symbols(&symbols, &self.item_memory))
    }

    /// CAM-decoded distance of every entry to `pattern`, in entry order.
    pub fn distances(&self, pattern: &str) -> Result<Vec<usize>> {
        let h = self.encode_pattern(pattern)?;
        let plans = (0..self.segments())
            .map(|j| {
                let symbols = (0..SEGMENT_WIDTH)
                    .map(|b| h.bit(j * SEGMENT_WIDTH + b) as u8)
                    .collect();
                self.array.plan(&SearchQuery::new(symbols), &self.ladder)
            })
            .collect::<Result<Vec<SearchPlan>>>()?;
        let i_on = self.array.cell_config().i_on_nominal();
        let segs = self.segments();
        if !self.array.is_nominal() {
            return (0..self.entries())
                .into_par_iter()
                .with_min_len(64)
                .map(|e| {
                    plans.iter().enumerate().try_fold(0, |acc, (j, plan)| {
                        let reading = self.array.search_row(e * segs + j, plan)?;
                        Ok(acc + decode_hamming(&reading, SEGMENT_WIDTH, i_on).hamming)
                    })
                })
                .collect();
        }
        Ok(self
            .array
            .binary_rows()
            .par_chunks(segs)
            .with_min_len(1024)
            .map(|words| {
                words
                    .iter()
                    .zip(&plans)
                    .map(|(&w, plan)| {
                        let reading = plan.binary_word_reading(w);
                        decode_hamming(&reading, SEGMENT_WIDTH, i_on).hamming
                    })
                    .sum()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryHit {
    pub offset: usize,
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryResult {
    pub hits: Vec<QueryHit>,
    pub threshold: usize,
}

impl QueryResult {
    pub fn offsets(&self) -> Vec<usize> {
        self.hits.iter().map(|h| h.offset).collect()
    }
}

pub fn build_index(
    reference: &str,
    config: &HdcConfig,
    params: DeviceParams,
    cell: CellConfig,
) -> Result<GenomeIndex> {
    let HdcConfig { k, stride, dim, seed, .. } = *config;
    if k == 0 || stride == 0 {
        return Err(Error::Config("k and stride must be at least 1".into()));
    }
    let item_memory = build_item_memory(seed, dim)?;
    let symbols = sequence_symbols(reference)?;
    if symbols.len() < k {
        return Err(Error::Config(format!(
            "reference of {} bases is shorter than k = {k}",
            symbols.len()
        )));
    }
    if params.num_levels() != 2 {
        return Err(Error::Config("the genome index needs a binary device".into()));
    }
    let ladder = make_ladder(&params, config.m_guard.unwrap_or_else(|| default_guard(&params)))?;
    let positions: Vec<usize> = (0..=symbols.len() - k).step_by(stride).collect();
    let segs = dim / SEGMENT_WIDTH;
    let mut array = CamArray::new(positions.len() * segs, SEGMENT_WIDTH, params, cell, seed)?;
    for (e, &p) in positions.iter().enumerate() {
        let h = encode_symbols(&symbols[p..p + k], &item_memory);
        for (j, &w) in h.words().iter().enumerate() {
            array.write_packed_binary(e * segs + j, &[w])?;
        }
    }
    Ok(GenomeIndex {
        config: config.clone(),
        item_memory,
        array,
        ladder,
        positions,
    })
}

/// Entries within `threshold` of `pattern`, sorted by distance then offset.
pub fn query(index: &GenomeIndex, pattern: &str, threshold: usize) -> Result<QueryResult> {
    if threshold > index.dim() {
        return Err(Error::Query(format!(
            "threshold {threshold} exceeds dimension {}",
            index.dim()
        )));
    }
    let mut hits: Vec<QueryHit> = index
        .distances(pattern)?
        .into_iter()
        .zip(&index.positions)
        .filter(|(d, _)| *d <= threshold)
        .map(|(distance, &offset)| QueryHit { offset, distance })
        .collect();
    hits.sort_by_key(|h| (h.distance, h.offset));
    Ok(QueryResult { hits, threshold })
}

/// Every offset where `pattern` occurs in `reference` (ASCII case-insensitive).
/// An empty pattern matches nowhere.
pub fn oracle_match(reference: &str, pattern: &str) -> Vec<usize> {
    let (r, p) = (reference.as_bytes(), pattern.as_bytes());
    if p.is_empty() || p.len() > r.len() {
        return Vec::new();
    }
    r.windows(p.len())
        .enumerate()
        .filter(|(_, w)| w.eq_ignore_ascii_case(p))
        .map(|(i, _)| i)
        .collect()
}
