use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{encode_query, CamWord, MlReading, Mode, SearchQuery, SearchVoltageLadder};
use crate::device::{cell_current_at, draw_shift, CellConfig, DeviceInstance, DeviceParams};
use crate::error::{Error, Result};

/// What happens to the physical device when a cell is rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WritePolicy {
    /// Same device, new programmed state.
    #[default]
    KeepDevice,
    /// Redraw the V_TH offsets of the rewritten row.
    FreshDevice,
}

/// A bank of equal-length CAM words.
///
/// Stored symbols are kept as bit planes (one plane per bit of the symbol,
/// 64 cells per `u64`), and V_TH offsets only when the array has variation.
/// [`CamArray::word`] materializes a row as a standalone [`CamWord`].
#[derive(Debug, Clone)]
pub struct CamArray {
    params: DeviceParams,
    cell: CellConfig,
    mode: Mode,
    rows: usize,
    wordlength: usize,
    words_per_plane: usize,
    planes: Vec<u64>,
    shifts: Option<Vec<f64>>,
    seed: u64,
    write_epoch: u64,
}

impl CamArray {
    /// All cells start in state 0. Device offsets are drawn per `(seed, row, cell)`.
    pub fn new(
        rows: usize,
        wordlength: usize,
        params: DeviceParams,
        cell: CellConfig,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        cell.validate()?;
        let mode = Mode::for_params(&params)?;
        if wordlength == 0 {
            return Err(Error::Config("wordlength must be at least 1".into()));
        }
        let words_per_plane = wordlength.div_ceil(64);
        let mut array = Self {
            planes: vec![0; rows * mode.bits_per_cell() * words_per_plane],
            shifts: (params.sigma_vth > 0.0).then(|| vec![0.0; rows * wordlength]),
            params,
            cell,
            mode,
            rows,
            wordlength,
            words_per_plane,
            seed,
            write_epoch: 0,
        };
        for row in 0..rows {
            array.draw_row_shifts(row);
        }
        Ok(array)
    }

    fn draw_row_shifts(&mut self, row: usize) {
        let sigma = self.params.sigma_vth;
        let n = self.wordlength;
        let Some(shifts) = self.shifts.as_mut() else { return };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.write_epoch << 40) | row as u64);
        for s in &mut shifts[row * n..(row + 1) * n] {
            *s = draw_shift(&mut rng, sigma);
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn wordlength(&self) -> usize {
        self.wordlength
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn cell_config(&self) -> &CellConfig {
        &self.cell
    }

    /// True when every device sits exactly at the nominal levels.
    pub fn is_nominal(&self) -> bool {
        self.shifts.is_none()
    }

    fn plane(&self, row: usize, bit: usize) -> &[u64] {
        let start = (row * self.mode.bits_per_cell() + bit) * self.words_per_plane;
        &self.planes[start..start + self.words_per_plane]
    }

    fn check_row(&self, row: usize) -> Result<()> {
        if row < self.rows {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "row {row} out of range for {} rows",
                self.rows
            )))
        }
    }

    pub fn symbol(&self, row: usize, i: usize) -> u8 {
        let (w, b) = (i / 64, i % 64);
        (0..self.mode.bits_per_cell()).fold(0u8, |acc, bit| {
            acc | ((((self.plane(row, bit)[w] >> b) & 1) as u8) << bit)
        })
    }

    pub fn read_word(&self, row: usize) -> Result<Vec<u8>> {
        self.check_row(row)?;
        Ok((0..self.wordlength).map(|i| self.symbol(row, i)).collect())
    }

    /// Programs a row. Rejects the whole write if any symbol is out of range.
    pub fn write_word(&mut self, row: usize, symbols: &[u8], policy: WritePolicy) -> Result<()> {
        if row >= self.rows {
            return Err(Error::InvalidWrite {
                row,
                reason: format!("only {} rows", self.rows),
            });
        }
        if symbols.len() != self.wordlength {
            return Err(Error::InvalidWrite {
                row,
                reason: format!("{} symbols for wordlength {}", symbols.len(), self.wordlength),
            });
        }
        let levels = self.mode.levels();
        if let Some(i) = symbols.iter().position(|&s| s as usize >= levels) {
            return Err(Error::InvalidWrite {
                row,
                reason: format!("symbol {} at cell {i} exceeds {} levels", symbols[i], levels),
            });
        }
        let bits = self.mode.bits_per_cell();
        let wpp = self.words_per_plane;
        for bit in 0..bits {
            let start = (row * bits + bit) * wpp;
            let plane = &mut self.planes[start..start + wpp];
            plane.fill(0);
            for (i, &s) in symbols.iter().enumerate() {
                plane[i / 64] |= (((s >> bit) & 1) as u64) << (i % 64);
            }
        }
        if policy == WritePolicy::FreshDevice {
            self.write_epoch += 1;
            self.draw_row_shifts(row);
        }
        Ok(())
    }

    /// Binary rows straight from packed bits (bit `i` of `bits` is cell `i`).
    pub(crate) fn write_packed_binary(&mut self, row: usize, bits: &[u64]) -> Result<()> {
        if self.mode != Mode::Binary || bits.len() != self.words_per_plane {
            return Err(Error::InvalidWrite {
                row,
                reason: "packed write needs a binary array and one u64 per 64 cells".into(),
            });
        }
        self.check_row(row)?;
        let start = row * self.words_per_plane;
        self.planes[start..start + self.words_per_plane].copy_from_slice(bits);
        let tail = self.wordlength % 64;
        if tail != 0 {
            self.planes[start + self.words_per_plane - 1] &= (1u64 << tail) - 1;
        }
        Ok(())
    }

    /// Packed stored bits of a binary row.
    pub(crate) fn packed_binary(&self, row: usize) -> &[u64] {
        self.plane(row, 0)
    }

    fn shift(&self, row: usize, i: usize) -> f64 {
        self.shifts
            .as_ref()
            .map_or(0.0, |s| s[row * self.wordlength + i])
    }

    pub fn device(&self, row: usize, i: usize) -> Result<DeviceInstance> {
        self.check_row(row)?;
        DeviceInstance::with_shift(&self.params, self.symbol(row, i) as usize, self.shift(row, i))
    }

    /// Row as a standalone word with the same devices.
    pub fn word(&self, row: usize) -> Result<CamWord> {
        let cells = (0..self.wordlength)
            .map(|i| self.device(row, i))
            .collect::<Result<Vec<_>>>()?;
        CamWord::new(self.params.clone(), self.cell, cells)
    }

    /// Precomputes everything about a query that does not depend on the row.
    pub fn plan(&self, query: &SearchQuery, ladder: &SearchVoltageLadder) -> Result<SearchPlan> {
        if ladder.num_levels() != self.mode.levels() {
            return Err(Error::Query(format!(
                "{}-level ladder used on a {}-level array",
                ladder.num_levels(),
                self.mode.levels()
            )));
        }
        if query.len() != self.wordlength {
            return Err(Error::Query(format!(
                "query of length {} for wordlength {}",
                query.len(),
                self.wordlength
            )));
        }
        let (step1, step2) = encode_query(query, ladder)?;
        let levels = self.mode.levels();
        let wpp = self.words_per_plane;
        let mut query_masks = vec![0u64; levels * wpp];
        for (i, &s) in query.symbols.iter().enumerate() {
            query_masks[s as usize * wpp + i / 64] |= 1 << (i % 64);
        }
        // Nominal current of a cell storing `s` searched with `q`, per step.
        let mut table1 = vec![0.0; levels * levels];
        let mut table2 = vec![0.0; levels * levels];
        if self.is_nominal() {
            for s in 0..levels {
                let vth = self.params.vth_levels[s];
                for q in 0..levels {
                    let (v1, v2) = ladder.step_voltages(q as u8);
                    table1[s * levels + q] = cell_current_at(v1, vth, &self.cell, &self.params)?;
                    table2[s * levels + q] = cell_current_at(v2, vth, &self.cell, &self.params)?;
                }
            }
        }
        Ok(SearchPlan {
            step1,
            step2,
            query_masks,
            table1,
            table2,
        })
    }

    /// Two-step reading of one row.
    ///
    /// Nominal arrays group cells by (stored, searched) symbol pair, which is
    /// the same current sum as [`CamArray::search_row_cellwise`] reordered.
    pub fn search_row(&self, row: usize, plan: &SearchPlan) -> Result<MlReading> {
        self.check_row(row)?;
        if !self.is_nominal() {
            return self.search_row_cellwise(row, plan);
        }
        let wpp = self.words_per_plane;
        if self.mode == Mode::Binary {
            return Ok(self.search_binary_nominal(row, plan));
        }
        let levels = self.mode.levels();
        let bits = self.mode.bits_per_cell();
        let (mut i1, mut i2) = (0.0, 0.0);
        for w in 0..wpp {
            let valid = if (w + 1) * 64 <= self.wordlength {
                u64::MAX
            } else {
                (1u64 << (self.wordlength % 64)) - 1
            };
            for s in 0..levels {
                let mut stored = valid;
                for bit in 0..bits {
                    let p = self.plane(row, bit)[w];
                    stored &= if (s >> bit) & 1 == 1 { p } else { !p };
                }
                if stored == 0 {
                    continue;
                }
                for q in 0..levels {
                    let count = (stored & plan.query_masks[q * wpp + w]).count_ones();
                    if count > 0 {
                        let c = count as f64;
                        i1 += c * plan.table1[s * levels + q];
                        i2 += c * plan.table2[s * levels + q];
                    }
                }
            }
        }
        Ok(MlReading {
            i_mls1: i1,
            i_mls2: i2,
        })
    }

    /// Nominal binary reading of a row, one 64-cell plane word at a time.
    fn search_binary_nominal(&self, row: usize, plan: &SearchPlan) -> MlReading {
        let wpp = self.words_per_plane;
        let mut counts = [0u32; 4];
        for w in 0..wpp {
            let valid = if (w + 1) * 64 <= self.wordlength {
                u64::MAX
            } else {
                (1u64 << (self.wordlength % 64)) - 1
            };
            let c = pair_counts(self.planes[row * wpp + w], plan.query_masks[wpp + w], valid);
            for k in 0..4 {
                counts[k] += c[k];
            }
        }
        plan.nominal_reading(&counts)
    }

    /// Stored bits of a binary array with wordlength 64, one `u64` per row.
    pub(crate) fn binary_rows(&self) -> &[u64] {
        assert!(self.mode == Mode::Binary && self.wordlength == 64);
        &self.planes
    }

    /// Two-step reading computed cell by cell with each device's own V_TH.
    pub fn search_row_cellwise(&self, row: usize, plan: &SearchPlan) -> Result<MlReading> {
        self.check_row(row)?;
        let (mut i1, mut i2) = (0.0, 0.0);
        for i in 0..self.wordlength {
            let vth = self.params.vth_levels[self.symbol(row, i) as usize] + self.shift(row, i);
            i1 += cell_current_at(plan.step1[i], vth, &self.cell, &self.params)?;
            i2 += cell_current_at(plan.step2[i], vth, &self.cell, &self.params)?;
        }
        Ok(MlReading {
            i_mls1: i1,
            i_mls2: i2,
        })
    }

    /// Searches every row against the same query.
    pub fn search_all(
        &self,
        query: &SearchQuery,
        ladder: &SearchVoltageLadder,
    ) -> Result<Vec<MlReading>> {
        let plan = self.plan(query, ladder)?;
        (0..self.rows).map(|r| self.search_row(r, &plan)).collect()
    }

    /// Writes one line per row, one symbol per column, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut line = Vec::with_capacity(self.wordlength);
        for row in 0..self.rows {
            line.clear();
            line.extend((0..self.wordlength).map(|i| self.symbol(row, i).to_string()));
            w.write_record(&line)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`CamArray::write_csv`]; devices are drawn from `seed`.
    pub fn read_csv<R: Read>(input: R, params: DeviceParams, cell: CellConfig, seed: u64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let symbols = rec
                .iter()
                .enumerate()
                .map(|(col, f)| {
                    f.trim().parse::<u8>().map_err(|_| {
                        Error::Config(format!("line {}, column {}: bad symbol {f:?}", line + 1, col + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(symbols);
        }
        let wordlength = rows.first().map_or(0, Vec::len);
        let mut array = Self::new(rows.len(), wordlength, params, cell, seed)?;
        for (row, symbols) in rows.iter().enumerate() {
            array.write_word(row, symbols, WritePolicy::KeepDevice)?;
        }
        Ok(array)
    }
}

/// Row-independent search data: per-cell step voltages, per-symbol query
/// masks, and (for nominal arrays) the per-pair cell currents.
#[derive(Debug, Clone)]
pub struct SearchPlan {
    step1: Vec<f64>,
    step2: Vec<f64>,
    query_masks: Vec<u64>,
    table1: Vec<f64>,
    table2: Vec<f64>,
}

/// Cell counts per (stored, searched) pair, indexed `s * 2 + q`.
#[inline]
fn pair_counts(p: u64, q: u64, valid: u64) -> [u32; 4] {
    let (p, q) = (p & valid, q & valid);
    let both = (p & q).count_ones();
    let ps = p.count_ones();
    let qs = q.count_ones();
    [valid.count_ones() + both - ps - qs, qs - both, ps - both, both]
}

impl SearchPlan {
    #[inline]
    fn nominal_reading(&self, counts: &[u32; 4]) -> MlReading {
        let (mut i1, mut i2) = (0.0, 0.0);
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                i1 += c as f64 * self.table1[k];
                i2 += c as f64 * self.table2[k];
            }
        }
        MlReading {
            i_mls1: i1,
            i_mls2: i2,
        }
    }

    /// Reading of one full 64-cell nominal binary word against a 64-cell plan.
    #[inline]
    pub(crate) fn binary_word_reading(&self, stored: u64) -> MlReading {
        self.nominal_reading(&pair_counts(stored, self.query_masks[1], u64::MAX))
    }

    pub fn step1(&self) -> &[f64] {
        &self.step1
    }

    pub fn step2(&self) -> &[f64] {
        &self.step2
    }
}
