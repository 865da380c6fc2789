//! Matchline current decoders.

use serde::{Deserialize, Serialize};

use super::MlReading;

/// Default match/mismatch band for exact-match decoding, in units of I_ON.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.4;

/// Mismatch counts recovered from a two-step reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingDecode {
    /// Cells storing 0 searched with 1 (conducting in step 1).
    pub n_st0sr1: usize,
    /// Cells storing 1 searched with 0 (dark in step 2).
    pub n_st1sr0: usize,
    pub hamming: usize,
}

fn round_clamped(x: f64, n: usize) -> usize {
    let r = x + 0.5;
    // Truncation equals floor for r >= 1; everything below (and NaN) is 0.
    if r >= 1.0 {
        (r as usize).min(n)
    } else {
        0
    }
}

/// Decodes the Hamming distance of a binary word.
///
/// Counts are rounded half-up and clamped to `[0, n]`.
pub fn decode_hamming(reading: &MlReading, n: usize, i_on_nominal: f64) -> HammingDecode {
    assert!(i_on_nominal > 0.0, "i_on_nominal must be positive");
    let n_st0sr1 = round_clamped(reading.i_mls1 / i_on_nominal, n);
    let n_st1sr0 = round_clamped(n as f64 - reading.i_mls2 / i_on_nominal, n);
    HammingDecode {
        n_st0sr1,
        n_st1sr0,
        hamming: n_st0sr1 + n_st1sr0,
    }
}

/// Exact-match decision: low step-1 current and near-full step-2 current.
pub fn decode_mlc_match(
    reading: &MlReading,
    n: usize,
    i_on_nominal: f64,
    margin_fraction: f64,
) -> bool {
    assert!(
        margin_fraction > 0.0 && margin_fraction < 0.5,
        "margin_fraction must lie in (0, 0.5)"
    );
    reading.i_mls1 < margin_fraction * i_on_nominal
        && reading.i_mls2 > (n as f64 - margin_fraction) * i_on_nominal
}
