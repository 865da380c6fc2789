//! FeFET device model and the 1FeFET1R cell.
//!
//! The FeFET is modeled behaviorally: an exponential subthreshold branch below
//! V_TH and a linear, V_G-dependent ON branch above it. The drain dependence is
//! a triode factor that reaches unity at `vd_sat`, so the formula is the
//! saturated drain current. With the limiter enabled the FET sits in series with
//! `rs`, and the cell current is the self-consistent solution of that divider.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (of `vd`) on the internal drain node of the series solve.
pub const SERIES_REL_TOL: f64 = 1e-9;
/// Iteration cap of the series solve. Valid inputs converge in about 30 steps.
pub const SERIES_MAX_ITER: usize = 200;

/// Nominal FeFET parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Threshold voltage of each storable state (V), strictly increasing.
    pub vth_levels: Vec<f64>,
    /// Subthreshold swing (mV/decade).
    pub ss: f64,
    /// Subthreshold current at V_G = V_TH (A).
    pub i0: f64,
    /// ON-branch transconductance (A/V).
    pub k_on: f64,
    /// Device-to-device V_TH standard deviation (V).
    pub sigma_vth: f64,
    /// Drain bias at which the channel current saturates (V).
    pub vd_sat: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::binary()
    }
}

impl DeviceParams {
    /// Two-state (LVT/HVT) device.
    pub fn binary() -> Self {
        Self {
            vth_levels: vec![0.4, 1.4],
            ss: 100.0,
            i0: 1e-9,
            k_on: 1e-5,
            sigma_vth: 0.05,
            vd_sat: 0.002,
        }
    }

    /// Four-state (2 bits/cell) device.
    pub fn four_level() -> Self {
        Self {
            vth_levels: vec![0.3, 0.8, 1.3, 1.8],
            ..Self::binary()
        }
    }

    pub fn with_sigma(mut self, sigma_vth: f64) -> Self {
        self.sigma_vth = sigma_vth;
        self
    }

    pub fn num_levels(&self) -> usize {
        self.vth_levels.len()
    }

    /// Smallest gap between adjacent threshold levels.
    pub fn min_level_spacing(&self) -> f64 {
        self.vth_levels
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vth_levels.len() < 2 {
            return Err(Error::InvalidParameter(
                "vth_levels needs at least two states".into(),
            ));
        }
        if self.vth_levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("vth_levels must be finite".into()));
        }
        if self.vth_levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "vth_levels must be strictly increasing".into(),
            ));
        }
        positive("ss", self.ss)?;
        positive("i0", self.i0)?;
        positive("k_on", self.k_on)?;
        positive("vd_sat", self.vd_sat)?;
        if !(self.sigma_vth.is_finite() && self.sigma_vth >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_vth must be finite and >= 0, got {}",
                self.sigma_vth
            )));
        }
        Ok(())
    }
}

/// Electrical configuration shared by every cell on a matchline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    /// Series limiter resistance (Ω).
    pub rs: f64,
    /// Drain (matchline) bias (V).
    pub vd: f64,
    /// Disabling the limiter models a bare FeFET cell.
    pub limiter_enabled: bool,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            rs: 1e6,
            vd: 0.1,
            limiter_enabled: true,
        }
    }
}

impl CellConfig {
    pub fn with_limiter(mut self, enabled: bool) -> Self {
        self.limiter_enabled = enabled;
        self
    }

    /// Clamp current `vd / rs`, used as the sensing unit everywhere.
    pub fn i_on_nominal(&self) -> f64 {
        self.vd / self.rs
    }

    pub fn validate(&self) -> Result<()> {
        positive("rs", self.rs)?;
        positive("vd", self.vd)
    }
}

/// One physical FeFET: a V_TH realization per state plus the programmed state.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceInstance {
    pub sampled_vth: Vec<f64>,
    pub stored_state: usize,
}

impl DeviceInstance {
    /// Device whose levels are the nominal ones shifted rigidly by `shift`.
    pub fn with_shift(params: &DeviceParams, stored_state: usize, shift: f64) -> Result<Self> {
        check_state(params, stored_state)?;
        Ok(Self {
            sampled_vth: params.vth_levels.iter().map(|v| v + shift).collect(),
            stored_state,
        })
    }

    pub fn nominal(params: &DeviceParams, stored_state: usize) -> Result<Self> {
        Self::with_shift(params, stored_state, 0.0)
    }

    /// Threshold voltage of the programmed state.
    pub fn vth(&self) -> f64 {
        self.sampled_vth[self.stored_state]
    }

    pub fn program(&mut self, state: usize) -> Result<()> {
        if state >= self.sampled_vth.len() {
            return Err(Error::InvalidParameter(format!(
                "state {state} out of range for {} levels",
                self.sampled_vth.len()
            )));
        }
        self.stored_state = state;
        Ok(())
    }
}

/// Draws one rigid V_TH offset.
pub fn draw_shift<R: Rng + ?Sized>(rng: &mut R, sigma_vth: f64) -> f64 {
    if sigma_vth == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    sigma_vth * z
}

/// Samples a device: every level shifts by one shared `N(0, sigma_vth)` offset.
pub fn sample_device(params: &DeviceParams, stored_state: usize, seed: u64) -> Result<DeviceInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = draw_shift(&mut rng, params.sigma_vth);
    DeviceInstance::with_shift(params, stored_state, shift)
}

/// Drain current of a bare FeFET.
pub fn fet_current(vg: f64, vd: f64, vth: f64, params: &DeviceParams) -> Result<f64> {
    if !(vg.is_finite() && vd.is_finite() && vth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite bias: vg={vg}, vd={vd}, vth={vth}"
        )));
    }
    if vd < 0.0 {
        return Err(Error::InvalidParameter(format!("vd must be >= 0, got {vd}")));
    }
    Ok(channel_current(vg, vd, vth, params))
}

/// Saturated drain current as a function of gate overdrive.
pub(crate) fn gate_current(vg: f64, vth: f64, p: &DeviceParams) -> f64 {
    let ov = vg - vth;
    if ov < 0.0 {
        p.i0 * 10f64.powf(ov * 1000.0 / p.ss)
    } else {
        p.i0 + p.k_on * ov
    }
}

fn drain_factor(vds: f64, p: &DeviceParams) -> f64 {
    let x = vds / p.vd_sat;
    if x >= 1.0 {
        1.0
    } else {
        x * (2.0 - x)
    }
}

pub(crate) fn channel_current(vg: f64, vds: f64, vth: f64, p: &DeviceParams) -> f64 {
    gate_current(vg, vth, p) * drain_factor(vds, p)
}

/// Large-signal channel resistance at drain bias `vd`.
pub fn on_resistance(vg: f64, vd: f64, vth: f64, params: &DeviceParams) -> Result<f64> {
    Ok(vd / fet_current(vg, vd, vth, params)?)
}

/// Current of a 1FeFET1R cell (or a bare FeFET when the limiter is disabled).
pub fn cell_current(
    vg: f64,
    device: &DeviceInstance,
    cell: &CellConfig,
    params: &DeviceParams,
) -> Result<f64> {
    if device.sampled_vth.len() != params.vth_levels.len() {
        return Err(Error::InvalidParameter(format!(
            "device has {} levels, params have {}",
            device.sampled_vth.len(),
            params.vth_levels.len()
        )));
    }
    check_state(params, device.stored_state)?;
    if !vg.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite vg {vg}")));
    }
    cell_current_at(vg, device.vth(), cell, params)
}

/// Cell current for a known programmed threshold; no input validation.
pub(crate) fn cell_current_at(vg: f64, vth: f64, cell: &CellConfig, p: &DeviceParams) -> Result<f64> {
    if !cell.limiter_enabled {
        return Ok(channel_current(vg, cell.vd, vth, p));
    }
    // f(v) = I_fet(v) - (vd - v)/rs rises strictly on [0, vd]: f(0) < 0 <= f(vd).
    let (vd, rs) = (cell.vd, cell.rs);
    let tol = SERIES_REL_TOL * vd;
    // Only the drain factor depends on the internal node.
    let gate = gate_current(vg, vth, p);
    if vd - gate * rs >= p.vd_sat + 2.0 * tol {
        // The root lies in saturation with room to spare, where bisection
        // ends on a node with unit drain factor.
        return Ok(gate);
    }
    // Compared as I_fet * rs < vd - v, with the drain factor inlined.
    let drop = gate * rs;
    let inv_sat = 1.0 / p.vd_sat;
    let drain = |v: f64| {
        let x = v * inv_sat;
        if x >= 1.0 {
            1.0
        } else {
            x * (2.0 - x)
        }
    };
    // Otherwise the root cannot sit above the saturation knee.
    let (mut lo, mut hi) = (0.0, vd.min(p.vd_sat + 2.0 * tol));
    for _ in 0..SERIES_MAX_ITER {
        if hi - lo <= tol {
            // Both are lower bounds on the root current: the channel side is
            // tight when the FET limits, the resistor side when rs does.
            return Ok((gate * drain(lo)).max((vd - hi) / rs).min(vd / rs));
        }
        let mid = 0.5 * (lo + hi);
        let below = drop * drain(mid) < vd - mid;
        lo = if below { mid } else { lo };
        hi = if below { hi } else { mid };
    }
    Err(Error::Numerical(format!(
        "series solve did not converge (vg={vg}, vth={vth})"
    )))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn check_state(params: &DeviceParams, state: usize) -> Result<()> {
    if state < params.num_levels() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "stored state {state} out of range for {} levels",
            params.num_levels()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn high_leak_params() -> DeviceParams {
        DeviceParams {
            i0: 1e-7,
            ..DeviceParams::binary()
        }
    }

    #[test]
    fn fet_current_at_threshold_is_i0() {
        let p = high_leak_params();
        assert_eq!(fet_current(0.7, 0.1, 0.7, &p).unwrap(), 1e-7);
    }

    #[test]
    fn fet_current_subthreshold_and_on_branch() {
        let p = high_leak_params();
        // 1e-7 * 10^(-500/100)
        assert_relative_eq!(fet_current(0.2, 0.1, 0.7, &p).unwrap(), 1e-12, max_relative = 1e-12);
        // 1e-7 + 1e-5 * 1.0
        assert_relative_eq!(fet_current(1.7, 0.1, 0.7, &p).unwrap(), 1.01e-5, max_relative = 1e-12);
    }

    #[test]
    fn fet_current_rejects_non_finite() {
        let p = DeviceParams::binary();
        assert!(matches!(
            fet_current(f64::NAN, 0.1, 0.4, &p),
            Err(Error::InvalidParameter(_))
        ));
        assert!(fet_current(0.5, f64::INFINITY, 0.4, &p).is_err());
        assert!(fet_current(0.5, -0.1, 0.4, &p).is_err());
    }

    #[test]
    fn fet_current_strictly_increasing_on_mv_grid() {
        let p = DeviceParams::binary();
        let vth = 0.4;
        let mut prev = fet_current(vth - 1.0, 0.1, vth, &p).unwrap();
        for step in 1..=3000 {
            let vg = vth - 1.0 + step as f64 * 1e-3;
            let i = fet_current(vg, 0.1, vth, &p).unwrap();
            assert!(i > prev, "not increasing at vg={vg}");
            prev = i;
        }
    }

    #[test]
    fn limiter_disabled_is_pass_through() {
        let p = DeviceParams::binary();
        let cell = CellConfig::default().with_limiter(false);
        let dev = DeviceInstance::with_shift(&p, 1, 0.03).unwrap();
        for vg in [-0.5, 0.2, 1.0, 1.43, 2.5] {
            assert_eq!(
                cell_current(vg, &dev, &cell, &p).unwrap(),
                fet_current(vg, cell.vd, dev.vth(), &p).unwrap()
            );
        }
    }

    #[test]
    fn deep_subthreshold_cell_matches_bare_fet() {
        let p = high_leak_params();
        let cell = CellConfig::default();
        let dev = DeviceInstance::nominal(&p, 0).unwrap();
        let vg = dev.vth() - 1.0;
        let clamped = cell_current(vg, &dev, &cell, &p).unwrap();
        let bare = fet_current(vg, cell.vd, dev.vth(), &p).unwrap();
        assert_relative_eq!(clamped, bare, max_relative = 1e-3);
    }

    #[test]
    fn strong_on_cell_is_clamped_to_vd_over_rs() {
        let p = high_leak_params();
        let cell = CellConfig::default();
        let dev = DeviceInstance::nominal(&p, 0).unwrap();
        let i = cell_current(dev.vth() + 1.0, &dev, &cell, &p).unwrap();
        assert!((i - 100e-9).abs() <= 0.05 * 100e-9, "i = {i}");
        assert!(i <= cell.i_on_nominal());
    }

    #[test]
    fn series_solution_is_self_consistent() {
        let p = DeviceParams::binary();
        let cell = CellConfig::default();
        let dev = DeviceInstance::nominal(&p, 1).unwrap();
        for vg in [0.9, 1.3, 1.4, 1.45, 1.7, 2.4] {
            let i = cell_current(vg, &dev, &cell, &p).unwrap();
            // KCL residual changes sign around the implied internal node voltage.
            let v = cell.vd - i * cell.rs;
            let f = |x: f64| channel_current(vg, x, dev.vth(), &p) - (cell.vd - x) / cell.rs;
            let d = 1e-4 * cell.vd;
            assert!(f((v - d).max(0.0)) <= 0.0 && f((v + d).min(cell.vd)) >= 0.0, "vg = {vg}");
        }
    }

    #[test]
    fn solve_matches_converged_root() {
        let p = DeviceParams::binary();
        let cell = CellConfig::default();
        // Bracket the root far tighter than the solver does.
        let fine = |vg: f64, vth: f64| {
            let (mut lo, mut hi) = (0.0, cell.vd);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if channel_current(vg, mid, vth, &p) < (cell.vd - mid) / cell.rs {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            channel_current(vg, lo, vth, &p)
        };
        for k in 0..=400 {
            let vg = -0.5 + 0.0075 * k as f64;
            for vth in [0.4, 1.4, 1.23] {
                let i = cell_current_at(vg, vth, &cell, &p).unwrap();
                let r = fine(vg, vth);
                assert!((i - r).abs() <= 1e-8 * r, "vg = {vg}, vth = {vth}: {i} vs {r}");
            }
        }
    }

    #[test]
    fn zero_sigma_sampling_is_nominal() {
        let p = DeviceParams::binary().with_sigma(0.0);
        let d = sample_device(&p, 1, 99).unwrap();
        assert_eq!(d.sampled_vth, p.vth_levels);
        assert_eq!(d.stored_state, 1);
    }

    #[test]
    fn sampling_is_deterministic_and_rigid() {
        let p = DeviceParams::four_level();
        let a = sample_device(&p, 2, 1234).unwrap();
        let b = sample_device(&p, 2, 1234).unwrap();
        assert_eq!(a, b);
        let shift = a.sampled_vth[0] - p.vth_levels[0];
        for (s, n) in a.sampled_vth.iter().zip(&p.vth_levels) {
            assert_relative_eq!(s - n, shift, epsilon = 1e-12);
        }
        assert_ne!(a, sample_device(&p, 2, 1235).unwrap());
    }

    #[test]
    fn sampled_shift_has_requested_spread() {
        let p = DeviceParams::binary().with_sigma(0.05);
        let shifts: Vec<f64> = (0..10_000u64)
            .map(|seed| sample_device(&p, 0, seed).unwrap().vth() - p.vth_levels[0])
            .collect();
        let n = shifts.len() as f64;
        let mean = shifts.iter().sum::<f64>() / n;
        let sd = (shifts.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((0.048..=0.052).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = DeviceParams::binary();
        p.vth_levels = vec![1.0, 0.5];
        assert!(p.validate().is_err());
        let mut p = DeviceParams::binary();
        p.ss = 0.0;
        assert!(p.validate().is_err());
        let c = CellConfig { rs: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
        assert!(DeviceInstance::nominal(&DeviceParams::binary(), 2).is_err());
    }
}
