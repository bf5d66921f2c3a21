//! Geometry-driven channel model.
//!
//! The chain per user and subframe is:
//!
//! 1. line-of-sight test against the box obstacles ([`is_los`]),
//! 2. free-space path loss at the carrier frequency, plus a fixed penalty
//!    when blocked and an AR(1) log-normal shadowing term ([`path_loss_db`]),
//! 3. link budget to SINR ([`sinr_db`]),
//! 4. SINR to MCS index and bits per data symbol ([`sinr_to_mcs`],
//!    [`mcs_bits_per_symbol`]).
//!
//! The spectral-efficiency table is deliberately simple — linear in the MCS
//! index, `eta(m) = m / 5` bit/s/Hz — which keeps every step reproducible by
//! hand. Swap [`mcs_bits_per_symbol`] / `max_mcs` via the scenario if a
//! different table is needed.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::types::{McsIndex, Position, SubframeConfig, UeId};
use crate::{Result, SimError};

/// Speed of light used throughout, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 2.998e8;

/// Distances below this are clamped before the path-loss log, metres.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 1.0;

/// Axis-aligned box obstacle, described by its centre and half extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    pub center: Position,
    pub half_width: f64,
    pub half_height: f64,
}

impl ObstacleBox {
    pub fn new(center: Position, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0)
            || !half_width.is_finite()
            || !half_height.is_finite()
        {
            return Err(SimError::Config(format!(
                "obstacle half extents must be positive and finite, got {half_width} x {half_height}"
            )));
        }
        Ok(ObstacleBox {
            center,
            half_width,
            half_height,
        })
    }

    pub fn min_x(&self) -> f64 {
        self.center.x - self.half_width
    }
    pub fn max_x(&self) -> f64 {
        self.center.x + self.half_width
    }
    pub fn min_y(&self) -> f64 {
        self.center.y - self.half_height
    }
    pub fn max_y(&self) -> f64 {
        self.center.y + self.half_height
    }

    /// Point-in-box test, boundary inclusive.
    pub fn contains(&self, p: Position) -> bool {
        p.x >= self.min_x() && p.x <= self.max_x() && p.y >= self.min_y() && p.y <= self.max_y()
    }

    /// Segment-vs-box intersection (slab test), boundary inclusive: a segment
    /// that only grazes an edge or corner still counts as hitting the box.
    fn hit_by_segment(&self, a: Position, b: Position) -> bool {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;

        if dx == 0.0 {
            if a.x < self.min_x() || a.x > self.max_x() {
                return false;
            }
        } else {
            let ta = (self.min_x() - a.x) / dx;
            let tb = (self.max_x() - a.x) / dx;
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }

        if dy == 0.0 {
            if a.y < self.min_y() || a.y > self.max_y() {
                return false;
            }
        } else {
            let ta = (self.min_y() - a.y) / dy;
            let tb = (self.max_y() - a.y) / dy;
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }

        t0 <= t1
    }
}

/// True iff the segment `tx -> rx` crosses none of the obstacles.
///
/// Touching an obstacle boundary counts as blocked. A zero-length segment has
/// no defined direction and is rejected.
pub fn is_los(tx: Position, rx: Position, obstacles: &[ObstacleBox]) -> Result<bool> {
    if tx == rx {
        return Err(SimError::Runtime(format!(
            "line-of-sight test for zero-length segment at ({}, {})",
            tx.x, tx.y
        )));
    }
    Ok(!obstacles.iter().any(|b| b.hit_by_segment(tx, rx)))
}

/// Radio parameters of the cell: transmit side, noise side and the knobs of
/// the loss model. All values configurable per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    /// Extra loss applied once when the link is blocked.
    pub nlos_penalty_db: f64,
    /// Standard deviation of the AR(1) shadowing process, dB. Zero disables it.
    pub shadow_sigma_db: f64,
    /// Per-subframe correlation of the shadowing process, `0 <= rho < 1`.
    pub shadow_rho: f64,
    /// Cap on the MCS the link adaptation may report, 1..=28.
    pub max_mcs: u8,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_dbm: 30.0,
            antenna_gain_dbi: 25.0,
            noise_figure_db: 7.0,
            bandwidth_hz: 1e9,
            carrier_hz: 28e9,
            nlos_penalty_db: 30.0,
            shadow_sigma_db: 4.0,
            shadow_rho: 0.9,
            max_mcs: 28,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(SimError::Config(format!(
                "bandwidth_hz must be > 0, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(SimError::Config(format!(
                "carrier_hz must be > 0, got {}",
                self.carrier_hz
            )));
        }
        if !(self.nlos_penalty_db.is_finite() && self.nlos_penalty_db >= 0.0) {
            return Err(SimError::Config(format!(
                "nlos_penalty_db must be >= 0, got {}",
                self.nlos_penalty_db
            )));
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return Err(SimError::Config(format!(
                "shadow_sigma_db must be >= 0, got {}",
                self.shadow_sigma_db
            )));
        }
        if !(self.shadow_rho.is_finite() && (0.0..1.0).contains(&self.shadow_rho)) {
            return Err(SimError::Config(format!(
                "shadow_rho must be in [0, 1), got {}",
                self.shadow_rho
            )));
        }
        if !(self.tx_power_dbm.is_finite()
            && self.antenna_gain_dbi.is_finite()
            && self.noise_figure_db.is_finite())
        {
            return Err(SimError::Config("link budget terms must be finite".into()));
        }
        McsIndex::new(self.max_mcs)
            .map_err(|_| SimError::Config(format!("max_mcs {} out of range 1..=28", self.max_mcs)))?;
        Ok(())
    }

    /// Thermal noise floor over the configured bandwidth, dBm.
    pub fn noise_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Free-space path loss in dB at `distance_m` / `carrier_hz`.
///
/// Distances under [`MIN_PATHLOSS_DISTANCE_M`] are clamped so the near field
/// does not produce negative loss.
pub fn fspl_db(distance_m: f64, carrier_hz: f64) -> f64 {
    let d = distance_m.max(MIN_PATHLOSS_DISTANCE_M);
    20.0 * (4.0 * std::f64::consts::PI * d * carrier_hz / SPEED_OF_LIGHT_M_S).log10()
}

/// Total path loss: free-space loss, plus the blockage penalty when not in
/// line of sight, plus the current shadowing value.
pub fn path_loss_db(distance_m: f64, budget: &LinkBudget, los: bool, shadow_db: f64) -> f64 {
    let mut loss = fspl_db(distance_m, budget.carrier_hz);
    if !los {
        loss += budget.nlos_penalty_db;
    }
    loss + shadow_db
}

/// SINR over the configured bandwidth given a total path loss.
pub fn sinr_db(pathloss_db: f64, budget: &LinkBudget) -> f64 {
    budget.tx_power_dbm + budget.antenna_gain_dbi - pathloss_db - budget.noise_dbm()
}

/// Link adaptation: SINR floor-mapped onto the MCS ladder and clamped to the
/// valid range, one index per whole dB.
pub fn sinr_to_mcs(sinr_db: f64) -> McsIndex {
    debug_assert!(sinr_db.is_finite());
    let idx = (sinr_db.floor() as i64 + 7).clamp(1, 28) as u8;
    McsIndex::new(idx).expect("clamped index is always in range")
}

/// Bits one data symbol carries at `mcs`: spectral efficiency `mcs / 5`
/// bit/s/Hz over the full bandwidth for one symbol duration, rounded down.
pub fn mcs_bits_per_symbol(mcs: McsIndex, budget: &LinkBudget, cfg: &SubframeConfig) -> u64 {
    let eta = mcs.get() as f64 / 5.0;
    (eta * budget.bandwidth_hz * cfg.symbol_duration_s()).floor() as u64
}

/// AR(1) shadowing state of one link, in dB.
///
/// `s(t) = rho * s(t-1) + sqrt(1 - rho^2) * N(0, sigma^2)`, started from the
/// stationary distribution so early subframes are statistically no different
/// from late ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowState {
    value_db: f64,
}

impl ShadowState {
    pub fn init<R: Rng>(budget: &LinkBudget, rng: &mut R) -> Self {
        let z: f64 = rng.sample(StandardNormal);
        ShadowState {
            value_db: budget.shadow_sigma_db * z,
        }
    }

    /// Advance one subframe and return the new value.
    pub fn step<R: Rng>(&mut self, budget: &LinkBudget, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let rho = budget.shadow_rho;
        self.value_db =
            rho * self.value_db + (1.0 - rho * rho).sqrt() * budget.shadow_sigma_db * z;
        self.value_db
    }

    pub fn value_db(&self) -> f64 {
        self.value_db
    }
}

/// Channel state of one user in one subframe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSnapshot {
    pub ue: UeId,
    pub los: bool,
    pub pathloss_db: f64,
    pub sinr_db: f64,
    pub mcs: McsIndex,
    pub bits_per_data_symbol: u64,
}

/// Compose the full chain for one user: advances the shadowing state by one
/// subframe and reports geometry, loss, SINR and the adapted rate.
#[allow(clippy::too_many_arguments)]
pub fn snapshot<R: Rng>(
    ue: UeId,
    ue_pos: Position,
    enb_pos: Position,
    obstacles: &[ObstacleBox],
    budget: &LinkBudget,
    cfg: &SubframeConfig,
    shadow: &mut ShadowState,
    rng: &mut R,
) -> Result<ChannelSnapshot> {
    let los = is_los(enb_pos, ue_pos, obstacles)?;
    let shadow_db = shadow.step(budget, rng);
    let distance = enb_pos.distance(ue_pos);
    let pathloss = path_loss_db(distance, budget, los, shadow_db);
    let sinr = sinr_db(pathloss, budget);
    let mcs = sinr_to_mcs(sinr).min(McsIndex::new(budget.max_mcs)?);
    Ok(ChannelSnapshot {
        ue,
        los,
        pathloss_db: pathloss,
        sinr_db: sinr,
        mcs,
        bits_per_data_symbol: mcs_bits_per_symbol(mcs, budget, cfg),
    })
}
