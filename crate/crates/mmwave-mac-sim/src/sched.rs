//! Subframe scheduler family.
//!
//! All policies share the same shape: each subframe, every backlogged user
//! gets one metric evaluation, the allocator repeatedly picks the highest
//! metric (ties to the lowest user id), grants enough whole data symbols to
//! cover the backlog at the reported rate — capped by what is left of the
//! subframe — and excludes the user from further picks. Afterwards each
//! user's average-rate tracker is updated exactly once.
//!
//! Metrics:
//!
//! * round robin — subframes since the user's last grant;
//! * max rate — the normalized instantaneous rate `r`;
//! * standard PF — `r / R` where `R` is the tracked average;
//! * generalized PF — `r^alpha / R^beta`;
//! * enhanced PF — picks like standard PF, but when a user is served its
//!   average is charged `r^gamma(m)` instead of `r`, with the exponent driven
//!   by the current MCS `m` (see [`epf_exponent`]). A strong-channel grant
//!   (gamma above one) is under-charged relative to standard PF, a
//!   weak-channel grant over-charged, which tilts future contention toward
//!   users whose channel is currently worth serving.
//!
//! Rates are normalized by a reference rate (the peak one-user service rate
//! by default) before any exponentiation, so the arithmetic is unit-free and
//! `r` lies in `(0, 1]` under the default reference.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSnapshot;
use crate::types::{McsIndex, RateBps, SubframeConfig, UeId};
use crate::{channel, Result, SimError};

/// Scheduling policy selector.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[value(alias = "rr")]
    RoundRobin,
    #[value(alias = "maxrate", alias = "mr")]
    MaxRate,
    Spf,
    Gpf,
    Epf,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::RoundRobin,
        Policy::MaxRate,
        Policy::Spf,
        Policy::Gpf,
        Policy::Epf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::RoundRobin => "round-robin",
            Policy::MaxRate => "max-rate",
            Policy::Spf => "spf",
            Policy::Gpf => "gpf",
            Policy::Epf => "epf",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Policy> {
        match s {
            "round-robin" | "rr" => Ok(Policy::RoundRobin),
            "max-rate" | "maxrate" | "mr" => Ok(Policy::MaxRate),
            "spf" => Ok(Policy::Spf),
            "gpf" => Ok(Policy::Gpf),
            "epf" => Ok(Policy::Epf),
            other => Err(SimError::Config(format!(
                "unknown scheduler '{other}' (expected rr, maxrate, spf, gpf or epf)"
            ))),
        }
    }
}

/// How the enhanced-PF exponent is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// Exponent follows the serving MCS, `m / 28 + 1/2`.
    McsDriven,
    /// Fixed exponent; `1.0` makes enhanced PF coincide with standard PF.
    Fixed(f64),
}

/// Tunables of the PF family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfConfig {
    /// Averaging window of the rate tracker, in subframes.
    pub t_c: f64,
    /// Generalized-PF rate exponent.
    pub alpha: f64,
    /// Generalized-PF average exponent.
    pub beta: f64,
    pub gamma_mode: GammaMode,
    /// Normalization reference for instantaneous rates.
    pub r_ref: RateBps,
    /// Floor applied to tracked averages so priorities stay finite.
    pub epsilon: f64,
}

/// Initial value of every tracked average (normalized).
pub const INITIAL_AVG_RATE: f64 = 1e-3;

impl PfConfig {
    /// Defaults with the normalization reference derived from the subframe
    /// layout and link budget: the rate of one user holding every data symbol
    /// at the top of the MCS ladder.
    pub fn default_for(cfg: &SubframeConfig, budget: &channel::LinkBudget) -> Self {
        PfConfig {
            t_c: 100.0,
            alpha: 1.0,
            beta: 1.0,
            gamma_mode: GammaMode::McsDriven,
            r_ref: peak_service_rate(cfg, budget),
            epsilon: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_c.is_finite() && self.t_c >= 1.0) {
            return Err(SimError::Config(format!("t_c must be >= 1, got {}", self.t_c)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(SimError::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(SimError::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if let GammaMode::Fixed(g) = self.gamma_mode {
            if !(g.is_finite() && g > 0.0) {
                return Err(SimError::Config(format!("fixed gamma must be > 0, got {g}")));
            }
        }
        if !(self.r_ref.bps().is_finite() && self.r_ref.bps() > 0.0) {
            return Err(SimError::Config("r_ref must be > 0".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SimError::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl Default for PfConfig {
    fn default() -> Self {
        PfConfig::default_for(&SubframeConfig::default(), &channel::LinkBudget::default())
    }
}

/// Best-case one-user service rate: all data symbols at the top MCS.
pub fn peak_service_rate(cfg: &SubframeConfig, budget: &channel::LinkBudget) -> RateBps {
    let bits = cfg.data_symbols() as u64 * channel::mcs_bits_per_symbol(McsIndex::MAX, budget, cfg);
    let duration_s = cfg.duration_us as f64 * 1e-6;
    RateBps::new(bits as f64 / duration_s).expect("positive layout")
}

/// Per-user scheduler bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfUeState {
    /// Tracked average rate, normalized by `r_ref`, floored at epsilon.
    pub avg_rate_norm: f64,
    /// Subframes since this user last received a grant.
    pub since_grant: u64,
    /// Whether the user has ever presented backlog. Until then the average
    /// neither charges nor decays, so idle-from-birth users do not accrue an
    /// artificial priority boost before their first packet.
    pub had_traffic: bool,
}

/// Scheduler state for all users of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PfState {
    ues: Vec<PfUeState>,
}

impl PfState {
    pub fn new(n_ues: usize) -> Self {
        PfState {
            ues: vec![
                PfUeState {
                    avg_rate_norm: INITIAL_AVG_RATE,
                    since_grant: 0,
                    had_traffic: false,
                };
                n_ues
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.ues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ues.is_empty()
    }

    pub fn ue(&self, ue: UeId) -> &PfUeState {
        &self.ues[ue.index()]
    }
}

/// What one user asks of the scheduler this subframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeDemand {
    pub ue: UeId,
    pub backlog_bits: u64,
    /// Channel state as the scheduler sees it (possibly stale).
    pub snapshot: ChannelSnapshot,
}

/// One grant, in the order the allocator issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grant {
    pub ue: UeId,
    pub symbols: u32,
}

/// Outcome of one subframe's allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    /// Grants in the order they were issued.
    pub grants: Vec<Grant>,
    /// Metric of every backlogged user at its (single) evaluation,
    /// in ascending user order.
    pub priorities: Vec<(UeId, f64)>,
    pub total_symbols: u32,
}

/// Instantaneous service rate of a user if it held every data symbol this
/// subframe, normalized by the configured reference rate.
pub fn instantaneous_rate_norm(
    snap: &ChannelSnapshot,
    cfg: &SubframeConfig,
    pf: &PfConfig,
) -> f64 {
    let bits = cfg.data_symbols() as u64 * snap.bits_per_data_symbol;
    let duration_s = cfg.duration_us as f64 * 1e-6;
    (bits as f64 / duration_s) / pf.r_ref.bps()
}

/// One step of the average-rate tracker.
///
/// Served users blend in their contribution with weight `1/t_c`; unserved
/// users decay by `1 - 1/t_c`. The result is floored so later divisions stay
/// well-defined.
pub fn ewma_update(prev: f64, contribution: f64, scheduled: bool, t_c: f64, floor: f64) -> f64 {
    debug_assert!(t_c >= 1.0);
    let keep = 1.0 - 1.0 / t_c;
    let next = if scheduled {
        keep * prev + contribution / t_c
    } else {
        keep * prev
    };
    next.max(floor)
}

/// Enhanced-PF exponent for a serving MCS: `m / 28 + 1/2`, spanning
/// `[0.5357, 1.5]` across the ladder and crossing one exactly at mid-ladder.
pub fn epf_exponent(mcs: McsIndex) -> f64 {
    mcs.get() as f64 / 28.0 + 0.5
}

fn gamma_pow(rate_norm: f64, gamma: f64) -> f64 {
    // Exponent one must reproduce the plain rate bit-for-bit so the enhanced
    // scheduler genuinely collapses onto standard PF.
    if gamma == 1.0 {
        rate_norm
    } else {
        rate_norm.powf(gamma)
    }
}

/// Average-rate charge of an enhanced-PF grant: `r^gamma(mcs)`.
///
/// For `r < 1` this sits below the standard-PF charge when the exponent
/// exceeds one and above it when the exponent is below one.
pub fn epf_contribution(rate_norm: f64, mcs: McsIndex) -> f64 {
    gamma_pow(rate_norm, epf_exponent(mcs))
}

/// PF priority `r^alpha / R^beta`. The tracked average must already be
/// floored (positive).
pub fn pf_priority(rate_norm: f64, avg_rate_norm: f64, alpha: f64, beta: f64) -> f64 {
    debug_assert!(avg_rate_norm > 0.0, "average must be floored before use");
    let num = if alpha == 1.0 {
        rate_norm
    } else {
        rate_norm.powf(alpha)
    };
    let den = if beta == 1.0 {
        avg_rate_norm
    } else {
        avg_rate_norm.powf(beta)
    };
    num / den
}

/// Allocate the data symbols of one subframe.
///
/// Greedy: evaluate every backlogged user's metric once, then repeatedly pick
/// the maximum (ties to the lowest user id), grant `ceil(backlog / bits per
/// symbol)` symbols capped by what remains, and exclude the user. Afterwards
/// every user's tracker is updated exactly once — served users are charged
/// their (policy-dependent) contribution, unserved users decay, and users
/// that have never yet had traffic are left untouched.
pub fn allocate(
    demands: &[UeDemand],
    state: &mut PfState,
    pf: &PfConfig,
    cfg: &SubframeConfig,
    policy: Policy,
) -> Result<Allocation> {
    let n = state.len();
    let mut by_index: Vec<Option<&UeDemand>> = vec![None; n];
    for d in demands {
        let idx = d.ue.index();
        if idx >= n {
            return Err(SimError::Runtime(format!(
                "demand for unknown {} (state tracks {n} users)",
                d.ue
            )));
        }
        if by_index[idx].is_some() {
            return Err(SimError::Runtime(format!("duplicate demand for {}", d.ue)));
        }
        by_index[idx] = Some(d);
    }

    // Single metric evaluation per backlogged user.
    let mut rate = vec![0.0f64; n];
    let mut metric: Vec<Option<f64>> = vec![None; n];
    for (idx, slot) in by_index.iter().enumerate() {
        let Some(d) = slot else { continue };
        rate[idx] = instantaneous_rate_norm(&d.snapshot, cfg, pf);
        if d.backlog_bits == 0 || d.snapshot.bits_per_data_symbol == 0 {
            continue;
        }
        let st = &state.ues[idx];
        let m = match policy {
            Policy::RoundRobin => st.since_grant as f64,
            Policy::MaxRate => rate[idx],
            Policy::Spf | Policy::Epf => pf_priority(rate[idx], st.avg_rate_norm, 1.0, 1.0),
            Policy::Gpf => pf_priority(rate[idx], st.avg_rate_norm, pf.alpha, pf.beta),
        };
        debug_assert!(m.is_finite());
        metric[idx] = Some(m);
    }

    let mut remaining = cfg.data_symbols();
    let mut granted = vec![false; n];
    let mut grants = Vec::new();
    while remaining > 0 {
        let mut best: Option<(usize, f64)> = None;
        for idx in 0..n {
            if granted[idx] {
                continue;
            }
            if let Some(m) = metric[idx] {
                // Strict comparison keeps the first (lowest id) on ties.
                if best.is_none_or(|(_, bm)| m > bm) {
                    best = Some((idx, m));
                }
            }
        }
        let Some((idx, _)) = best else { break };
        let d = by_index[idx].expect("metric implies demand");
        let bps = d.snapshot.bits_per_data_symbol;
        let need = d.backlog_bits.div_ceil(bps);
        let symbols = need.min(remaining as u64) as u32;
        grants.push(Grant { ue: d.ue, symbols });
        remaining -= symbols;
        granted[idx] = true;
    }

    // Tracker bookkeeping: exactly one update per user.
    for idx in 0..n {
        let st = &mut state.ues[idx];
        let demand = by_index[idx];
        if demand.is_some_and(|d| d.backlog_bits > 0) {
            st.had_traffic = true;
        }
        let scheduled = granted[idx];
        if st.had_traffic {
            let contribution = if scheduled {
                match (policy, pf.gamma_mode) {
                    (Policy::Epf, GammaMode::McsDriven) => {
                        let snap = &by_index[idx].expect("granted implies demand").snapshot;
                        epf_contribution(rate[idx], snap.mcs)
                    }
                    (Policy::Epf, GammaMode::Fixed(g)) => gamma_pow(rate[idx], g),
                    _ => rate[idx],
                }
            } else {
                0.0
            };
            st.avg_rate_norm = ewma_update(st.avg_rate_norm, contribution, scheduled, pf.t_c, pf.epsilon);
        }
        st.since_grant = if scheduled { 0 } else { st.since_grant + 1 };
    }

    let total_symbols = grants.iter().map(|g| g.symbols).sum();
    let priorities = (0..n)
        .filter_map(|idx| metric[idx].map(|m| (UeId(idx as u32), m)))
        .collect();
    Ok(Allocation {
        grants,
        priorities,
        total_symbols,
    })
}
