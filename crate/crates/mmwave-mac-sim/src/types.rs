//! Shared domain vocabulary: identifiers, time, geometry and radio units.

use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

/// Simulation time in integer microseconds from run start.
///
/// The subframe clock, packet timestamps and latency components all live on
/// this grid. Subtracting a later time from an earlier one is a logic error,
/// so only checked/saturating forms are offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeUs(pub u64);

impl TimeUs {
    pub fn us(self) -> u64 {
        self.0
    }

    pub fn checked_sub(self, earlier: TimeUs) -> Option<TimeUs> {
        self.0.checked_sub(earlier.0).map(TimeUs)
    }

    /// Difference clamped at zero; used where "no wait" is the right reading
    /// of an earlier-or-equal timestamp.
    pub fn saturating_sub(self, earlier: TimeUs) -> TimeUs {
        TimeUs(self.0.saturating_sub(earlier.0))
    }
}

impl std::ops::Add<u64> for TimeUs {
    type Output = TimeUs;
    fn add(self, rhs: u64) -> TimeUs {
        TimeUs(self.0 + rhs)
    }
}

impl std::fmt::Display for TimeUs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}us", self.0)
    }
}

/// Dense user index, 0..K-1 within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UeId(pub u32);

impl UeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for UeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ue{}", self.0)
    }
}

/// Planar position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Planar velocity in metres per second.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub x: f64,
    pub y: f64,
}

impl Velocity {
    pub fn new(x: f64, y: f64) -> Self {
        Velocity { x, y }
    }

    pub fn speed(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Modulation-and-coding index, valid range 1..=28.
///
/// Only [`McsIndex::new`] constructs values, so an index in hand is always in
/// range; deserialization goes through plain integers validated at the edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct McsIndex(u8);

impl McsIndex {
    pub const MIN: McsIndex = McsIndex(1);
    pub const MAX: McsIndex = McsIndex(28);

    pub fn new(index: u8) -> Result<McsIndex> {
        if (1..=28).contains(&index) {
            Ok(McsIndex(index))
        } else {
            Err(SimError::Config(format!(
                "mcs index {index} out of range 1..=28"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl std::fmt::Display for McsIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Non-negative finite rate in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateBps(f64);

impl RateBps {
    pub fn new(bps: f64) -> Result<RateBps> {
        if bps.is_finite() && bps >= 0.0 {
            Ok(RateBps(bps))
        } else {
            Err(SimError::Config(format!("rate {bps} must be finite and >= 0")))
        }
    }

    pub fn from_mbps(mbps: f64) -> Result<RateBps> {
        RateBps::new(mbps * 1e6)
    }

    pub fn bps(self) -> f64 {
        self.0
    }

    pub fn mbps(self) -> f64 {
        self.0 / 1e6
    }
}

/// TDD subframe layout: total duration, OFDM symbol count and how many of
/// those symbols are reserved for control (one DL + one UL by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubframeConfig {
    pub duration_us: u64,
    pub symbols_total: u32,
    pub control_symbols: u32,
}

impl SubframeConfig {
    pub fn new(duration_us: u64, symbols_total: u32, control_symbols: u32) -> Result<Self> {
        let cfg = SubframeConfig {
            duration_us,
            symbols_total,
            control_symbols,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_us == 0 {
            return Err(SimError::Config("subframe duration_us must be > 0".into()));
        }
        if self.symbols_total == 0 {
            return Err(SimError::Config("subframe symbols_total must be > 0".into()));
        }
        if self.control_symbols >= self.symbols_total {
            return Err(SimError::Config(format!(
                "control_symbols {} must be < symbols_total {}",
                self.control_symbols, self.symbols_total
            )));
        }
        Ok(())
    }

    /// Symbols left for user data after control overhead.
    pub fn data_symbols(&self) -> u32 {
        self.symbols_total - self.control_symbols
    }

    /// Duration of a single OFDM symbol in seconds.
    pub fn symbol_duration_s(&self) -> f64 {
        self.duration_us as f64 * 1e-6 / self.symbols_total as f64
    }
}

impl Default for SubframeConfig {
    fn default() -> Self {
        SubframeConfig {
            duration_us: 100,
            symbols_total: 24,
            control_symbols: 2,
        }
    }
}
