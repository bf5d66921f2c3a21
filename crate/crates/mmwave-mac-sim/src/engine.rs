//! Subframe-driven simulation engine.
//!
//! Each subframe runs a fixed pipeline:
//!
//! 1. take a fresh channel snapshot per user (one shadowing step each);
//! 2. admit packets whose arrival falls inside this subframe;
//! 3. build demands for backlogged users from the *delayed* snapshot — the
//!    scheduler sees the channel as it was `cqi_delay_subframes` ago;
//! 4. allocate data symbols ([`crate::sched::allocate`]);
//! 5. serve each grant: the transport block carries up to
//!    `symbols * bits_per_symbol` at the *current* rate, one block-error draw
//!    decides delivery, failed blocks requeue (or drop) their packets;
//! 6. move users, reflecting off the field edges.
//!
//! All randomness comes from named, decoupled streams of the scenario seed
//! ([`crate::rng::stream_rng`]), so traffic, shadowing and placement stay
//! identical when only the policy changes.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::Rng;
use serde::Serialize;

use crate::channel::{self, ChannelSnapshot, LinkBudget, ObstacleBox, ShadowState};
use crate::rng::{stream_rng, StreamId};
use crate::sched::{self, Allocation, PfConfig, PfState, Policy, UeDemand};
use crate::traffic::{self, OnOffConfig, Packet};
use crate::types::{Position, SubframeConfig, UeId, Velocity};
use crate::{Result, SimError};

/// Retransmission model: one block-error draw per served transport block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarqConfig {
    /// Probability that a transport block fails.
    pub bler: f64,
    /// A packet is dropped once it has been in this many failed blocks.
    pub max_retx: u32,
}

impl Default for HarqConfig {
    fn default() -> Self {
        HarqConfig {
            bler: 0.1,
            max_retx: 3,
        }
    }
}

impl HarqConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bler.is_finite() && (0.0..=1.0).contains(&self.bler)) {
            return Err(SimError::Config(format!(
                "bler must lie in [0, 1], got {}",
                self.bler
            )));
        }
        if self.max_retx == 0 {
            return Err(SimError::Config("max_retx must be >= 1".into()));
        }
        Ok(())
    }
}

/// Initial placement and motion of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UeInit {
    pub id: UeId,
    pub position: Position,
    pub velocity: Velocity,
}

/// A fully resolved simulation setup. Builders ([`build_case1`],
/// [`build_case2`]) expand a seed into explicit geometry, so a scenario can
/// always be echoed and replayed verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub label: String,
    pub seed: u64,
    pub duration_us: u64,
    /// Users bounce inside the square `[0, field_size_m]^2`.
    pub field_size_m: f64,
    pub enb: Position,
    pub ues: Vec<UeInit>,
    /// Rectangular blockers. They attenuate links that cross them; they do
    /// not impede movement.
    pub obstacles: Vec<ObstacleBox>,
    /// Reporting group for blockage-focused metrics (may be empty, in which
    /// case group metrics fall back to all users).
    pub nlos_ues: Vec<UeId>,
    pub traffic: OnOffConfig,
    pub budget: LinkBudget,
    pub subframe: SubframeConfig,
    pub pf: PfConfig,
    pub policy: Policy,
    /// Age, in subframes, of the channel state the scheduler acts on.
    pub cqi_delay_subframes: u64,
    pub harq: HarqConfig,
    /// Fixed decode/processing latency added to every delivery.
    pub t_phy_us: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty() {
            return Err(SimError::Config("label must not be empty".into()));
        }
        self.subframe.validate()?;
        self.budget.validate()?;
        self.traffic.validate()?;
        self.pf.validate()?;
        self.harq.validate()?;
        if self.duration_us < self.subframe.duration_us {
            return Err(SimError::Config(format!(
                "duration {} us is shorter than one subframe ({} us)",
                self.duration_us, self.subframe.duration_us
            )));
        }
        if !(self.field_size_m.is_finite() && self.field_size_m > 0.0) {
            return Err(SimError::Config(format!(
                "field size must be positive, got {}",
                self.field_size_m
            )));
        }
        let inside = |p: Position| {
            p.x.is_finite()
                && p.y.is_finite()
                && (0.0..=self.field_size_m).contains(&p.x)
                && (0.0..=self.field_size_m).contains(&p.y)
        };
        if !inside(self.enb) {
            return Err(SimError::Config("base station lies outside the field".into()));
        }
        if self.ues.is_empty() {
            return Err(SimError::Config("at least one user is required".into()));
        }
        for (i, ue) in self.ues.iter().enumerate() {
            if ue.id.index() != i {
                return Err(SimError::Config(format!(
                    "user ids must be 0..{} in order, found {} at slot {i}",
                    self.ues.len() - 1,
                    ue.id
                )));
            }
            if !inside(ue.position) {
                return Err(SimError::Config(format!("{} starts outside the field", ue.id)));
            }
            if !(ue.velocity.x.is_finite() && ue.velocity.y.is_finite()) {
                return Err(SimError::Config(format!("{} has a non-finite velocity", ue.id)));
            }
        }
        for (i, b) in self.obstacles.iter().enumerate() {
            let ok = b.min_x().is_finite()
                && b.max_x().is_finite()
                && b.min_y().is_finite()
                && b.max_y().is_finite()
                && b.min_x() < b.max_x()
                && b.min_y() < b.max_y();
            if !ok {
                return Err(SimError::Config(format!("obstacle {i} is degenerate")));
            }
        }
        for ue in &self.nlos_ues {
            if ue.index() >= self.ues.len() {
                return Err(SimError::Config(format!(
                    "nlos group names unknown {ue}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_subframes(&self) -> u64 {
        self.duration_us / self.subframe.duration_us
    }
}

/// What to retain beyond the delivered-packet log.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraceConfig {
    /// Keep every subframe's [`Allocation`].
    pub allocations: bool,
    /// Keep every subframe's fresh [`ChannelSnapshot`]s (per user).
    pub snapshots: bool,
}

/// One delivered packet with its latency decomposition. The departure time
/// is, by construction, the arrival plus the four components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PacketRecord {
    pub ue: UeId,
    pub packet_id: u64,
    pub size_bits: u64,
    pub arrival_us: u64,
    pub departure_us: u64,
    /// Arrival to first grant.
    pub t_queue_us: u64,
    /// Air time across all attempts, including failed ones.
    pub t_transmit_us: u64,
    pub t_phy_us: u64,
    pub t_propagate_us: u64,
    /// Failed blocks this packet survived.
    pub retx_count: u32,
}

impl PacketRecord {
    pub fn latency_us(&self) -> u64 {
        self.departure_us - self.arrival_us
    }
}

/// Everything a finished run reports. Packet/bit counters bucket each
/// generated packet exactly once (delivered, dropped, or still queued), so
/// `generated = delivered + dropped + queued` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub label: String,
    pub policy: Policy,
    pub seed: u64,
    pub duration_us: u64,
    pub n_ues: usize,
    /// Delivered packets, sorted by (user, packet id).
    pub delivered: Vec<PacketRecord>,
    pub generated_packets: u64,
    pub generated_bits: u64,
    pub dropped_packets: u64,
    pub dropped_bits: u64,
    /// Dropped-packet count per user (indexed by user id).
    pub dropped_by_ue: Vec<u64>,
    pub queued_packets: u64,
    pub queued_bits: u64,
    pub allocations: Option<Vec<Allocation>>,
    pub snapshots: Option<Vec<Vec<ChannelSnapshot>>>,
}

impl RunResult {
    pub fn delivered_bits(&self) -> u64 {
        self.delivered.iter().map(|r| r.size_bits).sum()
    }

    pub fn delivered_bits_for(&self, ue: UeId) -> u64 {
        self.delivered
            .iter()
            .filter(|r| r.ue == ue)
            .map(|r| r.size_bits)
            .sum()
    }
}

/// Advance one user by `dt_s`, reflecting off the square field's walls.
pub fn update_mobility(pos: &mut Position, vel: &mut Velocity, dt_s: f64, field_size_m: f64) {
    let mut x = pos.x + vel.x * dt_s;
    let mut y = pos.y + vel.y * dt_s;
    // A step could in principle cross more than one wall, hence the loops.
    loop {
        if x < 0.0 {
            x = -x;
            vel.x = -vel.x;
        } else if x > field_size_m {
            x = 2.0 * field_size_m - x;
            vel.x = -vel.x;
        } else {
            break;
        }
    }
    loop {
        if y < 0.0 {
            y = -y;
            vel.y = -vel.y;
        } else if y > field_size_m {
            y = 2.0 * field_size_m - y;
            vel.y = -vel.y;
        } else {
            break;
        }
    }
    pos.x = x;
    pos.y = y;
}

/// A packet making its way through a user's downlink queue.
#[derive(Debug)]
struct InFlight {
    packet: Packet,
    remaining_bits: u64,
    retx_count: u32,
    first_grant_us: Option<u64>,
    /// Accumulated air time, fractional microseconds.
    transmit_us: f64,
}

impl InFlight {
    fn new(packet: Packet) -> Self {
        let remaining_bits = packet.size_bits;
        InFlight {
            packet,
            remaining_bits,
            retx_count: 0,
            first_grant_us: None,
            transmit_us: 0.0,
        }
    }
}

/// Per-user downlink queue. Retransmissions are served before fresh data.
#[derive(Debug, Default)]
struct UeQueue {
    retx: VecDeque<InFlight>,
    fresh: VecDeque<InFlight>,
}

impl UeQueue {
    fn backlog_bits(&self) -> u64 {
        self.retx
            .iter()
            .chain(self.fresh.iter())
            .map(|p| p.remaining_bits)
            .sum()
    }

    fn pop_next(&mut self) -> Option<(InFlight, bool)> {
        if let Some(p) = self.retx.pop_front() {
            Some((p, true))
        } else {
            self.fresh.pop_front().map(|p| (p, false))
        }
    }

    fn push_front(&mut self, item: InFlight, to_retx: bool) {
        if to_retx {
            self.retx.push_front(item);
        } else {
            self.fresh.push_front(item);
        }
    }
}

/// Run a scenario and keep only the delivered-packet log.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    run_with_trace(scenario, TraceConfig::default())
}

/// Run a scenario, optionally retaining per-subframe traces.
pub fn run_with_trace(scenario: &Scenario, trace: TraceConfig) -> Result<RunResult> {
    scenario.validate()?;
    let n = scenario.ues.len();
    let cfg = &scenario.subframe;
    let sf_us = cfg.duration_us;
    let n_subframes = scenario.n_subframes();
    let symbol_us = sf_us as f64 / cfg.symbols_total as f64;
    let light_m_per_us = channel::SPEED_OF_LIGHT_M_S * 1e-6;

    // Pre-generate every user's traffic from its own stream.
    let mut pending: Vec<VecDeque<Packet>> = Vec::with_capacity(n);
    let mut generated_packets = 0u64;
    let mut generated_bits = 0u64;
    for ue in &scenario.ues {
        let mut rng = stream_rng(scenario.seed, StreamId::Traffic(ue.id.0));
        let packets = traffic::generate(&scenario.traffic, ue.id, &mut rng, scenario.duration_us)?;
        generated_packets += packets.len() as u64;
        generated_bits += packets.iter().map(|p| p.size_bits).sum::<u64>();
        pending.push(packets.into());
    }

    let mut shadow_rng: Vec<_> = scenario
        .ues
        .iter()
        .map(|ue| stream_rng(scenario.seed, StreamId::Shadowing(ue.id.0)))
        .collect();
    let mut shadow: Vec<ShadowState> = shadow_rng
        .iter_mut()
        .map(|rng| ShadowState::init(&scenario.budget, rng))
        .collect();
    let mut harq_rng = stream_rng(scenario.seed, StreamId::Harq);

    let mut positions: Vec<Position> = scenario.ues.iter().map(|u| u.position).collect();
    let mut velocities: Vec<Velocity> = scenario.ues.iter().map(|u| u.velocity).collect();
    let mut queues: Vec<UeQueue> = (0..n).map(|_| UeQueue::default()).collect();
    let mut state = PfState::new(n);
    // Snapshot window per user: front is the delayed view, back the current.
    let window = scenario.cqi_delay_subframes as usize + 1;
    let mut history: Vec<VecDeque<ChannelSnapshot>> =
        (0..n).map(|_| VecDeque::with_capacity(window)).collect();

    let mut delivered: Vec<PacketRecord> = Vec::new();
    let mut dropped_packets = 0u64;
    let mut dropped_bits = 0u64;
    let mut dropped_by_ue = vec![0u64; n];
    let mut alloc_trace = trace.allocations.then(Vec::new);
    let mut snap_trace = trace.snapshots.then(Vec::new);

    for t in 0..n_subframes {
        let sf_start = t * sf_us;
        let sf_end = sf_start + sf_us;

        // 1. Fresh channel state.
        for u in 0..n {
            let snap = channel::snapshot(
                UeId(u as u32),
                positions[u],
                scenario.enb,
                &scenario.obstacles,
                &scenario.budget,
                cfg,
                &mut shadow[u],
                &mut shadow_rng[u],
            )?;
            if history[u].len() == window {
                history[u].pop_front();
            }
            history[u].push_back(snap);
        }
        if let Some(tr) = snap_trace.as_mut() {
            tr.push(history.iter().map(|h| *h.back().expect("pushed")).collect());
        }

        // 2. Admit this subframe's arrivals.
        for u in 0..n {
            while pending[u]
                .front()
                .is_some_and(|p| p.arrival_time.us() < sf_end)
            {
                let p = pending[u].pop_front().expect("front exists");
                queues[u].fresh.push_back(InFlight::new(p));
            }
        }

        // 3. Demands against the delayed channel view.
        let mut demands: Vec<UeDemand> = Vec::new();
        for u in 0..n {
            let backlog = queues[u].backlog_bits();
            if backlog > 0 {
                demands.push(UeDemand {
                    ue: UeId(u as u32),
                    backlog_bits: backlog,
                    snapshot: *history[u].front().expect("snapshot pushed this subframe"),
                });
            }
        }

        // 4. Allocate.
        let alloc = sched::allocate(&demands, &mut state, &scenario.pf, cfg, scenario.policy)?;

        // 5. Serve grants in issue order.
        for grant in &alloc.grants {
            let u = grant.ue.index();
            let bps_now = history[u].back().expect("current snapshot").bits_per_data_symbol;
            let mut tb_left = grant.symbols as u64 * bps_now;
            let mut covered: Vec<(InFlight, bool, u64)> = Vec::new();
            while tb_left > 0 {
                let Some((item, from_retx)) = queues[u].pop_next() else {
                    break;
                };
                let take = item.remaining_bits.min(tb_left);
                tb_left -= take;
                covered.push((item, from_retx, take));
            }
            if covered.is_empty() {
                continue;
            }
            for (item, _, take) in covered.iter_mut() {
                item.first_grant_us.get_or_insert(sf_start);
                item.transmit_us += *take as f64 / bps_now as f64 * symbol_us;
            }
            let failed = harq_rng.gen::<f64>() < scenario.harq.bler;
            if failed {
                // The whole block is lost; every covered packet burns one
                // attempt. Survivors keep their order at the head of the
                // retransmission queue.
                let mut survivors: Vec<InFlight> = Vec::new();
                for (mut item, _, _) in covered {
                    item.retx_count += 1;
                    if item.retx_count >= scenario.harq.max_retx {
                        dropped_packets += 1;
                        dropped_bits += item.packet.size_bits;
                        dropped_by_ue[u] += 1;
                    } else {
                        survivors.push(item);
                    }
                }
                for item in survivors.into_iter().rev() {
                    queues[u].retx.push_front(item);
                }
            } else {
                for (mut item, from_retx, take) in covered {
                    item.remaining_bits -= take;
                    if item.remaining_bits > 0 {
                        // Only the last covered packet can be partial; it
                        // stays at the head for the next grant.
                        queues[u].push_front(item, from_retx);
                        continue;
                    }
                    let arrival = item.packet.arrival_time.us();
                    let t_queue = item.first_grant_us.expect("granted").saturating_sub(arrival);
                    let t_transmit = item.transmit_us.ceil() as u64;
                    let distance = positions[u].distance(scenario.enb);
                    let t_propagate = (distance / light_m_per_us).ceil() as u64;
                    let departure =
                        arrival + t_queue + t_transmit + scenario.t_phy_us + t_propagate;
                    delivered.push(PacketRecord {
                        ue: item.packet.ue,
                        packet_id: item.packet.id,
                        size_bits: item.packet.size_bits,
                        arrival_us: arrival,
                        departure_us: departure,
                        t_queue_us: t_queue,
                        t_transmit_us: t_transmit,
                        t_phy_us: scenario.t_phy_us,
                        t_propagate_us: t_propagate,
                        retx_count: item.retx_count,
                    });
                }
            }
        }
        if let Some(tr) = alloc_trace.as_mut() {
            tr.push(alloc);
        }

        // 6. Move.
        let dt_s = sf_us as f64 * 1e-6;
        for u in 0..n {
            update_mobility(&mut positions[u], &mut velocities[u], dt_s, scenario.field_size_m);
        }
    }

    // Whatever never left the system counts as queued — including packets
    // whose arrival fell exactly on the horizon and were never admitted.
    let mut queued_packets = 0u64;
    let mut queued_bits = 0u64;
    for u in 0..n {
        for item in queues[u].retx.iter().chain(queues[u].fresh.iter()) {
            queued_packets += 1;
            queued_bits += item.packet.size_bits;
        }
        for p in &pending[u] {
            queued_packets += 1;
            queued_bits += p.size_bits;
        }
    }

    delivered.sort_by_key(|r| (r.ue, r.packet_id));
    Ok(RunResult {
        label: scenario.label.clone(),
        policy: scenario.policy,
        seed: scenario.seed,
        duration_us: n_subframes * sf_us,
        n_ues: n,
        delivered,
        generated_packets,
        generated_bits,
        dropped_packets,
        dropped_bits,
        dropped_by_ue,
        queued_packets,
        queued_bits,
        allocations: alloc_trace,
        snapshots: snap_trace,
    })
}

/// Densely built 300 m field: a tight cluster of blockers in the upper-right
/// quadrant near the base station, three fast users circulating inside it
/// (the blockage-focused reporting group), and seven slower users spread
/// across the open remainder. Every user offers 500 Mbit/s, which together
/// saturates the cell.
pub fn build_case1(seed: u64) -> Scenario {
    let field = 300.0;
    let enb = Position { x: 150.0, y: 150.0 };

    // The cluster hugs the inner corner of the upper-right quadrant. Behind
    // it the blockage penalty still leaves a workable signal (the group
    // lands mid-ladder rather than at the floor), which is the regime where
    // rate-aware scheduling has something to trade.
    let mut orng = stream_rng(seed, StreamId::Obstacles);
    let mut obstacles = Vec::with_capacity(20);
    for _ in 0..20 {
        let center = Position {
            x: orng.gen_range(160.0..=188.0),
            y: orng.gen_range(160.0..=188.0),
        };
        let hw = orng.gen_range(5.0..=9.0);
        let hh = orng.gen_range(5.0..=9.0);
        obstacles.push(ObstacleBox::new(center, hw, hh).expect("positive extents"));
    }

    let mut prng = stream_rng(seed, StreamId::Placement);
    let mut ues = Vec::with_capacity(10);
    for id in 0..10u32 {
        let (position, speed) = if (1..=3).contains(&id) {
            // Blockage-group users roam the cluttered pocket at car speed.
            // They start deep enough inside that one run's worth of drift
            // cannot carry them past the cluster's inner edge into the open.
            let p = Position {
                x: prng.gen_range(170.0..=188.0),
                y: prng.gen_range(170.0..=188.0),
            };
            (p, 18.0)
        } else {
            // The rest walk the open part of the field, clear of the cluster.
            let p = loop {
                let cand = Position {
                    x: prng.gen_range(10.0..=290.0),
                    y: prng.gen_range(10.0..=290.0),
                };
                if !(cand.x > 145.0 && cand.y > 145.0) {
                    break cand;
                }
            };
            (p, prng.gen_range(1.0..=5.0))
        };
        let heading = prng.gen_range(0.0..TAU);
        ues.push(UeInit {
            id: UeId(id),
            position,
            velocity: Velocity {
                x: speed * heading.cos(),
                y: speed * heading.sin(),
            },
        });
    }

    let traffic = OnOffConfig {
        avg_rate: crate::types::RateBps::from_mbps(500.0).expect("positive"),
        ..OnOffConfig::default()
    };
    Scenario {
        label: "case1".into(),
        seed,
        duration_us: 1_000_000,
        field_size_m: field,
        enb,
        ues,
        obstacles,
        nlos_ues: vec![UeId(1), UeId(2), UeId(3)],
        traffic,
        budget: LinkBudget::default(),
        subframe: SubframeConfig::default(),
        pf: PfConfig::default(),
        policy: Policy::Epf,
        cqi_delay_subframes: 1,
        harq: HarqConfig::default(),
        t_phy_us: 10,
    }
}

/// Uniformly cluttered 300 m field: three hundred small blockers everywhere
/// (none covering the base station), ten users at random speeds up to
/// 30 m/s, each offering 100 Mbit/s. The cell is lightly loaded, so latency
/// tails — driven by blockage dips — dominate the comparison.
pub fn build_case2(seed: u64) -> Scenario {
    let field = 300.0;
    let enb = Position { x: 150.0, y: 150.0 };

    let mut orng = stream_rng(seed, StreamId::Obstacles);
    let mut obstacles = Vec::with_capacity(300);
    while obstacles.len() < 300 {
        let center = Position {
            x: orng.gen_range(5.0..=295.0),
            y: orng.gen_range(5.0..=295.0),
        };
        let hw = orng.gen_range(1.0..=4.0);
        let hh = orng.gen_range(1.0..=4.0);
        let b = ObstacleBox::new(center, hw, hh).expect("positive extents");
        // Keep a clear pocket around the base station.
        let covers_enb = enb.x >= b.min_x() - 2.0
            && enb.x <= b.max_x() + 2.0
            && enb.y >= b.min_y() - 2.0
            && enb.y <= b.max_y() + 2.0;
        if !covers_enb {
            obstacles.push(b);
        }
    }

    let mut prng = stream_rng(seed, StreamId::Placement);
    let mut ues = Vec::with_capacity(10);
    for id in 0..10u32 {
        let position = loop {
            let cand = Position {
                x: prng.gen_range(0.0..=field),
                y: prng.gen_range(0.0..=field),
            };
            if cand.distance(enb) >= 5.0 {
                break cand;
            }
        };
        let speed = prng.gen_range(0.0..=30.0);
        let heading = prng.gen_range(0.0..TAU);
        ues.push(UeInit {
            id: UeId(id),
            position,
            velocity: Velocity {
                x: speed * heading.cos(),
                y: speed * heading.sin(),
            },
        });
    }

    Scenario {
        label: "case2".into(),
        seed,
        duration_us: 1_000_000,
        field_size_m: field,
        enb,
        ues,
        obstacles,
        nlos_ues: vec![],
        traffic: OnOffConfig::default(),
        budget: LinkBudget::default(),
        subframe: SubframeConfig::default(),
        pf: PfConfig::default(),
        policy: Policy::Epf,
        cqi_delay_subframes: 1,
        harq: HarqConfig::default(),
        t_phy_us: 10,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RateBps;

    fn open_field(n_ues: usize, rate_mbps: f64, duration_us: u64) -> Scenario {
        // Users on a ring 50 m from the base station, standing still.
        let enb = Position { x: 150.0, y: 150.0 };
        let ues = (0..n_ues)
            .map(|i| {
                let angle = TAU * i as f64 / n_ues as f64;
                UeInit {
                    id: UeId(i as u32),
                    position: Position {
                        x: enb.x + 50.0 * angle.cos(),
                        y: enb.y + 50.0 * angle.sin(),
                    },
                    velocity: Velocity::default(),
                }
            })
            .collect();
        Scenario {
            label: "test".into(),
            seed: 11,
            duration_us,
            field_size_m: 300.0,
            enb,
            ues,
            obstacles: vec![],
            nlos_ues: vec![],
            traffic: OnOffConfig {
                avg_rate: RateBps::from_mbps(rate_mbps).unwrap(),
                ..OnOffConfig::default()
            },
            budget: LinkBudget::default(),
            subframe: SubframeConfig::default(),
            pf: PfConfig::default(),
            policy: Policy::Spf,
            cqi_delay_subframes: 1,
            harq: HarqConfig::default(),
            t_phy_us: 10,
        }
    }

    // --- mobility ---

    #[test]
    fn mobility_straight_advance() {
        let mut pos = Position { x: 10.0, y: 20.0 };
        let mut vel = Velocity { x: 18.0, y: 0.0 };
        update_mobility(&mut pos, &mut vel, 1e-4, 300.0);
        assert!((pos.x - 10.0018).abs() < 1e-12);
        assert_eq!(pos.y, 20.0);
        assert_eq!(vel.x, 18.0);
    }

    #[test]
    fn mobility_reflects_off_walls() {
        let mut pos = Position { x: 299.5, y: 10.0 };
        let mut vel = Velocity { x: 1.0, y: 0.0 };
        update_mobility(&mut pos, &mut vel, 1.0, 300.0);
        assert!((pos.x - 299.5).abs() < 1e-12);
        assert_eq!(vel.x, -1.0);

        let mut pos = Position { x: 0.2, y: 10.0 };
        let mut vel = Velocity { x: -1.0, y: 0.0 };
        update_mobility(&mut pos, &mut vel, 1.0, 300.0);
        assert!((pos.x - 0.8).abs() < 1e-12);
        assert_eq!(vel.x, 1.0);
    }

    #[test]
    fn mobility_corner_reflects_both_axes() {
        let mut pos = Position { x: 299.9, y: 0.1 };
        let mut vel = Velocity { x: 2.0, y: -2.0 };
        update_mobility(&mut pos, &mut vel, 0.1, 300.0);
        assert!((pos.x - 299.9).abs() < 1e-12);
        assert!((pos.y - 0.1).abs() < 1e-12);
        assert_eq!((vel.x, vel.y), (-2.0, 2.0));
    }

    // --- single runs ---

    #[test]
    fn uncontended_run_is_prompt_and_lossless() {
        let mut sc = open_field(2, 50.0, 100_000);
        sc.harq.bler = 0.0;
        let res = run(&sc).unwrap();
        assert!(res.generated_packets > 100, "traffic too thin to test");
        assert_eq!(res.dropped_packets, 0);
        assert_eq!(
            res.delivered.len() as u64 + res.queued_packets,
            res.generated_packets
        );
        for r in &res.delivered {
            assert!(r.departure_us > r.arrival_us);
            // A lone competitor is served within a couple of subframes.
            assert!(r.t_queue_us <= 2 * sc.subframe.duration_us, "{r:?}");
            assert_eq!(
                r.departure_us,
                r.arrival_us
                    + r.t_queue_us
                    + r.t_transmit_us
                    + r.t_phy_us
                    + r.t_propagate_us
            );
            assert_eq!(r.retx_count, 0);
            assert!(r.t_transmit_us >= 1);
            // 50 m at light speed rounds up to 1 us.
            assert_eq!(r.t_propagate_us, 1);
            assert_eq!(r.t_phy_us, 10);
        }
    }

    #[test]
    fn block_errors_raise_latency() {
        let mean = |bler: f64| {
            let mut sc = open_field(2, 50.0, 100_000);
            sc.harq.bler = bler;
            let res = run(&sc).unwrap();
            let sum: u64 = res.delivered.iter().map(|r| r.latency_us()).sum();
            sum as f64 / res.delivered.len() as f64
        };
        assert!(mean(0.5) > mean(0.0));
    }

    #[test]
    fn certain_block_failure_drops_everything() {
        let mut sc = open_field(1, 50.0, 50_000);
        sc.harq.bler = 1.0;
        let res = run(&sc).unwrap();
        assert!(res.delivered.is_empty());
        assert!(res.dropped_packets > 0);
        assert_eq!(
            res.dropped_packets + res.queued_packets,
            res.generated_packets
        );
    }

    #[test]
    fn retransmissions_appear_in_records() {
        let mut sc = open_field(2, 200.0, 200_000);
        sc.harq.bler = 0.4;
        let res = run(&sc).unwrap();
        assert!(res.delivered.iter().any(|r| r.retx_count > 0));
        assert!(res.delivered.iter().all(|r| r.retx_count < sc.harq.max_retx));
    }

    #[test]
    fn conservation_is_exact_for_every_policy() {
        for policy in Policy::ALL {
            let mut sc = build_case1(3);
            sc.duration_us = 100_000;
            sc.policy = policy;
            let res = run(&sc).unwrap();
            assert_eq!(
                res.delivered.len() as u64 + res.dropped_packets + res.queued_packets,
                res.generated_packets,
                "{policy}: packet buckets leak"
            );
            assert_eq!(
                res.delivered_bits() + res.dropped_bits + res.queued_bits,
                res.generated_bits,
                "{policy}: bit buckets leak"
            );
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let mut sc = build_case1(7);
        sc.duration_us = 50_000;
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn traces_cover_every_subframe() {
        let mut sc = open_field(3, 100.0, 10_000);
        sc.harq.bler = 0.0;
        let res = run_with_trace(
            &sc,
            TraceConfig {
                allocations: true,
                snapshots: true,
            },
        )
        .unwrap();
        let allocs = res.allocations.as_ref().unwrap();
        let snaps = res.snapshots.as_ref().unwrap();
        assert_eq!(allocs.len(), 100);
        assert_eq!(snaps.len(), 100);
        assert!(snaps.iter().all(|s| s.len() == 3));
        assert!(allocs.iter().all(|a| a.total_symbols <= 22));
    }

    // Re-wire the whole pipeline independently for a moving, error-free,
    // shadow-free scenario and demand identical grants and deliveries. The
    // point is the wiring: admission timing, the delayed channel view, block
    // sizing at the current rate, and tracker updates.
    #[test]
    fn pipeline_matches_independent_replay() {
        let mut sc = open_field(3, 400.0, 300_000);
        sc.harq.bler = 0.0;
        sc.budget.shadow_sigma_db = 0.0;
        // User 0 starts at (200, 150) behind a blocker and drives through it
        // toward the base station, so its adapted rate steps mid-run and the
        // delayed view disagrees with the fresh one at the transition.
        sc.obstacles = vec![ObstacleBox::new(
            Position { x: 197.5, y: 150.0 },
            1.5,
            10.0,
        )
        .unwrap()];
        sc.ues[0].velocity = Velocity { x: -25.0, y: 0.0 };
        sc.ues[1].velocity = Velocity { x: 20.0, y: 14.0 };
        sc.policy = Policy::Epf;
        let res = run_with_trace(
            &sc,
            TraceConfig {
                allocations: true,
                ..TraceConfig::default()
            },
        )
        .unwrap();
        let traced = res.allocations.as_ref().unwrap();

        // Replay.
        let cfg = &sc.subframe;
        let n = sc.ues.len();
        let mut pending: Vec<VecDeque<Packet>> = (0..n)
            .map(|u| {
                let mut rng = stream_rng(sc.seed, StreamId::Traffic(u as u32));
                traffic::generate(&sc.traffic, UeId(u as u32), &mut rng, sc.duration_us)
                    .unwrap()
                    .into()
            })
            .collect();
        let mut shadow_rng: Vec<_> = (0..n)
            .map(|u| stream_rng(sc.seed, StreamId::Shadowing(u as u32)))
            .collect();
        let mut shadow: Vec<ShadowState> = shadow_rng
            .iter_mut()
            .map(|r| ShadowState::init(&sc.budget, r))
            .collect();
        let mut pos: Vec<Position> = sc.ues.iter().map(|u| u.position).collect();
        let mut vel: Vec<Velocity> = sc.ues.iter().map(|u| u.velocity).collect();
        let mut backlog = vec![0u64; n];
        let mut delivered_bits = vec![0u64; n];
        let mut state = PfState::new(n);
        let mut views: Vec<Vec<ChannelSnapshot>> = vec![Vec::new(); n];
        for t in 0..sc.n_subframes() {
            let sf_end = t * 100 + 100;
            for u in 0..n {
                let s = channel::snapshot(
                    UeId(u as u32),
                    pos[u],
                    sc.enb,
                    &sc.obstacles,
                    &sc.budget,
                    cfg,
                    &mut shadow[u],
                    &mut shadow_rng[u],
                )
                .unwrap();
                views[u].push(s);
            }
            for u in 0..n {
                while pending[u].front().is_some_and(|p| p.arrival_time.us() < sf_end) {
                    backlog[u] += pending[u].pop_front().unwrap().size_bits;
                }
            }
            let stale = |u: usize| views[u][(t.saturating_sub(sc.cqi_delay_subframes)) as usize];
            let demands: Vec<UeDemand> = (0..n)
                .filter(|&u| backlog[u] > 0)
                .map(|u| UeDemand {
                    ue: UeId(u as u32),
                    backlog_bits: backlog[u],
                    snapshot: stale(u),
                })
                .collect();
            let alloc =
                sched::allocate(&demands, &mut state, &sc.pf, cfg, sc.policy).unwrap();
            assert_eq!(&alloc, &traced[t as usize], "subframe {t}");
            for g in &alloc.grants {
                let u = g.ue.index();
                let cap = g.symbols as u64 * views[u][t as usize].bits_per_data_symbol;
                let served = cap.min(backlog[u]);
                backlog[u] -= served;
                delivered_bits[u] += served;
            }
            let dt = 1e-4;
            for u in 0..n {
                update_mobility(&mut pos[u], &mut vel[u], dt, sc.field_size_m);
            }
        }
        // Fully delivered packets must match; the engine only counts packets
        // whose final bit made it out, so allow the in-flight remainder.
        for u in 0..n {
            let engine_bits = res.delivered_bits_for(UeId(u as u32));
            assert!(
                delivered_bits[u] >= engine_bits
                    && delivered_bits[u] - engine_bits < 2 * sc.traffic.packet_size_bits,
                "ue {u}: replay {} vs engine {engine_bits}",
                delivered_bits[u]
            );
        }
    }

    #[test]
    fn symmetric_users_share_equally_under_contention() {
        // Four identical users on a ring, each offering more than a quarter
        // of the cell, PF scheduling: long-run shares level out.
        let mut sc = open_field(4, 1500.0, 300_000);
        sc.policy = Policy::Spf;
        let res = run(&sc).unwrap();
        let bits: Vec<u64> = (0..4).map(|u| res.delivered_bits_for(UeId(u))).collect();
        let max = *bits.iter().max().unwrap() as f64;
        let min = *bits.iter().min().unwrap() as f64;
        assert!(min > 0.0);
        assert!(max / min < 1.02, "shares diverged: {bits:?}");
    }

    #[test]
    fn delayed_channel_view_is_used_for_sizing() {
        // With a one-subframe delay the scheduler sizes grants off stale
        // state; flipping the delay to zero must change the outcome of a
        // scenario whose rate varies (a moving user emerging from blockage).
        let mut sc = open_field(2, 400.0, 200_000);
        sc.harq.bler = 0.0;
        sc.obstacles = vec![ObstacleBox::new(
            Position { x: 197.5, y: 150.0 },
            1.5,
            10.0,
        )
        .unwrap()];
        sc.ues[0].velocity = Velocity { x: -28.0, y: 0.0 };
        let delayed = run(&sc).unwrap();
        sc.cqi_delay_subframes = 0;
        let fresh = run(&sc).unwrap();
        assert_ne!(delayed, fresh);
    }

    // --- builders ---

    #[test]
    fn case1_shape() {
        let sc = build_case1(42);
        sc.validate().unwrap();
        assert_eq!(sc.ues.len(), 10);
        assert_eq!(sc.obstacles.len(), 20);
        assert_eq!(sc.nlos_ues, vec![UeId(1), UeId(2), UeId(3)]);
        assert!((sc.traffic.avg_rate.mbps() - 500.0).abs() < 1e-9);
        // Obstacles stay inside one quadrant and never cover the base station.
        for b in &sc.obstacles {
            assert!(b.min_x() > sc.enb.x && b.min_y() > sc.enb.y, "{b:?}");
        }
        // Group users start inside the cluttered pocket, the rest outside.
        for ue in &sc.ues {
            let clustered = (170.0..=188.0).contains(&ue.position.x)
                && (170.0..=188.0).contains(&ue.position.y);
            if sc.nlos_ues.contains(&ue.id) {
                assert!(clustered, "{:?}", ue);
                assert!((ue.velocity.speed() - 18.0).abs() < 1e-9);
            } else {
                assert!(!(ue.position.x > 145.0 && ue.position.y > 145.0), "{ue:?}");
            }
        }
        assert_eq!(build_case1(42), sc);
        assert_ne!(build_case1(43), sc);
    }

    #[test]
    fn case2_shape() {
        let sc = build_case2(42);
        sc.validate().unwrap();
        assert_eq!(sc.ues.len(), 10);
        assert_eq!(sc.obstacles.len(), 300);
        assert!(sc.nlos_ues.is_empty());
        assert!((sc.traffic.avg_rate.mbps() - 100.0).abs() < 1e-9);
        for b in &sc.obstacles {
            let covers = sc.enb.x >= b.min_x() - 2.0
                && sc.enb.x <= b.max_x() + 2.0
                && sc.enb.y >= b.min_y() - 2.0
                && sc.enb.y <= b.max_y() + 2.0;
            assert!(!covers);
        }
        for ue in &sc.ues {
            assert!(ue.position.distance(sc.enb) >= 5.0);
            assert!(ue.velocity.speed() <= 30.0);
        }
        assert_eq!(build_case2(42), sc);
    }

    #[test]
    fn validation_rejects_malformed_scenarios() {
        let mut sc = open_field(2, 50.0, 10_000);
        sc.ues[1].id = UeId(5);
        assert!(sc.validate().is_err());

        let mut sc = open_field(2, 50.0, 10_000);
        sc.ues[0].position.x = -1.0;
        assert!(sc.validate().is_err());

        let mut sc = open_field(2, 50.0, 10_000);
        sc.harq.bler = 1.5;
        assert!(sc.validate().is_err());

        let mut sc = open_field(2, 50.0, 10_000);
        sc.duration_us = 50;
        assert!(sc.validate().is_err());

        let mut sc = open_field(2, 50.0, 10_000);
        sc.nlos_ues = vec![UeId(9)];
        assert!(sc.validate().is_err());
    }
}
