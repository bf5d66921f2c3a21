//! Scenario files, run orchestration and report writing.
//!
//! Scenarios come from the two built-in builders (`case1`, `case2`) or from a
//! TOML file. Files may pin users and blockers explicitly or ask for seeded
//! random layouts; either way the resolved [`Scenario`] is fully explicit and
//! is echoed next to the result files, so any run can be reproduced from its
//! output directory alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{LinkBudget, ObstacleBox};
use crate::engine::{self, HarqConfig, RunResult, Scenario, TraceConfig, UeInit};
use crate::metrics::{self, FairnessReport};
use crate::rng::{stream_rng, StreamId};
use crate::sched::{self, GammaMode, PfConfig, Policy};
use crate::traffic::OnOffConfig;
use crate::types::{Position, RateBps, SubframeConfig, UeId, Velocity};
use crate::{Result, SimError};

/// Where a scenario comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioSource {
    Case1,
    Case2,
    File(PathBuf),
}

impl ScenarioSource {
    /// `case1` and `case2` name the builders; anything else is a file path.
    pub fn parse(s: &str) -> ScenarioSource {
        match s {
            "case1" => ScenarioSource::Case1,
            "case2" => ScenarioSource::Case2,
            other => ScenarioSource::File(PathBuf::from(other)),
        }
    }
}

/// Resolve a source into a concrete scenario for one seed. Built-ins are
/// rebuilt from the seed (fresh layout per seed); files are re-resolved with
/// the seed driving their random sections.
pub fn load_scenario(source: &ScenarioSource, seed: u64) -> Result<Scenario> {
    match source {
        ScenarioSource::Case1 => Ok(engine::build_case1(seed)),
        ScenarioSource::Case2 => Ok(engine::build_case2(seed)),
        ScenarioSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                SimError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            let file: ScenarioFile = toml::from_str(&text)
                .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
            resolve_file(file, seed, path)
        }
    }
}

// ---- scenario file schema ----
//
// Every section rejects unknown keys, so a typo fails loudly instead of
// silently falling back to a default.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    label: Option<String>,
    duration_us: Option<u64>,
    field_size_m: f64,
    enb: PointRaw,
    scheduler: Option<String>,
    cqi_delay_subframes: Option<u64>,
    t_phy_us: Option<u64>,
    nlos_ues: Option<Vec<u32>>,
    subframe: Option<SubframeRaw>,
    link: Option<LinkBudget>,
    traffic: Option<TrafficRaw>,
    pf: Option<PfRaw>,
    harq: Option<HarqConfig>,
    ues: Option<Vec<UeRaw>>,
    ues_random: Option<UesRandomRaw>,
    obstacles: Option<Vec<ObstacleRaw>>,
    obstacles_random: Option<ObstaclesRandomRaw>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRaw {
    x: f64,
    y: f64,
}

impl From<PointRaw> for Position {
    fn from(p: PointRaw) -> Position {
        Position { x: p.x, y: p.y }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SubframeRaw {
    duration_us: u64,
    symbols_total: u32,
    control_symbols: u32,
}

impl Default for SubframeRaw {
    fn default() -> Self {
        let d = SubframeConfig::default();
        SubframeRaw {
            duration_us: d.duration_us,
            symbols_total: d.symbols_total,
            control_symbols: d.control_symbols,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrafficRaw {
    avg_rate_mbps: f64,
    on_duration_us: u64,
    off_mean_us: u64,
    packet_size_bits: u64,
}

impl Default for TrafficRaw {
    fn default() -> Self {
        let d = OnOffConfig::default();
        TrafficRaw {
            avg_rate_mbps: d.avg_rate.mbps(),
            on_duration_us: d.on_duration_us,
            off_mean_us: d.off_mean_us,
            packet_size_bits: d.packet_size_bits,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PfRaw {
    t_c: f64,
    alpha: f64,
    beta: f64,
    /// "mcs-driven" (default) or "fixed"; the latter needs `gamma_fixed`.
    gamma_mode: Option<String>,
    gamma_fixed: Option<f64>,
    /// Normalization reference; omit to derive the peak service rate.
    r_ref_mbps: Option<f64>,
}

impl Default for PfRaw {
    fn default() -> Self {
        PfRaw {
            t_c: 100.0,
            alpha: 1.0,
            beta: 1.0,
            gamma_mode: None,
            gamma_fixed: None,
            r_ref_mbps: None,
        }
    }
}

impl PfRaw {
    fn resolve_gamma(&self) -> Result<GammaMode> {
        match (self.gamma_mode.as_deref(), self.gamma_fixed) {
            (None | Some("mcs-driven"), None) => Ok(GammaMode::McsDriven),
            (None | Some("fixed"), Some(g)) => Ok(GammaMode::Fixed(g)),
            (Some("fixed"), None) => Err(SimError::Config(
                "gamma_mode = \"fixed\" needs a gamma_fixed value".into(),
            )),
            (Some("mcs-driven"), Some(_)) => Err(SimError::Config(
                "gamma_fixed conflicts with gamma_mode = \"mcs-driven\"".into(),
            )),
            (Some(other), _) => Err(SimError::Config(format!(
                "unknown gamma_mode '{other}' (expected mcs-driven or fixed)"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UeRaw {
    id: u32,
    position: PointRaw,
    #[serde(default)]
    velocity: VelocityRaw,
}

#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VelocityRaw {
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UesRandomRaw {
    count: u32,
    #[serde(default = "default_min_distance")]
    min_distance_from_enb_m: f64,
    #[serde(default)]
    speed_min_mps: f64,
    #[serde(default = "default_speed_max")]
    speed_max_mps: f64,
}

fn default_min_distance() -> f64 {
    5.0
}

fn default_speed_max() -> f64 {
    30.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleRaw {
    center: PointRaw,
    half_width: f64,
    half_height: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstaclesRandomRaw {
    count: u32,
    center_min_m: f64,
    center_max_m: f64,
    half_extent_min_m: f64,
    half_extent_max_m: f64,
    #[serde(default = "default_keep_clear")]
    keep_clear_of_enb_m: f64,
}

fn default_keep_clear() -> f64 {
    2.0
}

fn resolve_file(file: ScenarioFile, seed: u64, path: &Path) -> Result<Scenario> {
    let enb: Position = file.enb.into();

    let obstacles = match (file.obstacles, file.obstacles_random) {
        (Some(_), Some(_)) => {
            return Err(SimError::Config(
                "give either [[obstacles]] or [obstacles_random], not both".into(),
            ))
        }
        (Some(list), None) => list
            .into_iter()
            .map(|o| ObstacleBox::new(o.center.into(), o.half_width, o.half_height))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(r)) => {
            if r.center_max_m < r.center_min_m || r.half_extent_max_m < r.half_extent_min_m {
                return Err(SimError::Config(
                    "obstacles_random bounds are inverted".into(),
                ));
            }
            let mut rng = stream_rng(seed, StreamId::Obstacles);
            let mut boxes = Vec::with_capacity(r.count as usize);
            let mut attempts = 0u32;
            while boxes.len() < r.count as usize {
                attempts += 1;
                if attempts > 1000 * r.count.max(1) {
                    return Err(SimError::Config(
                        "obstacles_random cannot keep the base station clear; relax the bounds"
                            .into(),
                    ));
                }
                let center = Position {
                    x: rng.gen_range(r.center_min_m..=r.center_max_m),
                    y: rng.gen_range(r.center_min_m..=r.center_max_m),
                };
                let hw = rng.gen_range(r.half_extent_min_m..=r.half_extent_max_m);
                let hh = rng.gen_range(r.half_extent_min_m..=r.half_extent_max_m);
                let b = ObstacleBox::new(center, hw, hh)?;
                let margin = r.keep_clear_of_enb_m;
                let covers_enb = enb.x >= b.min_x() - margin
                    && enb.x <= b.max_x() + margin
                    && enb.y >= b.min_y() - margin
                    && enb.y <= b.max_y() + margin;
                if !covers_enb {
                    boxes.push(b);
                }
            }
            boxes
        }
        (None, None) => vec![],
    };

    let ues = match (file.ues, file.ues_random) {
        (Some(_), Some(_)) => {
            return Err(SimError::Config(
                "give either [[ues]] or [ues_random], not both".into(),
            ))
        }
        (Some(list), None) => list
            .into_iter()
            .map(|u| UeInit {
                id: UeId(u.id),
                position: u.position.into(),
                velocity: Velocity {
                    x: u.velocity.x,
                    y: u.velocity.y,
                },
            })
            .collect(),
        (None, Some(r)) => {
            if r.count == 0 {
                return Err(SimError::Config("ues_random.count must be >= 1".into()));
            }
            if !(r.speed_min_mps >= 0.0 && r.speed_max_mps >= r.speed_min_mps) {
                return Err(SimError::Config("ues_random speed bounds are invalid".into()));
            }
            let mut rng = stream_rng(seed, StreamId::Placement);
            let mut ues = Vec::with_capacity(r.count as usize);
            for id in 0..r.count {
                let mut attempts = 0u32;
                let position = loop {
                    attempts += 1;
                    if attempts > 10_000 {
                        return Err(SimError::Config(
                            "ues_random cannot satisfy min_distance_from_enb_m".into(),
                        ));
                    }
                    let cand = Position {
                        x: rng.gen_range(0.0..=file.field_size_m),
                        y: rng.gen_range(0.0..=file.field_size_m),
                    };
                    if cand.distance(enb) >= r.min_distance_from_enb_m {
                        break cand;
                    }
                };
                let speed = rng.gen_range(r.speed_min_mps..=r.speed_max_mps);
                let heading = rng.gen_range(0.0..std::f64::consts::TAU);
                ues.push(UeInit {
                    id: UeId(id),
                    position,
                    velocity: Velocity {
                        x: speed * heading.cos(),
                        y: speed * heading.sin(),
                    },
                });
            }
            ues
        }
        (None, None) => {
            return Err(SimError::Config(
                "scenario defines no users: add [[ues]] or [ues_random]".into(),
            ))
        }
    };

    let subframe = {
        let raw = file.subframe.unwrap_or_default();
        SubframeConfig {
            duration_us: raw.duration_us,
            symbols_total: raw.symbols_total,
            control_symbols: raw.control_symbols,
        }
    };
    let budget = file.link.unwrap_or_default();
    let traffic = {
        let raw = file.traffic.unwrap_or_default();
        OnOffConfig {
            avg_rate: RateBps::from_mbps(raw.avg_rate_mbps)?,
            on_duration_us: raw.on_duration_us,
            off_mean_us: raw.off_mean_us,
            packet_size_bits: raw.packet_size_bits,
        }
    };
    let pf = {
        let raw = file.pf.unwrap_or_default();
        PfConfig {
            t_c: raw.t_c,
            alpha: raw.alpha,
            beta: raw.beta,
            gamma_mode: raw.resolve_gamma()?,
            r_ref: match raw.r_ref_mbps {
                Some(mbps) => RateBps::from_mbps(mbps)?,
                None => sched::peak_service_rate(&subframe, &budget),
            },
            epsilon: 1e-6,
        }
    };
    let label = file.label.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    });

    let scenario = Scenario {
        label,
        seed,
        duration_us: file.duration_us.unwrap_or(1_000_000),
        field_size_m: file.field_size_m,
        enb,
        ues,
        obstacles,
        nlos_ues: file
            .nlos_ues
            .unwrap_or_default()
            .into_iter()
            .map(UeId)
            .collect(),
        traffic,
        budget,
        subframe,
        pf,
        policy: match file.scheduler.as_deref() {
            Some(s) => s.parse()?,
            None => Policy::Epf,
        },
        cqi_delay_subframes: file.cqi_delay_subframes.unwrap_or(1),
        harq: file.harq.unwrap_or_default(),
        t_phy_us: file.t_phy_us.unwrap_or(10),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// A resolved scenario re-expressed in the input file schema, so the echoed
/// config can be loaded back verbatim. Users and blockers are always written
/// out explicitly, even when the original file asked for random layouts.
#[derive(Serialize)]
struct EchoFile<'a> {
    label: &'a str,
    duration_us: u64,
    field_size_m: f64,
    scheduler: &'a str,
    cqi_delay_subframes: u64,
    t_phy_us: u64,
    nlos_ues: Vec<u32>,
    enb: PointRaw,
    subframe: SubframeRaw,
    link: &'a LinkBudget,
    traffic: TrafficRaw,
    pf: PfRaw,
    harq: &'a HarqConfig,
    ues: Vec<UeRaw>,
    obstacles: Vec<ObstacleRaw>,
}

fn echo_toml(sc: &Scenario) -> Result<String> {
    let (gamma_mode, gamma_fixed) = match sc.pf.gamma_mode {
        GammaMode::McsDriven => ("mcs-driven".to_string(), None),
        GammaMode::Fixed(g) => ("fixed".to_string(), Some(g)),
    };
    let echo = EchoFile {
        label: &sc.label,
        duration_us: sc.duration_us,
        field_size_m: sc.field_size_m,
        scheduler: sc.policy.name(),
        cqi_delay_subframes: sc.cqi_delay_subframes,
        t_phy_us: sc.t_phy_us,
        nlos_ues: sc.nlos_ues.iter().map(|u| u.0).collect(),
        enb: PointRaw {
            x: sc.enb.x,
            y: sc.enb.y,
        },
        subframe: SubframeRaw {
            duration_us: sc.subframe.duration_us,
            symbols_total: sc.subframe.symbols_total,
            control_symbols: sc.subframe.control_symbols,
        },
        link: &sc.budget,
        traffic: TrafficRaw {
            avg_rate_mbps: sc.traffic.avg_rate.mbps(),
            on_duration_us: sc.traffic.on_duration_us,
            off_mean_us: sc.traffic.off_mean_us,
            packet_size_bits: sc.traffic.packet_size_bits,
        },
        pf: PfRaw {
            t_c: sc.pf.t_c,
            alpha: sc.pf.alpha,
            beta: sc.pf.beta,
            gamma_mode: Some(gamma_mode),
            gamma_fixed,
            r_ref_mbps: Some(sc.pf.r_ref.mbps()),
        },
        harq: &sc.harq,
        ues: sc
            .ues
            .iter()
            .map(|u| UeRaw {
                id: u.id.0,
                position: PointRaw {
                    x: u.position.x,
                    y: u.position.y,
                },
                velocity: VelocityRaw {
                    x: u.velocity.x,
                    y: u.velocity.y,
                },
            })
            .collect(),
        obstacles: sc
            .obstacles
            .iter()
            .map(|b| ObstacleRaw {
                center: PointRaw {
                    x: b.center.x,
                    y: b.center.y,
                },
                half_width: b.half_width,
                half_height: b.half_height,
            })
            .collect(),
    };
    toml::to_string_pretty(&echo)
        .map_err(|e| SimError::Runtime(format!("cannot serialize scenario echo: {e}")))
}

// ---- run orchestration ----

/// A batch of runs: one scenario source crossed with schedulers and seeds.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub source: ScenarioSource,
    /// Empty means "whatever the scenario's own policy is".
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    /// Optional duration override, microseconds.
    pub duration_us: Option<u64>,
    /// Keep the per-subframe grant trace for the grants report.
    pub trace_grants: bool,
}

/// One finished run with its digest.
#[derive(Debug, Clone)]
pub struct CompletedRun {
    pub scenario: Scenario,
    pub result: RunResult,
    pub report: FairnessReport,
}

impl CompletedRun {
    pub fn run_id(&self) -> String {
        format!("{}-s{}", self.result.policy, self.result.seed)
    }
}

/// Execute a plan. Runs are independent and execute in parallel; results
/// come back in plan order (policy-major, then seed).
pub fn execute(plan: &RunPlan) -> Result<Vec<CompletedRun>> {
    if plan.seeds.is_empty() {
        return Err(SimError::Config("at least one seed is required".into()));
    }
    let policies = if plan.policies.is_empty() {
        vec![load_scenario(&plan.source, plan.seeds[0])?.policy]
    } else {
        plan.policies.clone()
    };
    let mut jobs: Vec<Scenario> = Vec::new();
    for &policy in &policies {
        for &seed in &plan.seeds {
            let mut sc = load_scenario(&plan.source, seed)?;
            sc.policy = policy;
            if let Some(d) = plan.duration_us {
                sc.duration_us = d;
            }
            sc.validate()?;
            jobs.push(sc);
        }
    }
    jobs.par_iter()
        .map(|sc| {
            let result = engine::run_with_trace(
                sc,
                TraceConfig {
                    allocations: plan.trace_grants,
                    snapshots: false,
                },
            )?;
            let report = metrics::summarize(&result, sc)?;
            Ok(CompletedRun {
                scenario: sc.clone(),
                result,
                report,
            })
        })
        .collect()
}

// ---- report files ----

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn packets_csv(runs: &[CompletedRun]) -> String {
    let mut out = String::from(
        "run_id,ue,packet_id,size_bits,arrival_us,departure_us,t_queue_us,t_transmit_us,t_phy_us,t_propagate_us,retx_count\n",
    );
    for run in runs {
        let id = run.run_id();
        for r in &run.result.delivered {
            let _ = writeln!(
                out,
                "{id},{},{},{},{},{},{},{},{},{},{}",
                r.ue.0,
                r.packet_id,
                r.size_bits,
                r.arrival_us,
                r.departure_us,
                r.t_queue_us,
                r.t_transmit_us,
                r.t_phy_us,
                r.t_propagate_us,
                r.retx_count
            );
        }
    }
    out
}

fn ue_summary_csv(runs: &[CompletedRun]) -> String {
    let mut out = String::from(
        "run_id,ue,delivered_bits,throughput_mbps,mean_latency_us,p95_tail_us,drops\n",
    );
    for run in runs {
        let id = run.run_id();
        for s in &run.report.per_ue {
            let _ = writeln!(
                out,
                "{id},{},{},{:.3},{:.2},{:.2},{}",
                s.ue.0,
                s.delivered_bits,
                s.throughput_mbps,
                s.mean_latency_us,
                s.p95_tail_us,
                s.dropped_packets
            );
        }
    }
    out
}

fn run_summary_csv(runs: &[CompletedRun]) -> String {
    let mut out = String::from(
        "run_id,scheduler,seed,cell_throughput_mbps,throughput_jain,latency_jain,system_p95_tail_us,nlos_p95_tail_us\n",
    );
    for run in runs {
        let _ = writeln!(
            out,
            "{},{},{},{:.3},{:.6},{:.6},{:.2},{:.2}",
            run.run_id(),
            run.result.policy,
            run.result.seed,
            run.report.cell_throughput_mbps,
            run.report.throughput_jain,
            run.report.latency_jain,
            run.report.system_p95_tail_us,
            run.report.group_p95_tail_us
        );
    }
    out
}

fn grants_csv(runs: &[CompletedRun]) -> String {
    let mut out = String::from("run_id,subframe,ue,symbols\n");
    for run in runs {
        let id = run.run_id();
        if let Some(allocs) = &run.result.allocations {
            for (t, alloc) in allocs.iter().enumerate() {
                for g in &alloc.grants {
                    let _ = writeln!(out, "{id},{t},{},{}", g.ue.0, g.symbols);
                }
            }
        }
    }
    out
}

/// Write the standard report set into `out_dir`: `packets.csv`,
/// `ue_summary.csv`, `run_summary.csv`, one `config-<run_id>.toml` per run,
/// and `grants.csv` when traces were kept. Files appear atomically.
pub fn write_reports(runs: &[CompletedRun], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    put("packets.csv".into(), packets_csv(runs))?;
    put("ue_summary.csv".into(), ue_summary_csv(runs))?;
    put("run_summary.csv".into(), run_summary_csv(runs))?;
    if runs.iter().any(|r| r.result.allocations.is_some()) {
        put("grants.csv".into(), grants_csv(runs))?;
    }
    for run in runs {
        put(format!("config-{}.toml", run.run_id()), echo_toml(&run.scenario)?)?;
    }
    Ok(written)
}

/// One line per run for the terminal.
pub fn format_run_lines(runs: &[CompletedRun]) -> String {
    let mut out = String::new();
    for run in runs {
        let _ = writeln!(
            out,
            "{:<16} cell {:>9.3} Mbit/s  jain(thpt) {:.4}  jain(lat) {:.4}  p95 tail {:>9.2} us  drops {}",
            run.run_id(),
            run.report.cell_throughput_mbps,
            run.report.throughput_jain,
            run.report.latency_jain,
            run.report.system_p95_tail_us,
            run.result.dropped_packets,
        );
    }
    out
}

// ---- policy comparison ----

/// Seed-averaged figures for one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyAggregate {
    pub policy: Policy,
    pub runs: usize,
    pub cell_throughput_mbps: f64,
    pub mean_latency_us: f64,
    pub system_p95_tail_us: f64,
    pub group_p95_tail_us: f64,
    pub throughput_jain: f64,
    pub latency_jain: f64,
}

/// Group completed runs by policy and average across seeds. All runs must
/// come from the same scenario (label) and every policy must cover the same
/// seeds, otherwise the comparison would be apples to oranges.
pub fn aggregate_by_policy(runs: &[CompletedRun]) -> Result<Vec<PolicyAggregate>> {
    if runs.is_empty() {
        return Err(SimError::Config("nothing to compare".into()));
    }
    let label = &runs[0].scenario.label;
    if let Some(r) = runs.iter().find(|r| &r.scenario.label != label) {
        return Err(SimError::Config(format!(
            "cannot compare runs of different scenarios: '{label}' vs '{}'",
            r.scenario.label
        )));
    }
    let mut order: Vec<Policy> = Vec::new();
    for r in runs {
        if !order.contains(&r.result.policy) {
            order.push(r.result.policy);
        }
    }
    let mut seed_sets: Vec<Vec<u64>> = Vec::new();
    for &p in &order {
        let mut seeds: Vec<u64> = runs
            .iter()
            .filter(|r| r.result.policy == p)
            .map(|r| r.result.seed)
            .collect();
        seeds.sort_unstable();
        seed_sets.push(seeds);
    }
    if seed_sets.iter().any(|s| s != &seed_sets[0]) {
        return Err(SimError::Config(
            "policies were run on different seed sets; rerun with a common --seeds".into(),
        ));
    }

    Ok(order
        .iter()
        .map(|&policy| {
            let group: Vec<&CompletedRun> =
                runs.iter().filter(|r| r.result.policy == policy).collect();
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&CompletedRun) -> f64| {
                group.iter().map(|r| f(r)).sum::<f64>() / n
            };
            PolicyAggregate {
                policy,
                runs: group.len(),
                cell_throughput_mbps: mean(&|r| r.report.cell_throughput_mbps),
                mean_latency_us: mean(&|r| r.report.mean_latency_us),
                system_p95_tail_us: mean(&|r| r.report.system_p95_tail_us),
                group_p95_tail_us: mean(&|r| r.report.group_p95_tail_us),
                throughput_jain: mean(&|r| r.report.throughput_jain),
                latency_jain: mean(&|r| r.report.latency_jain),
            }
        })
        .collect())
}

/// Baseline for deltas: standard PF when present, the first policy otherwise.
pub fn baseline_index(aggs: &[PolicyAggregate]) -> usize {
    aggs.iter()
        .position(|a| a.policy == Policy::Spf)
        .unwrap_or(0)
}

fn pct(value: f64, base: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        (value - base) / base * 100.0
    }
}

pub fn compare_csv(aggs: &[PolicyAggregate]) -> String {
    let base = aggs[baseline_index(aggs)];
    let mut out = String::from(
        "scheduler,runs,cell_throughput_mbps,throughput_delta_pct,mean_latency_us,latency_delta_pct,system_p95_tail_us,tail_delta_pct,throughput_jain,latency_jain\n",
    );
    for a in aggs {
        let _ = writeln!(
            out,
            "{},{},{:.3},{:+.2},{:.2},{:+.2},{:.2},{:+.2},{:.6},{:.6}",
            a.policy,
            a.runs,
            a.cell_throughput_mbps,
            pct(a.cell_throughput_mbps, base.cell_throughput_mbps),
            a.mean_latency_us,
            pct(a.mean_latency_us, base.mean_latency_us),
            a.system_p95_tail_us,
            pct(a.system_p95_tail_us, base.system_p95_tail_us),
            a.throughput_jain,
            a.latency_jain
        );
    }
    out
}

/// Human-readable comparison table, deltas against the baseline.
pub fn compare_table(aggs: &[PolicyAggregate]) -> String {
    let base = aggs[baseline_index(aggs)];
    let mut out = format!(
        "{:<12} {:>14} {:>8} {:>12} {:>8} {:>12} {:>8} {:>10} {:>10}\n",
        "scheduler",
        "thpt Mbit/s",
        "d%",
        "latency us",
        "d%",
        "p95 tail us",
        "d%",
        "jain thpt",
        "jain lat"
    );
    for a in aggs {
        let _ = writeln!(
            out,
            "{:<12} {:>14.3} {:>+8.2} {:>12.2} {:>+8.2} {:>12.2} {:>+8.2} {:>10.4} {:>10.4}",
            a.policy.name(),
            a.cell_throughput_mbps,
            pct(a.cell_throughput_mbps, base.cell_throughput_mbps),
            a.mean_latency_us,
            pct(a.mean_latency_us, base.mean_latency_us),
            a.system_p95_tail_us,
            pct(a.system_p95_tail_us, base.system_p95_tail_us),
            a.throughput_jain,
            a.latency_jain
        );
    }
    out
}
