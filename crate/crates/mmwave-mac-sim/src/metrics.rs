//! Fairness and latency statistics over finished runs.

use serde::Serialize;

use crate::engine::{RunResult, Scenario};
use crate::types::UeId;
use crate::{Result, SimError};

/// Jain's fairness index, `(sum x)^2 / (n * sum x^2)`.
///
/// Ranges from `1/n` (one user takes everything) to `1` (perfect equality).
/// Values must be non-negative and at least one must be positive.
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(SimError::Runtime("fairness of an empty set is undefined".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &v in values {
        if !(v.is_finite() && v >= 0.0) {
            return Err(SimError::Runtime(format!(
                "fairness requires finite non-negative values, got {v}"
            )));
        }
        sum += v;
        sum_sq += v * v;
    }
    if sum_sq == 0.0 {
        return Err(SimError::Runtime("fairness of all-zero values is undefined".into()));
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

/// Mean of the worst five percent: sorts the samples and averages the top
/// `max(1, ceil(0.05 n))`. Captures how bad the tail beyond the 95th
/// percentile actually is, not just where it starts.
pub fn tail_mean_beyond_p95(latencies_us: &[u64]) -> Option<f64> {
    if latencies_us.is_empty() {
        return None;
    }
    let mut sorted = latencies_us.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let m = ((0.05 * n as f64).ceil() as usize).max(1);
    let top = &sorted[n - m..];
    Some(top.iter().sum::<u64>() as f64 / m as f64)
}

/// Per-user digest of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UeSummary {
    pub ue: UeId,
    pub delivered_packets: u64,
    pub delivered_bits: u64,
    /// Goodput of fully delivered packets. Bits per microsecond equals
    /// megabits per second.
    pub throughput_mbps: f64,
    /// Zero when nothing was delivered (see `delivered_packets`).
    pub mean_latency_us: f64,
    /// Mean latency beyond this user's own 95th percentile; zero when
    /// nothing was delivered.
    pub p95_tail_us: f64,
    pub dropped_packets: u64,
}

/// Whole-run digest: per-user summaries plus the cross-user fairness and
/// tail figures the policy comparison turns on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub per_ue: Vec<UeSummary>,
    pub cell_throughput_mbps: f64,
    pub mean_latency_us: f64,
    /// Jain index over every user's throughput (zeros included).
    pub throughput_jain: f64,
    /// Jain index over the mean latencies of users that delivered anything.
    pub latency_jain: f64,
    /// Tail of the pooled latency distribution, all packets of all users.
    pub system_p95_tail_us: f64,
    /// Tail pooled over the scenario's reporting group (all users when the
    /// group is empty).
    pub group_p95_tail_us: f64,
    pub group_delivered_bits: u64,
}

/// Pooled tail over one group of users; `None` if they delivered nothing.
pub fn pooled_tail_us(result: &RunResult, group: &[UeId]) -> Option<f64> {
    let lats: Vec<u64> = result
        .delivered
        .iter()
        .filter(|r| group.is_empty() || group.contains(&r.ue))
        .map(|r| r.latency_us())
        .collect();
    tail_mean_beyond_p95(&lats)
}

/// Digest a finished run. Errors if nothing at all was delivered — every
/// figure here would be undefined.
pub fn summarize(result: &RunResult, scenario: &Scenario) -> Result<FairnessReport> {
    if result.delivered.is_empty() {
        return Err(SimError::Runtime(
            "run delivered no packets; summary statistics are undefined".into(),
        ));
    }
    let duration_us = result.duration_us as f64;
    let mut per_ue = Vec::with_capacity(result.n_ues);
    for u in 0..result.n_ues {
        let ue = UeId(u as u32);
        let mut bits = 0u64;
        let mut lat_sum = 0u64;
        let mut lats = Vec::new();
        for r in result.delivered.iter().filter(|r| r.ue == ue) {
            bits += r.size_bits;
            lat_sum += r.latency_us();
            lats.push(r.latency_us());
        }
        let n = lats.len() as u64;
        per_ue.push(UeSummary {
            ue,
            delivered_packets: n,
            delivered_bits: bits,
            throughput_mbps: bits as f64 / duration_us,
            mean_latency_us: if n > 0 { lat_sum as f64 / n as f64 } else { 0.0 },
            p95_tail_us: tail_mean_beyond_p95(&lats).unwrap_or(0.0),
            dropped_packets: result.dropped_by_ue.get(u).copied().unwrap_or(0),
        });
    }

    let throughputs: Vec<f64> = per_ue.iter().map(|s| s.throughput_mbps).collect();
    let latencies: Vec<f64> = per_ue
        .iter()
        .filter(|s| s.delivered_packets > 0)
        .map(|s| s.mean_latency_us)
        .collect();
    let all_lats: Vec<u64> = result.delivered.iter().map(|r| r.latency_us()).collect();
    let group_bits = scenario
        .nlos_ues
        .iter()
        .map(|&ue| result.delivered_bits_for(ue))
        .sum::<u64>();

    Ok(FairnessReport {
        cell_throughput_mbps: result.delivered_bits() as f64 / duration_us,
        mean_latency_us: all_lats.iter().sum::<u64>() as f64 / all_lats.len() as f64,
        throughput_jain: jain_index(&throughputs)?,
        latency_jain: jain_index(&latencies)?,
        system_p95_tail_us: tail_mean_beyond_p95(&all_lats).expect("nonempty"),
        group_p95_tail_us: pooled_tail_us(result, &scenario.nlos_ues)
            .unwrap_or(0.0),
        group_delivered_bits: if scenario.nlos_ues.is_empty() {
            result.delivered_bits()
        } else {
            group_bits
        },
        per_ue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{self, PacketRecord};
    use crate::sched::Policy;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} != {b}");
    }

    // --- jain ---

    #[test]
    fn jain_reference_points() {
        assert_close(jain_index(&[5.0, 5.0, 5.0]).unwrap(), 1.0);
        assert_close(jain_index(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
        assert_close(jain_index(&[1.0, 1.0, 2.0]).unwrap(), 16.0 / 18.0);
    }

    #[test]
    fn jain_bounds_and_scale_invariance() {
        let vs = [0.3, 1.7, 0.0, 9.4, 2.2];
        let j = jain_index(&vs).unwrap();
        assert!(j >= 1.0 / vs.len() as f64 && j <= 1.0);
        let scaled: Vec<f64> = vs.iter().map(|v| v * 123.4).collect();
        assert_close(jain_index(&scaled).unwrap(), j);
    }

    #[test]
    fn jain_rejects_degenerate_input() {
        assert!(jain_index(&[]).is_err());
        assert!(jain_index(&[0.0, 0.0]).is_err());
        assert!(jain_index(&[1.0, -2.0]).is_err());
        assert!(jain_index(&[f64::NAN]).is_err());
    }

    // --- tail ---

    #[test]
    fn tail_reference_points() {
        let hundred: Vec<u64> = (1..=100).collect();
        assert_close(tail_mean_beyond_p95(&hundred).unwrap(), 98.0);
        assert_close(tail_mean_beyond_p95(&[42]).unwrap(), 42.0);
        assert_eq!(tail_mean_beyond_p95(&[]), None);
    }

    #[test]
    fn tail_sample_count_rounds_up() {
        // 20 samples -> exactly one; 21 -> two.
        let v: Vec<u64> = (1..=20).collect();
        assert_close(tail_mean_beyond_p95(&v).unwrap(), 20.0);
        let v: Vec<u64> = (1..=21).collect();
        assert_close(tail_mean_beyond_p95(&v).unwrap(), 20.5);
    }

    #[test]
    fn tail_never_below_mean() {
        let v: Vec<u64> = (0..57).map(|i| (i * 37) % 1000).collect();
        let mean = v.iter().sum::<u64>() as f64 / v.len() as f64;
        assert!(tail_mean_beyond_p95(&v).unwrap() >= mean);
    }

    // --- summarize ---

    fn record(ue: u32, id: u64, latency: u64) -> PacketRecord {
        PacketRecord {
            ue: UeId(ue),
            packet_id: id,
            size_bits: 12_000,
            arrival_us: 0,
            departure_us: latency,
            t_queue_us: 0,
            t_transmit_us: 0,
            t_phy_us: 0,
            t_propagate_us: 0,
            retx_count: 0,
        }
    }

    fn fabricated() -> (RunResult, Scenario) {
        let mut scenario = engine::build_case1(1);
        scenario.nlos_ues = vec![UeId(2)];
        let delivered = vec![
            record(0, 0, 100),
            record(0, 1, 300),
            record(1, 0, 100),
            record(1, 1, 200),
            record(1, 2, 300),
            record(2, 0, 250),
        ];
        let result = RunResult {
            label: "fabricated".into(),
            policy: Policy::Spf,
            seed: 1,
            duration_us: 1_000,
            n_ues: 3,
            delivered,
            generated_packets: 6,
            generated_bits: 72_000,
            dropped_packets: 1,
            dropped_bits: 12_000,
            dropped_by_ue: vec![0, 1, 0],
            queued_packets: 0,
            queued_bits: 0,
            allocations: None,
            snapshots: None,
        };
        (result, scenario)
    }

    #[test]
    fn summarize_hand_example() {
        let (result, scenario) = fabricated();
        let rep = summarize(&result, &scenario).unwrap();

        // Throughputs 24, 36, 12 Mbit/s.
        assert_close(rep.per_ue[0].throughput_mbps, 24.0);
        assert_close(rep.per_ue[1].throughput_mbps, 36.0);
        assert_close(rep.per_ue[2].throughput_mbps, 12.0);
        assert_close(rep.cell_throughput_mbps, 72.0);
        assert_close(rep.throughput_jain, 5184.0 / 6048.0);

        // Mean latencies 200, 200, 250.
        assert_close(rep.per_ue[0].mean_latency_us, 200.0);
        assert_close(rep.per_ue[1].mean_latency_us, 200.0);
        assert_close(rep.per_ue[2].mean_latency_us, 250.0);
        assert_close(rep.latency_jain, 422_500.0 / 427_500.0);

        // Per-user tails: one sample each of the top 5%.
        assert_close(rep.per_ue[0].p95_tail_us, 300.0);
        assert_close(rep.per_ue[1].p95_tail_us, 300.0);
        assert_close(rep.per_ue[2].p95_tail_us, 250.0);

        // Pooled: six samples -> top one; group = user 2 only.
        assert_close(rep.system_p95_tail_us, 300.0);
        assert_close(rep.group_p95_tail_us, 250.0);
        assert_eq!(rep.group_delivered_bits, 12_000);
        assert_eq!(rep.per_ue[1].dropped_packets, 1);
        assert_close(rep.mean_latency_us, 1250.0 / 6.0);
    }

    #[test]
    fn empty_group_falls_back_to_all_users() {
        let (result, mut scenario) = fabricated();
        scenario.nlos_ues = vec![];
        let rep = summarize(&result, &scenario).unwrap();
        assert_close(rep.group_p95_tail_us, rep.system_p95_tail_us);
        assert_eq!(rep.group_delivered_bits, 72_000);
    }

    #[test]
    fn summarize_requires_deliveries() {
        let (mut result, scenario) = fabricated();
        result.delivered.clear();
        assert!(summarize(&result, &scenario).is_err());
    }

    #[test]
    fn users_without_deliveries_zeroed_but_counted() {
        let (mut result, scenario) = fabricated();
        result.delivered.retain(|r| r.ue != UeId(2));
        let rep = summarize(&result, &scenario).unwrap();
        assert_eq!(rep.per_ue[2].delivered_packets, 0);
        assert_eq!(rep.per_ue[2].mean_latency_us, 0.0);
        // The silent user still drags the throughput index down...
        assert!(rep.throughput_jain < 0.9);
        // ...but is excluded from the latency index.
        assert_close(rep.latency_jain, 1.0);
    }
}
