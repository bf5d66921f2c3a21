//! One full run of the clustered-blockage cell: ten saturating users, three
//! of them circling a dense obstacle pocket. Prints the per-user outcome and
//! the fairness figures.
//!
//!     cargo run --release --example run_case1 [seed]

use mmwave_mac_sim::metrics::summarize;
use mmwave_mac_sim::{build_case1, run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);

    let scenario = build_case1(seed);
    println!(
        "scenario '{}', seed {}: {} users, {} blockers, {} ms at {} Mbit/s each, {} scheduler",
        scenario.label,
        seed,
        scenario.ues.len(),
        scenario.obstacles.len(),
        scenario.duration_us / 1000,
        scenario.traffic.avg_rate.mbps(),
        scenario.policy.name(),
    );

    let result = run(&scenario)?;
    let report = summarize(&result, &scenario)?;

    println!();
    println!("  ue   delivered    throughput   mean latency   p95 tail     drops");
    for ue in &report.per_ue {
        let grouped = if scenario.nlos_ues.contains(&ue.ue) { "*" } else { " " };
        println!(
            "  {}{}   {:7} pkt  {:7.1} Mb/s  {:9.0} us  {:9.0} us  {:6}",
            ue.ue.0,
            grouped,
            ue.delivered_packets,
            ue.throughput_mbps,
            ue.mean_latency_us,
            ue.p95_tail_us,
            ue.dropped_packets,
        );
    }
    println!("  (* = blockage reporting group)");
    println!();
    println!(
        "cell {:.1} Mbit/s | throughput Jain {:.4} | latency Jain {:.4} | system tail {:.0} us",
        report.cell_throughput_mbps,
        report.throughput_jain,
        report.latency_jain,
        report.system_p95_tail_us,
    );
    println!(
        "conservation: {} generated = {} delivered + {} dropped + {} left queued",
        result.generated_packets,
        result.delivered.len(),
        result.dropped_packets,
        result.queued_packets,
    );
    Ok(())
}
