//! On-off UDP-style packet source.
//!
//! A source alternates silence (exponential, inverse-CDF sampled) with fixed
//! length bursts. During a burst it streams bits at the peak rate — scaled up
//! from the configured average so the long-run mean comes out right — and a
//! packet arrives whenever a full packet worth of bits has accumulated.
//! Leftover bits at burst end are not lost; they carry into the next burst.
//!
//! Arrival timestamps are rounded *up* to the integer-microsecond clock (a
//! packet cannot arrive before its last bit exists) and bumped forward where
//! rounding would create a tie, keeping per-user arrivals strictly ordered.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::types::{RateBps, TimeUs, UeId};
use crate::{Result, SimError};

/// Parameters of one on-off source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnOffConfig {
    /// Long-run average offered rate.
    pub avg_rate: RateBps,
    /// Fixed burst length, us.
    pub on_duration_us: u64,
    /// Mean of the exponential silence length, us.
    pub off_mean_us: u64,
    /// Size of every packet, bits.
    pub packet_size_bits: u64,
}

impl Default for OnOffConfig {
    fn default() -> Self {
        OnOffConfig {
            avg_rate: RateBps::from_mbps(100.0).expect("static rate"),
            on_duration_us: 5,
            off_mean_us: 100,
            packet_size_bits: 12_000,
        }
    }
}

impl OnOffConfig {
    pub fn validate(&self) -> Result<()> {
        if self.on_duration_us == 0 {
            return Err(SimError::Config("traffic on_duration_us must be > 0".into()));
        }
        if self.off_mean_us == 0 {
            return Err(SimError::Config("traffic off_mean_us must be > 0".into()));
        }
        if self.packet_size_bits == 0 {
            return Err(SimError::Config("traffic packet_size_bits must be > 0".into()));
        }
        Ok(())
    }
}

/// Rate at which bits stream during a burst.
///
/// The duty cycle is `on / (on + off_mean)`, so holding the long-run average
/// at `avg_rate` requires `peak = avg * (on + off_mean) / on`. With a zero
/// off time this degenerates to the always-on limit `peak = avg`.
pub fn peak_rate(cfg: &OnOffConfig) -> Result<RateBps> {
    if cfg.on_duration_us == 0 {
        return Err(SimError::Config("traffic on_duration_us must be > 0".into()));
    }
    let scale = (cfg.on_duration_us + cfg.off_mean_us) as f64 / cfg.on_duration_us as f64;
    RateBps::new(cfg.avg_rate.bps() * scale)
}

/// One generated packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Packet {
    /// Sequence number within this user's stream, strictly increasing with
    /// arrival order.
    pub id: u64,
    pub ue: UeId,
    pub size_bits: u64,
    pub arrival_time: TimeUs,
}

/// Inverse-CDF sample of an exponential with the given mean.
fn exp_draw<R: Rng>(mean: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen(); // [0, 1)
    -mean * (1.0 - u).ln()
}

/// Generate this user's arrivals over `[0, horizon_us]`.
///
/// The source starts silent. Identical inputs (config, user, RNG state,
/// horizon) produce an identical packet list.
pub fn generate<R: Rng>(
    cfg: &OnOffConfig,
    ue: UeId,
    rng: &mut R,
    horizon_us: u64,
) -> Result<Vec<Packet>> {
    cfg.validate()?;
    let peak_bits_per_us = peak_rate(cfg)?.bps() / 1e6;
    let size = cfg.packet_size_bits as f64;
    let horizon = horizon_us as f64;

    let mut packets = Vec::new();
    let mut t = 0.0f64; // current time, us
    let mut residual_bits = 0.0f64; // carried from the previous burst
    let mut next_id = 0u64;
    let mut last_arrival: Option<u64> = None;

    if peak_bits_per_us <= 0.0 {
        return Ok(packets);
    }

    loop {
        t += exp_draw(cfg.off_mean_us as f64, rng);
        if t >= horizon {
            break;
        }
        let burst_start = t;
        let burst_end = burst_start + cfg.on_duration_us as f64;
        let produce_until = burst_end.min(horizon);
        let available = residual_bits + (produce_until - burst_start) * peak_bits_per_us;
        let whole_packets = (available / size).floor() as u64;

        let mut truncated = false;
        for i in 1..=whole_packets {
            let completion = burst_start + (i as f64 * size - residual_bits) / peak_bits_per_us;
            let mut arrival = completion.ceil() as u64;
            if let Some(prev) = last_arrival {
                if arrival <= prev {
                    arrival = prev + 1;
                }
            }
            if arrival > horizon_us {
                truncated = true;
                break;
            }
            packets.push(Packet {
                id: next_id,
                ue,
                size_bits: cfg.packet_size_bits,
                arrival_time: TimeUs(arrival),
            });
            next_id += 1;
            last_arrival = Some(arrival);
        }
        if truncated {
            break;
        }
        residual_bits = available - whole_packets as f64 * size;
        t = burst_end;
        if t >= horizon {
            break;
        }
    }
    Ok(packets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg_mbps(avg_mbps: f64) -> OnOffConfig {
        OnOffConfig {
            avg_rate: RateBps::from_mbps(avg_mbps).unwrap(),
            ..OnOffConfig::default()
        }
    }

    #[test]
    fn peak_rate_reference_points() {
        // 100 Mbps avg, 5 us on / 100 us off mean -> 2100 Mbps peak.
        let p = peak_rate(&cfg_mbps(100.0)).unwrap();
        assert!((p.mbps() - 2100.0).abs() < 1e-9);

        let p = peak_rate(&cfg_mbps(500.0)).unwrap();
        assert!((p.mbps() - 10_500.0).abs() < 1e-9);

        // Always-on limit.
        let always_on = OnOffConfig {
            off_mean_us: 0,
            ..cfg_mbps(100.0)
        };
        let p = peak_rate(&always_on).unwrap();
        assert!((p.mbps() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn zero_horizon_means_no_packets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let packets = generate(&cfg_mbps(100.0), UeId(0), &mut rng, 0).unwrap();
        assert!(packets.is_empty());
    }

    #[test]
    fn off_draw_mean_matches_configured() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mean = 100.0;
        let total: f64 = (0..n).map(|_| exp_draw(mean, &mut rng)).sum();
        let sample_mean = total / n as f64;
        assert!(
            (sample_mean - mean).abs() / mean < 0.03,
            "off-phase sample mean {sample_mean} too far from {mean}"
        );
    }

    #[test]
    fn long_run_rate_matches_average() {
        // Law of large numbers over several independent streams.
        let horizon = 1_000_000; // 1 s
        let cfg = cfg_mbps(100.0);
        let mut rates = Vec::new();
        for seed in 0..8u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let packets = generate(&cfg, UeId(0), &mut rng, horizon).unwrap();
            let bits: u64 = packets.iter().map(|p| p.size_bits).sum();
            rates.push(bits as f64 / (horizon as f64 * 1e-6)); // bps
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!(
            (mean - 100e6).abs() / 100e6 < 0.05,
            "delivered rate {mean} deviates more than 5% from configured"
        );
    }

    #[test]
    fn arrivals_strictly_increase_and_stay_in_horizon() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let packets = generate(&cfg_mbps(500.0), UeId(1), &mut rng, 50_000).unwrap();
            for w in packets.windows(2) {
                assert!(w[1].arrival_time > w[0].arrival_time);
                assert_eq!(w[1].id, w[0].id + 1);
            }
            assert!(packets.iter().all(|p| p.arrival_time.us() <= 50_000));
        }
    }

    #[test]
    fn arrivals_never_outrun_peak_rate() {
        let cfg = cfg_mbps(500.0);
        let peak = peak_rate(&cfg).unwrap().bps() / 1e6; // bits per us
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let packets = generate(&cfg, UeId(0), &mut rng, 200_000).unwrap();
            for horizon in [1_000u64, 10_000, 50_000, 200_000] {
                let bits: u64 = packets
                    .iter()
                    .filter(|p| p.arrival_time.us() <= horizon)
                    .map(|p| p.size_bits)
                    .sum();
                let bound = peak * horizon as f64 + cfg.packet_size_bits as f64;
                assert!(
                    bits as f64 <= bound + 1e-6,
                    "seed {seed} horizon {horizon}: {bits} bits exceeds {bound}"
                );
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = cfg_mbps(250.0);
        let a = generate(&cfg, UeId(2), &mut ChaCha8Rng::seed_from_u64(7), 100_000).unwrap();
        let b = generate(&cfg, UeId(2), &mut ChaCha8Rng::seed_from_u64(7), 100_000).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn residual_bits_carry_between_bursts() {
        // One 5 us burst at 2100 bits/us produces 10500 bits: no whole 12000
        // bit packet yet, but two bursts are enough for one.
        let cfg = cfg_mbps(100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let packets = generate(&cfg, UeId(0), &mut rng, 2_000).unwrap();
        let bursts = 2_000.0 / 105.0; // expected bursts in horizon
        let expected = bursts * 5.0 * 2100.0 / 12_000.0;
        assert!(
            (packets.len() as f64 - expected).abs() < expected,
            "packet count {} wildly off expectation {expected}",
            packets.len()
        );
        assert!(!packets.is_empty(), "carryover should produce packets");
    }

    #[test]
    fn config_validation() {
        let mut cfg = OnOffConfig::default();
        cfg.on_duration_us = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = OnOffConfig::default();
        cfg.off_mean_us = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = OnOffConfig::default();
        cfg.packet_size_bits = 0;
        assert!(cfg.validate().is_err());
        assert!(OnOffConfig::default().validate().is_ok());
    }
}
