//! Blockage geometry: walk a user past a box obstacle and watch the
//! line of sight toggle, then show what the blockage costs in path loss.
//!
//!     cargo run --example los_geometry

use mmwave_mac_sim::channel::{fspl_db, is_los, path_loss_db, LinkBudget, ObstacleBox};
use mmwave_mac_sim::Position;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let enb = Position { x: 0.0, y: 0.0 };
    let wall = ObstacleBox::new(Position { x: 40.0, y: 0.0 }, 4.0, 10.0)?;

    println!("base station at origin, 8 x 20 m box centred on (40, 0)");
    println!();
    println!("  user x    path        state");
    let mut last = None;
    for step in 0..=20 {
        let x = 10.0 + step as f64 * 5.0;
        let ue = Position { x, y: -6.0 + x * 0.2 }; // slanted walk past the box
        let clear = is_los(enb, ue, std::slice::from_ref(&wall))?;
        let state = if clear { "LOS" } else { "blocked" };
        if last != Some(clear) {
            println!("  {:6.1}    ({:5.1},{:5.1})  -> {state}", x, ue.x, ue.y);
            last = Some(clear);
        }
    }

    let budget = LinkBudget {
        shadow_sigma_db: 0.0,
        ..LinkBudget::default()
    };
    println!();
    println!("free-space loss at 28 GHz and the 30 dB blockage penalty:");
    println!("  distance   LOS loss   blocked loss");
    for d in [10.0, 50.0, 100.0, 200.0] {
        println!(
            "  {:5.0} m    {:6.2} dB  {:6.2} dB",
            d,
            path_loss_db(d, &budget, true, 0.0),
            path_loss_db(d, &budget, false, 0.0),
        );
    }

    println!();
    println!(
        "carrier comparison at 100 m: 60 GHz pays {:.2} dB more than 2.4 GHz",
        fspl_db(100.0, 60e9) - fspl_db(100.0, 2.4e9)
    );
    Ok(())
}
