//! One sender, one receiver, one shared medium, end to end.

use hopshare::medium::{MediumConfig, MediumState};
use hopshare::node::{NodeConfig, NodeState};
use hopshare::sim::run_session;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plain = std::env::args().nth(1).unwrap_or_else(|| "HELLO".into());
    let (hop_seed, n, k) = (7, 5, 3);

    let mut tx = NodeState::new(NodeConfig::new(0xA1, hop_seed, 9, n, k))?;
    let mut rx = NodeState::new(NodeConfig::new(0xB2, hop_seed, 0, n, k))?;
    let mut medium = MediumState::new(MediumConfig { loss_prob: 0.02, seed: 1, ..Default::default() })?;

    let out = run_session(&mut tx, &mut rx, &mut medium, plain.as_bytes(), 0, None)?;
    println!("channels: {:?}", out.plan.schedule.frequencies());
    println!("{} packets per stream, {} slots", out.plan.packets_per_stream, out.slots);
    for e in &out.trace {
        println!("slot {:>2} ch {:>6} {}", e.slot, e.channel, e.event);
    }
    match &out.recovered {
        Ok(bytes) => println!("recovered: {}", String::from_utf8_lossy(bytes)),
        Err(e) => println!("not recovered: {e}"),
    }
    Ok(())
}
