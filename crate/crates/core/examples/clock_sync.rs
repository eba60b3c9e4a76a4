//! A SYNC flood: every node ends on the largest clock it heard.

use hopshare::medium::MediumState;
use hopshare::node::{sync_round, NodeConfig, NodeState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clocks = [1_000_004u64, 1_000_917, 999_200, 1_000_917, 1_000_050];
    let mut nodes = clocks
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut n = NodeState::new(NodeConfig::new(10 + i as u32, 1, 1, 5, 1))?;
            n.local_clock = c;
            Ok(n)
        })
        .collect::<Result<Vec<_>, hopshare::node::NodeError>>()?;
    let mut medium = MediumState::lossless(16)?;
    for o in sync_round(&mut nodes, &mut medium, 0)? {
        println!("node {} -> clock {} (from {})", o.node_id, o.adopted_clock, o.source_device);
    }
    Ok(())
}
