//! Drives one sender and one receiver over a shared medium, slot by slot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::medium::{Adversary, MediumState};
use crate::node::{NodeError, NodeState, SessionPlan};
use crate::trace::TraceEvent;

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub plan: SessionPlan,
    /// Slots used, first slot included.
    pub slots: u64,
    pub recovered: Result<Vec<u8>, NodeError>,
    pub trace: Vec<TraceEvent>,
}

impl SessionOutcome {
    pub fn verified(&self, plain: &[u8]) -> bool {
        matches!(&self.recovered, Ok(r) if r == plain)
    }
}

/// Sends `plain` from `sender` to `receiver` starting at `start_slot`.
///
/// The receiver opens its pipes before the first slot and listens every
/// slot until the sender's slaves are drained. If an adversary is given it
/// observes each slot with `adversary_seed` driving its coin flips.
pub fn run_session(
    sender: &mut NodeState,
    receiver: &mut NodeState,
    medium: &mut MediumState,
    plain: &[u8],
    start_slot: u64,
    mut adversary: Option<(&mut Adversary, u64)>,
) -> Result<SessionOutcome, NodeError> {
    let plan = sender.master_prepare(plain)?;
    receiver.receiver_open()?;
    let mut adv_rng = adversary.as_ref().map(|(_, seed)| ChaCha8Rng::seed_from_u64(*seed));
    let log_start = medium.log().len();
    let mut slot = start_slot;
    while !sender.all_sent() {
        // collisions surface later as missing streams at the receiver
        match sender.slave_transmit(medium, slot) {
            Ok(_) | Err(NodeError::MediumRejected { .. }) => {}
            Err(e) => return Err(e),
        }
        receiver.receiver_listen(medium, slot)?;
        if let (Some((adv, _)), Some(rng)) = (adversary.as_mut(), adv_rng.as_mut()) {
            adv.observe(medium, slot, rng);
        }
        slot += 1;
    }
    let mut trace: Vec<TraceEvent> = medium.trace().split_off(log_start);
    if let Some((adv, _)) = adversary {
        trace.extend(adv.trace());
        trace.sort_by_key(|e| e.slot);
    }
    Ok(SessionOutcome { plan, slots: slot - start_slot, recovered: receiver.receiver_finish(), trace })
}
