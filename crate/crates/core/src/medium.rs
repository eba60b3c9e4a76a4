//! Slotted broadcast medium with collisions, random loss and passive
//! eavesdroppers.
//!
//! Time advances in slots. A channel carries at most one packet per slot:
//! if two or more transmissions land in the same (slot, channel) cell, all
//! of them are destroyed and the cell is logged as a collision. Loss is an
//! independent per-packet drop drawn from the medium's own seeded RNG.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hopping::CHANNEL_COUNT;
use crate::trace::TraceEvent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediumError {
    #[error("channel {channel} out of range (medium has {count} channels)")]
    BadChannel { channel: u32, count: u32 },
    #[error("channel count must be in 1..={CHANNEL_COUNT}, got {0}")]
    BadChannelCount(u32),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("adversary cannot watch {m} of {count} channels")]
    BadWatchCount { m: u32, count: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delivery {
    Delivered,
    Collided,
    Lost,
}

impl Delivery {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Delivered => "delivered",
            Self::Collided => "collided",
            Self::Lost => "lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub slot: u64,
    pub channel: u32,
    pub packet: Vec<u8>,
    pub outcome: Delivery,
}

#[derive(Debug, Clone)]
pub struct MediumConfig {
    pub channel_count: u32,
    pub loss_prob: f64,
    pub seed: u64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self { channel_count: CHANNEL_COUNT, loss_prob: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct MediumState {
    channel_count: u32,
    loss_prob: f64,
    rng: ChaCha8Rng,
    slot: u64,
    // cell -> indices into `log` of the transmissions that reached it
    grid: BTreeMap<u64, BTreeMap<u32, Vec<usize>>>,
    log: Vec<TxRecord>,
    collision_log: Vec<(u64, u32)>,
}

impl MediumState {
    pub fn new(config: MediumConfig) -> Result<Self, MediumError> {
        if !(1..=CHANNEL_COUNT).contains(&config.channel_count) {
            return Err(MediumError::BadChannelCount(config.channel_count));
        }
        if !(0.0..=1.0).contains(&config.loss_prob) {
            return Err(MediumError::BadProbability(config.loss_prob));
        }
        Ok(Self {
            channel_count: config.channel_count,
            loss_prob: config.loss_prob,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            slot: 0,
            grid: BTreeMap::new(),
            log: Vec::new(),
            collision_log: Vec::new(),
        })
    }

    /// Lossless medium over `channel_count` channels.
    pub fn lossless(channel_count: u32) -> Result<Self, MediumError> {
        Self::new(MediumConfig { channel_count, ..Default::default() })
    }

    pub fn channel_count(&self) -> u32 {
        self.channel_count
    }

    /// Latest slot any transmission has used.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Puts `packet` on `channel` during `slot`.
    ///
    /// The returned outcome reflects the cell as of this call. A packet that
    /// was reported delivered is downgraded to collided if a later
    /// transmission hits the same cell; [`MediumState::log`] always holds the
    /// final outcome.
    pub fn transmit(&mut self, channel: u32, packet: &[u8], slot: u64) -> Result<Delivery, MediumError> {
        if channel >= self.channel_count {
            return Err(MediumError::BadChannel { channel, count: self.channel_count });
        }
        self.slot = self.slot.max(slot);
        let id = self.log.len();
        if self.loss_prob > 0.0 && self.rng.gen_bool(self.loss_prob) {
            self.log.push(TxRecord { slot, channel, packet: packet.to_vec(), outcome: Delivery::Lost });
            return Ok(Delivery::Lost);
        }
        let cell = self.grid.entry(slot).or_default().entry(channel).or_default();
        cell.push(id);
        let outcome = if cell.len() == 1 {
            Delivery::Delivered
        } else {
            if cell.len() == 2 {
                self.collision_log.push((slot, channel));
            }
            for &other in cell.iter() {
                if other < id {
                    self.log[other].outcome = Delivery::Collided;
                }
            }
            Delivery::Collided
        };
        self.log.push(TxRecord { slot, channel, packet: packet.to_vec(), outcome });
        Ok(outcome)
    }

    /// Delivered packets on `channels` during `slot`, in channel order.
    pub fn listen<'a, I>(&'a self, channels: I, slot: u64) -> Vec<(u32, &'a [u8])>
    where
        I: IntoIterator<Item = u32>,
    {
        let Some(cells) = self.grid.get(&slot) else {
            return Vec::new();
        };
        let wanted: BTreeSet<u32> = channels.into_iter().collect();
        wanted
            .into_iter()
            .filter_map(|c| match cells.get(&c).map(Vec::as_slice) {
                Some(&[id]) => Some((c, self.log[id].packet.as_slice())),
                _ => None,
            })
            .collect()
    }

    /// Every delivered packet of `slot`, in channel order.
    pub fn delivered(&self, slot: u64) -> impl Iterator<Item = (u32, &[u8])> + '_ {
        self.grid
            .get(&slot)
            .into_iter()
            .flat_map(|cells| cells.iter())
            .filter_map(|(&c, ids)| match ids.as_slice() {
                &[id] => Some((c, self.log[id].packet.as_slice())),
                _ => None,
            })
    }

    pub fn log(&self) -> &[TxRecord] {
        &self.log
    }

    pub fn collision_log(&self) -> &[(u64, u32)] {
        &self.collision_log
    }

    pub fn trace(&self) -> Vec<TraceEvent> {
        self.log
            .iter()
            .map(|r| TraceEvent::new(r.slot, r.channel, r.outcome.as_str(), &r.packet))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversaryMode {
    /// Captures each delivered packet independently with probability `q`.
    IndependentPerPacket { q: f64 },
    /// Listens on `m` fixed channels for the whole session.
    FixedChannelSet { m: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    pub slot: u64,
    pub channel: u32,
    pub packet: Vec<u8>,
}

/// A passive eavesdropper. It reads the medium and never writes to it.
#[derive(Debug, Clone)]
pub struct Adversary {
    mode: AdversaryMode,
    watched: BTreeSet<u32>,
    captured: Vec<Capture>,
}

impl Adversary {
    /// For [`AdversaryMode::FixedChannelSet`] the watched channels are drawn
    /// uniformly from `rng` once, here.
    pub fn new<R: Rng + ?Sized>(
        mode: AdversaryMode,
        channel_count: u32,
        rng: &mut R,
    ) -> Result<Self, MediumError> {
        let watched = match mode {
            AdversaryMode::IndependentPerPacket { q } => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(MediumError::BadProbability(q));
                }
                BTreeSet::new()
            }
            AdversaryMode::FixedChannelSet { m } => {
                if m > channel_count {
                    return Err(MediumError::BadWatchCount { m, count: channel_count });
                }
                index::sample(rng, channel_count as usize, m as usize)
                    .into_iter()
                    .map(|c| c as u32)
                    .collect()
            }
        };
        Ok(Self { mode, watched, captured: Vec::new() })
    }

    pub fn mode(&self) -> AdversaryMode {
        self.mode
    }

    pub fn watched(&self) -> &BTreeSet<u32> {
        &self.watched
    }

    pub fn captured(&self) -> &[Capture] {
        &self.captured
    }

    /// Applies the capture rule to everything delivered in `slot` and returns
    /// how many packets were newly captured.
    pub fn observe<R: Rng + ?Sized>(&mut self, medium: &MediumState, slot: u64, rng: &mut R) -> usize {
        let before = self.captured.len();
        for (channel, packet) in medium.delivered(slot) {
            let hit = match self.mode {
                AdversaryMode::IndependentPerPacket { q } => rng.gen_bool(q),
                AdversaryMode::FixedChannelSet { .. } => self.watched.contains(&channel),
            };
            if hit {
                self.captured.push(Capture { slot, channel, packet: packet.to_vec() });
            }
        }
        self.captured.len() - before
    }

    pub fn trace(&self) -> Vec<TraceEvent> {
        self.captured
            .iter()
            .map(|c| TraceEvent::new(c.slot, c.channel, "captured", &c.packet))
            .collect()
    }
}

pub fn adversary_observe<R: Rng + ?Sized>(
    adv: &mut Adversary,
    medium: &MediumState,
    slot: u64,
    rng: &mut R,
) -> usize {
    adv.observe(medium, slot, rng)
}
