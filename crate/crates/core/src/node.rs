//! Transceiver logic: the sending master, its transmitting slaves, the
//! receiver and the SYNC round.
//!
//! Sending runs `plain -> hex -> ROT13 -> length frame -> n share streams`,
//! cuts each stream into 10-byte payloads (five 16-bit share elements) and
//! binds stream `j` to the `j`-th channel of the hop schedule. Receiving
//! replays the schedule from the shared seed, listens on those channels and
//! runs the pipeline backwards.
//!
//! Packets carry no stream id. A receiver knows which share a packet
//! belongs to only from the channel it arrived on.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{self, CodecError, RotText};
use crate::gfshare::{self, FieldElement, ShareError, ShareStream};
use crate::hopping::{self, ChannelIndex, HopError, HopSchedule, LfsrState, CHANNEL_COUNT};
use crate::medium::{Delivery, MediumError, MediumState};
use crate::packet::{self, DataPacket, PacketError, SyncPacket, MAX_STREAM_PACKETS, PAYLOAD_LEN};

/// Share elements per packet: 80 payload bits / 16 bits each.
pub const ELEMENTS_PER_PACKET: usize = PAYLOAD_LEN / 2;
/// Bytes of the big-endian length prefix on the scrambled text.
pub const FRAME_HEADER_LEN: usize = 4;
pub const DEFAULT_T_MAX: u64 = 1_000_000;
/// Channel the SYNC flood is carried on.
pub const SYNC_CHANNEL: u32 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NodeError {
    #[error("cannot send an empty message")]
    EmptyMessage,
    #[error("stream needs {0} packets; the countdown field allows at most {MAX_STREAM_PACKETS}")]
    StreamTooLong(usize),
    #[error("no session prepared; the ready flag is clear")]
    NotReady,
    #[error("medium reported a collision on channel {channel} in slot {slot}")]
    MediumRejected { slot: u64, channel: u32 },
    #[error("reading pipes are not open")]
    PipesNotOpen,
    #[error("need {needed} complete share streams, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("length frame is inconsistent: {0}")]
    FrameCorrupt(String),
    #[error("local clock {0} does not fit the 32-bit SYNC field")]
    ClockOverflow(u64),
    #[error("nodes {ids:?} did not converge on the maximum clock")]
    UnsyncedNodes { ids: Vec<u32>, outcomes: Vec<SyncOutcome> },
    #[error(transparent)]
    Share(#[from] ShareError),
    #[error(transparent)]
    Hop(#[from] HopError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Medium(#[from] MediumError),
}

/// Per-node provisioning. Sender and receiver of a session must agree on
/// `hop_seed`, `n_parts`, `k` and `channel_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeConfig {
    pub device_id: u32,
    pub hop_seed: u32,
    pub share_seed: u64,
    pub k: usize,
    pub n_parts: usize,
    pub channel_count: u32,
    pub t_max: u64,
}

impl NodeConfig {
    pub fn new(device_id: u32, hop_seed: u32, share_seed: u64, n_parts: usize, k: usize) -> Self {
        Self {
            device_id,
            hop_seed,
            share_seed,
            k,
            n_parts,
            channel_count: CHANNEL_COUNT,
            t_max: DEFAULT_T_MAX,
        }
    }
}

/// One slave's queue: a stream's packets and the channel they ride on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlaveQueue {
    pub channel: ChannelIndex,
    pub frequency_hz: u64,
    pub packets: Vec<[u8; packet::DATA_PACKET_LEN]>,
    sent: usize,
    success: bool,
}

impl SlaveQueue {
    pub fn remaining(&self) -> usize {
        self.packets.len() - self.sent
    }

    /// Set once the whole stream has been handed to the medium.
    pub fn success(&self) -> bool {
        self.success
    }
}

/// Everything the master produced for one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPlan {
    pub schedule: HopSchedule,
    pub streams: Vec<ShareStream>,
    pub packets_per_stream: usize,
    pub packets: Vec<Vec<DataPacket>>,
}

/// Packets gathered from each reading pipe, in schedule order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipeData {
    pub pipes: Vec<(ChannelIndex, Vec<DataPacket>)>,
}

impl PipeData {
    /// Forgets everything received on pipe `index`.
    pub fn drop_pipe(&mut self, index: usize) {
        if let Some((_, packets)) = self.pipes.get_mut(index) {
            packets.clear();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncOutcome {
    pub node_id: u32,
    pub adopted_clock: u64,
    pub source_device: u32,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub device_id: u32,
    pub local_clock: u64,
    lfsr: LfsrState,
    share_rng_seed: u64,
    k: usize,
    n_parts: usize,
    channel_count: u32,
    t_max: u64,
    master_buffer: Vec<ShareStream>,
    outgoing_buffer: Vec<SlaveQueue>,
    ready_flag: bool,
    reading_pipes: Vec<ChannelIndex>,
    inbox: PipeData,
}

impl NodeState {
    pub fn new(config: NodeConfig) -> Result<Self, NodeError> {
        let lfsr = LfsrState::new(config.hop_seed)?;
        if !(hopping::MIN_PARTS..=hopping::MAX_PARTS).contains(&config.n_parts) {
            return Err(HopError::BadPartCount(config.n_parts).into());
        }
        if config.k == 0 || config.k > config.n_parts {
            return Err(ShareError::BadThreshold { k: config.k, n: config.n_parts }.into());
        }
        if config.channel_count == 0 || config.channel_count > CHANNEL_COUNT {
            return Err(MediumError::BadChannelCount(config.channel_count).into());
        }
        Ok(Self {
            device_id: config.device_id,
            local_clock: 0,
            lfsr,
            share_rng_seed: config.share_seed,
            k: config.k,
            n_parts: config.n_parts,
            channel_count: config.channel_count,
            t_max: config.t_max,
            master_buffer: Vec::new(),
            outgoing_buffer: Vec::new(),
            ready_flag: false,
            reading_pipes: Vec::new(),
            inbox: PipeData::default(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_parts(&self) -> usize {
        self.n_parts
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    pub fn ready(&self) -> bool {
        self.ready_flag
    }

    pub fn master_buffer(&self) -> &[ShareStream] {
        &self.master_buffer
    }

    pub fn outgoing(&self) -> &[SlaveQueue] {
        &self.outgoing_buffer
    }

    pub fn reading_pipes(&self) -> &[ChannelIndex] {
        &self.reading_pipes
    }

    pub fn inbox(&self) -> &PipeData {
        &self.inbox
    }

    fn schedule(&self) -> Result<HopSchedule, HopError> {
        hopping::build_schedule_in(self.lfsr.seed(), self.n_parts, self.channel_count)
    }

    /// Runs the master pipeline for `plain` and loads the slaves.
    pub fn master_prepare(&mut self, plain: &[u8]) -> Result<SessionPlan, NodeError> {
        let plan = prepare_session(
            plain,
            self.device_id,
            self.n_parts,
            self.k,
            self.schedule()?,
            &mut ChaCha8Rng::seed_from_u64(self.share_rng_seed),
        )?;
        self.master_buffer = plan.streams.clone();
        self.outgoing_buffer = plan
            .schedule
            .channels()
            .iter()
            .zip(&plan.packets)
            .map(|(&channel, packets)| SlaveQueue {
                channel,
                frequency_hz: channel.frequency_hz(),
                packets: packets.iter().map(packet::encode_data).collect(),
                sent: 0,
                success: false,
            })
            .collect();
        self.ready_flag = true;
        Ok(plan)
    }

    /// Every slave with packets left puts its next one on its channel.
    pub fn slave_transmit(&mut self, medium: &mut MediumState, slot: u64) -> Result<Vec<Delivery>, NodeError> {
        if !self.ready_flag {
            return Err(NodeError::NotReady);
        }
        let mut outcomes = Vec::new();
        let mut rejected = None;
        for q in self.outgoing_buffer.iter_mut().filter(|q| q.remaining() > 0) {
            let outcome = medium.transmit(q.channel.get(), &q.packets[q.sent], slot)?;
            q.sent += 1;
            q.success = q.remaining() == 0;
            if outcome == Delivery::Collided && rejected.is_none() {
                rejected = Some(q.channel.get());
            }
            outcomes.push(outcome);
        }
        if self.outgoing_buffer.iter().all(|q| q.success) {
            self.ready_flag = false;
        }
        match rejected {
            Some(channel) => Err(NodeError::MediumRejected { slot, channel }),
            None => Ok(outcomes),
        }
    }

    /// True once every slave has drained its queue.
    pub fn all_sent(&self) -> bool {
        !self.outgoing_buffer.is_empty() && self.outgoing_buffer.iter().all(|q| q.success)
    }

    /// Replays the hop schedule and opens one pipe per channel. Returns the
    /// pipe frequencies.
    pub fn receiver_open(&mut self) -> Result<BTreeSet<u64>, NodeError> {
        let schedule = self.schedule()?;
        self.reading_pipes = schedule.channels().to_vec();
        self.inbox = PipeData {
            pipes: self.reading_pipes.iter().map(|&c| (c, Vec::new())).collect(),
        };
        Ok(schedule.frequencies().into_iter().collect())
    }

    /// Reads the open pipes for `slot`. Frames that do not decode as data
    /// packets are skipped. Returns the number of packets taken in.
    pub fn receiver_listen(&mut self, medium: &MediumState, slot: u64) -> Result<usize, NodeError> {
        if self.reading_pipes.is_empty() {
            return Err(NodeError::PipesNotOpen);
        }
        let mut taken = 0;
        for (channel, raw) in medium.listen(self.reading_pipes.iter().map(|c| c.get()), slot) {
            let Ok(p) = packet::decode_data(raw) else { continue };
            if let Some((_, buf)) = self.inbox.pipes.iter_mut().find(|(c, _)| c.get() == channel) {
                buf.push(p);
                taken += 1;
            }
        }
        Ok(taken)
    }

    /// Assembles whatever the pipes have collected so far.
    pub fn receiver_finish(&self) -> Result<Vec<u8>, NodeError> {
        receiver_assemble(&self.inbox, self.k)
    }
}

/// The pure master pipeline behind [`NodeState::master_prepare`].
pub fn prepare_session<R: rand::Rng + ?Sized>(
    plain: &[u8],
    device_id: u32,
    n_parts: usize,
    k: usize,
    schedule: HopSchedule,
    share_rng: &mut R,
) -> Result<SessionPlan, NodeError> {
    if plain.is_empty() {
        return Err(NodeError::EmptyMessage);
    }
    let framed = frame(plain)?;
    let packets_per_stream = framed.len().div_ceil(ELEMENTS_PER_PACKET);
    if packets_per_stream > MAX_STREAM_PACKETS {
        return Err(NodeError::StreamTooLong(packets_per_stream));
    }
    let streams = gfshare::share_message(&framed, n_parts, k, share_rng)?;
    let packets = streams
        .iter()
        .map(|s| packetize(s, device_id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SessionPlan { schedule, streams, packets_per_stream, packets })
}

/// `u32 BE length || ROT13(hex(plain))`.
pub fn frame(plain: &[u8]) -> Result<Vec<u8>, NodeError> {
    let rot = RotText::from_digest(&codec::to_hex_digest(plain));
    let len = u32::try_from(rot.as_bytes().len())
        .map_err(|_| NodeError::StreamTooLong(usize::MAX))?;
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + rot.as_bytes().len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(rot.as_bytes());
    Ok(out)
}

/// Inverse of [`frame`]. Bytes past the declared length must be the zero
/// fill of the last packet.
pub fn unframe(framed: &[u8]) -> Result<Vec<u8>, NodeError> {
    let header: [u8; FRAME_HEADER_LEN] = framed
        .get(..FRAME_HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| NodeError::FrameCorrupt("shorter than the length header".into()))?;
    let len = u32::from_be_bytes(header) as usize;
    let body = framed
        .get(FRAME_HEADER_LEN..FRAME_HEADER_LEN + len)
        .ok_or_else(|| NodeError::FrameCorrupt(format!("declared length {len} exceeds data")))?;
    let tail = &framed[FRAME_HEADER_LEN + len..];
    if tail.len() >= ELEMENTS_PER_PACKET || tail.iter().any(|&b| b != 0) {
        return Err(NodeError::FrameCorrupt("unexpected data after the declared length".into()));
    }
    let text = std::str::from_utf8(body)
        .map_err(|_| NodeError::FrameCorrupt("scrambled text is not ASCII".into()))?;
    Ok(codec::from_hex_digest(&RotText::parse(text)?.to_digest()))
}

fn packetize(stream: &ShareStream, device_id: u32) -> Result<Vec<DataPacket>, NodeError> {
    let chunks: Vec<_> = stream.values().chunks(ELEMENTS_PER_PACKET).collect();
    let total = chunks.len();
    chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| {
            let mut payload = [0u8; PAYLOAD_LEN];
            for (slot, v) in payload.chunks_exact_mut(2).zip(chunk) {
                slot.copy_from_slice(&v.value().to_be_bytes());
            }
            Ok(DataPacket::new((total - i) as u8, device_id, &payload)?)
        })
        .collect()
}

/// Orders one pipe's packets and checks the countdown runs `m, m-1, .., 1`
/// exactly once each. Returns `None` for a gap, duplicate or stray value.
fn complete_stream(packets: &[DataPacket]) -> Option<Vec<DataPacket>> {
    let mut sorted = packets.to_vec();
    sorted.sort_by(|a, b| b.countdown().cmp(&a.countdown()));
    sorted.dedup();
    let m = sorted.first()?.countdown() as usize;
    let in_order = sorted.iter().enumerate().all(|(i, p)| p.countdown() as usize == m - i);
    (in_order && sorted.len() == m).then_some(sorted)
}

fn depacketize(x: FieldElement, packets: &[DataPacket]) -> Option<ShareStream> {
    let values = packets
        .iter()
        .flat_map(|p| p.payload.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])))
        .map(FieldElement::try_from_u16)
        .collect::<Result<Vec<_>, _>>()
        .ok()?;
    ShareStream::new(x, values).ok()
}

/// Receive pipeline from collected pipe data to plain bytes.
///
/// Pipe `j` (schedule order) carries share `x = j + 1`. Pipes whose packets
/// do not form a complete countdown run are ignored. A pipe that lost its
/// leading packets still looks complete but shorter, so only the longest
/// runs are used.
pub fn receiver_assemble(pipes: &PipeData, k: usize) -> Result<Vec<u8>, NodeError> {
    let mut streams: Vec<ShareStream> = pipes
        .pipes
        .iter()
        .enumerate()
        .filter_map(|(j, (_, packets))| {
            let ordered = complete_stream(packets)?;
            depacketize(FieldElement::new(j as u32 + 1), &ordered)
        })
        .collect();
    let longest = streams.iter().map(ShareStream::len).max().unwrap_or(0);
    streams.retain(|s| s.len() == longest);
    if streams.len() < k {
        return Err(NodeError::InsufficientShares { needed: k, got: streams.len() });
    }
    let framed = gfshare::reconstruct_message(&streams, k)?;
    unframe(&framed)
}

/// One idealized SYNC round.
///
/// Every node whose clock reached its `T_max` floods a SYNC packet, one node
/// per slot starting at `start_slot` on [`SYNC_CHANNEL`]. Every node then
/// adopts the largest clock it heard, its own included, and names the
/// device whose packet set it (itself on a tie with its own clock, else the
/// earliest sender). Clocks never move backwards.
///
/// Over a lossy medium some nodes may miss the maximum; they are reported
/// through [`NodeError::UnsyncedNodes`] after all clocks are updated.
pub fn sync_round(
    nodes: &mut [NodeState],
    medium: &mut MediumState,
    start_slot: u64,
) -> Result<Vec<SyncOutcome>, NodeError> {
    if let Some(n) = nodes.iter().find(|n| n.local_clock > u32::MAX as u64) {
        return Err(NodeError::ClockOverflow(n.local_clock));
    }
    let flooding: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].local_clock >= nodes[i].t_max).collect();
    // heard[i] = SYNC packets node i decoded, in arrival order
    let mut heard: Vec<Vec<SyncPacket>> = vec![Vec::new(); nodes.len()];
    for (offset, &sender) in flooding.iter().enumerate() {
        let slot = start_slot + offset as u64;
        let pkt = SyncPacket { node_id: nodes[sender].device_id, clock_count: nodes[sender].local_clock as u32 };
        medium.transmit(SYNC_CHANNEL, &packet::encode_sync(&pkt), slot)?;
        for (receiver, inbox) in heard.iter_mut().enumerate() {
            if receiver == sender {
                continue;
            }
            for (_, raw) in medium.listen([SYNC_CHANNEL], slot) {
                if let Ok(p) = packet::decode_sync(raw) {
                    inbox.push(p);
                }
            }
        }
    }

    let outcomes: Vec<SyncOutcome> = nodes
        .iter_mut()
        .zip(&heard)
        .map(|(node, inbox)| {
            let mut best = SyncOutcome {
                node_id: node.device_id,
                adopted_clock: node.local_clock,
                source_device: node.device_id,
            };
            for p in inbox {
                if p.clock_count as u64 > best.adopted_clock {
                    best.adopted_clock = p.clock_count as u64;
                    best.source_device = p.node_id;
                }
            }
            node.local_clock = best.adopted_clock;
            best
        })
        .collect();

    let top = outcomes.iter().map(|o| o.adopted_clock).max().unwrap_or(0);
    let ids: Vec<u32> = outcomes.iter().filter(|o| o.adopted_clock != top).map(|o| o.node_id).collect();
    if ids.is_empty() {
        Ok(outcomes)
    } else {
        Err(NodeError::UnsyncedNodes { ids, outcomes })
    }
}
