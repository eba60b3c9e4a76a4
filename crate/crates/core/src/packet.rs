//! Wire formats for data and SYNC packets.
//!
//! Fields are packed MSB-first in declaration order, multi-byte fields
//! big-endian, and the frame is padded with zero bits to a byte boundary:
//!
//! ```text
//! data: 1 | countdown:8 | device_id:32 | payload:80 | pad:7   = 16 bytes
//! sync: 0 | node_id:32  | clock:32     | pad:7                = 9 bytes
//! ```

use thiserror::Error;

pub const DATA_PACKET_LEN: usize = 16;
pub const SYNC_PACKET_LEN: usize = 9;
pub const PAYLOAD_LEN: usize = 10;
pub const DATA_PACKET_BITS: usize = 1 + 8 + 32 + 80;
pub const SYNC_PACKET_BITS: usize = 1 + 32 + 32;
/// Longest stream the 8-bit countdown can describe.
pub const MAX_STREAM_PACKETS: usize = u8::MAX as usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PacketError {
    #[error("payload must be exactly {PAYLOAD_LEN} bytes, got {0}")]
    BadPayloadLength(usize),
    #[error("countdown must be at least 1")]
    ZeroCountdown,
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("type bit does not match the packet kind")]
    WrongType,
    #[error("padding bits are not zero")]
    DirtyPadding,
    #[error("empty packet")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Data,
    Sync,
}

/// Data frame. `countdown` counts the packets still to come in the stream,
/// this one included, so the first packet carries the stream length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DataPacket {
    countdown: u8,
    pub device_id: u32,
    pub payload: [u8; PAYLOAD_LEN],
}

impl DataPacket {
    pub fn new(countdown: u8, device_id: u32, payload: &[u8]) -> Result<Self, PacketError> {
        if countdown == 0 {
            return Err(PacketError::ZeroCountdown);
        }
        let payload: [u8; PAYLOAD_LEN] =
            payload.try_into().map_err(|_| PacketError::BadPayloadLength(payload.len()))?;
        Ok(Self { countdown, device_id, payload })
    }

    pub fn countdown(&self) -> u8 {
        self.countdown
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyncPacket {
    pub node_id: u32,
    pub clock_count: u32,
}

/// MSB-first bit accumulator over a fixed buffer.
struct BitWriter<const N: usize> {
    buf: [u8; N],
    pos: usize,
}

impl<const N: usize> BitWriter<N> {
    fn new() -> Self {
        Self { buf: [0; N], pos: 0 }
    }

    fn put(&mut self, value: u64, bits: usize) {
        for i in (0..bits).rev() {
            if (value >> i) & 1 == 1 {
                self.buf[self.pos / 8] |= 0x80 >> (self.pos % 8);
            }
            self.pos += 1;
        }
    }

    fn finish(self) -> [u8; N] {
        self.buf
    }
}

struct BitReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, bits: usize) -> u64 {
        let mut v = 0u64;
        for _ in 0..bits {
            let bit = (self.buf[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = v << 1 | bit as u64;
            self.pos += 1;
        }
        v
    }

    fn rest_is_zero(&mut self) -> bool {
        let remaining = self.buf.len() * 8 - self.pos;
        self.take(remaining) == 0
    }
}

/// Raw data-frame layout with no field validation. A zero countdown packs
/// fine here but is rejected by [`decode_data`].
pub fn pack_data_fields(countdown: u8, device_id: u32, payload: &[u8; PAYLOAD_LEN]) -> [u8; DATA_PACKET_LEN] {
    let mut w = BitWriter::<DATA_PACKET_LEN>::new();
    w.put(1, 1);
    w.put(countdown as u64, 8);
    w.put(device_id as u64, 32);
    for &b in payload {
        w.put(b as u64, 8);
    }
    w.finish()
}

pub fn encode_data(p: &DataPacket) -> [u8; DATA_PACKET_LEN] {
    pack_data_fields(p.countdown, p.device_id, &p.payload)
}

pub fn decode_data(raw: &[u8]) -> Result<DataPacket, PacketError> {
    if raw.len() != DATA_PACKET_LEN {
        return Err(PacketError::BadLength { expected: DATA_PACKET_LEN, got: raw.len() });
    }
    let mut r = BitReader::new(raw);
    if r.take(1) != 1 {
        return Err(PacketError::WrongType);
    }
    let countdown = r.take(8) as u8;
    let device_id = r.take(32) as u32;
    let mut payload = [0u8; PAYLOAD_LEN];
    payload.iter_mut().for_each(|b| *b = r.take(8) as u8);
    if !r.rest_is_zero() {
        return Err(PacketError::DirtyPadding);
    }
    if countdown == 0 {
        return Err(PacketError::ZeroCountdown);
    }
    Ok(DataPacket { countdown, device_id, payload })
}

pub fn encode_sync(p: &SyncPacket) -> [u8; SYNC_PACKET_LEN] {
    let mut w = BitWriter::<SYNC_PACKET_LEN>::new();
    w.put(0, 1);
    w.put(p.node_id as u64, 32);
    w.put(p.clock_count as u64, 32);
    w.finish()
}

pub fn decode_sync(raw: &[u8]) -> Result<SyncPacket, PacketError> {
    if raw.len() != SYNC_PACKET_LEN {
        return Err(PacketError::BadLength { expected: SYNC_PACKET_LEN, got: raw.len() });
    }
    let mut r = BitReader::new(raw);
    if r.take(1) != 0 {
        return Err(PacketError::WrongType);
    }
    let node_id = r.take(32) as u32;
    let clock_count = r.take(32) as u32;
    if !r.rest_is_zero() {
        return Err(PacketError::DirtyPadding);
    }
    Ok(SyncPacket { node_id, clock_count })
}

/// Looks at the leading bit only.
pub fn classify(raw: &[u8]) -> Result<PacketKind, PacketError> {
    match raw.first() {
        None => Err(PacketError::Empty),
        Some(b) if b & 0x80 != 0 => Ok(PacketKind::Data),
        Some(_) => Ok(PacketKind::Sync),
    }
}
