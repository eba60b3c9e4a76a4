//! LFSR-driven channel selection over the 2.4–2.5 GHz band.
//!
//! The band is cut into 100 000 contiguous 1 kHz channels starting at
//! exactly 2.4 GHz. Channels are picked by a 17-bit maximal-length
//! Fibonacci LFSR (`x^17 + x^14 + 1`). Outputs above the usable range are
//! rejected rather than folded, so every channel is equally likely.
//!
//! Sender and receiver hold the same seed and run the same procedure, so
//! both ends arrive at the same schedule without exchanging it.

use std::io::Write;

use thiserror::Error;

/// Number of channels in the full band.
pub const CHANNEL_COUNT: u32 = 100_000;
/// Lower band edge in Hz.
pub const BASE_FREQUENCY_HZ: u64 = 2_400_000_000;
/// Channel width in Hz.
pub const CHANNEL_WIDTH_HZ: u64 = 1_000;

/// Register width.
pub const LFSR_BITS: u32 = 17;
/// Cycle length of the maximal-length register.
pub const LFSR_PERIOD: u32 = (1 << LFSR_BITS) - 1;
const LFSR_MASK: u32 = LFSR_PERIOD;

/// Allowed number of parts (and hence channels) in one session.
pub const MIN_PARTS: usize = 5;
pub const MAX_PARTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopError {
    #[error("LFSR seed must be a nonzero 17-bit value, got {0}")]
    ZeroSeed(u32),
    #[error("part count {0} outside [{MIN_PARTS}, {MAX_PARTS}]")]
    BadPartCount(usize),
    #[error("channel {index} out of range (band has {count} channels)")]
    OutOfRange { index: u32, count: u32 },
    #[error("frequency {0} Hz is not a channel frequency")]
    NotAChannel(u64),
    #[error("cannot pick {parts} distinct channels from {count}")]
    TooFewChannels { parts: usize, count: u32 },
}

/// 17-bit Fibonacci LFSR with taps at bits 17 and 14.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LfsrState {
    register: u32,
    seed: u32,
    steps: u64,
}

impl LfsrState {
    /// The seed is masked to 17 bits; a seed whose low 17 bits are zero is
    /// the lock-up state and is rejected.
    pub fn new(seed: u32) -> Result<Self, HopError> {
        let register = seed & LFSR_MASK;
        if register == 0 {
            return Err(HopError::ZeroSeed(seed));
        }
        Ok(Self { register, seed: register, steps: 0 })
    }

    pub fn register(&self) -> u32 {
        self.register
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Clocks the register once and returns its new value in `[1, 2^17 - 1]`.
    pub fn step(&mut self) -> u32 {
        let feedback = ((self.register >> 16) ^ (self.register >> 13)) & 1;
        self.register = ((self.register << 1) | feedback) & LFSR_MASK;
        self.steps += 1;
        self.register
    }
}

impl Iterator for LfsrState {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        Some(self.step())
    }
}

/// Pure form of [`LfsrState::step`].
pub fn lfsr_next(mut state: LfsrState) -> (LfsrState, u32) {
    let v = state.step();
    (state, v)
}

/// A channel number in `[0, 100000)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelIndex(u32);

impl ChannelIndex {
    pub fn new(index: u32) -> Result<Self, HopError> {
        if index < CHANNEL_COUNT {
            Ok(Self(index))
        } else {
            Err(HopError::OutOfRange { index, count: CHANNEL_COUNT })
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn frequency_hz(self) -> u64 {
        BASE_FREQUENCY_HZ + self.0 as u64 * CHANNEL_WIDTH_HZ
    }

    pub fn from_frequency(hz: u64) -> Result<Self, HopError> {
        let off = hz.checked_sub(BASE_FREQUENCY_HZ).ok_or(HopError::NotAChannel(hz))?;
        if off % CHANNEL_WIDTH_HZ != 0 {
            return Err(HopError::NotAChannel(hz));
        }
        u32::try_from(off / CHANNEL_WIDTH_HZ)
            .map_err(|_| HopError::NotAChannel(hz))
            .and_then(Self::new)
            .map_err(|_| HopError::NotAChannel(hz))
    }
}

pub fn channel_to_frequency(index: u32) -> Result<u64, HopError> {
    ChannelIndex::new(index).map(ChannelIndex::frequency_hz)
}

/// Rejection sampling over an arbitrary source of LFSR outputs.
///
/// Values above the largest multiple of `channel_count` that fits in the
/// register range are discarded; accepted values map to `(v - 1) % count`.
/// For the full band this is simply `v - 1` for `v <= 100000`.
/// Returns the index and the number of outputs consumed.
pub fn draw_from<F: FnMut() -> u32>(mut next: F, channel_count: u32) -> (u32, u64) {
    assert!(
        (1..=CHANNEL_COUNT).contains(&channel_count),
        "channel count must be in 1..={CHANNEL_COUNT}"
    );
    let limit = LFSR_PERIOD / channel_count * channel_count;
    let mut draws = 0;
    loop {
        let v = next();
        draws += 1;
        if (1..=limit).contains(&v) {
            return ((v - 1) % channel_count, draws);
        }
    }
}

/// Draws one channel from the full band.
pub fn draw_channel(state: LfsrState) -> (LfsrState, ChannelIndex) {
    let (state, index) = draw_channel_in(state, CHANNEL_COUNT);
    (state, ChannelIndex(index))
}

/// Draws one channel index from the first `channel_count` channels.
pub fn draw_channel_in(mut state: LfsrState, channel_count: u32) -> (LfsrState, u32) {
    let (index, _) = draw_from(|| state.step(), channel_count);
    (state, index)
}

/// The distinct channels a session hops over, in stream order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HopSchedule {
    channels: Vec<ChannelIndex>,
    session_seed: u32,
    draw_count: u64,
    channel_count: u32,
}

impl HopSchedule {
    /// Draws until `parts` distinct channels are collected from the first
    /// `channel_count` channels. Repeated channels are drawn again.
    ///
    /// This is the unchecked form used by reduced-band experiments; it only
    /// requires `parts <= channel_count`.
    pub fn draw(seed: u32, parts: usize, channel_count: u32) -> Result<Self, HopError> {
        if channel_count == 0 || channel_count > CHANNEL_COUNT {
            return Err(HopError::OutOfRange { index: channel_count, count: CHANNEL_COUNT });
        }
        if parts as u64 > channel_count as u64 {
            return Err(HopError::TooFewChannels { parts, count: channel_count });
        }
        let mut state = LfsrState::new(seed)?;
        let mut channels: Vec<ChannelIndex> = Vec::with_capacity(parts);
        while channels.len() < parts {
            let (next, index) = draw_channel_in(state, channel_count);
            state = next;
            let c = ChannelIndex(index);
            if !channels.contains(&c) {
                channels.push(c);
            }
        }
        Ok(Self { channels, session_seed: state.seed(), draw_count: state.steps(), channel_count })
    }

    pub fn channels(&self) -> &[ChannelIndex] {
        &self.channels
    }

    pub fn session_seed(&self) -> u32 {
        self.session_seed
    }

    /// Total LFSR advances consumed, rejections and repeats included.
    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    pub fn channel_count(&self) -> u32 {
        self.channel_count
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn frequencies(&self) -> Vec<u64> {
        self.channels.iter().map(|c| c.frequency_hz()).collect()
    }
}

/// Full-band schedule for a session of `n_parts` in `[5, 10]`.
pub fn build_schedule(seed: u32, n_parts: usize) -> Result<HopSchedule, HopError> {
    build_schedule_in(seed, n_parts, CHANNEL_COUNT)
}

/// Like [`build_schedule`] over a band of `channel_count` channels.
pub fn build_schedule_in(
    seed: u32,
    n_parts: usize,
    channel_count: u32,
) -> Result<HopSchedule, HopError> {
    if !(MIN_PARTS..=MAX_PARTS).contains(&n_parts) {
        return Err(HopError::BadPartCount(n_parts));
    }
    HopSchedule::draw(seed, n_parts, channel_count)
}

/// Writes the `index,hz` lookup table for the first `channel_count` channels.
pub fn write_frequency_table<W: Write>(out: W, channel_count: u32) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "hz"])?;
    for index in 0..channel_count.min(CHANNEL_COUNT) {
        let hz = ChannelIndex(index).frequency_hz();
        w.write_record([index.to_string(), hz.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_seed_rejected() {
        assert_eq!(LfsrState::new(0), Err(HopError::ZeroSeed(0)));
        assert_eq!(LfsrState::new(1 << 17), Err(HopError::ZeroSeed(1 << 17)));
    }

    #[test]
    fn full_period_from_seed_one() {
        let mut s = LfsrState::new(1).unwrap();
        let mut n = 0u32;
        loop {
            n += 1;
            if s.step() == 1 {
                break;
            }
            assert!(n <= LFSR_PERIOD);
        }
        assert_eq!(n, LFSR_PERIOD);
    }

    #[test]
    fn deterministic_replay() {
        let a: Vec<u32> = LfsrState::new(0x1ACE).unwrap().take(1000).collect();
        let b: Vec<u32> = LfsrState::new(0x1ACE).unwrap().take(1000).collect();
        assert_eq!(a, b);
        let (s, v) = lfsr_next(LfsrState::new(1).unwrap());
        assert_eq!((s.register(), s.steps(), v), (2, 1, 2));
    }

    #[test]
    fn rejection_rule() {
        let script = |vals: Vec<u32>| {
            let mut it = vals.into_iter();
            move || it.next().unwrap()
        };
        assert_eq!(draw_from(script(vec![1]), CHANNEL_COUNT), (0, 1));
        assert_eq!(draw_from(script(vec![100_000]), CHANNEL_COUNT), (99_999, 1));
        assert_eq!(draw_from(script(vec![130_000, 5]), CHANNEL_COUNT), (4, 2));
        assert_eq!(draw_from(script(vec![100_001, 1]), CHANNEL_COUNT), (0, 2));
        // 131071 = 8191 * 16 + 15; 131056 is the last accepted value for 16 channels
        assert_eq!(draw_from(script(vec![131_057, 131_056]), 16), (15, 2));
        assert_eq!(draw_from(script(vec![17]), 16), (0, 1));
    }

    #[test]
    fn frequencies() {
        assert_eq!(channel_to_frequency(0), Ok(2_400_000_000));
        assert_eq!(channel_to_frequency(99_999), Ok(2_499_999_000));
        assert_eq!(channel_to_frequency(50_000), Ok(2_450_000_000));
        assert_eq!(
            channel_to_frequency(100_000),
            Err(HopError::OutOfRange { index: 100_000, count: CHANNEL_COUNT })
        );
        assert_eq!(ChannelIndex::from_frequency(2_450_000_000), ChannelIndex::new(50_000));
        assert!(ChannelIndex::from_frequency(2_450_000_500).is_err());
        assert!(ChannelIndex::from_frequency(2_500_000_000).is_err());
        assert!(ChannelIndex::from_frequency(0).is_err());
    }

    #[test]
    fn schedule_basics() {
        let s = build_schedule(7, 5).unwrap();
        assert_eq!(s.len(), 5);
        let mut sorted = s.channels().to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        assert!(s.draw_count() >= 5);
        assert_eq!(s, build_schedule(7, 5).unwrap());
        assert_eq!(build_schedule(7, 4), Err(HopError::BadPartCount(4)));
        assert_eq!(build_schedule(7, 11), Err(HopError::BadPartCount(11)));
        assert_eq!(build_schedule(0, 5), Err(HopError::ZeroSeed(0)));
        assert!(matches!(HopSchedule::draw(3, 17, 16), Err(HopError::TooFewChannels { .. })));
        assert_eq!(HopSchedule::draw(3, 16, 16).unwrap().len(), 16);
    }

    #[test]
    fn frequency_table_csv() {
        let mut out = Vec::new();
        write_frequency_table(&mut out, 3).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "index,hz\n0,2400000000\n1,2400001000\n2,2400002000\n"
        );
    }
}
