//! Reference implementations used as independent oracles by the
//! integration and acceptance tests. None of these call into the code
//! paths they check.

#![allow(dead_code)]

/// Stage-by-stage 17-bit Fibonacci shift register. `stages[0]` is the
/// least significant bit; the new bit is stage 17 xor stage 14.
pub struct ReferenceLfsr {
    stages: [bool; 17],
}

impl ReferenceLfsr {
    pub fn new(seed: u32) -> Self {
        let mut stages = [false; 17];
        for (i, s) in stages.iter_mut().enumerate() {
            *s = (seed >> i) & 1 == 1;
        }
        Self { stages }
    }

    pub fn next(&mut self) -> u32 {
        let fb = self.stages[16] ^ self.stages[13];
        for i in (1..17).rev() {
            self.stages[i] = self.stages[i - 1];
        }
        self.stages[0] = fb;
        self.stages.iter().enumerate().map(|(i, &b)| (b as u32) << i).sum()
    }
}

/// Channel draw by plain rejection against the reference register.
pub fn reference_schedule(seed: u32, parts: usize, channels: u32) -> (Vec<u32>, u64) {
    let limit = 131_071 / channels * channels;
    let mut lfsr = ReferenceLfsr::new(seed);
    let mut out: Vec<u32> = Vec::new();
    let mut draws = 0u64;
    while out.len() < parts {
        let v = lfsr.next();
        draws += 1;
        if v == 0 || v > limit {
            continue;
        }
        let c = (v - 1) % channels;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    (out, draws)
}

/// Builds packed bytes from a string of '0'/'1', zero-padding to a byte.
pub fn bits_to_bytes(bits: &str) -> Vec<u8> {
    let mut padded: String = bits.to_owned();
    while padded.len() % 8 != 0 {
        padded.push('0');
    }
    padded
        .as_bytes()
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | (b - b'0')))
        .collect()
}

pub fn field_bits(value: u64, width: usize) -> String {
    format!("{value:0width$b}")
}

/// Data packet via the bit-string route.
pub fn data_bits(countdown: u8, device_id: u32, payload: &[u8; 10]) -> Vec<u8> {
    let mut s = String::from("1");
    s += &field_bits(countdown as u64, 8);
    s += &field_bits(device_id as u64, 32);
    for &b in payload {
        s += &field_bits(b as u64, 8);
    }
    assert_eq!(s.len(), 121);
    bits_to_bytes(&s)
}

pub fn sync_bits(node_id: u32, clock: u32) -> Vec<u8> {
    let s = format!("0{}{}", field_bits(node_id as u64, 32), field_bits(clock as u64, 32));
    assert_eq!(s.len(), 65);
    bits_to_bytes(&s)
}

/// Histogram of subset sizes of an `n`-set by enumerating every bitmask.
pub fn subset_size_counts(n: u32) -> Vec<u128> {
    let mut counts = vec![0u128; n as usize + 1];
    for mask in 0u32..(1u32 << n) {
        counts[mask.count_ones() as usize] += 1;
    }
    counts
}

/// All `size`-element subsets of `0..n`, as index lists.
pub fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..(1u32 << n))
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

pub fn parse_hex(text: &str) -> Vec<u8> {
    let clean: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::chars)
        .filter(|c| c.is_ascii_hexdigit())
        .collect();
    (0..clean.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&clean[i..i + 2], 16).unwrap())
        .collect()
}
