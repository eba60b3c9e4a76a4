//! Capture probabilities for an eavesdropper on the hopping band.
//!
//! Without sharing, any captured packet leaks something, so the chance of
//! leaking is the chance of catching at least one packet:
//! `P1 = sum_{i>=1} (1/N)^i = 1/(N-1)`. With `k`-of-`k` sharing nothing
//! leaks until all `k` packets are caught: `P2 = (1/N)^k`.
//!
//! Everything is computed as exact rationals and only turned into floats
//! for display. The published figures for these formulas (2^-18, 2^-160
//! and "5 channels give 128 bits") are carried as [`PublishedClaim`] rows so
//! reports can show how far they sit from the exact values.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gfshare::{self, ShareError};
use crate::hopping::{HopError, HopSchedule, LFSR_PERIOD};
use crate::medium::{Adversary, AdversaryMode, MediumError, MediumState};
use crate::node::ELEMENTS_PER_PACKET;
use crate::packet::{self, DataPacket, PAYLOAD_LEN};

/// Largest `n` for which subset counts are computed exactly in `u128`.
pub const MAX_WAYS_N: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("channel count must be at least 2, got {0}")]
    BadN(u64),
    #[error("k must be at least 1")]
    BadK,
    #[error("need 0 <= k <= n <= {MAX_WAYS_N}, got n={n} k={k}")]
    OutOfDomain { n: u32, k: u32 },
    #[error("probability must lie in (0, 1]")]
    BadProbability,
    #[error("need at least one trial")]
    NoTrials,
    #[error("need 1 <= k <= parts <= channels, got k={k} parts={parts} channels={channels}")]
    BadScenario { k: usize, parts: usize, channels: u32 },
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Hop(#[from] HopError),
    #[error(transparent)]
    Share(#[from] ShareError),
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// `sum_{i>=1} (1/N)^i`, in closed form `1/(N-1)`.
pub fn p1_capture(n: u64) -> Result<BigRational, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::BadN(n));
    }
    Ok(ratio(1, n - 1))
}

/// `(1/N)^k`.
pub fn p2_capture(n: u64, k: u32) -> Result<BigRational, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::BadN(n));
    }
    if k == 0 {
        return Err(AnalysisError::BadK);
    }
    Ok(BigRational::new(BigUint::one().into(), BigUint::from(n).pow(k).into()))
}

fn binomial_u128(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Ways to pick exactly `k` of `n`: `C(n, k)`.
pub fn ways_exact(n: u32, k: u32) -> Result<u128, AnalysisError> {
    if k > n || n > MAX_WAYS_N {
        return Err(AnalysisError::OutOfDomain { n, k });
    }
    Ok(binomial_u128(n, k))
}

/// Ways to pick between 1 and `k` of `n`: `sum_{i=1..k} C(n, i)`.
pub fn ways_at_most(n: u32, k: u32) -> Result<u128, AnalysisError> {
    if k > n || n > MAX_WAYS_N {
        return Err(AnalysisError::OutOfDomain { n, k });
    }
    Ok((1..=k).map(|i| binomial_u128(n, i)).sum())
}

/// `log2` of a positive big integer, accurate to double precision.
fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(f64::NAN, |v| (v as f64).log2());
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

/// `-log2(p)` for `0 < p <= 1`.
pub fn security_bits(p: &BigRational) -> Result<f64, AnalysisError> {
    if *p <= BigRational::zero() || *p > BigRational::one() {
        return Err(AnalysisError::BadProbability);
    }
    let num = p.numer().to_biguint().ok_or(AnalysisError::BadProbability)?;
    let den = p.denom().to_biguint().ok_or(AnalysisError::BadProbability)?;
    Ok(log2_big(&den) - log2_big(&num))
}

/// Float value of an exact probability, for display.
pub fn to_f64(p: &BigRational) -> f64 {
    p.to_f64().unwrap_or(0.0)
}

/// A published security figure, in bits, for a given `(N, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedClaim {
    pub channels: u64,
    pub k: u32,
    pub quantity: Quantity,
    pub claimed_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    P1,
    P2,
}

pub const PUBLISHED_CLAIMS: [PublishedClaim; 3] = [
    PublishedClaim { channels: 100_000, k: 10, quantity: Quantity::P1, claimed_bits: 18.0 },
    PublishedClaim { channels: 100_000, k: 10, quantity: Quantity::P2, claimed_bits: 160.0 },
    PublishedClaim { channels: 100_000, k: 5, quantity: Quantity::P2, claimed_bits: 128.0 },
];

pub fn published_claim(channels: u64, k: u32, quantity: Quantity) -> Option<f64> {
    PUBLISHED_CLAIMS
        .iter()
        .find(|c| c.channels == channels && c.k == k && c.quantity == quantity)
        .map(|c| c.claimed_bits)
}

/// One line of the analysis report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub struct ReportRow {
    #[serde(rename = "N")]
    pub channels: u64,
    pub k: u32,
    #[serde(rename = "P1_exact")]
    pub p1_exact: String,
    #[serde(rename = "P2_exact")]
    pub p2_exact: String,
    #[serde(rename = "bits_P1")]
    pub bits_p1: f64,
    #[serde(rename = "bits_P2")]
    pub bits_p2: f64,
    /// Published bits for P2 at this `(N, k)`, if any.
    #[serde(rename = "paper_claim")]
    pub published_p2: Option<f64>,
    /// `bits_P2 - published_p2`.
    pub delta_bits: Option<f64>,
    #[serde(rename = "paper_claim_P1")]
    pub published_p1: Option<f64>,
    #[serde(rename = "delta_bits_P1")]
    pub delta_bits_p1: Option<f64>,
}

pub fn report_row(channels: u64, k: u32) -> Result<ReportRow, AnalysisError> {
    let p1 = p1_capture(channels)?;
    let p2 = p2_capture(channels, k)?;
    let bits_p1 = security_bits(&p1)?;
    let bits_p2 = security_bits(&p2)?;
    let claim = published_claim(channels, k, Quantity::P2);
    let claim_p1 = published_claim(channels, k, Quantity::P1);
    Ok(ReportRow {
        channels,
        k,
        p1_exact: p1.to_string(),
        p2_exact: p2.to_string(),
        bits_p1,
        bits_p2,
        published_p2: claim,
        delta_bits: claim.map(|c| bits_p2 - c),
        published_p1: claim_p1,
        delta_bits_p1: claim_p1.map(|c| bits_p1 - c),
    })
}

pub fn report(channels: u64, ks: &[u32]) -> Result<Vec<ReportRow>, AnalysisError> {
    ks.iter().map(|&k| report_row(channels, k)).collect()
}

/// A Monte Carlo capture experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub channels: u32,
    /// Shares needed to reconstruct.
    pub k: usize,
    /// Shares sent per trial; the closed forms assume `parts == k`.
    pub parts: usize,
    pub mode: AdversaryMode,
    pub trials: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(channels: u32, k: usize, mode: AdversaryMode, trials: u64, seed: u64) -> Self {
        Self { channels, k, parts: k, mode, trials, seed }
    }
}

/// Empirical capture tallies next to their predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStats {
    pub trials: u64,
    /// Trials where at least one share packet was captured.
    pub captures_without_sharing: u64,
    /// Trials where at least `k` share packets were captured.
    pub captures_with_sharing: u64,
    /// Predicted rate of the first event under the scenario's adversary.
    pub analytic_p1: BigRational,
    /// Predicted rate of the second event.
    pub analytic_p2: BigRational,
    /// `P1` and `P2` closed forms for the same `N` and `k`.
    pub formula_p1: BigRational,
    pub formula_p2: BigRational,
}

impl CaptureStats {
    pub fn rate_without_sharing(&self) -> f64 {
        self.captures_without_sharing as f64 / self.trials as f64
    }

    pub fn rate_with_sharing(&self) -> f64 {
        self.captures_with_sharing as f64 / self.trials as f64
    }

    pub fn security_bits(&self) -> (Option<f64>, Option<f64>) {
        (security_bits(&self.analytic_p1).ok(), security_bits(&self.analytic_p2).ok())
    }
}

fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn rational_from_f64(q: f64) -> BigRational {
    BigRational::from_float(q).unwrap_or_else(BigRational::zero)
}

/// Predicted `(P[>=1 captured], P[>=k captured])` for `parts` packets sent
/// on distinct channels.
pub fn predicted_rates(
    mode: AdversaryMode,
    channels: u32,
    parts: usize,
    k: usize,
) -> (BigRational, BigRational) {
    let one = BigRational::one();
    match mode {
        AdversaryMode::IndependentPerPacket { q } => {
            let q = rational_from_f64(q);
            let miss = &one - &q;
            let pow = |x: &BigRational, e: usize| num_traits::pow(x.clone(), e);
            let at_least_one = &one - pow(&miss, parts);
            let at_least_k = (k..=parts)
                .map(|j| {
                    BigRational::from_integer(binomial_big(parts as u64, j as u64).into())
                        * pow(&q, j)
                        * pow(&miss, parts - j)
                })
                .fold(BigRational::zero(), |a, b| a + b);
            (at_least_one, at_least_k)
        }
        AdversaryMode::FixedChannelSet { m } => {
            // hypergeometric: parts distinct channels among `channels`, m watched
            let (n, m, p) = (channels as u64, m as u64, parts as u64);
            let total = BigRational::from_integer(binomial_big(n, p).into());
            let none = BigRational::from_integer(binomial_big(n - m, p).into()) / &total;
            let at_least_k = (k as u64..=p)
                .map(|j| {
                    BigRational::from_integer((binomial_big(m, j) * binomial_big(n - m, p - j)).into())
                        / &total
                })
                .fold(BigRational::zero(), |a, b| a + b);
            (one - none, at_least_k)
        }
    }
}

/// Number of distinct share packets the adversary caught in one trial.
fn run_trial(sc: &Scenario, trial: u64) -> Result<usize, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(trial);
    let hop_seed = rng.gen_range(1..=LFSR_PERIOD);
    let schedule = HopSchedule::draw(hop_seed, sc.parts, sc.channels)?;
    let block: [u8; ELEMENTS_PER_PACKET] = rng.gen();
    let streams = gfshare::share_message(&block, sc.parts, sc.k, &mut rng)?;
    let mut medium = MediumState::lossless(sc.channels)?;
    for (channel, stream) in schedule.channels().iter().zip(&streams) {
        let mut payload = [0u8; PAYLOAD_LEN];
        for (dst, v) in payload.chunks_exact_mut(2).zip(stream.values()) {
            dst.copy_from_slice(&v.value().to_be_bytes());
        }
        let pkt = DataPacket::new(1, 0, &payload).expect("payload is exactly one packet");
        medium.transmit(channel.get(), &packet::encode_data(&pkt), 0)?;
    }
    let mut adversary = Adversary::new(sc.mode, sc.channels, &mut rng)?;
    adversary.observe(&medium, 0, &mut rng);
    Ok(adversary.captured().len())
}

/// Runs `trials` independent transmissions and tallies both capture events.
///
/// Each trial shares a random 5-byte block (one packet per share) over a
/// fresh LFSR schedule on a lossless medium of `channels` channels, then
/// lets the adversary observe the slot. Trial `t` uses ChaCha stream `t` of
/// the master seed, so the result does not depend on thread scheduling.
pub fn monte_carlo(sc: &Scenario) -> Result<CaptureStats, AnalysisError> {
    if sc.trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    if sc.k == 0 || sc.k > sc.parts || sc.parts as u64 > sc.channels as u64 || sc.channels < 2 {
        return Err(AnalysisError::BadScenario { k: sc.k, parts: sc.parts, channels: sc.channels });
    }
    // construction errors surface here rather than inside the parallel loop
    Adversary::new(sc.mode, sc.channels, &mut ChaCha8Rng::seed_from_u64(0))?;

    let (without, with) = (0..sc.trials)
        .into_par_iter()
        .map(|t| run_trial(sc, t).map(|c| ((c >= 1) as u64, (c >= sc.k) as u64)))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let (analytic_p1, analytic_p2) = predicted_rates(sc.mode, sc.channels, sc.parts, sc.k);
    Ok(CaptureStats {
        trials: sc.trials,
        captures_without_sharing: without,
        captures_with_sharing: with,
        analytic_p1,
        analytic_p2,
        formula_p1: p1_capture(sc.channels as u64)?,
        formula_p2: p2_capture(sc.channels as u64, sc.k as u32)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_examples() {
        assert_eq!(p1_capture(100_000).unwrap(), ratio(1, 99_999));
        assert_eq!(p1_capture(2).unwrap(), BigRational::one());
        assert_eq!(p1_capture(11).unwrap(), ratio(1, 10));
        assert_eq!(p1_capture(1), Err(AnalysisError::BadN(1)));
        let bits = security_bits(&p1_capture(100_000).unwrap()).unwrap();
        assert!((bits - 16.6096).abs() < 1e-3, "{bits}");
    }

    #[test]
    fn p1_matches_partial_sums() {
        // S_m = sum_{i=1..m} (1/N)^i approaches 1/(N-1) from below
        for n in [2u64, 3, 11, 1000] {
            let inv = ratio(1, n);
            let mut term = BigRational::one();
            let mut sum = BigRational::zero();
            for _ in 0..40 {
                term *= &inv;
                sum += &term;
            }
            let limit = p1_capture(n).unwrap();
            assert!(sum <= limit);
            assert!(to_f64(&(&limit - &sum)) < 1e-12);
        }
    }

    #[test]
    fn p2_examples() {
        assert_eq!(p2_capture(100_000, 1).unwrap(), ratio(1, 100_000));
        let p = p2_capture(100_000, 10).unwrap();
        assert_eq!(p.denom().to_string(), format!("1{}", "0".repeat(50)));
        assert!((security_bits(&p).unwrap() - 166.0964).abs() < 1e-3);
        let p5 = p2_capture(100_000, 5).unwrap();
        assert!((security_bits(&p5).unwrap() - 83.048).abs() < 1e-3);
        assert_eq!(p2_capture(100_000, 0), Err(AnalysisError::BadK));
    }

    #[test]
    fn monotone_and_ordered() {
        for n in [2u64, 16, 100, 100_000] {
            for k in 1..12 {
                assert!(p2_capture(n, k + 1).unwrap() < p2_capture(n, k).unwrap());
                assert!(p2_capture(n + 1, k).unwrap() < p2_capture(n, k).unwrap());
                if k >= 2 {
                    assert!(p1_capture(n).unwrap() > p2_capture(n, k).unwrap());
                }
            }
        }
    }

    #[test]
    fn ways_examples() {
        assert_eq!(ways_exact(5, 2), Ok(10));
        assert_eq!(ways_at_most(5, 2), Ok(15));
        assert_eq!(ways_at_most(10, 10), Ok(1023));
        assert_eq!(ways_exact(7, 1), Ok(7));
        assert_eq!(ways_at_most(7, 1), Ok(7));
        assert_eq!(ways_exact(64, 32), Ok(1_832_624_140_942_590_534));
        assert_eq!(ways_at_most(64, 64), Ok(u64::MAX as u128));
        assert!(ways_exact(65, 1).is_err());
        assert!(ways_exact(3, 4).is_err());
    }

    #[test]
    fn security_bits_examples() {
        assert_eq!(security_bits(&BigRational::one()), Ok(0.0));
        let tiny = BigRational::new(1.into(), num_bigint::BigInt::from(2).pow(128));
        assert_eq!(security_bits(&tiny), Ok(128.0));
        assert!(security_bits(&BigRational::zero()).is_err());
        assert!(security_bits(&ratio(3, 2)).is_err());
    }

    #[test]
    fn report_rows_carry_claims() {
        let row = report_row(100_000, 10).unwrap();
        assert_eq!(row.published_p2, Some(160.0));
        assert!((row.delta_bits.unwrap() - 6.096).abs() < 1e-3);
        assert_eq!(row.published_p1, Some(18.0));
        assert!((row.delta_bits_p1.unwrap() + 1.390).abs() < 1e-3);
        let row = report_row(100_000, 5).unwrap();
        assert_eq!(row.published_p2, Some(128.0));
        assert_eq!(report_row(16, 2).unwrap().published_p2, None);
    }

    #[test]
    fn predictions_for_simple_modes() {
        let (a, b) = predicted_rates(AdversaryMode::IndependentPerPacket { q: 0.25 }, 16, 2, 2);
        assert_eq!(a, ratio(7, 16));
        assert_eq!(b, ratio(1, 16));
        // 2 of 16 channels, 4 watched: P(none) = C(12,2)/C(16,2) = 66/120
        let (a, b) = predicted_rates(AdversaryMode::FixedChannelSet { m: 4 }, 16, 2, 2);
        assert_eq!(a, ratio(54, 120));
        assert_eq!(b, ratio(6, 120));
    }

    #[test]
    fn zero_capture_probability() {
        let sc = Scenario::new(16, 2, AdversaryMode::IndependentPerPacket { q: 0.0 }, 2_000, 1);
        let st = monte_carlo(&sc).unwrap();
        assert_eq!((st.captures_without_sharing, st.captures_with_sharing), (0, 0));
    }

    #[test]
    fn fixed_set_matches_hypergeometric() {
        let sc = Scenario::new(16, 2, AdversaryMode::FixedChannelSet { m: 4 }, 20_000, 8);
        let st = monte_carlo(&sc).unwrap();
        assert!((st.rate_without_sharing() - 0.45).abs() < 0.02);
        assert!((st.rate_with_sharing() - 0.05).abs() < 0.01);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let sc = Scenario::new(16, 2, AdversaryMode::IndependentPerPacket { q: 0.25 }, 3_000, 77);
        assert_eq!(monte_carlo(&sc).unwrap(), monte_carlo(&sc).unwrap());
        let bad = Scenario { trials: 0, ..sc.clone() };
        assert_eq!(monte_carlo(&bad), Err(AnalysisError::NoTrials));
        let bad = Scenario { k: 3, ..sc };
        assert!(matches!(monte_carlo(&bad), Err(AnalysisError::BadScenario { .. })));
    }
}
