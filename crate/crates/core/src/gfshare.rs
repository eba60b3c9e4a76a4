//! Threshold secret sharing over the prime field GF(257).
//!
//! Every message byte gets its own random polynomial `f` of degree `k - 1`
//! with `f(0) = byte`. Share `x` holds `f(x)` for each byte, so a share is a
//! stream of field elements as long as the message. Any `k` streams with
//! distinct `x` rebuild the message by Lagrange interpolation at zero.
//!
//! Field elements range over `[0, 257)`, which means a share value can be
//! 256 and needs 16 bits on the wire.

use std::fmt;
use std::io::{self, Read, Write};

use rand::Rng;
use thiserror::Error;

/// The field modulus. Smallest prime above every byte value.
pub const MODULUS: u16 = 257;

/// Largest number of shares a byte can be split into (x ranges over 1..=256).
pub const MAX_SHARES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShareError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("bad threshold: need 1 <= k <= n <= {MAX_SHARES}, got k={k} n={n}")]
    BadThreshold { k: usize, n: usize },
    #[error("expected {expected} polynomial coefficients, got {got}")]
    BadCoefficients { expected: usize, got: usize },
    #[error("need at least {needed} shares with distinct x, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("reconstructed value {0} is not a byte; shares are corrupt or inconsistent")]
    NotAByte(u16),
    #[error("cannot share an empty message")]
    EmptyMessage,
    #[error("share streams have different lengths")]
    LengthMismatch,
    #[error("share index x must be nonzero")]
    ZeroIndex,
    #[error("value {0} is outside the field")]
    OutOfField(u16),
}

/// An element of GF(257).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(u16);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    /// Reduces any integer into the field.
    pub fn new(value: u32) -> Self {
        Self((value % MODULUS as u32) as u16)
    }

    /// Accepts only canonical representatives `< 257`.
    pub fn try_from_u16(value: u16) -> Result<Self, ShareError> {
        if value < MODULUS {
            Ok(Self(value))
        } else {
            Err(ShareError::OutOfField(value))
        }
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Uniform draw from the whole field.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.gen_range(0..MODULUS))
    }

    pub fn add(self, rhs: Self) -> Self {
        Self::new(self.0 as u32 + rhs.0 as u32)
    }

    pub fn sub(self, rhs: Self) -> Self {
        Self::new(self.0 as u32 + MODULUS as u32 - rhs.0 as u32)
    }

    pub fn mul(self, rhs: Self) -> Self {
        Self::new(self.0 as u32 * rhs.0 as u32)
    }

    pub fn neg(self) -> Self {
        Self::ZERO.sub(self)
    }

    pub fn pow(self, mut exp: u32) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat: `a^(p-2)`.
    pub fn inverse(self) -> Result<Self, ShareError> {
        if self.is_zero() {
            return Err(ShareError::ZeroInverse);
        }
        Ok(self.pow(MODULUS as u32 - 2))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for FieldElement {
    fn from(b: u8) -> Self {
        Self(b as u16)
    }
}

pub fn field_inverse(a: FieldElement) -> Result<FieldElement, ShareError> {
    a.inverse()
}

/// One evaluation `(x, f(x))` of a sharing polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SharePoint {
    x: FieldElement,
    pub y: FieldElement,
}

impl SharePoint {
    pub fn new(x: FieldElement, y: FieldElement) -> Result<Self, ShareError> {
        if x.is_zero() {
            return Err(ShareError::ZeroIndex);
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> FieldElement {
        self.x
    }
}

fn check_threshold(n: usize, k: usize) -> Result<(), ShareError> {
    if k == 0 || k > n || n > MAX_SHARES {
        return Err(ShareError::BadThreshold { k, n });
    }
    Ok(())
}

/// Horner evaluation of `secret + c1 x + c2 x^2 + ...`.
fn eval_poly(secret: FieldElement, coeffs: &[FieldElement], x: FieldElement) -> FieldElement {
    let mut acc = FieldElement::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc.add(c).mul(x);
    }
    acc.add(secret)
}

/// Splits one byte into `n` points of a degree `k - 1` polynomial whose
/// non-constant coefficients are `coeffs` (lowest degree first).
pub fn share_byte(
    secret: u8,
    n: usize,
    k: usize,
    coeffs: &[FieldElement],
) -> Result<Vec<SharePoint>, ShareError> {
    check_threshold(n, k)?;
    if coeffs.len() != k - 1 {
        return Err(ShareError::BadCoefficients { expected: k - 1, got: coeffs.len() });
    }
    let s = FieldElement::from(secret);
    Ok((1..=n as u32)
        .map(|x| {
            let x = FieldElement::new(x);
            SharePoint { x, y: eval_poly(s, coeffs, x) }
        })
        .collect())
}

/// Lagrange basis weights at zero for the given abscissae:
/// `w_j = prod_{m != j} x_m / (x_m - x_j)`.
fn lagrange_weights_at_zero(xs: &[FieldElement]) -> Result<Vec<FieldElement>, ShareError> {
    xs.iter()
        .enumerate()
        .map(|(j, &xj)| {
            let mut num = FieldElement::ONE;
            let mut den = FieldElement::ONE;
            for (m, &xm) in xs.iter().enumerate() {
                if m != j {
                    num = num.mul(xm);
                    den = den.mul(xm.sub(xj));
                }
            }
            Ok(num.mul(den.inverse()?))
        })
        .collect()
}

/// Picks the first `k` points with pairwise-distinct x.
fn distinct_prefix(points: &[SharePoint], k: usize) -> Result<Vec<SharePoint>, ShareError> {
    let mut chosen: Vec<SharePoint> = Vec::with_capacity(k);
    for p in points {
        if chosen.len() == k {
            break;
        }
        if !chosen.iter().any(|c| c.x == p.x) {
            chosen.push(*p);
        }
    }
    if chosen.len() < k || k == 0 {
        return Err(ShareError::InsufficientShares { needed: k.max(1), got: chosen.len() });
    }
    Ok(chosen)
}

/// Interpolates `f(0)` from `k` points with distinct x.
pub fn reconstruct_byte(points: &[SharePoint], k: usize) -> Result<u8, ShareError> {
    let chosen = distinct_prefix(points, k)?;
    let xs: Vec<_> = chosen.iter().map(|p| p.x).collect();
    let weights = lagrange_weights_at_zero(&xs)?;
    let secret = chosen
        .iter()
        .zip(&weights)
        .fold(FieldElement::ZERO, |acc, (p, w)| acc.add(p.y.mul(*w)));
    u8::try_from(secret.value()).map_err(|_| ShareError::NotAByte(secret.value()))
}

/// All of one participant's share values, one per message byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareStream {
    x: FieldElement,
    values: Vec<FieldElement>,
}

impl ShareStream {
    pub fn new(x: FieldElement, values: Vec<FieldElement>) -> Result<Self, ShareError> {
        if x.is_zero() {
            return Err(ShareError::ZeroIndex);
        }
        Ok(Self { x, values })
    }

    pub fn x(&self) -> FieldElement {
        self.x
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Debug dump layout: x (1 byte), length (u32 BE), then u16 BE values.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        // x ranges over 1..=256; 256 does not fit a byte and is written as 0.
        w.write_all(&[(self.x.value() & 0xff) as u8])?;
        w.write_all(&(self.values.len() as u32).to_be_bytes())?;
        for v in &self.values {
            w.write_all(&v.value().to_be_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + 2 * self.values.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> io::Result<Self> {
        let invalid = |e: ShareError| io::Error::new(io::ErrorKind::InvalidData, e);
        let mut x = [0u8; 1];
        r.read_exact(&mut x)?;
        let x = if x[0] == 0 { FieldElement(256) } else { FieldElement::from(x[0]) };
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let len = u32::from_be_bytes(len) as usize;
        let mut values = Vec::with_capacity(len.min(1 << 16));
        for _ in 0..len {
            let mut v = [0u8; 2];
            r.read_exact(&mut v)?;
            values.push(FieldElement::try_from_u16(u16::from_be_bytes(v)).map_err(invalid)?);
        }
        Ok(Self { x, values })
    }
}

/// Shares `msg` with coefficients pulled from `next_coeff`, `k - 1` per byte.
pub fn share_message_with<F>(
    msg: &[u8],
    n: usize,
    k: usize,
    mut next_coeff: F,
) -> Result<Vec<ShareStream>, ShareError>
where
    F: FnMut() -> FieldElement,
{
    if msg.is_empty() {
        return Err(ShareError::EmptyMessage);
    }
    check_threshold(n, k)?;
    let mut streams: Vec<ShareStream> = (1..=n as u32)
        .map(|x| ShareStream { x: FieldElement::new(x), values: Vec::with_capacity(msg.len()) })
        .collect();
    let mut coeffs = vec![FieldElement::ZERO; k - 1];
    for &byte in msg {
        coeffs.iter_mut().for_each(|c| *c = next_coeff());
        for (stream, point) in streams.iter_mut().zip(share_byte(byte, n, k, &coeffs)?) {
            stream.values.push(point.y);
        }
    }
    Ok(streams)
}

/// Shares `msg` into `n` streams, drawing fresh coefficients from `rng`.
pub fn share_message<R: Rng + ?Sized>(
    msg: &[u8],
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<ShareStream>, ShareError> {
    share_message_with(msg, n, k, || FieldElement::random(rng))
}

/// Rebuilds the message from at least `k` streams with distinct x.
pub fn reconstruct_message(streams: &[ShareStream], k: usize) -> Result<Vec<u8>, ShareError> {
    let len = match streams.first() {
        Some(s) => s.len(),
        None => return Err(ShareError::InsufficientShares { needed: k.max(1), got: 0 }),
    };
    if streams.iter().any(|s| s.len() != len) {
        return Err(ShareError::LengthMismatch);
    }
    let mut chosen: Vec<&ShareStream> = Vec::with_capacity(k);
    for s in streams {
        if chosen.len() == k {
            break;
        }
        if !chosen.iter().any(|c| c.x == s.x) {
            chosen.push(s);
        }
    }
    if k == 0 || chosen.len() < k {
        return Err(ShareError::InsufficientShares { needed: k.max(1), got: chosen.len() });
    }
    let xs: Vec<_> = chosen.iter().map(|s| s.x).collect();
    let weights = lagrange_weights_at_zero(&xs)?;
    (0..len)
        .map(|i| {
            let v = chosen
                .iter()
                .zip(&weights)
                .fold(FieldElement::ZERO, |acc, (s, w)| acc.add(s.values[i].mul(*w)));
            u8::try_from(v.value()).map_err(|_| ShareError::NotAByte(v.value()))
        })
        .collect()
}
