//! Hex digest and ROT13 scrambling applied before sharing.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("hex digest has odd length {0}")]
    OddLength(usize),
    #[error("non-hex character {ch:?} at offset {offset}")]
    NonHexChar { ch: char, offset: usize },
}

const HEX: &[u8; 16] = b"0123456789abcdef";

/// Lowercase hexadecimal rendering of a byte string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct HexDigest(String);

impl HexDigest {
    pub fn parse(text: &str) -> Result<Self, CodecError> {
        if text.len() % 2 != 0 {
            return Err(CodecError::OddLength(text.len()));
        }
        if let Some((offset, ch)) =
            text.char_indices().find(|(_, c)| !matches!(c, '0'..='9' | 'a'..='f'))
        {
            return Err(CodecError::NonHexChar { ch, offset });
        }
        Ok(Self(text.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for HexDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A ROT13-scrambled hex digest: digits plus the letters `n..=s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RotText(String);

impl RotText {
    pub fn from_digest(d: &HexDigest) -> Self {
        Self(rot13(d.as_str()))
    }

    /// Validates that unscrambling yields a hex digest.
    pub fn parse(text: &str) -> Result<Self, CodecError> {
        HexDigest::parse(&rot13(text))?;
        Ok(Self(text.to_owned()))
    }

    pub fn to_digest(&self) -> HexDigest {
        HexDigest(rot13(&self.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

pub fn to_hex_digest(plain: &[u8]) -> HexDigest {
    let mut s = String::with_capacity(plain.len() * 2);
    for &b in plain {
        s.push(HEX[(b >> 4) as usize] as char);
        s.push(HEX[(b & 0x0f) as usize] as char);
    }
    HexDigest(s)
}

fn nibble(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        _ => None,
    }
}

pub fn from_hex_digest(d: &HexDigest) -> Vec<u8> {
    decode_hex(d.as_str()).expect("HexDigest is validated on construction")
}

/// Decodes lowercase hex text, reporting the first bad symbol.
pub fn decode_hex(text: &str) -> Result<Vec<u8>, CodecError> {
    let bytes = text.as_bytes();
    if bytes.len() % 2 != 0 {
        return Err(CodecError::OddLength(bytes.len()));
    }
    let bad = |offset: usize| CodecError::NonHexChar {
        ch: text[offset..].chars().next().unwrap_or('\u{fffd}'),
        offset,
    };
    bytes
        .chunks_exact(2)
        .enumerate()
        .map(|(i, pair)| {
            let hi = nibble(pair[0]).ok_or_else(|| bad(2 * i))?;
            let lo = nibble(pair[1]).ok_or_else(|| bad(2 * i + 1))?;
            Ok(hi << 4 | lo)
        })
        .collect()
}

fn rot13_char(c: char) -> char {
    match c {
        'a'..='z' => (((c as u8 - b'a') + 13) % 26 + b'a') as char,
        'A'..='Z' => (((c as u8 - b'A') + 13) % 26 + b'A') as char,
        _ => c,
    }
}

/// Rotates ASCII letters by 13 places, preserving case. Everything else
/// passes through untouched.
pub fn rot13(s: &str) -> String {
    s.chars().map(rot13_char).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_examples() {
        assert_eq!(to_hex_digest(b"AB").as_str(), "4142");
        assert_eq!(to_hex_digest(&[]).as_str(), "");
        assert_eq!(to_hex_digest(&[255, 0]).as_str(), "ff00");
        assert_eq!(decode_hex("4142").unwrap(), b"AB");
        assert_eq!(decode_hex("").unwrap(), b"");
        assert_eq!(decode_hex("4g"), Err(CodecError::NonHexChar { ch: 'g', offset: 1 }));
        assert_eq!(decode_hex("414"), Err(CodecError::OddLength(3)));
        assert_eq!(HexDigest::parse("4G"), Err(CodecError::NonHexChar { ch: 'G', offset: 1 }));
    }

    #[test]
    fn rot13_examples() {
        // often misquoted as "URYB"
        assert_eq!(rot13("HELLO"), "URYYB");
        assert_eq!(rot13("4f2a"), "4s2n");
        assert_eq!(rot13("1234"), "1234");
        assert_eq!(rot13("Why did the chicken?"), "Jul qvq gur puvpxra?");
    }

    #[test]
    fn rot_text_alphabet() {
        let d = to_hex_digest(&(0..=255).collect::<Vec<u8>>());
        let r = RotText::from_digest(&d);
        assert!(r.as_str().chars().all(|c| c.is_ascii_digit() || ('n'..='s').contains(&c)));
        assert_eq!(r.to_digest(), d);
        assert!(RotText::parse("4n").is_ok());
        assert!(RotText::parse("4a").is_err());
    }
}
