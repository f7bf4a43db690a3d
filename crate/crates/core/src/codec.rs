//! Self-delimiting codes for strings, pairs, tuples and naturals.
//!
//! The block code `D(s)` writes every bit of `s` twice and terminates with
//! `01`. Pairs are `⟨a, b⟩ = D(a) ++ b`, so `|⟨a, b⟩| = 2|a| + 2 + |b|`.
//! Tuples are right-nested pairs closed by a one-element wrapper:
//! `⟨x⟩ = D(x)` and `⟨x1, …, xm⟩ = D(x1) ++ ⟨x2, …, xm⟩`.

use thiserror::Error;

pub use crate::bits::{bits, BitBuf, BitString, ParseBitsError};
use crate::bits::scan_doubled;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("malformed pair: no `01` terminator at an even offset, or mismatched doubled bits")]
    MalformedPair,
    #[error("tuples need at least one element")]
    EmptyTuple,
}

/// `D(s)`: each bit doubled, then `01`.
pub fn delimit(s: &BitString) -> BitString {
    encode_pair(s, &BitString::new())
}

/// Splits `D(s) ++ rest` back into `(s, rest)`.
pub fn undelimit(s: &BitString) -> Result<(BitString, BitString), CodecError> {
    decode_pair(s)
}

pub fn encode_pair(a: &BitString, b: &BitString) -> BitString {
    let mut buf = BitBuf::with_capacity(2 * a.len() + 2 + b.len());
    buf.extend_doubled(a);
    buf.push(false);
    buf.push(true);
    buf.extend(b);
    buf.finish()
}

pub fn decode_pair(s: &BitString) -> Result<(BitString, BitString), CodecError> {
    let (a, used) = scan_doubled(s).ok_or(CodecError::MalformedPair)?;
    Ok((a, s.slice_from(used)))
}

/// True iff `s` begins with a well-formed block.
pub fn is_pair(s: &BitString) -> bool {
    scan_doubled(s).is_some()
}

pub fn encode_tuple<'a, I>(items: I) -> Result<BitString, CodecError>
where
    I: IntoIterator<Item = &'a BitString>,
{
    let mut buf = BitBuf::new();
    let mut any = false;
    for x in items {
        buf.extend_doubled(x);
        buf.push(false);
        buf.push(true);
        any = true;
    }
    if !any {
        return Err(CodecError::EmptyTuple);
    }
    Ok(buf.finish())
}

pub fn decode_tuple(s: &BitString) -> Result<Vec<BitString>, CodecError> {
    if s.is_empty() {
        return Err(CodecError::EmptyTuple);
    }
    let mut out = Vec::new();
    let mut rest = s.clone();
    while !rest.is_empty() {
        let (x, r) = decode_pair(&rest)?;
        out.push(x);
        rest = r;
    }
    Ok(out)
}

/// Shifted-binary bijection: `n ↦ binary(n + 1)` without its leading 1.
pub fn nat_to_bits(n: u64) -> BitString {
    let m = n as u128 + 1;
    let width = 128 - m.leading_zeros() as usize;
    (0..width - 1)
        .rev()
        .map(|i| (m >> i) & 1 == 1)
        .collect()
}

/// Inverse of [`nat_to_bits`]. Saturates at `u64::MAX` for strings of 64 bits
/// or more that would overflow.
pub fn bits_to_nat(s: &BitString) -> u64 {
    let mut m: u128 = 1;
    for b in s.iter() {
        m = (m << 1) | b as u128;
        if m > u64::MAX as u128 + 1 {
            return u64::MAX;
        }
    }
    (m - 1) as u64
}

/// Every bit string of length at most `max_len`, shortest first.
pub fn all_strings_up_to(max_len: usize) -> Vec<BitString> {
    (0..=max_len)
        .flat_map(BitString::all_of_length)
        .collect()
}
