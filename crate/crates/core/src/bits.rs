//! Immutable, cheaply sliceable bit strings.
//!
//! A [`BitString`] shares its backing words through an [`Arc`], so cloning and
//! dropping a prefix (`tail`, `slice_from`) are O(1). Everything that builds new
//! strings goes through [`BitBuf`], which works a word at a time.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

const EVEN: u64 = 0x5555_5555_5555_5555;

/// A finite sequence of bits. The empty string is a legal value.
#[derive(Clone)]
pub struct BitString {
    words: Arc<[u64]>,
    start: usize,
    len: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid bit character {ch:?} at position {pos}")]
pub struct ParseBitsError {
    pub pos: usize,
    pub ch: char,
}

impl BitString {
    pub fn new() -> Self {
        BitString {
            words: Arc::from(Vec::new()),
            start: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `i`, panicking when out of range.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let p = self.start + i;
        (self.words[p >> 6] >> (p & 63)) & 1 == 1
    }

    pub fn first(&self) -> Option<bool> {
        if self.is_empty() {
            None
        } else {
            Some(self.get(0))
        }
    }

    /// Suffix starting at bit `from`; O(1).
    pub fn slice_from(&self, from: usize) -> BitString {
        assert!(from <= self.len);
        BitString {
            words: Arc::clone(&self.words),
            start: self.start + from,
            len: self.len - from,
        }
    }

    /// Bits `[from, to)`; O(1).
    pub fn slice(&self, from: usize, to: usize) -> BitString {
        assert!(from <= to && to <= self.len);
        BitString {
            words: Arc::clone(&self.words),
            start: self.start + from,
            len: to - from,
        }
    }

    /// Drops the first bit. Panics on the empty string.
    pub fn tail(&self) -> BitString {
        assert!(!self.is_empty(), "tail of empty bit string");
        self.slice_from(1)
    }

    /// Up to 64 bits starting at relative position `i`, LSB = bit `i`.
    /// Positions past the end read as zero.
    pub(crate) fn chunk(&self, i: usize) -> u64 {
        if i >= self.len {
            return 0;
        }
        let p = self.start + i;
        let w = p >> 6;
        let s = p & 63;
        let mut v = self.words[w] >> s;
        if s > 0 && w + 1 < self.words.len() {
            v |= self.words[w + 1] << (64 - s);
        }
        let avail = self.len - i;
        if avail < 64 {
            v &= (1u64 << avail) - 1;
        }
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let mut buf = BitBuf::with_capacity(self.len + other.len);
        buf.extend(self);
        buf.extend(other);
        buf.finish()
    }

    /// `prefix ++ self` for a single bit.
    pub fn cons(&self, bit: bool) -> BitString {
        let mut buf = BitBuf::with_capacity(self.len + 1);
        buf.push(bit);
        buf.extend(self);
        buf.finish()
    }

    pub fn starts_with(&self, prefix: &BitString) -> bool {
        prefix.len <= self.len && self.slice(0, prefix.len) == *prefix
    }

    /// Renders as ASCII '0'/'1'.
    pub fn to_text(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// All strings of exactly `len` bits in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64);
        (0u64..(1u64 << len)).map(move |v| {
            let mut buf = BitBuf::with_capacity(len);
            for i in (0..len).rev() {
                buf.push((v >> i) & 1 == 1);
            }
            buf.finish()
        })
    }

    /// The string read as an unsigned binary numeral, most significant bit first.
    pub fn to_u64_msb(&self) -> u64 {
        self.iter().fold(0u64, |acc, b| (acc << 1) | b as u64)
    }

    /// `value` written with exactly `width` bits, most significant bit first.
    pub fn from_u64_msb(value: u64, width: usize) -> BitString {
        let mut buf = BitBuf::with_capacity(width);
        for i in (0..width).rev() {
            buf.push(i < 64 && (value >> i) & 1 == 1);
        }
        buf.finish()
    }
}

impl Default for BitString {
    fn default() -> Self {
        BitString::new()
    }
}

impl PartialEq for BitString {
    fn eq(&self, other: &Self) -> bool {
        if self.len != other.len {
            return false;
        }
        if Arc::ptr_eq(&self.words, &other.words) && self.start == other.start {
            return true;
        }
        (0..self.len)
            .step_by(64)
            .all(|i| self.chunk(i) == other.chunk(i))
    }
}

impl Eq for BitString {}

impl Hash for BitString {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.len.hash(state);
        for i in (0..self.len).step_by(64) {
            self.chunk(i).hash(state);
        }
    }
}

impl Ord for BitString {
    /// Lexicographic on bits, shorter prefix first.
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.len.min(other.len);
        for i in 0..n {
            match self.get(i).cmp(&other.get(i)) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 96 {
            write!(f, "\"{}\"", self.to_text())
        } else {
            write!(f, "\"{}…\"({} bits)", self.slice(0, 64).to_text(), self.len)
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut buf = BitBuf::with_capacity(s.len());
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => buf.push(false),
                '1' => buf.push(true),
                _ => return Err(ParseBitsError { pos, ch }),
            }
        }
        Ok(buf.finish())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let mut buf = BitBuf::new();
        for b in iter {
            buf.push(b);
        }
        buf.finish()
    }
}

/// Parses a literal bit string, panicking on bad characters. Test and
/// generator convenience.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("literal bit string")
}

/// Append-only bit builder.
#[derive(Debug, Default, Clone)]
pub struct BitBuf {
    words: Vec<u64>,
    len: usize,
}

impl BitBuf {
    pub fn new() -> Self {
        BitBuf::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitBuf {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        self.push_word(bit as u64, 1);
    }

    /// Appends the low `n` bits of `x` (n ≤ 64).
    fn push_word(&mut self, x: u64, n: usize) {
        debug_assert!(n <= 64);
        if n == 0 {
            return;
        }
        let x = if n < 64 { x & ((1u64 << n) - 1) } else { x };
        let s = self.len & 63;
        if s == 0 {
            self.words.push(x);
        } else {
            *self.words.last_mut().unwrap() |= x << s;
            if s + n > 64 {
                self.words.push(x >> (64 - s));
            }
        }
        self.len += n;
    }

    pub fn extend(&mut self, src: &BitString) {
        let mut i = 0;
        while i < src.len() {
            let n = (src.len() - i).min(64);
            self.push_word(src.chunk(i), n);
            i += n;
        }
    }

    /// Appends every bit of `src` twice (`b` becomes `bb`).
    pub fn extend_doubled(&mut self, src: &BitString) {
        let mut i = 0;
        while i < src.len() {
            let n = (src.len() - i).min(32);
            let spread = spread_even(src.chunk(i) & 0xFFFF_FFFF);
            self.push_word(spread | (spread << 1), 2 * n);
            i += n;
        }
    }

    pub fn finish(self) -> BitString {
        BitString {
            words: Arc::from(self.words),
            start: 0,
            len: self.len,
        }
    }
}

/// Moves the low 32 bits of `x` to the even bit positions.
fn spread_even(mut x: u64) -> u64 {
    x &= 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & EVEN
}

/// Inverse of [`spread_even`]: gathers the even bits of `x` into the low 32.
fn compact_even(mut x: u64) -> u64 {
    x &= EVEN;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    (x | (x >> 16)) & 0xFFFF_FFFF
}

/// Scans a doubling-code block at the front of `s`.
///
/// Returns the decoded payload and the number of bits the block occupies
/// (payload doubled plus the `01` terminator), or `None` if `s` does not start
/// with a well-formed block.
pub(crate) fn scan_doubled(s: &BitString) -> Option<(BitString, usize)> {
    let mut out = BitBuf::new();
    let mut i = 0;
    loop {
        let avail = s.len() - i;
        if avail < 2 {
            return None;
        }
        let take = avail.min(64) & !1;
        let c = s.chunk(i);
        let even = c & EVEN;
        let odd = (c >> 1) & EVEN;
        let mut diff = even ^ odd;
        if take < 64 {
            diff &= (1u64 << take) - 1;
        }
        if diff != 0 {
            let tz = diff.trailing_zeros() as usize;
            // the differing pair must be `01`: first bit clear, second set
            if (even >> tz) & 1 == 1 {
                return None;
            }
            let pairs = tz / 2;
            let payload = compact_even(even & ((1u64 << tz) - 1));
            out.push_word(payload, pairs);
            return Some((out.finish(), i + tz + 2));
        }
        out.push_word(compact_even(even), take / 2);
        i += take;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_and_slicing() {
        let s = bits("1011001");
        assert_eq!(s.to_text(), "1011001");
        assert_eq!(s.tail().to_text(), "011001");
        assert_eq!(s.slice(2, 5).to_text(), "110");
        assert_eq!(s.slice_from(7), BitString::new());
        assert!("10a".parse::<BitString>().is_err());
    }

    #[test]
    fn long_concat_matches_bitwise() {
        let a: BitString = (0..150).map(|i| i % 3 == 0).collect();
        let b: BitString = (0..77).map(|i| i % 5 < 2).collect();
        let c = a.slice_from(13).concat(&b.slice_from(3));
        let expect: Vec<bool> = a.iter().skip(13).chain(b.iter().skip(3)).collect();
        assert_eq!(c.iter().collect::<Vec<_>>(), expect);
    }

    #[test]
    fn spread_and_compact_are_inverse() {
        for x in [0u64, 1, 0xDEAD_BEEF, 0xFFFF_FFFF, 0x8000_0001] {
            assert_eq!(compact_even(spread_even(x)), x);
        }
    }

    #[test]
    fn doubled_scan_on_offsets() {
        let payload: BitString = (0..100).map(|i| (i * 7) % 11 < 4).collect();
        for lead in 0..3 {
            let mut buf = BitBuf::new();
            for _ in 0..lead {
                buf.push(true);
            }
            buf.extend_doubled(&payload);
            buf.push(false);
            buf.push(true);
            buf.push(true);
            let s = buf.finish().slice_from(lead);
            let (p, used) = scan_doubled(&s).unwrap();
            assert_eq!(p, payload);
            assert_eq!(used, 2 * payload.len() + 2);
        }
    }

    #[test]
    fn ordering_is_lexicographic() {
        assert!(bits("0") < bits("1"));
        assert!(bits("01") < bits("1"));
        assert!(bits("") < bits("0"));
    }
}
