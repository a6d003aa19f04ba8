use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::BitcoreError;

const WORD: usize = 64;

/// A finite binary string, packed most-significant-bit first into 64-bit words.
///
/// Bits past `len` in the last word are always zero, so derived equality and
/// hashing agree with bitwise equality. Ordering is lexicographic with a proper
/// prefix sorting before its extensions, which makes every cylinder's members a
/// contiguous range in a sorted collection.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    /// The empty string λ.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(WORD)),
            len: 0,
        }
    }

    /// The `width` low-order bits of `value`, most significant first.
    pub fn from_value(value: u64, width: usize) -> Self {
        assert!(width <= WORD, "from_value width {width} exceeds 64");
        let mut s = Self::with_capacity(width);
        for i in (0..width).rev() {
            s.push((value >> i) & 1 == 1);
        }
        s
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        if bit {
            let i = self.len;
            self.words[i / WORD] |= 1 << (WORD - 1 - i % WORD);
        }
        self.len += 1;
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (WORD - 1 - i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        if self.len.is_multiple_of(WORD) {
            self.words.truncate(self.len / WORD);
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for bit in other.iter() {
            self.push(bit);
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    /// `self` followed by one more bit.
    pub fn child(&self, bit: bool) -> BitString {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    /// The string with the last bit flipped; `None` for λ.
    pub fn sibling(&self) -> Option<BitString> {
        if self.is_empty() {
            return None;
        }
        let mut out = self.clone();
        let last = self.len - 1;
        out.set(last, !self.get(last));
        Some(out)
    }

    pub fn parent(&self) -> Option<BitString> {
        if self.is_empty() {
            None
        } else {
            Some(self.prefix(self.len - 1))
        }
    }

    pub fn last(&self) -> Option<bool> {
        self.len.checked_sub(1).map(|i| self.get(i))
    }

    /// The first `n` bits. Panics if `n > len`.
    pub fn prefix(&self, n: usize) -> BitString {
        assert!(n <= self.len, "prefix {n} longer than string of length {}", self.len);
        let mut words = self.words[..n.div_ceil(WORD)].to_vec();
        if !n.is_multiple_of(WORD) {
            let last = words.len() - 1;
            words[last] &= !(u64::MAX >> (n % WORD));
        }
        BitString { words, len: n }
    }

    /// Bits `from..len`.
    pub fn suffix_from(&self, from: usize) -> BitString {
        assert!(from <= self.len);
        let mut out = BitString::with_capacity(self.len - from);
        for i in from..self.len {
            out.push(self.get(i));
        }
        out
    }

    /// σ ≼ τ. Runs in O(|σ|/64).
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        if self.len > other.len {
            return false;
        }
        let full = self.len / WORD;
        if self.words[..full] != other.words[..full] {
            return false;
        }
        let rest = self.len % WORD;
        if rest == 0 {
            return true;
        }
        let mask = !(u64::MAX >> rest);
        (other.words[full] & mask) == self.words[full]
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &BitString) -> usize {
        let common = self.len.min(other.len);
        for i in 0..common.div_ceil(WORD) {
            let x = self.words[i] ^ other.words[i];
            if x != 0 {
                return (i * WORD + x.leading_zeros() as usize).min(common);
            }
        }
        common
    }

    pub fn is_comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Integer value of the bits read as a binary numeral; `None` above 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.len > WORD {
            return None;
        }
        if self.len == 0 {
            return Some(0);
        }
        Some(self.words[0] >> (WORD - self.len))
    }

    pub fn to_biguint(&self) -> BigUint {
        let mut v = BigUint::zero();
        for bit in self.iter() {
            v <<= 1u32;
            if bit {
                v += 1u32;
            }
        }
        v
    }

    /// Position in the length-lexicographic enumeration λ, 0, 1, 00, 01, ...:
    /// `2^|σ| − 1 + value(σ)`.
    pub fn rank(&self) -> BigUint {
        (BigUint::one() << self.len) - 1u32 + self.to_biguint()
    }

    /// Like [`rank`](Self::rank) for strings shorter than 63 bits.
    pub fn rank_u64(&self) -> Option<u64> {
        if self.len >= 63 {
            return None;
        }
        Some((1u64 << self.len) - 1 + self.to_u64()?)
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn from_rank(rank: &BigUint) -> BitString {
        // rank + 1 written in binary is "1" followed by the string.
        let shifted = rank + 1u32;
        let bits = shifted.bits() as usize;
        let mut out = BitString::with_capacity(bits - 1);
        for i in (0..bits - 1).rev() {
            out.push(shifted.bit(i as u64));
        }
        out
    }

    pub fn from_rank_u64(rank: u64) -> BitString {
        let shifted = rank as u128 + 1;
        let bits = 128 - shifted.leading_zeros() as usize;
        let mut out = BitString::with_capacity(bits - 1);
        for i in (0..bits - 1).rev() {
            out.push((shifted >> i) & 1 == 1);
        }
        out
    }

    /// The binary string identified with the natural `n` under length-lex rank.
    pub fn from_natural(n: u64) -> BitString {
        Self::from_rank_u64(n)
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < WORD, "refusing to enumerate 2^{n} strings");
        (0..(1u64 << n)).map(move |v| BitString::from_value(v, n))
    }

    /// Lexicographic successor among strings of the same length, `None` at 1^n.
    pub fn increment(&self) -> Option<BitString> {
        let mut out = self.clone();
        for i in (0..self.len).rev() {
            if out.get(i) {
                out.set(i, false);
            } else {
                out.set(i, true);
                return Some(out);
            }
        }
        None
    }

    pub fn to_bit_text(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_bits(text: &str) -> Result<BitString, BitcoreError> {
        let mut out = BitString::with_capacity(text.len());
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => {
                    return Err(BitcoreError::BadBit {
                        position: i,
                        found: c,
                    })
                }
            }
        }
        Ok(out)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.len.min(other.len);
        let full = common / WORD;
        for i in 0..full {
            match self.words[i].cmp(&other.words[i]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        let rest = common % WORD;
        if rest != 0 {
            let mask = !(u64::MAX >> rest);
            match (self.words[full] & mask).cmp(&(other.words[full] & mask)) {
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

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_text())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("λ")
        } else if self.len > 96 {
            write!(f, "{}…[{} bits]", self.prefix(64), self.len)
        } else {
            write!(f, "{self}")
        }
    }
}

impl FromStr for BitString {
    type Err = BitcoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "λ" {
            return Ok(BitString::empty());
        }
        BitString::parse_bits(s)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bit_text())
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        BitString::parse_bits(&text).map_err(serde::de::Error::custom)
    }
}

/// Parse a literal in tests and examples. Panics on a non-binary character.
pub fn bits(text: &str) -> BitString {
    text.parse().expect("binary literal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prefix_relation() {
        assert!(bits("").is_prefix_of(&bits("0101")));
        assert!(bits("01").is_prefix_of(&bits("0101")));
        assert!(!bits("011").is_prefix_of(&bits("0101")));
        assert!(!bits("01010").is_prefix_of(&bits("0101")));
    }

    #[test]
    fn long_strings_cross_word_boundaries() {
        let mut s = BitString::empty();
        for i in 0..200 {
            s.push(i % 3 == 0);
        }
        assert_eq!(s.len(), 200);
        let p = s.prefix(130);
        assert!(p.is_prefix_of(&s));
        assert_eq!(p.concat(&s.suffix_from(130)), s);
        let mut q = p.clone();
        q.set(129, !q.get(129));
        assert!(!q.is_prefix_of(&s));
    }

    #[test]
    fn rank_is_length_lexicographic() {
        let order = ["", "0", "1", "00", "01", "10", "11", "000"];
        for (r, s) in order.iter().enumerate() {
            assert_eq!(bits(s).rank_u64(), Some(r as u64));
            assert_eq!(BitString::from_rank_u64(r as u64), bits(s));
            assert_eq!(BitString::from_rank(&BigUint::from(r)), bits(s));
        }
    }

    #[test]
    fn ordering_puts_prefix_first() {
        let mut v = [bits("1"), bits("01"), bits("0"), bits(""), bits("011"), bits("00")];
        v.sort();
        let text: Vec<String> = v.iter().map(|s| s.to_bit_text()).collect();
        assert_eq!(text, ["", "0", "00", "01", "011", "1"]);
    }

    #[test]
    fn rejects_non_binary() {
        assert!(matches!(
            BitString::parse_bits("01x"),
            Err(BitcoreError::BadBit { position: 2, found: 'x' })
        ));
    }

    fn arb_bits(max: usize) -> impl Strategy<Value = BitString> {
        proptest::collection::vec(any::<bool>(), 0..max).prop_map(|v| {
            let mut s = BitString::empty();
            for b in v {
                s.push(b);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn ord_matches_string_order(a in arb_bits(150), b in arb_bits(150)) {
            prop_assert_eq!(a.cmp(&b), a.to_bit_text().cmp(&b.to_bit_text()));
        }

        #[test]
        fn prefix_matches_text(a in arb_bits(150), b in arb_bits(150)) {
            prop_assert_eq!(a.is_prefix_of(&b), b.to_bit_text().starts_with(&a.to_bit_text()));
        }

        #[test]
        fn rank_round_trips(a in arb_bits(100)) {
            prop_assert_eq!(BitString::from_rank(&a.rank()), a);
        }
    }
}
