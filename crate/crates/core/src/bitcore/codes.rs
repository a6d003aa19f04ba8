use num_bigint::BigUint;

use super::{BitString, BitcoreError};

/// Elias gamma code: `⌊log₂ n⌋` zeros, then `n` in binary.
pub fn elias_gamma(n: u64) -> Result<BitString, BitcoreError> {
    if n == 0 {
        return Err(BitcoreError::GammaZero);
    }
    let width = 64 - n.leading_zeros() as usize;
    let mut out = BitString::zeros(width - 1);
    out.extend_from(&BitString::from_value(n, width));
    Ok(out)
}

/// Gamma code of `n + 1`, so that 0 has a codeword.
pub fn encode_natural(n: u64) -> BitString {
    elias_gamma(n + 1).expect("n + 1 >= 1")
}

pub fn elias_gamma_len(n: u64) -> usize {
    assert!(n >= 1);
    2 * (63 - n.leading_zeros() as usize) + 1
}

/// Decode one gamma codeword starting at bit `start`; returns the value and
/// the number of bits consumed.
pub fn elias_gamma_decode(input: &BitString, start: usize) -> Result<(u64, usize), BitcoreError> {
    let mut pos = start;
    let mut zeros = 0usize;
    loop {
        if pos >= input.len() {
            return Err(BitcoreError::IncompleteCode);
        }
        if input.get(pos) {
            break;
        }
        zeros += 1;
        pos += 1;
    }
    if zeros > 63 {
        return Err(BitcoreError::GammaOverflow);
    }
    if pos + zeros >= input.len() {
        return Err(BitcoreError::IncompleteCode);
    }
    let mut value = 0u64;
    for i in 0..=zeros {
        value = (value << 1) | input.get(pos + i) as u64;
    }
    Ok((value, zeros + 1 + zeros))
}

pub fn cantor_pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

pub fn cantor_unpair(z: &BigUint) -> (BigUint, BigUint) {
    let w = ((z * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let b = z - t;
    let a = w - &b;
    (a, b)
}

/// `⟨rank(σ), k⟩`.
pub fn rank_pair(sigma: &BitString, k: u64) -> BigUint {
    cantor_pair(&sigma.rank(), &BigUint::from(k))
}

pub fn unpair(z: &BigUint) -> (BitString, BigUint) {
    let (a, b) = cantor_unpair(z);
    (BitString::from_rank(&a), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::bits;

    #[test]
    fn gamma_examples() {
        assert_eq!(elias_gamma(1).unwrap(), bits("1"));
        assert_eq!(elias_gamma(2).unwrap(), bits("010"));
        assert_eq!(elias_gamma(4).unwrap(), bits("00100"));
        assert_eq!(elias_gamma(0), Err(BitcoreError::GammaZero));
        assert_eq!(elias_gamma_len(4), 5);
    }

    #[test]
    fn gamma_round_trip_and_prefix_free() {
        let codes: Vec<BitString> = (1..=1u64 << 12).map(|n| elias_gamma(n).unwrap()).collect();
        for (i, c) in codes.iter().enumerate() {
            let n = i as u64 + 1;
            assert_eq!(c.len(), elias_gamma_len(n));
            assert_eq!(elias_gamma_decode(c, 0).unwrap(), (n, c.len()));
        }
        // Sorted, an extension directly follows its prefix.
        let mut sorted = codes.clone();
        sorted.sort();
        for w in sorted.windows(2) {
            assert!(!w[0].is_prefix_of(&w[1]));
        }
    }

    #[test]
    fn gamma_rejects_incomplete() {
        assert_eq!(elias_gamma_decode(&bits("00"), 0), Err(BitcoreError::IncompleteCode));
        assert_eq!(elias_gamma_decode(&bits("0010"), 0), Err(BitcoreError::IncompleteCode));
        assert_eq!(elias_gamma_decode(&bits(""), 0), Err(BitcoreError::IncompleteCode));
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(rank_pair(&bits(""), 0), BigUint::from(0u32));
        assert_eq!(rank_pair(&bits("1"), 0), BigUint::from(3u32));
        assert_eq!(rank_pair(&bits("0"), 1), BigUint::from(4u32));
    }

    #[test]
    fn pairing_is_a_bijection_on_an_initial_segment() {
        let mut seen = std::collections::BTreeSet::new();
        for z in 0u32..100 {
            let zb = BigUint::from(z);
            let (s, k) = unpair(&zb);
            let k: u64 = k.try_into().unwrap();
            assert_eq!(rank_pair(&s, k), zb);
            assert!(seen.insert((s, k)));
        }
        // Exhaustive inverse: the pair mapping to 4 is ("0", 1).
        assert_eq!(unpair(&BigUint::from(4u32)), (bits("0"), BigUint::from(1u32)));
    }
}
