use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::BitcoreError;

/// An exact nonnegative rational `num / 2^exp`.
///
/// Always canonical: `num` is odd, or `num == 0` with `exp == 0`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    num: BigUint,
    exp: u64,
}

impl Dyadic {
    pub fn new(num: BigUint, exp: u64) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic::default()
    }

    pub fn one() -> Self {
        Dyadic {
            num: BigUint::one(),
            exp: 0,
        }
    }

    pub fn from_int(n: u64) -> Self {
        Dyadic::new(BigUint::from(n), 0)
    }

    /// `2^e` for any integer exponent `e`.
    pub fn pow2(e: i64) -> Self {
        if e >= 0 {
            Dyadic {
                num: BigUint::one() << (e as u64),
                exp: 0,
            }
        } else {
            Dyadic {
                num: BigUint::one(),
                exp: e.unsigned_abs(),
            }
        }
    }

    /// `count · 2^{-exp}`.
    pub fn scaled(count: u64, exp: u64) -> Self {
        Dyadic::new(BigUint::from(count), exp)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn exponent(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp);
        if tz > 0 {
            self.num >>= tz;
            self.exp -= tz;
        }
    }

    /// Numerators of `self` and `other` over the common denominator `2^e`.
    fn aligned(&self, other: &Dyadic) -> (BigUint, BigUint, u64) {
        let e = self.exp.max(other.exp);
        (
            &self.num << (e - self.exp),
            &other.num << (e - other.exp),
            e,
        )
    }

    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let (a, b, e) = self.aligned(other);
        if a < b {
            None
        } else {
            Some(Dyadic::new(a - b, e))
        }
    }

    /// `max(self − other, 0)`.
    pub fn saturating_sub(&self, other: &Dyadic) -> Dyadic {
        self.checked_sub(other).unwrap_or_default()
    }

    pub fn half(&self) -> Dyadic {
        self.shift(-1)
    }

    pub fn double(&self) -> Dyadic {
        self.shift(1)
    }

    /// Multiply by `2^k`.
    pub fn shift(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        if k >= 0 {
            let k = k as u64;
            if k <= self.exp {
                Dyadic {
                    num: self.num.clone(),
                    exp: self.exp - k,
                }
            } else {
                Dyadic {
                    num: &self.num << (k - self.exp),
                    exp: 0,
                }
            }
        } else {
            Dyadic {
                num: self.num.clone(),
                exp: self.exp + k.unsigned_abs(),
            }
        }
    }

    pub fn mul_int(&self, n: u64) -> Dyadic {
        Dyadic::new(&self.num * n, self.exp)
    }

    /// `⌊log₂ self⌋`, or `None` for zero.
    pub fn floor_log2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        Some(self.num.bits() as i64 - 1 - self.exp as i64)
    }

    /// Lossy conversion for display only.
    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits();
        let (mant, shift) = if bits > 60 {
            (&self.num >> (bits - 60), bits - 60)
        } else {
            (self.num.clone(), 0)
        };
        let m: u64 = mant.try_into().unwrap_or(u64::MAX);
        (m as f64) * 2f64.powi(shift as i32 - self.exp as i32)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.exp == other.exp {
            return self.num.cmp(&other.num);
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a + b, e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Dyadic) {
        *self = &*self + &rhs;
    }
}

/// Panics when the result would be negative; use [`Dyadic::checked_sub`] otherwise.
impl Sub for &Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self.checked_sub(rhs).expect("negative dyadic difference")
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| &acc + &x)
    }
}

impl<'a> Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| &acc + x)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = BitcoreError;

    /// Accepts `a/2^e` and plain integers `a`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BitcoreError::BadDyadic(s.to_string());
        let (num, exp) = match s.split_once('/') {
            Some((n, d)) => {
                let e = d.strip_prefix("2^").ok_or_else(bad)?;
                (n, e.parse::<u64>().map_err(|_| bad())?)
            }
            None => (s, 0),
        };
        let num = num.parse::<BigUint>().map_err(|_| bad())?;
        Ok(Dyadic::new(num, exp))
    }
}

impl serde::Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let d = Dyadic::new(BigUint::from(12u32), 4);
        assert_eq!(d.numerator(), &BigUint::from(3u32));
        assert_eq!(d.exponent(), 2);
        assert_eq!(Dyadic::new(BigUint::zero(), 9).exponent(), 0);
        assert_eq!(Dyadic::new(BigUint::from(8u32), 2), Dyadic::from_int(2));
    }

    #[test]
    fn text_round_trip() {
        let d = Dyadic::pow2(-16) + Dyadic::pow2(-4);
        assert_eq!(d.to_string(), "4097/2^16");
        assert_eq!("4097/2^16".parse::<Dyadic>().unwrap(), d);
        assert_eq!("3".parse::<Dyadic>().unwrap(), Dyadic::from_int(3));
        assert!("3/4".parse::<Dyadic>().is_err());
    }

    #[test]
    fn halving_and_doubling() {
        let d = Dyadic::scaled(3, 2);
        assert_eq!(d.half(), Dyadic::scaled(3, 3));
        assert_eq!(d.double().double(), Dyadic::from_int(3));
        assert_eq!(d.floor_log2(), Some(-1));
        assert_eq!(Dyadic::zero().floor_log2(), None);
    }

    proptest! {
        // Clearing denominators to 2^20 turns every operation into u128 arithmetic.
        #[test]
        fn agrees_with_integer_arithmetic(a in 0u64..1 << 20, ea in 0u64..20, b in 0u64..1 << 20, eb in 0u64..20) {
            let x = Dyadic::scaled(a, ea);
            let y = Dyadic::scaled(b, eb);
            let ia = (a as u128) << (20 - ea);
            let ib = (b as u128) << (20 - eb);
            let scale = |d: &Dyadic| -> u128 {
                let n: u128 = d.numerator().try_into().unwrap();
                n << (20 - d.exponent())
            };
            prop_assert_eq!(scale(&(&x + &y)), ia + ib);
            prop_assert_eq!(x.cmp(&y), ia.cmp(&ib));
            match x.checked_sub(&y) {
                Some(d) => prop_assert_eq!(scale(&d), ia - ib),
                None => prop_assert!(ia < ib),
            }
            let p = &x * &y;
            let n: u128 = p.numerator().try_into().unwrap();
            prop_assert_eq!(n << (40 - p.exponent()), ((a as u128) << (20 - ea)) * ((b as u128) << (20 - eb)));
        }
    }
}
