use serde::Serialize;

use crate::bitcore::Dyadic;
use crate::order::clog2;

use super::AdversaryError;

/// An order table `g(0..len)` together with bounds on `Σ_{i ≥ len} 2^{-g(i)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderTail {
    values: Vec<u64>,
    remainder_lower: Dyadic,
    remainder_upper: Dyadic,
}

impl OrderTail {
    pub fn new(values: Vec<u64>, remainder_lower: Dyadic, remainder_upper: Dyadic) -> Result<Self, AdversaryError> {
        if remainder_lower > remainder_upper {
            return Err(AdversaryError::Params("remainder bounds are inverted".into()));
        }
        Ok(OrderTail {
            values,
            remainder_lower,
            remainder_upper,
        })
    }

    /// `g(n) = n`; the remainder past `len` is exactly `2^{1−len}`.
    pub fn identity(len: usize) -> Self {
        let r = Dyadic::pow2(1 - len as i64);
        OrderTail {
            values: (0..len as u64).collect(),
            remainder_lower: r.clone(),
            remainder_upper: r,
        }
    }

    /// `g(n) = 2⌈log₂(n+2)⌉`, with the exact remainder: the block of `i` with
    /// `⌈log₂(i+2)⌉ = j` has `2^{j−1}` members and sums to `2^{-j-1}`.
    pub fn log_block(len: usize) -> Self {
        let values: Vec<u64> = (0..len as u64).map(|n| 2 * clog2(n + 2)).collect();
        let j0 = clog2(len as u64 + 2);
        let left_in_block = (1u64 << j0) - (len as u64 + 2) + 1;
        let r = &Dyadic::scaled(left_in_block, 2 * j0) + &Dyadic::pow2(-(j0 as i64) - 1);
        OrderTail {
            values,
            remainder_lower: r.clone(),
            remainder_upper: r,
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> Option<u64> {
        self.values.get(n).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lower and upper bounds on `Σ_{i ≥ k} 2^{-g(i)}` for every `k ≤ len`.
    pub fn tail_bounds(&self) -> Vec<(Dyadic, Dyadic)> {
        let mut partial = Dyadic::zero();
        let mut out = vec![(self.remainder_lower.clone(), self.remainder_upper.clone())];
        for &g in self.values.iter().rev() {
            partial += Dyadic::pow2(-(g as i64));
            out.push((&partial + &self.remainder_lower, &partial + &self.remainder_upper));
        }
        out.reverse();
        out
    }
}

/// The least `k` with `Σ_{i ≥ k} 2^{-g(i)} < 2^{-n-c}`.
///
/// Fails when the table is too short to separate `k − 1` from `k`.
pub fn tail_threshold(g: &OrderTail, n: u64, c: i64) -> Result<usize, AdversaryError> {
    let target = Dyadic::pow2(-(n as i64) - c);
    let bounds = g.tail_bounds();
    let Some(k) = bounds.iter().position(|(_, upper)| upper < &target) else {
        return Err(AdversaryError::TailTooShort {
            len: g.len(),
            msg: format!("the remainder bound does not drop below 2^{}", -(n as i64) - c),
        });
    };
    if k > 0 && bounds[k - 1].0 < target {
        return Err(AdversaryError::TailTooShort {
            len: g.len(),
            msg: format!("cannot decide whether the tail from {} is below 2^{}", k - 1, -(n as i64) - c),
        });
    }
    Ok(k)
}
