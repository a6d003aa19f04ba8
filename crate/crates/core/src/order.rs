//! Finite tables of order functions `g : ℕ → ℕ`.

use serde::{Deserialize, Serialize};

/// Values `g(0), …, g(len−1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderTable {
    values: Vec<u64>,
}

impl OrderTable {
    pub fn new(values: Vec<u64>) -> Self {
        OrderTable { values }
    }

    pub fn from_fn(len: usize, f: impl Fn(u64) -> u64) -> Self {
        OrderTable {
            values: (0..len as u64).map(f).collect(),
        }
    }

    pub fn identity(len: usize) -> Self {
        Self::from_fn(len, |n| n)
    }

    pub fn get(&self, n: usize) -> Option<u64> {
        self.values.get(n).copied()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First `n` with `g(n+1) < g(n)`.
    pub fn first_decrease(&self) -> Option<usize> {
        self.values.windows(2).position(|w| w[1] < w[0])
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.first_decrease().is_none()
    }

    /// First `n` with `g(n+1) > g(n) + 1`, the step condition for shattering.
    pub fn first_jump(&self) -> Option<usize> {
        self.values.windows(2).position(|w| w[1] > w[0] + 1)
    }
}

/// `⌈i / (log₂ i)²⌉`, clamped to 1 below 4 where the formula is undefined or
/// not monotone. Exact at powers of two.
pub fn fat_order(i: u64) -> u64 {
    if i < 4 {
        return 1;
    }
    if i.is_power_of_two() {
        let l = i.trailing_zeros() as u64;
        return i.div_ceil(l * l);
    }
    let l = (i as f64).log2();
    (i as f64 / (l * l)).ceil() as u64
}

/// `⌈log₂ n⌉`, with `clog2(0) = clog2(1) = 0`.
pub fn clog2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// `⌊log₂ n⌋`, with `log2(0) = 0`.
pub fn flog2(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        63 - n.leading_zeros() as u64
    }
}
