//! Online Kraft–Chaitin–Levin allocation.
//!
//! Requests are served from the lexicographically least free node that is not
//! deeper than the requested length. Under this policy the free nodes, read
//! left to right, have strictly decreasing depths, so any request fitting in the
//! remaining budget finds a free node of small enough depth: the free
//! capacity is a sum of distinct powers of two, and if all of them were below
//! `2^{-ℓ}` the whole capacity would be too.

use std::collections::BTreeSet;

use crate::bitcore::{BitString, Dyadic};
use crate::machine::PrefixFreeCodebook;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KclError {
    #[error("request of length {length} overflows: {spent} already spent")]
    Overflow { length: usize, spent: Dyadic },
}

#[derive(Clone, Debug)]
pub struct KclAllocator {
    free: BTreeSet<BitString>,
    issued: PrefixFreeCodebook,
    order: Vec<BitString>,
    spent: Dyadic,
}

impl Default for KclAllocator {
    fn default() -> Self {
        Self::new()
    }
}

impl KclAllocator {
    pub fn new() -> Self {
        KclAllocator {
            free: BTreeSet::from([BitString::empty()]),
            issued: PrefixFreeCodebook::new(),
            order: Vec::new(),
            spent: Dyadic::zero(),
        }
    }

    pub fn request(&mut self, length: usize, payload: BitString) -> Result<BitString, KclError> {
        let node = self
            .free
            .iter()
            .find(|f| f.len() <= length)
            .cloned()
            .ok_or_else(|| KclError::Overflow {
                length,
                spent: self.spent.clone(),
            })?;
        self.free.remove(&node);
        let mut cw = node;
        while cw.len() < length {
            self.free.insert(cw.child(true));
            cw.push(false);
        }
        self.issued
            .insert(cw.clone(), payload)
            .expect("allocated codeword is free");
        self.order.push(cw.clone());
        self.spent += Dyadic::pow2(-(length as i64));
        Ok(cw)
    }

    /// Total weight handed out so far.
    pub fn weight(&self) -> &Dyadic {
        &self.spent
    }

    pub fn free_capacity(&self) -> Dyadic {
        self.free.iter().map(|f| Dyadic::pow2(-(f.len() as i64))).sum()
    }

    pub fn free_nodes(&self) -> impl Iterator<Item = &BitString> + '_ {
        self.free.iter()
    }

    pub fn issued(&self) -> &PrefixFreeCodebook {
        &self.issued
    }

    /// Codewords in the order they were issued.
    pub fn issue_order(&self) -> &[BitString] {
        &self.order
    }
}
