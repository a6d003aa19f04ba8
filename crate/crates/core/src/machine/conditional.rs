use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bitcore::BitString;

use super::{literal_len, sub_constant, sub_prefix, MachineError, PrefixFreeCodebook};

/// Conditional descriptions `K̂(σ | τ)`.
///
/// Given `τ`, the program `0 · γ(|ρ|+1) · ρ` prints `τρ`. Registered
/// conditional machine `i` is a family of codebooks indexed by the condition
/// and is reached through `1 · γ(i+1)`, exactly as in the plain machine.
#[derive(Clone, Debug, Default)]
pub struct ConditionalCoder {
    machines: Vec<BTreeMap<BitString, PrefixFreeCodebook>>,
    best: HashMap<(BitString, BitString), u64>,
}

impl ConditionalCoder {
    pub fn register(&mut self) -> (usize, u64) {
        self.machines.push(BTreeMap::new());
        let id = self.machines.len() - 1;
        (id, sub_constant(id))
    }

    pub fn extend(&mut self, id: usize, tau: BitString, cw: BitString, sigma: BitString) -> Result<(), MachineError> {
        let table = self.machines.get_mut(id).ok_or(MachineError::UnknownMachine(id))?;
        let len = sub_constant(id) + cw.len() as u64;
        table.entry(tau.clone()).or_default().insert(cw, sigma.clone())?;
        let best = self.best.entry((sigma, tau)).or_insert(u64::MAX);
        *best = (*best).min(len);
        Ok(())
    }

    /// Minimum conditional program length, or `None` when no branch applies.
    pub fn k_hat_cond(&self, sigma: &BitString, tau: &BitString) -> Option<u64> {
        let lit = tau
            .is_prefix_of(sigma)
            .then(|| literal_len(sigma.len() - tau.len()));
        let reg = self.best.get(&(sigma.clone(), tau.clone())).copied();
        match (lit, reg) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    pub(super) fn dump(&self) -> Vec<ConditionalRecord> {
        self.machines
            .iter()
            .enumerate()
            .map(|(i, table)| ConditionalRecord {
                index: i,
                sub_prefix: sub_prefix(i),
                constant: sub_constant(i),
                entries: table
                    .iter()
                    .flat_map(|(tau, cb)| {
                        cb.entries().map(move |(cw, out)| ConditionalEntry {
                            condition: tau.clone(),
                            codeword: cw.clone(),
                            output: out.clone(),
                        })
                    })
                    .collect(),
            })
            .collect()
    }

    pub(super) fn from_dump(records: &[ConditionalRecord]) -> Result<Self, MachineError> {
        let mut c = ConditionalCoder::default();
        for (i, rec) in records.iter().enumerate() {
            if rec.index != i {
                return Err(MachineError::State(format!(
                    "conditional machine index {} out of order",
                    rec.index
                )));
            }
            let (id, _) = c.register();
            for e in &rec.entries {
                c.extend(id, e.condition.clone(), e.codeword.clone(), e.output.clone())?;
            }
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalRecord {
    pub index: usize,
    pub sub_prefix: BitString,
    pub constant: u64,
    pub entries: Vec<ConditionalEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalEntry {
    pub condition: BitString,
    pub codeword: BitString,
    pub output: BitString,
}
