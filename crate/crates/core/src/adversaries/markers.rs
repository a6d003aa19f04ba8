use std::collections::BTreeMap;

use crate::machine::ReferenceMachine;

use super::AdversaryError;

/// Where an injective marker sequence `(n_s)` comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkerSource {
    /// Ranks of the outputs of programs of length `≤ max_len`, in halting order,
    /// first occurrences only, at most `count` of them.
    Builtin { max_len: usize, count: usize },
    /// Whitespace-separated naturals.
    File(String),
}

/// Dovetailed enumeration of the machine's program space. Every program of
/// the reference machine halts as soon as it is read, so halting order is the
/// length-lexicographic order of programs.
pub fn halting_markers(machine: &ReferenceMachine, max_len: usize, count: usize) -> Vec<u64> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (_, output) in machine.programs_up_to(max_len) {
        if out.len() == count {
            break;
        }
        let Some(rank) = output.rank_u64() else { continue };
        if seen.insert(rank) {
            out.push(rank);
        }
    }
    out
}

pub fn parse_markers(text: &str) -> Result<Vec<u64>, AdversaryError> {
    let mut out = Vec::new();
    let mut first: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for word in line.split_whitespace() {
            let value: u64 = word.parse().map_err(|e| AdversaryError::Parse {
                line: i + 1,
                msg: format!("{word:?}: {e}"),
            })?;
            if let Some(&p) = first.get(&value) {
                return Err(AdversaryError::RepeatedMarker {
                    value,
                    first: p,
                    second: out.len(),
                });
            }
            first.insert(value, out.len());
            out.push(value);
        }
    }
    Ok(out)
}

pub fn marker_sequence(source: &MarkerSource, machine: &ReferenceMachine) -> Result<Vec<u64>, AdversaryError> {
    match source {
        MarkerSource::Builtin { max_len, count } => Ok(halting_markers(machine, *max_len, *count)),
        MarkerSource::File(text) => parse_markers(text),
    }
}
