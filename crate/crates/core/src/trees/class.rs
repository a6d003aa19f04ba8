use std::collections::BTreeSet;

use serde::Serialize;

use crate::bitcore::BitString;

use super::{tree_prefix_code, tree_prefix_decode, PrunedTree, TreeError, TreePrefix};

/// A co-enumerated class of pruned trees. At each stage finitely many basic
/// opens have been removed; removals only accumulate as the stage grows.
pub trait TreeClass {
    /// Whether `⟦prefix⟧` has not been removed by `stage`. Must be monotone:
    /// false at stage `s` stays false at later stages and for extensions.
    fn survives(&self, prefix: &TreePrefix, stage: u64) -> bool;
}

/// Explicit staged exclusions. Exclusion of `E` removes `⟦E⟧`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplicitExclusion {
    entries: Vec<(u64, TreePrefix)>,
}

impl ExplicitExclusion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exclude(&mut self, stage: u64, prefix: TreePrefix) {
        self.entries.push((stage, prefix));
        self.entries.sort_by_key(|(s, _)| *s);
    }

    pub fn excluded_by(&self, stage: u64) -> impl Iterator<Item = &TreePrefix> + '_ {
        self.entries.iter().take_while(move |(s, _)| *s <= stage).map(|(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_stage(&self) -> u64 {
        self.entries.last().map_or(0, |(s, _)| *s)
    }

    /// Blocks `stage s:` followed by one prefix code per line; the empty code is `λ`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = None;
        for (s, p) in &self.entries {
            if current != Some(*s) {
                out.push_str(&format!("stage {s}:\n"));
                current = Some(*s);
            }
            let code = tree_prefix_code(p);
            if code.is_empty() {
                out.push_str("λ\n");
            } else {
                out.push_str(&code.to_bit_text());
                out.push('\n');
            }
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, TreeError> {
        let mut out = ExplicitExclusion::new();
        let mut stage: Option<u64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| TreeError::Parse { line: i + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("stage ") {
                let s: u64 = rest
                    .strip_suffix(':')
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| err(format!("bad stage header {line:?}")))?;
                if stage.is_some_and(|prev| s < prev) {
                    return Err(err(format!("stage {s} after stage {}", stage.unwrap())));
                }
                stage = Some(s);
                continue;
            }
            let s = stage.ok_or_else(|| err("code before the first stage header".into()))?;
            let code: BitString = line.parse().map_err(|e: crate::bitcore::BitcoreError| err(e.to_string()))?;
            let prefix = tree_prefix_decode(&code).map_err(|e| err(e.to_string()))?;
            out.entries.push((s, prefix));
        }
        Ok(out)
    }
}

impl TreeClass for ExplicitExclusion {
    fn survives(&self, prefix: &TreePrefix, stage: u64) -> bool {
        !self.excluded_by(stage).any(|e| prefix.has_prefix(e))
    }
}

/// The class `⟦F₀⟧` itself: every prefix incompatible with `F₀` is removed at stage 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicOpenClass(pub TreePrefix);

impl TreeClass for BasicOpenClass {
    fn survives(&self, prefix: &TreePrefix, _stage: u64) -> bool {
        if prefix.depth() >= self.0.depth() {
            prefix.has_prefix(&self.0)
        } else {
            self.0.has_prefix(prefix)
        }
    }
}

/// Removes, at stage `factor·k`, every prefix whose width at depth `factor·k` is at most `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WidthFloorClass {
    pub factor: usize,
}

impl TreeClass for WidthFloorClass {
    fn survives(&self, prefix: &TreePrefix, stage: u64) -> bool {
        let limit = prefix.depth().min(stage as usize);
        (1..)
            .map(|k| (k, self.factor * k))
            .take_while(|&(_, d)| d <= limit)
            .all(|(k, d)| prefix.width(d) > k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessBudget {
    /// Stage at which the class is inspected.
    pub stage: u64,
    /// Deepest level searched.
    pub max_depth: usize,
    /// Tree prefixes visited per depth before giving up.
    pub max_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WitnessOutcome {
    Found { k: usize, depth: usize },
    /// Every depth up to `max_depth` still has a narrow survivor.
    DepthExhausted { k: usize, narrow_at: usize },
    NodeBudget { k: usize, depth: usize },
}

impl WitnessOutcome {
    pub fn depth(&self) -> Option<usize> {
        match self {
            WitnessOutcome::Found { depth, .. } => Some(*depth),
            _ => None,
        }
    }
}

enum Search {
    Narrow,
    Clear,
    OutOfNodes,
}

/// For `k = 1..=k_max`, the least depth `n_k > n_{k−1}` at which every prefix
/// surviving at `budget.stage` has more than `k` strings at level `n_k`.
pub fn properness_witness(q: &dyn TreeClass, k_max: usize, budget: WitnessBudget) -> Vec<WitnessOutcome> {
    let mut out = Vec::with_capacity(k_max);
    let mut last = 0usize;
    for k in 1..=k_max {
        let mut outcome = WitnessOutcome::DepthExhausted {
            k,
            narrow_at: budget.max_depth,
        };
        for n in (last + 1)..=budget.max_depth {
            let mut nodes = 0usize;
            match narrow_survivor(q, &PrunedTree::root(), n, k, budget, &mut nodes) {
                Search::Narrow => continue,
                Search::Clear => {
                    outcome = WitnessOutcome::Found { k, depth: n };
                    last = n;
                }
                Search::OutOfNodes => outcome = WitnessOutcome::NodeBudget { k, depth: n },
            }
            break;
        }
        out.push(outcome);
    }
    out
}

/// Is there a surviving depth-`n` extension of `f` with every level of width at most `k`?
fn narrow_survivor(
    q: &dyn TreeClass,
    f: &TreePrefix,
    n: usize,
    k: usize,
    budget: WitnessBudget,
    nodes: &mut usize,
) -> Search {
    *nodes += 1;
    if *nodes > budget.max_nodes {
        return Search::OutOfNodes;
    }
    if !q.survives(f, budget.stage) {
        return Search::Clear;
    }
    if f.depth() == n {
        return Search::Narrow;
    }
    let leaves: Vec<BitString> = f.leaves().iter().cloned().collect();
    let mut result = Search::Clear;
    for_each_child_choice(&leaves, k, &mut |next| {
        let g = f.extend_level(next.clone()).expect("each leaf has a child");
        match narrow_survivor(q, &g, n, k, budget, nodes) {
            Search::Clear => true,
            other => {
                result = other;
                false
            }
        }
    });
    result
}

/// Calls `visit` on every next level giving each leaf one or two children with
/// at most `cap` strings in total; stops when `visit` returns false.
pub(crate) fn for_each_child_choice(
    leaves: &[BitString],
    cap: usize,
    visit: &mut dyn FnMut(&BTreeSet<BitString>) -> bool,
) -> bool {
    fn rec(
        leaves: &[BitString],
        i: usize,
        cap: usize,
        acc: &mut BTreeSet<BitString>,
        visit: &mut dyn FnMut(&BTreeSet<BitString>) -> bool,
    ) -> bool {
        if i == leaves.len() {
            return visit(acc);
        }
        let remaining = leaves.len() - i - 1;
        for choice in [&[false][..], &[true][..], &[false, true][..]] {
            if acc.len() + choice.len() + remaining > cap {
                continue;
            }
            for &b in choice {
                acc.insert(leaves[i].child(b));
            }
            let go_on = rec(leaves, i + 1, cap, acc, visit);
            for &b in choice {
                acc.remove(&leaves[i].child(b));
            }
            if !go_on {
                return false;
            }
        }
        true
    }
    if leaves.len() > cap {
        return true;
    }
    rec(leaves, 0, cap, &mut BTreeSet::new(), visit)
}
