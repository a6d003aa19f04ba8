use std::collections::BTreeSet;

use crate::bitcore::BitString;

use super::{PrunedTree, TreeError, TreePrefix};

/// Level bitmaps: for `k = 1..=depth`, two bits (child 0, child 1) per string of
/// level `k−1` in lexicographic order. The code of `F ∩ 2^{≤m}` is a prefix of
/// the code of `F`, and its length depends only on the widths.
pub fn tree_prefix_code(f: &TreePrefix) -> BitString {
    let mut out = BitString::with_capacity(tree_prefix_code_len(&f.width_profile()));
    for k in 1..=f.depth() {
        for s in f.level(k - 1) {
            out.push(f.contains(&s.child(false)));
            out.push(f.contains(&s.child(true)));
        }
    }
    out
}

/// `p_n = 2 · Σ_{k<n} width(k)` for the width sequence `width(0..=n)`.
pub fn tree_prefix_code_len(widths: &[usize]) -> usize {
    2 * widths.iter().take(widths.len().saturating_sub(1)).sum::<usize>()
}

/// Inverse of [`tree_prefix_code`]. The depth is the number of complete level
/// bitmaps; a bitmap giving some string no child is rejected.
pub fn tree_prefix_decode(code: &BitString) -> Result<TreePrefix, TreeError> {
    let mut levels = vec![BTreeSet::from([BitString::empty()])];
    let mut pos = 0usize;
    while pos < code.len() {
        let prev = levels.last().expect("nonempty");
        let need = 2 * prev.len();
        if code.len() - pos < need {
            return Err(TreeError::BadCode(format!(
                "level {} needs {need} bits, {} left",
                levels.len(),
                code.len() - pos
            )));
        }
        let mut next = BTreeSet::new();
        for s in prev {
            let (a, b) = (code.get(pos), code.get(pos + 1));
            pos += 2;
            if !a && !b {
                return Err(TreeError::Deadend(s.clone()));
            }
            if a {
                next.insert(s.child(false));
            }
            if b {
                next.insert(s.child(true));
            }
        }
        levels.push(next);
    }
    PrunedTree::from_levels(levels)
}
