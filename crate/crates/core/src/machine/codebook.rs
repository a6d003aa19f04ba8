use std::collections::BTreeMap;
use std::ops::Bound;

use crate::bitcore::{BitString, Dyadic};

use super::MachineError;

/// A finite prefix-free machine given by its code table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixFreeCodebook {
    entries: BTreeMap<BitString, BitString>,
    weight: Dyadic,
}

impl PrefixFreeCodebook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, MachineError>
    where
        I: IntoIterator<Item = (BitString, BitString)>,
    {
        let mut cb = Self::new();
        for (cw, out) in entries {
            cb.insert(cw, out)?;
        }
        Ok(cb)
    }

    /// Reject `cw` if it is comparable with an existing codeword.
    pub fn check_insertable(&self, cw: &BitString) -> Result<(), MachineError> {
        let clash = (0..=cw.len()).map(|n| cw.prefix(n)).find(|p| self.entries.contains_key(p));
        let clash = clash.or_else(|| {
            self.entries
                .range((Bound::Included(cw), Bound::Unbounded))
                .next()
                .filter(|(k, _)| cw.is_prefix_of(k))
                .map(|(k, _)| k.clone())
        });
        if let Some(other) = clash {
            return Err(MachineError::NotPrefixFree {
                codeword: cw.clone(),
                clashes_with: other,
            });
        }
        let w = &self.weight + &Dyadic::pow2(-(cw.len() as i64));
        if w > Dyadic::one() {
            return Err(MachineError::WeightExceeded(w));
        }
        Ok(())
    }

    pub fn insert(&mut self, cw: BitString, out: BitString) -> Result<(), MachineError> {
        self.check_insertable(&cw)?;
        self.weight += Dyadic::pow2(-(cw.len() as i64));
        self.entries.insert(cw, out);
        Ok(())
    }

    pub fn weight(&self) -> &Dyadic {
        &self.weight
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, cw: &BitString) -> Option<&BitString> {
        self.entries.get(cw)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BitString, &BitString)> + '_ {
        self.entries.iter()
    }

    /// Whether some codeword strictly extends or equals `p`.
    pub fn has_extension(&self, p: &BitString) -> bool {
        self.entries
            .range((Bound::Included(p), Bound::Unbounded))
            .next()
            .is_some_and(|(k, _)| p.is_prefix_of(k))
    }

    /// Lines `codeword TAB output`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (cw, out) in &self.entries {
            s.push_str(&format!("{cw}\t{out}\n"));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, MachineError> {
        let mut cb = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| MachineError::Parse { line: i + 1, msg };
            let (cw, out) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected codeword TAB output".into()))?;
            let cw = BitString::parse_bits(cw).map_err(|e| parse_err(e.to_string()))?;
            let out = BitString::parse_bits(out).map_err(|e| parse_err(e.to_string()))?;
            cb.insert(cw, out).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(cb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::bits;

    #[test]
    fn rejects_comparable_codewords() {
        let mut cb = PrefixFreeCodebook::new();
        cb.insert(bits("01"), bits("1")).unwrap();
        assert!(cb.insert(bits("0"), bits("1")).is_err());
        assert!(cb.insert(bits("011"), bits("1")).is_err());
        assert!(cb.insert(bits("01"), bits("1")).is_err());
        cb.insert(bits("1"), bits("")).unwrap();
        cb.insert(bits("00"), bits("0")).unwrap();
        assert_eq!(cb.weight(), &Dyadic::one());
        assert!(cb.insert(bits("0000000"), bits("")).is_err());
    }

    #[test]
    fn text_round_trip() {
        let cb = PrefixFreeCodebook::from_entries([(bits("00"), bits("0110")), (bits("1"), bits(""))]).unwrap();
        let text = cb.to_text();
        assert_eq!(text, "00\t0110\n1\t\n");
        assert_eq!(PrefixFreeCodebook::parse_text(&text).unwrap(), cb);
        assert!(matches!(
            PrefixFreeCodebook::parse_text("00\t1\n0\t1\n"),
            Err(MachineError::Parse { line: 2, .. })
        ));
    }
}
