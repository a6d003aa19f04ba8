//! Bounded-use total functionals given as complete decision tables.
//!
//! `Φ(x; n)` is read off the first `u(n)` bits of the oracle `x`. Because every
//! table is complete, preimages are clopen and their measures exact.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bitcore::{BitString, ClopenSet, Dyadic, OracleStream};

/// Largest oracle use for which preimages are enumerated.
pub const MAX_USE: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FunctionalError {
    #[error("parameter {n} uses {used} oracle bits, above the limit {max}")]
    UseBound { n: usize, used: usize, max: usize },
    #[error("parameter {n} is beyond the horizon {horizon}")]
    Horizon { n: usize, horizon: usize },
    #[error("bad decision table at parameter {n}: {msg}")]
    BadTable { n: usize, msg: String },
}

/// Output for every oracle prefix of length `use_bits`, stored as palette indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTable<T> {
    use_bits: usize,
    palette: Vec<T>,
    choice: Vec<u32>,
}

impl<T: Clone + Ord> DecisionTable<T> {
    pub fn new(use_bits: usize, palette: Vec<T>, choice: Vec<u32>) -> Result<Self, String> {
        if use_bits > MAX_USE {
            return Err(format!("use {use_bits} above {MAX_USE}"));
        }
        if choice.len() != 1usize << use_bits {
            return Err(format!("{} entries for use {use_bits}", choice.len()));
        }
        if let Some(c) = choice.iter().find(|&&c| c as usize >= palette.len()) {
            return Err(format!("palette index {c} out of {}", palette.len()));
        }
        Ok(DecisionTable {
            use_bits,
            palette,
            choice,
        })
    }

    pub fn constant(value: T) -> Self {
        DecisionTable {
            use_bits: 0,
            palette: vec![value],
            choice: vec![0],
        }
    }

    /// Tabulate `f` over all prefixes of length `use_bits`.
    pub fn from_fn(use_bits: usize, mut f: impl FnMut(&BitString) -> T) -> Self {
        assert!(use_bits <= MAX_USE, "use {use_bits} above {MAX_USE}");
        let mut index: BTreeMap<T, u32> = BTreeMap::new();
        let mut palette = Vec::new();
        let mut choice = Vec::with_capacity(1 << use_bits);
        for v in 0..(1u64 << use_bits) {
            let out = f(&BitString::from_value(v, use_bits));
            let id = *index.entry(out.clone()).or_insert_with(|| {
                palette.push(out);
                (palette.len() - 1) as u32
            });
            choice.push(id);
        }
        DecisionTable {
            use_bits,
            palette,
            choice,
        }
    }

    pub fn use_bits(&self) -> usize {
        self.use_bits
    }

    pub fn palette(&self) -> &[T] {
        &self.palette
    }

    /// Palette index for the prefix whose first `use_bits` bits have value `v`.
    pub fn choice_at(&self, v: u64) -> u32 {
        self.choice[v as usize]
    }

    pub fn at(&self, v: u64) -> &T {
        &self.palette[self.choice[v as usize] as usize]
    }

    fn validate(&self) -> Result<(), String> {
        if self.use_bits > MAX_USE {
            return Err(format!("use {} above {MAX_USE}", self.use_bits));
        }
        if self.choice.len() != 1usize << self.use_bits {
            return Err(format!("{} entries for use {}", self.choice.len(), self.use_bits));
        }
        if self.choice.iter().any(|&c| c as usize >= self.palette.len()) {
            return Err("palette index out of range".into());
        }
        Ok(())
    }
}

/// `Φ(·; n)` for `n = 0..=horizon`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Functional<T> {
    name: String,
    tables: Vec<DecisionTable<T>>,
}

/// String-set valued functional: `Φ(x; n) ⊆ 2^n`.
pub type TotalFunctional = Functional<BTreeSet<BitString>>;
/// Integer valued functional, used for thresholds `Θ` and orders `Ψ`.
pub type NumericFunctional = Functional<i64>;

impl<T: Clone + Ord> Functional<T> {
    pub fn new(name: impl Into<String>, tables: Vec<DecisionTable<T>>) -> Self {
        Functional {
            name: name.into(),
            tables,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest parameter with a table.
    pub fn horizon(&self) -> usize {
        self.tables.len().saturating_sub(1)
    }

    pub fn table(&self, n: usize) -> Option<&DecisionTable<T>> {
        self.tables.get(n)
    }

    pub fn tables(&self) -> &[DecisionTable<T>] {
        &self.tables
    }

    pub fn use_bound(&self, n: usize) -> Option<usize> {
        self.tables.get(n).map(|t| t.use_bits)
    }

    /// Common refinement depth `max_n u(n)`.
    pub fn max_use(&self) -> usize {
        self.tables.iter().map(|t| t.use_bits).max().unwrap_or(0)
    }

    /// `Φ(x; n)`, reading the first `u(n)` bits of `x`. `None` past the horizon
    /// or when `x` is shorter than the use.
    pub fn output(&self, n: usize, x: &BitString) -> Option<&T> {
        let t = self.tables.get(n)?;
        if x.len() < t.use_bits {
            return None;
        }
        Some(t.at(x.prefix(t.use_bits).to_u64().expect("use at most 20 bits")))
    }

    /// Palette index of `Φ(x; n)` where `x` is given by its first `depth` bits as `v`.
    pub fn choice_at_depth(&self, n: usize, depth: usize, v: u64) -> u32 {
        let t = &self.tables[n];
        t.choice_at(v >> (depth - t.use_bits))
    }

    pub fn output_at_depth(&self, n: usize, depth: usize, v: u64) -> &T {
        let t = &self.tables[n];
        t.at(v >> (depth - t.use_bits))
    }

    /// Same tables, outputs transformed by `f(n, Φ(x; n))`.
    pub fn map<S: Clone + Ord>(&self, name: impl Into<String>, mut f: impl FnMut(usize, &T) -> S) -> Functional<S> {
        let tables = self
            .tables
            .iter()
            .enumerate()
            .map(|(n, t)| DecisionTable {
                use_bits: t.use_bits,
                palette: t.palette.iter().map(|v| f(n, v)).collect(),
                choice: t.choice.clone(),
            })
            .collect();
        Functional {
            name: name.into(),
            tables,
        }
    }

    /// Oracle prefixes (of length `u(n)`) whose output satisfies `pred`, with the exact measure.
    pub fn preimage(&self, n: usize, mut pred: impl FnMut(&T) -> bool) -> Result<(Dyadic, ClopenSet), FunctionalError> {
        let t = self.tables.get(n).ok_or(FunctionalError::Horizon {
            n,
            horizon: self.horizon(),
        })?;
        if t.use_bits > MAX_USE {
            return Err(FunctionalError::UseBound {
                n,
                used: t.use_bits,
                max: MAX_USE,
            });
        }
        let keep: Vec<bool> = t.palette.iter().map(&mut pred).collect();
        let hits: Vec<u64> = (0..(1u64 << t.use_bits)).filter(|&v| keep[t.choice_at(v) as usize]).collect();
        let measure = Dyadic::scaled(hits.len() as u64, t.use_bits as u64);
        Ok((measure, prefix_set(t.use_bits, hits)))
    }

    pub(crate) fn check(&self) -> Result<(), FunctionalError> {
        for (n, t) in self.tables.iter().enumerate() {
            t.validate().map_err(|msg| FunctionalError::BadTable { n, msg })?;
        }
        Ok(())
    }
}

impl TotalFunctional {
    /// Checks that every output at parameter `n` is a set of length-`n` strings.
    pub fn validate(&self) -> Result<(), FunctionalError> {
        self.check()?;
        for (n, t) in self.tables.iter().enumerate() {
            if let Some(s) = t.palette.iter().flatten().find(|s| s.len() != n) {
                return Err(FunctionalError::BadTable {
                    n,
                    msg: format!("output {s:?} has the wrong length"),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let f: TotalFunctional = serde_json::from_str(text).map_err(|e| e.to_string())?;
        f.validate().map_err(|e| e.to_string())?;
        Ok(f)
    }

    /// `Φ(x; n) = {x↾n}` for `n ≤ horizon`.
    pub fn identity_prefix(horizon: usize) -> Self {
        let tables = (0..=horizon)
            .map(|n| DecisionTable::from_fn(n, |x| BTreeSet::from([x.clone()])))
            .collect();
        Functional::new("identity-prefix", tables)
    }

    /// Oracle-independent outputs `outputs[n]`.
    pub fn constant(outputs: Vec<BTreeSet<BitString>>) -> Self {
        Functional::new("constant", outputs.into_iter().map(DecisionTable::constant).collect())
    }

    /// `Φ(x; n) = {σ*↾n}` for `n ≤ |σ*|`.
    pub fn constant_string(sigma: &BitString) -> Self {
        Self::constant((0..=sigma.len()).map(|n| BTreeSet::from([sigma.prefix(n)])).collect())
    }

    /// A seeded random table family: at each `n` a use in `[0, max_use]`, a palette
    /// of one to four string sets of assorted sizes, and a random choice per prefix.
    pub fn random(seed: u64, horizon: usize, max_use: usize) -> Self {
        assert!(max_use <= MAX_USE);
        let mut o = OracleStream::substream(seed, 0x5eed_0000);
        const SIZES: [usize; 8] = [1, 1, 2, 4, 8, 1, 16, 0];
        let mut tables = Vec::with_capacity(horizon + 1);
        for n in 0..=horizon {
            let use_bits = (draw(&mut o, 5) % (max_use as u64 + 1)) as usize;
            let palette_len = 1 + draw(&mut o, 2) as usize;
            let mut palette = Vec::with_capacity(palette_len);
            for _ in 0..palette_len {
                let size = SIZES[draw(&mut o, 3) as usize].min(1usize << n.min(20));
                let mut set = BTreeSet::new();
                while set.len() < size {
                    set.insert(o.draw_bits(n).expect("seeded stream"));
                }
                palette.push(set);
            }
            let choice = (0..(1u64 << use_bits))
                .map(|_| (draw(&mut o, 2) % palette_len as u64) as u32)
                .collect();
            tables.push(DecisionTable::new(use_bits, palette, choice).expect("well formed"));
        }
        Functional::new(format!("random-{seed}"), tables)
    }
}

fn draw(o: &mut OracleStream, width: usize) -> u64 {
    o.draw(width).expect("seeded stream")
}

/// The clopen set generated by the length-`u` prefixes with the given values.
pub fn prefix_set(u: usize, values: impl IntoIterator<Item = u64>) -> ClopenSet {
    ClopenSet::from_generators(values.into_iter().map(|v| BitString::from_value(v, u)))
}

/// Exact measure and clopen set of `{x : pred(Φ(x; n))}`.
pub fn preimage_measure<T: Clone + Ord>(
    phi: &Functional<T>,
    pred: impl FnMut(&T) -> bool,
    n: usize,
) -> Result<(Dyadic, ClopenSet), FunctionalError> {
    phi.preimage(n, pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::bits;
    use proptest::prelude::*;

    #[test]
    fn named_preimages() {
        let id = TotalFunctional::identity_prefix(6);
        assert_eq!(preimage_measure(&id, |_| true, 5).unwrap().0, Dyadic::one());
        let s0 = bits("10110");
        let (m, set) = preimage_measure(&id, |out| out.contains(&s0), 5).unwrap();
        assert_eq!(m, Dyadic::pow2(-5));
        assert_eq!(set, ClopenSet::cylinder(s0.clone()));
        let k = TotalFunctional::constant_string(&s0);
        assert!(preimage_measure(&k, |out| !out.contains(&bits("101")), 3).unwrap().0.is_zero());
        assert!(matches!(
            preimage_measure(&k, |_| true, 9),
            Err(FunctionalError::Horizon { n: 9, horizon: 5 })
        ));
    }

    #[test]
    fn output_lookup_and_refinement() {
        let f = TotalFunctional::random(3, 6, 8);
        f.validate().unwrap();
        let u = f.max_use();
        let x = bits("1101001110110");
        for n in 0..=6 {
            let v = x.prefix(u).to_u64().unwrap();
            assert_eq!(f.output(n, &x), Some(f.output_at_depth(n, u, v)));
        }
        assert_eq!(TotalFunctional::random(3, 6, 8), f);
        let back = TotalFunctional::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let mut f = TotalFunctional::constant(vec![BTreeSet::new(), BTreeSet::from([bits("01")])]);
        assert!(f.validate().is_err());
        f = TotalFunctional::constant(vec![BTreeSet::new()]);
        let mut json: serde_json::Value = serde_json::from_str(&f.to_json()).unwrap();
        json["tables"][0]["choice"] = serde_json::json!([3]);
        assert!(TotalFunctional::from_json(&json.to_string()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Preimage measures agree with a naive count over full-depth prefixes.
        #[test]
        fn preimage_matches_naive_count(seed in any::<u64>(), n in 0usize..=6, pick in any::<u64>()) {
            let f = TotalFunctional::random(seed, 6, 10);
            let target = BitString::from_value(pick % (1 << n), n);
            let (m, set) = f.preimage(n, |out| out.contains(&target)).unwrap();
            let u = f.max_use();
            let mut count = 0u64;
            for v in 0..(1u64 << u) {
                let x = BitString::from_value(v, u);
                let hit = f.output(n, &x).unwrap().contains(&target);
                prop_assert_eq!(hit, set.covers(&x));
                count += hit as u64;
            }
            prop_assert_eq!(m.clone(), Dyadic::scaled(count, u as u64));
            prop_assert_eq!(set.measure(), m);
        }
    }
}
