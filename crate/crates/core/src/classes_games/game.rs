use std::collections::VecDeque;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitcore::{BitString, Dyadic};
use crate::machine::{literal_len, ReferenceMachine};
use crate::trees::{BasicOpenClass, ExplicitExclusion, TreeClass};

use super::density::{dense_extensions, PcApprox};
use super::{ClassError, Frontier};

/// A co-enumerated class of trees to be avoided, queried on frontiers.
pub trait GameClass {
    fn name(&self) -> String;

    /// Whether `⟦t⟧` meets the survivors at `stage`. Monotone: once false it
    /// stays false for later stages and for extensions of `t`.
    fn survives(&self, t: &Frontier, stage: u64) -> bool;

    /// Why `t` is no longer a survivor.
    fn witness(&self, t: &Frontier, stage: u64) -> String;

    /// Extensions of `t` the class itself proposes as kills.
    fn kill_candidates(&self, _t: &Frontier, _stage: u64, _kit: &MoveKit) -> Vec<Frontier> {
        Vec::new()
    }
}

/// Trees all of whose strings avoid `pattern` as a factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfinedClass {
    pub pattern: BitString,
}

fn find_factor(s: &BitString, pattern: &BitString) -> Option<usize> {
    let k = pattern.len();
    if k == 0 {
        return Some(0);
    }
    if k > s.len() {
        return None;
    }
    let target = pattern.to_u64().expect("patterns fit a word");
    let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut window = 0u64;
    for i in 0..s.len() {
        window = ((window << 1) | s.get(i) as u64) & mask;
        if i + 1 >= k && window == target {
            return Some(i + 1 - k);
        }
    }
    None
}

impl GameClass for ConfinedClass {
    fn name(&self) -> String {
        format!("avoid factor {}", self.pattern)
    }

    fn survives(&self, t: &Frontier, _stage: u64) -> bool {
        t.leaves().iter().all(|l| find_factor(l, &self.pattern).is_none())
    }

    fn witness(&self, t: &Frontier, _stage: u64) -> String {
        t.leaves()
            .iter()
            .find_map(|l| find_factor(l, &self.pattern).map(|p| format!("{} occurs at {p}", l.prefix(p + self.pattern.len()))))
            .unwrap_or_else(|| "still a survivor".into())
    }

    fn kill_candidates(&self, t: &Frontier, _stage: u64, kit: &MoveKit) -> Vec<Frontier> {
        let k = self.pattern.len();
        for host in t.leaves().iter().take(64) {
            let target = host.concat(&self.pattern);
            if !(host.len()..=target.len()).all(|n| kit.legal(&target.prefix(n))) || !kit.viable(&target) {
                continue;
            }
            let attempt = t.extend_with(|leaf| {
                if leaf == host {
                    vec![target.clone()]
                } else {
                    kit.leftmost_path(leaf, k).into_iter().collect()
                }
            });
            if let Ok(f) = attempt {
                return vec![f];
            }
        }
        Vec::new()
    }
}

/// Trees with `|T ∩ 2^n| ≤ base + ⌊n/slope⌋` at every level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WidthCeilingClass {
    pub base: u64,
    pub slope: u64,
}

impl WidthCeilingClass {
    pub fn ceiling(&self, n: usize) -> u64 {
        self.base + n as u64 / self.slope.max(1)
    }

    fn first_excess(&self, t: &Frontier) -> Option<usize> {
        (0..=t.depth()).find(|&n| t.width(n) as u64 > self.ceiling(n))
    }
}

impl GameClass for WidthCeilingClass {
    fn name(&self) -> String {
        format!("width at most {} + n/{}", self.base, self.slope.max(1))
    }

    fn survives(&self, t: &Frontier, _stage: u64) -> bool {
        self.first_excess(t).is_none()
    }

    fn witness(&self, t: &Frontier, _stage: u64) -> String {
        match self.first_excess(t) {
            Some(n) => format!("width {} > {} at level {n}", t.width(n), self.ceiling(n)),
            None => "still a survivor".into(),
        }
    }

    fn kill_candidates(&self, t: &Frontier, _stage: u64, kit: &MoveKit) -> Vec<Frontier> {
        let mut cur = t.clone();
        for _ in 0..kit.lookahead() {
            let kids: Vec<Vec<BitString>> = cur.leaves().iter().map(|l| kit.viable_children(l)).collect();
            if kids.iter().any(|k| k.is_empty()) {
                return Vec::new();
            }
            let reachable: u64 = kids.iter().map(|k| k.len() as u64).sum();
            let target = self.ceiling(cur.depth() + 1) + 1;
            if reachable >= target {
                let mut extra = target.saturating_sub(cur.leaves().len() as u64);
                let mut it = kids.into_iter();
                let next = cur.extend_with(|_| {
                    let mut k = it.next().expect("one entry per leaf");
                    if extra > 0 && k.len() == 2 {
                        extra -= 1;
                    } else {
                        k.truncate(1);
                    }
                    k
                });
                return next.into_iter().collect();
            }
            let mut it = kids.into_iter();
            match cur.extend_with(|_| it.next().expect("one entry per leaf")) {
                Ok(next) => cur = next,
                Err(_) => return Vec::new(),
            }
        }
        Vec::new()
    }
}

impl GameClass for ExplicitExclusion {
    fn name(&self) -> String {
        format!("{} staged exclusions", self.len())
    }

    fn survives(&self, t: &Frontier, stage: u64) -> bool {
        !self.excluded_by(stage).any(|e| t.extends_prefix(e))
    }

    fn witness(&self, t: &Frontier, stage: u64) -> String {
        self.excluded_by(stage)
            .position(|e| t.extends_prefix(e))
            .map_or_else(|| "still a survivor".into(), |i| format!("extends exclusion {i}"))
    }

    fn kill_candidates(&self, t: &Frontier, stage: u64, kit: &MoveKit) -> Vec<Frontier> {
        self.excluded_by(stage)
            .filter(|e| e.depth() > t.depth() && e.depth() <= t.depth() + kit.lookahead())
            .map(Frontier::from_prefix)
            .filter(|f| f.extends(t) && f.leaves().iter().all(|l| kit.viable(l)))
            .collect()
    }
}

impl GameClass for BasicOpenClass {
    fn name(&self) -> String {
        format!("basic open of depth {}", self.0.depth())
    }

    fn survives(&self, t: &Frontier, _stage: u64) -> bool {
        if t.depth() >= self.0.depth() {
            t.extends_prefix(&self.0)
        } else {
            TreeClass::survives(self, &t.to_prefix(), 0)
        }
    }

    fn witness(&self, t: &Frontier, stage: u64) -> String {
        if GameClass::survives(self, t, stage) {
            "still a survivor".into()
        } else {
            "incompatible with the basic open".into()
        }
    }
}

/// Move generation inside the incompressible part of the full tree.
#[derive(Clone, Debug)]
pub struct MoveKit {
    pc: PcApprox,
    lookahead: usize,
}

impl MoveKit {
    pub fn new(machine: &ReferenceMachine, c: i64, lookahead: usize) -> Self {
        MoveKit {
            pc: PcApprox::new(machine, c, usize::MAX),
            lookahead,
        }
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    /// Every prefix has `d̂ < c`.
    pub fn legal(&self, s: &BitString) -> bool {
        self.pc.legal(s)
    }

    /// Legal, with a positive-measure set of legal continuations.
    pub fn viable(&self, s: &BitString) -> bool {
        !self.pc.relative_measure(s).is_zero()
    }

    pub fn viable_children(&self, s: &BitString) -> Vec<BitString> {
        [false, true].into_iter().map(|b| s.child(b)).filter(|c| self.viable(c)).collect()
    }

    /// The leftmost viable extension of `s` by `k` bits.
    pub fn leftmost_path(&self, s: &BitString, k: usize) -> Option<BitString> {
        self.path(s, k, false)
    }

    fn path(&self, s: &BitString, k: usize, prefer: bool) -> Option<BitString> {
        if !self.viable(s) {
            return None;
        }
        if k == 0 {
            return Some(s.clone());
        }
        self.path(&s.child(prefer), k - 1, prefer)
            .or_else(|| self.path(&s.child(!prefer), k - 1, prefer))
    }

    /// One level, one viable child per leaf, `prefer` first.
    pub fn step(&self, t: &Frontier, prefer: bool) -> Option<Frontier> {
        t.extend_with(|l| self.path(l, 1, prefer).into_iter().collect()).ok()
    }

    /// One level, every viable child of every leaf.
    pub fn grow(&self, t: &Frontier) -> Option<Frontier> {
        t.extend_with(|l| self.viable_children(l)).ok()
    }

    /// Density extensions `τ_σ` of all leaves, then both children of each.
    pub fn density_double(&self, t: &Frontier) -> Result<(Frontier, DensitySummary), ClassError> {
        let (length, found) = dense_extensions(t.leaves(), &self.pc, t.depth() + self.lookahead)?;
        let mut loss = Dyadic::zero();
        let mut min_measure = Dyadic::one();
        for (_, m) in &found {
            loss += Dyadic::one().checked_sub(m).expect("at most 1");
            if m < &min_measure {
                min_measure = m.clone();
            }
        }
        let mut it = found.iter();
        let next = t.extend_with(|_| {
            let (tau, _) = it.next().expect("one extension per leaf");
            vec![tau.child(false), tau.child(true)]
        })?;
        if let Some(bad) = next.leaves().iter().find(|l| !self.viable(l)) {
            return Err(ClassError::NoExtension {
                sigma: bad.clone(),
                depth: t.depth() + self.lookahead,
            });
        }
        Ok((
            next,
            DensitySummary {
                length,
                threshold_denominator: 2 * t.leaves().len() as u64,
                min_measure,
                joint_lower: Dyadic::one().saturating_sub(&loss),
            },
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub length: usize,
    pub threshold_denominator: u64,
    pub min_measure: Dyadic,
    pub joint_lower: Dyadic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub class: usize,
    pub name: String,
    pub stage: u64,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub round: usize,
    pub player: u8,
    pub depth: usize,
    pub width: usize,
    pub certificate: Option<Certificate>,
    pub density: Option<DensitySummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub c: i64,
    pub rounds: usize,
    /// Levels player 1 may add while hunting a kill, and the depth of density searches.
    pub lookahead: usize,
    /// Frontiers the fallback breadth-first kill search may expand.
    pub node_budget: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            c: 0,
            rounds: 20,
            lookahead: 12,
            node_budget: 64,
        }
    }
}

pub struct GameState {
    pub frontier: Frontier,
    /// Index of the next player-1 move.
    pub round: usize,
    pub config: GameConfig,
    pub classes: Vec<Box<dyn GameClass>>,
    pub log: Vec<MoveRecord>,
    pub kit: MoveKit,
}

impl GameState {
    pub fn new(config: GameConfig, classes: Vec<Box<dyn GameClass>>, machine: &ReferenceMachine) -> Self {
        GameState {
            frontier: Frontier::root(),
            round: 0,
            kit: MoveKit::new(machine, config.c, config.lookahead),
            config,
            classes,
            log: Vec::new(),
        }
    }
}

fn kill_search(class: &dyn GameClass, start: &Frontier, stage: u64, kit: &MoveKit, budget: usize) -> Option<Frontier> {
    let limit = start.depth() + kit.lookahead();
    let mut queue = VecDeque::from([start.clone()]);
    let mut expanded = 0usize;
    while let Some(node) = queue.pop_front() {
        if expanded == budget {
            break;
        }
        expanded += 1;
        let mut cands = class.kill_candidates(&node, stage, kit);
        cands.extend([kit.step(&node, false), kit.step(&node, true), kit.grow(&node)].into_iter().flatten());
        for c in cands {
            if c.depth() <= node.depth() || c.depth() > limit || !c.leaves().iter().all(|l| kit.legal(l)) {
                continue;
            }
            if !class.survives(&c, stage) {
                return Some(c);
            }
            queue.push_back(c);
        }
    }
    None
}

/// Apply the opponent's move (none only for the opening), then move for
/// player 1: kill the class of this round at stage `round`, then branch every
/// leaf above a density extension.
pub fn banach_mazur_round(state: &mut GameState, opponent: Option<Frontier>) -> Result<MoveRecord, ClassError> {
    let round = state.round;
    match opponent {
        Some(m) => {
            if m.depth() <= state.frontier.depth() || !m.extends(&state.frontier) {
                return Err(ClassError::IllegalMove {
                    round,
                    msg: format!("depth {} move does not strictly extend the prefix", m.depth()),
                });
            }
            if let Some(bad) = m.leaves().iter().find(|l| !state.kit.legal(l)) {
                return Err(ClassError::IllegalMove {
                    round,
                    msg: format!("{bad} leaves the incompressible part"),
                });
            }
            state.log.push(MoveRecord {
                round,
                player: 2,
                depth: m.depth(),
                width: m.leaves().len(),
                certificate: None,
                density: None,
            });
            state.frontier = m;
        }
        None if round == 0 && state.log.is_empty() => {}
        None => {
            return Err(ClassError::IllegalMove {
                round,
                msg: "only the opening may skip the opponent's move".into(),
            })
        }
    }
    let stage = round as u64;
    let strategy = |msg: String| ClassError::Strategy { round, msg };
    let class = state.classes.get(round);
    let killed = match class {
        Some(class) if class.survives(&state.frontier, stage) => {
            kill_search(class.as_ref(), &state.frontier, stage, &state.kit, state.config.node_budget).ok_or_else(
                || strategy(format!("no kill of {:?} within {} levels", class.name(), state.config.lookahead)),
            )?
        }
        _ => state.frontier.clone(),
    };
    let (moved, density) = state.kit.density_double(&killed).map_err(|e| strategy(e.to_string()))?;
    let certificate = match class {
        Some(class) => {
            if class.survives(&moved, stage) {
                return Err(strategy(format!("{:?} survives the branching step", class.name())));
            }
            Some(Certificate {
                class: round,
                name: class.name(),
                stage,
                witness: class.witness(&moved, stage),
            })
        }
        None => None,
    };
    let record = MoveRecord {
        round,
        player: 1,
        depth: moved.depth(),
        width: moved.leaves().len(),
        certificate,
        density: Some(density),
    };
    state.log.push(record.clone());
    state.frontier = moved;
    state.round += 1;
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub round: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: GameConfig,
    pub classes: Vec<String>,
    pub moves: Vec<MoveRecord>,
    pub final_depth: usize,
    pub final_leaves: Vec<BitString>,
    pub failure: Option<Failure>,
}

/// Play `config.rounds` rounds. A strategy failure ends the game and is
/// recorded in the transcript; an illegal opponent move is an error.
pub fn run_game(
    config: GameConfig,
    classes: Vec<Box<dyn GameClass>>,
    machine: &ReferenceMachine,
    opponent: &mut dyn FnMut(&Frontier, &MoveKit) -> Frontier,
) -> Result<Transcript, ClassError> {
    let mut state = GameState::new(config, classes, machine);
    let mut failure = None;
    for round in 0..config.rounds {
        let reply = (round > 0).then(|| opponent(&state.frontier, &state.kit));
        match banach_mazur_round(&mut state, reply) {
            Ok(_) => {}
            Err(ClassError::Strategy { round, msg }) => {
                failure = Some(Failure { round, msg });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Transcript {
        config,
        classes: state.classes.iter().map(|c| c.name()).collect(),
        moves: state.log,
        final_depth: state.frontier.depth(),
        final_leaves: state.frontier.leaves().to_vec(),
        failure,
    })
}

/// One uniformly random viable child per leaf.
pub fn seeded_opponent(seed: u64) -> impl FnMut(&Frontier, &MoveKit) -> Frontier {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |t, kit| {
        let next = t.extend_with(|l| {
            let kids = kit.viable_children(l);
            match kids.len() {
                0 => vec![l.child(false)],
                n => vec![kids[(rng.next_u32() as usize) % n].clone()],
            }
        });
        next.expect("children extend their leaf by one bit")
    }
}

/// Alternating factor-avoidance and width-ceiling classes. The `e`-th ceiling
/// starts at most at `2^e` (capped at `2^{12}`), the width player 1 has
/// reached by round `e`.
pub fn seeded_classes(seed: u64, count: usize) -> Vec<Box<dyn GameClass>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|e| -> Box<dyn GameClass> {
            let r = rng.next_u64();
            if e % 2 == 0 {
                let len = 3 + (r % 6) as usize;
                Box::new(ConfinedClass {
                    pattern: BitString::from_value(r >> 8, len),
                })
            } else {
                let cap = 1u64 << e.min(12);
                Box::new(WidthCeilingClass {
                    base: 1 + (r % cap),
                    slope: 4 + (r >> 32) % 4,
                })
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassCheck {
    pub index: usize,
    pub name: String,
    pub stage: u64,
    pub avoided: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub classes: Vec<ClassCheck>,
    /// First string of the final prefix with `d̂ ≥ c`.
    pub violation: Option<BitString>,
    /// Logged depths strictly increase and every logged width matches the final prefix.
    pub moves_ok: bool,
    /// First player-1 move whose leaves do not all branch by the next one.
    pub doubling_failure: Option<usize>,
    pub complete: bool,
    pub ok: bool,
}

/// Recheck a transcript from its final leaves alone.
pub fn verify(
    transcript: &Transcript,
    classes: &[Box<dyn GameClass>],
    machine: &ReferenceMachine,
) -> Result<Verification, ClassError> {
    let depth = transcript.final_depth;
    let final_prefix = Frontier::from_leaves(depth, transcript.final_leaves.iter().cloned())?;
    let played: Vec<&MoveRecord> = transcript.moves.iter().filter(|m| m.player == 1).collect();

    let checks: Vec<ClassCheck> = played
        .iter()
        .filter_map(|m| {
            let class = classes.get(m.round)?;
            let stage = m.round as u64;
            Some(ClassCheck {
                index: m.round,
                name: class.name(),
                stage,
                avoided: !class.survives(&final_prefix, stage),
            })
        })
        .collect();

    let c = transcript.config.c;
    let mut violation = (0..=depth)
        .find(|&n| n as i64 - literal_len(n) as i64 >= c)
        .map(|n| final_prefix.leaves()[0].prefix(n));
    if violation.is_none() {
        let mut bad: Vec<&BitString> = machine
            .compressed()
            .map(|(s, _)| s)
            .filter(|s| machine.deficiency(s) >= c && final_prefix.contains(s))
            .collect();
        bad.sort();
        violation = bad.first().map(|s| (*s).clone());
    }

    let moves_ok = transcript.moves.windows(2).all(|w| w[0].depth < w[1].depth)
        && transcript.moves.last().is_none_or(|m| m.depth == depth)
        && transcript.moves.iter().all(|m| m.depth <= depth && final_prefix.width(m.depth) == m.width);

    // Leaves are sorted, so the leaves above a node at level `a` are a run of
    // neighbours with common prefix `≥ a`; the node branches before level `b`
    // iff the run has a neighbour pair splitting below `b`.
    let lcp: Vec<usize> = final_prefix
        .leaves()
        .windows(2)
        .map(|w| w[0].common_prefix_len(&w[1]))
        .collect();
    let mut doubling_failure = None;
    for (i, w) in played.windows(2).enumerate() {
        let (a, b) = (w[0].depth, w[1].depth);
        let mut split = false;
        let mut ok = true;
        for &l in &lcp {
            if l < a {
                ok &= split;
                split = false;
            } else if l < b {
                split = true;
            }
        }
        ok &= split;
        if !ok {
            doubling_failure = Some(i);
            break;
        }
    }

    let complete = transcript.failure.is_none() && played.len() == transcript.config.rounds;
    let ok = complete && checks.iter().all(|c| c.avoided) && violation.is_none() && moves_ok && doubling_failure.is_none();
    Ok(Verification {
        classes: checks,
        violation,
        moves_ok,
        doubling_failure,
        complete,
        ok,
    })
}
