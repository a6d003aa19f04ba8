use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use treelab::adversaries::{run_deficiency_adversary, run_threshold_adversary, NumericFunctional};
use treelab::classes_games::{
    run_game, seeded_classes, seeded_opponent, verify, ConfinedClass, GameClass, GameConfig, WidthCeilingClass,
};
use treelab::constructions::{
    d_set_enumerate, deficiency_transfer_check, fat_set, fat_solovay_component, positive_tree, positive_witness,
    sample_perfect_tree_step, shattered_tree, tree_condition_check, wgt, ConditionParams, Schedule,
    TreeSamplerState, WeightedPairSet,
};
use treelab::functional::{DecisionTable, Functional, TotalFunctional, MAX_USE};
use treelab::order::flog2;
use treelab::trees::{tree_prefix_decode, BasicOpenClass, ExplicitExclusion, LevelTree};
use treelab::{BitString, OracleStream, ReferenceMachine};

use crate::order_expr::order_table;
use crate::output::{json_text, sha256_hex, Manifest, RunOutput, MANIFEST};
use crate::{Cli, CliError, Command, Format, Global, Outcome, Status};

/// Closure files are written only up to this top length.
const MAX_CLOSURE_LEN: u64 = 256;

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstructArgs {
    /// Levels 2..=n-max of the fat incompressible set
    FatSet(FatSetArgs),
    /// The randomized perfect-tree sampler and its condition checks
    PerfectTree(PerfectTreeArgs),
    /// The tree shattered along an order g around a base sequence
    ShatteredTree(ShatteredArgs),
    /// The tree avoiding a weighted pair set at index k
    PositiveTree(PositiveArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct FatSetArgs {
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct PerfectTreeArgs {
    #[arg(long, alias = "depth", default_value_t = 4)]
    pub levels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `square` for q(n) = n², or `table:q0,q1,...`
    #[arg(long, default_value = "square")]
    pub schedule: String,
    /// Additive constant of the second condition
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub b: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct ShatteredArgs {
    /// Order expression, `table:...` or `@file`
    #[arg(long)]
    pub g: String,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Seeds the base sequence when `--x` is absent
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base sequence prefix, at least `depth` bits
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct PositiveArgs {
    #[arg(long, default_value_t = 1)]
    pub k: u64,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Pair file (`n m` per line); otherwise the set D of the machine state
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Largest k for D and for the witness search
    #[arg(long, default_value_t = 4)]
    pub k_max: u64,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversaryArgs {
    /// Make every heavy deficiency class pay with a short description
    Deficiency(DeficiencyArgs),
    /// Compress strings whose threshold classes are too heavy inside G
    Threshold(ThresholdArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PhiArgs {
    /// `random`, `identity`, `constant:BITS` or a functional JSON file
    #[arg(long, default_value = "random")]
    pub phi: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub horizon: usize,
    #[arg(long, default_value_t = 8)]
    pub max_use: usize,
    /// Number of random functionals, seeded `seed, seed+1, ...`
    #[arg(long, default_value_t = 1)]
    pub corpus: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct DeficiencyArgs {
    #[command(flatten)]
    pub phi: PhiArgs,
    #[arg(long, default_value_t = 256)]
    pub budget: usize,
    #[arg(long, default_value_t = 4)]
    pub k_max: u64,
    /// Longest σ in the bound report [default: min(horizon, 8)]
    #[arg(long)]
    pub len_max: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub phi: PhiArgs,
    #[arg(long, default_value_t = 256)]
    pub budget: usize,
    /// `log-size` (⌊log₂|Φ(x;n)|⌋), `const:P` or a numeric functional JSON file
    #[arg(long, default_value = "log-size", allow_hyphen_values = true)]
    pub theta: String,
}

#[derive(Args, Debug, Serialize)]
pub struct ProfileArgs {
    /// Tree file in the `level n:` format
    pub file: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GameArgs {
    /// Exclusion file, `basic:CODE`, `confined:PATTERN` or `ceiling:BASE,SLOPE`; repeatable
    #[arg(long)]
    pub class: Vec<String>,
    /// Seeded structural classes appended after the explicit ones
    #[arg(long, default_value_t = 0)]
    pub seeded: usize,
    #[arg(long, default_value_t = 8)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Every string of the play must have deficiency below c
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub c: i64,
    #[arg(long, default_value_t = 12)]
    pub lookahead: usize,
    #[arg(long, default_value_t = 64)]
    pub node_budget: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_machine(global: &Global) -> Result<ReferenceMachine, CliError> {
    match &global.machine_state {
        None => Ok(ReferenceMachine::new()),
        Some(p) => Ok(ReferenceMachine::from_json(&read_input(p)?)?),
    }
}

fn params<T: Serialize>(global: &Global, args: &T) -> serde_json::Value {
    let mut v = serde_json::to_value(args).expect("serializable arguments");
    if let serde_json::Value::Object(m) = &mut v {
        m.insert("machine_state".into(), serde_json::to_value(&global.machine_state).expect("path"));
        m.insert("format".into(), serde_json::to_value(global.format).expect("format"));
    }
    v
}

pub(crate) fn execute(cli: Cli, argv: Vec<String>, out: &Path) -> Result<Outcome, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Replay(a) => replay(a, out, g.out.is_some()),
        Command::Profile(a) => {
            let machine = load_machine(g)?;
            let run = RunOutput::new(out, "profile", argv, params(g, a), None, &machine, g.format.unwrap_or(Format::Csv))?;
            profile(a, &machine, run)
        }
        Command::Construct(c) => {
            let machine = load_machine(g)?;
            let (name, seed) = match c {
                ConstructArgs::FatSet(a) => ("construct fat-set", Some(a.seed)),
                ConstructArgs::PerfectTree(a) => ("construct perfect-tree", Some(a.seed)),
                ConstructArgs::ShatteredTree(a) => ("construct shattered-tree", a.x.is_none().then_some(a.seed)),
                ConstructArgs::PositiveTree(_) => ("construct positive-tree", None),
            };
            let run = RunOutput::new(out, name, argv, params(g, c), seed, &machine, g.format.unwrap_or(Format::Json))?;
            match c {
                ConstructArgs::FatSet(a) => construct_fat(a, &machine, run),
                ConstructArgs::PerfectTree(a) => construct_perfect(a, &machine, run),
                ConstructArgs::ShatteredTree(a) => construct_shattered(a, &machine, run),
                ConstructArgs::PositiveTree(a) => construct_positive(a, &machine, run),
            }
        }
        Command::Adversary(c) => {
            let machine = load_machine(g)?;
            let (name, seed) = match c {
                AdversaryArgs::Deficiency(a) => ("adversary deficiency", a.phi.seed),
                AdversaryArgs::Threshold(a) => ("adversary threshold", a.phi.seed),
            };
            let run = RunOutput::new(out, name, argv, params(g, c), Some(seed), &machine, g.format.unwrap_or(Format::Json))?;
            match c {
                AdversaryArgs::Deficiency(a) => deficiency(a, &machine, run),
                AdversaryArgs::Threshold(a) => threshold(a, &machine, run),
            }
        }
        Command::Game(a) => {
            let machine = load_machine(g)?;
            let run = RunOutput::new(out, "game", argv, params(g, a), Some(a.seed), &machine, g.format.unwrap_or(Format::Json))?;
            game(a, &machine, run)
        }
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Ok
    } else {
        Status::BoundViolation
    }
}

fn construct_fat(a: &FatSetArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let state = fat_set(a.seed, a.n_max)?;
    run.write("fat-set.txt", state.to_text())?;
    let rows = state.fatness_rows();
    run.rows("fatness", &rows)?;
    run.result("draws", state.levels.iter().map(|l| l.bits_used).sum::<u64>());
    run.result("rejections", state.levels.iter().map(|l| l.rejections).sum::<u64>());
    for n in (2..=3).filter(|&n| n <= a.n_max) {
        let comp = fat_solovay_component(n, machine)?;
        run.measure(&format!("solovay_{n}"), &comp.measure);
        run.measure(&format!("solovay_{n}_length"), &comp.length_measure);
        run.measure(&format!("solovay_{n}_string"), &comp.string_measure);
    }
    let ok = rows.iter().all(|r| r.ok);
    run.result("fatness_ok", ok);
    run.finish(status(ok))
}

fn parse_schedule(spec: &str) -> Result<Schedule, CliError> {
    if spec == "square" {
        return Ok(Schedule::Square);
    }
    let rest = spec
        .strip_prefix("table:")
        .ok_or_else(|| CliError::Parse(format!("schedule {spec:?}: expected `square` or `table:...`")))?;
    let values = rest
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|e| CliError::Parse(format!("schedule entry {t:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Schedule::Table(values))
}

#[derive(Serialize)]
struct ConditionRow {
    n: usize,
    ell: u64,
    drawn: u64,
    clamped: bool,
    width: usize,
    a: bool,
    b: bool,
}

fn construct_perfect(a: &PerfectTreeArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let schedule = parse_schedule(&a.schedule)?;
    let mut state = TreeSamplerState::new();
    let mut oracle = OracleStream::new(a.seed);
    for _ in 0..a.levels {
        sample_perfect_tree_step(&mut state, &mut oracle, &schedule)?;
    }
    run.write("sampler.txt", state.to_text())?;
    let cond = ConditionParams {
        b: a.b,
        schedule: schedule.clone(),
    };
    let mut rows = Vec::new();
    for n in 1..=state.top() {
        let (ca, cb) = tree_condition_check(&state, n, &cond, machine)?;
        let level = state.level(n).expect("sampled level");
        rows.push(ConditionRow {
            n,
            ell: level.ell,
            drawn: level.drawn,
            clamped: level.clamped(),
            width: level.strings.len(),
            a: ca,
            b: cb,
        });
    }
    run.rows("conditions", &rows)?;
    let top = state.levels.last().expect("base level");
    if top.ell <= MAX_CLOSURE_LEN {
        run.write("tree.txt", LevelTree::closure(&top.strings, top.ell as usize).to_text())?;
    }
    run.result("draws", oracle.position());
    let branching = state.check_branching();
    run.result("branching_ok", branching.is_ok());
    if let Err(msg) = &branching {
        run.result("branching_failure", msg);
    }
    run.finish(status(branching.is_ok()))
}

#[derive(Serialize)]
struct ShatterRow {
    level: usize,
    width: usize,
    g: u64,
    log_width: u32,
    deficiency: i64,
    base_deficiency: i64,
    slack: i64,
}

fn construct_shattered(a: &ShatteredArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let g = order_table(&a.g, a.depth + 1).map_err(CliError::Parse)?;
    let x = match &a.x {
        Some(text) => {
            let x: BitString = text.parse().map_err(|e| CliError::Parse(format!("--x: {e}")))?;
            if x.len() < a.depth {
                return Err(CliError::Parse(format!("--x has {} bits, depth is {}", x.len(), a.depth)));
            }
            x
        }
        None => OracleStream::new(a.seed)
            .draw_bits(a.depth)
            .map_err(|e| CliError::Guard(e.to_string()))?,
    };
    let tree = shattered_tree(&x, &g, a.depth)?;
    run.write("tree.txt", tree.as_level_tree().to_text())?;
    let mut rows = Vec::new();
    for k in 0..=a.depth {
        let t = deficiency_transfer_check(&x, &tree, k, machine)?;
        let width = tree.as_level_tree().width(k);
        rows.push(ShatterRow {
            level: k,
            width,
            g: g.get(k).expect("table covers the depth"),
            log_width: width.trailing_zeros(),
            deficiency: t.lhs,
            base_deficiency: machine.deficiency(&x.prefix(k)),
            slack: t.slack,
        });
    }
    run.rows("widths", &rows)?;
    run.result("x", x.prefix(a.depth));
    run.result("max_slack", rows.iter().map(|r| r.slack).max());
    let ok = rows.iter().all(|r| r.log_width as u64 == r.g);
    run.result("widths_ok", ok);
    run.finish(status(ok))
}

fn construct_positive(a: &PositiveArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let x = match &a.pairs {
        Some(p) => WeightedPairSet::parse_text(&read_input(p)?).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?,
        None => d_set_enumerate(machine, a.depth, a.k_max),
    };
    let pt = positive_tree(&x, a.k, a.depth)?;
    run.write("tree.txt", pt.tree.to_text())?;
    run.write("pairs.txt", x.to_text())?;
    let weight = wgt(&x);
    run.measure("wgt", &weight);
    run.measure("complement", &pt.complement);
    run.result("pairs", x.len());
    run.result("banned", pt.banned.iter().collect::<Vec<_>>());
    run.result("witness", positive_witness(&x, a.k_max, a.depth)?);
    let ok = pt.complement <= weight;
    run.result("complement_ok", ok);
    run.finish(status(ok))
}

fn functionals(a: &PhiArgs) -> Result<Vec<TotalFunctional>, CliError> {
    if a.max_use > MAX_USE {
        return Err(CliError::Guard(format!("use {} above the limit {MAX_USE}", a.max_use)));
    }
    if a.corpus == 0 {
        return Err(CliError::Parse("--corpus must be at least 1".into()));
    }
    if a.corpus > 1 && a.phi != "random" {
        return Err(CliError::Parse("--corpus needs --phi random".into()));
    }
    let one = match a.phi.as_str() {
        "random" => return Ok((0..a.corpus as u64).map(|i| TotalFunctional::random(a.seed + i, a.horizon, a.max_use)).collect()),
        "identity" => {
            if a.horizon > MAX_USE {
                return Err(CliError::Guard(format!("identity uses {} bits, above {MAX_USE}", a.horizon)));
            }
            TotalFunctional::identity_prefix(a.horizon)
        }
        s => match s.strip_prefix("constant:") {
            Some(bits) => {
                let sigma: BitString = bits.parse().map_err(|e| CliError::Parse(format!("--phi: {e}")))?;
                TotalFunctional::constant_string(&sigma)
            }
            None => TotalFunctional::from_json(&read_input(Path::new(s))?).map_err(|e| CliError::Parse(format!("{s}: {e}")))?,
        },
    };
    Ok(vec![one])
}

#[derive(Deserialize)]
struct TableFile {
    use_bits: usize,
    palette: Vec<i64>,
    choice: Vec<u32>,
}

#[derive(Deserialize)]
struct NumericFile {
    name: String,
    tables: Vec<TableFile>,
}

fn theta_for(spec: &str, phi: &TotalFunctional) -> Result<NumericFunctional, CliError> {
    if spec == "log-size" {
        return Ok(phi.map("log-size", |_, set| flog2(set.len() as u64) as i64));
    }
    if let Some(p) = spec.strip_prefix("const:") {
        let p: i64 = p.parse().map_err(|e| CliError::Parse(format!("--theta {spec:?}: {e}")))?;
        return Ok(phi.map(format!("const-{p}"), move |_, _| p));
    }
    let f: NumericFile =
        serde_json::from_str(&read_input(Path::new(spec))?).map_err(|e| CliError::Parse(format!("{spec}: {e}")))?;
    let tables = f
        .tables
        .into_iter()
        .enumerate()
        .map(|(n, t)| DecisionTable::new(t.use_bits, t.palette, t.choice).map_err(|e| CliError::Parse(format!("{spec}: table {n}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Functional::new(f.name, tables))
}

fn deficiency(a: &DeficiencyArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let phis = functionals(&a.phi)?;
    let mut logs = Vec::new();
    let mut reports = Vec::new();
    let mut all_ok = true;
    let mut last = None;
    for phi in &phis {
        let r = run_deficiency_adversary(phi, machine.clone(), a.k_max, a.budget)?;
        let len_max = a.len_max.unwrap_or(phi.horizon().min(8));
        let report = r.report(phi, len_max, a.k_max);
        let bounds_ok = report.weight_ok
            && report.disjoint_ok
            && report.rows.iter().all(|row| row.ok)
            && report.per_k.iter().all(|w| w.ok);
        all_ok &= bounds_ok;
        logs.push(serde_json::json!({
            "functional": phi.name(),
            "stages": r.stages,
            "converged": r.converged,
            "actions": r.log,
        }));
        reports.push(serde_json::json!({
            "functional": phi.name(),
            "bounds_ok": bounds_ok,
            "machine_digest": crate::output::machine_digest(&r.state.machine),
            "report": report,
        }));
        last = Some(r.state.machine);
    }
    run.write("log.json", json_text(&logs))?;
    run.write("report.json", json_text(&reports))?;
    if phis.len() == 1 {
        let m = last.expect("one run");
        run.write("machine.json", m.to_json())?;
    }
    run.result("runs", phis.len());
    run.result("actions", logs.iter().map(|l| l["actions"].as_array().map_or(0, Vec::len)).sum::<usize>());
    run.result("bounds_ok", all_ok);
    run.finish(status(all_ok))
}

fn threshold(a: &ThresholdArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let phis = functionals(&a.phi)?;
    let mut logs = Vec::new();
    let mut reports = Vec::new();
    let mut all_ok = true;
    let mut last = None;
    for phi in &phis {
        let theta = theta_for(&a.theta, phi)?;
        let r = run_threshold_adversary(phi, &theta, machine.clone(), a.budget)?;
        let report = r.report(phi, &theta)?;
        let bounds_ok = report.weight_ok && report.accounting_ok && report.rows.iter().all(|row| row.ok);
        all_ok &= bounds_ok;
        logs.push(serde_json::json!({
            "functional": phi.name(),
            "theta": theta.name(),
            "rounds": r.rounds,
            "converged": r.converged,
            "actions": r.log,
        }));
        reports.push(serde_json::json!({
            "functional": phi.name(),
            "bounds_ok": bounds_ok,
            "machine_digest": crate::output::machine_digest(&r.state.machine),
            "report": report,
        }));
        last = Some(r.state.machine);
    }
    run.write("log.json", json_text(&logs))?;
    run.write("report.json", json_text(&reports))?;
    if phis.len() == 1 {
        let m = last.expect("one run");
        run.write("machine.json", m.to_json())?;
    }
    run.result("runs", phis.len());
    run.result("actions", logs.iter().map(|l| l["actions"].as_array().map_or(0, Vec::len)).sum::<usize>());
    run.result("bounds_ok", all_ok);
    run.finish(status(all_ok))
}

#[derive(Serialize)]
struct ProfileRow {
    level: usize,
    width: usize,
    log_width: Option<u64>,
    deficiency: Option<i64>,
    log_width_minus_deficiency: Option<i64>,
}

fn profile(a: &ProfileArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let text = read_input(&a.file)?;
    let tree = LevelTree::parse_text(&text).map_err(|e| CliError::Parse(format!("{}: {e}", a.file.display())))?;
    let rows: Vec<ProfileRow> = tree
        .levels()
        .iter()
        .enumerate()
        .map(|(level, strings)| {
            let width = strings.len();
            let log_width = (width > 0).then(|| flog2(width as u64));
            let deficiency = machine.set_deficiency(strings.iter());
            ProfileRow {
                level,
                width,
                log_width,
                deficiency,
                log_width_minus_deficiency: log_width.zip(deficiency).map(|(l, d)| l as i64 - d),
            }
        })
        .collect();
    run.rows("profile", &rows)?;
    run.result("input_digest", sha256_hex(text.as_bytes()));
    run.result("levels", rows.len());
    run.finish(Status::Ok)
}

fn parse_class(spec: &str) -> Result<Box<dyn GameClass>, CliError> {
    let bad = |msg: String| CliError::Parse(format!("--class {spec:?}: {msg}"));
    if let Some(code) = spec.strip_prefix("basic:") {
        let code: BitString = code.parse().map_err(|e| bad(format!("{e}")))?;
        return Ok(Box::new(BasicOpenClass(tree_prefix_decode(&code).map_err(|e| bad(e.to_string()))?)));
    }
    if let Some(pattern) = spec.strip_prefix("confined:") {
        let pattern: BitString = pattern.parse().map_err(|e| bad(format!("{e}")))?;
        if pattern.is_empty() || pattern.len() > 64 {
            return Err(bad("pattern length must be in 1..=64".into()));
        }
        return Ok(Box::new(ConfinedClass { pattern }));
    }
    if let Some(rest) = spec.strip_prefix("ceiling:") {
        let (base, slope) = rest.split_once(',').ok_or_else(|| bad("expected BASE,SLOPE".into()))?;
        let base = base.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let slope = slope.trim().parse().map_err(|e| bad(format!("{e}")))?;
        return Ok(Box::new(WidthCeilingClass { base, slope }));
    }
    let text = read_input(Path::new(spec))?;
    Ok(Box::new(ExplicitExclusion::parse_text(&text).map_err(|e| bad(e.to_string()))?))
}

fn game_classes(a: &GameArgs) -> Result<Vec<Box<dyn GameClass>>, CliError> {
    let mut classes = a.class.iter().map(|s| parse_class(s)).collect::<Result<Vec<_>, _>>()?;
    classes.extend(seeded_classes(a.seed, a.seeded));
    Ok(classes)
}

fn game(a: &GameArgs, machine: &ReferenceMachine, mut run: RunOutput) -> Result<Outcome, CliError> {
    let config = GameConfig {
        c: a.c,
        rounds: a.rounds,
        lookahead: a.lookahead,
        node_budget: a.node_budget,
    };
    let mut opponent = seeded_opponent(a.seed);
    let transcript = run_game(config, game_classes(a)?, machine, &mut opponent)?;
    let verification = verify(&transcript, &game_classes(a)?, machine)?;
    run.write("transcript.json", json_text(&transcript))?;
    run.write("verification.json", json_text(&verification))?;
    run.result("final_depth", transcript.final_depth);
    run.result("final_width", transcript.final_leaves.len());
    run.result("verified", verification.ok);
    if let Some(f) = &transcript.failure {
        run.result("failure", f);
        return run.finish(Status::StrategyFailure);
    }
    run.finish(status(verification.ok))
}

#[derive(Serialize)]
struct FileCheck {
    file: String,
    expected: Option<String>,
    actual: Option<String>,
    identical: bool,
}

/// Re-run the manifest's command into `out` (or `replay/` next to the
/// manifest) and compare every output and the manifest itself.
fn replay(a: &ReplayArgs, out: &Path, explicit_out: bool) -> Result<Outcome, CliError> {
    let text = read_input(&a.manifest)?;
    let original: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", a.manifest.display())))?;
    let dir = if explicit_out {
        out.to_path_buf()
    } else {
        a.manifest.parent().unwrap_or(Path::new(".")).join("replay")
    };
    if original.argv.first().is_some_and(|c| c == "replay") {
        return Err(CliError::Parse("a replay has no manifest of its own".into()));
    }
    let status = crate::run_into(&original.argv, &dir)?.status;
    let fresh_text = read_input(&dir.join(MANIFEST))?;
    let fresh: Manifest = serde_json::from_str(&fresh_text).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut names: Vec<&String> = original.outputs.keys().chain(fresh.outputs.keys()).collect();
    names.sort();
    names.dedup();
    let mut checks: Vec<FileCheck> = names
        .into_iter()
        .map(|name| {
            let expected = original.outputs.get(name).cloned();
            let actual = fs::read(dir.join(name)).ok().map(|b| sha256_hex(&b));
            FileCheck {
                file: name.clone(),
                identical: expected.is_some() && expected == actual,
                expected,
                actual,
            }
        })
        .collect();
    checks.push(FileCheck {
        file: MANIFEST.into(),
        expected: Some(sha256_hex(text.as_bytes())),
        actual: Some(sha256_hex(fresh_text.as_bytes())),
        identical: text == fresh_text,
    });
    let identical = checks.iter().all(|c| c.identical);
    let summary: BTreeMap<&str, serde_json::Value> = BTreeMap::from([
        ("command", serde_json::json!(original.command)),
        ("identical", serde_json::json!(identical)),
        ("out", serde_json::json!(dir.display().to_string())),
        ("replayed_status", serde_json::json!(status)),
        ("files", serde_json::to_value(&checks).expect("serializable")),
    ]);
    Ok(Outcome {
        status: if identical { Status::Ok } else { Status::BoundViolation },
        summary: serde_json::to_value(summary).expect("serializable"),
    })
}
