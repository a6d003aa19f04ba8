//! The command matrix shared by the golden and acceptance targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use treelab_cli::{run, run_into, Status};

pub const FIX: &str = "tests/fixtures";

pub fn cases() -> Vec<(&'static str, Vec<String>, Status)> {
    let m = format!("{FIX}/machine.json");
    let raw: Vec<(&str, String, Status)> = vec![
        ("fat-set", "construct fat-set --n-max 10 --seed 7".into(), Status::Ok),
        ("fat-set-csv", "construct fat-set --n-max 6 --seed 1 --format csv".into(), Status::Ok),
        ("perfect-tree", "construct perfect-tree --levels 3 --seed 3".into(), Status::Ok),
        ("perfect-tree-table", "construct perfect-tree --levels 3 --seed 1 --schedule table:0,1,3,5 --b 2 --format csv".into(), Status::Ok),
        ("shattered-ceil", "construct shattered-tree --g ceil(n/2) --depth 5".into(), Status::Ok),
        ("shattered-table", format!("construct shattered-tree --g @{FIX}/gtable.txt --depth 8 --seed 5 --format csv"), Status::Ok),
        ("shattered-machine", format!("construct shattered-tree --g min(n,log(n)+1) --depth 10 --x 10110010111 --machine-state {m}"), Status::Ok),
        ("positive-empty", "construct positive-tree --depth 6".into(), Status::Ok),
        ("positive-machine", format!("construct positive-tree --k 1 --depth 12 --k-max 4 --machine-state {m}"), Status::Ok),
        ("positive-pairs", format!("construct positive-tree --k 2 --depth 5 --pairs {FIX}/pairs.txt"), Status::Ok),
        ("deficiency-constant", "adversary deficiency --phi constant:10110010".into(), Status::Ok),
        ("deficiency-budget0", "adversary deficiency --phi identity --budget 0".into(), Status::Ok),
        ("deficiency-file", format!("adversary deficiency --phi {FIX}/phi.json --k-max 3"), Status::Ok),
        ("deficiency-corpus", "adversary deficiency --corpus 4 --seed 11 --horizon 7 --max-use 10".into(), Status::Ok),
        ("deficiency-machine", format!("adversary deficiency --seed 6 --horizon 8 --max-use 10 --machine-state {m}"), Status::Ok),
        ("threshold-file", format!("adversary threshold --phi {FIX}/phi.json --theta {FIX}/theta.json"), Status::Ok),
        ("threshold-const", "adversary threshold --phi constant:0110100 --theta const:0".into(), Status::Ok),
        ("threshold-corpus", "adversary threshold --corpus 3 --seed 2 --horizon 6 --max-use 9".into(), Status::Ok),
        ("profile-path", format!("profile {FIX}/path.txt"), Status::Ok),
        ("profile-machine", format!("profile {FIX}/path.txt --machine-state {m} --format json"), Status::Ok),
        ("game-empty", "game --rounds 3".into(), Status::Ok),
        ("game-basic", "game --rounds 1 --class basic:11".into(), Status::Ok),
        ("game-exclusion", format!("game --rounds 4 --class {FIX}/exclusion.txt --class confined:0110 --seed 9"), Status::Ok),
        ("game-seeded", "game --rounds 6 --seeded 6 --seed 4".into(), Status::Ok),
        ("game-unkillable", "game --rounds 2 --class basic:λ".into(), Status::StrategyFailure),
    ];
    raw.into_iter()
        .map(|(name, line, status)| (name, line.split_whitespace().map(String::from).collect(), status))
        .collect()
}

pub fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treelab-matrix-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

pub fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_file() {
            out.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
        }
    }
    out
}

pub fn compare_with_golden(name: &str, produced: &Path) {
    let golden = Path::new("tests/golden").join(name);
    let got = files(produced);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let _ = fs::remove_dir_all(&golden);
        fs::create_dir_all(&golden).unwrap();
        for (f, bytes) in &got {
            fs::write(golden.join(f), bytes).unwrap();
        }
        return;
    }
    assert!(golden.is_dir(), "{name}: no golden directory; run with UPDATE_GOLDEN=1");
    let want = files(&golden);
    assert_eq!(
        got.keys().collect::<Vec<_>>(),
        want.keys().collect::<Vec<_>>(),
        "{name}: file sets differ"
    );
    for (f, bytes) in &want {
        assert!(got[f] == *bytes, "{name}/{f} differs from its golden copy");
    }
}

/// Run every case, compare with its golden copy, replay it from its manifest
/// and compare again. Returns the number of cases.
pub fn check_matrix() -> usize {
    let cases = cases();
    for (name, args, status) in &cases {
        let dir = scratch(name);
        let outcome = run_into(args, &dir).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(outcome.status, *status, "{name}");
        compare_with_golden(name, &dir);

        let again = scratch(&format!("{name}-replay"));
        let manifest = dir.join("manifest.json").display().to_string();
        let replay: Vec<String> = vec!["replay".into(), manifest, "--out".into(), again.display().to_string()];
        let r = run(&replay).unwrap_or_else(|e| panic!("{name} replay: {e}"));
        assert_eq!(r.status, Status::Ok, "{name} replay: {}", r.summary);
        assert_eq!(r.summary["identical"], true, "{name}");
        assert_eq!(files(&dir), files(&again), "{name}: replay differs");
        fs::remove_dir_all(&dir).unwrap();
        fs::remove_dir_all(&again).unwrap();
    }
    cases.len()
}
