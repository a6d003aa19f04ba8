use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use treelab::trees::LevelTree;

const FIX: &str = "tests/fixtures";

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treelab-cmd-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn treelab(args: &str, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treelab"))
        .args(args.split_whitespace())
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, col: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == col).unwrap();
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

fn error_of(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("error JSON on stderr")
}

#[test]
fn shattered_width_column() {
    let d = scratch("shatter");
    let o = treelab("construct shattered-tree --g ceil(n/2) --depth 5 --format csv", &d);
    assert!(o.status.success());
    assert_eq!(csv_column(&d.join("widths.csv"), "width"), ["1", "2", "2", "4", "4", "8"]);

    // the profile of the written tree reads log-width = g(n)
    let p = scratch("shatter-profile");
    let o = treelab(&format!("profile {}", d.join("tree.txt").display()), &p);
    assert!(o.status.success());
    assert_eq!(csv_column(&p.join("profile.csv"), "log_width"), ["0", "1", "1", "2", "2", "3"]);
    fs::remove_dir_all(d).unwrap();
    fs::remove_dir_all(p).unwrap();
}

#[test]
fn positive_tree_without_pairs_is_full() {
    let d = scratch("positive");
    assert!(treelab("construct positive-tree --depth 5", &d).status.success());
    let tree = LevelTree::parse_text(&fs::read_to_string(d.join("tree.txt")).unwrap()).unwrap();
    assert_eq!(tree, LevelTree::full(5));
    let m = json(d.join("manifest.json"));
    assert_eq!(m["measures"]["complement"], "0/2^0");
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn fat_set_writes_set_and_manifest() {
    let d = scratch("fat");
    assert!(treelab("construct fat-set --n-max 10 --seed 7", &d).status.success());
    let text = fs::read_to_string(d.join("fat-set.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("set ")).count(), 9);
    let m = json(d.join("manifest.json"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["params"]["n_max"], 10);
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn constant_functional_logs_one_compression() {
    let d = scratch("constant");
    assert!(treelab("adversary deficiency --phi constant:10110010", &d).status.success());
    let log = json(d.join("log.json"));
    assert_eq!(log[0]["actions"].as_array().unwrap().len(), 1);
    let report = json(d.join("report.json"));
    assert_eq!(report[0]["bounds_ok"], true);
    assert!(report[0]["report"]["rows"].as_array().unwrap().iter().all(|r| r["ok"] == true));
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn zero_budget_gives_an_empty_log() {
    let d = scratch("budget0");
    let o = treelab("adversary deficiency --phi identity --budget 0", &d);
    assert!(o.status.success());
    assert!(json(d.join("log.json"))[0]["actions"].as_array().unwrap().is_empty());
    assert_eq!(
        fs::read_to_string(d.join("machine.json")).unwrap().trim_end(),
        treelab::ReferenceMachine::new().to_json().trim_end()
    );
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn machine_state_round_trips_through_files() {
    let d = scratch("chain-a");
    assert!(treelab("adversary deficiency --phi constant:10110010", &d).status.success());
    let e = scratch("chain-b");
    let o = treelab(
        &format!("construct positive-tree --depth 8 --k-max 4 --machine-state {}", d.join("machine.json").display()),
        &e,
    );
    assert!(o.status.success());
    // σ = 10110010 is registered and deficient, so D is not empty
    assert_ne!(fs::read_to_string(e.join("pairs.txt")).unwrap(), "");
    fs::remove_dir_all(d).unwrap();
    fs::remove_dir_all(e).unwrap();
}

#[test]
fn single_path_profile_has_unit_widths() {
    let d = scratch("path");
    assert!(treelab(&format!("profile {FIX}/path.txt"), &d).status.success());
    assert_eq!(csv_column(&d.join("profile.csv"), "width"), ["1"; 5]);
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn exit_codes() {
    let d = scratch("codes");
    let empty = d.with_extension("empty");
    fs::write(&empty, "").unwrap();
    let o = treelab(&format!("profile {}", empty.display()), &d);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_of(&o)["error"], "parse");

    let bad_line = d.with_extension("bad");
    fs::write(&bad_line, "level 0:\n\nlevel 1:\n0\n012\n").unwrap();
    let o = treelab(&format!("profile {}", bad_line.display()), &d);
    assert_eq!(o.status.code(), Some(4));
    assert!(error_of(&o)["message"].as_str().unwrap().contains("line 5"));

    let o = treelab("construct fat-set --n-max 20", &d);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_of(&o)["error"], "guard");

    let o = treelab("construct shattered-tree --g n+ --depth 3", &d);
    assert_eq!(o.status.code(), Some(4));
    let o = treelab("construct shattered-tree --g 2*n --depth 3", &d);
    assert_eq!(o.status.code(), Some(4), "jumps of 2 are not a valid order");

    let o = treelab("adversary threshold --max-use 21", &d);
    assert_eq!(o.status.code(), Some(3));

    let o = treelab("game --rounds 2 --class basic:λ", &d);
    assert_eq!(o.status.code(), Some(5));
    assert!(d.join("transcript.json").exists());

    let o = treelab("frobnicate", &d);
    assert_eq!(o.status.code(), Some(4));
    fs::remove_dir_all(&d).unwrap();
    fs::remove_file(empty).unwrap();
    fs::remove_file(bad_line).unwrap();
}

#[test]
fn game_examples() {
    let d = scratch("game");
    assert!(treelab("game --rounds 3", &d).status.success());
    let t = json(d.join("transcript.json"));
    assert!(t["classes"].as_array().unwrap().is_empty());
    assert_eq!(json(d.join("verification.json"))["ok"], true);

    let e = scratch("game-basic");
    assert!(treelab("game --rounds 1 --class basic:11", &e).status.success());
    let v = json(e.join("verification.json"));
    assert_eq!(v["classes"][0]["avoided"], true);
    assert_eq!(v["ok"], true);
    fs::remove_dir_all(d).unwrap();
    fs::remove_dir_all(e).unwrap();
}

#[test]
fn out_dir_from_environment() {
    let d = scratch("env");
    let o = Command::new(env!("CARGO_BIN_EXE_treelab"))
        .args(["construct", "fat-set", "--n-max", "4"])
        .env(treelab_cli::OUT_ENV, &d)
        .output()
        .unwrap();
    assert!(o.status.success());
    let mut names: Vec<String> = fs::read_dir(&d)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    // no temporary files are left behind
    assert_eq!(names, ["fat-set.txt", "fatness.json", "manifest.json"]);
    fs::remove_dir_all(d).unwrap();
}
