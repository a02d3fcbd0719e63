mod common;

use std::path::Path;
use std::process::{Command, Output};

use permsec::perm::{cyclic_shifts, uniform_perm_dist, PermDist, Permutation};
use serde_json::Value;

fn permsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permsec")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn distances_command() {
    let dir = tempfile::tempdir().unwrap();
    let u4 = write(dir.path(), "u4.json", r#"{"weights": {"a": "1/4", "b": "1/4", "c": "1/4", "d": "1/4"}}"#);
    let pm = write(dir.path(), "pm.json", r#"{"weights": {"a": "1"}}"#);
    let p = write(dir.path(), "p.json", r#"{"weights": {"x": "1/4", "y": "3/4"}}"#);
    let q = write(dir.path(), "q.json", r#"{"weights": {"x": "1/2", "y": "1/2"}}"#);

    let out = permsec(&["distances", &u4, &u4]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["value"], "0/1");
    assert_eq!(json_of(&permsec(&["distances", &pm, &u4]))["value"], "3/4");
    assert_eq!(json_of(&permsec(&["distances", &p, &q, "--metric", "sep"]))["value"], "1/2");

    let bad = write(dir.path(), "bad.json", r#"{"weights": {"a": "1/3"}}"#);
    assert_eq!(permsec(&["distances", &bad, &u4]).status.code(), Some(2));
    assert_eq!(permsec(&["distances", "/nonexistent.json", &u4]).status.code(), Some(2));
}

#[test]
fn advantage_command() {
    let dir = tempfile::tempdir().unwrap();
    let u3 = write(dir.path(), "u3.json", &uniform_perm_dist(3).unwrap().to_json());
    let id = write(dir.path(), "id.json", &PermDist::point_mass(Permutation::identity(3)).to_json());
    let cyc = write(dir.path(), "cyc.json", &cyclic_shifts(3).to_json());
    for kind in ["ncpa", "cca", "sep"] {
        assert_eq!(json_of(&permsec(&["advantage", &u3, "--q", "2", "--kind", kind]))["value"], "0/1");
    }
    let tree = dir.path().join("tree.json");
    let out = permsec(&["advantage", &id, "--q", "1", "--kind", "cca", "--strategy", tree.to_str().unwrap()]);
    assert_eq!(json_of(&out)["value"], "2/3");
    let tree: Value = serde_json::from_str(&std::fs::read_to_string(tree).unwrap()).unwrap();
    assert!(tree.is_object());
    assert_eq!(json_of(&permsec(&["advantage", &cyc, "--q", "2", "--kind", "ncpa"]))["value"], "1/2");

    let big = write(dir.path(), "u6.json", &PermDist::point_mass(Permutation::identity(6)).to_json());
    assert_eq!(permsec(&["advantage", &big, "--q", "2", "--kind", "cca"]).status.code(), Some(3));
}

#[test]
fn verify_suites_pass() {
    let out = permsec(&["verify", "thm12", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["details"]["checks"], 400);
    assert_eq!(v["details"]["violations"], 0);
    assert_eq!(permsec(&["verify", "main", "--seed", "7"]).status.code(), Some(0));
    assert_eq!(permsec(&["verify", "span"]).status.code(), Some(0));
    assert_eq!(permsec(&["verify", "lemma8", "--seed", "1", "--instances", "50"]).status.code(), Some(0));
    assert_eq!(permsec(&["verify", "cor9", "--seed", "1", "--instances", "50"]).status.code(), Some(0));
    assert_eq!(permsec(&["verify", "coupling", "--seed", "1", "--runs", "2000"]).status.code(), Some(0));
}

#[test]
fn usage_and_resource_exit_codes() {
    assert_eq!(permsec(&["verify", "thm12"]).status.code(), Some(2));
    assert_eq!(permsec(&["son", "attack", "--d", "4", "--r", "3", "--q", "5"]).status.code(), Some(2));
    assert_eq!(permsec(&["son", "nonsense"]).status.code(), Some(2));
    assert_eq!(permsec(&["son", "exact", "--d", "8", "--r", "2", "--budget", "100"]).status.code(), Some(3));
    assert_eq!(permsec(&["son", "exact", "--d", "8", "--r", "18"]).status.code(), Some(3));
    assert_eq!(permsec(&["--help"]).status.code(), Some(0));
}

#[test]
fn son_bounds_command() {
    let v = json_of(&permsec(&["son", "bounds", "--d", "8", "--r", "18", "--q", "2"]));
    let thm22 = v["bounds"].as_array().unwrap().iter().find(|b| b["name"] == "thm22_lower").unwrap();
    assert_eq!(thm22["vacuous"], false);
    let csv = permsec(&["son", "bounds", "--d", "4", "--r", "4", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("name,inputs,value,vacuous\n"));
    assert!(text.contains("collision,\"{\"\"d\"\":4,\"\"r\"\":4}\",11/84,false"));
}

#[test]
fn son_exact_csv_matches_enumeration() {
    let out = permsec(&["son", "exact", "--d", "2", "--r", "3", "--xs", "0,1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let oracle = common::son_full_deck_law(2, 3, &[0, 1]);
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("index,ys,probability"));
    for line in rows {
        let cells: Vec<&str> = line.split(',').collect();
        let ys: Vec<u32> = cells[1].split(' ').map(|y| y.parse().unwrap()).collect();
        let expected = oracle.get(&ys).cloned().unwrap_or_default();
        assert_eq!(permsec::prob::parse_rational(cells[2]).unwrap(), expected, "{line}");
    }
}

#[test]
fn outputs_can_go_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = permsec(&["son", "sep", "--d", "2", "--r", "0", "--q", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["value"], "1/1");
    assert_eq!(v["mode"], "exact-dyadic");
}
