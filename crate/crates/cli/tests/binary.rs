use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const FIG1: &str =
    "[model]\nfamily = \"single1d\"\n\n[params]\na1_1 = 0.5\na1_2 = 1\nb1_2 = 0.05\n\n[switch]\nq12 = 2\nq21 = 2\n";

const LV2: &str = r#"
[model]
family = "lv2comp"

[params]
a1_1 = 1.0
a1_2 = 1.2
a2_1 = 0.8
a2_2 = 1.0
b1_1 = 1.0
b1_2 = 1.0
b2_1 = 1.0
b2_2 = 1.0
c1_1 = 0.5
c1_2 = 0.4
c2_1 = 0.3
c2_2 = 0.6

[switch]
q12 = 1.0
q21 = 2.0
"#;

fn pdmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdmp")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn invalid_model_file_exits_2_with_line() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "bad.toml", &FIG1.replace("q12 = 2", "q12 = -1"));
    let o = pdmp(&["simulate", "--model", &m, "--out", &path(&dir, "o")]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 10"), "{}", stderr(&o));
}

#[test]
fn bad_initial_state_exits_2() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.toml", FIG1);
    let o = pdmp(&["simulate", "--model", &m, "--x0", "-1", "--out", &path(&dir, "o")]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn infeasible_density_exits_3() {
    let dir = TempDir::new().unwrap();
    let m =
        write(&dir, "m.toml", &FIG1.replace("a1_1 = 0.5", "a1_1 = -0.5\nb1_1 = 0.1").replace("a1_2 = 1", "a1_2 = -1"));
    let o = pdmp(&["density", "--model", &m, "--out", &path(&dir, "o")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn inconclusive_classification_exits_4() {
    let dir = TempDir::new().unwrap();
    let m = write(
        &dir,
        "m.toml",
        "[model]\nfamily = \"single1d\"\n[params]\na1_1 = 1.0\na1_2 = -1.0\nb1_1 = 0.1\nb1_2 = 0.1\n[switch]\nq12 = 1\nq21 = 1\n",
    );
    let out = path(&dir, "o");
    let o = pdmp(&["classify", "--model", &m, "--out", &out, "--tmax", "200"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&out).join("verdict.json")).unwrap()).unwrap();
    assert_eq!(v["verdict"]["outcome"]["kind"], "Inconclusive");
}

#[test]
fn classify_fig1_persists() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.toml", FIG1);
    let o = pdmp(&["classify", "--model", &m, "--out", &path(&dir, "o")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PersistAll"));
}

#[test]
fn figure_outputs_exist() {
    let dir = TempDir::new().unwrap();
    for name in ["fig1", "fig2a", "fig2b"] {
        let out = path(&dir, name);
        let o = pdmp(&["figure", name, "--out", &out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let csv = fs::read_to_string(Path::new(&out).join(format!("{name}.csv"))).unwrap();
        assert!(csv.lines().count() > 100);
        let svg = fs::read_to_string(Path::new(&out).join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<path"));
        assert!(Path::new(&out).join("manifest.json").exists());
    }
}

#[test]
fn fig2_models_differ_only_in_a1_2() {
    let dir = TempDir::new().unwrap();
    let mut params = Vec::new();
    for name in ["fig2a", "fig2b"] {
        let out = path(&dir, name);
        let o = pdmp(&["figure", name, "--out", &out, "--tmax", "1"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(Path::new(&out).join("manifest.json")).unwrap()).unwrap();
        params.push(m["params"].as_object().unwrap().clone());
    }
    let keys: Vec<&String> = params[0].keys().filter(|k| params[0][*k] != params[1][*k]).collect();
    assert_eq!(keys, ["a1_2"]);
    assert_eq!(params[0]["a1_2"], -0.505);
    assert_eq!(params[1]["a1_2"], 0.45);
}

fn replay_identical(dir: &TempDir, label: &str, args: &[&str]) -> bool {
    let out = path(dir, label);
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", &out]);
    let o = pdmp(&full);
    assert_eq!(o.status.code(), Some(0), "{label}: {}", stderr(&o));
    let again = path(dir, &format!("{label}_replay"));
    let manifest = Path::new(&out).join("manifest.json");
    let r = pdmp(&["replay", manifest.to_str().unwrap(), "--out", &again]);
    let report = String::from_utf8_lossy(&r.stdout).into_owned();
    let mut ok = r.status.success() && report.contains("identical") && !report.contains("DIFFERS");
    for entry in fs::read_dir(&out).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name.to_string_lossy().ends_with(".csv") {
            ok &= fs::read(entry.path()).unwrap() == fs::read(Path::new(&again).join(&name)).unwrap();
        }
    }
    ok
}

#[test]
fn replay_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let fig1 = write(&dir, "fig1.toml", FIG1);
    let lv2 = write(&dir, "lv2.toml", LV2);
    let runs: [(&str, Vec<&str>); 4] = [
        ("simulate", vec!["simulate", "--model", &fig1, "--seed", "7", "--tmax", "200", "--bins", "20"]),
        ("ensemble", vec!["ensemble", "--model", &lv2, "--seed", "3", "--tmax", "20", "--replicates", "5", "--paths"]),
        ("density", vec!["density", "--model", &fig1]),
        ("invade", vec!["invade", "--model", &lv2, "--seed", "11", "--tmax", "500"]),
    ];
    let mut all = true;
    for (label, args) in &runs {
        let ok = replay_identical(&dir, label, args);
        println!("{label} replay: {}", if ok { "identical" } else { "DIFFERS" });
        all &= ok;
    }
    println!("criterion 10 (replay reproduces outputs byte for byte): {}", if all { "PASS" } else { "FAIL" });
    assert!(all);
}

#[test]
fn replay_from_a_moved_model_file_uses_embedded_model() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.toml", FIG1);
    let out = path(&dir, "o");
    assert!(pdmp(&["simulate", "--model", &m, "--tmax", "20", "--out", &out]).status.success());
    fs::remove_file(&m).unwrap();
    let r = pdmp(&["replay", &format!("{out}/manifest.json"), "--out", &path(&dir, "r")]);
    assert!(r.status.success(), "{}", stderr(&r));
}
