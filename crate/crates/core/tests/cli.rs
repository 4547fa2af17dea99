use std::path::Path;
use std::process::Command;

use entanglecert::cli::{config_from_emitted, emit_to_string, parse_config, read_csv, run_command, Format};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_entanglecert"));
    c.env_remove("ENTANGLECERT_SEED");
    c
}

fn run_to(out: &Path, args: &[&str]) -> std::process::Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn certify_witness_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let o = run_to(&out, &["certify", "--test", "witness", "--pa", "0.5", "--pb", "0.5", "--exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.columns, ["p_a", "p_b", "W", "W_se", "W_certified"]);
    assert!((table.rows[0][2] + 0.5).abs() < 1e-12);
    assert_eq!(table.rows[0][4], 1.0);
}

#[test]
fn tradeoff_table_has_requested_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    assert!(run_to(&out, &["tradeoff", "--points", "21"]).status.success());
    let table = read_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let r = table.column("R").unwrap();
    assert_eq!(r.len(), 21);
    assert_eq!((r[0], r[20]), (0.25, 0.0));
}

#[test]
fn monitor_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run_to(out, &["monitor", "--windows", "500", "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // Sampled mode is reproducible too.
    let (c, d) = (dir.path().join("c.jsonl"), dir.path().join("d.jsonl"));
    for out in [&c, &d] {
        let args = [
            "monitor",
            "--windows",
            "50",
            "--seed",
            "7",
            "--shots",
            "2000",
            "--window-shots",
            "2000",
            "--format",
            "jsonl",
        ];
        assert!(run_to(out, &args).status.success());
    }
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&d).unwrap());
}

#[test]
fn emitted_metadata_reproduces_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let args = ["sweep", "--grid", "0:1:5", "--shots", "3000", "--seed", "11", "--state", "mixed:0.3"];
    assert!(run_to(&first, &args).status.success());
    let second = dir.path().join("second.csv");
    let o = run_to(&second, &["sweep", "--config", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn library_round_trip_for_every_command() {
    let tomo = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(
        tomo.path(),
        "XX 0.9\nYY -0.9\nZZ 0.95\nIX 0\nIY 0\nIZ 0\nXI 0\nYI 0\nZI 0\nXY 0\nXZ 0\nYX 0\nYZ 0\nZX 0\nZY 0\n",
    )
    .unwrap();
    let docs = [
        "command = \"certify\"\nexact = false\nshots = 500".to_string(),
        "command = \"sweep\"\ngrid = \"0.2,0.6,1.0\"".to_string(),
        "command = \"recover\"\npoints = 5".to_string(),
        "command = \"recover\"\npoints = 3\nexact = false\nshots = 200\npolicy = \"plus\"".to_string(),
        "command = \"tradeoff\"\npoints = 6".to_string(),
        "command = \"monitor\"\nwindows = 20".to_string(),
        "command = \"tomography\"\nexact = false\nshots = 1000".to_string(),
        format!("command = \"tomography\"\nstate = \"tomography:{}\"", tomo.path().display()),
    ];
    for doc in docs {
        let config = parse_config(&doc).unwrap();
        let table = run_command(&config).unwrap();
        for format in [Format::Csv, Format::Jsonl] {
            let text = emit_to_string(&table, format);
            let again = run_command(&config_from_emitted(&text).unwrap()).unwrap();
            assert_eq!(emit_to_string(&again, format), text, "{doc}");
        }
    }
}

#[test]
fn jsonl_layout() {
    let table = run_command(&parse_config("command = \"sweep\"\ngrid = \"0:1:3\"").unwrap()).unwrap();
    let text = emit_to_string(&table, Format::Jsonl);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0]["metadata"]["config"]["command"], "sweep");
    // p_A = 0 leaves the steering compensation undefined.
    assert!(lines[1]["S3_ab"].is_null());
    assert_eq!(lines[9]["W"], -0.5);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad_toml = dir.path().join("bad.toml");
    std::fs::write(&bad_toml, "pa = 0.5\nnope = 1\n").unwrap();
    let o = bin().args(["certify", "--config", bad_toml.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = bin().args(["certify", "--pa", "1.5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p_A out of [0,1]"));

    let o = bin().args(["certify", "--state", "tomography:/nonexistent/file"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin().args(["certify", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let seed_of = |args: &[&str], env: Option<&str>| -> u64 {
        let out = dir.path().join("s.csv");
        let mut c = bin();
        if let Some(e) = env {
            c.env("ENTANGLECERT_SEED", e);
        }
        assert!(c.args(args).arg("--out").arg(&out).output().unwrap().status.success());
        read_csv(&std::fs::read_to_string(&out).unwrap()).unwrap().metadata.seed
    };
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(seed_of(&["certify"], None), 0);
    assert_eq!(seed_of(&["certify"], Some("9")), 9);
    assert_eq!(seed_of(&["certify", "--config", cfg], Some("9")), 5);
    assert_eq!(seed_of(&["certify", "--config", cfg, "--seed", "3"], Some("9")), 3);
}

#[test]
fn negative_threshold_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = run_to(&out, &["monitor", "--windows", "30", "--threshold", "-0.3", "--exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let (gamma, selected) = (table.column("gamma").unwrap(), table.column("selected").unwrap());
    for (g, s) in gamma.iter().zip(&selected) {
        assert_eq!(*s == 1.0, *g < 0.4);
    }
}
