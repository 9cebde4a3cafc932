use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use slsynth::cli::run;
use slsynth::format::config_to_string;
use slsynth_core::GenParams;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn slsynth(dir: &Path, args: &[&str]) -> Out {
    let mut full = vec!["slsynth".to_string()];
    full.extend(args.iter().map(|a| if a.contains('.') { dir.join(a).display().to_string() } else { a.to_string() }));
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(full, &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn setup(seed: u64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = GenParams { num_categories: 10, permutation_prob: 0.4, seed, ..GenParams::default() };
    fs::write(dir.path().join("cfg.json"), config_to_string(&p)).unwrap();
    dir
}

fn listing(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn generation_is_byte_deterministic_across_runs_and_jobs() {
    let a = setup(11);
    let b = setup(11);
    for (d, jobs) in [(a.path(), "1"), (b.path(), "4")] {
        assert_eq!(slsynth(d, &["gen-grammar", "--config", "cfg.json", "--out", "g.json"]).code, 0);
        let r = slsynth(
            d,
            &[
                "gen-corpus",
                "--grammar",
                "g.json",
                "--n",
                "700",
                "--seed",
                "5",
                "--out",
                "c.jsonl",
                "--manifest",
                "m.json",
                "--jobs",
                jobs,
            ],
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    for f in ["g.json", "c.jsonl", "m.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_regenerates_and_detects_tampering() {
    let t = setup(3);
    let d = t.path();
    slsynth(d, &["gen-grammar", "--config", "cfg.json", "--out", "g.json"]);
    slsynth(
        d,
        &["gen-corpus", "--grammar", "g.json", "--n", "50", "--seed", "8", "--out", "c.jsonl", "--manifest", "m.json"],
    );
    let r = slsynth(
        d,
        &["gen-corpus", "--grammar", "g.json", "--from-manifest", "m.json", "--out", "again.jsonl", "--jobs", "3"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(fs::read(d.join("c.jsonl")).unwrap(), fs::read(d.join("again.jsonl")).unwrap());

    let m = fs::read_to_string(d.join("m.json")).unwrap();
    let sha = serde_json::from_str::<serde_json::Value>(&m).unwrap()["corpus_sha256"].as_str().unwrap().to_string();
    fs::write(d.join("m2.json"), m.replace(&sha, &"0".repeat(64))).unwrap();
    let r = slsynth(d, &["gen-corpus", "--grammar", "g.json", "--from-manifest", "m2.json", "--out", "x.jsonl"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("differs"));

    let mut g = fs::read_to_string(d.join("g.json")).unwrap();
    g.push('\n');
    fs::write(d.join("g2.json"), g).unwrap();
    let r = slsynth(d, &["gen-corpus", "--grammar", "g2.json", "--from-manifest", "m.json", "--out", "y.jsonl"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("does not match"));
}

#[test]
fn commands_write_only_named_paths() {
    let t = setup(4);
    let d = t.path();
    let steps: &[&[&str]] = &[
        &["gen-grammar", "--config", "cfg.json", "--out", "g.json"],
        &["gen-corpus", "--grammar", "g.json", "--n", "20", "--seed", "1", "--out", "c.jsonl", "--manifest", "m.json"],
        &["validate", "--grammar", "g.json", "--corpus", "c.jsonl", "--config", "cfg.json"],
        &["stats", "--corpus", "c.jsonl", "--grammar", "g.json", "--out", "s.json"],
        &["baseline", "--corpus", "c.jsonl", "--out", "p.jsonl"],
        &["score", "--gold", "c.jsonl", "--pred", "p.jsonl", "--out", "r.json"],
    ];
    let mut expected = vec![d.join("cfg.json")];
    for step in steps {
        let r = slsynth(d, step);
        assert_eq!(r.code, 0, "{step:?}: {}", r.stderr);
        for w in step.windows(2) {
            if matches!(w[0], "--out" | "--manifest") {
                expected.push(d.join(w[1]));
            }
        }
        expected.sort();
        assert_eq!(listing(d), expected, "{step:?}");
    }
}

#[test]
fn scoring_gold_against_itself_prints_one() {
    let t = setup(6);
    let d = t.path();
    slsynth(d, &["gen-grammar", "--config", "cfg.json", "--out", "g.json"]);
    slsynth(
        d,
        &["gen-corpus", "--grammar", "g.json", "--n", "30", "--seed", "2", "--out", "c.jsonl", "--manifest", "m.json"],
    );
    let gold = fs::read_to_string(d.join("c.jsonl")).unwrap();
    let preds: String = gold
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            let o = v.as_object_mut().unwrap();
            o.remove("units");
            o.remove("seed");
            format!("{v}\n")
        })
        .collect();
    fs::write(d.join("p.jsonl"), preds).unwrap();
    let r = slsynth(d, &["score", "--gold", "c.jsonl", "--pred", "p.jsonl", "--out", "r.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let uas_row = r.stdout.lines().find(|l| l.starts_with("UAS")).unwrap();
    assert!(uas_row.ends_with("1.000"), "{uas_row}");
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(rep["uas"], 1.0);
    assert_eq!(rep["documents"], 30);
}

#[test]
fn validation_failures_exit_one_with_line_context() {
    let t = setup(7);
    let d = t.path();
    slsynth(d, &["gen-grammar", "--config", "cfg.json", "--out", "g.json"]);
    slsynth(
        d,
        &["gen-corpus", "--grammar", "g.json", "--n", "5", "--seed", "2", "--out", "c.jsonl", "--manifest", "m.json"],
    );
    let text = fs::read_to_string(d.join("c.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[2] = lines[2].replacen("\"head\":\"ROOT\"", "\"head\":0", 1);
    fs::write(d.join("bad.jsonl"), lines.join("\n") + "\n").unwrap();
    let r = slsynth(d, &["validate", "--grammar", "g.json", "--corpus", "bad.jsonl"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("bad.jsonl:3: d000002"), "{}", r.stdout);
}

#[test]
fn parse_errors_exit_two_with_file_and_line() {
    let t = setup(8);
    let d = t.path();
    fs::write(d.join("c.jsonl"), "{\"doc_id\":\"a\",\"seed\":0,\"units\":[],\"dependencies\":[]}\nnot json\n").unwrap();
    let r = slsynth(d, &["stats", "--corpus", "c.jsonl"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("c.jsonl:2:"), "{}", r.stderr);

    let cfg = fs::read_to_string(d.join("cfg.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&cfg).unwrap();
    let mut o = v.as_object().unwrap().clone();
    o.remove("num_categories");
    fs::write(d.join("nocat.json"), serde_json::to_string(&o).unwrap()).unwrap();
    let r = slsynth(d, &["gen-grammar", "--config", "nocat.json", "--out", "g.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("num_categories"), "{}", r.stderr);
    assert!(!d.join("g.json").exists());

    let r = slsynth(d, &["stats", "--corpus", "missing.jsonl"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("missing.jsonl"));
}

#[test]
fn usage_errors_exit_two() {
    let t = setup(9);
    let d = t.path();
    assert_eq!(slsynth(d, &["frobnicate"]).code, 2);
    assert_eq!(slsynth(d, &["gen-grammar", "--out", "g.json"]).code, 2);
    slsynth(d, &["gen-grammar", "--config", "cfg.json", "--out", "g.json"]);
    let r = slsynth(d, &["gen-corpus", "--grammar", "g.json", "--out", "c.jsonl"]);
    assert_eq!(r.code, 2);
    assert!(!d.join("c.jsonl").exists());
    assert_eq!(slsynth(d, &["validate"]).code, 2);
    assert_eq!(slsynth(d, &["--help"]).code, 0);
}

#[test]
fn binary_reports_exit_codes() {
    let t = setup(10);
    let bin = env!("CARGO_BIN_EXE_slsynth");
    let s = Command::new(bin).current_dir(t.path()).args(["validate", "--config", "cfg.json"]).output().unwrap().status;
    assert_eq!(s.code(), Some(0));
    let s = Command::new(bin).current_dir(t.path()).args(["stats", "--corpus", "nope"]).output().unwrap();
    assert_eq!(s.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&s.stderr).starts_with("error: "));
}
