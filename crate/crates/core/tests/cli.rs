use std::path::Path;
use std::process::Command;

const SMALL: [&str; 8] = [
    "--set",
    "episodes=6",
    "--set",
    "slots_per_episode=40",
    "--set",
    "eval.episodes=3",
    "--set",
    "eval.seeds=2",
];

fn slicesched(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_slicesched")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn with_small(mut args: Vec<&str>) -> Vec<&str> {
    args.extend(SMALL);
    args
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn listed_outputs(dir: &Path) -> Vec<String> {
    manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

fn assert_manifest_complete(dir: &Path) {
    let mut listed = listed_outputs(dir);
    let mut present: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn train_writes_all_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let (code, err) = slicesched(&with_small(vec!["train", "--out", d.to_str().unwrap()]));
        assert_eq!(code, 0, "{err}");
    }
    assert_manifest_complete(&a);
    let files = listed_outputs(&a);
    for want in ["config.txt", "training.csv", "checkpoint.bin", "episode_trace.csv", "manifest.json"] {
        assert!(files.iter().any(|f| f == want), "missing {want}");
    }
    for kind in ["returns", "backlog", "drift"] {
        assert!(files.iter().any(|f| f.ends_with(&format!("-{kind}.svg"))), "missing {kind} chart");
    }
    assert_eq!(csv_files(&a), csv_files(&b));
    assert_eq!(std::fs::read(a.join("checkpoint.bin")).unwrap(), std::fs::read(b.join("checkpoint.bin")).unwrap());
    assert_eq!(manifest(&a)["run_id"], manifest(&b)["run_id"]);

    // rerun from the config snapshot alone
    let c = tmp.path().join("c");
    let snapshot = a.join("config.txt");
    let (code, err) = slicesched(&["train", "--out", c.to_str().unwrap(), "--config", snapshot.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(csv_files(&a), csv_files(&c));
    assert_eq!(manifest(&a)["run_id"], manifest(&c)["run_id"]);
}

#[test]
fn dqn_diagnostics_have_their_own_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, q) = (tmp.path().join("a2c"), tmp.path().join("dqn"));
    assert_eq!(slicesched(&with_small(vec!["train", "--out", a.to_str().unwrap()])).0, 0);
    assert_eq!(slicesched(&with_small(vec!["train", "--agent", "dqn", "--out", q.to_str().unwrap()])).0, 0);
    let header = |d: &Path| std::fs::read_to_string(d.join("training.csv")).unwrap().lines().next().unwrap().to_string();
    let (ha, hq) = (header(&a), header(&q));
    assert_ne!(ha, hq);
    assert!(ha.contains("td_error") && ha.contains("entropy") && !ha.contains("epsilon"));
    assert!(hq.contains("q_loss") && hq.contains("epsilon") && !hq.contains("td_error"));
    assert_eq!(&ha, slicesched::metrics::training_csv_header(false));
}

#[test]
fn compare_with_checkpoint_and_single_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path().join("t");
    assert_eq!(slicesched(&with_small(vec!["train", "--out", t.to_str().unwrap()])).0, 0);
    let ckpt = t.join("checkpoint.bin");

    let c = tmp.path().join("c");
    let (code, err) = slicesched(&with_small(vec![
        "compare",
        "--out",
        c.to_str().unwrap(),
        "--policies",
        "drastic,rr,pf",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "{err}");
    assert_manifest_complete(&c);
    let rel = std::fs::read_to_string(c.join("reliability.csv")).unwrap();
    let rows: Vec<&str> = rel.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, name) in rows.iter().zip(["drastic", "rr", "pf"]) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[0], name);
        let r: f64 = cells[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&r));
    }

    let r = tmp.path().join("r");
    assert_eq!(slicesched(&with_small(vec!["compare", "--out", r.to_str().unwrap(), "--policies", "rr"])).0, 0);
    let svg_name = listed_outputs(&r).into_iter().find(|f| f.ends_with("-cdf.svg")).unwrap();
    let svg = std::fs::read_to_string(r.join(svg_name)).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let curves = doc.descendants().filter(|n| n.attribute("class") == Some("series")).count();
    assert_eq!(curves, 1);
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("ref-x")).count(), 1);
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("ref-y")).count(), 1);
}

#[test]
fn experiments_write_their_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("two-step-dex", vec!["step_response.csv", "step_profile.csv"]),
        ("dex-sensitivity", vec!["sensitivity.csv"]),
        ("drl-compare", vec!["training_drastic.csv", "training_dqn.csv", "returns.csv"]),
    ];
    for (name, files) in cases {
        let d = tmp.path().join(name);
        let (code, err) = slicesched(&with_small(vec!["experiment", "--name", name, "--out", d.to_str().unwrap()]));
        assert_eq!(code, 0, "{name}: {err}");
        assert_manifest_complete(&d);
        for f in files {
            assert!(d.join(f).exists(), "{name} missing {f}");
        }
    }
    let sens = std::fs::read_to_string(tmp.path().join("dex-sensitivity/sensitivity.csv")).unwrap();
    let dxi: Vec<f64> = sens
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(dxi, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    let step = std::fs::read_to_string(tmp.path().join("two-step-dex/step_response.csv")).unwrap();
    assert!(step.starts_with("quantity,outside_step,inside_step,change\n"));
    assert!(step.contains("\nmean_arrivals,") && step.contains("\nmean_prbs,"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(slicesched(&["train", "--out", out, "--frobnicate"]).0, 1);
    assert_eq!(slicesched(&["train"]).0, 1);
    assert_eq!(slicesched(&["experiment", "--name", "nope", "--out", out]).0, 1);
    assert_eq!(slicesched(&["compare", "--out", out, "--policies", "rr,ddpg"]).0, 1);
    assert_eq!(slicesched(&["train", "--out", out, "--set", "num_prbs=2"]).0, 2);
    assert_eq!(slicesched(&["train", "--out", out, "--config", "/nonexistent.conf"]).0, 2);
    assert_eq!(slicesched(&["compare", "--out", out, "--policies", "drastic"]).0, 2);
    assert_eq!(slicesched(&["compare", "--out", out, "--policies", "dqn", "--checkpoint", "/nonexistent.bin"]).0, 2);
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"").unwrap();
    let nested = blocker.join("sub");
    assert_eq!(slicesched(&with_small(vec!["train", "--out", nested.to_str().unwrap()])).0, 3);
    assert_eq!(slicesched(&["--help"]).0, 0);
}
