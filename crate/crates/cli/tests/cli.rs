use std::path::Path;
use std::process::{Command, Output};

fn dagfp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dagfp"))
        .args(args)
        .current_dir(dir)
        .env_remove("DAGFP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dagfp(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

const SMALL: &[&str] = &["--K", "12", "--min-actions", "2", "--max-actions", "2"];

fn gen_small(dir: &Path, out: &str, types: &str) {
    let mut args = vec!["gen", "--seed", "4", "--types", types, "--out", out];
    args.extend_from_slice(SMALL);
    ok(dir, &args);
}

#[test]
fn gen_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--seed", "9", "--out", "a.json"]);
    ok(d.path(), &["gen", "--seed", "9", "--out", "b.json"]);
    assert_eq!(read(d.path().join("a.json")), read(d.path().join("b.json")));
    ok(d.path(), &["gen", "--seed", "9"]);
    assert_eq!(read(d.path().join("a.json")), read(d.path().join("game-9.json")));
}

#[test]
fn inspect_counts_states() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--K", "300", "--min-actions", "2", "--max-actions", "2", "--out", "g.json"]);
    let text = ok(d.path(), &["inspect", "g.json"]);
    assert!(text.contains("total: 303"), "{text}");
}

#[test]
fn solve_writes_artifacts_and_resumes() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), "g.json", "2");
    let full = d.path().join("full");
    let part = d.path().join("part");
    let base = ["solve", "g.json", "--fp-iters", "200", "--algorithm", "st-pifp-tdv"];
    let mut a = base.to_vec();
    a.extend_from_slice(&["--outer-iters", "4", "--out-dir", full.to_str().unwrap()]);
    ok(d.path(), &a);
    for f in ["profile.json", "values.json", "trace.csv", "checkpoints/iter-0004.json"] {
        assert!(full.join(f).exists(), "missing {f}");
    }
    let mut b = base.to_vec();
    b.extend_from_slice(&["--outer-iters", "2", "--out-dir", part.to_str().unwrap()]);
    ok(d.path(), &b);
    let mut c = base.to_vec();
    c.extend_from_slice(&["--outer-iters", "4", "--resume", "--out-dir", part.to_str().unwrap()]);
    ok(d.path(), &c);
    for f in ["profile.json", "values.json"] {
        assert_eq!(read(full.join(f)), read(part.join(f)), "{f} differs after resume");
    }
    let text = ok(d.path(), &["inspect", "full/values.json", "--game", "g.json"]);
    assert!(text.contains("yes") && !text.contains("NO"), "{text}");
}

#[test]
fn tdv_matches_state_values_with_one_type() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), "g.json", "1");
    for (alg, dir) in [("st-pifp", "a"), ("st-pifp-tdv", "b")] {
        ok(
            d.path(),
            &["solve", "g.json", "--algorithm", alg, "--fp-iters", "200", "--outer-iters", "3", "--out-dir", dir],
        );
    }
    assert_eq!(read(d.path().join("a/profile.json")), read(d.path().join("b/profile.json")));
}

#[test]
fn eval_reports_and_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), "g.json", "2");
    ok(d.path(), &["solve", "g.json", "--fp-iters", "200", "--outer-iters", "2"]);
    let text = ok(d.path(), &["eval", "g.json", "profile.json"]);
    assert!(text.contains("epsilon = max_i epsilon_i"), "{text}");
    assert!(d.path().join("epsilon.json").exists() && d.path().join("epsilon.csv").exists());
    let inspected = ok(d.path(), &["inspect", "epsilon.json"]);
    assert!(inspected.contains("epsilon = max_i epsilon_i"), "{inspected}");

    let capped = dagfp(d.path(), &["eval", "g.json", "profile.json", "--horizon-cap", "0", "--tolerance", "0"]);
    assert_eq!(capped.status.code(), Some(3));

    let expost = dagfp(d.path(), &["eval", "g.json", "profile.json", "--method", "expost"]);
    assert_eq!(expost.status.code(), Some(2));

    let missing = dagfp(d.path(), &["eval", "nope.json", "profile.json"]);
    assert_eq!(missing.status.code(), Some(4));

    let pi_on_typed = dagfp(d.path(), &["solve", "g.json", "--algorithm", "parallel-pifp"]);
    assert_eq!(pi_on_typed.status.code(), Some(2));
}

#[test]
fn ex_post_on_perfect_information() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), "g.json", "1");
    ok(
        d.path(),
        &["solve", "g.json", "--algorithm", "parallel-pifp", "--fp-iters", "300", "--outer-iters", "3"],
    );
    let a = ok(d.path(), &["eval", "g.json", "profile.json", "--method", "expost", "--out", "x.json"]);
    assert!(a.contains("gain"), "{a}");
    let text = ok(d.path(), &["inspect", "x.json"]);
    assert!(text.contains("ex post"), "{text}");
}
