use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MOCK: &str = r#"{"name":"mock","env":{"kind":"ridgewalk"},"trainer":{"kind":"mock"},
 "curriculum":{"target":"3/255","increment":"1/255"},"seeds":[0]}"#;

const DQN: &str = r#"{"name":"tiny","env":{"kind":"ridgewalk"},
 "trainer":{"kind":"dqn","hidden":[8],"dqn":{"frames":400,"batch_size":16,"target_sync":100,"replay_initial":64}},
 "curriculum":{"target":"10/255"},"seeds":[0],
 "eval":{"episodes":2,"suite":{"attacks":["pgd"],"steps":5}}}"#;

fn bcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn bcl_then_report_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mock.json", MOCK);
    let out = dir.path().join("out").display().to_string();
    let o = bcl(&["--config", &cfg, "--out", &out, "bcl", "--variant", "bcl-mos", "--variant", "bcl-c"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let md = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    fs::remove_file(dir.path().join("out/report.md")).unwrap();
    let o = bcl(&["--out", &out, "report"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(dir.path().join("out/report.md")).unwrap(), md);
}

#[test]
fn train_then_eval_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dqn.json", DQN);
    let out = dir.path().display().to_string();
    let o = bcl(&["--config", &cfg, "--out", &out, "train", "--eps-hi", "5/255", "--loss", "at"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = String::from_utf8(o.stdout).unwrap().trim().to_string();
    let o = bcl(&["--out", &out, "eval", "--checkpoint", &ckpt, "--epsilon", "5/255", "--attack", "pgd", "--episodes", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("eps 0.0196"));
}

#[test]
fn config_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.json").display().to_string();
    assert_eq!(code(&bcl(&["--config", &missing, "bcl"])), 2);
    let bad = write(dir.path(), "bad.json", r#"{"env":{"kind":"ridgewalk"},"trainer":{"kind":"mock"},"seeds":[]}"#);
    assert_eq!(code(&bcl(&["--config", &bad, "bcl"])), 2);
    let cfg = write(dir.path(), "mock.json", MOCK);
    assert_eq!(code(&bcl(&["--config", &cfg, "bcl", "--variant", "nope"])), 2);
    assert_eq!(code(&bcl(&["bcl"])), 2);
    assert_eq!(code(&bcl(&["--out", &dir.path().display().to_string(), "report"])), 2);
}

#[test]
fn corrupt_checkpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.bclckpt", "BCLCKPT1 but not really");
    let out = dir.path().display().to_string();
    let o = bcl(&["--out", &out, "eval", "--checkpoint", &p, "--env", "ridgewalk"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn diverging_training_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = DQN.replace(r#""replay_initial":64"#, r#""replay_initial":64,"learning_rate":1e300"#);
    let cfg = write(dir.path(), "boom.json", &text);
    let o = bcl(&["--config", &cfg, "--out", &dir.path().display().to_string(), "train"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
