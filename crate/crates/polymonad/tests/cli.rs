use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(rel)
}

fn pm(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pm"));
    cmd.current_dir(corpus("")).env("PM_COLOR", "0");
    cmd.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn infer_prints_simplified_schemes() {
    let o = pm(&["infer", "--sig", "ist.sig", "add_interest.pm"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "add_interest : forall a n1 n2 b. (IST H a, n1) |> n2, (Bot, Bot) |> n1, (IST H b, IST b L) |> n1 => intref b -> intref a -> n2 ()\n"
    );
    let o = pm(&["infer", "app.pm"]);
    assert_eq!(stdout(&o), "app : forall n1 n2 a b. (Bot, n1) |> n2 => (a -> n1 b) -> a -> n2 b\n");
    let o = pm(&["infer", "--sig", "session.sig", "go.pm"]);
    assert!(stdout(&o).starts_with("go : forall a b c n1. (A (Send a b) b, A (Recv int c) c) |> n1 => a -> n1 int\n"), "{}", stdout(&o));
}

#[test]
fn no_simplify_keeps_every_constraint() {
    let o = pm(&["infer", "--no-simplify", "--no-hide", "app.pm"]);
    assert_eq!(stdout(&o), "app : forall n1 n2 n3 a b. (Bot, n1) |> n2, (Bot, n3) |> n1 => (a -> n3 b) -> a -> n2 b\n");
}

#[test]
fn run_add_interest() {
    let o = pm(&["run", "add_interest_main.pm", "--sig", "ist.sig", "--store", "savings=100,interest=5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "value: ()\nstore: savings=105 interest=5 public=0 secret=0\n");
}

#[test]
fn run_session() {
    let o = pm(&["run", "--sig", "session.sig", "go.pm", "--script", "41"]);
    assert_eq!(stdout(&o), "value: 42\ntrace: [Send 7, Recv 41]\n");
    let empty = pm(&["run", "--sig", "session.sig", "go.pm"]);
    assert_eq!(empty.status.code(), Some(4));
    assert!(stderr(&empty).starts_with("error: "), "{}", stderr(&empty));
}

#[test]
fn flow_violation_is_a_type_error() {
    let o = pm(&["check", "flow_violation.pm", "--sig", "ist.sig"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error: unsatisfiable constraint (IST H H, IST L L) |> n1: bIST requires H <= L\n"), "{err}");
    assert!(err.contains("residual constraints:"));
    // Golden stability.
    assert_eq!(stderr(&pm(&["check", "flow_violation.pm", "--sig", "ist.sig"])), err);
}

#[test]
fn laws() {
    let o = pm(&["laws", "ist.sig"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("all laws pass (bound=exhaustive)\n"), "{}", stdout(&o));
    let o = pm(&["laws", "session.sig"]);
    assert!(stdout(&o).ends_with("all laws pass (bound=depth 2)\n"), "{}", stdout(&o));
    let o = pm(&["laws", "ist_no_map.sig"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("LAW Functor FAIL (IST L L, Bot) |> IST L L missing\n"), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("pm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.pm");
    std::fs::write(&bad, "let = 1").unwrap();
    assert_eq!(pm(&["check", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(pm(&["check", "missing.pm"]).status.code(), Some(1));
    let ill = dir.join("ill.pm");
    std::fs::write(&ill, "1 2").unwrap();
    assert_eq!(pm(&["check", ill.to_str().unwrap()]).status.code(), Some(2));
    let o = pm(&["run", "--sig", "ist.sig", "add_interest_main.pm", "--store", "nope=1"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr(&o), "error: unknown reference nope\n");
    let o = pm(&["check", "--sig", "session.sig", "--bound", "6", "go.pm"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn diagnostics_flags() {
    let o = pm(&["check", "--sig", "ist.sig", "--enumerate", "--check-coherence", "--show-graph", "--show-elaborated", "add_interest_main.pm"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("solution 0: "), "{out}");
    assert!(out.contains("coherent (2 solutions)"), "{out}");
    assert!(out.contains("v0 := "), "{out}");
    assert!(out.ends_with("add_interest_main.pm: ok\n"));
}

#[test]
fn fuel_limits_evaluation() {
    let o = pm(&["run", "--sig", "ist.sig", "--fuel", "3", "add_interest_main.pm"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));
    let o = pm(&["run", "--sig", "ist.sig", "--fuel", "100000", "add_interest_main.pm"]);
    assert_eq!(o.status.code(), Some(0));
}
