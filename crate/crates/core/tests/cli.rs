use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bench(args: &[&str], env: Option<(&str, &str)>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bench"));
    c.args(args).stdin(Stdio::null());
    if let Some((k, v)) = env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn run_args<'a>(exp: &'a str, layouts: &'a str, out: &'a Path) -> Vec<&'a str> {
    vec![
        "run",
        "--experiment",
        exp,
        "--layouts",
        layouts,
        "--node-sizes",
        "256",
        "--iterations",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");

    let ok = bench(&run_args("E1", "hashing", &out), None);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    // Header plus hash_probe and bitmap_linear at three positions.
    assert_eq!(
        std::fs::read_to_string(&out).unwrap().lines().count(),
        1 + 2 * 3
    );

    let skipped = bench(
        &run_args("E2", "unsorted", &dir.path().join("none.csv")),
        None,
    );
    assert_eq!(code(&skipped), 2);
    assert!(!dir.path().join("none.csv").exists());

    assert_eq!(code(&bench(&run_args("E11", "sorted", &out), None)), 1);
    assert_eq!(code(&bench(&["run"], None)), 1);
    assert_eq!(code(&bench(&["--help"], None)), 0);
}

#[test]
fn arena_override_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    // Too small for even one pooled node.
    let tiny = bench(
        &run_args("E4", "sorted", &out),
        Some(("BENCH_ARENA_BYTES", "512")),
    );
    assert_eq!(code(&tiny), 1);
    let bad = bench(
        &run_args("E4", "sorted", &out),
        Some(("BENCH_ARENA_BYTES", "lots")),
    );
    assert_eq!(code(&bad), 1);
    let fine = bench(
        &run_args("E4", "sorted", &out),
        Some(("BENCH_ARENA_BYTES", "65536")),
    );
    assert_eq!(code(&fine), 0);
}

#[test]
fn profile_and_crashcheck() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for exp in ["E1", "E3", "E4", "E5", "E8", "E9", "E10"] {
        let out = dir.path().join(format!("{exp}.csv"));
        let o = bench(&run_args(exp, "sorted,hashing", &out), None);
        assert_eq!(code(&o), 0, "{exp}: {}", String::from_utf8_lossy(&o.stderr));
        inputs.push(out.to_str().unwrap().to_string());
    }
    let prof = dir.path().join("profile.csv");
    let mut args = vec!["profile", "--in"];
    args.extend(inputs.iter().map(String::as_str));
    args.extend(["--out", prof.to_str().unwrap()]);
    assert_eq!(code(&bench(&args, None)), 0);
    let text = std::fs::read_to_string(&prof).unwrap();
    assert!(text.starts_with(
        "layout,search,iterate,insert,erase,split,balance,merge,write_reduction,memory\n"
    ));
    assert_eq!(text.lines().count(), 3);

    // Missing axes are an error.
    let partial = [
        "profile",
        "--in",
        &inputs[0],
        "--out",
        prof.to_str().unwrap(),
    ];
    assert_eq!(code(&bench(&partial, None)), 1);

    let clean = bench(
        &[
            "crashcheck",
            "--scenario",
            "move",
            "--fa",
            "tx,individual,none",
            "--adversarial",
        ],
        None,
    );
    assert_eq!(code(&clean), 0);
    assert!(String::from_utf8_lossy(&clean.stdout).contains("violations=0"));
    // Word-level reordering exposes a non-transactional multi-node split.
    let torn = bench(
        &[
            "crashcheck",
            "--scenario",
            "insert",
            "--fa",
            "none",
            "--adversarial",
        ],
        None,
    );
    assert_eq!(code(&torn), 1);
}
