use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellnet"))
        .args(args)
        .env_remove("CELLNET_TOLERANCE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_accepts_the_examples() {
    for net in ["running.net", "two_cell.net"] {
        let o = run(&["validate", &data(net)]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(stdout(&o).starts_with("OK:"));
    }
}

#[test]
fn matrix_marginal_to_p7() {
    let o = run(&[
        "matrix",
        &data("running.net"),
        &data("running.delta"),
        "--keep",
        "p7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("{p1}\t0.090000\t0.910000"), "{text}");
    assert!(text.contains("{}\t0.000000\t1.000000"), "{text}");
}

#[test]
fn matrix_json_has_labelled_axes() {
    let o = run(&[
        "matrix",
        &data("two_cell.net"),
        &data("two_cell.delta"),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("\"inputs\": []"), "{text}");
    assert!(text.contains("\"columns\""));
}

#[test]
fn posterior_on_p1() {
    let o = run(&[
        "infer",
        &data("running.net"),
        &data("running.delta"),
        "--posterior",
        "--prior",
        &data("prior.state"),
        "--evidence",
        "p7=1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = text
        .lines()
        .find(|l| l.starts_with("P(p1) = "))
        .expect("posterior line");
    let got: f64 = line["P(p1) = ".len()..].parse().unwrap();
    let x = 0.3 * 0.6 * 0.5;
    assert!((got - (1.0 - x) / (2.0 - x)).abs() < 1e-12);
}

#[test]
fn oracle_check_and_configs() {
    let o = run(&["oracle-check", &data("running.net"), &data("running.delta")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = run(&["configs", &data("running.net")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("{a,c,e,g}"));
}

#[test]
fn outputs_are_byte_stable() {
    for args in [
        vec!["compile", "running.net"],
        vec!["canon", "running.net"],
        vec!["diagram", "two_cell.net"],
        vec!["matrix", "running.net", "running.delta", "--format", "csv"],
    ] {
        let args: Vec<String> = args
            .iter()
            .map(|a| {
                if a.contains('.') {
                    data(a)
                } else {
                    a.to_string()
                }
            })
            .collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(run(&args).stdout, run(&args).stdout, "{args:?}");
    }
}

#[test]
fn diagram_is_dot() {
    let o = run(&["diagram", &data("two_cell.net")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("digraph cellnet {"));
    assert_eq!(text.matches("shape=box").count(), 2);
}

#[test]
fn compiled_term_round_trips_through_check_term() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("running.term");
    let o = run(&["compile", &data("running.net"), "--emit-term"]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::write(&path, &o.stdout).unwrap();
    let o = run(&["check-term", path.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn failures_use_distinct_exit_codes() {
    let missing = run(&["validate", "/nonexistent/x.net"]);
    assert_eq!(missing.status.code(), Some(1));

    let bad_flag = run(&[
        "infer",
        &data("running.net"),
        &data("running.delta"),
        "--posterior",
        "--evidence",
        "p7=3",
    ]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("cyclic.net");
    std::fs::write(
        &net,
        "places = [\"x\", \"y\"]\nmarking = [\"x\"]\n\n[[transitions]]\nid = \"t\"\npre = [\"x\"]\npost = [\"x\"]\n",
    )
    .unwrap();
    let o = run(&["validate", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}
