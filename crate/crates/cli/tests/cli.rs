use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lehmer-agg"))
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    // the process may exit before reading its input
    let _ = input.write_all(stdin.unwrap_or("").as_bytes());
    drop(input);
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: Option<&str>) -> String {
    let out = run(args, stdin);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], stdin: Option<&str>) -> i32 {
    run(args, stdin).status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn encode_and_decode() {
    assert_eq!(ok(&["encode"], Some("2 1 4 5 7 3 6 9 8\n")), "0 1 0 0 0 3 1 0 1\n");
    let pair = ok(&["encode", "--format", "buckets", "--in-count"], Some("1 2 6 | 3 4 7 | 5 8 9\n"));
    assert_eq!(pair, "0 0 0 0 0 3 1 0 0 | 0 1 0 1 0 5 3 1 2 | 1 2 1 2 1 3 3 2 3\n");
    assert_eq!(ok(&["decode"], Some(&pair)), "1 2 6 | 3 4 7 | 5 8 9\n");
    assert_eq!(ok(&["decode"], Some("0 1 0 0 0 3 1 0 1\n")), "2 1 4 5 7 3 6 9 8\n");
    assert_eq!(ok(&["decode", "--output-format", "order"], Some("0 1\n")), "2 1\n");
    assert_eq!(code(&["decode"], Some("0 2\n")), 2);
    assert_eq!(code(&["decode"], Some("0 0 | 0 1 | 1 1\n")), 2);
}

#[test]
fn aggregate_methods() {
    assert_eq!(ok(&["aggregate", "--method", "lc-mode"], Some("3 1 2 4\n")), "3 1 2 4\n");
    let votes = "1 2 3 4\n1 2 4 3\n2 1 3 4\n";
    for method in ["lc-median", "lc-mode", "borda", "spearman", "pick-a-perm"] {
        assert_eq!(ok(&["aggregate", "--method", method], Some(votes)), "1 2 3 4\n", "{method}");
    }
    for method in ["fas-pivot", "insertion-comp"] {
        assert_eq!(ok(&["aggregate", "--method", method, "--seed", "3"], Some(votes)), "1 2 3 4\n");
        assert_eq!(code(&["aggregate", "--method", method], Some(votes)), 1);
    }
    assert_eq!(code(&["aggregate", "--method", "most-prob"], Some(votes)), 1);
    assert_eq!(code(&["aggregate", "--method", "nope"], Some(votes)), 1);
    let partial = "1 2 | 3 |*\n1 2 | 3 | 4\n2 1 | 3 4\n";
    let out = ok(&["aggregate", "--format", "buckets", "--bucketize", "optimal"], Some(partial));
    assert_eq!(out, "1 2 | 3 | 4\n");
    let out = ok(
        &["aggregate", "--format", "buckets", "--bucketize", "greedy", "--metric", "kemeny", "--output-format", "ranks"],
        Some(partial),
    );
    assert_eq!(out, "1 1 2 3\n");
}

#[test]
fn sample_then_verify_remark() {
    let sample = ok(&["sample", "mallows", "--n", "4", "--phi", "0.9", "--m", "100000", "--seed", "7"], None);
    assert_eq!(sample.lines().count(), 100_000);
    let report = ok(&["verify", "remark"], Some(&sample));
    assert!(report.contains("P[sigma(3)=3] exact 0.2559"), "{report}");
    assert!(report.contains("P[sigma(3)=4] exact 0.2617"), "{report}");
    assert!(!report.contains("FAIL"));
    // a sample far from the model fails the comparison
    assert_eq!(code(&["verify", "remark"], Some(&"1 2 3 4\n".repeat(100))), 2);
    assert!(ok(&["verify", "remark", "--exact"], None).contains("exact 0.2617"));
}

#[test]
fn sampling_is_seeded() {
    let args = ["sample", "mallows", "--centroid", "3 1 2", "--lambda", "0.4", "--m", "50", "--seed", "1"];
    assert_eq!(ok(&args, None), ok(&args, None));
    let gmm = ["sample", "gmm", "--centroid", "1 2 | 3 4 | 5", "--phi", "0.3", "--m", "20", "--seed", "2"];
    let out = ok(&gmm, None);
    assert_eq!(out, ok(&gmm, None));
    assert_eq!(out.lines().count(), 20);
    assert_eq!(code(&["sample", "mallows", "--n", "4", "--phi", "0.5", "--m", "3"], None), 1);
    assert_eq!(code(&["sample", "mallows", "--n", "4", "--phi", "1.5", "--m", "3", "--seed", "1"], None), 1);
}

#[test]
fn distances() {
    assert_eq!(ok(&["distance", "--metric", "kendall", "--identity"], Some("2 1 4 5 7 3 6 9 8\n")), "6\n");
    let dir = tempfile::tempdir().unwrap();
    let reference = write(dir.path(), "ref.txt", "2 1 1\n");
    let out = ok(&["distance", "--metric", "kemeny", "--to", &reference], Some("1 1 2\n1 2 3\n"));
    assert_eq!(out, "2\n2.5\n# total 4.5 average 2.25\n");
    assert_eq!(code(&["distance", "--metric", "kendall", "--identity"], Some("1 1 2\n")), 2);
    assert_eq!(code(&["distance"], Some("1 2\n")), 1);
}

#[test]
fn imports() {
    let dir = tempfile::tempdir().unwrap();
    let sushi = write(dir.path(), "s.order", "3 1\n0 3 2 0 1\n");
    assert_eq!(ok(&["import", "--kind", "sushi", &sushi, "--output-format", "order"], None), "3 1 2\n");
    let jester = write(dir.path(), "j.csv", "3,4.6,4.5,99\n");
    let out = ok(&["import", "--kind", "jester", "--jester-mode", "partial", &jester], None);
    assert_eq!(out, "1 2 | *\n");
    let ml = write(dir.path(), "u.data", "1 1 5 0\n1 2 3 0\n2 2 4 0\n");
    let target = dir.path().join("ml.txt");
    ok(
        &["import", "--kind", "movielens", "--top-movies", "2", "--top-users", "2", &ml, "-o", target.to_str().unwrap()],
        None,
    );
    assert_eq!(std::fs::read_to_string(target).unwrap(), "1 | 2\n2 | *\n");
    assert_eq!(code(&["import", "--kind", "movielens", "--top-movies", "3", &ml], None), 2);
    assert_eq!(code(&["import", "--kind", "sushi", "/nonexistent"], None), 2);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bench.toml",
        r#"
methods = ["lc-median", "fas-pivot", "faslp-pivot"]
metric = "kendall"
trials = 3
seed = 4
reference = "fas-pivot"

[source]
kind = "mallows"
n = 6
m = 10
lambda = [0.5]
"#,
    );
    let a = ok(&["bench", &config], None);
    assert!(a.starts_with("method,grid_value,trials,mean_d_av,std_d_av,normalized_ratio,wall_time_s\n"));
    assert_eq!(a.lines().count(), 4);
    assert_eq!(a, ok(&["--threads", "1", "bench", &config], None));
    let timed = ok(&["bench", &config, "--timing"], None);
    assert!(!timed.lines().nth(1).unwrap().ends_with(",-"));
    let bad = write(dir.path(), "bad.toml", "methods = []\n");
    assert_eq!(code(&["bench", &bad], None), 1);
}

#[test]
fn verify_lemmas_and_sample_sizes() {
    let out = ok(&["verify", "lemmas", "--phi", "0.2", "--n", "4"], None);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().all(|l| l.ends_with("PASS")), "{out}");
    let out = ok(&["verify", "lemmas", "--phi", "0.9", "--n", "4"], None);
    assert!(out.contains("position-ratios phi=0.9 n=4 REGIME-VIOLATED"), "{out}");
    assert_eq!(
        ok(&["verify", "sample-complexity", "--guarantee", "median", "--n", "10", "--phi", "0.2"], None),
        "q=0.200000 c=5.555556 m=34\n"
    );
    assert_eq!(code(&["verify", "sample-complexity", "--guarantee", "median", "--n", "10", "--phi", "0.6"], None), 2);
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(code(&[], None), 1);
    assert_eq!(code(&["frobnicate"], None), 1);
    assert_eq!(code(&["--help"], None), 0);
    assert_eq!(code(&["encode"], Some("1 2\n1 2 3\n")), 2);
    assert_eq!(code(&["encode", "/nonexistent/file"], None), 2);
}
