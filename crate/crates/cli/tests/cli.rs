use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sicforge"));
    c.env_remove("SICFORGE_DIGITS");
    c
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

#[test]
fn numtheory_row_for_seven() {
    let (code, out, _) = run(bin().args(["numtheory", "--d", "7"]));
    assert_eq!(code, 0);
    let row = out.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split('\t').collect();
    assert_eq!(&cols[..3], &["2", "7", "2"]);
    assert_eq!(&cols[5..8], &["1+√2", "-1", "1"]);
}

#[test]
fn shipped_fiducials_verify() {
    for f in ["data/hesse.sic", "data/qubit.sic"] {
        let (code, out, _) = run(bin().args(["verify", "--in"]).arg(repo(f)));
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("verdict = pass"));
    }
}

#[test]
fn impossible_frame_plateaus() {
    let (code, out, _) = run(bin().args(["search", "--d", "3", "--n", "5", "--restarts", "8", "--no-catalog"]));
    assert_eq!(code, 1);
    assert!(out.contains("status = plateau"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(bin().args(["search", "--d"])).0, 2);
    assert_eq!(run(bin().args(["roundtrip", "--d", "5"])).0, 2);
    assert_eq!(run(bin().args(["numtheory", "--range", "5..2"])).0, 2);
    let (code, _, err) = run(bin().args(["verify", "--in", "/nonexistent/file.sic"]));
    assert_eq!(code, 2);
    assert!(err.contains("cannot read"));
}

#[test]
fn malformed_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.sic");
    std::fs::write(&path, "SICDATA 1\nd = 2\nbasis = standard\ndigits = 40\n1 0\n0 zero\n").unwrap();
    let (code, _, err) = run(bin().args(["verify", "--in"]).arg(&path));
    assert_eq!(code, 2);
    assert!(err.contains("line 6"), "{err}");
}

#[test]
fn digits_flag_beats_environment() {
    let hesse = repo("data/hesse.sic");
    let (_, out, _) = run(bin().env("SICFORGE_DIGITS", "45").args(["verify", "--in"]).arg(&hesse));
    assert!(out.contains("precision = 45"));
    let (_, out, _) = run(bin().env("SICFORGE_DIGITS", "45").args(["verify", "--digits", "50", "--in"]).arg(&hesse));
    assert!(out.contains("precision = 50"));
    let (code, _, _) = run(bin().env("SICFORGE_DIGITS", "many").args(["verify", "--in"]).arg(&hesse));
    assert_eq!(code, 2);
}

#[test]
fn catalog_round_trip_preserves_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("cat");
    let (code, out, _) = run(bin().args(["search", "--d", "4", "--orbit", "--restarts", "4", "--catalog"]).arg(&cat));
    assert_eq!(code, 0);
    assert!(out.contains("catalog_id = d4-search-001"));
    let index = std::fs::read_to_string(cat.join("index.txt")).unwrap();
    assert!(index.contains("d4-search-001 4 search 40 pass"));
    let (code, out, _) = run(bin().args(["verify", "--in"]).arg(cat.join("d4-search-001.sic")));
    assert_eq!(code, 0, "{out}");
}

#[test]
fn fingerprint_then_construct() {
    let dir = tempfile::tempdir().unwrap();
    let fid = dir.path().join("f7.sic");
    let units = dir.path().join("u7.units");
    let (code, _, _) = run(bin().args(["roundtrip", "--d", "7", "--out"]).arg(&fid));
    assert_eq!(code, 0);
    let (code, out, _) = run(bin().args(["fingerprint", "--in"]).arg(&fid).arg("--units-out").arg(&units));
    assert_eq!(code, 0);
    assert!(out.contains("minpoly = 1 -2 1 -2 1"));
    let (code, out, _) = run(bin().args(["construct", "--units"]).arg(&units));
    assert_eq!(code, 0, "{out}");
    let (code, _, _) = run(bin().args(["construct", "--sign", "-1", "--units"]).arg(&units));
    assert_eq!(code, 1);
}

#[test]
fn reports_match_golden_files() {
    let hesse = repo("data/hesse.sic");
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("numtheory_1_20.txt", vec!["numtheory", "--range", "1..20"]),
        ("search_d4_seed5.txt", vec!["search", "--d", "4", "--orbit", "--seed", "5", "--restarts", "4", "--no-catalog"]),
        ("search_d3_n6_seed2.txt", vec!["search", "--d", "3", "--n", "6", "--seed", "2", "--restarts", "4", "--no-catalog"]),
        ("roundtrip_d7.txt", vec!["roundtrip", "--d", "7"]),
    ];
    for (name, args) in cases {
        let first = run(bin().args(&args)).1;
        let second = run(bin().args(&args)).1;
        assert_eq!(first, second, "{name}: consecutive runs differ");
        assert_eq!(first, golden(name), "{name}: differs from golden file");
    }
    let out = run(bin().args(["verify", "--symmetry", "--in"]).arg(&hesse)).1;
    assert_eq!(out, golden("verify_hesse.txt"));
}
