//! End-to-end CLI checks: table output, sink files, exit codes.

use std::process::Command;

fn ptor() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ptor"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = ptor().args(args).output().expect("spawn ptor");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn field_report_reference_row() {
    let (code, stdout, _) = run(&["field", "--m", "41", "--p", "2"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("vptor=4"), "{stdout}");
    assert!(stdout.contains("Cp=1.4932"), "{stdout}");
}

#[test]
fn field_accepts_d_and_normalizes() {
    let (code, stdout, _) = run(&["field", "--d", "28", "--p", "2"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("m=7"), "{stdout}");
    assert!(stdout.contains("vptor=2"), "{stdout}");
}

#[test]
fn p_rational_fields_are_tagged() {
    let (code, stdout, _) = run(&["field", "--m", "5", "--p", "7"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("vptor=0 (p-rational)"), "{stdout}");
}

#[test]
fn scan_delta_table_rows() {
    let (code, stdout, _) = run(&[
        "scan-delta",
        "--p",
        "3",
        "--case",
        "ramified",
        "--max-d",
        "2000",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines,
        vec![
            "D=93 delta=1",
            "D=105 delta=2",
            "D=492 delta=3",
            "D=1896 delta=6"
        ]
    );
}

#[test]
fn usage_errors_exit_1() {
    let (code, _, _) = run(&["field", "--m", "41"]); // missing --p
    assert_eq!(code, 1);
    let (code, _, stderr) = run(&[
        "scan-delta",
        "--p",
        "3",
        "--case",
        "nonsense",
        "--max-d",
        "100",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("usage"), "{stderr}");
}

#[test]
fn capacity_errors_exit_2() {
    // class number above the configured ceiling must refuse, not guess
    let (code, _, stderr) = run(&[
        "field",
        "--m",
        "20406",
        "--p",
        "2",
        "--class-ceiling",
        "1000",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("capacity"), "{stderr}");
}

#[test]
fn excluded_field_is_rejected() {
    let (code, _, stderr) = run(&["field", "--m", "2", "--p", "2"]);
    assert_eq!(code, 1, "{stderr}");
}

#[test]
fn sink_files_roundtrip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let (code, _, _) = run(&[
        "scan-vptor",
        "--p",
        "13",
        "--max-d",
        "3000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("kind,p,D,m,"), "{text}");
    assert!(text.contains("vptor-min,13,8,2,1,1,"), "{text}");
    assert!(
        text.lines()
            .last()
            .unwrap()
            .starts_with("# meta kind=vptor-min"),
        "{text}"
    );

    let jsonl = dir.path().join("rows.jsonl");
    let (code, _, _) = run(&[
        "scan-vptor",
        "--p",
        "13",
        "--max-d",
        "3000",
        "--out",
        jsonl.to_str().unwrap(),
        "--format",
        "jsonl",
    ]);
    assert_eq!(code, 0);
    let (records, meta) =
        ptor::harness::sink_read(&jsonl, ptor::harness::SinkFormat::Jsonl).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].d.as_deref(), Some("8"));
    assert_eq!(meta.unwrap().kind, "vptor-min");
}

#[test]
fn oracle_verify_fixtures_subset_passes() {
    // point at the committed fixtures from the workspace root
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let (code, stdout, stderr) = {
        let out = ptor()
            .current_dir(&root)
            .args(["oracle-verify", "--mode", "fixtures"])
            .output()
            .unwrap();
        (
            out.status.code().unwrap_or(-1),
            String::from_utf8_lossy(&out.stdout).into_owned(),
            String::from_utf8_lossy(&out.stderr).into_owned(),
        )
    };
    assert_eq!(code, 0, "stdout: {stdout} stderr: {stderr}");
    assert!(stdout.contains("disagreements=0"), "{stdout}");
}

#[test]
fn oracle_verify_detects_planted_disagreement() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(
        &path,
        "{\"key\":\"quad:41\",\"p\":2,\"vptor\":5,\"provenance\":\"planted\"}\n",
    )
    .unwrap();
    let (code, stdout, _) = run(&[
        "oracle-verify",
        "--mode",
        "fixtures",
        "--fixtures",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 5);
    assert!(stdout.contains("DISAGREEMENT"), "{stdout}");
}

#[test]
fn washington_generator_rows() {
    let (code, stdout, _) = run(&[
        "washington",
        "--p",
        "2",
        "--k-min",
        "9",
        "--k-max",
        "9",
        "--a-min",
        "1",
        "--a-max",
        "1",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("N=513"), "{stdout}");
    assert!(
        stdout.contains("(-134480895)*x^2+(-263169)*x+(-1)"),
        "{stdout}"
    );
}
