use std::fs;
use std::path::Path;

use edx_ordinal::cli::run_cli;

fn ok(args: &[&str]) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["edx-ordinal"];
    argv.extend_from_slice(args);
    let code = run_cli(argv, &mut out, &mut err);
    assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
}

fn line(user: &str, course: &str, day: u32) -> String {
    format!(
        r#"{{"event_type":"play_video","event_source":"browser","time":"2021-09-{day:02}T12:00:00.000Z","context":{{"user_id":"{user}","course_id":"{course}"}},"event":{{"id":"v1","duration":100,"currentTime":0}}}}"#
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn setup(dir: &Path) -> (std::path::PathBuf, Vec<String>) {
    let config = dir.join("run.json");
    fs::write(
        &config,
        r#"{
            "cohorts": [
                {"course_id_pattern": "\\+2021_Fall$", "modality": "on_campus", "term_label": "Fall 2021", "anchor": "2021-09-01"},
                {"course_id_pattern": "\\+1T2021$", "modality": "online", "term_label": "2021"}
            ],
            "session_gap_minutes": 45
        }"#,
    )
    .unwrap();
    let lines = vec![
        line("a", "GTx+CS1301+2021_Fall", 1),
        line("a", "GTx+CS1301+2021_Fall", 9),
        line("b", "GTx+CS1301+2021_Fall", 2),
        line("c", "GTx+CS1301+1T2021", 3),
        line("d", "GTx+CS1301+1T2021", 20),
        line("e", "GTx+CS1301+unknown", 4),
    ];
    (config, lines)
}

#[test]
fn events_are_grouped_by_cohort_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let (config, lines) = setup(dir.path());
    let log = dir.path().join("log.jsonl");
    fs::write(&log, lines.join("\n")).unwrap();
    let out = dir.path().join("out");
    ok(&["pipeline", "--run-config", s(&config), "--out", s(&out), s(&log)]);

    let enrollment = fs::read_to_string(out.join("enrollment.csv")).unwrap();
    assert_eq!(
        enrollment,
        "modality,term_label,users,user_events,sessions\n\
         on_campus,Fall 2021,2,3,3\n\
         online,2021,2,2,2\n"
    );
    let weekly = fs::read_to_string(out.join("weekly.csv")).unwrap();
    let campus: Vec<&str> = weekly.lines().filter(|l| l.starts_with("on_campus")).collect();
    assert_eq!(campus, vec!["on_campus,Fall 2021,0,2,0", "on_campus,Fall 2021,1,0,1"]);
    // Online weeks count from January 1 of the first active year.
    let online: Vec<&str> = weekly.lines().filter(|l| l.starts_with("online")).collect();
    assert!(online.iter().any(|l| l.ends_with(",1,0")));

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["events_without_cohort"], 1);
    assert_eq!(meta["cohorts"][0]["anchor"], "2021-09-01");
    assert_eq!(meta["cohorts"][1]["anchor"], "2021-01-01");
}

#[test]
fn reports_do_not_depend_on_input_file_order() {
    let dir = tempfile::tempdir().unwrap();
    let (config, lines) = setup(dir.path());
    let first = dir.path().join("first.jsonl");
    let second = dir.path().join("second.jsonl");
    fs::write(&first, lines[..3].join("\n")).unwrap();
    fs::write(&second, lines[3..].join("\n")).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["pipeline", "--run-config", s(&config), "--out", s(&a), s(&first), s(&second)]);
    ok(&["pipeline", "--run-config", s(&config), "--out", s(&b), s(&second), s(&first)]);
    for name in [
        "aggregates.jsonl",
        "classifications.csv",
        "enrollment.csv",
        "breakdown.csv",
        "scores.csv",
        "scorer.csv",
        "weekly.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}
