mod common;

use std::path::Path;

use common::{only_run, read, report_files, run_cli, task_subset, tasks_dir};

fn eval_args<'a>(tasks: &'a str, runs: &'a str, cache: &'a str, provider: &'a str) -> Vec<&'a str> {
    vec![
        "eval",
        "--tasks",
        tasks,
        "--provider",
        provider,
        "--runs-dir",
        runs,
        "--cache-dir",
        cache,
        "--preset",
        "custom",
        "--temperatures",
        "0.5,1.0",
        "--strategies",
        "default,pcot",
        "--samples",
        "2",
    ]
}

fn ok(o: &std::process::Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tasks_dir();
    let tasks = t.to_str().unwrap();
    let cwd = tmp.path();

    assert_eq!(run_cli(&["eval"], cwd).status.code(), Some(2));
    assert_eq!(run_cli(&["bogus"], cwd).status.code(), Some(2));
    assert_eq!(run_cli(&["eval", "--tasks", tasks, "--provider", "nope", "--no-cache"], cwd).status.code(), Some(1));
    assert_eq!(run_cli(&["report", "no-such-run"], cwd).status.code(), Some(1));
    assert_eq!(run_cli(&["tasks", "validate", "/definitely/missing"], cwd).status.code(), Some(1));

    let small = cwd.join("small");
    task_subset(&small, &["occupation_journalist"]);
    let s = small.to_str().unwrap();
    let silent = run_cli(&["eval", "--tasks", s, "--provider", "mock-silent", "--no-cache", "--samples", "1"], cwd);
    assert_eq!(silent.status.code(), Some(3), "{}", String::from_utf8_lossy(&silent.stdout));
}

#[test]
fn report_formats_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let cache = tmp.path().join("cache");
    let t = tasks_dir();
    let args = eval_args(t.to_str().unwrap(), runs.to_str().unwrap(), cache.to_str().unwrap(), "mock-biased");
    let o = run_cli(&args, tmp.path());
    ok(&o);
    let run = only_run(&runs);
    let files = report_files(&run);

    let json: serde_json::Value = serde_json::from_str(&files["report.json"]).unwrap();
    let rows = json["reports"].as_array().unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["Default T=0.5", "P-CoT T=0.5", "Default T=1.0", "P-CoT T=1.0"]);
    for r in rows {
        assert_eq!(r["n_snippets"], 28);
        assert_eq!(r["overall_cbs"], 100.0);
    }

    let csv_rows: Vec<&str> = files["report.csv"].lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(csv_rows.len(), rows.len() + 1);
    assert!(csv_rows[0].starts_with("label,Overall,Age,Gender,Religion,Race,Employ.,Marital,Edu.,Pass@attr."));

    let table = &files["report.txt"];
    let header = table.lines().find(|l| !l.starts_with('#') && !l.trim().is_empty()).unwrap();
    for col in ["Overall", "Age", "Gender", "Religion", "Race", "Employ.", "Marital", "Edu.", "Pass@attr."] {
        assert!(header.contains(col), "table header lacks {col}: {header}");
    }
    assert!(table.contains("# BLS denominator:"));

    let run_id = run.file_name().unwrap().to_str().unwrap();
    for (fmt, file) in [("json", "report.json"), ("csv", "report.csv"), ("table", "report.txt")] {
        let o = run_cli(&["report", run_id, "--format", fmt, "--runs-dir", runs.to_str().unwrap()], tmp.path());
        ok(&o);
        assert_eq!(String::from_utf8(o.stdout).unwrap(), files[file], "re-emitted {fmt}");
    }
}

fn snapshot(runs: &Path) -> std::collections::BTreeMap<String, String> {
    report_files(&only_run(runs))
}

#[test]
fn warm_cache_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let t = tasks_dir();
    let first = tmp.path().join("runs-a");
    let second = tmp.path().join("runs-b");
    let a = run_cli(&eval_args(t.to_str().unwrap(), first.to_str().unwrap(), cache.to_str().unwrap(), "mock-fair"), tmp.path());
    ok(&a);
    assert!(String::from_utf8_lossy(&a.stdout).contains("112 unit(s) executed"));
    let b = run_cli(&eval_args(t.to_str().unwrap(), second.to_str().unwrap(), cache.to_str().unwrap(), "mock-fair"), tmp.path());
    ok(&b);
    assert!(String::from_utf8_lossy(&b.stdout).contains("0 live provider call(s)"), "{}", String::from_utf8_lossy(&b.stdout));
    assert_eq!(snapshot(&first), snapshot(&second));
}

#[test]
fn interrupted_run_resumes_to_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tasks_dir();
    let tasks = t.to_str().unwrap();
    let straight = tmp.path().join("straight");
    let resumed = tmp.path().join("resumed");
    let cache_a = tmp.path().join("cache-a");
    let cache_b = tmp.path().join("cache-b");
    ok(&run_cli(&eval_args(tasks, straight.to_str().unwrap(), cache_a.to_str().unwrap(), "mock-biased"), tmp.path()));

    let mut partial = eval_args(tasks, resumed.to_str().unwrap(), cache_b.to_str().unwrap(), "mock-biased");
    partial.extend(["--stop-after", "13", "--jobs", "3"]);
    let o = run_cli(&partial, tmp.path());
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("stopped early"));
    assert!(!only_run(&resumed).join("reports").exists());

    let mut rest = eval_args(tasks, resumed.to_str().unwrap(), cache_b.to_str().unwrap(), "mock-biased");
    rest.extend(["--jobs", "4"]);
    let o = run_cli(&rest, tmp.path());
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("13 already complete"), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(snapshot(&straight), snapshot(&resumed));
}

#[test]
fn resume_refuses_a_changed_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let small = tmp.path().join("small");
    task_subset(&small, &["occupation_journalist"]);
    let runs = tmp.path().join("runs");
    let base = [
        "eval",
        "--tasks",
        small.to_str().unwrap(),
        "--provider",
        "mock-fair",
        "--no-cache",
        "--runs-dir",
        runs.to_str().unwrap(),
        "--run-id",
        "fixed",
        "--samples",
        "1",
    ];
    ok(&run_cli(&base, tmp.path()));
    let mut changed = base.to_vec();
    changed.extend(["--seed", "9"]);
    let o = run_cli(&changed, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("digest"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flow_plans_emit_one_row_per_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let small = tmp.path().join("small");
    task_subset(&small, &["occupation_journalist", "hobby_hiking_group"]);
    for (plan, n) in [("workflows", 2), ("fairness-roles", 6), ("ablation", 5)] {
        let runs = tmp.path().join(format!("runs-{plan}"));
        let o = run_cli(
            &[
                "flow",
                "--plan",
                plan,
                "--tasks",
                small.to_str().unwrap(),
                "--provider",
                "mock-fair",
                "--no-cache",
                "--runs-dir",
                runs.to_str().unwrap(),
            ],
            tmp.path(),
        );
        ok(&o);
        let json: serde_json::Value = serde_json::from_str(&read(only_run(&runs).join("reports/report.json"))).unwrap();
        assert_eq!(json["reports"].as_array().unwrap().len(), n, "{plan}");
    }
}

#[test]
fn fma_rows_and_transcripts() {
    let tmp = tempfile::tempdir().unwrap();
    let small = tmp.path().join("small");
    task_subset(&small, &["occupation_journalist"]);
    let runs = tmp.path().join("runs");
    let o = run_cli(
        &[
            "fma",
            "--tasks",
            small.to_str().unwrap(),
            "--provider",
            "mock-fair",
            "--role-provider",
            "developer=mock-biased",
            "--no-cache",
            "--runs-dir",
            runs.to_str().unwrap(),
        ],
        tmp.path(),
    );
    ok(&o);
    let run = only_run(&runs);
    let json: serde_json::Value = serde_json::from_str(&read(run.join("reports/report.json"))).unwrap();
    let rows = json["reports"].as_array().unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["Developer", "Repairer (R1)", "Repairer (R2)", "Repairer (R3)"]);
    assert_eq!(rows[0]["overall_cbs"], 100.0);
    assert_eq!(rows[3]["overall_cbs"], 0.0);
    assert!(json["header"]["review_mode"] == "llm+static");
    assert!(run.join("occupation_journalist/fma/round1/faults.json").is_file());
    assert!(run.join("occupation_journalist/fma/prd.txt").is_file());

    let bad = run_cli(
        &["fma", "--tasks", small.to_str().unwrap(), "--provider", "mock-fair", "--role-provider", "janitor=mock-fair", "--no-cache"],
        tmp.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("janitor"));
}
