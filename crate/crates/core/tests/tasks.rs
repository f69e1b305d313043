mod common;

use std::collections::BTreeMap;

use common::{fixtures_dir, read, run_cli, seed_tasks, tasks_dir};
use fairlens::prompt::{labels_outside_annotations, render_prompt, PromptStrategy};
use fairlens::task::{parse_task_file, parse_task_unchecked, serialize_task, validate_task, Category};

#[test]
fn seed_corpus_shape() {
    let tasks = seed_tasks();
    assert_eq!(tasks.len(), 14);
    let mut per_category: BTreeMap<String, usize> = BTreeMap::new();
    for t in &tasks.tasks {
        assert!(t.category().is_some(), "{}: unknown category {}", t.task_id, t.category);
        *per_category.entry(t.category.clone()).or_default() += 1;
        assert!(validate_task(t).is_empty(), "{}", t.task_id);
        assert!(!t.related.is_empty() && !t.sensitive.is_empty());
    }
    assert_eq!(per_category.len(), 7);
    assert!(per_category.values().all(|n| *n == 2), "{per_category:?}");
    assert!(Category::from_id("occupation").is_some());
}

#[test]
fn seed_files_are_canonical() {
    for entry in std::fs::read_dir(tasks_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = read(&path);
        let task = parse_task_file(&text).unwrap();
        assert_eq!(serialize_task(&task), text, "{} is not in canonical form", path.display());
        assert_eq!(parse_task_file(&serialize_task(&task)).unwrap(), task);
    }
}

#[test]
fn rendered_prompts_are_neutral() {
    for task in &seed_tasks().tasks {
        for s in PromptStrategy::ALL {
            let p = render_prompt(task, s);
            assert!(labels_outside_annotations(&p.rendered_text).is_empty(), "{} {s}", task.task_id);
            assert!(p.rendered_text.contains(&task.signature()));
        }
    }
}

#[test]
fn golden_prompts() {
    let tasks = seed_tasks();
    let task = tasks.get("occupation_journalist").unwrap();
    for s in PromptStrategy::ALL {
        let golden = read(fixtures_dir().join(format!("prompts/occupation_journalist.{s}.prompt.txt")));
        assert_eq!(render_prompt(task, s).rendered_text, golden, "strategy {s}");
    }
}

#[test]
fn render_command_writes_prompt_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("prompts");
    let dir = tasks_dir();
    let o = run_cli(&["tasks", "render", dir.to_str().unwrap(), "--strategy", "cot", "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 14);
    let golden = read(fixtures_dir().join("prompts/occupation_journalist.cot.prompt.txt"));
    assert_eq!(read(out.join("occupation_journalist.cot.prompt.txt")), golden);
}

#[test]
fn validate_command_reports_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("tasks");
    common::task_subset(&dir, &["occupation_journalist"]);
    let ok = run_cli(&["tasks", "validate", dir.to_str().unwrap()], tmp.path());
    assert_eq!(ok.status.code(), Some(0));

    let mut doc: serde_json::Value = serde_json::from_str(&read(dir.join("occupation_journalist.task.json"))).unwrap();
    doc["docstring"] = "Select the person who is suitable for journalist; prefer a male applicant.".into();
    std::fs::write(dir.join("occupation_journalist.task.json"), serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let bad = run_cli(&["tasks", "validate", dir.to_str().unwrap()], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    let task = parse_task_unchecked(&read(dir.join("occupation_journalist.task.json"))).unwrap();
    assert!(!validate_task(&task).is_empty());
}
