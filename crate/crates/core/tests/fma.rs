mod common;

use common::{gateway, seed_tasks};
use fairlens::experiment::{evaluate_code, EvalSettings};
use fairlens::fma::{prompts, run_fma, FairnessClassification, FaultReport, FmaAgents, Prd, ReviewMode, MAX_ROUNDS};
use fairlens::gateway::MockPersona;
use fairlens::metrics::{cbs, Corpus};
use fairlens::roles::AgentRole;
use fairlens::sandbox::BuiltinExecutor;
use fairlens::task::TaskDefinition;

const SETTINGS: EvalSettings = EvalSettings { suite_budget: 1000, seed: 0, timeout: 10.0 };

fn biased_dev_fair_repair() -> FmaAgents {
    FmaAgents::new(gateway(MockPersona::Fair)).with_role(AgentRole::Developer, gateway(MockPersona::Biased))
}

fn post_repair_cbs(pairs: &[(&TaskDefinition, String)]) -> f64 {
    let exec = BuiltinExecutor::default();
    let records =
        pairs.iter().map(|(t, code)| evaluate_code(t, &format!("{}.final", t.task_id), Some(code), SETTINGS, &exec).unwrap()).collect();
    cbs(&Corpus::new("R3", records), None).unwrap()
}

#[test]
fn biased_developer_is_repaired_on_every_task() {
    let tasks = seed_tasks();
    let agents = biased_dev_fair_repair();
    let mut finals = Vec::new();
    let mut initial = Vec::new();
    for task in &tasks.tasks {
        let r = run_fma(task, &agents, MAX_ROUNDS).unwrap();
        assert!(r.rounds_executed >= 1 && r.rounds_executed <= MAX_ROUNDS, "{}", task.task_id);
        assert!(r.final_check.is_clean(), "{}: {:?}", task.task_id, r.final_check);
        assert!(r.aborted().is_none());
        assert_ne!(r.initial_code, r.final_code);
        initial.push((task, r.initial_code.clone()));
        finals.push((task, r.final_code.clone()));
    }
    assert_eq!(post_repair_cbs(&initial), 100.0);
    assert_eq!(post_repair_cbs(&finals), 0.0);
}

#[test]
fn fair_developer_stops_after_one_round() {
    let tasks = seed_tasks();
    let agents = FmaAgents::new(gateway(MockPersona::Fair));
    for task in &tasks.tasks {
        let r = run_fma(task, &agents, MAX_ROUNDS).unwrap();
        assert_eq!(r.rounds_executed, 1, "{}", task.task_id);
        assert!(r.terminated_early);
        assert_eq!(r.final_code, r.initial_code);
        assert!(r.last_report().unwrap().is_clean());
    }
}

#[test]
fn stubborn_developer_exhausts_the_rounds() {
    let tasks = seed_tasks();
    let agents = FmaAgents::new(gateway(MockPersona::Biased));
    for task in &tasks.tasks {
        let r = run_fma(task, &agents, MAX_ROUNDS).unwrap();
        assert_eq!(r.rounds_executed, MAX_ROUNDS, "{}", task.task_id);
        assert!(!r.terminated_early);
        assert!(!r.last_report().unwrap().is_clean());
        assert!(!r.final_check.is_clean());
    }
}

#[test]
fn static_review_mode_needs_no_reviewer_agent() {
    let tasks = seed_tasks();
    let task = tasks.get("occupation_journalist").unwrap();
    // A reviewer that always answers "no faults" cannot hide the bias when
    // the static check runs.
    let agents =
        biased_dev_fair_repair().with_role(AgentRole::FairnessReviewer, gateway(MockPersona::Biased)).with_review_mode(ReviewMode::Static);
    let r = run_fma(task, &agents, MAX_ROUNDS).unwrap();
    assert!(!r.rounds[0].fairness.as_ref().unwrap().is_clean());
    assert!(r.final_check.is_clean());

    let llm_only =
        biased_dev_fair_repair().with_role(AgentRole::FairnessReviewer, gateway(MockPersona::Biased)).with_review_mode(ReviewMode::Llm);
    let r = run_fma(task, &llm_only, MAX_ROUNDS).unwrap();
    assert!(r.terminated_early);
    assert!(!r.final_check.is_clean(), "the final static check still sees the bias");
}

#[test]
fn silent_agents_abort_setup() {
    let tasks = seed_tasks();
    let task = tasks.get("occupation_journalist").unwrap();
    assert!(run_fma(task, &FmaAgents::new(gateway(MockPersona::Silent)), MAX_ROUNDS).is_err());
}

#[test]
fn transcripts_are_written() {
    let tasks = seed_tasks();
    let task = tasks.get("hobby_chess_club").unwrap();
    let r = run_fma(task, &biased_dev_fair_repair(), MAX_ROUNDS).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    r.write_transcript(tmp.path()).unwrap();
    let root = tmp.path().join("fma");
    for f in ["prd.txt", "classification.json", "developer.py", "summary.json", "round1/code.py", "round1/faults.json"] {
        assert!(root.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn agent_prompts_only_take_pipeline_artifacts() {
    let _: fn(&TaskDefinition) -> String = prompts::analyst_prompt;
    let _: fn(&TaskDefinition, &Prd) -> String = prompts::classification_prompt;
    let _: fn(&TaskDefinition, &Prd, &FairnessClassification) -> String = prompts::developer_prompt;
    let _: fn(&TaskDefinition, &Prd, &str) -> String = prompts::functional_review_prompt;
    let _: fn(&TaskDefinition, &Prd, &FairnessClassification, &str, &FaultReport) -> String = prompts::functional_repair_prompt;
    let _: fn(&TaskDefinition, &FairnessClassification, &str) -> String = prompts::fairness_review_prompt;
    let _: fn(&TaskDefinition, &Prd, &FairnessClassification, &str, &FaultReport) -> String = prompts::fairness_repair_prompt;
}
