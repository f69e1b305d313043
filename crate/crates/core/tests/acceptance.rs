//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Run with `cargo test -p fairlens-core --test acceptance -- --nocapture`
//! to see the lines; the test fails when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{gateway, only_run, read, report_files, run_cli, seed_tasks, task_subset, tasks_dir, FIG6_CODE, ORACLE_FIXTURES, WELCH_PAIRS};
use fairlens::experiment::{evaluate_code, load_results, EvalSettings, RunManifest};
use fairlens::fma::{prompts, run_fma, FairnessClassification, FaultReport, FmaAgents, Prd, MAX_ROUNDS};
use fairlens::gateway::MockPersona;
use fairlens::metamorphic::{brute_force_bias_oracle, interpret, synthesize_full_suite, DimensionVerdict};
use fairlens::metrics::{bls, bls_range, cbs, pass_at_attribute, round2, welch_t_test, Corpus, MetricsReport};
use fairlens::process::{ablation_plan, fairness_roles_plan, run_process, workflows_plan, DEVELOPMENT_ROLES};
use fairlens::prompt::FAIRNESS_ROLE_INSTRUCTION;
use fairlens::roles::AgentRole;
use fairlens::sandbox::{execute_snippet, BuiltinExecutor};
use fairlens::task::{find_dimension, TaskDefinition, REPORT_DIMENSION_ORDER};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<(), String>;
type Criterion = fn() -> Check;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration) -> Check {
    let took = start.elapsed();
    ensure!(took < limit, "took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs());
    Ok(())
}

fn cli_ok(args: &[&str], cwd: &Path) -> Result<String, String> {
    let o = run_cli(args, cwd);
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    ensure!(o.status.success(), "`fairlens {}` exited {:?}: {}", args[0], o.status.code(), String::from_utf8_lossy(&o.stderr));
    Ok(stdout)
}

fn report_json(run: &Path) -> Result<Value, String> {
    serde_json::from_str(&read(run.join("reports/report.json"))).map_err(|e| e.to_string())
}

fn worked_example() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    let tasks = cwd.join("tasks");
    task_subset(&tasks, &["occupation_journalist"]);
    let playlist = cwd.join("playlist.json");
    let entry = serde_json::json!([{ "response": format!("```python\n{FIG6_CODE}```\n") }]);
    std::fs::write(&playlist, entry.to_string()).unwrap();
    let provider = format!("playlist:{}", playlist.display());
    let verdicts = cwd.join("verdicts");

    let mut rows = Vec::new();
    for (runs, executor) in
        [("runs-live", format!("record:{}", verdicts.display())), ("runs-stub", format!("recorded:{}", verdicts.display()))]
    {
        let runs = cwd.join(runs);
        cli_ok(
            &[
                "eval",
                "--tasks",
                tasks.to_str().unwrap(),
                "--provider",
                &provider,
                "--no-cache",
                "--runs-dir",
                runs.to_str().unwrap(),
                "--executor",
                &executor,
                "--preset",
                "custom",
                "--temperatures",
                "1.0",
                "--strategies",
                "default",
                "--samples",
                "1",
            ],
            cwd,
        )?;
        let run = only_run(&runs);

        let manifest = RunManifest::load(&run).map_err(|e| e.to_string())?;
        let results = load_results(&run, &manifest).map_err(|e| e.to_string())?;
        let records: Vec<_> = results.iter().flat_map(|u| &u.records).collect();
        ensure!(records.len() == 1, "{} records", records.len());
        let verdict = records[0].record.bias.as_ref().ok_or("snippet not executable")?;
        let gender: &DimensionVerdict = &verdict.dimensions["gender"];
        let favored: BTreeSet<&str> = gender.favored.iter().map(String::as_str).collect();
        let expected: BTreeSet<String> = find_dimension("gender").unwrap().literals().into_iter().filter(|v| v != "transgender").collect();
        ensure!(gender.biased, "gender bias not flagged");
        ensure!(favored == expected.iter().map(String::as_str).collect(), "favored {favored:?}");
        ensure!(!verdict.dimensions["religion"].biased, "religion flagged");

        let report = report_json(&run)?;
        let row = &report["reports"][0];
        ensure!(row["overall_cbs"] == 100.0, "CBS {}", row["overall_cbs"]);
        ensure!(row["pass_at_attribute"] == 50.0, "Pass@attribute {}", row["pass_at_attribute"]);
        rows.push(report["reports"].clone());
    }
    ensure!(rows[0] == rows[1], "recorded-verdict stub produced different report rows");
    within(start, Duration::from_secs(30))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let tasks = seed_tasks();
    ensure!(ORACLE_FIXTURES.len() >= 20, "only {} fixtures", ORACLE_FIXTURES.len());
    for (name, task_id, code) in ORACLE_FIXTURES {
        let task = tasks.get(task_id).unwrap();
        let space: u128 = task.attributes().map(|a| a.exhaustive_values(usize::MAX).map_or(u128::MAX, |v| v.len() as u128)).product();
        ensure!(space <= 10_000, "{task_id}: instance space {space}");
        let suite = synthesize_full_suite(task).map_err(|e| e.to_string())?;
        let v = execute_snippet(&BuiltinExecutor::default(), name, task, code, &suite, 10.0).map_err(|e| e.to_string())?;
        let ours = interpret(&v, &suite).map_err(|e| e.to_string())?;
        let oracle = brute_force_bias_oracle(name, code, task).map_err(|e| e.to_string())?;
        ensure!(ours.flags() == oracle.flags(), "{name}: {:?} vs oracle {:?}", ours.flags(), oracle.flags());
    }
    within(start, Duration::from_secs(300))
}

fn random_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let n = rng.gen_range(1..30);
    let records = (0..n)
        .map(|i| {
            let usage = rng.gen_bool(0.8).then(|| (rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..3), rng.gen_range(0..3)));
            let mut r = common::record(&format!("s{i}"), &common::Rec { executable: rng.gen_bool(0.8), biased: &[], usage });
            if let Some(b) = r.bias.as_mut() {
                for _ in 0..rng.gen_range(0..4) {
                    let dim = *REPORT_DIMENSION_ORDER.choose(rng).unwrap();
                    let lits = find_dimension(dim).unwrap().literals();
                    let mut favored: Vec<String> = (0..rng.gen_range(1..4)).map(|_| lits.choose(rng).unwrap().clone()).collect();
                    favored.sort();
                    favored.dedup();
                    b.dimensions.insert(dim.into(), DimensionVerdict { attribute: dim.into(), biased: true, favored, witness: None });
                }
            }
            r
        })
        .collect();
    Corpus::new("random", records)
}

fn metric_arithmetic() -> Check {
    for case in common::hand_cases() {
        let c = common::corpus(case.name, &case.records);
        ensure!(cbs(&c, None).ok().map(round2) == case.cbs, "{}: CBS", case.name);
        for (dim, want) in case.dim_cbs {
            ensure!(round2(cbs(&c, Some(dim)).unwrap()) == *want, "{}: CBS {dim}", case.name);
        }
        for (dim, value, want) in case.bls {
            ensure!(round2(bls(&c, dim).unwrap().get(value).unwrap()) == *want, "{}: BLS {dim}/{value}", case.name);
        }
        for (dim, want) in case.bls_range {
            ensure!(round2(bls_range(&bls(&c, dim).unwrap())) == *want, "{}: BLS@Range {dim}", case.name);
        }
        ensure!(pass_at_attribute(&c).ok().map(round2) == case.pass, "{}: Pass@attribute", case.name);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let c = random_corpus(&mut rng);
        if let Ok(overall) = cbs(&c, None) {
            for dim in REPORT_DIMENSION_ORDER {
                let d = cbs(&c, Some(dim)).unwrap();
                ensure!(d <= overall, "corpus {i}: CBS {dim} {d} > overall {overall}");
            }
        }
        for dim in REPORT_DIMENSION_ORDER {
            let m = bls(&c, dim).unwrap();
            ensure!(m.values.iter().all(|(_, r)| (0.0..=1.0).contains(r)), "corpus {i}: BLS {dim} out of bounds");
            ensure!((0.0..=1.0).contains(&bls_range(&m)), "corpus {i}: BLS@Range {dim} out of bounds");
        }
        let mut shuffled = c.clone();
        shuffled.records.shuffle(&mut rng);
        ensure!(MetricsReport::from_corpus(&c) == MetricsReport::from_corpus(&shuffled), "corpus {i}: order changed the metrics");
    }
    Ok(())
}

fn t_test() -> Check {
    for (a, b, t, p) in WELCH_PAIRS {
        let r = welch_t_test(a, b).map_err(|e| e.to_string())?;
        ensure!((r.t - t).abs() < 1e-6, "t {} != {t}", r.t);
        ensure!((r.p_value - p).abs() < 1e-6, "p {} != {p}", r.p_value);
    }
    Ok(())
}

fn fma_contract() -> Check {
    let start = Instant::now();
    let tasks = seed_tasks();
    let settings = EvalSettings { suite_budget: 1000, seed: 0, timeout: 10.0 };
    let exec = BuiltinExecutor::default();

    let repair = FmaAgents::new(gateway(MockPersona::Fair)).with_role(AgentRole::Developer, gateway(MockPersona::Biased));
    let mut finals = Vec::new();
    for task in &tasks.tasks {
        let r = run_fma(task, &repair, MAX_ROUNDS).map_err(|e| e.to_string())?;
        ensure!(r.rounds_executed <= MAX_ROUNDS, "{}: {} rounds", task.task_id, r.rounds_executed);
        ensure!(r.final_check.is_clean(), "{}: final static check {:?}", task.task_id, r.final_check);
        let rec =
            evaluate_code(task, &format!("{}.final", task.task_id), Some(&r.final_code), settings, &exec).map_err(|e| e.to_string())?;
        finals.push(rec);
    }
    let post = cbs(&Corpus::new("repaired", finals), None).map_err(|e| e.to_string())?;
    ensure!(round2(post) == 0.0, "post-repair CBS {post}");

    let fair = FmaAgents::new(gateway(MockPersona::Fair));
    let stubborn = FmaAgents::new(gateway(MockPersona::Biased));
    for task in &tasks.tasks {
        let r = run_fma(task, &fair, MAX_ROUNDS).map_err(|e| e.to_string())?;
        ensure!(r.rounds_executed == 1 && r.terminated_early, "{}: fair developer ran {} rounds", task.task_id, r.rounds_executed);
        ensure!(r.final_code == r.initial_code, "{}: fair code changed", task.task_id);
        let r = run_fma(task, &stubborn, MAX_ROUNDS).map_err(|e| e.to_string())?;
        ensure!(r.rounds_executed == MAX_ROUNDS, "{}: stubborn developer ran {} rounds", task.task_id, r.rounds_executed);
        ensure!(r.last_report().is_some_and(|f| !f.is_clean()), "{}: stubborn final report is empty", task.task_id);
    }
    within(start, Duration::from_secs(120))
}

fn oracle_isolation() -> Check {
    let _: fn(&TaskDefinition) -> String = prompts::analyst_prompt;
    let _: fn(&TaskDefinition, &Prd) -> String = prompts::classification_prompt;
    let _: fn(&TaskDefinition, &Prd, &FairnessClassification) -> String = prompts::developer_prompt;
    let _: fn(&TaskDefinition, &Prd, &str) -> String = prompts::functional_review_prompt;
    let _: fn(&TaskDefinition, &Prd, &FairnessClassification, &str, &FaultReport) -> String = prompts::functional_repair_prompt;
    let _: fn(&TaskDefinition, &FairnessClassification, &str) -> String = prompts::fairness_review_prompt;
    let _: fn(&TaskDefinition, &Prd, &FairnessClassification, &str, &FaultReport) -> String = prompts::fairness_repair_prompt;

    let sources = [
        ("fma/mod.rs", include_str!("../src/fma/mod.rs")),
        ("fma/prompts.rs", include_str!("../src/fma/prompts.rs")),
        ("fma/review.rs", include_str!("../src/fma/review.rs")),
    ];
    let word = regex::Regex::new(r"\b(metamorphic|metrics|sandbox|experiment)\b").unwrap();
    for (file, text) in sources {
        if let Some((n, line)) = text.lines().enumerate().find(|(_, l)| word.is_match(l)) {
            return Err(format!("{file}:{} mentions a test-result module: {}", n + 1, line.trim()));
        }
    }
    Ok(())
}

fn process_plans() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let small = tmp.path().join("tasks");
    task_subset(&small, &["occupation_journalist", "hobby_hiking_group"]);
    let plans: [(&str, &[&str]); 3] = [
        ("workflows", &["Waterfall", "Scrum"]),
        ("fairness-roles", &["None (Baseline)", "All Roles", "Product Manager", "Architect", "Developer", "QA"]),
        ("ablation", &["All Roles (Baseline)", "No Tester", "No Architect + Tester", "No Req. Eng. + Tester", "Developer Only"]),
    ];
    for (plan, want) in plans {
        let runs = tmp.path().join(format!("runs-{plan}"));
        cli_ok(
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
        )?;
        let report = report_json(&only_run(&runs))?;
        let labels: Vec<&str> = report["reports"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
        ensure!(labels == want, "{plan}: {labels:?}");
    }

    let tasks = seed_tasks();
    for persona in [MockPersona::Fair, MockPersona::Biased] {
        let gw = gateway(persona);
        for task in &tasks.tasks {
            for cfg in fairness_roles_plan().iter().chain(&ablation_plan()).chain(&workflows_plan()) {
                let r = run_process(task, cfg, &gw, "mock").map_err(|e| e.to_string())?;
                if cfg.label != "Scrum" {
                    let expected: Vec<AgentRole> = DEVELOPMENT_ROLES.into_iter().filter(|role| cfg.has(*role)).collect();
                    let roles: Vec<AgentRole> = r.artifacts.iter().map(|a| a.role).collect();
                    ensure!(roles == expected, "{} / {}: artifact roles {roles:?}", task.task_id, cfg.label);
                    let mut seen: Vec<AgentRole> = Vec::new();
                    for p in &r.transcript {
                        if !seen.contains(&p.role) {
                            seen.push(p.role);
                        }
                    }
                    ensure!(seen == expected, "{} / {}: prompt order {seen:?}", task.task_id, cfg.label);
                }
                for p in &r.transcript {
                    let n = p.prompt.matches(FAIRNESS_ROLE_INSTRUCTION).count();
                    let want = usize::from(cfg.fairness_instructed.contains(&p.role));
                    ensure!(n == want, "{} / {} / {:?}: instruction appears {n} times", task.task_id, cfg.label, p.role);
                }
            }
        }
    }
    Ok(())
}

fn eval_args<'a>(tasks: &'a str, runs: &'a str, cache: &'a str) -> Vec<&'a str> {
    vec![
        "eval",
        "--tasks",
        tasks,
        "--provider",
        "mock-biased",
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

fn determinism_and_resume() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    let t = tasks_dir();
    let tasks = t.to_str().unwrap();
    let dir = |name: &str| cwd.join(name).to_str().unwrap().to_string();
    let (cold, warm, resumed) = (dir("runs-cold"), dir("runs-warm"), dir("runs-resumed"));
    let (cache, cache_resume) = (dir("cache"), dir("cache-resume"));

    cli_ok(&eval_args(tasks, &cold, &cache), cwd)?;
    let out = cli_ok(&eval_args(tasks, &warm, &cache), cwd)?;
    ensure!(out.contains("0 live provider call(s)"), "warm rerun still called the provider: {out}");
    let reference = report_files(&only_run(Path::new(&cold)));
    ensure!(report_files(&only_run(Path::new(&warm))) == reference, "warm-cache reports differ");

    let mut first = eval_args(tasks, &resumed, &cache_resume);
    first.extend(["--stop-after", "13", "--jobs", "3"]);
    let out = cli_ok(&first, cwd)?;
    ensure!(out.contains("stopped early"), "run was not interrupted: {out}");
    let mut rest = eval_args(tasks, &resumed, &cache_resume);
    rest.extend(["--jobs", "4"]);
    let out = cli_ok(&rest, cwd)?;
    ensure!(out.contains("13 already complete"), "resume did not pick up the finished units: {out}");
    ensure!(report_files(&only_run(Path::new(&resumed))) == reference, "resumed reports differ");
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 8] = [
        ("worked example end-to-end", worked_example),
        ("oracle equivalence", oracle_equivalence),
        ("metric arithmetic", metric_arithmetic),
        ("t-test", t_test),
        ("FMA loop contract", fma_contract),
        ("oracle isolation", oracle_isolation),
        ("process-model plans", process_plans),
        ("determinism and resume", determinism_and_resume),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {name} ({secs:.1}s)"),
            Err(why) => {
                println!("FAIL  {name} ({secs:.1}s): {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
