//! Command-line interface of the `fairlens` binary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::experiment::{
    emit_reports, run_dir, Experiment, ExperimentError, FlowPlan, Pipeline, Preset, ReportFormat, Resources, RunConfig, RunOutcome,
    SweepConfig,
};
use crate::fma::{ReviewMode, MAX_ROUNDS};
use crate::gateway::{provider_from_id, Gateway, ResponseCache};
use crate::metamorphic::DEFAULT_SUITE_BUDGET;
use crate::prompt::{render_prompt, PromptStrategy};
use crate::roles::AgentRole;
use crate::sandbox::{configured_timeout, BuiltinExecutor, Executor, RecordedExecutor, RecordingExecutor, ShimExecutor};
use crate::task::{load_benchmark, validate_task, TaskError, TaskSet, TASK_EXTENSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fairlens", version, about = "Fairness testing and mitigation for generated code")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate or render task definitions.
    #[command(subcommand)]
    Tasks(TasksCommand),
    /// Generate snippets and measure their bias.
    Eval(EvalArgs),
    /// Run the fairness monitor repair pipeline.
    Fma(FmaArgs),
    /// Run multi-agent process models.
    Flow(FlowArgs),
    /// Re-emit the reports of a run.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum TasksCommand {
    /// Check every task file in a directory.
    Validate { dir: PathBuf },
    /// Render code prompts, printing them or writing `<task_id>.<strategy>.prompt.txt` files.
    Render {
        dir: PathBuf,
        #[arg(long)]
        strategy: Option<PromptStrategy>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Directory of `*.task.json` files.
    #[arg(long)]
    pub tasks: PathBuf,
    /// mock-fair, mock-biased, mock-silent, playlist:<file>, openai or anthropic.
    #[arg(long)]
    pub provider: String,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
    #[arg(long)]
    pub run_id: Option<String>,
    /// Response cache directory (defaults to $FAIRLENS_CACHE_DIR or ./cache).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    /// Test tuples per snippet.
    #[arg(long, default_value_t = DEFAULT_SUITE_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// builtin, shim:<command>, recorded:<dir> or record:<dir>.
    #[arg(long, default_value = "builtin")]
    pub executor: String,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Stop after this many units; rerun the same command to resume.
    #[arg(long)]
    pub stop_after: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "rq1")]
    pub preset: Preset,
    /// Comma-separated temperatures (custom preset).
    #[arg(long, value_delimiter = ',')]
    pub temperatures: Vec<f64>,
    /// Comma-separated strategies (custom preset).
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<PromptStrategy>,
    #[arg(long)]
    pub samples: Option<u32>,
}

#[derive(Debug, Args)]
pub struct FmaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = MAX_ROUNDS)]
    pub max_rounds: u32,
    #[arg(long, default_value = "llm+static")]
    pub review_mode: ReviewMode,
    /// Provider for one agent role, as `role=provider`; repeatable.
    #[arg(long = "role-provider")]
    pub role_providers: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "workflows")]
    pub plan: FlowPlan,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub run_id: String,
    #[arg(long, default_value = "table")]
    pub format: ReportFormat,
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Usage(String),
    #[error("task validation failed")]
    Validation,
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        CliError::Experiment(e.into())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(CliError::Validation) => EXIT_VALIDATION,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Usage(_) | CliError::Experiment(ExperimentError::Task(_)) => EXIT_VALIDATION,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Tasks(TasksCommand::Validate { dir }) => validate_dir(&dir, out),
        Command::Tasks(TasksCommand::Render { dir, strategy, out: target }) => {
            let tasks = load_benchmark(&dir)?;
            let strategies = strategy.map(|s| vec![s]).unwrap_or_else(|| PromptStrategy::ALL.to_vec());
            for task in &tasks.tasks {
                for s in &strategies {
                    let p = render_prompt(task, *s);
                    match &target {
                        Some(d) => {
                            std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
                            let path = d.join(format!("{}.{}.prompt.txt", task.task_id, s));
                            std::fs::write(&path, &p.rendered_text).map_err(|e| io(&path, e))?;
                        }
                        None => {
                            let _ = writeln!(out, "### {} ({})\n{}", task.task_id, s, p.rendered_text);
                        }
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Eval(a) => {
            let sweep = match a.preset {
                Preset::Rq1 => SweepConfig::rq1(),
                Preset::Rq2 => SweepConfig::rq2(),
                Preset::Custom => {
                    if a.temperatures.is_empty() || a.strategies.is_empty() {
                        return Err(CliError::Usage("the custom preset needs --temperatures and --strategies".into()));
                    }
                    SweepConfig { temperatures: a.temperatures.clone(), strategies: a.strategies.clone(), samples_per_task: 5 }
                }
            };
            let sweep = SweepConfig { samples_per_task: a.samples.unwrap_or(sweep.samples_per_task), ..sweep };
            if sweep.samples_per_task == 0 {
                return Err(CliError::Usage("--samples must be at least 1".into()));
            }
            launch(&a.common, Pipeline::Eval { preset: a.preset, sweep }, BTreeMap::new(), out)
        }
        Command::Fma(a) => {
            if a.max_rounds > MAX_ROUNDS {
                return Err(CliError::Usage(format!("--max-rounds must be at most {MAX_ROUNDS}")));
            }
            let mut roles = BTreeMap::new();
            for spec in &a.role_providers {
                let (role, provider) =
                    spec.split_once('=').ok_or_else(|| CliError::Usage(format!("expected role=provider, got `{spec}`")))?;
                let role: AgentRole = serde_json::from_value(serde_json::Value::String(role.to_string()))
                    .map_err(|_| CliError::Usage(format!("unknown role `{role}`")))?;
                roles.insert(role, provider.to_string());
            }
            let pipeline = Pipeline::Fma { max_rounds: a.max_rounds, review_mode: a.review_mode, role_providers: BTreeMap::new() };
            launch(&a.common, pipeline, roles, out)
        }
        Command::Flow(a) => launch(&a.common, Pipeline::Flow { plan: a.plan, configs: a.plan.configs() }, BTreeMap::new(), out),
        Command::Report(a) => {
            let dir = run_dir(&a.runs_dir, &a.run_id)?;
            let set = emit_reports(&dir)?;
            let _ = write!(out, "{}", a.format.render(&set));
            Ok(EXIT_OK)
        }
    }
}

fn io(path: &Path, source: std::io::Error) -> CliError {
    CliError::Experiment(ExperimentError::Io { path: path.display().to_string(), source })
}

fn validate_dir(dir: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(TASK_EXTENSION))
        .collect();
    entries.sort();
    let mut failed = 0;
    for path in &entries {
        let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        match crate::task::parse_task_unchecked(&text) {
            Ok(task) => {
                let violations = validate_task(&task);
                if violations.is_empty() {
                    let _ = writeln!(out, "ok      {name}");
                } else {
                    failed += 1;
                    for v in violations {
                        let _ = writeln!(out, "invalid {name}: {v}");
                    }
                }
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(out, "invalid {name}: {e}");
            }
        }
    }
    if entries.is_empty() {
        let _ = writeln!(out, "no task files in {}", dir.display());
        return Err(CliError::Validation);
    }
    if failed == 0 {
        if let Err(e) = load_benchmark(dir) {
            let _ = writeln!(out, "invalid: {e}");
            return Err(CliError::Validation);
        }
    }
    let _ = writeln!(out, "{} task(s), {failed} invalid", entries.len());
    if failed > 0 {
        Err(CliError::Validation)
    } else {
        Ok(EXIT_OK)
    }
}

pub fn executor_from_spec(spec: &str) -> Result<Arc<dyn Executor>, CliError> {
    if spec == "builtin" {
        return Ok(Arc::new(BuiltinExecutor::default()));
    }
    if let Some(cmd) = spec.strip_prefix("shim:") {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| CliError::Usage("shim: needs a command".into()))?;
        return Ok(Arc::new(ShimExecutor::new(program, parts.collect())));
    }
    if let Some(dir) = spec.strip_prefix("recorded:") {
        let rec = RecordedExecutor::load(Path::new(dir)).map_err(ExperimentError::from)?;
        return Ok(Arc::new(rec));
    }
    if let Some(dir) = spec.strip_prefix("record:") {
        return Ok(Arc::new(RecordingExecutor::new(BuiltinExecutor::default(), dir)));
    }
    Err(CliError::Usage(format!("unknown executor `{spec}`")))
}

fn gateway_for(provider: &str, cache: &Option<Arc<ResponseCache>>) -> Result<Arc<Gateway>, CliError> {
    let p = provider_from_id(provider).map_err(ExperimentError::from)?;
    let mut gw = Gateway::new(p);
    if let Some(c) = cache {
        gw = gw.with_cache(c.clone());
    }
    Ok(Arc::new(gw))
}

/// Assembles the run configuration and its resources from common flags.
pub fn prepare(
    common: &CommonArgs,
    mut pipeline: Pipeline,
    role_providers: &BTreeMap<AgentRole, String>,
) -> Result<(RunConfig, Resources), CliError> {
    let tasks: TaskSet = load_benchmark(&common.tasks)?;
    let cache = if common.no_cache {
        None
    } else {
        Some(Arc::new(match &common.cache_dir {
            Some(d) => ResponseCache::new(d),
            None => ResponseCache::from_env(),
        }))
    };
    let gateway = gateway_for(&common.provider, &cache)?;
    let mut role_gateways = BTreeMap::new();
    for (role, provider) in role_providers {
        role_gateways.insert(*role, gateway_for(provider, &cache)?);
    }
    if let Pipeline::Fma { role_providers: ids, .. } = &mut pipeline {
        *ids = role_gateways.iter().map(|(r, g)| (r.id().to_string(), g.provider_id())).collect();
    }
    let executor = executor_from_spec(&common.executor)?;
    let config = RunConfig {
        tasks_digest: tasks.digest(),
        task_ids: tasks.tasks.iter().map(|t| t.task_id.clone()).collect(),
        provider: gateway.provider_id(),
        model: common.model.clone().unwrap_or_else(|| gateway.default_model()),
        pipeline,
        suite_budget: common.budget,
        seed: common.seed,
        sandbox_timeout: configured_timeout(),
        executor: common.executor.clone(),
    };
    Ok((config, Resources { tasks, gateway, role_gateways, executor }))
}

fn launch(
    common: &CommonArgs,
    pipeline: Pipeline,
    role_providers: BTreeMap<AgentRole, String>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let (config, resources) = prepare(common, pipeline, &role_providers)?;
    let mut exp = Experiment::new(config, resources, &common.runs_dir, common.run_id.clone());
    exp.jobs = common.jobs;
    exp.stop_after = common.stop_after;
    let outcome = exp.run()?;
    summarize(&outcome, out);
    Ok(outcome.exit_code())
}

fn summarize(o: &RunOutcome, out: &mut dyn Write) {
    let _ = writeln!(
        out,
        "run {}: {} unit(s) executed, {} already complete, {} failed, {} live provider call(s)",
        o.run_id,
        o.executed,
        o.skipped,
        o.failed.len(),
        o.live_calls
    );
    for (unit, e) in &o.failed {
        let _ = writeln!(out, "  failed {unit}: {e}");
    }
    if o.stopped {
        let _ = writeln!(out, "stopped early; rerun the same command to resume");
        return;
    }
    if let Some(set) = &o.reports {
        let _ = write!(out, "{}", ReportFormat::Table.render(set));
        let _ = writeln!(out, "reports written to {}", o.dir.join("reports").display());
    }
}
