//! `longbio`: generate suites, run them against an endpoint or an offline
//! responder, score the responses and write reports.

mod config;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use longbio::biotext::TemplateBank;
use longbio::contextforge::{EssayCorpus, TokenCounter};
use longbio::corpus::{load_pool, AttributePool};
use longbio::evalrun::{self, request_body, CallStatus, ResponseRecord};
use longbio::oracle::Responder;
use longbio::promptkit::{build_prompt, PromptBundle, PromptTemplates};
use longbio::scorekit::{
    aggregate, attribute_split, depth_density_grid, grid_to_csv, hallucination_rate, rows_to_csv, score_all, GroupKey,
    ScoreRecord,
};
use longbio::taskgen::{generate_suite, load_suite, save_suite, Generator, SuiteRequest, TaskInstance};
use longbio::SCHEMA_VERSION;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use config::{Overrides, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "longbio",
    version,
    about = "Synthetic biography long-context benchmark pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated token budgets, e.g. `2K,8K`.
    #[arg(long, global = true, value_delimiter = ',')]
    budget: Vec<String>,
    /// Comma-separated tasks, e.g. `standard,rank:5`.
    #[arg(long, global = true, value_delimiter = ',')]
    task: Vec<String>,
    /// Instances per (task, budget).
    #[arg(long, global = true)]
    instances: Option<usize>,
    /// Token counter: `chars4`, `words13` or `cmd:<command>`.
    #[arg(long, global = true)]
    counter: Option<String>,
    /// Distractor density: `natural` or a probability.
    #[arg(long, global = true)]
    density: Option<String>,
    /// Haystack mode: `bios` or `essay`.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Comma-separated needle depths in [0, 1].
    #[arg(long, global = true, value_delimiter = ',')]
    depth: Vec<f64>,
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the task suite.
    Generate,
    /// Collect responses for a generated suite.
    Run {
        /// Write the exact request bodies instead of sending them.
        #[arg(long)]
        dry_run: bool,
        /// Answer offline with `oracle`, `random` or `gibberish`.
        #[arg(long)]
        responder: Option<String>,
    },
    /// Score collected responses.
    Score,
    /// Aggregate scores into tables.
    Report {
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        grid_depths: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        grid_densities: Vec<f64>,
    },
    /// Print the resolved config as TOML.
    Config,
}

const SUITE: &str = "suite.jsonl";
const REQUESTS: &str = "requests.jsonl";
const RESPONSES: &str = "responses.jsonl";
const SCORES: &str = "scores.jsonl";

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'a str,
    artifact: &'a str,
    seed: u64,
    config_hash: String,
    content_sha256: String,
    records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<serde_json::Value>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_manifest(
    cfg: &PipelineConfig,
    artifact: &str,
    records: usize,
    detail: Option<serde_json::Value>,
) -> Result<()> {
    let path = cfg.out_dir.join(artifact);
    let m = Manifest {
        schema: SCHEMA_VERSION,
        artifact,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        content_sha256: sha256_file(&path)?,
        records,
        detail,
    };
    let stem = artifact.rsplit_once('.').map_or(artifact, |(s, _)| s);
    let mpath = cfg.out_dir.join(format!("{stem}.manifest.json"));
    fs::write(&mpath, serde_json::to_string_pretty(&m)? + "\n")
        .with_context(|| format!("writing {}", mpath.display()))?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

struct Resources {
    pool: AttributePool,
    bank: TemplateBank,
    prompts: PromptTemplates,
    essays: EssayCorpus,
}

impl Resources {
    fn load(cfg: &PipelineConfig) -> Result<Resources> {
        Ok(Resources {
            pool: match &cfg.pool {
                Some(p) => load_pool(p)?,
                None => AttributePool::builtin(),
            },
            bank: match &cfg.templates {
                Some(p) => TemplateBank::load(p)?,
                None => TemplateBank::builtin(),
            },
            prompts: match &cfg.prompts {
                Some(p) => PromptTemplates::load(p)?,
                None => PromptTemplates::builtin(),
            },
            essays: if cfg.essays.is_empty() {
                EssayCorpus::builtin()
            } else {
                EssayCorpus::load(&cfg.essays)?
            },
        })
    }
}

fn generate(cfg: &PipelineConfig) -> Result<()> {
    let res = Resources::load(cfg)?;
    let counter = TokenCounter::parse(&cfg.counter)?;
    let generator = Generator::new(
        &res.pool,
        &res.bank,
        &counter,
        &res.essays,
        cfg.generation.clone(),
        cfg.seed,
    );
    let request = SuiteRequest {
        tasks: cfg.task_specs()?,
        budgets: cfg.budgets.clone(),
        instances: cfg.instances,
        seed: cfg.seed,
    };
    let suite = generate_suite(&generator, &request)?;
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    save_suite(cfg.out_dir.join(SUITE), &suite)?;
    let detail = json!({
        "tasks": request.tasks.iter().map(|t| t.label()).collect::<Vec<_>>(),
        "budgets": request.budgets,
        "instances_per_slot": request.instances,
        "counter": counter.describe(),
    });
    write_manifest(cfg, SUITE, suite.len(), Some(detail))?;
    println!("{} instances -> {}", suite.len(), cfg.out_dir.join(SUITE).display());
    Ok(())
}

fn bundles(cfg: &PipelineConfig, res: &Resources, suite: &[TaskInstance]) -> Result<Vec<PromptBundle>> {
    Ok(suite
        .iter()
        .map(|i| build_prompt(i, &res.prompts, &res.pool, cfg.seed))
        .collect::<longbio::Result<Vec<_>>>()?)
}

fn run(cfg: &PipelineConfig, dry_run: bool, responder: Option<&str>) -> Result<()> {
    let res = Resources::load(cfg)?;
    let suite = load_suite(cfg.out_dir.join(SUITE))?;
    let prompts = bundles(cfg, &res, &suite)?;
    if dry_run {
        let path = cfg.out_dir.join(REQUESTS);
        let n = evalrun::dry_run_export(&prompts, &cfg.endpoint, &path)?;
        write_manifest(cfg, REQUESTS, n, None)?;
        println!("{n} request bodies -> {}", path.display());
        return Ok(());
    }
    let path = cfg.out_dir.join(RESPONSES);
    if let Some(kind) = responder {
        let r = Responder::parse(kind, &res.bank, &res.pool, cfg.seed)
            .ok_or_else(|| longbio::Error::Config(format!("unknown responder `{kind}`")))?;
        let hash = cfg.hash();
        let records: Vec<ResponseRecord> = suite
            .iter()
            .zip(&prompts)
            .map(|(inst, b)| ResponseRecord {
                schema: SCHEMA_VERSION.into(),
                id: inst.id.clone(),
                task: inst.task.clone(),
                budget: inst.length_budget,
                model: format!("offline:{}", r.name()),
                status: CallStatus::Ok,
                response: Some(r.respond(inst)),
                error: None,
                assistant_prefix: b.assistant_prefix.clone(),
                prefix_mode: cfg.endpoint.prefix_mode,
                attempts: 0,
                latency_ms: 0,
                config_hash: hash.clone(),
                request_sha256: hex::encode(Sha256::digest(request_body(b, &cfg.endpoint).as_bytes())),
            })
            .collect();
        write_jsonl(&path, &records)?;
        write_manifest(cfg, RESPONSES, records.len(), Some(json!({"responder": r.name()})))?;
        println!("{} offline responses -> {}", records.len(), path.display());
        return Ok(());
    }
    let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
    let summary = rt.block_on(evalrun::run(&suite, &prompts, &cfg.endpoint, &path))?;
    let total = evalrun::load_run_log(&path)?.len();
    write_manifest(cfg, RESPONSES, total, Some(serde_json::to_value(&summary)?))?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn score(cfg: &PipelineConfig) -> Result<()> {
    let suite = load_suite(cfg.out_dir.join(SUITE))?;
    let log = evalrun::load_run_log(&cfg.out_dir.join(RESPONSES))?;
    let responses: HashMap<String, String> = log
        .into_iter()
        .filter(|r| r.status == CallStatus::Ok)
        .filter_map(|r| r.response.map(|t| (r.id, t)))
        .collect();
    let records = score_all(&suite, &responses);
    write_jsonl(&cfg.out_dir.join(SCORES), &records)?;
    let passed = records.iter().filter(|r| r.verdict.passed()).count();
    let accuracy = passed as f64 / records.len().max(1) as f64;
    write_manifest(
        cfg,
        SCORES,
        records.len(),
        Some(json!({"passed": passed, "accuracy": accuracy})),
    )?;
    println!("{passed}/{} passed (accuracy {accuracy:.4})", records.len());
    Ok(())
}

fn load_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}

fn report(cfg: &PipelineConfig, depths: &[f64], densities: &[f64]) -> Result<()> {
    let suite = load_suite(cfg.out_dir.join(SUITE))?;
    let records = load_scores(&cfg.out_dir.join(SCORES))?;
    let by_task = aggregate(&records, &[GroupKey::Task, GroupKey::Budget]);
    let standard: Vec<ScoreRecord> = records.iter().filter(|r| r.task == "standard").cloned().collect();
    let attributes = attribute_split(&standard, "standard");
    let grid = depth_density_grid(&records, depths, densities);
    let mut hallucination = Vec::new();
    for budget in &cfg.budgets {
        let subset: Vec<ScoreRecord> = records.iter().filter(|r| r.budget == *budget).cloned().collect();
        hallucination.push(json!({"budget": budget, "stats": hallucination_rate(&subset, &suite)}));
    }
    fs::write(cfg.out_dir.join("accuracy.csv"), rows_to_csv(&by_task))?;
    fs::write(cfg.out_dir.join("attributes.csv"), rows_to_csv(&attributes))?;
    fs::write(cfg.out_dir.join("grid.csv"), grid_to_csv(&grid))?;
    let report = json!({
        "schema": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "scores_sha256": sha256_file(&cfg.out_dir.join(SCORES))?,
        "accuracy": by_task,
        "attributes": attributes,
        "hallucination": hallucination,
        "grid": grid,
    });
    let path = cfg.out_dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    print!("{}", rows_to_csv(&by_task));
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let c = cli.common;
    let mut cfg = PipelineConfig::load(c.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: c.seed,
        budgets: c.budget,
        tasks: c.task,
        instances: c.instances,
        counter: c.counter,
        density: c.density,
        mode: c.mode,
        depths: c.depth,
        endpoint: c.endpoint,
        model: c.model,
        out: c.out,
    })?;
    cfg.validate()?;
    match cli.command {
        Command::Generate => generate(&cfg),
        Command::Run { dry_run, responder } => run(&cfg, dry_run, responder.as_deref()),
        Command::Score => score(&cfg),
        Command::Report {
            grid_depths,
            grid_densities,
        } => report(&cfg, &grid_depths, &grid_densities),
        Command::Config => {
            print!("{}", toml::to_string(&cfg)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<longbio::Error>())
                .map_or("error", longbio::Error::kind);
            let line = json!({"error": kind, "message": format!("{e:#}")});
            eprintln!("{line}");
            ExitCode::from(2)
        }
    }
}
