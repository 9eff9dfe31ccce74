#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use longbio::biotext::TemplateBank;
use longbio::contextforge::{EssayCorpus, TokenCounter};
use longbio::corpus::AttributePool;
use longbio::taskgen::{generate_suite, GenOptions, Generator, SuiteRequest, TaskInstance, TaskSpec};

pub struct Fixture {
    pub pool: AttributePool,
    pub bank: TemplateBank,
    pub essays: EssayCorpus,
    pub counter: TokenCounter,
}

impl Fixture {
    pub fn new() -> Fixture {
        Fixture::with_counter(TokenCounter::CharsPer4)
    }

    pub fn with_counter(counter: TokenCounter) -> Fixture {
        Fixture {
            pool: AttributePool::builtin(),
            bank: TemplateBank::builtin(),
            essays: EssayCorpus::builtin(),
            counter,
        }
    }

    pub fn generator(&self, options: GenOptions, seed: u64) -> Generator<'_> {
        Generator::new(&self.pool, &self.bank, &self.counter, &self.essays, options, seed)
    }

    pub fn suite(
        &self,
        options: GenOptions,
        tasks: &[TaskSpec],
        budgets: &[usize],
        instances: usize,
        seed: u64,
    ) -> Vec<TaskInstance> {
        let g = self.generator(options, seed);
        generate_suite(
            &g,
            &SuiteRequest {
                tasks: tasks.to_vec(),
                budgets: budgets.to_vec(),
                instances,
                seed,
            },
        )
        .expect("suite generates")
    }
}

pub fn tasks(labels: &[&str]) -> Vec<TaskSpec> {
    labels.iter().map(|l| TaskSpec::parse(l).expect("task label")).collect()
}

/// `cmd:` counter backed by tiktoken when the script and encoding are usable.
pub fn tiktoken_counter() -> Option<TokenCounter> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
    let script = format!("{root}/scripts/count_tokens_tiktoken.py");
    if !std::path::Path::new(&script).is_file() {
        return None;
    }
    let bpe = std::env::var("TIKTOKEN_BPE_FILE").ok().or_else(|| {
        let p = "/usr/local/lib/python3.10/dist-packages/marimo/_lsp/copilot/cl100k_base.tiktoken";
        std::path::Path::new(p).is_file().then(|| p.to_string())
    });
    let env = bpe.map(|b| format!("TIKTOKEN_BPE_FILE={b} ")).unwrap_or_default();
    let counter = TokenCounter::parse(&format!("cmd:{env}python3 {script}")).ok()?;
    (counter.count("hello world").ok()? > 0).then_some(counter)
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Hand transcription of the prompt templates: `## key` blocks with
/// `=== system|user|assistant` sections.
pub fn transcription() -> BTreeMap<String, BTreeMap<String, String>> {
    let text = std::fs::read_to_string(golden_dir().join("templates.txt")).expect("templates.txt");
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut key = String::new();
    let mut part = String::new();
    for line in text.lines() {
        if let Some(k) = line.strip_prefix("## ") {
            key = k.trim().to_string();
        } else if let Some(p) = line.strip_prefix("=== ") {
            part = p.trim().to_string();
            out.entry(key.clone()).or_default().insert(part.clone(), String::new());
        } else {
            let s = out.get_mut(&key).unwrap().get_mut(&part).unwrap();
            if !s.is_empty() {
                s.push('\n');
            }
            s.push_str(line);
        }
    }
    out
}

/// Plain string substitution, independent of the prompt builder.
pub fn substitute(template: &str, inst: &TaskInstance, examples: &str) -> String {
    let prefix = inst.question_prefixes.first().cloned().unwrap_or_default();
    template
        .replace("{given_context}", &inst.context.text)
        .replace("{question_prefix}", &prefix)
        .replace("{question}", &inst.questions.join("\n"))
        .replace("{examples}", examples)
}
