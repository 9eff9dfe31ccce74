use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use longbio::contextforge::{Density, HaystackMode};
use longbio::evalrun::RunConfig;
use longbio::taskgen::{GenOptions, TaskSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A task given either as a label (`rank:5`) or as a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskEntry {
    Label(String),
    Spec(TaskSpec),
}

impl TaskEntry {
    pub fn resolve(&self) -> Result<TaskSpec> {
        let spec = match self {
            TaskEntry::Label(s) => TaskSpec::parse(s)?,
            TaskEntry::Spec(s) => s.clone(),
        };
        spec.check()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub pool: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub essays: Vec<PathBuf>,
    /// `chars4`, `words13` or `cmd:<command>`.
    pub counter: String,
    pub tasks: Vec<TaskEntry>,
    pub budgets: Vec<usize>,
    pub instances: usize,
    pub generation: GenOptions,
    pub endpoint: RunConfig,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            pool: None,
            templates: None,
            prompts: None,
            essays: Vec::new(),
            counter: "chars4".into(),
            tasks: TaskSpec::default_suite().into_iter().map(TaskEntry::Spec).collect(),
            budgets: vec![2048, 8192, 16384, 32768, 65536, 131072],
            instances: 800,
            generation: GenOptions::default(),
            endpoint: RunConfig::default(),
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budgets: Vec<String>,
    pub tasks: Vec<String>,
    pub instances: Option<usize>,
    pub counter: Option<String>,
    pub density: Option<String>,
    pub mode: Option<String>,
    pub depths: Vec<f64>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub out: Option<PathBuf>,
}

/// `2048`, `2k`, `2K` -> tokens (k = 1024).
pub fn parse_budget(s: &str) -> Result<usize> {
    let t = s.trim();
    let (digits, scale) = match t.strip_suffix(['k', 'K']) {
        Some(d) => (d, 1024),
        None => (t, 1),
    };
    let n: usize = digits.parse().with_context(|| format!("bad budget `{s}`"))?;
    Ok(n * scale)
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
        match path {
            None => Ok(PipelineConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let cfg: PipelineConfig =
                    toml::from_str(&text).map_err(|e| longbio::Error::Config(e.to_string().replace('\n', " ")))?;
                Ok(cfg)
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if !o.budgets.is_empty() {
            self.budgets = o.budgets.iter().map(|b| parse_budget(b)).collect::<Result<_>>()?;
        }
        if !o.tasks.is_empty() {
            self.tasks = o.tasks.iter().map(|t| TaskEntry::Label(t.clone())).collect();
        }
        if let Some(n) = o.instances {
            self.instances = n;
        }
        if let Some(c) = &o.counter {
            self.counter = c.clone();
        }
        if let Some(d) = &o.density {
            self.generation.density = match d.as_str() {
                "natural" => Density::Natural,
                v => Density::Fixed(
                    v.parse()
                        .map_err(|_| longbio::Error::Config(format!("bad density `{v}`")))?,
                ),
            };
        }
        if let Some(m) = &o.mode {
            self.generation.haystack_mode = match m.as_str() {
                "bios" => HaystackMode::Bios,
                "essay" | "biah" => HaystackMode::Essay,
                other => bail!(longbio::Error::Config(format!("unknown mode `{other}`"))),
            };
        }
        if !o.depths.is_empty() {
            self.generation.depths = Some(o.depths.clone());
        }
        if let Some(e) = &o.endpoint {
            self.endpoint.endpoint = e.clone();
        }
        if let Some(m) = &o.model {
            self.endpoint.model = m.clone();
        }
        if let Some(p) = &o.out {
            self.out_dir = p.clone();
        }
        self.endpoint.seed = self.seed;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| longbio::Error::Config(m);
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            bail!(cfg_err("budgets must be a non-empty list of positive integers".into()));
        }
        if self.instances == 0 {
            bail!(cfg_err("instances must be at least 1".into()));
        }
        if self.tasks.is_empty() {
            bail!(cfg_err("no tasks configured".into()));
        }
        for t in &self.tasks {
            t.resolve()?;
        }
        let files = self
            .pool
            .iter()
            .chain(&self.templates)
            .chain(&self.prompts)
            .chain(&self.essays);
        for f in files {
            if !f.is_file() {
                bail!(cfg_err(format!("referenced file {} does not exist", f.display())));
            }
        }
        Ok(())
    }

    pub fn task_specs(&self) -> Result<Vec<TaskSpec>> {
        self.tasks.iter().map(TaskEntry::resolve).collect()
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_800_instances() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.instances, 800);
        assert_eq!(cfg.task_specs().unwrap().len(), 11);
        cfg.validate().unwrap();
    }

    #[test]
    fn budgets_accept_k_suffix() {
        assert_eq!(parse_budget("2K").unwrap(), 2048);
        assert_eq!(parse_budget("8k").unwrap(), 8192);
        assert_eq!(parse_budget("3000").unwrap(), 3000);
        assert!(parse_budget("lots").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn task_labels_in_toml() {
        let cfg: PipelineConfig = toml::from_str(
            r#"
            tasks = ["standard", "rank:5", { kind = "twodiff", target_diff = 18 }]
            budgets = [2048]
            instances = 3
            "#,
        )
        .unwrap();
        let specs = cfg.task_specs().unwrap();
        assert_eq!(specs[1].label(), "rank_5");
        assert_eq!(specs[2].target_diff, Some(18));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = PipelineConfig::default();
        cfg.apply(&Overrides {
            seed: Some(7),
            budgets: vec!["2k".into()],
            tasks: vec!["idk".into()],
            density: Some("0.3".into()),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.endpoint.seed, 7);
        assert_eq!(cfg.budgets, vec![2048]);
        assert_eq!(cfg.generation.density, Density::Fixed(0.3));
    }

    #[test]
    fn zero_instances_rejected() {
        let cfg = PipelineConfig {
            instances: 0,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
