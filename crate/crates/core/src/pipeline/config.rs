use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::steps::{DictionaryStep, HeadStep, LengthGuardStep};
use super::{MemoryGuard, MemoryGuardConfig, Pipeline, RunOptions, Sharing, Step};
use crate::error::{Error, Result};
use crate::head::{HeadFile, HeadTagger};
use crate::ontology::SynonymIndex;

/// One entry of the `steps` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub name: String,
    #[serde(default)]
    pub params: Value,
    /// Defaults to `shareable`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharing: Option<Sharing>,
}

/// Pipeline config file.
///
/// ```json
/// {"batch_size": 32, "workers": 1,
///  "guard": {"budget_bytes": 2000000000, "check_interval": 4},
///  "steps": [{"name": "dictionary", "params": {"index": "index.json"}}]}
/// ```
///
/// Built-in steps: `dictionary` (`index`: synonym index path), `head`
/// (`model`: head JSON path) and `length-guard` (`max_chars`). Relative
/// paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<MemoryGuardConfig>,
    pub steps: Vec<StepConfig>,
}

fn default_batch_size() -> usize {
    32
}

fn default_workers() -> usize {
    1
}

fn param_str<'a>(step: &'a StepConfig, key: &str) -> Result<&'a str> {
    step.params
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidArgument(format!("step `{}` needs string parameter `{key}`", step.name)))
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

fn load_index(path: &Path) -> Result<SynonymIndex> {
    SynonymIndex::from_json(&read(path)?)
}

fn load_head(path: &Path) -> Result<HeadTagger> {
    let file: HeadFile = serde_json::from_str(&read(path)?)?;
    HeadTagger::from_file(&file)
}

impl PipelineConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: PipelineConfig = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        if let Some(guard) = &self.guard {
            guard.validate()?;
        }
        Ok(())
    }

    /// Instantiates the steps, loading any referenced files relative to `base`.
    pub fn build(&self, base: &Path) -> Result<Pipeline> {
        let mut pipeline = Pipeline::new();
        for step in &self.steps {
            let sharing = step.sharing.unwrap_or(Sharing::Shareable);
            pipeline = match (step.name.as_str(), sharing) {
                (DictionaryStep::NAME, Sharing::Shareable) => {
                    let index = load_index(&resolve(base, param_str(step, "index")?))?;
                    pipeline.shared(DictionaryStep::new(Arc::new(index)))
                }
                (DictionaryStep::NAME, Sharing::PerWorker) => {
                    let path = resolve(base, param_str(step, "index")?);
                    load_index(&path)?;
                    pipeline.per_worker(DictionaryStep::NAME, move || {
                        Ok(Box::new(DictionaryStep::new(Arc::new(load_index(&path)?))) as Box<dyn Step>)
                    })
                }
                (HeadStep::NAME, Sharing::Shareable) => {
                    let tagger = load_head(&resolve(base, param_str(step, "model")?))?;
                    pipeline.shared(HeadStep::new(Arc::new(tagger)))
                }
                (HeadStep::NAME, Sharing::PerWorker) => {
                    let path = resolve(base, param_str(step, "model")?);
                    load_head(&path)?;
                    pipeline.per_worker(HeadStep::NAME, move || {
                        Ok(Box::new(HeadStep::new(Arc::new(load_head(&path)?))) as Box<dyn Step>)
                    })
                }
                (LengthGuardStep::NAME, _) => {
                    let max_chars = step.params.get("max_chars").and_then(Value::as_u64).ok_or_else(|| {
                        Error::InvalidArgument("step `length-guard` needs integer `max_chars`".into())
                    })?;
                    pipeline.shared(LengthGuardStep {
                        max_chars: max_chars as usize,
                    })
                }
                (other, _) => return Err(Error::InvalidArgument(format!("unknown pipeline step `{other}`"))),
            };
        }
        Ok(pipeline)
    }

    /// Run options using the process resident set size for the guard.
    pub fn run_options(&self) -> Result<RunOptions> {
        Ok(RunOptions {
            batch_size: self.batch_size,
            workers: self.workers,
            guard: self.guard.map(MemoryGuard::process).transpose()?,
        })
    }
}
