//! File-based pipeline: ten stages, each reading its upstream artifacts and
//! writing its own into `<stage_dir>/<stage>/` together with a manifest.

pub mod config;
pub mod manifest;
mod stages;

use std::fmt;
use std::path::{Path, PathBuf};

use crate::synth::{SyntheticCohort, SyntheticCohortSpec};

use serde::Serialize;

use crate::artifact::{self, ArtifactMeta};
use crate::error::{Error, Result};

pub use config::{CachePolicy, PipelineConfig};
pub use manifest::Manifest;
pub use stages::ScoreTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Embed,
    Featurize,
    Split,
    Rank,
    Grid,
    Select,
    Evaluate,
    LearnCurve,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Embed,
        Stage::Featurize,
        Stage::Split,
        Stage::Rank,
        Stage::Grid,
        Stage::Select,
        Stage::Evaluate,
        Stage::LearnCurve,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Featurize => "featurize",
            Stage::Split => "split",
            Stage::Rank => "rank",
            Stage::Grid => "grid",
            Stage::Select => "select",
            Stage::Evaluate => "evaluate",
            Stage::LearnCurve => "learncurve",
            Stage::Report => "report",
        }
    }

    pub fn from_name(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::UnknownStage(s.to_string()))
    }

    /// Stages whose artifacts this stage reads.
    pub fn upstream(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Ingest => &[],
            Embed => &[Ingest],
            Featurize => &[Embed],
            Split => &[Featurize],
            Rank => &[Featurize, Split],
            Grid => &[Featurize, Split, Rank],
            Select => &[Grid],
            Evaluate => &[Featurize, Split, Rank, Select],
            LearnCurve => &[Featurize, Split, Rank, Select],
            Report => &[Featurize, Split, Rank, Select, Evaluate, LearnCurve],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    Cached,
}

/// Handed to a stage body: where to write and how to label artifacts.
pub(crate) struct StageContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub dir: PathBuf,
    digest: String,
    outputs: Vec<(String, String)>,
}

impl StageContext<'_> {
    pub fn meta(&self, kind: &str) -> ArtifactMeta {
        ArtifactMeta::new(kind)
            .seed(self.cfg.master_seed)
            .input(self.digest.clone())
    }

    pub fn upstream_dir(&self, stage: Stage) -> PathBuf {
        self.cfg.stage_dir().join(stage.name())
    }

    /// Write `bytes` to `rel` inside the stage directory and record it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        artifact::write_bytes(&self.dir.join(rel), bytes)?;
        self.record(rel, artifact::sha256_hex(bytes));
        Ok(())
    }

    pub fn record(&mut self, rel: &str, hash: String) {
        self.outputs.push((rel.to_string(), hash));
    }
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Pipeline {
        Pipeline { cfg }
    }

    pub fn stage_path(&self, stage: Stage) -> PathBuf {
        self.cfg.stage_dir().join(stage.name())
    }

    /// Run one stage under `policy`. Upstream stages must already have run.
    pub fn run_stage(&self, stage: Stage, policy: CachePolicy) -> Result<StageOutcome> {
        let mut inputs = Vec::new();
        for &up in stage.upstream() {
            let dir = self.stage_path(up);
            let (_, text) = Manifest::read(&dir)?.ok_or_else(|| Error::MissingUpstream {
                stage: stage.name().into(),
                upstream: up.name().into(),
            })?;
            inputs.push((format!("stage:{}", up.name()), artifact::sha256_hex(text.as_bytes())));
        }
        inputs.extend(stages::external_inputs(&self.cfg, stage)?);
        inputs.sort();
        let config_hash = self.config_hash(stage);
        let dir = self.stage_path(stage);

        if policy != CachePolicy::Force {
            if let Some((old, _)) = Manifest::read(&dir)? {
                let same = old.config_hash == config_hash
                    && old.master_seed == self.cfg.master_seed
                    && old.inputs == inputs;
                if same && old.outputs_intact(&dir) {
                    log::info!("{stage}: cached");
                    return Ok(StageOutcome::Cached);
                }
                if policy == CachePolicy::Strict {
                    return Err(Error::StaleCache {
                        stage: stage.name().into(),
                    });
                }
            }
        }

        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut ctx = StageContext {
            cfg: &self.cfg,
            dir: dir.clone(),
            digest: manifest::inputs_digest(&inputs),
            outputs: Vec::new(),
        };
        log::info!("{stage}: running");
        stages::run(stage, &mut ctx)?;
        let mut outputs = ctx.outputs;
        outputs.sort();
        let m = Manifest {
            stage: stage.name().into(),
            master_seed: self.cfg.master_seed,
            config_hash,
            inputs,
            outputs,
        };
        artifact::write_bytes(&dir.join(manifest::MANIFEST_FILE), m.to_text().as_bytes())?;
        Ok(StageOutcome::Ran)
    }

    /// Every stage in order. Without `resume` each stage is recomputed;
    /// with it the configured cache policy applies.
    pub fn run_all(&self, resume: bool) -> Result<Vec<(Stage, StageOutcome)>> {
        let policy = if resume {
            self.cfg.cache.policy
        } else {
            CachePolicy::Force
        };
        Stage::ALL
            .into_iter()
            .map(|s| Ok((s, self.run_stage(s, policy)?)))
            .collect()
    }

    /// Hash of the master seed and the configuration sections a stage reads.
    pub fn config_hash(&self, stage: Stage) -> String {
        let c = &self.cfg;
        let value = match stage {
            Stage::Ingest => json(&c.preprocess),
            Stage::Embed => json(&c.embedding),
            Stage::Featurize => json(&(&c.features, &c.preprocess)),
            Stage::Split => json(&(&c.split, &c.features.trait_name)),
            Stage::Rank => json(&(&c.rank, &c.features.trait_name)),
            Stage::Grid => json(&(&c.grid, &c.fit, &c.features.trait_name)),
            Stage::Select => json(&c.grid.smoothing_lambda),
            Stage::Evaluate => json(&(&c.evaluate, &c.fit, &c.features.trait_name)),
            Stage::LearnCurve => json(&(&c.learncurve, &c.fit, &c.features.trait_name)),
            Stage::Report => json(&(&c.report, &c.evaluate.alpha, &c.features.trait_name)),
        };
        artifact::sha256_hex(format!("{}|{}|{value}", stage.name(), c.master_seed).as_bytes())
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("config serializes")
}

/// Configuration sized for a synthetic cohort: small embeddings, a reduced
/// grid, few repetitions and a low type threshold.
pub fn synthetic_config(spec: &SyntheticCohortSpec) -> PipelineConfig {
    let mut c = PipelineConfig {
        master_seed: spec.seed,
        ..Default::default()
    };
    c.preprocess.min_types = 50;
    c.embedding.dimensions = 50;
    c.embedding.epochs = 5;
    c.features.trait_name = crate::synth::TRAIT_NAME.into();
    c.features.top_n = 100;
    c.rank.n_trees = 200;
    c.grid.label_counts = vec![5, 10];
    c.grid.hidden_units = vec![1, 2, 3, 5, 10, 20];
    c.grid.boosts = vec![0, 1, 2];
    c.grid.n_seeds = 2;
    c.evaluate.n_eval_models = 10;
    c.learncurve.n_models = 5;
    c.learncurve.start_rows = 5;
    c.report.variables = vec![crate::synth::OTHER_TRAIT_NAME.into()];
    c
}

/// Generate a cohort into `dir` together with `dir/ictrait.toml`; returns
/// the cohort and the configuration path.
pub fn write_synthetic_project(spec: &SyntheticCohortSpec, dir: &Path) -> Result<(SyntheticCohort, PathBuf)> {
    let cohort = crate::synth::generate_synthetic_cohort(spec)?;
    cohort.write_to(dir)?;
    let cfg = synthetic_config(spec);
    let path = dir.join("ictrait.toml");
    artifact::write_bytes(&path, cfg.to_toml().as_bytes())?;
    Ok((cohort, path))
}
