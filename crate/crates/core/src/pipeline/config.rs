//! Pipeline configuration, read from a sectioned TOML file.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, PreprocessConfig};
use crate::embedding::SkipgramConfig;
use crate::error::{Error, Result};
use crate::regressor::{FitConfig, HIDDEN_UNIT_GRID, LABEL_COUNT_GRID, MAX_BOOST};
use crate::selection::{spline::Smoothing, EvalConfig, ForestConfig, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub paths: PathsSection,
    pub preprocess: PreprocessSection,
    pub embedding: EmbeddingSection,
    pub features: FeaturesSection,
    pub split: SplitSection,
    pub rank: RankSection,
    pub grid: GridSection,
    pub fit: FitConfig,
    pub evaluate: EvaluateSection,
    pub learncurve: LearnCurveSection,
    pub report: ReportSection,
    pub cache: CacheSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            master_seed: 1,
            paths: PathsSection::default(),
            preprocess: PreprocessSection::default(),
            embedding: EmbeddingSection::default(),
            features: FeaturesSection::default(),
            split: SplitSection::default(),
            rank: RankSection::default(),
            grid: GridSection::default(),
            fit: FitConfig::default(),
            evaluate: EvaluateSection::default(),
            learncurve: LearnCurveSection::default(),
            report: ReportSection::default(),
            cache: CacheSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Directory of per-participant activity exports (`.json` or `.txt`).
    pub corpora_dir: PathBuf,
    /// Tab-separated label lexicon.
    pub lexicon: PathBuf,
    /// CSV with `participant_id` and one column per measured scale.
    pub scores: PathBuf,
    pub stage_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            corpora_dir: "corpora".into(),
            lexicon: "lexicon.tsv".into(),
            scores: "scores.csv".into(),
            stage_dir: "stages".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    /// `german` (bundled list), `none`, or a path to a word list.
    pub stopwords: String,
    pub stemmer: String,
    pub language_filter: String,
    pub lowercase: bool,
    pub min_types: usize,
    pub vocab_report_min_frequency: usize,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            stopwords: "german".into(),
            stemmer: "german".into(),
            language_filter: "any".into(),
            lowercase: true,
            min_types: corpus::DEFAULT_MIN_TYPES,
            vocab_report_min_frequency: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dimensions: usize,
    pub window: usize,
    pub epochs: usize,
    pub min_frequency: usize,
    pub negative_samples: usize,
    pub initial_learning_rate: f64,
    pub final_learning_rate: f64,
    /// `text` or `binary`.
    pub format: String,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let d = SkipgramConfig::default();
        EmbeddingSection {
            dimensions: d.dimensions,
            window: d.window,
            epochs: d.epochs,
            min_frequency: d.min_frequency,
            negative_samples: d.negative_samples,
            initial_learning_rate: d.initial_learning_rate,
            final_learning_rate: d.final_learning_rate,
            format: "text".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub top_n: usize,
    /// Trait whose labels are used and whose score is predicted.
    #[serde(rename = "trait")]
    pub trait_name: String,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            top_n: crate::features::DEFAULT_TOP_N,
            trait_name: "openness".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub k: usize,
    /// Explicit sizes; when absent the reference split is scaled to the cohort.
    pub train: Option<usize>,
    pub validation: Option<usize>,
    pub test: Option<usize>,
    pub n_subsets: usize,
    pub stratify_by_target: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            k: crate::splitting::DEFAULT_K,
            train: None,
            validation: None,
            test: None,
            n_subsets: 10,
            stratify_by_target: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSection {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub mtry: Option<usize>,
    /// Rank on every participant, test rows included.
    pub all_rows: bool,
}

impl Default for RankSection {
    fn default() -> Self {
        let f = ForestConfig::default();
        RankSection {
            n_trees: f.n_trees,
            min_leaf: f.min_leaf,
            mtry: None,
            all_rows: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub label_counts: Vec<usize>,
    pub hidden_units: Vec<usize>,
    pub boosts: Vec<usize>,
    pub n_folds: usize,
    pub n_seeds: usize,
    /// Fixed spline smoothing; chosen by GCV when absent.
    pub smoothing_lambda: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            label_counts: LABEL_COUNT_GRID.to_vec(),
            hidden_units: HIDDEN_UNIT_GRID.to_vec(),
            boosts: (0..=MAX_BOOST).collect(),
            n_folds: 5,
            n_seeds: 10,
            smoothing_lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub n_eval_models: usize,
    pub n_folds: usize,
    pub alpha: f64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        let e = EvalConfig::default();
        EvaluateSection {
            n_eval_models: e.n_eval_models,
            n_folds: e.n_folds,
            alpha: e.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnCurveSection {
    pub n_models: usize,
    pub start_rows: usize,
    /// Crossing search extends to this multiple of the largest prefix.
    pub crossing_range_factor: f64,
}

impl Default for LearnCurveSection {
    fn default() -> Self {
        LearnCurveSection {
            n_models: 100,
            start_rows: crate::splitting::LEARNING_CURVE_START,
            crossing_range_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Further score columns placed in the correlation table.
    pub variables: Vec<String>,
    pub profile_points: usize,
    pub profile_features: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            variables: Vec::new(),
            profile_points: 21,
            profile_features: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    /// Skip a stage whose inputs are unchanged; rerun it otherwise.
    #[default]
    Reuse,
    /// Skip unchanged stages; fail on a stage whose inputs changed.
    Strict,
    /// Always rerun.
    Force,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub policy: CachePolicy,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<PipelineConfig> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            base
        };
        PipelineConfig::from_toml(&text, &base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn stage_dir(&self) -> PathBuf {
        self.resolve(&self.paths.stage_dir)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.skipgram(0).validate()?;
        if !matches!(self.embedding.format.as_str(), "text" | "binary") {
            return bad(format!("embedding.format must be text or binary, got '{}'", self.embedding.format));
        }
        if self.features.top_n == 0 {
            return bad("features.top_n must be at least 1".into());
        }
        if self.split.k == 0 || self.split.n_subsets == 0 {
            return bad("split.k and split.n_subsets must be at least 1".into());
        }
        if self.rank.n_trees == 0 || self.rank.min_leaf == 0 {
            return bad("rank.n_trees and rank.min_leaf must be at least 1".into());
        }
        let g = &self.grid;
        if g.label_counts.is_empty() || g.hidden_units.is_empty() || g.boosts.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for &h in &g.hidden_units {
            if !HIDDEN_UNIT_GRID.contains(&h) {
                return Err(Error::OffGrid(format!("hidden_units={h}")));
            }
        }
        for &b in &g.boosts {
            if b > MAX_BOOST {
                return Err(Error::OffGrid(format!("boost={b}")));
            }
        }
        if g.label_counts.contains(&0) {
            return bad("grid.label_counts must be positive".into());
        }
        if g.n_folds < 2 || self.evaluate.n_folds < 2 {
            return bad("fold counts must be at least 2".into());
        }
        if g.n_seeds == 0 || self.evaluate.n_eval_models == 0 || self.learncurve.n_models == 0 {
            return bad("seed and model counts must be at least 1".into());
        }
        if !(0.0 < self.evaluate.alpha && self.evaluate.alpha < 1.0) {
            return bad("evaluate.alpha must lie in (0, 1)".into());
        }
        if self.learncurve.crossing_range_factor < 1.0 {
            return bad("learncurve.crossing_range_factor must be at least 1".into());
        }
        let f = &self.fit;
        if !(f.learning_rate > 0.0 && (0.0..1.0).contains(&f.momentum) && f.ridge >= 0.0) {
            return bad("fit: learning_rate > 0, momentum in [0, 1), ridge >= 0".into());
        }
        if !(0.0..0.5).contains(&f.holdout_fraction) || f.max_iterations == 0 || f.patience == 0 {
            return bad("fit: holdout_fraction in [0, 0.5), max_iterations and patience >= 1".into());
        }
        Ok(())
    }

    pub fn preprocess_config(&self) -> Result<PreprocessConfig> {
        let p = &self.preprocess;
        let stopwords = match p.stopwords.as_str() {
            "german" => PreprocessConfig::german().stopwords,
            "none" => Default::default(),
            path => corpus::load_word_list(&self.resolve(Path::new(path)))?,
        };
        let stemmer_id = match p.stemmer.strip_prefix("suffix:") {
            Some(rel) => format!("suffix:{}", self.resolve(Path::new(rel)).display()),
            None => p.stemmer.clone(),
        };
        Ok(PreprocessConfig {
            stopwords,
            stemmer_id,
            language_filter: p.language_filter.clone(),
            lowercase: p.lowercase,
            min_word_frequency_for_vocab_report: p.vocab_report_min_frequency,
        })
    }

    pub fn skipgram(&self, seed: u64) -> SkipgramConfig {
        let e = &self.embedding;
        SkipgramConfig {
            dimensions: e.dimensions,
            window: e.window,
            epochs: e.epochs,
            min_frequency: e.min_frequency,
            negative_samples: e.negative_samples,
            initial_learning_rate: e.initial_learning_rate,
            final_learning_rate: e.final_learning_rate,
            seed,
        }
    }

    pub fn forest(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.rank.n_trees,
            min_leaf: self.rank.min_leaf,
            mtry: self.rank.mtry,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            label_counts: self.grid.label_counts.clone(),
            hidden_units: self.grid.hidden_units.clone(),
            boosts: self.grid.boosts.clone(),
            n_folds: self.grid.n_folds,
            n_seeds: self.grid.n_seeds,
        }
    }

    pub fn smoothing(&self) -> Smoothing {
        match self.grid.smoothing_lambda {
            Some(l) => Smoothing::Fixed(l),
            None => Smoothing::Gcv,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            n_eval_models: self.evaluate.n_eval_models,
            n_folds: self.evaluate.n_folds,
            alpha: self.evaluate.alpha,
        }
    }
}
