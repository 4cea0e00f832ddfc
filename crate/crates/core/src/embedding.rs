//! Per-corpus skip-gram embeddings trained with negative sampling.
//!
//! Training is single-threaded per model so vectors are bit-reproducible for
//! a fixed seed; parallelism happens across participants.

use std::collections::HashMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::artifact::{self, fmt_f64, ArtifactMeta};
use crate::corpus::IndividualCorpus;
use crate::error::{Error, Result};
use crate::rng::{self, JobRng};

const BINARY_MAGIC: &[u8; 8] = b"ICEMBED\0";
const TEXT_MAGIC: &str = "icembed";

#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramConfig {
    pub dimensions: usize,
    pub window: usize,
    pub epochs: usize,
    pub min_frequency: usize,
    pub negative_samples: usize,
    pub initial_learning_rate: f64,
    pub final_learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        Self {
            dimensions: 300,
            window: 2,
            epochs: 10,
            min_frequency: 3,
            negative_samples: 5,
            initial_learning_rate: 0.025,
            final_learning_rate: 0.0001,
            seed: 1,
        }
    }
}

impl SkipgramConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("skip-gram {what} must be >= 1")));
        if self.dimensions == 0 {
            return bad("dimensions");
        }
        if self.window == 0 {
            return bad("window");
        }
        if self.epochs == 0 {
            return bad("epochs");
        }
        if self.min_frequency == 0 {
            return bad("min_frequency");
        }
        if !(self.initial_learning_rate > 0.0 && self.final_learning_rate >= 0.0) {
            return Err(Error::Config("skip-gram learning rates must be positive".into()));
        }
        Ok(())
    }

    fn to_text(&self) -> String {
        format!(
            "dimensions={} window={} epochs={} min_frequency={} negative_samples={} lr_initial={} lr_final={} seed={}",
            self.dimensions,
            self.window,
            self.epochs,
            self.min_frequency,
            self.negative_samples,
            fmt_f64(self.initial_learning_rate),
            fmt_f64(self.final_learning_rate),
            self.seed
        )
    }

    fn from_text(path: &Path, line: &str) -> Result<Self> {
        let mut cfg = SkipgramConfig::default();
        for kv in line.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::artifact(path, format!("bad config field '{kv}'")))?;
            match k {
                "dimensions" => cfg.dimensions = artifact::parse_field(path, v, k)?,
                "window" => cfg.window = artifact::parse_field(path, v, k)?,
                "epochs" => cfg.epochs = artifact::parse_field(path, v, k)?,
                "min_frequency" => cfg.min_frequency = artifact::parse_field(path, v, k)?,
                "negative_samples" => cfg.negative_samples = artifact::parse_field(path, v, k)?,
                "lr_initial" => cfg.initial_learning_rate = artifact::parse_field(path, v, k)?,
                "lr_final" => cfg.final_learning_rate = artifact::parse_field(path, v, k)?,
                "seed" => cfg.seed = artifact::parse_field(path, v, k)?,
                other => return Err(Error::artifact(path, format!("unknown config key '{other}'"))),
            }
        }
        Ok(cfg)
    }
}

/// Word vectors for one participant.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub participant_id: String,
    pub config: SkipgramConfig,
    words: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    norms: Vec<f64>,
}

impl PartialEq for EmbeddingModel {
    fn eq(&self, other: &Self) -> bool {
        self.participant_id == other.participant_id
            && self.config == other.config
            && self.words == other.words
            && self.counts == other.counts
            && self.vectors.len() == other.vectors.len()
            && self
                .vectors
                .iter()
                .zip(&other.vectors)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingModel {
    /// Assemble a model from explicit parts. `vectors` is row-major,
    /// `words.len() × config.dimensions`.
    pub fn from_parts(
        participant_id: impl Into<String>,
        config: SkipgramConfig,
        words: Vec<String>,
        counts: Vec<usize>,
        vectors: Vec<f64>,
    ) -> Result<Self> {
        let dim = config.dimensions;
        if counts.len() != words.len() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                actual: counts.len(),
            });
        }
        if vectors.len() != words.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: words.len() * dim,
                actual: vectors.len(),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DegenerateData(format!("duplicate vocabulary word '{w}'")));
            }
        }
        let norms = vectors
            .chunks_exact(dim.max(1))
            .map(|v| dot(v, v).sqrt())
            .collect();
        Ok(Self {
            participant_id: participant_id.into(),
            config,
            words,
            counts,
            index,
            vectors,
            norms,
        })
    }

    pub fn dimensions(&self) -> usize {
        self.config.dimensions
    }

    pub fn vocab_len(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn count(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| self.counts[i])
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.config.dimensions;
        &self.vectors[i * d..(i + 1) * d]
    }

    /// Cosine between two vocabulary words.
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        let (&i, &j) = (self.index.get(a)?, self.index.get(b)?);
        let (na, nb) = (self.norms[i], self.norms[j]);
        if na == 0.0 || nb == 0.0 {
            return None;
        }
        Some(clamp_unit(dot(self.row(i), self.row(j)) / (na * nb)))
    }

    /// Most frequent vocabulary words, descending count then lexicographic.
    pub fn top_frequent_words(&self, n: usize) -> Vec<String> {
        let mut order: Vec<usize> = (0..self.words.len()).collect();
        order.sort_by(|&a, &b| {
            self.counts[b]
                .cmp(&self.counts[a])
                .then_with(|| self.words[a].cmp(&self.words[b]))
        });
        order
            .into_iter()
            .take(n)
            .map(|i| self.words[i].clone())
            .collect()
    }

    pub fn to_text(&self, meta: &ArtifactMeta) -> String {
        let mut s = meta.header_line();
        s.push_str(&format!("{TEXT_MAGIC} {}\n", artifact::FORMAT_VERSION));
        s.push_str(&format!("participant {}\n", self.participant_id));
        s.push_str(&format!("config {}\n", self.config.to_text()));
        s.push_str("counts");
        for c in &self.counts {
            s.push_str(&format!(" {c}"));
        }
        s.push('\n');
        s.push_str(&format!("{} {}\n", self.words.len(), self.config.dimensions));
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            for x in self.row(i) {
                s.push(' ');
                s.push_str(&fmt_f64(*x));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let bad = |r: &str| Error::artifact(path, r.to_string());
        let mut lines = artifact::body_lines(text);
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(&format!("missing {what}")));
        let magic = next("magic")?;
        if magic != format!("{TEXT_MAGIC} {}", artifact::FORMAT_VERSION) {
            return Err(bad("unsupported magic/version"));
        }
        let pid = next("participant")?
            .strip_prefix("participant ")
            .ok_or_else(|| bad("bad participant line"))?
            .to_string();
        let cfg_line = next("config")?
            .strip_prefix("config ")
            .ok_or_else(|| bad("bad config line"))?;
        let config = SkipgramConfig::from_text(path, cfg_line)?;
        let counts_line = next("counts")?;
        let counts_body = counts_line
            .strip_prefix("counts")
            .ok_or_else(|| bad("bad counts line"))?;
        let counts: Vec<usize> = counts_body
            .split_whitespace()
            .map(|c| artifact::parse_field(path, c, "count"))
            .collect::<Result<_>>()?;
        let shape = next("shape")?;
        let (v, d) = shape.split_once(' ').ok_or_else(|| bad("bad shape line"))?;
        let v: usize = artifact::parse_field(path, v, "vocab size")?;
        let d: usize = artifact::parse_field(path, d, "dimension")?;
        if d != config.dimensions {
            return Err(bad("shape disagrees with config"));
        }
        let mut words = Vec::with_capacity(v);
        let mut vectors = Vec::with_capacity(v * d);
        for _ in 0..v {
            let line = next("vector row")?;
            let mut fields = line.split(' ');
            words.push(fields.next().unwrap_or_default().to_string());
            let before = vectors.len();
            for f in fields {
                vectors.push(artifact::parse_field(path, f, "vector component")?);
            }
            if vectors.len() - before != d {
                return Err(bad("vector row has wrong width"));
            }
        }
        EmbeddingModel::from_parts(pid, config, words, counts, vectors)
    }

    pub fn to_binary(&self, meta: &ArtifactMeta) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&artifact::FORMAT_VERSION.to_le_bytes());
        put_str(&mut out, &meta.header_line());
        put_str(&mut out, &self.participant_id);
        let c = &self.config;
        for v in [
            c.dimensions,
            c.window,
            c.epochs,
            c.min_frequency,
            c.negative_samples,
        ] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&c.initial_learning_rate.to_le_bytes());
        out.extend_from_slice(&c.final_learning_rate.to_le_bytes());
        out.extend_from_slice(&c.seed.to_le_bytes());
        out.extend_from_slice(&(self.words.len() as u64).to_le_bytes());
        for (w, &n) in self.words.iter().zip(&self.counts) {
            put_str(&mut out, w);
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for x in &self.vectors {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_binary(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { path, bytes, pos: 0 };
        if r.take(8)? != BINARY_MAGIC {
            return Err(Error::artifact(path, "bad magic"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != artifact::FORMAT_VERSION {
            return Err(Error::artifact(path, format!("unsupported version {version}")));
        }
        let _meta = r.string()?;
        let pid = r.string()?;
        let config = SkipgramConfig {
            dimensions: r.u64()? as usize,
            window: r.u64()? as usize,
            epochs: r.u64()? as usize,
            min_frequency: r.u64()? as usize,
            negative_samples: r.u64()? as usize,
            initial_learning_rate: r.f64()?,
            final_learning_rate: r.f64()?,
            seed: r.u64()?,
        };
        let v = r.u64()? as usize;
        let mut words = Vec::with_capacity(v);
        let mut counts = Vec::with_capacity(v);
        for _ in 0..v {
            words.push(r.string()?);
            counts.push(r.u64()? as usize);
        }
        let n = v * config.dimensions;
        let mut vectors = Vec::with_capacity(n);
        for _ in 0..n {
            vectors.push(r.f64()?);
        }
        if r.pos != bytes.len() {
            return Err(Error::artifact(path, "trailing bytes"));
        }
        EmbeddingModel::from_parts(pid, config, words, counts, vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(BINARY_MAGIC) {
            EmbeddingModel::from_binary(path, &bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::artifact(path, "not UTF-8 and not binary"))?;
            EmbeddingModel::from_text(path, &text)
        }
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct ByteReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::artifact(self.path, "truncated"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let n = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::artifact(self.path, "bad UTF-8"))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Cosine similarity of two equal-width, nonzero vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(clamp_unit(dot(a, b) / (na * nb)))
}

/// Top-`n` corpus words by frequency (ties lexicographic), keeping only
/// words present in the model's vocabulary.
pub fn top_frequent_words(ic: &IndividualCorpus, model: &EmbeddingModel, n: usize) -> Vec<String> {
    ic.ranked_frequencies()
        .into_iter()
        .filter(|(w, _)| model.contains(w))
        .take(n)
        .map(|(w, _)| w.to_string())
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)`, stable for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Loss and per-output coefficients from the dot products `u_j·v`, where
/// output 0 is the observed context and the rest are negatives. The
/// coefficient is `σ(u_j·v) − label_j`; the gradient w.r.t. `v` is
/// `Σ_j coef_j u_j` and w.r.t. `u_j` is `coef_j v`.
fn sgns_terms(dots: &[f64], coefs: &mut Vec<f64>) -> f64 {
    coefs.clear();
    let mut loss = 0.0;
    for (j, &d) in dots.iter().enumerate() {
        if j == 0 {
            loss -= log_sigmoid(d);
            coefs.push(sigmoid(d) - 1.0);
        } else {
            loss -= log_sigmoid(-d);
            coefs.push(sigmoid(d));
        }
    }
    loss
}

/// Negative-sampling loss of one (center, context) pair:
/// `-ln σ(u_o·v) - Σ_k ln σ(-u_k·v)`.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let dots: Vec<f64> = std::iter::once(context)
        .chain(negatives.iter().copied())
        .map(|u| dot(u, center))
        .collect();
    sgns_terms(&dots, &mut Vec::new())
}

/// Analytic gradients of [`sgns_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let mut outputs: Vec<&[f64]> = Vec::with_capacity(negatives.len() + 1);
    outputs.push(context);
    outputs.extend_from_slice(negatives);
    let dots: Vec<f64> = outputs.iter().map(|u| dot(u, center)).collect();
    let mut coefs = Vec::new();
    sgns_terms(&dots, &mut coefs);
    let mut g_center = vec![0.0; center.len()];
    for (u, &c) in outputs.iter().zip(&coefs) {
        for (g, x) in g_center.iter_mut().zip(u.iter()) {
            *g += c * x;
        }
    }
    let scaled = |c: f64| center.iter().map(|x| c * x).collect::<Vec<_>>();
    SgnsGradients {
        center: g_center,
        context: scaled(coefs[0]),
        negatives: coefs[1..].iter().map(|&c| scaled(c)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Mean pair loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
}

pub fn train_skipgram(ic: &IndividualCorpus, cfg: &SkipgramConfig) -> Result<EmbeddingModel> {
    train_skipgram_with_report(ic, cfg).map(|(m, _)| m)
}

pub fn train_skipgram_with_report(
    ic: &IndividualCorpus,
    cfg: &SkipgramConfig,
) -> Result<(EmbeddingModel, TrainingReport)> {
    cfg.validate()?;
    let ranked: Vec<(&str, usize)> = ic
        .ranked_frequencies()
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_frequency)
        .collect();
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_frequency: cfg.min_frequency,
        });
    }
    let words: Vec<String> = ranked.iter().map(|(w, _)| w.to_string()).collect();
    let counts: Vec<usize> = ranked.iter().map(|&(_, c)| c).collect();
    let lookup: HashMap<&str, usize> = ranked.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();
    let stream: Vec<usize> = ic
        .tokens()
        .iter()
        .filter_map(|t| lookup.get(t.as_str()).copied())
        .collect();

    let dim = cfg.dimensions;
    let v = words.len();
    let mut rng: JobRng = rng::job_rng(cfg.seed, &[rng::tag("skipgram")]);
    let mut input: Vec<f64> = (0..v * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; v * dim];
    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::DegenerateData(format!("noise distribution: {e}")))?;

    let total = (stream.len() * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut pairs_per_epoch = 0;
    let mut negs: Vec<usize> = Vec::with_capacity(cfg.negative_samples);
    let mut grad_center = vec![0.0; dim];
    let mut dots: Vec<f64> = Vec::with_capacity(cfg.negative_samples + 1);
    let mut coefs: Vec<f64> = Vec::with_capacity(cfg.negative_samples + 1);

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for pos in 0..stream.len() {
            let lr = cfg.initial_learning_rate
                - (cfg.initial_learning_rate - cfg.final_learning_rate) * (processed as f64 / total);
            processed += 1;
            let center = stream[pos];
            let reach = rng.random_range(1..=cfg.window);
            let lo = pos.saturating_sub(reach);
            let hi = (pos + reach).min(stream.len() - 1);
            for ctx_pos in lo..=hi {
                if ctx_pos == pos {
                    continue;
                }
                let target = stream[ctx_pos];
                negs.clear();
                for _ in 0..cfg.negative_samples {
                    let n = noise.sample(&mut rng);
                    if n != target {
                        negs.push(n);
                    }
                }
                let v_c = &input[center * dim..(center + 1) * dim];
                dots.clear();
                for &k in std::iter::once(&target).chain(negs.iter()) {
                    dots.push(dot(&output[k * dim..(k + 1) * dim], v_c));
                }
                loss_sum += sgns_terms(&dots, &mut coefs);
                grad_center.iter_mut().for_each(|g| *g = 0.0);
                for (&k, &c) in std::iter::once(&target).chain(negs.iter()).zip(&coefs) {
                    let u = &output[k * dim..(k + 1) * dim];
                    for (g, x) in grad_center.iter_mut().zip(u) {
                        *g += c * x;
                    }
                }
                for (&k, &c) in std::iter::once(&target).chain(negs.iter()).zip(&coefs) {
                    let (vc, row) = split_rows(&input, &mut output, center, k, dim);
                    for (u, x) in row.iter_mut().zip(vc) {
                        *u -= lr * c * x;
                    }
                }
                let row = &mut input[center * dim..(center + 1) * dim];
                for (x, g) in row.iter_mut().zip(&grad_center) {
                    *x -= lr * g;
                }
                pairs += 1;
            }
        }
        pairs_per_epoch = pairs;
        epoch_losses.push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }

    let model = EmbeddingModel::from_parts(ic.participant_id.clone(), cfg.clone(), words, counts, input)?;
    Ok((
        model,
        TrainingReport {
            epoch_losses,
            pairs_per_epoch,
        },
    ))
}

fn split_rows<'a>(
    input: &'a [f64],
    output: &'a mut [f64],
    in_row: usize,
    out_row: usize,
    dim: usize,
) -> (&'a [f64], &'a mut [f64]) {
    (
        &input[in_row * dim..(in_row + 1) * dim],
        &mut output[out_row * dim..(out_row + 1) * dim],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SkipgramConfig {
        SkipgramConfig {
            dimensions: 16,
            epochs: 5,
            min_frequency: 1,
            ..SkipgramConfig::default()
        }
    }

    fn repeat_corpus(words: &[&str], times: usize) -> IndividualCorpus {
        let toks = (0..times)
            .flat_map(|_| words.iter().map(|w| w.to_string()))
            .collect();
        IndividualCorpus::from_tokens("p", toks)
    }

    #[test]
    fn defaults_match_published_hyperparameters() {
        let c = SkipgramConfig::default();
        assert_eq!((c.window, c.epochs, c.min_frequency, c.dimensions), (2, 10, 3, 300));
    }

    #[test]
    fn all_below_min_frequency_is_empty_vocabulary() {
        let ic = repeat_corpus(&["aa", "bb", "cc"], 2);
        let cfg = SkipgramConfig {
            min_frequency: 3,
            ..small_cfg()
        };
        assert!(matches!(
            train_skipgram(&ic, &cfg),
            Err(Error::EmptyVocabulary { min_frequency: 3 })
        ));
    }

    #[test]
    fn vocab_respects_min_frequency() {
        let mut toks: Vec<String> = repeat_corpus(&["aa", "bb"], 3).tokens().to_vec();
        toks.push("cc".into());
        let ic = IndividualCorpus::from_tokens("p", toks);
        let cfg = SkipgramConfig {
            min_frequency: 2,
            ..small_cfg()
        };
        let m = train_skipgram(&ic, &cfg).unwrap();
        assert!(m.contains("aa") && m.contains("bb") && !m.contains("cc"));
        assert!(m.words().iter().all(|w| m.vector(w).unwrap().iter().any(|x| *x != 0.0)));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let ic = repeat_corpus(&["aa", "bb", "cc", "dd", "aa", "ee"], 20);
        let a = train_skipgram(&ic, &small_cfg()).unwrap();
        let b = train_skipgram(&ic, &small_cfg()).unwrap();
        assert_eq!(a, b);
        let c = train_skipgram(&ic, &SkipgramConfig { seed: 2, ..small_cfg() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            cosine(&[1.0, 1.0], &[2.0, 2.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn top_words_tie_break_and_truncation() {
        let ic = IndividualCorpus::from_tokens(
            "p",
            ["bb", "aa", "cc", "aa", "bb", "aa", "bb"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        );
        let cfg = SkipgramConfig {
            min_frequency: 1,
            ..small_cfg()
        };
        let m = train_skipgram(&ic, &cfg).unwrap();
        assert_eq!(top_frequent_words(&ic, &m, 2), vec!["aa", "bb"]);
        assert_eq!(m.top_frequent_words(2), vec!["aa", "bb"]);
        assert_eq!(top_frequent_words(&ic, &m, 10).len(), 3);
    }

    #[test]
    fn text_and_binary_round_trip() {
        let ic = repeat_corpus(&["aa", "bb", "cc", "dd"], 10);
        let m = train_skipgram(&ic, &small_cfg()).unwrap();
        let meta = ArtifactMeta::new("embedding").seed(1);
        let p = Path::new("mem");
        let t = EmbeddingModel::from_text(p, &m.to_text(&meta)).unwrap();
        let b = EmbeddingModel::from_binary(p, &m.to_binary(&meta)).unwrap();
        assert_eq!(t, m);
        assert_eq!(b, m);
    }
}
