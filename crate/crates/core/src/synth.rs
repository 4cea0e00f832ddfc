//! Synthetic cohorts with a planted trait signal.
//!
//! Each participant has a latent level `u ~ N(0, 1)`. Their corpus is a mix
//! of topic documents, and the share of documents drawn from the trait
//! topic rises with `u`. The recorded trait score is
//! `3 + 0.5·(s·u + sqrt(1 − s²)·e) + noise_sd·ε` for signal strength `s`,
//! so `s = 0` makes the score independent of every corpus.
//!
//! Words are pseudo-words built from consonant-vowel syllables ending in a
//! vowel, which pass the bundled German preprocessing unchanged.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use crate::artifact::{self, fmt_f64, ArtifactMeta};
use crate::corpus::{PreprocessConfig, Preprocessor};
use crate::error::{Error, Result};
use crate::rng::{job_rng, tag};

pub const TRAIT_NAME: &str = "openness";
pub const OTHER_TRAIT_NAME: &str = "agreeableness";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticCohortSpec {
    pub n_participants: usize,
    pub vocab_size: usize,
    /// Topic count including the trait topic.
    pub n_topics: usize,
    /// Correlation between the latent level and the trait score, in [0, 1].
    pub signal: f64,
    /// SD of extra measurement noise on the trait score.
    pub noise_sd: f64,
    pub tokens_per_participant: usize,
    /// Trait-topic words placed in the lexicon.
    pub n_trait_labels: usize,
    /// Words from other topics placed in the lexicon.
    pub n_noise_labels: usize,
    pub seed: u64,
}

impl Default for SyntheticCohortSpec {
    fn default() -> Self {
        SyntheticCohortSpec {
            n_participants: 30,
            vocab_size: 600,
            n_topics: 6,
            signal: 0.8,
            noise_sd: 0.0,
            tokens_per_participant: 4000,
            n_trait_labels: 12,
            n_noise_labels: 28,
            seed: 1,
        }
    }
}

impl SyntheticCohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic cohort: {m}")));
        if !(0.0..=1.0).contains(&self.signal) {
            return bad("signal must lie in [0, 1]");
        }
        if self.noise_sd < 0.0 || !self.noise_sd.is_finite() {
            return bad("noise_sd must be non-negative");
        }
        if self.n_topics < 2 {
            return bad("need at least two topics");
        }
        if self.n_participants < 2 {
            return bad("need at least two participants");
        }
        let per_topic = self.topic_size();
        if per_topic < 4 {
            return bad("vocabulary too small for the topic count");
        }
        if self.n_trait_labels > per_topic {
            return bad("more trait labels than trait-topic words");
        }
        if self.n_noise_labels > per_topic * (self.n_topics - 1) {
            return bad("more noise labels than other-topic words");
        }
        if self.tokens_per_participant < 100 {
            return bad("tokens_per_participant must be at least 100");
        }
        Ok(())
    }

    fn common_size(&self) -> usize {
        self.vocab_size / 10
    }

    fn topic_size(&self) -> usize {
        (self.vocab_size - self.common_size()) / self.n_topics
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParticipant {
    pub id: String,
    pub documents: Vec<String>,
    pub latent: f64,
    pub trait_score: f64,
    /// An unrelated scale, independent of everything else.
    pub other_score: f64,
    /// Realized share of tokens that came from the trait topic.
    pub trait_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub spec: SyntheticCohortSpec,
    pub participants: Vec<SyntheticParticipant>,
    /// Lexicon lines `(surface, trait, pos)`; trait-topic labels first.
    pub labels: Vec<(String, String, &'static str)>,
    pub trait_topic_words: Vec<String>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
const VOWELS: &[u8] = b"aiou";

fn pseudo_words(n: usize, rng: &mut impl Rng) -> Result<Vec<String>> {
    let pre = Preprocessor::new(&PreprocessConfig::german())?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut guard = 0usize;
    while out.len() < n {
        guard += 1;
        if guard > 200 * n + 1000 {
            return Err(Error::Config("could not draw enough distinct pseudo-words".into()));
        }
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
        }
        if pre.normalize(&w).as_deref() != Some(w.as_str()) {
            continue;
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    Ok(out)
}

/// Zipf-like weights `1/(rank + 1)`.
fn zipf_cdf(n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = (0..n)
        .map(|r| {
            acc += 1.0 / (r as f64 + 1.0);
            acc
        })
        .collect();
    for c in cdf.iter_mut() {
        *c /= acc;
    }
    cdf
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|c| *c < u).min(cdf.len() - 1)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Share of trait-topic documents for latent level `u`.
pub fn trait_topic_share(u: f64) -> f64 {
    0.05 + 0.45 * logistic(1.5 * u)
}

pub fn generate_synthetic_cohort(spec: &SyntheticCohortSpec) -> Result<SyntheticCohort> {
    spec.validate()?;
    let mut rng = job_rng(spec.seed, &[tag("synth-vocab")]);
    let words = pseudo_words(spec.vocab_size, &mut rng)?;
    let common = &words[..spec.common_size()];
    let ts = spec.topic_size();
    let topics: Vec<&[String]> = (0..spec.n_topics)
        .map(|t| &words[spec.common_size() + t * ts..spec.common_size() + (t + 1) * ts])
        .collect();

    let mut labels = Vec::new();
    for w in &topics[0][..spec.n_trait_labels] {
        labels.push((w.clone(), TRAIT_NAME.to_string(), "adjective"));
    }
    let mut others: Vec<&String> = topics[1..].iter().flat_map(|t| t.iter().take(ts / 2)).collect();
    others.shuffle(&mut rng);
    for w in others.into_iter().take(spec.n_noise_labels) {
        labels.push((w.clone(), TRAIT_NAME.to_string(), "adjective"));
    }

    let common_cdf = zipf_cdf(common.len().max(1));
    let topic_cdf = zipf_cdf(ts);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let gamma = Gamma::new(1.0, 1.0).expect("unit gamma");
    let width = spec.n_participants.to_string().len().max(3);
    let mut participants = Vec::with_capacity(spec.n_participants);
    for i in 0..spec.n_participants {
        let mut rng = job_rng(spec.seed, &[tag("synth-participant"), i as u64]);
        let latent: f64 = normal.sample(&mut rng);
        let e: f64 = normal.sample(&mut rng);
        let eps: f64 = normal.sample(&mut rng);
        let z = spec.signal * latent + (1.0 - spec.signal * spec.signal).sqrt() * e;
        let trait_score = 3.0 + 0.5 * z + spec.noise_sd * eps;
        let other_score = 3.0 + 0.5 * normal.sample(&mut rng);

        let share = trait_topic_share(latent);
        let prefs: Vec<f64> = (1..spec.n_topics).map(|_| gamma.sample(&mut rng)).collect();
        let pref_total: f64 = prefs.iter().sum();

        let mut documents = Vec::new();
        let (mut tokens, mut trait_tokens) = (0usize, 0usize);
        while tokens < spec.tokens_per_participant {
            let topic = if rng.random::<f64>() < share {
                0
            } else {
                let mut u = rng.random::<f64>() * pref_total;
                let mut t = prefs.len() - 1;
                for (k, p) in prefs.iter().enumerate() {
                    if u < *p {
                        t = k;
                        break;
                    }
                    u -= p;
                }
                t + 1
            };
            let len = rng.random_range(8..=16);
            let mut doc = String::new();
            for k in 0..len {
                let w = if !common.is_empty() && rng.random::<f64>() < 0.25 {
                    &common[draw(&common_cdf, &mut rng)]
                } else {
                    if topic == 0 {
                        trait_tokens += 1;
                    }
                    &topics[topic][draw(&topic_cdf, &mut rng)]
                };
                if k > 0 {
                    doc.push(' ');
                }
                doc.push_str(w);
            }
            tokens += len;
            documents.push(doc);
        }
        participants.push(SyntheticParticipant {
            id: format!("p{i:0width$}"),
            documents,
            latent,
            trait_score,
            other_score,
            trait_fraction: trait_tokens as f64 / tokens as f64,
        });
    }
    Ok(SyntheticCohort {
        spec: spec.clone(),
        participants,
        labels,
        trait_topic_words: topics[0].to_vec(),
    })
}

/// Files written by [`SyntheticCohort::write_to`].
pub struct CohortFiles {
    pub corpora_dir: std::path::PathBuf,
    pub scores: std::path::PathBuf,
    pub lexicon: std::path::PathBuf,
    pub generator: std::path::PathBuf,
}

impl SyntheticCohort {
    pub fn lexicon_tsv(&self) -> String {
        let mut s = String::from("surface\ttrait\tpos\tsource\n");
        for (w, t, p) in &self.labels {
            let _ = writeln!(s, "{w}\t{t}\t{p}\t");
        }
        s
    }

    pub fn scores_csv(&self) -> Result<Vec<u8>> {
        let meta = ArtifactMeta::new("scores").seed(self.spec.seed);
        artifact::render_csv(
            &meta,
            &["participant_id", TRAIT_NAME, OTHER_TRAIT_NAME],
            self.participants.iter().map(|p| {
                vec![p.id.clone(), fmt_f64(p.trait_score), fmt_f64(p.other_score)]
            }),
        )
    }

    /// Ground truth kept by the generator: latent level and realized
    /// trait-topic share.
    pub fn generator_csv(&self) -> Result<Vec<u8>> {
        let meta = ArtifactMeta::new("generator").seed(self.spec.seed);
        artifact::render_csv(
            &meta,
            &["participant_id", "latent", "trait_fraction"],
            self.participants.iter().map(|p| {
                vec![p.id.clone(), fmt_f64(p.latent), fmt_f64(p.trait_fraction)]
            }),
        )
    }

    /// One JSON activity export per participant, plus scores and lexicon.
    pub fn write_to(&self, dir: &Path) -> Result<CohortFiles> {
        let corpora_dir = dir.join("corpora");
        for p in &self.participants {
            let records: Vec<serde_json::Value> = p
                .documents
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    serde_json::json!({
                        "title": d,
                        "time": format!("2021-{:02}-{:02}T12:00:00Z", 1 + k % 12, 1 + k % 28),
                    })
                })
                .collect();
            let text = serde_json::to_string_pretty(&records).expect("json");
            artifact::write_bytes(&corpora_dir.join(format!("{}.json", p.id)), text.as_bytes())?;
        }
        let files = CohortFiles {
            scores: dir.join("scores.csv"),
            lexicon: dir.join("lexicon.tsv"),
            generator: dir.join("generator.csv"),
            corpora_dir,
        };
        artifact::write_bytes(&files.scores, &self.scores_csv()?)?;
        artifact::write_bytes(&files.lexicon, self.lexicon_tsv().as_bytes())?;
        artifact::write_bytes(&files.generator, &self.generator_csv()?)?;
        Ok(files)
    }
}
