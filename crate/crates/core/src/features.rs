//! Label lexicon handling and the participants × labels similarity matrix.

use std::collections::HashSet;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::artifact::{self, fmt_f64, ArtifactMeta};
use crate::corpus::Preprocessor;
use crate::embedding::{cosine, EmbeddingModel};
use crate::error::{Error, Result};

pub const DEFAULT_TOP_N: usize = 2500;

const LEXICON_HEADER: [&str; 4] = ["surface", "trait", "pos", "source"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartOfSpeech {
    Adjective,
    Verb,
    Noun,
}

impl PartOfSpeech {
    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjective" | "adj" => Some(PartOfSpeech::Adjective),
            "verb" => Some(PartOfSpeech::Verb),
            "noun" => Some(PartOfSpeech::Noun),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Noun => "noun",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelWord {
    /// Stemmed surface, comparable with corpus tokens.
    pub surface: String,
    pub trait_name: String,
    pub part_of_speech: PartOfSpeech,
    /// Adjective a verb/noun label was expanded from; empty for adjectives.
    pub source_adjective: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelLexicon {
    pub labels: Vec<LabelWord>,
    pub trait_filtered: bool,
}

impl LabelLexicon {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.surface.clone()).collect()
    }

    /// Labels tagged with `trait_name`, in file order.
    pub fn for_trait(&self, trait_name: &str) -> LabelLexicon {
        LabelLexicon {
            labels: self
                .labels
                .iter()
                .filter(|l| l.trait_name == trait_name)
                .cloned()
                .collect(),
            trait_filtered: true,
        }
    }

    pub fn content_hash(&self) -> String {
        let mut s = String::new();
        for l in &self.labels {
            s.push_str(&l.surface);
            s.push('\t');
            s.push_str(&l.trait_name);
            s.push('\n');
        }
        artifact::sha256_hex(s.as_bytes())
    }

    pub fn to_tsv(&self) -> String {
        let mut s = LEXICON_HEADER.join("\t");
        s.push('\n');
        for l in &self.labels {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                l.surface,
                l.trait_name,
                l.part_of_speech.as_str(),
                l.source_adjective
            ));
        }
        s
    }
}

pub fn load_lexicon(path: &Path, pre: &Preprocessor) -> Result<LabelLexicon> {
    parse_lexicon(&artifact::read_to_string(path)?, pre)
}

/// Parse a tab-separated lexicon. Surfaces are normalized with the corpus
/// preprocessor; distinct surfaces that collapse to one stem keep the first.
pub fn parse_lexicon(text: &str, pre: &Preprocessor) -> Result<LabelLexicon> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let malformed = |line: usize, reason: &str| Error::MalformedLexicon {
        line: line + 1,
        reason: reason.to_string(),
    };
    let (hline, header) = lines.next().ok_or_else(|| malformed(0, "empty lexicon"))?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols != LEXICON_HEADER {
        return Err(malformed(hline, "header must be surface, trait, pos, source"));
    }

    let mut raw_seen = HashSet::new();
    let mut stem_seen = HashSet::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(malformed(i, "expected 3 or 4 tab-separated fields"));
        }
        let surface = fields[0].trim();
        let trait_name = fields[1].trim();
        if surface.is_empty() || trait_name.is_empty() {
            return Err(malformed(i, "empty surface or trait"));
        }
        let pos = PartOfSpeech::parse(fields[2].trim())
            .ok_or_else(|| malformed(i, "pos must be adjective, verb or noun"))?;
        let source = fields.get(3).map(|s| s.trim()).unwrap_or_default();
        if !raw_seen.insert((surface.to_lowercase(), trait_name.to_string())) {
            return Err(Error::DuplicateLabel {
                surface: surface.to_string(),
                trait_name: trait_name.to_string(),
            });
        }
        let stem = pre
            .normalize(surface)
            .ok_or_else(|| malformed(i, "surface is removed by preprocessing"))?;
        if !stem_seen.insert((stem.clone(), trait_name.to_string())) {
            continue;
        }
        labels.push(LabelWord {
            surface: stem,
            trait_name: trait_name.to_string(),
            part_of_speech: pos,
            source_adjective: source.to_string(),
        });
    }
    Ok(LabelLexicon {
        labels,
        trait_filtered: false,
    })
}

/// Keep labels present in the vocabulary of at least half of the models.
pub fn filter_labels(lexicon: &LabelLexicon, models: &[EmbeddingModel]) -> LabelLexicon {
    let n = models.len();
    let labels = lexicon
        .labels
        .iter()
        .filter(|l| {
            let present = models.iter().filter(|m| m.contains(&l.surface)).count();
            2 * present >= n
        })
        .cloned()
        .collect();
    LabelLexicon {
        labels,
        trait_filtered: lexicon.trait_filtered,
    }
}

/// Mean cosine between the label vector and each of `top_words`; exactly
/// zero when the label is outside the model vocabulary.
pub fn ic_label_similarity(model: &EmbeddingModel, top_words: &[String], label: &str) -> f64 {
    let Some(lv) = model.vector(label) else {
        return 0.0;
    };
    let mut sum = 0.0;
    let mut n = 0usize;
    for w in top_words {
        if let Some(wv) = model.vector(w) {
            // trained vectors are never zero; zero rows only arise from hand-built models
            if let Ok(c) = cosine(wv, lv) {
                sum += c;
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub lexicon_hash: String,
    pub embedding_config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub participants: Vec<String>,
    pub labels: Vec<String>,
    pub values: Array2<f64>,
    pub provenance: Provenance,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.participants.len()
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.participants.iter().position(|p| p == id)
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Sub-matrix with the given labels, in the given order.
    pub fn select_labels(&self, labels: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.column_index(l)
                    .ok_or_else(|| Error::MissingVariable(l.clone()))
            })
            .collect::<Result<_>>()?;
        let values = Array2::from_shape_fn((self.n_rows(), idx.len()), |(i, j)| self.values[[i, idx[j]]]);
        Ok(FeatureMatrix {
            participants: self.participants.clone(),
            labels: labels.to_vec(),
            values,
            provenance: self.provenance.clone(),
        })
    }

    /// Sub-matrix with the given participants, in the given order.
    pub fn select_rows(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = ids
            .iter()
            .map(|p| {
                self.row_index(p)
                    .ok_or_else(|| Error::MissingVariable(p.clone()))
            })
            .collect::<Result<_>>()?;
        let values = Array2::from_shape_fn((idx.len(), self.n_cols()), |(i, j)| self.values[[idx[i], j]]);
        Ok(FeatureMatrix {
            participants: ids.to_vec(),
            labels: self.labels.clone(),
            values,
            provenance: self.provenance.clone(),
        })
    }

    pub fn to_csv(&self, meta: &ArtifactMeta) -> Result<Vec<u8>> {
        let meta = meta
            .clone()
            .input(format!("lexicon:{}", self.provenance.lexicon_hash));
        let mut header = vec!["participant_id"];
        header.extend(self.labels.iter().map(String::as_str));
        let rows = self.participants.iter().enumerate().map(|(i, p)| {
            let mut r = vec![p.clone()];
            r.extend(self.values.row(i).iter().map(|&x| fmt_f64(x)));
            r
        });
        let mut out = artifact::render_csv(&meta, &header, rows)?;
        let mut prov = format!("# embedding_config {}\n", self.provenance.embedding_config).into_bytes();
        prov.append(&mut out);
        Ok(prov)
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let text = artifact::read_to_string(path)?;
        let mut provenance = Provenance::default();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some(cfg) = line.strip_prefix("# embedding_config ") {
                provenance.embedding_config = cfg.to_string();
            }
            if let Some(pos) = line.find("inputs=") {
                for inp in line[pos + 7..].split(',') {
                    if let Some(h) = inp.strip_prefix("lexicon:") {
                        provenance.lexicon_hash = h.to_string();
                    }
                }
            }
        }
        let (header, rows) = artifact::read_csv(path)?;
        if header.first().map(String::as_str) != Some("participant_id") {
            return Err(Error::artifact(path, "first column must be participant_id"));
        }
        let labels: Vec<String> = header[1..].to_vec();
        let mut participants = Vec::with_capacity(rows.len());
        let mut values = Array2::zeros((rows.len(), labels.len()));
        for (i, r) in rows.iter().enumerate() {
            if r.len() != labels.len() + 1 {
                return Err(Error::artifact(path, format!("row {i} has wrong width")));
            }
            participants.push(r[0].clone());
            for j in 0..labels.len() {
                values[[i, j]] = artifact::parse_field(path, &r[j + 1], "feature value")?;
            }
        }
        Ok(FeatureMatrix {
            participants,
            labels,
            values,
            provenance,
        })
    }
}

/// Similarity features for every (participant, label) pair. Rows are sorted
/// by participant id; columns follow lexicon order.
pub fn build_feature_matrix(
    models: &[EmbeddingModel],
    lexicon: &LabelLexicon,
    top_n: usize,
) -> Result<FeatureMatrix> {
    let mut order: Vec<&EmbeddingModel> = models.iter().collect();
    order.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    if let Some(m) = order.iter().find(|m| m.vocab_len() == 0) {
        return Err(Error::EmptyVocabulary {
            min_frequency: m.config.min_frequency,
        });
    }
    let labels = lexicon.surfaces();
    let rows: Vec<Vec<f64>> = order
        .par_iter()
        .map(|m| {
            let top = m.top_frequent_words(top_n);
            labels
                .iter()
                .map(|l| ic_label_similarity(m, &top, l))
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((order.len(), labels.len()));
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    let embedding_config = order
        .first()
        .map(|m| {
            let c = &m.config;
            format!(
                "dimensions={} window={} epochs={} min_frequency={} negative_samples={}",
                c.dimensions, c.window, c.epochs, c.min_frequency, c.negative_samples
            )
        })
        .unwrap_or_default();
    Ok(FeatureMatrix {
        participants: order.iter().map(|m| m.participant_id.clone()).collect(),
        labels,
        values,
        provenance: Provenance {
            lexicon_hash: lexicon.content_hash(),
            embedding_config,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PreprocessConfig;
    use crate::embedding::SkipgramConfig;

    fn identity_pre() -> Preprocessor {
        Preprocessor::new(&PreprocessConfig {
            stopwords: Default::default(),
            stemmer_id: "none".into(),
            language_filter: "any".into(),
            lowercase: true,
            min_word_frequency_for_vocab_report: 3,
        })
        .unwrap()
    }

    fn model(id: &str, words: &[(&str, usize, [f64; 2])]) -> EmbeddingModel {
        EmbeddingModel::from_parts(
            id,
            SkipgramConfig {
                dimensions: 2,
                ..SkipgramConfig::default()
            },
            words.iter().map(|w| w.0.to_string()).collect(),
            words.iter().map(|w| w.1).collect(),
            words.iter().flat_map(|w| w.2).collect(),
        )
        .unwrap()
    }

    #[test]
    fn lexicon_parses_three_rows() {
        let text = "surface\ttrait\tpos\tsource\nkreativ\topenness\tadjective\t\nlesen\topenness\tverb\tkreativ\nordnung\tconscientiousness\tnoun\tordentlich\n";
        let lex = parse_lexicon(text, &identity_pre()).unwrap();
        assert_eq!(lex.len(), 3);
        assert_eq!(lex.labels[1].trait_name, "openness");
        assert_eq!(lex.labels[1].part_of_speech, PartOfSpeech::Verb);
        assert_eq!(lex.labels[1].source_adjective, "kreativ");
        assert_eq!(lex.labels[2].trait_name, "conscientiousness");
        assert_eq!(lex.for_trait("openness").len(), 2);
    }

    #[test]
    fn duplicate_row_is_rejected() {
        let text = "surface\ttrait\tpos\tsource\nkreativ\topenness\tadjective\t\nkreativ\topenness\tadjective\t\n";
        assert!(matches!(
            parse_lexicon(text, &identity_pre()),
            Err(Error::DuplicateLabel { .. })
        ));
        // same surface under another trait is fine
        let text = "surface\ttrait\tpos\tsource\nkreativ\topenness\tadjective\t\nkreativ\textraversion\tadjective\t\n";
        assert_eq!(parse_lexicon(text, &identity_pre()).unwrap().len(), 2);
    }

    #[test]
    fn bad_header_is_malformed() {
        assert!(matches!(
            parse_lexicon("word\ttrait\n", &identity_pre()),
            Err(Error::MalformedLexicon { .. })
        ));
        assert!(matches!(
            parse_lexicon("surface\ttrait\tpos\tsource\nx1\topenness\tadverb\t\n", &identity_pre()),
            Err(Error::MalformedLexicon { .. })
        ));
    }

    #[test]
    fn stem_collisions_collapse() {
        let pre = Preprocessor::new(&PreprocessConfig::german()).unwrap();
        let text = "surface\ttrait\tpos\tsource\nkatzen\topenness\tnoun\t\nkatze\topenness\tnoun\t\n";
        let lex = parse_lexicon(text, &pre).unwrap();
        assert_eq!(lex.surfaces(), vec!["katz"]);
    }

    fn presence_lexicon(n: usize) -> LabelLexicon {
        LabelLexicon {
            labels: (0..n)
                .map(|i| LabelWord {
                    surface: format!("l{i}"),
                    trait_name: "openness".into(),
                    part_of_speech: PartOfSpeech::Adjective,
                    source_adjective: String::new(),
                })
                .collect(),
            trait_filtered: true,
        }
    }

    #[test]
    fn filter_boundary_is_half() {
        let lex = presence_lexicon(2);
        // l0 in 4 of 10, l1 in 5 of 10
        let models: Vec<EmbeddingModel> = (0..10)
            .map(|i| {
                let mut words = vec![("zz", 1, [1.0, 0.0])];
                if i < 4 {
                    words.push(("l0", 1, [0.0, 1.0]));
                }
                if i < 5 {
                    words.push(("l1", 1, [1.0, 1.0]));
                }
                model(&format!("p{i}"), &words)
            })
            .collect();
        let kept = filter_labels(&lex, &models);
        assert_eq!(kept.surfaces(), vec!["l1"]);
        assert_eq!(filter_labels(&kept, &models), kept);
    }

    #[test]
    fn absent_label_is_exactly_zero_and_self_is_one() {
        let m = model("p", &[("aa", 3, [1.0, 0.0]), ("bb", 2, [0.0, 2.0])]);
        assert_eq!(ic_label_similarity(&m, &["aa".to_string()], "zz"), 0.0);
        assert_eq!(ic_label_similarity(&m, &["aa".to_string()], "aa"), 1.0);
    }

    #[test]
    fn permuted_input_gives_same_matrix() {
        let a = model("b", &[("aa", 3, [1.0, 0.0]), ("l0", 2, [1.0, 1.0])]);
        let b = model("a", &[("aa", 3, [0.5, 0.5]), ("l0", 2, [0.0, 1.0])]);
        let lex = presence_lexicon(2);
        let m1 = build_feature_matrix(&[a.clone(), b.clone()], &lex, 10).unwrap();
        let m2 = build_feature_matrix(&[b, a], &lex, 10).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.participants, vec!["a", "b"]);
        assert!(m1.values.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = model("p1", &[("aa", 3, [1.0, 0.3]), ("l0", 2, [0.7, 1.0])]);
        let fm = build_feature_matrix(&[a], &presence_lexicon(1), 10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, fm.to_csv(&ArtifactMeta::new("features").seed(1)).unwrap()).unwrap();
        assert_eq!(FeatureMatrix::read_csv(&p).unwrap(), fm);
    }
}
