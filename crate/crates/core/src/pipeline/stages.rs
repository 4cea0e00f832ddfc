//! Stage bodies. Each reads upstream artifacts from disk and writes its own
//! through the [`StageContext`], so every stage can also run on its own.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use rayon::prelude::*;

use super::{Stage, StageContext};
use crate::analysis::{self, CurveData, CurveSplit, LearningCurveFit};
use crate::artifact::{self, fmt_f64};
use crate::corpus::{self, IndividualCorpus, Preprocessor, Validation};
use crate::embedding::{self, EmbeddingModel};
use crate::error::{Error, Result};
use crate::features::{self, FeatureMatrix};
use crate::pipeline::PipelineConfig;
use crate::regressor::{self, RegressorModel};
use crate::rng::{derive_seed, tag};
use crate::selection::{self, EvalData, GridResult, GridRow, SelectionOutcome};
use crate::splitting::{self, Split, SubsetSchedule};

const PARTICIPANTS: &str = "participants.csv";
const FEATURES: &str = "features.csv";
const SPLIT: &str = "split.csv";
const RANKING: &str = "ranking.csv";
const GRID: &str = "grid.csv";
const SELECTION: &str = "selection.txt";
const EVALUATION: &str = "evaluation.txt";
const PREDICTIONS: &str = "predictions.csv";
const BEST_MODEL: &str = "models/best.json";
const POINTS: &str = "points.csv";
const FITS: &str = "fits.txt";

pub(super) fn run(stage: Stage, ctx: &mut StageContext<'_>) -> Result<()> {
    match stage {
        Stage::Ingest => ingest(ctx),
        Stage::Embed => embed(ctx),
        Stage::Featurize => featurize(ctx),
        Stage::Split => split(ctx),
        Stage::Rank => rank(ctx),
        Stage::Grid => grid(ctx),
        Stage::Select => select(ctx),
        Stage::Evaluate => evaluate(ctx),
        Stage::LearnCurve => learncurve(ctx),
        Stage::Report => report(ctx),
    }
}

/// Files outside the stage tree that a stage reads, with content hashes.
pub(super) fn external_inputs(cfg: &PipelineConfig, stage: Stage) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    match stage {
        Stage::Ingest => {
            for p in export_files(cfg)? {
                let name = p.file_name().unwrap_or_default().to_string_lossy();
                out.push((format!("corpora/{name}"), artifact::sha256_file(&p)?));
            }
        }
        Stage::Featurize => {
            out.push(("lexicon".into(), artifact::sha256_file(&cfg.resolve(&cfg.paths.lexicon))?));
        }
        Stage::Embed | Stage::Select => {}
        _ => {
            out.push(("scores".into(), artifact::sha256_file(&cfg.resolve(&cfg.paths.scores))?));
        }
    }
    Ok(out)
}

fn export_files(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.resolve(&cfg.paths.corpora_dir);
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(&dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "json" || x == "txt") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn preprocessor(cfg: &PipelineConfig) -> Result<Preprocessor> {
    Preprocessor::new(&cfg.preprocess_config()?)
}

/// Scores file: `participant_id` followed by one numeric column per scale.
/// Empty cells are missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
}

impl ScoreTable {
    pub fn load(path: &Path) -> Result<ScoreTable> {
        let (header, rows) = artifact::read_csv(path)?;
        if header.first().map(String::as_str) != Some("participant_id") {
            return Err(Error::artifact(path, "first column must be participant_id"));
        }
        let mut out = BTreeMap::new();
        for r in rows {
            let vals = r[1..]
                .iter()
                .map(|v| {
                    let v = v.trim();
                    if v.is_empty() {
                        Ok(None)
                    } else {
                        artifact::parse_field(path, v, "score").map(Some)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if out.insert(r[0].clone(), vals).is_some() {
                return Err(Error::artifact(path, format!("participant '{}' listed twice", r[0])));
            }
        }
        Ok(ScoreTable {
            columns: header[1..].to_vec(),
            rows: out,
        })
    }

    /// Values of `column` for `ids`, in order.
    pub fn column(&self, column: &str, ids: &[String]) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| Error::MissingVariable(column.to_string()))?;
        ids.iter()
            .map(|id| {
                self.rows
                    .get(id)
                    .and_then(|r| r.get(j).copied().flatten())
                    .ok_or_else(|| Error::MissingScore(id.clone()))
            })
            .collect()
    }
}

fn ingest(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let pre = preprocessor(cfg)?;
    let meta = ctx.meta("corpus");
    let files = export_files(cfg)?;
    let mut seen = HashSet::new();
    for f in &files {
        let id = corpus::participant_id_for(f);
        if !seen.insert(id.clone()) {
            return Err(Error::DegenerateData(format!("two exports for participant '{id}'")));
        }
    }
    let results = files
        .par_iter()
        .map(|f| match corpus::parse_activity_export(f) {
            Ok(raw) => Ok((corpus::participant_id_for(f), Some(corpus::build_corpus(&raw, &pre)))),
            Err(Error::EmptyExport(_)) => Ok((corpus::participant_id_for(f), None)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut accepted = 0;
    for (id, ic) in results {
        let Some(ic) = ic else {
            rows.push(vec![id, "excluded".into(), "0".into(), "0".into(), "0".into(), "empty export".into()]);
            continue;
        };
        let (status, detail) = match corpus::validate_corpus(&ic, cfg.preprocess.min_types) {
            Validation::Accept => {
                accepted += 1;
                ("accepted", String::new())
            }
            Validation::Reject(r) => ("rejected", r),
        };
        ctx.write(&format!("corpora/{id}.txt"), ic.to_corpus_file(&meta).as_bytes())?;
        ctx.write(&format!("freq/{id}.tsv"), ic.to_freq_file(&meta).as_bytes())?;
        rows.push(vec![
            id,
            status.into(),
            ic.token_count().to_string(),
            ic.type_count().to_string(),
            ic.vocab_report(cfg.preprocess.vocab_report_min_frequency).to_string(),
            detail,
        ]);
    }
    if accepted == 0 {
        return Err(Error::DegenerateData("no corpus passed validation".into()));
    }
    let table = artifact::render_csv(
        &ctx.meta("participants"),
        &["participant_id", "status", "tokens", "types", "vocab_report", "detail"],
        rows,
    )?;
    ctx.write(PARTICIPANTS, &table)
}

fn accepted_participants(dir: &Path) -> Result<Vec<String>> {
    let (_, rows) = artifact::read_csv(&dir.join(PARTICIPANTS))?;
    Ok(rows.into_iter().filter(|r| r[1] == "accepted").map(|r| r[0].clone()).collect())
}

fn embedding_file(cfg: &PipelineConfig, id: &str) -> String {
    let ext = if cfg.embedding.format == "binary" { "bin" } else { "emb" };
    format!("embeddings/{id}.{ext}")
}

fn embed(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let ingest_dir = ctx.upstream_dir(Stage::Ingest);
    let ids = accepted_participants(&ingest_dir)?;
    let meta = ctx.meta("embedding");
    let dir = ctx.dir.clone();
    // Models are written as they finish so only a few are held in memory.
    let written = ids
        .par_iter()
        .map(|id| {
            let ic = IndividualCorpus::read_corpus_file(&ingest_dir.join(format!("corpora/{id}.txt")))?;
            let seed = derive_seed(cfg.master_seed, &[tag("embed"), tag(id)]);
            let model = embedding::train_skipgram(&ic, &cfg.skipgram(seed))?;
            let bytes = if cfg.embedding.format == "binary" {
                model.to_binary(&meta)
            } else {
                model.to_text(&meta).into_bytes()
            };
            let rel = embedding_file(cfg, id);
            artifact::write_bytes(&dir.join(&rel), &bytes)?;
            Ok((rel, artifact::sha256_hex(&bytes), id.clone(), model.vocab_len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (rel, hash, id, vocab) in written {
        ctx.record(&rel, hash);
        rows.push(vec![id, vocab.to_string(), rel]);
    }
    let table = artifact::render_csv(&ctx.meta("embeddings"), &["participant_id", "vocabulary", "file"], rows)?;
    ctx.write("embeddings.csv", &table)
}

fn featurize(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let embed_dir = ctx.upstream_dir(Stage::Embed);
    let (_, rows) = artifact::read_csv(&embed_dir.join("embeddings.csv"))?;
    let models = rows
        .par_iter()
        .map(|r| EmbeddingModel::load(&embed_dir.join(&r[2])))
        .collect::<Result<Vec<_>>>()?;
    let pre = preprocessor(cfg)?;
    let lexicon = features::load_lexicon(&cfg.resolve(&cfg.paths.lexicon), &pre)?
        .for_trait(&cfg.features.trait_name);
    if lexicon.is_empty() {
        return Err(Error::DegenerateData(format!(
            "lexicon has no labels for trait '{}'",
            cfg.features.trait_name
        )));
    }
    let kept = features::filter_labels(&lexicon, &models);
    if kept.is_empty() {
        return Err(Error::DegenerateData(
            "no label occurs in the vocabulary of at least half of the participants".into(),
        ));
    }
    log::info!("featurize: {} of {} labels kept", kept.len(), lexicon.len());
    let fm = features::build_feature_matrix(&models, &kept, cfg.features.top_n)?;
    ctx.write(FEATURES, &fm.to_csv(&ctx.meta("features"))?)?;
    ctx.write("labels.tsv", kept.to_tsv().as_bytes())
}

fn split(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let fm = FeatureMatrix::read_csv(&ctx.upstream_dir(Stage::Featurize).join(FEATURES))?;
    let scores = ScoreTable::load(&cfg.resolve(&cfg.paths.scores))?;
    let y = scores.column(&cfg.features.trait_name, &fm.participants)?;
    let target: HashMap<String, f64> = fm.participants.iter().cloned().zip(y).collect();
    let n = fm.n_rows();
    let sizes = match (cfg.split.train, cfg.split.validation, cfg.split.test) {
        (Some(a), Some(b), Some(c)) => {
            if a + b + c != n {
                return Err(Error::SizeMismatch {
                    requested: a + b + c,
                    available: n,
                });
            }
            (a, b, c)
        }
        (None, None, None) => splitting::scaled_split_sizes(n),
        _ => return Err(Error::Config("split sizes: give train, validation and test together".into())),
    };
    let km = splitting::kmeans_cluster(&fm, cfg.split.k, derive_seed(cfg.master_seed, &[tag("kmeans")]))?;
    let strat = cfg.split.stratify_by_target.then_some(&target);
    let split = splitting::stratified_split(
        &km.assignments,
        sizes,
        strat,
        derive_seed(cfg.master_seed, &[tag("split")]),
    )?;
    let schedule = splitting::sequential_training_subsets(
        &split,
        &km.assignments,
        &target,
        cfg.split.n_subsets,
        derive_seed(cfg.master_seed, &[tag("subsets")]),
    )?;
    let bytes = splitting::schedule_to_csv(&split, &schedule, &km.assignments, &ctx.meta("split"))?;
    ctx.write(SPLIT, &bytes)
}

/// Feature matrix, split, ranking and scores as read back from disk.
struct Modelling {
    fm: FeatureMatrix,
    split: Split,
    schedule: Option<SubsetSchedule>,
    scores: ScoreTable,
    trait_name: String,
}

impl Modelling {
    fn load(ctx: &StageContext<'_>, ranked: bool) -> Result<Modelling> {
        let cfg = ctx.cfg;
        let mut fm = FeatureMatrix::read_csv(&ctx.upstream_dir(Stage::Featurize).join(FEATURES))?;
        if ranked {
            fm = fm.select_labels(&read_ranking(&ctx.upstream_dir(Stage::Rank).join(RANKING))?)?;
        }
        let (split, _, schedule) = splitting::read_split_csv(&ctx.upstream_dir(Stage::Split).join(SPLIT))?;
        Ok(Modelling {
            fm,
            split,
            schedule,
            scores: ScoreTable::load(&cfg.resolve(&cfg.paths.scores))?,
            trait_name: cfg.features.trait_name.clone(),
        })
    }

    fn x(&self, ids: &[String]) -> Result<Array2<f64>> {
        Ok(self.fm.select_rows(ids)?.values)
    }

    fn y(&self, ids: &[String]) -> Result<Vec<f64>> {
        self.scores.column(&self.trait_name, ids)
    }

    fn all_ids(&self) -> Vec<String> {
        let mut ids = self.split.pooled();
        ids.extend(self.split.test.iter().cloned());
        ids
    }
}

fn read_ranking(path: &Path) -> Result<Vec<String>> {
    let (header, rows) = artifact::read_csv(path)?;
    if header != ["rank", "label", "importance"] {
        return Err(Error::artifact(path, "unexpected ranking columns"));
    }
    Ok(rows.into_iter().map(|r| r[1].clone()).collect())
}

fn rank(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let data = Modelling::load(ctx, false)?;
    let ids = if cfg.rank.all_rows {
        data.all_ids()
    } else {
        data.split.pooled()
    };
    let x = data.x(&ids)?;
    let y = data.y(&ids)?;
    let ranking = selection::rank_features_random_forest(
        x.view(),
        &y,
        &data.fm.labels,
        &cfg.forest(),
        derive_seed(cfg.master_seed, &[tag("rank")]),
    )?;
    let rows = ranking
        .entries
        .iter()
        .enumerate()
        .map(|(i, (label, imp))| vec![(i + 1).to_string(), label.clone(), fmt_f64(*imp)]);
    let bytes = artifact::render_csv(&ctx.meta("ranking"), &["rank", "label", "importance"], rows)?;
    ctx.write(RANKING, &bytes)
}

fn grid(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let data = Modelling::load(ctx, true)?;
    let ids = data.split.pooled();
    let x = data.x(&ids)?;
    let y = data.y(&ids)?;
    let result = selection::grid_search(x.view(), &y, &data.fm.labels, &cfg.grid_spec(), cfg.master_seed, &cfg.fit)?;
    ctx.write(GRID, &result.to_csv(&ctx.meta("grid"))?)
}

fn select(ctx: &mut StageContext<'_>) -> Result<()> {
    let grid = GridResult::read_csv(&ctx.upstream_dir(Stage::Grid).join(GRID))?;
    let outcome = selection::select_hyperparameters(&grid, ctx.cfg.smoothing())?;
    ctx.write(SELECTION, outcome.report(&ctx.meta("selection")).as_bytes())?;
    for s in &outcome.splines {
        let (lo, hi) = (s.spline.knots[0], *s.spline.knots.last().expect("knots"));
        let n = ((hi - lo).round() as usize).max(1) * 4;
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let c = lo + (hi - lo) * i as f64 / n as f64;
                (c, s.spline.eval(c))
            })
            .collect();
        let bytes = analysis::series_csv(&ctx.meta("spline"), &pts)?;
        ctx.write(&format!("splines/labels_{}.csv", s.n_labels), &bytes)?;
    }
    Ok(())
}

fn read_choice(ctx: &StageContext<'_>) -> Result<(GridRow, GridRow)> {
    let path = ctx.upstream_dir(Stage::Select).join(SELECTION);
    SelectionOutcome::parse_choice(&path, &artifact::read_to_string(&path)?)
}

fn evaluate(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let (best, second) = read_choice(ctx)?;
    let data = Modelling::load(ctx, true)?;
    let trval = data.split.pooled();
    let (x, y) = (data.x(&trval)?, data.y(&trval)?);
    let (xt, yt) = (data.x(&data.split.test)?, data.y(&data.split.test)?);
    let eval = EvalData {
        x_trainval: x.view(),
        y_trainval: &y,
        x_test: xt.view(),
        y_test: &yt,
        ranked_labels: &data.fm.labels,
    };
    let report = selection::evaluate_selected(&best, &second, &eval, &cfg.eval_config(), cfg.master_seed, &cfg.fit)?;
    ctx.write(EVALUATION, report.to_text(&ctx.meta("evaluation")).as_bytes())?;
    ctx.write(BEST_MODEL, report.best.single_model.to_json().as_bytes())?;
    ctx.write("models/second_best.json", report.second_best.single_model.to_json().as_bytes())?;

    let r_rows = [("best", &report.best), ("second_best", &report.second_best)]
        .into_iter()
        .flat_map(|(name, e)| {
            e.test_r
                .iter()
                .enumerate()
                .map(move |(i, r)| vec![name.to_string(), i.to_string(), fmt_f64(*r)])
        });
    let bytes = artifact::render_csv(&ctx.meta("test-r"), &["model", "index", "r"], r_rows)?;
    ctx.write("test_r.csv", &bytes)?;

    let ids = data.all_ids();
    let xa = data.x(&ids)?;
    let ya = data.y(&ids)?;
    let mut cols = Vec::new();
    for e in [&report.best, &report.second_best] {
        let xk = xa.slice(s![.., ..e.choice.n_labels]);
        cols.push(e.single_model.predict(xk)?);
        cols.push(e.ensemble.predict(xk)?);
    }
    let rows = ids.iter().enumerate().map(|(i, id)| {
        let sample = data.split.sample_of(id).map(|s| s.as_str()).unwrap_or_default();
        let mut r = vec![id.clone(), sample.to_string(), fmt_f64(ya[i])];
        r.extend(cols.iter().map(|c| fmt_f64(c[i])));
        r
    });
    let bytes = artifact::render_csv(
        &ctx.meta("predictions"),
        &["participant_id", "sample", "observed", "best_single", "best_ensemble", "second_single", "second_ensemble"],
        rows,
    )?;
    ctx.write(PREDICTIONS, &bytes)
}

fn learncurve(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let (best, _) = read_choice(ctx)?;
    let data = Modelling::load(ctx, true)?;
    let schedule = data
        .schedule
        .as_ref()
        .ok_or_else(|| Error::artifact(ctx.upstream_dir(Stage::Split).join(SPLIT), "split has no training subsets"))?;
    let train = &data.split.train;
    let pos: HashMap<&str, usize> = train.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let prefixes: Vec<Vec<usize>> = schedule
        .prefixes(cfg.learncurve.start_rows)
        .iter()
        .map(|ids| ids.iter().map(|p| pos[p.as_str()]).collect())
        .collect();
    let (x, y) = (data.x(train)?, data.y(train)?);
    let (xv, yv) = (data.x(&data.split.validation)?, data.y(&data.split.validation)?);
    let (xt, yt) = (data.x(&data.split.test)?, data.y(&data.split.test)?);
    let curve = CurveData {
        x_train: x.view(),
        y_train: &y,
        x_val: xv.view(),
        y_val: &yv,
        x_test: xt.view(),
        y_test: &yt,
        ranked_labels: &data.fm.labels,
        prefixes,
    };
    let points = analysis::learning_curve_experiment(
        &curve,
        &best.hyper(cfg.master_seed),
        cfg.learncurve.n_models,
        cfg.master_seed,
        &cfg.fit,
    )?;
    ctx.write(POINTS, &analysis::points_to_csv(&points, &ctx.meta("learning-curve"))?)?;

    let mut fits_text = ctx.meta("learning-curve-fits").header_line();
    let mut fits: BTreeMap<&str, LearningCurveFit> = BTreeMap::new();
    for (split, start) in [
        (CurveSplit::Train, analysis::TRAIN_CURVE_START),
        (CurveSplit::Validation, analysis::TEST_CURVE_START),
        (CurveSplit::Test, analysis::TEST_CURVE_START),
    ] {
        let mean = analysis::mean_curve(&points, split);
        if mean.is_empty() {
            continue;
        }
        ctx.write(
            &format!("series/mean_{}.csv", split.as_str()),
            &analysis::series_csv(&ctx.meta("series"), &mean)?,
        )?;
        match analysis::fit_power_law(&mean, start) {
            Ok(f) => {
                let _ = writeln!(fits_text, "{}", analysis::describe_fit(split.as_str(), &f));
                fits.insert(split.as_str(), f);
            }
            Err(Error::TooFewPoints { needed, got }) => {
                let _ = writeln!(fits_text, "{} not_fitted points={got} needed={needed}", split.as_str());
            }
            Err(e) => return Err(e),
        }
    }
    let lo = curve.prefixes.iter().map(Vec::len).min().unwrap_or(1).max(1) as f64;
    let hi = curve.prefixes.iter().map(Vec::len).max().unwrap_or(1) as f64 * cfg.learncurve.crossing_range_factor;
    for (name, f) in &fits {
        let grid = log_grid(lo, hi, 60);
        let pts: Vec<(f64, f64)> = grid.iter().map(|&r| (r, f.law.eval(r))).collect();
        ctx.write(&format!("series/fit_{name}.csv"), &analysis::series_csv(&ctx.meta("series"), &pts)?)?;
    }
    if let (Some(tr), Some(te)) = (fits.get("train"), fits.get("test")) {
        let c = analysis::crossing_point(&tr.law, &te.law, (lo, hi));
        match c.crossing_rows {
            Some(r) => {
                let _ = writeln!(fits_text, "crossing rows={} range={}..{}", fmt_f64(r), fmt_f64(lo), fmt_f64(hi));
            }
            None => {
                let _ = writeln!(fits_text, "crossing none range={}..{}", fmt_f64(lo), fmt_f64(hi));
            }
        }
    }
    ctx.write(FITS, fits_text.as_bytes())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn report(ctx: &mut StageContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let (best, _) = read_choice(ctx)?;
    let data = Modelling::load(ctx, true)?;
    let eval_dir = ctx.upstream_dir(Stage::Evaluate);
    let pred_path = eval_dir.join(PREDICTIONS);
    let (header, rows) = artifact::read_csv(&pred_path)?;
    let col = header
        .iter()
        .position(|h| h == "best_ensemble")
        .ok_or_else(|| Error::artifact(&pred_path, "missing best_ensemble column"))?;

    let predicted_name = format!("predicted_{}", data.trait_name);
    let mut variables = vec![predicted_name.clone(), data.trait_name.clone()];
    variables.extend(cfg.report.variables.iter().filter(|v| **v != data.trait_name).cloned());
    let cohort = |keep: &dyn Fn(&str) -> bool| -> Result<analysis::Cohort> {
        let sel: Vec<&Vec<String>> = rows.iter().filter(|r| keep(&r[1])).collect();
        let ids: Vec<String> = sel.iter().map(|r| r[0].clone()).collect();
        let mut c = analysis::Cohort::new();
        c.insert(
            predicted_name.clone(),
            sel.iter()
                .map(|r| artifact::parse_field(&pred_path, &r[col], "prediction"))
                .collect::<Result<_>>()?,
        );
        for v in &variables[1..] {
            c.insert(v.clone(), data.scores.column(v, &ids)?);
        }
        Ok(c)
    };
    let lower = cohort(&|s| s == splitting::Sample::Test.as_str())?;
    let upper = cohort(&|_| true)?;
    let table = analysis::correlation_report(&lower, &upper, &variables, cfg.evaluate.alpha)?;
    ctx.write("correlations.csv", &table.to_csv(&ctx.meta("correlations"))?)?;

    let k = best.n_labels;
    let all = data.all_ids();
    let items = data.x(&all)?;
    let alpha = analysis::cronbach_alpha(items.slice(s![.., ..k]))?;

    let model = RegressorModel::load(&eval_dir.join(BEST_MODEL))?;
    let trval = data.split.pooled();
    let x = data.x(&trval)?;
    let xk = x.slice(s![.., ..k]);
    let importance = regressor::variable_importance(&model, xk, &data.y(&trval)?)?;
    let bytes = artifact::render_csv(
        &ctx.meta("importance"),
        &["label", "r2_drop"],
        importance.iter().map(|(l, v)| vec![l.clone(), fmt_f64(*v)]),
    )?;
    ctx.write("importance.csv", &bytes)?;

    let n_points = cfg.report.profile_points.max(2);
    for (label, _) in importance.iter().take(cfg.report.profile_features) {
        let j = model
            .features
            .iter()
            .position(|f| f == label)
            .expect("importance labels come from the model");
        let colv = xk.column(j);
        let (lo, hi) = colv.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let grid: Vec<f64> = (0..n_points).map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64).collect();
        let prof = regressor::activation_profile(&model, j, &grid)?;
        let pts: Vec<(f64, f64)> = grid.into_iter().zip(prof).collect();
        ctx.write(&format!("profiles/{label}.csv"), &analysis::series_csv(&ctx.meta("profile"), &pts)?)?;
    }

    let mut text = ctx.meta("report").header_line();
    let _ = writeln!(
        text,
        "participants total={} train={} validation={} test={}",
        all.len(),
        data.split.train.len(),
        data.split.validation.len(),
        data.split.test.len()
    );
    let _ = writeln!(text, "labels ranked={} selected={k}", data.fm.n_cols());
    let _ = writeln!(text, "cronbach_alpha {}", fmt_f64(alpha));
    for (i, v) in variables.iter().enumerate().skip(1) {
        let _ = writeln!(
            text,
            "r {predicted_name} {v} test={} complete={}",
            fmt_f64(table.matrix[i][0]),
            fmt_f64(table.matrix[0][i])
        );
    }
    for (name, path) in [
        ("evaluation", eval_dir.join(EVALUATION)),
        ("learncurve", ctx.upstream_dir(Stage::LearnCurve).join(FITS)),
    ] {
        for line in artifact::body_lines(&artifact::read_to_string(&path)?) {
            if !line.contains("test_r_values") {
                let _ = writeln!(text, "{name} {line}");
            }
        }
    }
    ctx.write("report.txt", text.as_bytes())
}
