//! Feature ranking, grid search over network shapes, and the spline-guided
//! choice of the final hyperparameters.

pub mod forest;
pub mod spline;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::artifact::{self, fmt_f64, ArtifactMeta};
use crate::error::{Error, Result};
use crate::regressor::{
    complexity_index, train_boosted_mlp, Ensemble, FitConfig, HyperparamSet, RegressorModel,
    HIDDEN_UNIT_GRID, LABEL_COUNT_GRID, MAX_BOOST,
};
use crate::rng::{derive_seed, tag};
use crate::splitting::make_cv_folds;
use crate::stats::{self, R2Variant};

pub use forest::{rank_features_random_forest, select_top_k, FeatureRanking, ForestConfig};
pub use spline::{Smoothing, SmoothingSpline};
pub use stats::R2Variant as Variant;

pub fn r_squared(y: &[f64], y_hat: &[f64], variant: R2Variant) -> Result<f64> {
    stats::r_squared(y, y_hat, variant)
}

/// Validation R² penalized by its distance from the training R².
pub fn mfpr2(r2_train: f64, r2_val: f64) -> f64 {
    r2_val - (r2_train - r2_val).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub label_counts: Vec<usize>,
    pub hidden_units: Vec<usize>,
    pub boosts: Vec<usize>,
    pub n_folds: usize,
    pub n_seeds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            label_counts: LABEL_COUNT_GRID.to_vec(),
            hidden_units: HIDDEN_UNIT_GRID.to_vec(),
            boosts: (0..=MAX_BOOST).collect(),
            n_folds: 5,
            n_seeds: 10,
        }
    }
}

impl GridSpec {
    pub fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for &k in &self.label_counts {
            for &h in &self.hidden_units {
                for &b in &self.boosts {
                    v.push((k, h, b));
                }
            }
        }
        v
    }

    /// Number of cross-validated runs (one per cell and seed).
    pub fn model_count(&self) -> usize {
        self.cells().len() * self.n_seeds
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub n_labels: usize,
    pub hidden_units: usize,
    pub boost: usize,
    pub complexity: usize,
    pub r2_train: f64,
    pub r2_val: f64,
    pub mfpr2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
}

pub const GRID_COLUMNS: [&str; 7] = [
    "n_labels",
    "hidden_units",
    "boost",
    "complexity",
    "r2_train",
    "r2_val",
    "mfpr2",
];

impl GridResult {
    pub fn to_csv(&self, meta: &ArtifactMeta) -> Result<Vec<u8>> {
        artifact::render_csv(
            meta,
            &GRID_COLUMNS,
            self.rows.iter().map(|r| {
                vec![
                    r.n_labels.to_string(),
                    r.hidden_units.to_string(),
                    r.boost.to_string(),
                    r.complexity.to_string(),
                    fmt_f64(r.r2_train),
                    fmt_f64(r.r2_val),
                    fmt_f64(r.mfpr2),
                ]
            }),
        )
    }

    pub fn read_csv(path: &Path) -> Result<GridResult> {
        let (header, rows) = artifact::read_csv(path)?;
        if header != GRID_COLUMNS {
            return Err(Error::artifact(path, "unexpected grid columns"));
        }
        let rows = rows
            .iter()
            .map(|r| {
                Ok(GridRow {
                    n_labels: artifact::parse_field(path, &r[0], "n_labels")?,
                    hidden_units: artifact::parse_field(path, &r[1], "hidden_units")?,
                    boost: artifact::parse_field(path, &r[2], "boost")?,
                    complexity: artifact::parse_field(path, &r[3], "complexity")?,
                    r2_train: artifact::parse_field(path, &r[4], "r2_train")?,
                    r2_val: artifact::parse_field(path, &r[5], "r2_val")?,
                    mfpr2: artifact::parse_field(path, &r[6], "mfpr2")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridResult { rows })
    }
}

fn take_rows(x: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

fn take(y: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| y[i]).collect()
}

fn fold_indices(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != f)
}

/// Folds and model seed used for seed index `s`. The same for every grid
/// cell, so all hyperparameter sets see identical partitions and starts.
fn cv_plan(n: usize, n_folds: usize, master_seed: u64, s: usize) -> Result<(Vec<usize>, u64)> {
    let folds = make_cv_folds(n, n_folds, derive_seed(master_seed, &[tag("cv-folds"), s as u64]))?;
    Ok((folds, derive_seed(master_seed, &[tag("cv-model"), s as u64])))
}

fn fold_model_seed(base: u64, fold: usize) -> u64 {
    derive_seed(base, &[fold as u64])
}

/// Mean fold-wise fit-variant R² on in-fold and out-of-fold rows, averaged
/// over `n_seeds` repetitions.
#[allow(clippy::too_many_arguments)]
pub fn cross_validated_scores(
    x: ArrayView2<f64>,
    y: &[f64],
    features: &[String],
    hyper: &HyperparamSet,
    n_folds: usize,
    n_seeds: usize,
    master_seed: u64,
    fit: &FitConfig,
) -> Result<(f64, f64)> {
    let n = x.nrows();
    if n < 2 * n_folds {
        return Err(Error::TooFewRows {
            needed: 2 * n_folds,
            got: n,
        });
    }
    if n_seeds == 0 {
        return Err(Error::Config("need at least one seed".into()));
    }
    let mut train_sum = 0.0;
    let mut val_sum = 0.0;
    for s in 0..n_seeds {
        let (folds, base) = cv_plan(n, n_folds, master_seed, s)?;
        let (mut tr, mut va) = (0.0, 0.0);
        for f in 0..n_folds {
            let (fit_idx, val_idx) = fold_indices(&folds, f);
            let xf = take_rows(x, &fit_idx);
            let yf = take(y, &fit_idx);
            let h = hyper.with_seed(fold_model_seed(base, f));
            let model = train_boosted_mlp(xf.view(), &yf, features, &h, fit)?;
            tr += r_squared(&yf, &model.predict(xf.view())?, R2Variant::Fit)?;
            let xv = take_rows(x, &val_idx);
            let yv = take(y, &val_idx);
            va += r_squared(&yv, &model.predict(xv.view())?, R2Variant::Fit)?;
        }
        train_sum += tr / n_folds as f64;
        val_sum += va / n_folds as f64;
    }
    Ok((train_sum / n_seeds as f64, val_sum / n_seeds as f64))
}

/// Evaluate every cell of `spec`. `x` holds the pooled training rows with
/// columns in ranking order; a cell with `k` labels uses the first `k`.
pub fn grid_search(
    x: ArrayView2<f64>,
    y: &[f64],
    ranked_labels: &[String],
    spec: &GridSpec,
    master_seed: u64,
    fit: &FitConfig,
) -> Result<GridResult> {
    let cells = spec.cells();
    if cells.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &k in &spec.label_counts {
        if k > x.ncols() || k > ranked_labels.len() {
            return Err(Error::KTooLarge {
                k,
                available: x.ncols().min(ranked_labels.len()),
            });
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(k, h, b)| {
            let complexity = complexity_index(h, b)?;
            let hyper = HyperparamSet::new(k, h, b, master_seed);
            let xk = x.slice(s![.., ..k]);
            let (r2_train, r2_val) = cross_validated_scores(
                xk,
                y,
                &ranked_labels[..k],
                &hyper,
                spec.n_folds,
                spec.n_seeds,
                master_seed,
                fit,
            )?;
            Ok(GridRow {
                n_labels: k,
                hidden_units: h,
                boost: b,
                complexity,
                r2_train,
                r2_val,
                mfpr2: mfpr2(r2_train, r2_val),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridResult { rows })
}

/// Spline of MFPR² over the complexity index for the rows of one label count.
pub fn fit_selection_spline(rows: &[GridRow], smoothing: Smoothing) -> Result<SmoothingSpline> {
    let x: Vec<f64> = rows.iter().map(|r| r.complexity as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mfpr2).collect();
    SmoothingSpline::fit(&x, &y, smoothing)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineSummary {
    pub n_labels: usize,
    pub spline: SmoothingSpline,
    pub argmax: f64,
    pub candidate: GridRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub best: GridRow,
    pub second_best: GridRow,
    pub splines: Vec<SplineSummary>,
    pub tie_breaks: Vec<String>,
}

impl GridRow {
    pub fn hyper(&self, seed: u64) -> HyperparamSet {
        HyperparamSet::new(self.n_labels, self.hidden_units, self.boost, seed)
    }
}

/// Higher MFPR² first, then lower complexity, then fewer labels.
fn rank_rows(a: &GridRow, b: &GridRow) -> std::cmp::Ordering {
    b.mfpr2
        .total_cmp(&a.mfpr2)
        .then(a.complexity.cmp(&b.complexity))
        .then(a.n_labels.cmp(&b.n_labels))
}

pub fn select_hyperparameters(grid: &GridResult, smoothing: Smoothing) -> Result<SelectionOutcome> {
    if grid.rows.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut label_counts: Vec<usize> = grid.rows.iter().map(|r| r.n_labels).collect();
    label_counts.sort_unstable();
    label_counts.dedup();

    let mut tie_breaks = Vec::new();
    let mut splines = Vec::new();
    for &k in &label_counts {
        let rows: Vec<GridRow> = grid.rows.iter().copied().filter(|r| r.n_labels == k).collect();
        let spline = fit_selection_spline(&rows, smoothing)?;
        let argmax = spline.argmax();
        let dist = |r: &GridRow| (r.complexity as f64 - argmax).abs();
        let mut ordered = rows.clone();
        ordered.sort_by(|a, b| dist(a).total_cmp(&dist(b)).then(rank_rows(a, b)));
        let candidate = ordered[0];
        if ordered.len() > 1 && dist(&ordered[1]) == dist(&candidate) {
            let runner = ordered[1];
            let rule = if runner.mfpr2 == candidate.mfpr2 {
                "lower complexity"
            } else {
                "higher MFPR²"
            };
            tie_breaks.push(format!(
                "n_labels={k}: complexities {} and {} are equally close to the spline maximum {:.3}; kept {} by {rule}",
                candidate.complexity, runner.complexity, argmax, candidate.complexity
            ));
        }
        splines.push(SplineSummary {
            n_labels: k,
            spline,
            argmax,
            candidate,
        });
    }

    let mut candidates: Vec<GridRow> = splines.iter().map(|s| s.candidate).collect();
    candidates.sort_by(rank_rows);
    let best = candidates[0];
    let second_best = if candidates.len() > 1 {
        let second = candidates[1];
        if second.mfpr2 == best.mfpr2 {
            tie_breaks.push(format!(
                "best and second-best candidates share MFPR² {}; ordered by complexity then label count",
                fmt_f64(best.mfpr2)
            ));
        }
        second
    } else {
        let mut same: Vec<GridRow> = grid.rows.iter().copied().filter(|r| *r != best).collect();
        same.sort_by(rank_rows);
        let Some(&second) = same.first() else {
            return Err(Error::EmptyGrid);
        };
        tie_breaks.push(
            "only one label count on the grid; second-best is the next row by MFPR² at that count"
                .to_string(),
        );
        second
    };
    Ok(SelectionOutcome {
        best,
        second_best,
        splines,
        tie_breaks,
    })
}

impl SelectionOutcome {
    pub fn report(&self, meta: &ArtifactMeta) -> String {
        let mut out = meta.header_line();
        let row = |r: &GridRow| {
            format!(
                "n_labels={} hidden_units={} boost={} complexity={} r2_train={} r2_val={} mfpr2={}",
                r.n_labels,
                r.hidden_units,
                r.boost,
                r.complexity,
                fmt_f64(r.r2_train),
                fmt_f64(r.r2_val),
                fmt_f64(r.mfpr2)
            )
        };
        let _ = writeln!(out, "best {}", row(&self.best));
        let _ = writeln!(out, "second_best {}", row(&self.second_best));
        for s in &self.splines {
            let _ = writeln!(
                out,
                "spline n_labels={} lambda={} argmax={} candidate_complexity={}",
                s.n_labels,
                fmt_f64(s.spline.lambda),
                fmt_f64(s.argmax),
                s.candidate.complexity
            );
            let knots: Vec<String> = s.spline.knots.iter().map(|v| fmt_f64(*v)).collect();
            let fitted: Vec<String> = s.spline.fitted.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(out, "  knots {}", knots.join(" "));
            let _ = writeln!(out, "  fitted {}", fitted.join(" "));
        }
        for t in &self.tie_breaks {
            let _ = writeln!(out, "tie_break {t}");
        }
        if self.tie_breaks.is_empty() {
            let _ = writeln!(out, "tie_break none");
        }
        out
    }

    /// Read `best` and `second_best` back from a report.
    pub fn parse_choice(path: &Path, text: &str) -> Result<(GridRow, GridRow)> {
        let parse = |prefix: &str| -> Result<GridRow> {
            let line = artifact::body_lines(text)
                .find(|l| l.starts_with(prefix))
                .ok_or_else(|| Error::artifact(path, format!("missing '{prefix}' line")))?;
            let mut fields = std::collections::HashMap::new();
            for kv in line.split_whitespace().skip(1) {
                if let Some((k, v)) = kv.split_once('=') {
                    fields.insert(k, v);
                }
            }
            let get = |k: &str| {
                fields
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::artifact(path, format!("missing field {k}")))
            };
            Ok(GridRow {
                n_labels: artifact::parse_field(path, get("n_labels")?, "n_labels")?,
                hidden_units: artifact::parse_field(path, get("hidden_units")?, "hidden_units")?,
                boost: artifact::parse_field(path, get("boost")?, "boost")?,
                complexity: artifact::parse_field(path, get("complexity")?, "complexity")?,
                r2_train: artifact::parse_field(path, get("r2_train")?, "r2_train")?,
                r2_val: artifact::parse_field(path, get("r2_val")?, "r2_val")?,
                mfpr2: artifact::parse_field(path, get("mfpr2")?, "mfpr2")?,
            })
        };
        Ok((parse("best ")?, parse("second_best ")?))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub n_eval_models: usize,
    pub n_folds: usize,
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_eval_models: 100,
            n_folds: 5,
            alpha: 0.05,
        }
    }
}

/// Pooled training rows and untouched test rows, columns in ranking order.
pub struct EvalData<'a> {
    pub x_trainval: ArrayView2<'a, f64>,
    pub y_trainval: &'a [f64],
    pub x_test: ArrayView2<'a, f64>,
    pub y_test: &'a [f64],
    pub ranked_labels: &'a [String],
}

#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub choice: GridRow,
    /// Pearson r on the test rows, one per evaluation seed.
    pub test_r: Vec<f64>,
    pub mean_r: f64,
    pub sd_r: f64,
    pub critical_r: f64,
    pub n_significant: usize,
    pub single_index: usize,
    pub single_model: RegressorModel,
    pub single_r2_trainval: f64,
    pub single_r2_test: f64,
    pub ensemble: Ensemble,
    pub ensemble_r2_trainval: f64,
    pub ensemble_r2_test: f64,
    pub ensemble_test_predictions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub best: ModelEvaluation,
    pub second_best: ModelEvaluation,
}

fn pearson_or_zero(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    match stats::pearson_r(y, y_hat) {
        Err(Error::DegenerateVariance(_)) => Ok(0.0),
        other => other,
    }
}

fn pearson_r2(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    Ok(pearson_or_zero(y, y_hat)?.powi(2))
}

/// Fit `n_eval_models` models of one architecture. Each draws its own
/// folds over the pooled rows, trains one model per fold and keeps the one
/// with the best held-out fold R²; that model is scored on the test rows.
pub fn evaluate_model(
    choice: &GridRow,
    data: &EvalData<'_>,
    cfg: &EvalConfig,
    master_seed: u64,
    fit: &FitConfig,
) -> Result<ModelEvaluation> {
    let k = choice.n_labels;
    if k > data.x_trainval.ncols() || k > data.ranked_labels.len() {
        return Err(Error::KTooLarge {
            k,
            available: data.x_trainval.ncols(),
        });
    }
    if cfg.n_eval_models == 0 {
        return Err(Error::Config("need at least one evaluation model".into()));
    }
    let x = data.x_trainval.slice(s![.., ..k]);
    let xt = data.x_test.slice(s![.., ..k]);
    let labels = &data.ranked_labels[..k];
    let n = x.nrows();

    let winners = (0..cfg.n_eval_models)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, &[tag("evaluate"), i as u64]);
            let folds = make_cv_folds(n, cfg.n_folds, seed)?;
            let mut best: Option<(f64, RegressorModel)> = None;
            for f in 0..cfg.n_folds {
                let (fit_idx, val_idx) = fold_indices(&folds, f);
                let xf = take_rows(x, &fit_idx);
                let yf = take(data.y_trainval, &fit_idx);
                let h = choice.hyper(fold_model_seed(seed, f));
                let model = train_boosted_mlp(xf.view(), &yf, labels, &h, fit)?;
                let yv = take(data.y_trainval, &val_idx);
                let pv = model.predict(take_rows(x, &val_idx).view())?;
                let r2 = r_squared(&yv, &pv, R2Variant::Fit)?;
                if best.as_ref().is_none_or(|(b, _)| r2 > *b) {
                    best = Some((r2, model));
                }
            }
            Ok(best.expect("at least two folds"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut test_r = Vec::with_capacity(winners.len());
    for (_, m) in &winners {
        test_r.push(pearson_or_zero(data.y_test, &m.predict(xt)?)?);
    }
    let critical = stats::critical_r(data.y_test.len(), cfg.alpha)?;
    let n_significant = test_r.iter().filter(|r| r.abs() >= critical).count();
    let mean_r = stats::mean(&test_r);
    let sd_r = if test_r.len() > 1 { stats::std_dev(&test_r) } else { 0.0 };

    let single_index = winners
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, (r2, _))| {
            if *r2 > acc.1 {
                (i, *r2)
            } else {
                acc
            }
        })
        .0;
    let single_model = winners[single_index].1.clone();
    let single_r2_trainval = pearson_r2(data.y_trainval, &single_model.predict(x)?)?;
    let single_r2_test = pearson_r2(data.y_test, &single_model.predict(xt)?)?;

    let ensemble = Ensemble {
        members: winners.into_iter().map(|(_, m)| m).collect(),
    };
    let ensemble_r2_trainval = pearson_r2(data.y_trainval, &ensemble.predict(x)?)?;
    let ensemble_test_predictions = ensemble.predict(xt)?;
    let ensemble_r2_test = pearson_r2(data.y_test, &ensemble_test_predictions)?;
    Ok(ModelEvaluation {
        choice: *choice,
        test_r,
        mean_r,
        sd_r,
        critical_r: critical,
        n_significant,
        single_index,
        single_model,
        single_r2_trainval,
        single_r2_test,
        ensemble,
        ensemble_r2_trainval,
        ensemble_r2_test,
        ensemble_test_predictions,
    })
}

pub fn evaluate_selected(
    best: &GridRow,
    second_best: &GridRow,
    data: &EvalData<'_>,
    cfg: &EvalConfig,
    master_seed: u64,
    fit: &FitConfig,
) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        best: evaluate_model(best, data, cfg, master_seed, fit)?,
        second_best: evaluate_model(second_best, data, cfg, master_seed, fit)?,
    })
}

impl EvaluationReport {
    pub fn to_text(&self, meta: &ArtifactMeta) -> String {
        let mut out = meta.header_line();
        for (name, e) in [("best", &self.best), ("second_best", &self.second_best)] {
            let c = &e.choice;
            let _ = writeln!(
                out,
                "{name} n_labels={} hidden_units={} boost={} complexity={}",
                c.n_labels, c.hidden_units, c.boost, c.complexity
            );
            let _ = writeln!(
                out,
                "{name} test_r mean={} sd={} critical_r={} significant={}/{}",
                fmt_f64(e.mean_r),
                fmt_f64(e.sd_r),
                fmt_f64(e.critical_r),
                e.n_significant,
                e.test_r.len()
            );
            let _ = writeln!(
                out,
                "{name} single index={} r2_trainval={} r2_test={}",
                e.single_index,
                fmt_f64(e.single_r2_trainval),
                fmt_f64(e.single_r2_test)
            );
            let _ = writeln!(
                out,
                "{name} ensemble size={} r2_trainval={} r2_test={}",
                e.ensemble.size(),
                fmt_f64(e.ensemble_r2_trainval),
                fmt_f64(e.ensemble_r2_test)
            );
            let rs: Vec<String> = e.test_r.iter().map(|r| fmt_f64(*r)).collect();
            let _ = writeln!(out, "{name} test_r_values {}", rs.join(" "));
        }
        out
    }
}
