//! Boosted single-hidden-layer TanH regressors.
//!
//! A model is a chain of `boost + 1` stages. The first stage fits the
//! standardized target, each later stage fits what the earlier ones left
//! over. Inputs are standardized with the training means and deviations,
//! which are stored in the model so prediction needs nothing else.
//!
//! Each stage is trained by full-batch gradient descent with momentum and a
//! ridge penalty on its weights. Ten percent of the training rows are held
//! out internally and the stage keeps the parameters that scored best on
//! them. A stage that would raise the training SSE is replaced by a zero
//! stage, so adding boosts never makes the training fit worse.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, job_rng, tag};
use crate::stats::{r_squared, R2Variant};

pub const HIDDEN_UNIT_GRID: [usize; 27] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 150, 200, 250, 300, 350,
    400, 450, 500,
];
pub const LABEL_COUNT_GRID: [usize; 8] = [30, 40, 50, 60, 70, 80, 90, 100];
pub const MAX_BOOST: usize = 5;
pub const MAX_COMPLEXITY: usize = HIDDEN_UNIT_GRID.len() * (MAX_BOOST + 1);
pub const DEFAULT_ENSEMBLE_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperparamSet {
    pub n_labels: usize,
    pub hidden_units: usize,
    pub boost: usize,
    pub seed: u64,
}

impl HyperparamSet {
    pub fn new(n_labels: usize, hidden_units: usize, boost: usize, seed: u64) -> Self {
        HyperparamSet {
            n_labels,
            hidden_units,
            boost,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        HyperparamSet { seed, ..self }
    }

    pub fn complexity(&self) -> Result<usize> {
        complexity_index(self.hidden_units, self.boost)
    }
}

/// Position of a (hidden units, boost) pair in the complexity ordering, 1-based.
pub fn complexity_index(hidden_units: usize, boost: usize) -> Result<usize> {
    let rank = HIDDEN_UNIT_GRID
        .iter()
        .position(|&h| h == hidden_units)
        .ok_or_else(|| Error::OffGrid(format!("hidden_units={hidden_units}")))?;
    if boost > MAX_BOOST {
        return Err(Error::OffGrid(format!("boost={boost}")));
    }
    Ok(rank * (MAX_BOOST + 1) + boost + 1)
}

/// Inverse of [`complexity_index`].
pub fn from_complexity_index(index: usize) -> Result<(usize, usize)> {
    if index == 0 || index > MAX_COMPLEXITY {
        return Err(Error::OffGrid(format!("complexity={index}")));
    }
    let i = index - 1;
    Ok((HIDDEN_UNIT_GRID[i / (MAX_BOOST + 1)], i % (MAX_BOOST + 1)))
}

/// Optimizer settings for a single stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub ridge: f64,
    pub holdout_fraction: f64,
    pub max_iterations: usize,
    pub patience: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            ridge: 1e-3,
            holdout_fraction: 0.1,
            max_iterations: 2000,
            patience: 50,
        }
    }
}

/// One TanH network: `f(z) = v · tanh(W^T z + b) + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// `n_inputs × hidden_units`
    pub input_weights: Array2<f64>,
    pub hidden_bias: Array1<f64>,
    pub output_weights: Array1<f64>,
    pub output_bias: f64,
}

pub struct StageGradient {
    pub input_weights: Array2<f64>,
    pub hidden_bias: Array1<f64>,
    pub output_weights: Array1<f64>,
    pub output_bias: f64,
}

impl Stage {
    pub fn zeros(n_inputs: usize, hidden: usize) -> Stage {
        Stage {
            input_weights: Array2::zeros((n_inputs, hidden)),
            hidden_bias: Array1::zeros(hidden),
            output_weights: Array1::zeros(hidden),
            output_bias: 0.0,
        }
    }

    fn init(n_inputs: usize, hidden: usize, rng: &mut impl Rng) -> Stage {
        let scale = 1.0 / (n_inputs.max(1) as f64).sqrt();
        let mut s = Stage::zeros(n_inputs, hidden);
        s.input_weights
            .mapv_inplace(|_| scale * rng.sample::<f64, _>(StandardNormal));
        s.hidden_bias
            .mapv_inplace(|_| 0.1 * rng.sample::<f64, _>(StandardNormal));
        s
    }

    pub fn hidden_units(&self) -> usize {
        self.output_weights.len()
    }

    fn hidden(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut a = z.dot(&self.input_weights);
        a += &self.hidden_bias;
        a.mapv_inplace(f64::tanh);
        a
    }

    /// Stage output on standardized inputs.
    pub fn forward(&self, z: ArrayView2<f64>) -> Array1<f64> {
        self.hidden(z).dot(&self.output_weights) + self.output_bias
    }

    fn penalty(&self) -> f64 {
        self.input_weights.iter().map(|w| w * w).sum::<f64>()
            + self.output_weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Penalized objective
    /// `(1/2m) Σ (f(z_i) − r_i)² + (λ/2)(‖W‖² + ‖v‖²)`.
    pub fn loss(&self, z: ArrayView2<f64>, r: ArrayView1<f64>, ridge: f64) -> f64 {
        let e = self.forward(z) - r;
        e.dot(&e) / (2.0 * r.len() as f64) + 0.5 * ridge * self.penalty()
    }

    /// Objective value and its analytic gradient.
    pub fn loss_and_gradient(
        &self,
        z: ArrayView2<f64>,
        r: ArrayView1<f64>,
        ridge: f64,
    ) -> (f64, StageGradient) {
        let m = r.len() as f64;
        let h = self.hidden(z);
        let e = h.dot(&self.output_weights) + self.output_bias - r;
        let loss = e.dot(&e) / (2.0 * m) + 0.5 * ridge * self.penalty();

        let g_v = h.t().dot(&e) / m + ridge * &self.output_weights;
        let g_c = e.sum() / m;
        // dA = (e v^T) ∘ (1 − H²)
        let mut da = h;
        for (mut row, ei) in da.axis_iter_mut(Axis(0)).zip(e.iter()) {
            for (hij, vj) in row.iter_mut().zip(self.output_weights.iter()) {
                *hij = ei * vj * (1.0 - *hij * *hij);
            }
        }
        let g_w = z.t().dot(&da) / m + ridge * &self.input_weights;
        let g_b = da.sum_axis(Axis(0)) / m;
        (
            loss,
            StageGradient {
                input_weights: g_w,
                hidden_bias: g_b,
                output_weights: g_v,
                output_bias: g_c,
            },
        )
    }

    fn axpy(&mut self, a: f64, d: &Stage) {
        self.input_weights.scaled_add(a, &d.input_weights);
        self.hidden_bias.scaled_add(a, &d.hidden_bias);
        self.output_weights.scaled_add(a, &d.output_weights);
        self.output_bias += a * d.output_bias;
    }

    fn scale(&mut self, a: f64) {
        self.input_weights *= a;
        self.hidden_bias *= a;
        self.output_weights *= a;
        self.output_bias *= a;
    }

    fn from_gradient(g: StageGradient) -> Stage {
        Stage {
            input_weights: g.input_weights,
            hidden_bias: g.hidden_bias,
            output_weights: g.output_weights,
            output_bias: g.output_bias,
        }
    }

    /// Upper bound on the Lipschitz constant of the stage in standardized
    /// input space: `‖v‖₂ · ‖W‖_F`.
    pub fn lipschitz_bound(&self) -> f64 {
        let v: f64 = self.output_weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        let w: f64 = self.input_weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        v * w
    }
}

fn rows_of(z: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    z.select(Axis(0), idx)
}

fn train_stage(
    z: &Array2<f64>,
    r: &Array1<f64>,
    fit_idx: &[usize],
    hold_idx: &[usize],
    hidden: usize,
    cfg: &FitConfig,
    rng: &mut impl Rng,
) -> Stage {
    let p = z.ncols();
    let zf = rows_of(z, fit_idx);
    let rf = r.select(Axis(0), fit_idx);
    let zh = rows_of(z, hold_idx);
    let rh = r.select(Axis(0), hold_idx);
    let hold_mse = |s: &Stage| {
        let e = s.forward(zh.view()) - &rh;
        e.dot(&e) / rh.len() as f64
    };

    let mut theta = Stage::init(p, hidden, rng);
    let mut velocity = Stage::zeros(p, hidden);
    let mut lr = cfg.learning_rate;
    let (mut loss, mut grad) = theta.loss_and_gradient(zf.view(), rf.view(), cfg.ridge);

    let mut best = theta.clone();
    let mut best_hold = if hold_idx.is_empty() {
        f64::INFINITY
    } else {
        hold_mse(&theta)
    };
    let mut since_best = 0usize;

    for _ in 0..cfg.max_iterations {
        let previous = theta.clone();
        let step = Stage::from_gradient(grad);
        velocity.scale(cfg.momentum);
        velocity.axpy(-lr, &step);
        theta.axpy(1.0, &velocity);

        let (new_loss, new_grad) = theta.loss_and_gradient(zf.view(), rf.view(), cfg.ridge);
        if !new_loss.is_finite() || new_loss > loss {
            // overshoot: step back, drop the momentum and halve the step
            theta = previous;
            velocity = Stage::zeros(p, hidden);
            lr *= 0.5;
            grad = Stage::into_gradient(step);
            if lr < 1e-12 {
                break;
            }
            continue;
        }
        loss = new_loss;
        grad = new_grad;

        if hold_idx.is_empty() {
            best.clone_from(&theta);
            continue;
        }
        let h = hold_mse(&theta);
        if h < best_hold {
            best_hold = h;
            best.clone_from(&theta);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    best
}

impl Stage {
    fn into_gradient(s: Stage) -> StageGradient {
        StageGradient {
            input_weights: s.input_weights,
            hidden_bias: s.hidden_bias,
            output_weights: s.output_weights,
            output_bias: s.output_bias,
        }
    }
}

pub const MODEL_FORMAT: &str = "icmodel";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub hyper: HyperparamSet,
    pub features: Vec<String>,
    pub input_mean: Vec<f64>,
    /// Divisor applied after centering; 1 for constant columns.
    pub input_scale: Vec<f64>,
    /// Columns that were constant in the training rows.
    pub constant_features: Vec<usize>,
    pub target_mean: f64,
    pub target_sd: f64,
    pub stages: Vec<Stage>,
}

/// Diagnostics kept from a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub training_predictions: Vec<f64>,
    /// Training SSE in standardized units after 0, 1, ..., boost+1 stages.
    pub stage_sse: Vec<f64>,
    /// Stages that were replaced by zero because they raised the training SSE.
    pub rejected_stages: Vec<usize>,
}

fn column_stats(x: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    let mut constant = Vec::new();
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        means.push(m);
        if var > 0.0 && var.is_finite() {
            scales.push(var.sqrt());
        } else {
            constant.push(j);
            scales.push(1.0);
        }
    }
    (means, scales, constant)
}

impl RegressorModel {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    fn standardize(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.to_owned();
        for (j, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.input_mean[j], self.input_scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        z
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        let z = self.standardize(x);
        let mut out = Array1::<f64>::zeros(x.nrows());
        for s in &self.stages {
            out += &s.forward(z.view());
        }
        Ok(out
            .iter()
            .map(|v| self.target_mean + self.target_sd * v)
            .collect())
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let x = ArrayView2::from_shape((1, row.len()), row)
            .map_err(|e| Error::DegenerateData(e.to_string()))?;
        Ok(self.predict(x)?[0])
    }

    /// Lipschitz bound in raw input units (Euclidean norm).
    pub fn lipschitz_bound(&self) -> f64 {
        let min_scale = self.input_scale.iter().cloned().fold(f64::INFINITY, f64::min);
        let per_stage: f64 = self.stages.iter().map(Stage::lipschitz_bound).sum();
        self.target_sd * per_stage / min_scale
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            format: &'a str,
            version: u32,
            model: &'a RegressorModel,
        }
        serde_json::to_string_pretty(&Doc {
            format: MODEL_FORMAT,
            version: MODEL_VERSION,
            model: self,
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<RegressorModel> {
        #[derive(Deserialize)]
        struct Doc {
            format: String,
            version: u32,
            model: RegressorModel,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::MalformedArtifact {
            path: "<model json>".into(),
            reason: e.to_string(),
        })?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::MalformedArtifact {
                path: "<model json>".into(),
                reason: format!("unsupported model format {} v{}", doc.format, doc.version),
            });
        }
        doc.model.check_shapes()?;
        Ok(doc.model)
    }

    fn check_shapes(&self) -> Result<()> {
        let p = self.features.len();
        let bad = |reason: String| Error::MalformedArtifact {
            path: "<model>".into(),
            reason,
        };
        if self.input_mean.len() != p || self.input_scale.len() != p {
            return Err(bad("standardization length differs from feature count".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            let h = s.output_weights.len();
            if s.input_weights.dim() != (p, h) || s.hidden_bias.len() != h {
                return Err(bad(format!("stage {i} has inconsistent shapes")));
            }
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"ICMODEL\0");
        b.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        for v in [
            self.hyper.n_labels as u64,
            self.hyper.hidden_units as u64,
            self.hyper.boost as u64,
            self.hyper.seed,
            self.features.len() as u64,
        ] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for f in &self.features {
            b.extend_from_slice(&(f.len() as u64).to_le_bytes());
            b.extend_from_slice(f.as_bytes());
        }
        let put = |b: &mut Vec<u8>, xs: &mut dyn Iterator<Item = f64>| {
            for x in xs {
                b.extend_from_slice(&x.to_le_bytes());
            }
        };
        put(&mut b, &mut self.input_mean.iter().copied());
        put(&mut b, &mut self.input_scale.iter().copied());
        b.extend_from_slice(&(self.constant_features.len() as u64).to_le_bytes());
        for &c in &self.constant_features {
            b.extend_from_slice(&(c as u64).to_le_bytes());
        }
        put(&mut b, &mut [self.target_mean, self.target_sd].into_iter());
        b.extend_from_slice(&(self.stages.len() as u64).to_le_bytes());
        for s in &self.stages {
            b.extend_from_slice(&(s.hidden_units() as u64).to_le_bytes());
            put(&mut b, &mut s.input_weights.iter().copied());
            put(&mut b, &mut s.hidden_bias.iter().copied());
            put(&mut b, &mut s.output_weights.iter().copied());
            put(&mut b, &mut std::iter::once(s.output_bias));
        }
        b
    }

    pub fn from_binary(bytes: &[u8]) -> Result<RegressorModel> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != b"ICMODEL\0" {
            return Err(r.err("bad magic"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != MODEL_VERSION {
            return Err(r.err("unsupported version"));
        }
        let hyper = HyperparamSet {
            n_labels: r.usize()?,
            hidden_units: r.usize()?,
            boost: r.usize()?,
            seed: r.u64()?,
        };
        let p = r.usize()?;
        let mut features = Vec::with_capacity(p);
        for _ in 0..p {
            let len = r.usize()?;
            let s = std::str::from_utf8(r.take(len)?).map_err(|_| r.err("feature name"))?;
            features.push(s.to_string());
        }
        let input_mean = r.f64s(p)?;
        let input_scale = r.f64s(p)?;
        let n_const = r.usize()?;
        let mut constant_features = Vec::with_capacity(n_const.min(p));
        for _ in 0..n_const {
            constant_features.push(r.usize()?);
        }
        let target_mean = r.f64()?;
        let target_sd = r.f64()?;
        let n_stages = r.usize()?;
        let mut stages = Vec::with_capacity(n_stages.min(64));
        for _ in 0..n_stages {
            let h = r.usize()?;
            let w = Array2::from_shape_vec((p, h), r.f64s(p * h)?)
                .map_err(|_| r.err("stage shape"))?;
            stages.push(Stage {
                input_weights: w,
                hidden_bias: Array1::from(r.f64s(h)?),
                output_weights: Array1::from(r.f64s(h)?),
                output_bias: r.f64()?,
            });
        }
        if r.pos != bytes.len() {
            return Err(r.err("trailing bytes"));
        }
        Ok(RegressorModel {
            hyper,
            features,
            input_mean,
            input_scale,
            constant_features,
            target_mean,
            target_sd,
            stages,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = if path.extension().is_some_and(|e| e == "bin") {
            self.to_binary()
        } else {
            self.to_json().into_bytes()
        };
        crate::artifact::write_bytes(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<RegressorModel> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let parsed = if bytes.starts_with(b"ICMODEL\0") {
            RegressorModel::from_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::artifact(path, "model file is not UTF-8"))?;
            RegressorModel::from_json(&text)
        };
        parsed.map_err(|e| match e {
            Error::MalformedArtifact { reason, .. } => Error::artifact(path, &reason),
            other => other,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: &str) -> Error {
        Error::MalformedArtifact {
            path: "<model binary>".into(),
            reason: format!("{reason} at byte {}", self.pos),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err("truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| self.err("count overflow"))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Number of internally held-out rows for `n` training rows.
fn holdout_size(n: usize, fraction: f64) -> usize {
    if n < 10 {
        return 0;
    }
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

pub fn train_boosted_mlp(
    x: ArrayView2<f64>,
    y: &[f64],
    features: &[String],
    hyper: &HyperparamSet,
    cfg: &FitConfig,
) -> Result<RegressorModel> {
    train_boosted_mlp_with_report(x, y, features, hyper, cfg).map(|(m, _)| m)
}

pub fn train_boosted_mlp_with_report(
    x: ArrayView2<f64>,
    y: &[f64],
    features: &[String],
    hyper: &HyperparamSet,
    cfg: &FitConfig,
) -> Result<(RegressorModel, FitReport)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if x.ncols() != hyper.n_labels || features.len() != hyper.n_labels {
        return Err(Error::DimensionMismatch {
            expected: hyper.n_labels,
            actual: if x.ncols() != hyper.n_labels {
                x.ncols()
            } else {
                features.len()
            },
        });
    }
    if hyper.hidden_units == 0 {
        return Err(Error::OffGrid("hidden_units=0".into()));
    }
    if hyper.boost > MAX_BOOST {
        return Err(Error::OffGrid(format!("boost={}", hyper.boost)));
    }
    let target_mean = y.iter().sum::<f64>() / n as f64;
    let target_var = y.iter().map(|v| (v - target_mean).powi(2)).sum::<f64>() / n as f64;
    if target_var <= 0.0 || !target_var.is_finite() {
        return Err(Error::DegenerateTarget);
    }
    let target_sd = target_var.sqrt();

    let (input_mean, input_scale, constant_features) = column_stats(x);
    if !constant_features.is_empty() {
        log::warn!(
            "{} constant feature column(s) carry no information",
            constant_features.len()
        );
    }
    let mut model = RegressorModel {
        hyper: *hyper,
        features: features.to_vec(),
        input_mean,
        input_scale,
        constant_features,
        target_mean,
        target_sd,
        stages: Vec::with_capacity(hyper.boost + 1),
    };
    let z = model.standardize(x);

    let mut rng = job_rng(hyper.seed, &[tag("mlp")]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_hold = holdout_size(n, cfg.holdout_fraction);
    let mut hold_idx = order[..n_hold].to_vec();
    let mut fit_idx = order[n_hold..].to_vec();
    hold_idx.sort_unstable();
    fit_idx.sort_unstable();

    let mut residual: Array1<f64> = y.iter().map(|v| (v - target_mean) / target_sd).collect();
    let mut stage_sse = vec![residual.dot(&residual)];
    let mut rejected = Vec::new();
    for s in 0..=hyper.boost {
        let stage = train_stage(
            &z,
            &residual,
            &fit_idx,
            &hold_idx,
            hyper.hidden_units,
            cfg,
            &mut rng,
        );
        let out = stage.forward(z.view());
        let next = &residual - &out;
        let sse = next.dot(&next);
        let prev = *stage_sse.last().unwrap();
        if sse <= prev {
            residual = next;
            stage_sse.push(sse);
            model.stages.push(stage);
        } else {
            rejected.push(s);
            stage_sse.push(prev);
            model.stages.push(Stage::zeros(x.ncols(), hyper.hidden_units));
        }
    }
    let training_predictions = model.predict(x)?;
    Ok((
        model,
        FitReport {
            training_predictions,
            stage_sse,
            rejected_stages: rejected,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<RegressorModel>,
}

impl Ensemble {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; x.nrows()];
        for m in &self.members {
            for (s, p) in sum.iter_mut().zip(m.predict(x)?) {
                *s += p;
            }
        }
        let k = self.members.len() as f64;
        Ok(sum.into_iter().map(|s| s / k).collect())
    }

    /// Per-member predictions, one vector per member.
    pub fn member_predictions(&self, x: ArrayView2<f64>) -> Result<Vec<Vec<f64>>> {
        self.members.iter().map(|m| m.predict(x)).collect()
    }
}

/// Seed of ensemble member `i`.
pub fn member_seed(master_seed: u64, i: usize) -> u64 {
    derive_seed(master_seed, &[tag("ensemble-member"), i as u64])
}

pub fn train_ensemble(
    x: ArrayView2<f64>,
    y: &[f64],
    features: &[String],
    hyper: &HyperparamSet,
    n_members: usize,
    master_seed: u64,
    cfg: &FitConfig,
) -> Result<Ensemble> {
    if n_members == 0 {
        return Err(Error::Config("ensemble needs at least one member".into()));
    }
    let members = (0..n_members)
        .into_par_iter()
        .map(|i| {
            let h = hyper.with_seed(member_seed(master_seed, i));
            train_boosted_mlp(x, y, features, &h, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { members })
}

/// Drop-one importance: the loss in fit-variant R² when a feature is held
/// at its training mean. Sorted descending, ties in feature order.
pub fn variable_importance(
    model: &RegressorModel,
    x: ArrayView2<f64>,
    y: &[f64],
) -> Result<Vec<(String, f64)>> {
    let full = r_squared(y, &model.predict(x)?, R2Variant::Fit)?;
    let mut out = Vec::with_capacity(model.n_features());
    for j in 0..model.n_features() {
        let mut xj = x.to_owned();
        xj.column_mut(j).fill(model.input_mean[j]);
        let r2 = r_squared(y, &model.predict(xj.view())?, R2Variant::Fit)?;
        out.push((model.features[j].clone(), full - r2));
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}

/// Partial response along `grid` for one feature, others at their training mean.
pub fn activation_profile(model: &RegressorModel, feature: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if feature >= model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: feature + 1,
        });
    }
    let mut x = Array2::zeros((grid.len(), model.n_features()));
    for mut row in x.axis_iter_mut(Axis(0)) {
        row.assign(&ArrayView1::from(&model.input_mean[..]));
    }
    for (i, g) in grid.iter().enumerate() {
        x[[i, feature]] = *g;
    }
    model.predict(x.view())
}
