//! Psychometric statistics and learning-curve extrapolation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use ndarray::{s, ArrayView2, Axis};
use rayon::prelude::*;

use crate::artifact::{self, fmt_f64, ArtifactMeta};
use crate::error::{Error, Result};
use crate::regressor::{train_boosted_mlp, FitConfig, HyperparamSet};
use crate::rng::{derive_seed, tag};
use crate::stats;

pub use crate::stats::{critical_r, pearson_r};

/// Two cohorts' correlation matrices folded into one: `lower` fills the
/// cells below the diagonal, `upper` the cells above.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub variables: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub n_lower: usize,
    pub n_upper: usize,
    pub critical_lower: f64,
    pub critical_upper: f64,
}

pub type Cohort = BTreeMap<String, Vec<f64>>;

fn column<'a>(c: &'a Cohort, v: &str) -> Result<&'a [f64]> {
    c.get(v)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::MissingVariable(v.to_string()))
}

fn cohort_size(c: &Cohort, vars: &[String]) -> Result<usize> {
    let n = column(c, &vars[0])?.len();
    for v in vars {
        let len = column(c, v)?.len();
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    Ok(n)
}

pub fn correlation_report(
    lower: &Cohort,
    upper: &Cohort,
    variables: &[String],
    alpha: f64,
) -> Result<CorrelationReport> {
    if variables.is_empty() {
        return Err(Error::MissingVariable("<none requested>".into()));
    }
    let n_lower = cohort_size(lower, variables)?;
    let n_upper = cohort_size(upper, variables)?;
    let k = variables.len();
    let mut matrix = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in 0..i {
            matrix[i][j] = pearson_r(column(lower, &variables[i])?, column(lower, &variables[j])?)?;
            matrix[j][i] = pearson_r(column(upper, &variables[i])?, column(upper, &variables[j])?)?;
        }
    }
    Ok(CorrelationReport {
        variables: variables.to_vec(),
        matrix,
        n_lower,
        n_upper,
        critical_lower: critical_r(n_lower, alpha)?,
        critical_upper: critical_r(n_upper, alpha)?,
    })
}

impl CorrelationReport {
    pub fn is_significant(&self, i: usize, j: usize) -> bool {
        let crit = if i > j {
            self.critical_lower
        } else {
            self.critical_upper
        };
        i != j && self.matrix[i][j].abs() >= crit
    }

    pub fn to_csv(&self, meta: &ArtifactMeta) -> Result<Vec<u8>> {
        let mut head = format!(
            "# below diagonal: n={} critical_r={}\n# above diagonal: n={} critical_r={}\n",
            self.n_lower,
            fmt_f64(self.critical_lower),
            self.n_upper,
            fmt_f64(self.critical_upper)
        );
        let mut header = vec!["variable"];
        header.extend(self.variables.iter().map(String::as_str));
        let body = artifact::render_csv(
            meta,
            &header,
            self.variables.iter().enumerate().map(|(i, v)| {
                let mut row = vec![v.clone()];
                for j in 0..self.variables.len() {
                    let mut cell = fmt_f64(self.matrix[i][j]);
                    if self.is_significant(i, j) {
                        cell.push('*');
                    }
                    row.push(cell);
                }
                row
            }),
        )?;
        // keep the artifact header first, then the annotations
        let text = String::from_utf8(body).expect("csv is UTF-8");
        let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
        head = format!("{first}\n{head}{rest}");
        Ok(head.into_bytes())
    }
}

/// Internal consistency of an item set (rows are participants).
pub fn cronbach_alpha(items: ArrayView2<f64>) -> Result<f64> {
    let (n, k) = items.dim();
    if k < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: k });
    }
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let item_var: f64 = items
        .axis_iter(Axis(1))
        .map(|c| stats::variance(&c.to_vec()))
        .sum();
    let totals: Vec<f64> = items.axis_iter(Axis(0)).map(|r| r.sum()).collect();
    let total_var = stats::variance(&totals);
    if total_var <= 0.0 {
        return Err(Error::DegenerateVariance("total score".into()));
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var / total_var))
}

/// `MAE(TR) = a·TR^(−b) + c`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PowerLaw {
    pub fn eval(&self, rows: f64) -> f64 {
        self.a * rows.powf(-self.b) + self.c
    }
}

pub const TRAIN_CURVE_START: PowerLaw = PowerLaw {
    a: 0.5,
    b: -0.5,
    c: -1.0,
};
pub const TEST_CURVE_START: PowerLaw = PowerLaw {
    a: 0.5,
    b: 0.5,
    c: -1.0,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningCurveFit {
    pub law: PowerLaw,
    pub sse: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
    /// False when the data cannot separate `a` from `c` (flat curve).
    pub identifiable: bool,
}

const MAX_LM_ITERATIONS: usize = 500;

fn sse_of(law: &PowerLaw, pts: &[(f64, f64)]) -> f64 {
    pts.iter().map(|(x, y)| (y - law.eval(*x)).powi(2)).sum()
}

/// Least-squares power-law fit by Levenberg–Marquardt.
pub fn fit_power_law(points: &[(f64, f64)], start: PowerLaw) -> Result<LearningCurveFit> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    if points.iter().any(|(x, y)| *x <= 0.0 || !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateData(
            "learning-curve rows must be positive and values finite".into(),
        ));
    }
    let mut law = start;
    let mut sse = sse_of(&law, points);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_LM_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &(x, y) in points {
            let p = x.powf(-law.b);
            let j = Vector3::new(p, -law.a * x.ln() * p, 1.0);
            jtj += j * j.transpose();
            jtr += j * (y - (law.a * p + law.c));
        }
        let mut improved = false;
        let mut step_norm = f64::INFINITY;
        for _ in 0..60 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] += mu * jtj[(d, d)].max(1e-12);
            }
            let Some(delta) = damped.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = PowerLaw {
                a: law.a + delta[0],
                b: law.b + delta[1],
                c: law.c + delta[2],
            };
            let trial_sse = sse_of(&trial, points);
            if trial_sse.is_finite() && trial_sse <= sse {
                step_norm = delta.norm();
                law = trial;
                sse = trial_sse;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 2.0;
        }
        if !improved || step_norm < 1e-10 {
            converged = improved || sse <= 1e-24 * points.len() as f64 || step_norm < 1e-10;
            break;
        }
    }
    if !converged {
        log::warn!("power-law fit stopped after {iterations} iterations without converging");
    }
    let identifiable = law.a.abs() > 1e-9 && parameters_separable(&law, points);
    if !identifiable && law.a.abs() <= 1e-9 {
        // a flat curve: put the level into a + c with b = 0
        law.c += law.a;
        law.a = 0.0;
        law.b = 0.0;
    }
    Ok(LearningCurveFit {
        law,
        sse,
        n_points: points.len(),
        iterations,
        converged,
        identifiable,
    })
}

/// Parameter correlations from `(JᵀJ)⁻¹` at the solution; the fit is
/// separable when no pair is correlated beyond 0.99999.
fn parameters_separable(law: &PowerLaw, points: &[(f64, f64)]) -> bool {
    let mut jtj = Matrix3::<f64>::zeros();
    for &(x, _) in points {
        let p = x.powf(-law.b);
        let j = Vector3::new(p, -law.a * x.ln() * p, 1.0);
        jtj += j * j.transpose();
    }
    let Some(cov) = jtj.try_inverse() else {
        return false;
    };
    for i in 0..3 {
        if !(cov[(i, i)] > 0.0 && cov[(i, i)].is_finite()) {
            return false;
        }
        for j in 0..i {
            let r = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
            if !r.is_finite() || r.abs() > 0.99999 {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEstimate {
    pub crossing_rows: Option<f64>,
    pub bracket: (f64, f64),
}

/// First root of `train − test` on `[lo, hi]`, located by a log-spaced scan
/// and refined by bisection.
pub fn crossing_point(train: &PowerLaw, test: &PowerLaw, range: (f64, f64)) -> CrossingEstimate {
    let (lo, hi) = range;
    let diff = |x: f64| train.eval(x) - test.eval(x);
    let n = 4000;
    let at = |i: usize| lo * (hi / lo).powf(i as f64 / n as f64);
    let mut prev = (lo, diff(lo));
    if prev.1 == 0.0 {
        return CrossingEstimate {
            crossing_rows: Some(lo),
            bracket: (lo, lo),
        };
    }
    for i in 1..=n {
        let x = at(i);
        let d = diff(x);
        if d == 0.0 {
            return CrossingEstimate {
                crossing_rows: Some(x),
                bracket: (prev.0, x),
            };
        }
        if d.signum() != prev.1.signum() && d.is_finite() && prev.1.is_finite() {
            let (mut a, mut b) = (prev.0, x);
            let sa = prev.1.signum();
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if diff(m).signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-9 * (1.0 + m) {
                    break;
                }
            }
            return CrossingEstimate {
                crossing_rows: Some(0.5 * (a + b)),
                bracket: (prev.0, x),
            };
        }
        prev = (x, d);
    }
    CrossingEstimate {
        crossing_rows: None,
        bracket: range,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CurveSplit {
    Train,
    Validation,
    Test,
}

impl CurveSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveSplit::Train => "train",
            CurveSplit::Validation => "val",
            CurveSplit::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(CurveSplit::Train),
            "val" => Some(CurveSplit::Validation),
            "test" => Some(CurveSplit::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub rows: usize,
    pub seed: usize,
    pub split: CurveSplit,
    pub mae: f64,
}

/// Rows for one learning-curve experiment. Columns are in ranking order;
/// `prefixes` index into the training rows.
pub struct CurveData<'a> {
    pub x_train: ArrayView2<'a, f64>,
    pub y_train: &'a [f64],
    pub x_val: ArrayView2<'a, f64>,
    pub y_val: &'a [f64],
    pub x_test: ArrayView2<'a, f64>,
    pub y_test: &'a [f64],
    pub ranked_labels: &'a [String],
    pub prefixes: Vec<Vec<usize>>,
}

pub fn learning_curve_experiment(
    data: &CurveData<'_>,
    hyper: &HyperparamSet,
    n_models: usize,
    master_seed: u64,
    fit: &FitConfig,
) -> Result<Vec<CurvePoint>> {
    let k = hyper.n_labels;
    if k > data.x_train.ncols() {
        return Err(Error::KTooLarge {
            k,
            available: data.x_train.ncols(),
        });
    }
    let labels = &data.ranked_labels[..k];
    let xv = data.x_val.slice(s![.., ..k]);
    let xt = data.x_test.slice(s![.., ..k]);
    let jobs: Vec<(usize, usize)> = (0..data.prefixes.len())
        .flat_map(|p| (0..n_models).map(move |i| (p, i)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(p, i)| {
            let idx = &data.prefixes[p];
            let rows = idx.len();
            let x = data.x_train.select(Axis(0), idx);
            let x = x.slice(s![.., ..k]);
            let y: Vec<f64> = idx.iter().map(|&r| data.y_train[r]).collect();
            let seed = derive_seed(master_seed, &[tag("learncurve"), rows as u64, i as u64]);
            let model = train_boosted_mlp(x, &y, labels, &hyper.with_seed(seed), fit)?;
            let mut out = Vec::with_capacity(3);
            out.push(CurvePoint {
                rows,
                seed: i,
                split: CurveSplit::Train,
                mae: stats::mae(&y, &model.predict(x)?),
            });
            if !data.y_val.is_empty() {
                out.push(CurvePoint {
                    rows,
                    seed: i,
                    split: CurveSplit::Validation,
                    mae: stats::mae(data.y_val, &model.predict(xv)?),
                });
            }
            out.push(CurvePoint {
                rows,
                seed: i,
                split: CurveSplit::Test,
                mae: stats::mae(data.y_test, &model.predict(xt)?),
            });
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Mean MAE per training-row count for one split.
pub fn mean_curve(points: &[CurvePoint], split: CurveSplit) -> Vec<(f64, f64)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for p in points.iter().filter(|p| p.split == split) {
        let e = acc.entry(p.rows).or_default();
        e.0 += p.mae;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(r, (s, n))| (r as f64, s / n as f64))
        .collect()
}

pub fn points_to_csv(points: &[CurvePoint], meta: &ArtifactMeta) -> Result<Vec<u8>> {
    artifact::render_csv(
        meta,
        &["rows", "seed", "split", "mae"],
        points.iter().map(|p| {
            vec![
                p.rows.to_string(),
                p.seed.to_string(),
                p.split.as_str().to_string(),
                fmt_f64(p.mae),
            ]
        }),
    )
}

pub fn read_points_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let (header, rows) = artifact::read_csv(path)?;
    if header != ["rows", "seed", "split", "mae"] {
        return Err(Error::artifact(path, "unexpected learning-curve columns"));
    }
    rows.iter()
        .map(|r| {
            Ok(CurvePoint {
                rows: artifact::parse_field(path, &r[0], "rows")?,
                seed: artifact::parse_field(path, &r[1], "seed")?,
                split: CurveSplit::parse(&r[2])
                    .ok_or_else(|| Error::artifact(path, format!("unknown split '{}'", r[2])))?,
                mae: artifact::parse_field(path, &r[3], "mae")?,
            })
        })
        .collect()
}

/// Plain `x,y` series for plotting.
pub fn series_csv(meta: &ArtifactMeta, points: &[(f64, f64)]) -> Result<Vec<u8>> {
    artifact::render_csv(
        meta,
        &["x", "y"],
        points.iter().map(|(x, y)| vec![fmt_f64(*x), fmt_f64(*y)]),
    )
}

pub fn describe_fit(name: &str, f: &LearningCurveFit) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{name} a={} b={} c={} sse={} points={} iterations={} converged={} identifiable={}",
        fmt_f64(f.law.a),
        fmt_f64(f.law.b),
        fmt_f64(f.law.c),
        fmt_f64(f.sse),
        f.n_points,
        f.iterations,
        f.converged,
        f.identifiable
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::job_rng;
    use ndarray::{array, Array2};
    use rand_distr::{Distribution, Normal};

    #[test]
    fn alpha_hand_fixture() {
        // item sums of squares 5, 4.75, 2.75; totals 6, 8, 10, 14 with SS 35
        // α = 3/2 · (1 − 12.5/35) = 27/28
        let items = array![[1.0, 2.0, 3.0], [2.0, 3.0, 3.0], [3.0, 3.0, 4.0], [4.0, 5.0, 5.0]];
        let a = cronbach_alpha(items.view()).unwrap();
        assert!((a - 27.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_identical_items_and_independent_items() {
        let col = [1.0, 3.0, 2.0, 5.0, 4.0];
        let items = Array2::from_shape_fn((5, 2), |(i, _)| col[i]);
        assert!((cronbach_alpha(items.view()).unwrap() - 1.0).abs() < 1e-12);

        let mut rng = job_rng(3, &[]);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let x = Array2::from_shape_fn((4000, 10), |_| nd.sample(&mut rng));
        assert!(cronbach_alpha(x.view()).unwrap().abs() < 0.06);
        assert!(matches!(
            cronbach_alpha(Array2::<f64>::ones((4, 3)).view()),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn alpha_grows_with_a_duplicated_item() {
        let items = array![[1.0, 2.0, 2.0], [2.0, 2.0, 3.0], [3.0, 4.0, 3.0], [4.0, 3.0, 5.0], [5.0, 5.0, 4.0]];
        let before = cronbach_alpha(items.view()).unwrap();
        let mut dup = Array2::zeros((5, 4));
        dup.slice_mut(s![.., ..3]).assign(&items);
        dup.column_mut(3).assign(&items.column(0));
        assert!(cronbach_alpha(dup.view()).unwrap() > before);
    }

    #[test]
    fn correlation_layout() {
        let mut a = Cohort::new();
        let mut b = Cohort::new();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.11).cos()).collect();
        a.insert("x".into(), x.clone());
        a.insert("x2".into(), x.clone());
        a.insert("y".into(), y.clone());
        b.insert("x".into(), x.iter().map(|v| -v).collect());
        b.insert("x2".into(), x.clone());
        b.insert("y".into(), y);
        let vars = ["x".to_string(), "x2".to_string(), "y".to_string()];
        let r = correlation_report(&a, &b, &vars, 0.05).unwrap();
        assert!((r.matrix[1][0] - 1.0).abs() < 1e-12);
        assert!((r.matrix[0][1] + 1.0).abs() < 1e-12);
        assert_eq!(r.matrix[2][2], 1.0);
        assert!(matches!(
            correlation_report(&a, &b, &["z".to_string()], 0.05),
            Err(Error::MissingVariable(_))
        ));
    }

    #[test]
    fn power_law_recovery_noise_free() {
        let truth = PowerLaw { a: 2.0, b: 0.5, c: 0.3 };
        let pts: Vec<(f64, f64)> = [35.0, 46.0, 57.0, 69.0, 80.0, 92.0, 103.0, 115.0, 126.0, 143.0]
            .iter()
            .map(|&x| (x, truth.eval(x)))
            .collect();
        for start in [TRAIN_CURVE_START, TEST_CURVE_START] {
            let f = fit_power_law(&pts, start).unwrap();
            assert!(f.converged);
            assert!((f.law.a - 2.0).abs() < 1e-6, "{f:?}");
            assert!((f.law.b - 0.5).abs() < 1e-6);
            assert!((f.law.c - 0.3).abs() < 1e-6);
        }
    }

    #[test]
    fn power_law_flat_data_is_flagged() {
        let pts: Vec<(f64, f64)> = (1..=8).map(|i| (20.0 * i as f64, 0.7)).collect();
        let f = fit_power_law(&pts, TRAIN_CURVE_START).unwrap();
        assert!(!f.identifiable);
        for (x, y) in &pts {
            assert!((f.law.eval(*x) - y).abs() < 1e-6);
        }
        assert!((f.law.a + f.law.c - 0.7).abs() < 1e-6);
    }

    #[test]
    fn power_law_beats_constant() {
        let pts = [(10.0, 1.0), (20.0, 0.8), (40.0, 0.75), (80.0, 0.5), (160.0, 0.52)];
        let f = fit_power_law(&pts, TEST_CURVE_START).unwrap();
        let m = pts.iter().map(|p| p.1).sum::<f64>() / 5.0;
        let sse_c: f64 = pts.iter().map(|p| (p.1 - m).powi(2)).sum();
        assert!(f.sse <= sse_c);
    }

    #[test]
    fn crossing_matches_scan() {
        let train = PowerLaw { a: 0.1, b: -0.2, c: 0.0 };
        let test = PowerLaw { a: 2.0, b: 0.3, c: 0.0 };
        let est = crossing_point(&train, &test, (1.0, 10_000.0));
        let x = est.crossing_rows.unwrap();
        // scan oracle
        let mut best = (f64::INFINITY, 0.0);
        let mut t = 1.0;
        while t < 10_000.0 {
            let d = (train.eval(t) - test.eval(t)).abs();
            if d < best.0 {
                best = (d, t);
            }
            t += 0.01;
        }
        assert!((x - best.1).abs() < 0.5);
        let flat = PowerLaw { a: 0.0, b: 0.0, c: 1.0 };
        let flat2 = PowerLaw { a: 0.0, b: 0.0, c: 2.0 };
        assert_eq!(crossing_point(&flat, &flat2, (1.0, 100.0)).crossing_rows, None);
    }

    #[test]
    fn curve_points_round_trip() {
        let pts = vec![
            CurvePoint { rows: 35, seed: 0, split: CurveSplit::Train, mae: 0.25 },
            CurvePoint { rows: 35, seed: 0, split: CurveSplit::Test, mae: 0.1 + 0.2 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lc.csv");
        std::fs::write(&p, points_to_csv(&pts, &ArtifactMeta::new("learncurve")).unwrap()).unwrap();
        assert_eq!(read_points_csv(&p).unwrap(), pts);
        assert_eq!(mean_curve(&pts, CurveSplit::Test), vec![(35.0, 0.1 + 0.2)]);
    }
}
