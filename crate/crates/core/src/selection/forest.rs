//! Regression forest used only to rank features by how often trees use them.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{job_rng, tag};

pub const DEFAULT_N_TREES: usize = 1000;
pub const DEFAULT_MIN_LEAF: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    /// `(label, score)` in rank order.
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: DEFAULT_N_TREES,
            min_leaf: DEFAULT_MIN_LEAF,
            mtry: None,
        }
    }
}

/// Grow one tree on `rows` and mark every feature it splits on.
fn grow(
    x: ArrayView2<f64>,
    y: &[f64],
    rows: Vec<usize>,
    mtry: usize,
    min_leaf: usize,
    rng: &mut impl Rng,
    used: &mut [bool],
) {
    let p = x.ncols();
    let mut stack = vec![rows];
    let mut order: Vec<usize> = Vec::new();
    while let Some(node) = stack.pop() {
        let n = node.len();
        if n < 2 * min_leaf {
            continue;
        }
        let total: f64 = node.iter().map(|&i| y[i]).sum();
        let mut best: Option<(f64, usize, f64)> = None;
        for j in sample(rng, p, mtry.min(p)).into_iter() {
            order.clear();
            order.extend_from_slice(&node);
            order.sort_by(|&a, &b| x[[a, j]].total_cmp(&x[[b, j]]));
            let mut left = 0.0;
            for k in 0..n - 1 {
                left += y[order[k]];
                let nl = k + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let (a, b) = (x[[order[k], j]], x[[order[k + 1], j]]);
                if a == b {
                    continue;
                }
                // maximizing this is minimizing the children's SSE
                let right = total - left;
                let gain = left * left / nl as f64 + right * right / (n - nl) as f64;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, j, 0.5 * (a + b)));
                }
            }
        }
        let Some((gain, j, threshold)) = best else {
            continue;
        };
        if gain <= total * total / n as f64 * (1.0 + 1e-12) {
            continue;
        }
        used[j] = true;
        let (l, r): (Vec<usize>, Vec<usize>) = node.into_iter().partition(|&i| x[[i, j]] <= threshold);
        stack.push(r);
        stack.push(l);
    }
}

/// Rank features by the fraction of trees that split on them at least once.
/// Ties keep column order.
pub fn rank_features_random_forest(
    x: ArrayView2<f64>,
    y: &[f64],
    labels: &[String],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<FeatureRanking> {
    if cfg.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    if x.ncols() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: x.ncols(),
        });
    }
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n < 2 || y.iter().all(|v| *v == y[0]) {
        return Err(Error::DegenerateTarget);
    }
    let p = x.ncols();
    let mtry = cfg
        .mtry
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let counts = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = job_rng(seed, &[tag("forest-tree"), t as u64]);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut used = vec![false; p];
            grow(x, y, rows, mtry, cfg.min_leaf, &mut rng, &mut used);
            used
        })
        .fold(
            || vec![0usize; p],
            |mut acc, used| {
                for (a, u) in acc.iter_mut().zip(used) {
                    *a += usize::from(u);
                }
                acc
            },
        )
        .reduce(
            || vec![0usize; p],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .enumerate()
        .map(|(j, c)| (j, c as f64 / cfg.n_trees as f64))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(FeatureRanking {
        entries: entries
            .into_iter()
            .map(|(j, s)| (labels[j].clone(), s))
            .collect(),
    })
}

pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<String>> {
    if k > ranking.len() {
        return Err(Error::KTooLarge {
            k,
            available: ranking.len(),
        });
    }
    Ok(ranking.entries[..k].iter().map(|(l, _)| l.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand_distr::{Distribution, Normal};

    fn planted(n: usize, p: usize, seed: u64) -> (Array2<f64>, Vec<f64>, Vec<String>) {
        let mut rng = job_rng(seed, &[]);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let x = Array2::from_shape_fn((n, p), |_| nd.sample(&mut rng));
        let y = (0..n).map(|i| 3.0 * x[[i, 4]] + 0.3 * nd.sample(&mut rng)).collect();
        (x, y, (0..p).map(|j| format!("w{j}")).collect())
    }

    #[test]
    fn planted_feature_ranks_first() {
        let (x, y, labels) = planted(150, 20, 3);
        let cfg = ForestConfig {
            n_trees: 200,
            ..Default::default()
        };
        let r = rank_features_random_forest(x.view(), &y, &labels, &cfg, 1).unwrap();
        assert_eq!(r.entries[0].0, "w4");
        for w in r.entries.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
        assert!(r.entries.iter().all(|(_, s)| (0.0..=1.0).contains(s)));
        assert_eq!(r, rank_features_random_forest(x.view(), &y, &labels, &cfg, 1).unwrap());
    }

    #[test]
    fn single_tree_scores_are_binary() {
        let (x, y, labels) = planted(60, 8, 5);
        let cfg = ForestConfig {
            n_trees: 1,
            ..Default::default()
        };
        let r = rank_features_random_forest(x.view(), &y, &labels, &cfg, 2).unwrap();
        assert!(r.entries.iter().all(|(_, s)| *s == 0.0 || *s == 1.0));
    }

    #[test]
    fn constant_target_is_rejected() {
        let (x, _, labels) = planted(20, 6, 1);
        assert!(matches!(
            rank_features_random_forest(x.view(), &[1.0; 20], &labels, &ForestConfig::default(), 1),
            Err(Error::DegenerateTarget)
        ));
    }

    #[test]
    fn top_k_prefixes() {
        let ranking = FeatureRanking {
            entries: (0..398).map(|j| (format!("l{j}"), 1.0 - j as f64 / 398.0)).collect(),
        };
        let k30 = select_top_k(&ranking, 30).unwrap();
        let k40 = select_top_k(&ranking, 40).unwrap();
        assert_eq!(k30[..], k40[..30]);
        assert_eq!(select_top_k(&ranking, 100).unwrap().len(), 100);
        assert_eq!(select_top_k(&ranking, 398).unwrap(), ranking.labels());
        assert!(matches!(
            select_top_k(&ranking, 399),
            Err(Error::KTooLarge { k: 399, available: 398 })
        ));
    }
}
