//! Cluster-stratified splits, cross-validation folds and learning-curve
//! subsets.
//!
//! Stratification works in two steps. First every (cluster, sample) cell gets
//! an integer quota that is the floor or ceiling of its proportional share
//! while rows and columns still add up exactly. Then each cluster's members,
//! ordered by distance to their centroid, are dealt into the samples so that
//! every prefix of the ordering stays close to the quota ratios.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::artifact::{self, fmt_f64, ArtifactMeta};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

pub const DEFAULT_K: usize = 3;
pub const MAX_KMEANS_ITERATIONS: usize = 300;
/// Split sizes of the reference cohort of 214 participants.
pub const REFERENCE_SPLIT: (usize, usize, usize) = (143, 36, 35);
pub const LEARNING_CURVE_START: usize = 35;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub participant_id: String,
    pub cluster: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    pub assignments: Vec<ClusterAssignment>,
    pub centroids: Array2<f64>,
    /// Sum of squared distances after each assignment step.
    pub objective_history: Vec<f64>,
    pub converged: bool,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_rows(x: ArrayView2<f64>) -> usize {
    let mut rows: Vec<Vec<u64>> = x
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort();
    rows.dedup();
    rows.len()
}

/// Lloyd's k-means with k-means++ seeding on the rows of `features`.
///
/// Rows are processed in participant-id order, so the outcome does not
/// depend on the input row order.
pub fn kmeans_cluster(features: &FeatureMatrix, k: usize, seed: u64) -> Result<KMeansOutcome> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..features.n_rows()).collect();
    order.sort_by(|&a, &b| features.participants[a].cmp(&features.participants[b]));
    let x = features.values.select(ndarray::Axis(0), &order);
    let n = x.nrows();
    if n < k || distinct_rows(x.view()) < k {
        return Err(Error::DegenerateData(format!(
            "need at least {k} distinct rows for k-means, have {}",
            distinct_rows(x.view())
        )));
    }

    let mut rng = rng::job_rng(seed, &[rng::tag("kmeans")]);
    let mut centroids = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] <= 0.0 {
            pick = d2
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
        }
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centroids.row(c)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_KMEANS_ITERATIONS {
        let mut changed = false;
        let mut objective = 0.0;
        for (i, r) in x.rows().into_iter().enumerate() {
            let (best, d) = (0..k)
                .map(|c| (c, sq_dist(r, centroids.row(c))))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            objective += d;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        history.push(objective);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, x.ncols()));
        let mut counts = vec![0usize; k];
        for (i, r) in x.rows().into_iter().enumerate() {
            let mut s = sums.row_mut(labels[i]);
            s += &r;
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                let mean = sums.row(c).mapv(|v| v / counts[c] as f64);
                centroids.row_mut(c).assign(&mean);
            }
        }
    }

    let assignments = order
        .iter()
        .enumerate()
        .map(|(i, &orig)| ClusterAssignment {
            participant_id: features.participants[orig].clone(),
            cluster: labels[i],
            distance: sq_dist(x.row(i), centroids.row(labels[i])).sqrt(),
        })
        .collect();
    Ok(KMeansOutcome {
        assignments,
        centroids,
        objective_history: history,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sample {
    Train,
    Validation,
    Test,
}

impl Sample {
    pub fn as_str(self) -> &'static str {
        match self {
            Sample::Train => "train",
            Sample::Validation => "val",
            Sample::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Sample::Train),
            "val" => Some(Sample::Validation),
            "test" => Some(Sample::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl Split {
    /// Training and validation ids pooled, in that order.
    pub fn pooled(&self) -> Vec<String> {
        self.train.iter().chain(&self.validation).cloned().collect()
    }

    pub fn sample_of(&self, id: &str) -> Option<Sample> {
        if self.train.iter().any(|p| p == id) {
            Some(Sample::Train)
        } else if self.validation.iter().any(|p| p == id) {
            Some(Sample::Validation)
        } else if self.test.iter().any(|p| p == id) {
            Some(Sample::Test)
        } else {
            None
        }
    }
}

/// Split sizes for a cohort of `n`, proportional to the (143, 36, 35)
/// reference; validation and test are rounded, training takes the rest.
pub fn scaled_split_sizes(n: usize) -> (usize, usize, usize) {
    let (tr, va, te) = REFERENCE_SPLIT;
    let total = (tr + va + te) as f64;
    let val = ((va as f64) * n as f64 / total).round() as usize;
    let test = ((te as f64) * n as f64 / total).round() as usize;
    let val = val.min(n);
    let test = test.min(n - val);
    (n - val - test, val, test)
}

/// Integer quotas `q[c][s]` with row sums `rows[c]`, column sums `cols[s]`
/// and every cell equal to the floor or ceiling of `rows[c]·cols[s]/N`.
fn controlled_rounding(rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = rows.iter().sum();
    let mut q: Vec<Vec<usize>> = Vec::with_capacity(rows.len());
    let mut frac: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for &r in rows {
        let mut qr = Vec::with_capacity(cols.len());
        let mut fr = Vec::with_capacity(cols.len());
        for &c in cols {
            let exact = (r * c) as f64 / total.max(1) as f64;
            // integer floor avoids float rounding at exact quotas
            let fl = (r * c) / total.max(1);
            qr.push(fl);
            fr.push(exact - fl as f64);
        }
        q.push(qr);
        frac.push(fr);
    }
    let mut col_need: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(s, &c)| c - q.iter().map(|qr| qr[s]).sum::<usize>())
        .collect();
    // Ryser-style greedy: each row hands its surplus to the columns with
    // the largest residual demand.
    for (ci, &r) in rows.iter().enumerate() {
        let need = r - q[ci].iter().sum::<usize>();
        let mut idx: Vec<usize> = (0..cols.len()).collect();
        idx.sort_by(|&a, &b| {
            col_need[b]
                .cmp(&col_need[a])
                .then(frac[ci][b].total_cmp(&frac[ci][a]))
                .then(a.cmp(&b))
        });
        for &s in idx.iter().take(need) {
            q[ci][s] += 1;
            col_need[s] = col_need[s].saturating_sub(1);
        }
    }
    q
}

/// Deal `members` (already ordered) into samples with exact `quotas`.
fn deal(members: &[String], quotas: &[usize]) -> Vec<Vec<String>> {
    let n = members.len() as f64;
    let mut out = vec![Vec::new(); quotas.len()];
    for (i, m) in members.iter().enumerate() {
        let progress = (i + 1) as f64 / n;
        let pick = (0..quotas.len())
            .filter(|&s| out[s].len() < quotas[s])
            .max_by(|&a, &b| {
                let da = quotas[a] as f64 * progress - out[a].len() as f64;
                let db = quotas[b] as f64 * progress - out[b].len() as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("quotas cover all members");
        out[pick].push(m.clone());
    }
    out
}

fn ranks(values: &[(f64, &str)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].0.total_cmp(&values[b].0).then(values[a].1.cmp(values[b].1)));
    let mut r = vec![0; values.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank;
    }
    r
}

/// Members of each cluster in stratification order. With a target, the
/// order key is the sum of distance rank and target rank.
fn stratification_order(
    assignments: &[&ClusterAssignment],
    target: Option<&HashMap<String, f64>>,
) -> Result<BTreeMap<usize, Vec<String>>> {
    let mut by_cluster: BTreeMap<usize, Vec<&ClusterAssignment>> = BTreeMap::new();
    for a in assignments {
        by_cluster.entry(a.cluster).or_default().push(a);
    }
    let mut out = BTreeMap::new();
    for (c, mut members) in by_cluster {
        members.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.participant_id.cmp(&b.participant_id))
        });
        let ordered: Vec<String> = match target {
            None => members.iter().map(|a| a.participant_id.clone()).collect(),
            Some(t) => {
                let dist: Vec<(f64, &str)> = members
                    .iter()
                    .map(|a| (a.distance, a.participant_id.as_str()))
                    .collect();
                let tv: Vec<(f64, &str)> = members
                    .iter()
                    .map(|a| {
                        t.get(&a.participant_id)
                            .map(|&v| (v, a.participant_id.as_str()))
                            .ok_or_else(|| Error::MissingScore(a.participant_id.clone()))
                    })
                    .collect::<Result<_>>()?;
                let rd = ranks(&dist);
                let rt = ranks(&tv);
                let mut idx: Vec<usize> = (0..members.len()).collect();
                idx.sort_by_key(|&i| (rd[i] + rt[i], rd[i]));
                idx.iter().map(|&i| members[i].participant_id.clone()).collect()
            }
        };
        out.insert(c, ordered);
    }
    Ok(out)
}

fn stratified_partition(
    assignments: &[&ClusterAssignment],
    sizes: &[usize],
    target: Option<&HashMap<String, f64>>,
    seed: u64,
    purpose: &str,
) -> Result<Vec<Vec<String>>> {
    let requested: usize = sizes.iter().sum();
    if requested != assignments.len() {
        return Err(Error::SizeMismatch {
            requested,
            available: assignments.len(),
        });
    }
    let clusters = stratification_order(assignments, target)?;
    let rows: Vec<usize> = clusters.values().map(Vec::len).collect();
    let quotas = controlled_rounding(&rows, sizes);
    let mut rng = rng::job_rng(seed, &[rng::tag(purpose)]);
    let mut out = vec![Vec::new(); sizes.len()];
    for ((_, members), q) in clusters.iter().zip(&quotas) {
        let mut members = members.clone();
        let offset = rng.random_range(0..members.len());
        members.rotate_left(offset);
        for (s, part) in deal(&members, q).into_iter().enumerate() {
            out[s].extend(part);
        }
    }
    for part in &mut out {
        part.sort();
    }
    Ok(out)
}

/// Train/validation/test split stratified by cluster and centroid distance
/// (and optionally a target score).
pub fn stratified_split(
    assignments: &[ClusterAssignment],
    sizes: (usize, usize, usize),
    strat_target: Option<&HashMap<String, f64>>,
    seed: u64,
) -> Result<Split> {
    let refs: Vec<&ClusterAssignment> = assignments.iter().collect();
    let mut parts = stratified_partition(&refs, &[sizes.0, sizes.1, sizes.2], strat_target, seed, "split")?;
    let test = parts.pop().unwrap_or_default();
    let validation = parts.pop().unwrap_or_default();
    let train = parts.pop().unwrap_or_default();
    Ok(Split {
        train,
        validation,
        test,
    })
}

/// Fold index for each position in `ids`; fold sizes differ by at most one.
pub fn make_cv_folds(n_ids: usize, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    if n_ids < n_folds {
        return Err(Error::TooFewRows {
            needed: n_folds,
            got: n_ids,
        });
    }
    let mut perm: Vec<usize> = (0..n_ids).collect();
    let mut rng = rng::job_rng(seed, &[rng::tag("folds"), n_folds as u64]);
    perm.shuffle(&mut rng);
    let mut folds = vec![0; n_ids];
    for (pos, &i) in perm.iter().enumerate() {
        folds[i] = pos % n_folds;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSchedule {
    pub subsets: Vec<Vec<String>>,
}

impl SubsetSchedule {
    /// Training sets for the learning curve: the first `start` rows of the
    /// schedule, then each cumulative subset boundary beyond it.
    pub fn prefixes(&self, start: usize) -> Vec<Vec<String>> {
        let order: Vec<String> = self.subsets.iter().flatten().cloned().collect();
        let total = order.len();
        let mut sizes = vec![start.min(total)];
        let mut cum = 0;
        for s in &self.subsets {
            cum += s.len();
            if cum > start {
                sizes.push(cum);
            }
        }
        sizes.dedup();
        sizes.retain(|&s| s > 0);
        sizes.into_iter().map(|s| order[..s].to_vec()).collect()
    }
}

/// Split the training sample into `n_subsets` near-equal parts stratified by
/// cluster, distance and trait score.
pub fn sequential_training_subsets(
    split: &Split,
    assignments: &[ClusterAssignment],
    scores: &HashMap<String, f64>,
    n_subsets: usize,
    seed: u64,
) -> Result<SubsetSchedule> {
    if split.train.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let n_subsets = n_subsets.clamp(1, split.train.len());
    let train: std::collections::HashSet<&str> = split.train.iter().map(String::as_str).collect();
    let refs: Vec<&ClusterAssignment> = assignments
        .iter()
        .filter(|a| train.contains(a.participant_id.as_str()))
        .collect();
    let n = refs.len();
    let sizes: Vec<usize> = (0..n_subsets)
        .map(|i| n / n_subsets + usize::from(i < n % n_subsets))
        .collect();
    let subsets = stratified_partition(&refs, &sizes, Some(scores), seed, "subsets")?;
    Ok(SubsetSchedule { subsets })
}

pub fn split_to_csv(split: &Split, assignments: &[ClusterAssignment], meta: &ArtifactMeta) -> Result<Vec<u8>> {
    let rows = split_rows(split, assignments, None);
    artifact::render_csv(meta, &["participant_id", "sample", "cluster", "distance"], rows)
}

pub fn schedule_to_csv(
    split: &Split,
    schedule: &SubsetSchedule,
    assignments: &[ClusterAssignment],
    meta: &ArtifactMeta,
) -> Result<Vec<u8>> {
    let rows = split_rows(split, assignments, Some(schedule));
    artifact::render_csv(
        meta,
        &["participant_id", "sample", "cluster", "distance", "subset_index"],
        rows,
    )
}

fn split_rows(split: &Split, assignments: &[ClusterAssignment], schedule: Option<&SubsetSchedule>) -> Vec<Vec<String>> {
    let subset_of: HashMap<&str, usize> = schedule
        .map(|s| {
            s.subsets
                .iter()
                .enumerate()
                .flat_map(|(i, ids)| ids.iter().map(move |p| (p.as_str(), i)))
                .collect()
        })
        .unwrap_or_default();
    let mut rows: Vec<Vec<String>> = assignments
        .iter()
        .filter_map(|a| {
            let sample = split.sample_of(&a.participant_id)?;
            let mut r = vec![
                a.participant_id.clone(),
                sample.as_str().to_string(),
                a.cluster.to_string(),
                fmt_f64(a.distance),
            ];
            if schedule.is_some() {
                r.push(
                    subset_of
                        .get(a.participant_id.as_str())
                        .map(|i| i.to_string())
                        .unwrap_or_default(),
                );
            }
            Some(r)
        })
        .collect();
    rows.sort();
    rows
}

/// Inverse of [`split_to_csv`] / [`schedule_to_csv`].
pub fn read_split_csv(path: &Path) -> Result<(Split, Vec<ClusterAssignment>, Option<SubsetSchedule>)> {
    let (header, rows) = artifact::read_csv(path)?;
    let has_subsets = header.iter().any(|h| h == "subset_index");
    let mut split = Split {
        train: vec![],
        validation: vec![],
        test: vec![],
    };
    let mut assignments = Vec::new();
    let mut subsets: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for r in rows {
        if r.len() < 4 {
            return Err(Error::artifact(path, "split row needs 4 fields"));
        }
        let id = r[0].clone();
        match Sample::parse(&r[1]) {
            Some(Sample::Train) => split.train.push(id.clone()),
            Some(Sample::Validation) => split.validation.push(id.clone()),
            Some(Sample::Test) => split.test.push(id.clone()),
            None => return Err(Error::artifact(path, format!("unknown sample '{}'", r[1]))),
        }
        assignments.push(ClusterAssignment {
            participant_id: id.clone(),
            cluster: artifact::parse_field(path, &r[2], "cluster")?,
            distance: artifact::parse_field(path, &r[3], "distance")?,
        });
        if has_subsets && r.len() > 4 && !r[4].is_empty() {
            let idx: usize = artifact::parse_field(path, &r[4], "subset_index")?;
            subsets.entry(idx).or_default().push(id);
        }
    }
    let schedule = has_subsets.then(|| SubsetSchedule {
        subsets: subsets.into_values().collect(),
    });
    Ok((split, assignments, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Provenance;
    use rand_distr::{Distribution, Normal};

    fn matrix(points: &[Vec<f64>]) -> FeatureMatrix {
        let d = points[0].len();
        FeatureMatrix {
            participants: (0..points.len()).map(|i| format!("p{i:03}")).collect(),
            labels: (0..d).map(|j| format!("l{j}")).collect(),
            values: Array2::from_shape_fn((points.len(), d), |(i, j)| points[i][j]),
            provenance: Provenance::default(),
        }
    }

    fn blobs(per: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let centers = [[0.0, 0.0], [10.0, 10.0], [-10.0, 10.0]];
        let mut rng = rng::job_rng(seed, &[]);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (b, c) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
                truth.push(b);
            }
        }
        (matrix(&pts), truth)
    }

    fn assignments(cluster_sizes: &[usize]) -> Vec<ClusterAssignment> {
        let mut out = Vec::new();
        let mut i = 0;
        for (c, &n) in cluster_sizes.iter().enumerate() {
            for j in 0..n {
                out.push(ClusterAssignment {
                    participant_id: format!("p{i:03}"),
                    cluster: c,
                    distance: j as f64 * 0.1,
                });
                i += 1;
            }
        }
        out
    }

    #[test]
    fn kmeans_recovers_well_separated_blobs() {
        let (fm, truth) = blobs(20, 3);
        let out = kmeans_cluster(&fm, 3, 1).unwrap();
        assert!(out.converged);
        // same partition up to label permutation
        for i in 0..truth.len() {
            for j in 0..truth.len() {
                let same_truth = truth[i] == truth[j];
                let same_fit = out.assignments[i].cluster == out.assignments[j].cluster;
                assert_eq!(same_truth, same_fit);
            }
        }
        assert!(out.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn kmeans_single_cluster_distances_to_mean() {
        let (fm, _) = blobs(5, 4);
        let out = kmeans_cluster(&fm, 1, 1).unwrap();
        let mean = fm.values.mean_axis(ndarray::Axis(0)).unwrap();
        for (i, a) in out.assignments.iter().enumerate() {
            assert_eq!(a.cluster, 0);
            let d = sq_dist(fm.values.row(i), mean.view()).sqrt();
            assert!((a.distance - d).abs() < 1e-9);
        }
    }

    #[test]
    fn kmeans_rejects_too_few_rows() {
        let fm = matrix(&[vec![0.0], vec![1.0]]);
        assert!(matches!(kmeans_cluster(&fm, 3, 1), Err(Error::DegenerateData(_))));
        let fm = matrix(&[vec![0.0], vec![0.0], vec![0.0], vec![1.0]]);
        assert!(matches!(kmeans_cluster(&fm, 3, 1), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn reference_sizes_and_disjoint_cover() {
        let a = assignments(&[80, 70, 64]);
        let s = stratified_split(&a, REFERENCE_SPLIT, None, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (143, 36, 35));
        let mut all: Vec<&String> = s.train.iter().chain(&s.validation).chain(&s.test).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 214);
        assert_eq!(scaled_split_sizes(214), REFERENCE_SPLIT);
    }

    #[test]
    fn single_cluster_small_split() {
        let a = assignments(&[4]);
        let s = stratified_split(&a, (2, 1, 1), None, 9).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (2, 1, 1));
        assert!(matches!(
            stratified_split(&a, (2, 1, 2), None, 9),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn per_cluster_shares_within_one() {
        let a = assignments(&[10, 10, 10]);
        let s = stratified_split(&a, (20, 5, 5), None, 5).unwrap();
        let cluster: HashMap<&str, usize> = a.iter().map(|x| (x.participant_id.as_str(), x.cluster)).collect();
        for (part, size) in [(&s.train, 20.0), (&s.validation, 5.0), (&s.test, 5.0)] {
            for c in 0..3 {
                let got = part.iter().filter(|p| cluster[p.as_str()] == c).count() as f64;
                assert!((got - 10.0 * size / 30.0).abs() <= 1.0, "cluster {c}: {got}");
            }
        }
    }

    #[test]
    fn controlled_rounding_meets_margins() {
        let rows = [80, 70, 64];
        let cols = [143, 36, 35];
        let q = controlled_rounding(&rows, &cols);
        for (c, &r) in rows.iter().enumerate() {
            assert_eq!(q[c].iter().sum::<usize>(), r);
            for (s, &col) in cols.iter().enumerate() {
                let exact = (r * col) as f64 / 214.0;
                assert!((q[c][s] as f64 - exact).abs() <= 1.0);
            }
        }
        for (s, &col) in cols.iter().enumerate() {
            assert_eq!(q.iter().map(|r| r[s]).sum::<usize>(), col);
        }
    }

    #[test]
    fn fold_sizes() {
        let sizes = |n, k| {
            let f = make_cv_folds(n, k, 1).unwrap();
            let mut s = vec![0; k];
            for x in f {
                s[x] += 1;
            }
            s
        };
        let mut s5 = sizes(179, 5);
        s5.sort();
        assert_eq!(s5, vec![35, 36, 36, 36, 36]);
        assert!(sizes(179, 10).iter().all(|&x| x == 17 || x == 18));
        assert!(sizes(10, 10).iter().all(|&x| x == 1));
        assert!(matches!(make_cv_folds(3, 5, 1), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn subsets_balanced_and_prefixes_grow() {
        let a = assignments(&[60, 50, 33]);
        let split = Split {
            train: a.iter().map(|x| x.participant_id.clone()).collect(),
            validation: vec![],
            test: vec![],
        };
        let scores: HashMap<String, f64> = a
            .iter()
            .enumerate()
            .map(|(i, x)| (x.participant_id.clone(), (i * 7 % 13) as f64))
            .collect();
        let sched = sequential_training_subsets(&split, &a, &scores, 10, 1).unwrap();
        let mut sizes: Vec<usize> = sched.subsets.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![14, 14, 14, 14, 14, 14, 14, 15, 15, 15]);
        let prefixes = sched.prefixes(LEARNING_CURVE_START);
        assert_eq!(prefixes[0].len(), 35);
        assert_eq!(prefixes.last().unwrap().len(), 143);
        assert!(prefixes.windows(2).all(|w| w[0].len() < w[1].len()));
    }

    #[test]
    fn split_csv_round_trip() {
        let a = assignments(&[5, 5]);
        let s = stratified_split(&a, (6, 2, 2), None, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("split.csv");
        std::fs::write(&p, split_to_csv(&s, &a, &ArtifactMeta::new("split")).unwrap()).unwrap();
        let (s2, a2, sched) = read_split_csv(&p).unwrap();
        assert_eq!(s2, s);
        assert_eq!(a2.len(), a.len());
        assert!(sched.is_none());
    }
}
