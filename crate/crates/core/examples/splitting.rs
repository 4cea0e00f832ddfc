//! Cluster participants, then draw a stratified split and training subsets.

use std::collections::HashMap;

use ictrait::features::{FeatureMatrix, Provenance};
use ictrait::rng::job_rng;
use ictrait::splitting::{self, kmeans_cluster, scaled_split_sizes, sequential_training_subsets, stratified_split};
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

fn main() -> ictrait::Result<()> {
    let n = 60;
    let mut rng = job_rng(3, &[]);
    let nd = Normal::new(0.0, 1.0).unwrap();
    let participants: Vec<String> = (0..n).map(|i| format!("p{i:03}")).collect();
    // three loose blobs in four dimensions
    let values: Array2<f64> = Array2::from_shape_fn((n, 4), |(i, j)| 3.0 * ((i % 3) as f64) * ((j % 2) as f64) + nd.sample(&mut rng));
    let fm = FeatureMatrix {
        participants: participants.clone(),
        labels: (0..4).map(|j| format!("f{j}")).collect(),
        values,
        provenance: Provenance::default(),
    };
    let scores: HashMap<String, f64> = participants.iter().map(|p| (p.clone(), 3.0 + 0.5 * nd.sample(&mut rng))).collect();

    let km = kmeans_cluster(&fm, 3, 1)?;
    println!("k-means converged={} objective {:?}", km.converged, km.objective_history.last());
    let sizes = scaled_split_sizes(n);
    let split = stratified_split(&km.assignments, sizes, Some(&scores), 2)?;
    println!("split sizes train={} validation={} test={}", split.train.len(), split.validation.len(), split.test.len());
    for c in 0..3 {
        let count = |ids: &[String]| {
            ids.iter()
                .filter(|id| km.assignments.iter().any(|a| &a.participant_id == *id && a.cluster == c))
                .count()
        };
        println!("  cluster {c}: {} / {} / {}", count(&split.train), count(&split.validation), count(&split.test));
    }
    let schedule = sequential_training_subsets(&split, &km.assignments, &scores, 5, 4)?;
    let prefixes = schedule.prefixes(10);
    println!("learning-curve training sizes: {:?}", prefixes.iter().map(Vec::len).collect::<Vec<_>>());
    let meta = ictrait::artifact::ArtifactMeta::new("split");
    let csv = splitting::schedule_to_csv(&split, &schedule, &km.assignments, &meta)?;
    println!("{}", String::from_utf8_lossy(&csv).lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
