//! Cross-validated grid search and spline-based architecture selection.

use ictrait::regressor::FitConfig;
use ictrait::rng::job_rng;
use ictrait::selection::{grid_search, select_hyperparameters, GridSpec, Smoothing};
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

fn main() -> ictrait::Result<()> {
    let n = 80;
    let mut rng = job_rng(4, &[]);
    let nd = Normal::new(0.0, 1.0).unwrap();
    let x: Array2<f64> = Array2::from_shape_fn((n, 6), |_| nd.sample(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| x[[i, 0]] - 0.5 * x[[i, 1]] + 0.3 * (2.0 * x[[i, 2]]).sin() + 0.6 * nd.sample(&mut rng))
        .collect();
    let ranked: Vec<String> = (0..6).map(|j| format!("f{j}")).collect();

    let spec = GridSpec {
        label_counts: vec![2, 4, 6],
        hidden_units: vec![1, 2, 3, 5, 10],
        boosts: vec![0, 1, 2],
        n_folds: 5,
        n_seeds: 2,
    };
    println!("{} cells, {} model fits", spec.cells().len(), spec.model_count());
    let grid = grid_search(x.view(), &y, &ranked, &spec, 7, &FitConfig::default())?;
    let outcome = select_hyperparameters(&grid, Smoothing::Gcv)?;
    for s in &outcome.splines {
        println!(
            "labels={} spline argmax at complexity {:.1}, lambda {:.2e}, candidate complexity {}",
            s.n_labels, s.argmax, s.spline.lambda, s.candidate.complexity
        );
    }
    for (name, r) in [("best", &outcome.best), ("second best", &outcome.second_best)] {
        println!(
            "{name}: labels={} hidden={} boost={} train R2={:.3} val R2={:.3} MFPR2={:.3}",
            r.n_labels, r.hidden_units, r.boost, r.r2_train, r.r2_val, r.mfpr2
        );
    }
    Ok(())
}
