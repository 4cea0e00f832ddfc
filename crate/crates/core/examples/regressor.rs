//! Boosted TanH regressor and an ensemble on a nonlinear toy problem.

use ictrait::regressor::{self, train_boosted_mlp_with_report, train_ensemble, FitConfig, HyperparamSet};
use ictrait::rng::job_rng;
use ictrait::stats::{r_squared, R2Variant};
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

fn main() -> ictrait::Result<()> {
    let n = 200;
    let mut rng = job_rng(9, &[]);
    let nd = Normal::new(0.0, 1.0).unwrap();
    let x: Array2<f64> = Array2::from_shape_fn((n, 3), |_| nd.sample(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| (1.5 * x[[i, 0]]).tanh() + 0.5 * x[[i, 1]] * x[[i, 1]] + 0.1 * nd.sample(&mut rng))
        .collect();
    let labels: Vec<String> = ["signal", "curve", "noise"].iter().map(|s| s.to_string()).collect();
    let fit = FitConfig::default();

    for boost in [0, 2, 4] {
        let hyper = HyperparamSet::new(3, 5, boost, 1);
        let (model, report) = train_boosted_mlp_with_report(x.view(), &y, &labels, &hyper, &fit)?;
        let r2 = r_squared(&y, &model.predict(x.view())?, R2Variant::Fit)?;
        println!(
            "hidden=5 boost={boost} complexity={:>3} fit R2={r2:.3} stage SSE {:?}",
            hyper.complexity()?,
            report.stage_sse.iter().map(|s| format!("{s:.1}")).collect::<Vec<_>>()
        );
    }

    let hyper = HyperparamSet::new(3, 5, 1, 0);
    let ens = train_ensemble(x.view(), &y, &labels, &hyper, 8, 42, &fit)?;
    let r2 = r_squared(&y, &ens.predict(x.view())?, R2Variant::Fit)?;
    println!("ensemble of {} members: fit R2={r2:.3}", ens.size());
    for (label, drop) in regressor::variable_importance(&ens.members[0], x.view(), &y)? {
        println!("  importance {label:<7} {drop:.3}");
    }
    let grid: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.5).collect();
    let profile = regressor::activation_profile(&ens.members[0], 0, &grid)?;
    println!("profile of 'signal': {:?}", profile.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    Ok(())
}
