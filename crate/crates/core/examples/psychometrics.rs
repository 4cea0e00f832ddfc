//! Correlation table with significance marks, and Cronbach's alpha.

use ictrait::analysis::{correlation_report, cronbach_alpha, Cohort};
use ictrait::artifact::ArtifactMeta;
use ictrait::rng::job_rng;
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

fn main() -> ictrait::Result<()> {
    let mut rng = job_rng(12, &[]);
    let nd = Normal::new(0.0, 1.0).unwrap();
    let sample = |n: usize, rng: &mut ictrait::rng::JobRng| -> Cohort {
        let mut c = Cohort::new();
        let latent: Vec<f64> = (0..n).map(|_| nd.sample(rng)).collect();
        c.insert("openness".into(), latent.iter().map(|l| l + 0.5 * nd.sample(rng)).collect());
        c.insert("predicted".into(), latent.iter().map(|l| l + 0.9 * nd.sample(rng)).collect());
        c.insert("agreeableness".into(), (0..n).map(|_| nd.sample(rng)).collect());
        c
    };
    let test = sample(35, &mut rng);
    let all = sample(214, &mut rng);
    let vars: Vec<String> = ["predicted", "openness", "agreeableness"].iter().map(|s| s.to_string()).collect();
    let report = correlation_report(&test, &all, &vars, 0.05)?;
    print!("{}", String::from_utf8_lossy(&report.to_csv(&ArtifactMeta::new("correlations"))?));

    let items: Array2<f64> = Array2::from_shape_fn((50, 6), |(i, _)| (i % 7) as f64 + nd.sample(&mut rng));
    println!("cronbach alpha of 6 noisy parallel items: {:.3}", cronbach_alpha(items.view())?);
    Ok(())
}
