//! Fit train and test learning curves and locate their crossing.

use ictrait::analysis::{crossing_point, describe_fit, fit_power_law, PowerLaw, TEST_CURVE_START, TRAIN_CURVE_START};

fn main() -> ictrait::Result<()> {
    let rows = [35.0, 46.0, 57.0, 68.0, 79.0, 90.0, 101.0, 112.0, 123.0, 143.0];
    let test_law = PowerLaw { a: 3.0, b: 0.45, c: 0.25 };
    let train_law = PowerLaw { a: 0.02, b: -0.5, c: 0.2 };
    let wiggle = [0.004, -0.003, 0.002, -0.004, 0.001, 0.003, -0.002, 0.0, 0.002, -0.001];
    let test: Vec<(f64, f64)> = rows.iter().zip(wiggle).map(|(&r, w)| (r, test_law.eval(r) + w)).collect();
    let train: Vec<(f64, f64)> = rows.iter().zip(wiggle).map(|(&r, w)| (r, train_law.eval(r) - w)).collect();

    let ft = fit_power_law(&train, TRAIN_CURVE_START)?;
    let fe = fit_power_law(&test, TEST_CURVE_START)?;
    println!("{}", describe_fit("train", &ft));
    println!("{}", describe_fit("test", &fe));
    let c = crossing_point(&ft.law, &fe.law, (35.0, 2000.0));
    match c.crossing_rows {
        Some(r) => println!("curves cross near {r:.0} training rows"),
        None => println!("no crossing below 2000 rows"),
    }
    Ok(())
}
