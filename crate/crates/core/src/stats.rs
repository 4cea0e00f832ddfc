//! Small statistics toolkit shared by the modelling and analysis modules.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> f64 {
    y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64
}

pub fn sse(y: &[f64], y_hat: &[f64]) -> f64 {
    y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateVariance("first argument".into()));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateVariance("second argument".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R2Variant {
    /// `1 - SSE/SST`.
    Fit,
    /// Squared Pearson correlation of observed and predicted values.
    Pearson,
}

pub fn r_squared(y: &[f64], y_hat: &[f64], variant: R2Variant) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: y_hat.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: y.len(),
        });
    }
    let m = mean(y);
    let sst: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    if sst == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    match variant {
        R2Variant::Fit => Ok(1.0 - sse(y, y_hat) / sst),
        R2Variant::Pearson => {
            let mh = mean(y_hat);
            if y_hat.iter().all(|v| *v == mh) {
                return Err(Error::DegenerateTarget);
            }
            let mut sxy = 0.0;
            let mut shh = 0.0;
            for (a, b) in y.iter().zip(y_hat) {
                sxy += (a - m) * (b - mh);
                shh += (b - mh) * (b - mh);
            }
            if shh == 0.0 {
                return Err(Error::DegenerateTarget);
            }
            let r = sxy / (sst.sqrt() * shh.sqrt());
            Ok((r * r).min(1.0))
        }
    }
}

/// Two-tailed critical correlation for `n` pairs at level `alpha`:
/// `r* = t*/sqrt(t*² + n − 2)` with `t*` from Student's t on `n − 2` df.
pub fn critical_r(n: usize, alpha: f64) -> Result<f64> {
    if n < 4 {
        return Err(Error::TooFewRows { needed: 4, got: n });
    }
    let df = (n - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(format!("t distribution: {e}")))?
        .inverse_cdf(1.0 - alpha / 2.0);
    Ok(t / (t * t + df).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            pearson_r(&x, &[1.0; 4]),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn pearson_hand_fixture() {
        // x = 1..5, y = (2, 1, 4, 3, 5): mean 3 and 3,
        // Sxy = 8, Sxx = Syy = 10, r = 0.8
        let r = pearson_r(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn r_squared_variants() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y, R2Variant::Fit).unwrap(), 1.0);
        assert!((r_squared(&y, &y, R2Variant::Pearson).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r_squared(&y, &[2.0; 3], R2Variant::Fit).unwrap(), 0.0);
        assert!(matches!(
            r_squared(&y, &[2.0; 3], R2Variant::Pearson),
            Err(Error::DegenerateTarget)
        ));
        // anti-correlated: y_hat = (3, 2, 1); SSE = 8, SST = 2, fit = -3
        let anti = [3.0, 2.0, 1.0];
        assert!((r_squared(&y, &anti, R2Variant::Pearson).unwrap() - 1.0).abs() < 1e-12);
        assert!((r_squared(&y, &anti, R2Variant::Fit).unwrap() + 3.0).abs() < 1e-12);
        assert!(matches!(
            r_squared(&[1.0, 1.0], &[1.0, 2.0], R2Variant::Fit),
            Err(Error::DegenerateTarget)
        ));
    }

    #[test]
    fn critical_r_reference_values() {
        let r214 = critical_r(214, 0.05).unwrap();
        let r35 = critical_r(35, 0.05).unwrap();
        assert!((r214 - 0.134).abs() < 0.001, "{r214}");
        assert!((r35 - 0.334).abs() < 0.001, "{r35}");
        let mut prev = 1.0;
        for n in 4..300 {
            let r = critical_r(n, 0.05).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }
}
