//! Cubic smoothing spline in Reinsch form with a GCV-chosen penalty.
//!
//! Minimizes `Σ w_i (y_i − g(x_i))² + λ ∫ g''(x)² dx` over natural cubic
//! splines with knots at the distinct `x_i`. With `Q` and `R` the usual
//! banded matrices, the fitted knot values are `g = (W + λ Q R⁻¹ Qᵀ)⁻¹ W y`
//! and the second derivatives at the knots are `γ = R⁻¹ Qᵀ g`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Choose λ by generalized cross-validation.
    Gcv,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSpline {
    pub knots: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Second derivative at each knot; zero at both ends.
    pub second_derivatives: Vec<f64>,
    pub lambda: f64,
}

struct Design {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

fn design(x: &[f64]) -> Design {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m = n - 2;
    let mut q = DMatrix::zeros(n, m);
    let mut r = DMatrix::zeros(m, m);
    for c in 0..m {
        let k = c + 1;
        q[(k - 1, c)] = 1.0 / h[k - 1];
        q[(k, c)] = -1.0 / h[k - 1] - 1.0 / h[k];
        q[(k + 1, c)] = 1.0 / h[k];
        r[(c, c)] = (h[k - 1] + h[k]) / 3.0;
        if c + 1 < m {
            r[(c, c + 1)] = h[k] / 6.0;
            r[(c + 1, c)] = h[k] / 6.0;
        }
    }
    Design { q, r }
}

/// Penalty matrix `K = Q R⁻¹ Qᵀ`.
fn penalty(d: &Design) -> DMatrix<f64> {
    let rinv_qt = d
        .r
        .clone()
        .cholesky()
        .expect("R is positive definite for increasing knots")
        .solve(&d.q.transpose());
    &d.q * rinv_qt
}

struct Solved {
    g: DVector<f64>,
    trace: f64,
}

fn solve(k: &DMatrix<f64>, w: &[f64], y: &[f64], lambda: f64) -> Solved {
    let n = y.len();
    let mut a = k * lambda;
    for i in 0..n {
        a[(i, i)] += w[i];
    }
    let wy = DVector::from_iterator(n, (0..n).map(|i| w[i] * y[i]));
    let chol = a.cholesky().expect("W + λK is positive definite");
    let g = chol.solve(&wy);
    // smoother S = (W + λK)⁻¹ W
    let s = chol.solve(&DMatrix::from_diagonal(&DVector::from_column_slice(w)));
    Solved {
        g,
        trace: s.trace(),
    }
}

/// Average duplicate abscissae into weighted points, sorted by `x`.
fn collapse(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::<f64>::new());
    for (px, py) in pts {
        if xs.last() == Some(&px) {
            let i = xs.len() - 1;
            ys[i] += py;
            ws[i] += 1.0;
        } else {
            xs.push(px);
            ys.push(py);
            ws.push(1.0);
        }
    }
    for (y, w) in ys.iter_mut().zip(&ws) {
        *y /= w;
    }
    (xs, ys, ws)
}

impl SmoothingSpline {
    pub fn fit(x: &[f64], y: &[f64], smoothing: Smoothing) -> Result<SmoothingSpline> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        let (xs, ys, ws) = collapse(x, y);
        if xs.len() < 4 {
            return Err(Error::TooFewPoints {
                needed: 4,
                got: xs.len(),
            });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData("non-finite spline input".into()));
        }
        let d = design(&xs);
        let k = penalty(&d);
        let n = xs.len() as f64;
        let lambda = match smoothing {
            Smoothing::Fixed(l) if l >= 0.0 => l,
            Smoothing::Fixed(l) => return Err(Error::Config(format!("negative smoothing {l}"))),
            Smoothing::Gcv => {
                let span = xs[xs.len() - 1] - xs[0];
                let scale = (span / (n - 1.0)).powi(3);
                let mut best = (f64::INFINITY, 0.0);
                for step in 0..=80 {
                    let l = scale * 10f64.powf(-8.0 + 0.2 * step as f64);
                    let s = solve(&k, &ws, &ys, l);
                    let rss: f64 = (0..ys.len())
                        .map(|i| ws[i] * (ys[i] - s.g[i]).powi(2))
                        .sum();
                    let denom = (1.0 - s.trace / n).powi(2);
                    let gcv = if denom > 0.0 { rss / n / denom } else { f64::INFINITY };
                    if gcv < best.0 * (1.0 - 1e-9) {
                        best = (gcv, l);
                    }
                }
                best.1
            }
        };
        let g = if lambda == 0.0 {
            DVector::from_column_slice(&ys)
        } else {
            solve(&k, &ws, &ys, lambda).g
        };
        let rhs = d.q.transpose() * &g;
        let inner = d.r.cholesky().expect("R is positive definite").solve(&rhs);
        let mut gamma = vec![0.0; xs.len()];
        gamma[1..xs.len() - 1].copy_from_slice(inner.as_slice());
        Ok(SmoothingSpline {
            knots: xs,
            fitted: g.as_slice().to_vec(),
            second_derivatives: gamma,
            lambda,
        })
    }

    /// Cubic coefficients `(a, b, c, d)` of segment `i` in `t = x − x_i`.
    fn segment(&self, i: usize) -> (f64, f64, f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        let (g0, g1) = (self.fitted[i], self.fitted[i + 1]);
        let (c0, c1) = (self.second_derivatives[i], self.second_derivatives[i + 1]);
        (
            g0,
            (g1 - g0) / h - h * (2.0 * c0 + c1) / 6.0,
            c0 / 2.0,
            (c1 - c0) / (6.0 * h),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let (first, last) = (self.knots[0], self.knots[n - 1]);
        if x < first {
            let (a, b, _, _) = self.segment(0);
            return a + b * (x - first);
        }
        if x > last {
            let h = last - self.knots[n - 2];
            let (_, b, c, d) = self.segment(n - 2);
            let slope = b + 2.0 * c * h + 3.0 * d * h * h;
            return self.fitted[n - 1] + slope * (x - last);
        }
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => return self.fitted[i],
            Err(i) => i - 1,
        };
        let (a, b, c, d) = self.segment(i);
        let t = x - self.knots[i];
        a + t * (b + t * (c + t * d))
    }

    /// Location of the maximum over the knot range. Flat stretches resolve
    /// to the leftmost point.
    pub fn argmax(&self) -> f64 {
        let mut candidates = self.knots.clone();
        for i in 0..self.knots.len() - 1 {
            let h = self.knots[i + 1] - self.knots[i];
            let (_, b, c, d) = self.segment(i);
            // roots of b + 2ct + 3dt²
            let mut roots = Vec::new();
            if d.abs() > 1e-300 {
                let disc = 4.0 * c * c - 12.0 * d * b;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    roots.push((-2.0 * c + s) / (6.0 * d));
                    roots.push((-2.0 * c - s) / (6.0 * d));
                }
            } else if c.abs() > 1e-300 {
                roots.push(-b / (2.0 * c));
            }
            for t in roots {
                if t > 0.0 && t < h {
                    candidates.push(self.knots[i] + t);
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        let scale = self.fitted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-10 * (1.0 + scale);
        let mut best = (candidates[0], self.eval(candidates[0]));
        for &x in &candidates[1..] {
            let v = self.eval(x);
            if v > best.1 + tol {
                best = (x, v);
            }
        }
        best.0
    }
}
