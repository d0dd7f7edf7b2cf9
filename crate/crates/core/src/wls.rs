//! Weighted least squares with sandwich covariance.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue floor of the equilibrated normal matrix below which the
/// design is declared singular.
const RCOND_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct WlsFit {
    pub coef: DVector<f64>,
    /// Sandwich covariance `A^-1 M A^-1`.
    pub cov: DMatrix<f64>,
}

/// Minimizes `sum_i k_i (y_i - x_i' b)^2`.
///
/// `design` is row-major with `k` columns. When `clusters` is given the meat
/// sums residual scores within each label before taking outer products;
/// otherwise it is the HC0 meat `sum_i k_i^2 e_i^2 x_i x_i'`. Returns `None`
/// for a (numerically) singular weighted design.
pub(crate) fn wls(
    design: &[f64],
    k: usize,
    y: &[f64],
    weights: &[f64],
    clusters: Option<&[&str]>,
) -> Option<WlsFit> {
    let n = y.len();
    debug_assert_eq!(design.len(), n * k);
    debug_assert_eq!(weights.len(), n);

    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for i in 0..n {
        let x = &design[i * k..(i + 1) * k];
        let wt = weights[i];
        for r in 0..k {
            rhs[r] += wt * x[r] * y[i];
            for c in 0..=r {
                a[(r, c)] += wt * x[r] * x[c];
            }
        }
    }
    for r in 0..k {
        for c in (r + 1)..k {
            a[(r, c)] = a[(c, r)];
        }
    }

    if is_singular(&a) {
        return None;
    }
    let chol = a.clone().cholesky()?;
    let coef = chol.solve(&rhs);
    let a_inv = chol.inverse();

    let mut meat = DMatrix::<f64>::zeros(k, k);
    match clusters {
        None => {
            for i in 0..n {
                let x = &design[i * k..(i + 1) * k];
                let e = y[i] - dot(x, coef.as_slice());
                let s = weights[i] * e;
                for r in 0..k {
                    for c in 0..k {
                        meat[(r, c)] += s * s * x[r] * x[c];
                    }
                }
            }
        }
        Some(labels) => {
            let mut scores: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for i in 0..n {
                let x = &design[i * k..(i + 1) * k];
                let e = y[i] - dot(x, coef.as_slice());
                let s = weights[i] * e;
                let acc = scores.entry(labels[i]).or_insert_with(|| vec![0.0; k]);
                for r in 0..k {
                    acc[r] += s * x[r];
                }
            }
            for g in scores.values() {
                for r in 0..k {
                    for c in 0..k {
                        meat[(r, c)] += g[r] * g[c];
                    }
                }
            }
        }
    }

    let cov = &a_inv * meat * &a_inv;
    Some(WlsFit { coef, cov })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn is_singular(a: &DMatrix<f64>) -> bool {
    let k = a.nrows();
    let mut scaled = a.clone();
    for r in 0..k {
        if !(a[(r, r)] > 0.0) || !a[(r, r)].is_finite() {
            return true;
        }
    }
    for r in 0..k {
        for c in 0..k {
            scaled[(r, c)] = a[(r, c)] / (a[(r, r)] * a[(c, c)]).sqrt();
        }
    }
    let eig = scaled.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    !(min > RCOND_FLOOR * max)
}
