use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn predict(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.weights.len() {
            return Err(Error::dim("linear model input", self.weights.len(), input.len()));
        }
        Ok(self.bias + self.weights.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
    }
}

/// Ridge regression: minimizes `sum (w.x + b - y)^2 + l2 * |w|^2` (the bias
/// is not penalized) by solving the normal equations with a Cholesky
/// factorization.
pub fn train_linear<X: AsRef<[f64]>>(examples: &[(X, f64)], l2: f64) -> Result<LinearModel> {
    if examples.is_empty() {
        return Err(Error::arg("cannot fit a linear model on no examples"));
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::arg("ridge penalty must be finite and nonnegative"));
    }
    let d = examples[0].0.as_ref().len();
    let m = d + 1;
    // Upper triangle of [X 1]^T [X 1] and [X 1]^T y, bias last.
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let mut row = vec![0.0; m];
    for (x, y) in examples {
        let x = x.as_ref();
        if x.len() != d {
            return Err(Error::dim("linear regression example", d, x.len()));
        }
        row[..d].copy_from_slice(x);
        row[d] = 1.0;
        for i in 0..m {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            rhs[i] += ri * y;
            for (g, rj) in gram[i * m + i..(i + 1) * m].iter_mut().zip(&row[i..]) {
                *g += ri * rj;
            }
        }
    }
    for i in 0..d {
        gram[i * m + i] += l2;
    }
    cholesky_in_place(&mut gram, m)?;
    let solution = cholesky_solve(&gram, m, &rhs);
    let bias = solution[d];
    let mut weights = solution;
    weights.truncate(d);
    Ok(LinearModel { weights, bias })
}

/// Overwrites the upper triangle of the symmetric matrix `a` with `U` such
/// that `a = U^T U`.
fn cholesky_in_place(a: &mut [f64], m: usize) -> Result<()> {
    let max_diag = (0..m).map(|i| a[i * m + i]).fold(0.0, f64::max);
    let floor = max_diag * 1e-13;
    for k in 0..m {
        let pivot = a[k * m + k];
        if !(pivot > floor) {
            return Err(Error::Singular);
        }
        let root = libm::sqrt(pivot);
        a[k * m + k] = root;
        for j in k + 1..m {
            a[k * m + j] /= root;
        }
        for i in k + 1..m {
            let uki = a[k * m + i];
            if uki == 0.0 {
                continue;
            }
            let (head, tail) = a.split_at_mut(i * m);
            let urow = &head[k * m + i..k * m + m];
            for (t, u) in tail[i..m].iter_mut().zip(urow) {
                *t -= uki * u;
            }
        }
    }
    Ok(())
}

fn cholesky_solve(u: &[f64], m: usize, b: &[f64]) -> Vec<f64> {
    // U^T z = b
    let mut z = b.to_vec();
    for i in 0..m {
        let mut s = z[i];
        for k in 0..i {
            s -= u[k * m + i] * z[k];
        }
        z[i] = s / u[i * m + i];
    }
    // U x = z
    for i in (0..m).rev() {
        let mut s = z[i];
        for k in i + 1..m {
            s -= u[i * m + k] * z[k];
        }
        z[i] = s / u[i * m + i];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let data: Vec<([f64; 1], f64)> = (0..10).map(|i| ([i as f64], 2.0 * i as f64)).collect();
        let m = train_linear(&data, 0.0).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-6);
        assert!(m.bias.abs() < 1e-6);
        for (x, y) in &data {
            assert!((m.predict(x).unwrap() - y).abs() < 1e-6);
        }
    }

    #[test]
    fn tiny_ridge_approaches_least_squares() {
        let data: Vec<([f64; 1], f64)> = (0..10).map(|i| ([i as f64], 2.0 * i as f64 + 1.0)).collect();
        let m = train_linear(&data, 1e-9).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-6);
        assert!((m.bias - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singular_without_ridge() {
        let data = vec![([1.0, 1.0], 1.0), ([2.0, 2.0], 2.0), ([3.0, 3.0], 3.0)];
        assert_eq!(train_linear(&data, 0.0), Err(Error::Singular));
        let m = train_linear(&data, 0.1).unwrap();
        assert!((m.weights[0] - m.weights[1]).abs() < 1e-12);
    }

    #[test]
    fn input_errors() {
        let empty: Vec<([f64; 1], f64)> = vec![];
        assert!(train_linear(&empty, 1.0).is_err());
        let ragged: Vec<(Vec<f64>, f64)> = vec![(vec![1.0], 1.0), (vec![1.0, 2.0], 1.0)];
        assert!(train_linear(&ragged, 1.0).is_err());
        let m = train_linear(&[([1.0], 1.0), ([2.0], 2.0)], 0.0).unwrap();
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }
}
