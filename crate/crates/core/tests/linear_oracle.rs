//! Ridge regression against a normal-equations solve done with nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topic_image_core::baselines::{train_linear, LinearModel};

fn oracle(xs: &[Vec<f64>], ys: &[f64], l2: f64) -> (Vec<f64>, f64) {
    let n = xs.len();
    let d = xs[0].len();
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j < d { xs[i][j] } else { 1.0 });
    let y = DVector::from_column_slice(ys);
    let mut a = x.transpose() * &x;
    for i in 0..d {
        a[(i, i)] += l2;
    }
    let b = x.transpose() * y;
    let sol = a.lu().solve(&b).expect("solvable");
    (sol.as_slice()[..d].to_vec(), sol[d])
}

fn random_system(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    (xs, ys)
}

fn fit(xs: &[Vec<f64>], ys: &[f64], l2: f64) -> LinearModel {
    let data: Vec<(Vec<f64>, f64)> = xs.iter().cloned().zip(ys.iter().copied()).collect();
    train_linear(&data, l2).unwrap()
}

#[test]
fn matches_normal_equations_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..50 {
        let (xs, ys) = random_system(&mut rng, 10, 5);
        let l2 = [0.0, 0.01, 1.0][trial % 3];
        let model = fit(&xs, &ys, l2);
        let (w, b) = oracle(&xs, &ys, l2);
        for (a, e) in model.weights.iter().zip(&w) {
            assert!((a - e).abs() < 1e-8, "trial {trial}: {a} vs {e}");
        }
        assert!((model.bias - b).abs() < 1e-8);
    }
}

/// Gradient of the ridge objective at the fitted parameters.
fn objective_gradient(model: &LinearModel, xs: &[Vec<f64>], ys: &[f64], l2: f64) -> Vec<f64> {
    let d = model.weights.len();
    let mut g = vec![0.0; d + 1];
    for (x, y) in xs.iter().zip(ys) {
        let r = model.predict(x).unwrap() - y;
        for j in 0..d {
            g[j] += 2.0 * r * x[j];
        }
        g[d] += 2.0 * r;
    }
    for j in 0..d {
        g[j] += 2.0 * l2 * model.weights[j];
    }
    g
}

#[test]
fn duplicated_example_keeps_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut xs, mut ys) = random_system(&mut rng, 12, 4);
    xs.push(xs[3].clone());
    ys.push(ys[3]);
    let model = fit(&xs, &ys, 0.5);
    for g in objective_gradient(&model, &xs, &ys, 0.5) {
        assert!(g.abs() < 1e-8, "gradient component {g}");
    }
}

#[test]
fn more_features_than_samples_needs_ridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (xs, ys) = random_system(&mut rng, 4, 9);
    let data: Vec<(Vec<f64>, f64)> = xs.iter().cloned().zip(ys.iter().copied()).collect();
    assert!(train_linear(&data, 0.0).is_err());
    let model = train_linear(&data, 0.1).unwrap();
    let (w, _) = oracle(&xs, &ys, 0.1);
    for (a, e) in model.weights.iter().zip(&w) {
        assert!((a - e).abs() < 1e-8);
    }
}
