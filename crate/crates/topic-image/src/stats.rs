use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    /// Two-sided.
    pub p: f64,
}

/// Paired two-sided t-test on `a[i] - b[i]`.
///
/// Degenerate inputs: fewer than two pairs, or identical pairs, give
/// `t = 0, p = 1`; a constant nonzero difference gives `t = ±inf, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> PairedTTest {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_diff = if n == 0 { 0.0 } else { diffs.iter().sum::<f64>() / n as f64 };
    if n < 2 {
        return PairedTTest { n, mean_diff, t: 0.0, p: 1.0 };
    }
    let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return if mean_diff == 0.0 {
            PairedTTest { n, mean_diff, t: 0.0, p: 1.0 }
        } else {
            PairedTTest { n, mean_diff, t: mean_diff.signum() * f64::INFINITY, p: 0.0 }
        };
    }
    let t = mean_diff / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df >= 1");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    PairedTTest { n, mean_diff, t, p }
}
