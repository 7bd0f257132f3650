use crate::{Error, Result};

/// `(1/n) * sum |prediction - target|`.
pub fn mae_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::dim("mae targets", predictions.len(), targets.len()));
    }
    if predictions.is_empty() {
        return Err(Error::arg("mae of an empty sequence"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// d|p - t| / dp, taken as 0 at p == t.
pub fn mae_subgradient(prediction: f64, target: f64) -> f64 {
    let e = prediction - target;
    if e > 0.0 {
        1.0
    } else if e < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(mae_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae_loss(&[1.0, 3.0], &[0.0, 1.0]).unwrap(), 1.5);
        assert_eq!(mae_loss(&[0.0, 1.0], &[1.0, 3.0]).unwrap(), 1.5);
        assert!(mae_loss(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae_loss(&[], &[]).is_err());
    }

    #[test]
    fn subgradient() {
        assert_eq!(mae_subgradient(2.0, 1.0), 1.0);
        assert_eq!(mae_subgradient(0.0, 1.0), -1.0);
        assert_eq!(mae_subgradient(1.0, 1.0), 0.0);
    }
}
