use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::{Error, Result};

/// Inverted dropout. In training mode each component is zeroed with
/// probability `rate` and survivors are scaled by `1 / (1 - rate)`; the
/// returned mask holds the per-component factor. Outside training the input
/// is returned unchanged with an all-ones mask.
pub fn apply_dropout(
    activations: &[f64],
    rate: f64,
    rng: &mut dyn RngCore,
    training: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::arg(format!("dropout rate {rate} outside [0, 1)")));
    }
    let mut out = activations.to_vec();
    if !training || rate == 0.0 {
        return Ok((out, alloc::vec![1.0; activations.len()]));
    }
    let mut mask = Vec::new();
    dropout_in_place(&mut out, rate, rng, &mut mask);
    Ok((out, mask))
}

pub(crate) fn dropout_in_place(h: &mut [f64], rate: f64, rng: &mut dyn RngCore, mask: &mut Vec<f64>) {
    let keep_scale = 1.0 / (1.0 - rate);
    mask.clear();
    mask.extend(h.iter_mut().map(|v| {
        let m = if rng.random::<f64>() < rate { 0.0 } else { keep_scale };
        *v *= m;
        m
    }));
}
