//! Central finite-difference gradients of the squared-error loss, with the
//! forward pass evaluated in double-double arithmetic.
//!
//! Between activation kinks the loss is quadratic in any single parameter, so
//! a central difference has no truncation error; extended precision removes
//! the cancellation error of subtracting two nearly equal losses.

use super::{Activation, MlpModel};
use twofloat::TwoFloat;

fn activate(a: Activation, z: TwoFloat) -> TwoFloat {
    let zero = TwoFloat::from(0.0);
    match a {
        Activation::LeakyRelu(slope) => {
            if z >= zero {
                z
            } else {
                z * slope
            }
        }
        Activation::Relu => {
            if z >= zero {
                z
            } else {
                zero
            }
        }
        Activation::Identity => z,
    }
}

/// Loss with parameter `(layer, index)` shifted by `delta`; `index` runs over
/// weights first, then biases.
fn shifted_loss(m: &MlpModel, x: &[f64], y: &[f64], target: Option<(usize, usize)>, delta: f64) -> TwoFloat {
    let mut act: Vec<TwoFloat> = x.iter().map(|v| TwoFloat::from(*v)).collect();
    for (k, layer) in m.layers().iter().enumerate() {
        let nw = layer.params.weights.len();
        let param = |i: usize| -> TwoFloat {
            let base = if i < nw {
                layer.params.weights[i]
            } else {
                layer.params.biases[i - nw]
            };
            match target {
                Some((tk, ti)) if tk == k && ti == i => TwoFloat::from(base) + delta,
                _ => TwoFloat::from(base),
            }
        };
        act = (0..layer.fan_out)
            .map(|j| {
                let mut z = param(nw + j);
                for (i, a) in act.iter().enumerate() {
                    z += param(j * layer.fan_in + i) * *a;
                }
                activate(layer.activation, z)
            })
            .collect();
    }
    let mut sum = TwoFloat::from(0.0);
    for (o, t) in act.iter().zip(y) {
        let d = *o - *t;
        sum += d * d;
    }
    sum / y.len() as f64
}

/// Gradients per layer as `(weights, biases)`.
pub fn finite_difference_gradients(m: &MlpModel, x: &[f64], y: &[f64], h: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    m.layers()
        .iter()
        .enumerate()
        .map(|(k, layer)| {
            let nw = layer.params.weights.len();
            let g: Vec<f64> = (0..nw + layer.params.biases.len())
                .map(|i| {
                    let plus = shifted_loss(m, x, y, Some((k, i)), h);
                    let minus = shifted_loss(m, x, y, Some((k, i)), -h);
                    f64::from((plus - minus) / (2.0 * h))
                })
                .collect();
            (g[..nw].to_vec(), g[nw..].to_vec())
        })
        .collect()
}

/// Unshifted loss, for sanity checks against the f64 implementation.
#[allow(dead_code)]
pub fn reference_loss(m: &MlpModel, x: &[f64], y: &[f64]) -> f64 {
    f64::from(shifted_loss(m, x, y, None, 0.0))
}

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
