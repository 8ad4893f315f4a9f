use crate::error::{Error, Result};

use super::{Gradients, Layer, LayerParams, TrainConfig};

/// First and second moment estimates mirroring the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: Vec<LayerParams>,
    pub second: Vec<LayerParams>,
}

impl AdamState {
    pub fn new(layers: &[Layer]) -> Self {
        let zeros: Vec<LayerParams> = layers
            .iter()
            .map(|l| LayerParams::zeros(l.fan_in, l.fan_out))
            .collect();
        Self {
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub(super) fn apply(&mut self, layers: &mut [Layer], grads: &Gradients, cfg: &TrainConfig) -> Result<()> {
        if grads.len() != layers.len() {
            return Err(Error::Shape {
                expected: layers.len(),
                actual: grads.len(),
            });
        }
        for (g, l) in grads.iter().zip(layers.iter()) {
            if g.weights.len() != l.params.weights.len() || g.biases.len() != l.params.biases.len() {
                return Err(Error::Shape {
                    expected: l.params.weights.len() + l.params.biases.len(),
                    actual: g.weights.len() + g.biases.len(),
                });
            }
        }

        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let correct1 = 1.0 - cfg.beta1.powi(t);
        let correct2 = 1.0 - cfg.beta2.powi(t);
        let update = |w: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / correct1;
            let v_hat = *v / correct2;
            *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        };
        for (k, layer) in layers.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.first[k], &mut self.second[k], &grads[k]);
            for i in 0..g.weights.len() {
                update(&mut layer.params.weights[i], &mut m.weights[i], &mut v.weights[i], g.weights[i]);
            }
            for i in 0..g.biases.len() {
                update(&mut layer.params.biases[i], &mut m.biases[i], &mut v.biases[i], g.biases[i]);
            }
        }
        Ok(())
    }
}
