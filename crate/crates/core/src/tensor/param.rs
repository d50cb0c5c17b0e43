use rand::Rng;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// A named, optionally trainable tensor together with its momentum buffer.
#[derive(Debug, Clone)]
pub struct Parameter<T = f32> {
    pub name: String,
    pub tensor: Tensor<T>,
    pub trainable: bool,
    velocity: Option<Vec<T>>,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, tensor: Tensor<T>) -> Self {
        Self {
            name: name.into(),
            tensor,
            trainable: true,
            velocity: None,
        }
    }

    pub fn frozen(mut self) -> Self {
        self.trainable = false;
        self
    }

    /// Drops the momentum state, e.g. when a new training phase starts.
    pub fn reset_velocity(&mut self) {
        self.velocity = None;
    }
}

/// Stochastic gradient descent with momentum and a per-epoch multiplicative
/// learning-rate decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub decay: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            momentum: 0.9,
            decay: 0.9,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Parameter(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Parameter(format!(
                "decay factor must lie in (0, 1], got {}",
                self.decay
            )));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay.powi(epoch as i32)
    }

    /// The same optimizer with the learning rate of `epoch` baked in.
    pub fn at_epoch(&self, epoch: usize) -> Self {
        Self {
            learning_rate: self.rate_at(epoch),
            ..*self
        }
    }
}

/// One momentum step over every trainable parameter:
/// `v <- momentum * v - lr * grad; w <- w + v`.
///
/// Frozen parameters are left untouched. All gradient buffers are cleared.
pub fn sgd_step<T: Scalar>(params: &mut [Parameter<T>], config: &SgdConfig) -> Result<()> {
    config.validate()?;
    if let Some(p) = params
        .iter()
        .find(|p| p.trainable && p.tensor.grad().is_none())
    {
        return Err(Error::State(format!(
            "trainable parameter `{}` has no gradient",
            p.name
        )));
    }
    let lr = T::from_f64_lossy(config.learning_rate);
    let momentum = T::from_f64_lossy(config.momentum);
    for p in params.iter_mut() {
        let grad = p.tensor.take_grad();
        if !p.trainable {
            continue;
        }
        let grad = grad.expect("checked above");
        let velocity = p
            .velocity
            .get_or_insert_with(|| vec![T::zero(); grad.len()]);
        for ((w, v), &g) in p.tensor.data_mut().iter_mut().zip(velocity).zip(&grad) {
            *v = momentum * *v - lr * g;
            *w += *v;
        }
    }
    Ok(())
}

/// Rescales the gradients of all trainable parameters so that their joint
/// L2 norm is at most `max_norm`. Returns the norm before rescaling.
pub fn clip_grad_norm<T: Scalar>(params: &mut [Parameter<T>], max_norm: f64) -> Result<f64> {
    if max_norm.is_nan() || max_norm <= 0.0 {
        return Err(Error::Parameter(format!("gradient norm bound must be positive, got {max_norm}")));
    }
    let norm = params
        .iter()
        .filter(|p| p.trainable)
        .filter_map(|p| p.tensor.grad())
        .flat_map(|g| g.iter().map(|v| v.as_f64().powi(2)))
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = T::from_f64_lossy(max_norm / norm);
        for p in params.iter_mut().filter(|p| p.trainable) {
            if let Some(g) = p.tensor.grad_mut() {
                g.iter_mut().for_each(|v| *v = *v * scale);
            }
        }
    }
    Ok(norm)
}

/// Uniform initialization in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let len = shape.iter().product();
    let data = (0..len)
        .map(|_| T::from_f64_lossy(rng.random_range(-limit..limit)))
        .collect();
    Tensor::new(shape, data).expect("shape and data agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_param(w: f64, g: f64) -> Parameter<f64> {
        let mut p = Parameter::new("w", Tensor::scalar(w));
        p.tensor.accumulate_grad(&[g]).unwrap();
        p
    }

    #[test]
    fn plain_gradient_step() {
        let mut params = vec![scalar_param(0.5, 1.0)];
        let cfg = SgdConfig {
            learning_rate: 0.1,
            momentum: 0.0,
            decay: 1.0,
        };
        sgd_step(&mut params, &cfg).unwrap();
        assert!((params[0].tensor.data()[0] - 0.4).abs() < 1e-15);
        assert!(params[0].tensor.grad().is_none());
    }

    #[test]
    fn frozen_parameter_is_untouched() {
        let mut params = vec![scalar_param(0.5, 3.0).frozen()];
        let before = params[0].tensor.data()[0].to_bits();
        sgd_step(&mut params, &SgdConfig::default()).unwrap();
        assert_eq!(params[0].tensor.data()[0].to_bits(), before);
        assert!(params[0].tensor.grad().is_none());
    }

    #[test]
    fn momentum_recurrence() {
        // v1 = -0.1, w1 = -0.1; v2 = 0.9 * -0.1 - 0.1 = -0.19, w2 = -0.29
        let cfg = SgdConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            decay: 1.0,
        };
        let mut params = vec![scalar_param(0.0, 1.0)];
        sgd_step(&mut params, &cfg).unwrap();
        assert!((params[0].tensor.data()[0] + 0.1).abs() < 1e-12);
        params[0].tensor.accumulate_grad(&[1.0]).unwrap();
        sgd_step(&mut params, &cfg).unwrap();
        assert!((params[0].tensor.data()[0] + 0.29).abs() < 1e-12);
    }

    #[test]
    fn missing_gradient_is_a_state_error() {
        let mut params = vec![Parameter::new("w", Tensor::<f32>::scalar(1.0))];
        assert!(matches!(
            sgd_step(&mut params, &SgdConfig::default()),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn learning_rate_never_increases() {
        let cfg = SgdConfig::default();
        for e in 0..50 {
            assert!(cfg.rate_at(e + 1) <= cfg.rate_at(e));
        }
        assert_eq!(cfg.rate_at(0), 1e-4);
        assert!(SgdConfig { learning_rate: 0.0, ..cfg }.validate().is_err());
        assert!(SgdConfig { momentum: 1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let t: Tensor<f32> = glorot_uniform(&[4, 3, 3, 3], 27, 36, &mut a);
        let u: Tensor<f32> = glorot_uniform(&[4, 3, 3, 3], 27, 36, &mut b);
        assert_eq!(t, u);
        let limit = (6.0f32 / 63.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= limit));
    }
}
