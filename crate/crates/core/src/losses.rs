//! Classification and segmentation losses.
//!
//! Binary cross entropy drives every classification head; the Dice loss
//! `1 - 2 Σ p g / (Σ p² + Σ g²)` drives the disc segmentation map, with its
//! closed-form per-pixel derivative used to seed back-propagation.

use crate::error::{Error, Result};
use crate::tensor::Scalar;

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logarithms.
pub const BCE_EPS: f64 = 1e-7;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(BCE_EPS, 1.0 - BCE_EPS)
}

/// `-(y ln p + (1 - y) ln(1 - p))` with `p` clamped.
pub fn bce_loss(prob: f64, label: bool) -> f64 {
    let p = clamp_prob(prob);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Derivative of [`bce_loss`] with respect to the probability, evaluated at
/// the clamped probability.
pub fn bce_gradient(prob: f64, label: bool) -> f64 {
    let p = clamp_prob(prob);
    if label {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

/// A predicted probability map and its binary ground truth.
#[derive(Debug, Clone, Copy)]
pub struct SegPair<'a, T> {
    predicted: &'a [T],
    truth: &'a [T],
}

impl<'a, T: Scalar> SegPair<'a, T> {
    pub fn new(predicted: &'a [T], truth: &'a [T]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::Dimension(format!(
                "prediction has {} pixels, truth has {}",
                predicted.len(),
                truth.len()
            )));
        }
        if let Some(p) = predicted
            .iter()
            .find(|p| !(**p >= T::zero() && **p <= T::one()))
        {
            return Err(Error::Input(format!(
                "predicted probability {p:?} outside [0, 1]"
            )));
        }
        if let Some(g) = truth.iter().find(|g| **g != T::zero() && **g != T::one()) {
            return Err(Error::Input(format!("ground truth value {g:?} is not 0 or 1")));
        }
        Ok(Self { predicted, truth })
    }

    pub fn predicted(&self) -> &[T] {
        self.predicted
    }

    pub fn truth(&self) -> &[T] {
        self.truth
    }

    /// `(Σ p g, Σ p² + Σ g²)` accumulated in double precision.
    fn sums(&self) -> Result<(f64, f64)> {
        let (mut overlap, mut denom) = (0.0, 0.0);
        for (&p, &g) in self.predicted.iter().zip(self.truth) {
            let (p, g) = (p.as_f64(), g.as_f64());
            overlap += p * g;
            denom += p * p + g * g;
        }
        if denom <= 0.0 {
            return Err(Error::Degenerate(
                "Dice denominator is zero (empty prediction and empty truth)".into(),
            ));
        }
        Ok((overlap, denom))
    }
}

/// Dice coefficient loss, in `[0, 1]`.
pub fn dice_loss<T: Scalar>(pair: &SegPair<'_, T>) -> Result<f64> {
    let (overlap, denom) = pair.sums()?;
    Ok(1.0 - 2.0 * overlap / denom)
}

/// Closed-form `∂L/∂p_i = (4 p_i Σpg − 2 g_i (Σp² + Σg²)) / (Σp² + Σg²)²`.
pub fn dice_gradient<T: Scalar>(pair: &SegPair<'_, T>) -> Result<Vec<f64>> {
    let (overlap, denom) = pair.sums()?;
    let denom_sq = denom * denom;
    Ok(pair
        .predicted
        .iter()
        .zip(pair.truth)
        .map(|(&p, &g)| (4.0 * p.as_f64() * overlap - 2.0 * g.as_f64() * denom) / denom_sq)
        .collect())
}

/// Mean overlap `1 - dice_loss`, the usual segmentation quality score.
pub fn dice_overlap<T: Scalar>(pair: &SegPair<'_, T>) -> Result<f64> {
    dice_loss(pair).map(|l| 1.0 - l)
}
