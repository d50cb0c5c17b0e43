use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Phase, StreamModel, AUX_NORM_PREFIX, AUX_PREFIX};
use crate::error::{Error, Result};
use crate::geometry::{resize, ImageBuffer};
use crate::losses::{bce_loss, dice_gradient, dice_loss, SegPair};
use crate::stream::StreamKind;
use crate::tensor::{clip_grad_norm, sgd_step, Gradients, Graph, SgdConfig};

/// Hard cap on epochs per phase.
pub const MAX_EPOCHS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    /// Upper bound on epochs; clipped to [`MAX_EPOCHS`].
    pub max_epochs: usize,
    pub batch_size: usize,
    pub sgd: SgdConfig,
    /// Epochs without relative improvement of `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    /// Bound on the joint gradient norm of each batch; `None` disables
    /// clipping.
    pub max_grad_norm: Option<f64>,
    /// Seeds the per-epoch shuffling.
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_epochs: MAX_EPOCHS,
            batch_size: 8,
            sgd: SgdConfig::default(),
            patience: 5,
            min_delta: 1e-3,
            max_grad_norm: Some(1.0),
            seed: 0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        self.sgd.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        if !(self.min_delta >= 0.0 && self.min_delta < 1.0) {
            return Err(Error::Parameter(format!(
                "min_delta must lie in [0, 1), got {}",
                self.min_delta
            )));
        }
        if let Some(n) = self.max_grad_norm {
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::Parameter(format!("max_grad_norm must be positive, got {n}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss over the epoch.
    pub loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub stream: StreamKind,
    /// `segmentation` or `classification`.
    pub phase: &'static str,
    pub epochs: Vec<EpochLog>,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

impl StreamModel {
    /// First phase of the segmentation-guided network: Dice loss on the
    /// disc map. The classification branch is left untouched.
    ///
    /// `sample(epoch, index)` yields the (augmented) image and its disc mask.
    pub fn train_segmentation_phase<F>(&mut self, count: usize, opts: &TrainOptions, mut sample: F) -> Result<TrainReport>
    where
        F: FnMut(usize, usize) -> Result<(ImageBuffer, ImageBuffer)>,
    {
        if self.kind() != StreamKind::SegGuided {
            return Err(Error::State(format!("{} stream has no segmentation phase", self.kind())));
        }
        self.require_phase(&[Phase::Untrained], "run the segmentation phase on")?;
        for p in &mut self.params {
            p.trainable = !p.name.starts_with(AUX_PREFIX);
        }
        let report = self.run_phase("segmentation", count, opts, |model, epoch, index| {
            let (image, mask) = sample(epoch, index)?;
            model.segmentation_gradients(&image, &mask)
        })?;
        self.phase = Phase::SegTrained;
        Ok(report)
    }

    /// Classification training. The segmentation-guided network trains only
    /// the dense layers of its classification branch, every convolution
    /// frozen, after fitting the branch standardization on the epoch-0
    /// samples; residual streams train end to end. Both use binary cross
    /// entropy.
    pub fn train_classifier_phase<F>(&mut self, count: usize, opts: &TrainOptions, mut sample: F) -> Result<TrainReport>
    where
        F: FnMut(usize, usize) -> Result<(ImageBuffer, bool)>,
    {
        let seg = self.kind() == StreamKind::SegGuided;
        let required = if seg { Phase::SegTrained } else { Phase::Untrained };
        self.require_phase(&[required], "run the classification phase on")?;
        for p in &mut self.params {
            p.trainable = !seg || (p.name.starts_with(AUX_PREFIX) && !p.name.starts_with(AUX_NORM_PREFIX));
        }
        if seg && count > 0 && opts.max_epochs > 0 {
            let features = (0..count)
                .map(|i| sample(0, i).and_then(|(image, _)| self.pooled_saddle(&image)))
                .collect::<Result<Vec<_>>>()?;
            self.fit_aux_standardization(&features)?;
        }
        let report = self.run_phase("classification", count, opts, |model, epoch, index| {
            let (image, label) = sample(epoch, index)?;
            model.classifier_gradients(&image, label)
        })?;
        self.phase = Phase::FullyTrained;
        Ok(report)
    }

    fn run_phase<F>(&mut self, phase: &'static str, count: usize, opts: &TrainOptions, mut step: F) -> Result<TrainReport>
    where
        F: FnMut(&StreamModel, usize, usize) -> Result<(f64, Gradients<f32>)>,
    {
        opts.validate()?;
        if count == 0 && opts.max_epochs > 0 {
            return Err(Error::Input(format!("{phase} phase of {} has no samples", self.kind())));
        }
        for p in &mut self.params {
            p.reset_velocity();
            p.tensor.clear_grad();
        }
        let stream = self.kind();
        let diverged = |message: String| Error::Training {
            stream: stream.name().to_string(),
            message,
        };
        let mut report = TrainReport {
            stream,
            phase,
            epochs: Vec::new(),
            stopped_early: false,
        };
        let mut order: Vec<usize> = (0..count).collect();
        let (mut best, mut stale) = (f64::INFINITY, 0);
        for epoch in 0..opts.max_epochs.min(MAX_EPOCHS) {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(epoch as u64);
            order.sort_unstable();
            order.shuffle(&mut rng);
            let sgd = opts.sgd.at_epoch(epoch);
            let mut total = 0.0;
            for batch in order.chunks(opts.batch_size) {
                let scale = 1.0 / batch.len() as f32;
                for &index in batch {
                    let (loss, grads) = step(self, epoch, index)?;
                    if !loss.is_finite() {
                        return Err(diverged(format!("loss is {loss} at epoch {epoch}")));
                    }
                    total += loss;
                    grads.accumulate_into(&mut self.params, scale)?;
                }
                if let Some(bound) = opts.max_grad_norm {
                    clip_grad_norm(&mut self.params, bound)?;
                }
                sgd_step(&mut self.params, &sgd)?;
            }
            if self.params.iter().any(|p| !p.tensor.is_finite()) {
                return Err(diverged(format!("non-finite parameters after epoch {epoch}")));
            }
            let loss = total / count as f64;
            report.epochs.push(EpochLog {
                epoch,
                loss,
                learning_rate: sgd.learning_rate,
            });
            if best.is_infinite() || loss < best - opts.min_delta * best.abs() {
                best = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= opts.patience {
                    report.stopped_early = true;
                    break;
                }
            }
        }
        Ok(report)
    }

    fn segmentation_gradients(&self, image: &ImageBuffer, mask: &ImageBuffer) -> Result<(f64, Gradients<f32>)> {
        let side = self.config.input_side;
        let truth: Vec<f32> = resize(&mask.to_gray(), side, side)?
            .pixels()
            .iter()
            .map(|&m| if m >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        let mut g = Graph::new(&self.params);
        let x = g.input(self.input_tensor(image)?);
        let levels = self.encoder(&mut g, x)?;
        let logits = self.decoder(&mut g, &levels)?;
        let map = g.sigmoid(logits);
        let pair = SegPair::new(g.value(map).data(), &truth)?;
        let loss = dice_loss(&pair)?;
        let seed: Vec<f32> = dice_gradient(&pair)?.into_iter().map(|d| d as f32).collect();
        Ok((loss, g.backward(map, &seed)?))
    }

    fn classifier_gradients(&self, image: &ImageBuffer, label: bool) -> Result<(f64, Gradients<f32>)> {
        let mut g = Graph::new(&self.params);
        let x = g.input(self.input_tensor(image)?);
        let logit = if self.kind() == StreamKind::SegGuided {
            let levels = self.encoder(&mut g, x)?;
            self.aux_logit(&mut g, levels[self.config.depth])?
        } else {
            self.residual_logit(&mut g, x)?
        };
        let z = g.value(logit).data()[0];
        let p = 1.0 / (1.0 + (-z).exp());
        let y = if label { 1.0 } else { 0.0 };
        // d BCE(sigmoid(z)) / dz
        let grads = g.backward(logit, &[p - y])?;
        Ok((bce_loss(f64::from(p), label), grads))
    }
}
