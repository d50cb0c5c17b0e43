//! The four stream networks.
//!
//! Residual streams (global, disc, polar) are a stem convolution followed by
//! `depth` stride-2 residual stages, global max pooling and a sigmoid unit.
//! The segmentation-guided stream is a U-shape network whose bottleneck (the
//! "saddle") also feeds a two-layer classification branch.

mod train;
mod weights;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{resize, ImageBuffer};
use crate::stream::StreamKind;
use crate::tensor::{glorot_uniform, Graph, Parameter, PoolKind, Tensor, Var};

pub use train::{EpochLog, TrainOptions, TrainReport};
pub use weights::WEIGHT_FORMAT_VERSION;

/// Prefix of the parameters in the segmentation-guided classification
/// branch; everything else in that network is convolutional.
pub const AUX_PREFIX: &str = "aux.";
/// Variance floor of the branch standardization.
const STANDARDIZE_EPS: f64 = 1e-6;

/// Fixed per-channel standardization of the pooled saddle features, fitted
/// from training data before the classification phase; never trained.
pub const AUX_NORM_PREFIX: &str = "aux.norm.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamConfig {
    pub kind: StreamKind,
    pub input_side: usize,
    pub base_channels: usize,
    /// Number of stride-2 down-sampling stages.
    pub depth: usize,
    /// Channel widths double per stage up to this cap.
    pub max_channels: usize,
    /// Learned per-channel scale after each convolution; without it a
    /// convolution is followed by a bias only.
    pub channel_affine: bool,
    pub input_channels: usize,
}

impl StreamConfig {
    /// Small configuration that trains on one CPU core.
    pub fn desk(kind: StreamKind) -> Self {
        match kind {
            StreamKind::SegGuided => Self {
                kind,
                input_side: 128,
                base_channels: 8,
                depth: 4,
                max_channels: 128,
                channel_affine: false,
                input_channels: 3,
            },
            _ => Self {
                kind,
                input_side: 64,
                base_channels: 8,
                depth: 5,
                max_channels: 64,
                channel_affine: true,
                input_channels: 3,
            },
        }
    }

    /// Published input sizes: 224 for residual streams and 640 for the
    /// U-shape network, whose saddle then carries 512 channels.
    pub fn full_scale(kind: StreamKind) -> Self {
        match kind {
            StreamKind::SegGuided => Self {
                input_side: 640,
                base_channels: 32,
                max_channels: 512,
                ..Self::desk(kind)
            },
            _ => Self {
                input_side: 224,
                base_channels: 64,
                max_channels: 512,
                ..Self::desk(kind)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > 10 {
            return Err(Error::Parameter(format!("depth must lie in 1..=10, got {}", self.depth)));
        }
        if self.input_side == 0 || !self.input_side.is_multiple_of(1 << self.depth) {
            return Err(Error::Parameter(format!(
                "input side {} is not divisible by 2^{}",
                self.input_side, self.depth
            )));
        }
        if self.base_channels == 0 || self.max_channels < self.base_channels {
            return Err(Error::Parameter(format!(
                "channel widths must satisfy 0 < base ({}) <= max ({})",
                self.base_channels, self.max_channels
            )));
        }
        if self.input_channels != 1 && self.input_channels != 3 {
            return Err(Error::Parameter(format!(
                "input must have 1 or 3 channels, got {}",
                self.input_channels
            )));
        }
        Ok(())
    }

    /// Channel width at down-sampling level `level` (0 = full resolution).
    pub fn channels_at(&self, level: usize) -> usize {
        (self.base_channels << level.min(20)).min(self.max_channels)
    }

    /// Spatial side after all down-sampling stages.
    pub fn saddle_side(&self) -> usize {
        self.input_side >> self.depth
    }

    pub fn saddle_channels(&self) -> usize {
        self.channels_at(self.depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Untrained,
    SegTrained,
    FullyTrained,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Untrained => "untrained",
            Phase::SegTrained => "seg_trained",
            Phase::FullyTrained => "fully_trained",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "untrained" => Ok(Phase::Untrained),
            "seg_trained" => Ok(Phase::SegTrained),
            "fully_trained" => Ok(Phase::FullyTrained),
            other => Err(Error::Parameter(format!("unknown phase '{other}'"))),
        }
    }
}

/// Disc probability map and glaucoma probability of the U-shape network.
#[derive(Debug, Clone, PartialEq)]
pub struct SegGuidedOutput {
    /// `[1, side, side]` probabilities.
    pub disc_map: Tensor<f32>,
    pub glaucoma_prob: f64,
}

/// A stream network: configuration, named parameters and training phase.
#[derive(Debug, Clone)]
pub struct StreamModel {
    config: StreamConfig,
    params: Vec<Parameter<f32>>,
    index: HashMap<String, usize>,
    phase: Phase,
}

struct Init<'a> {
    params: &'a mut Vec<Parameter<f32>>,
    rng: ChaCha8Rng,
    affine: bool,
}

impl Init<'_> {
    fn push(&mut self, name: String, tensor: Tensor<f32>) {
        self.params.push(Parameter::new(name, tensor));
    }

    fn conv(&mut self, layer: &str, cin: usize, cout: usize, k: usize) {
        let w = glorot_uniform(&[cout, cin, k, k], cin * k * k, cout * k * k, &mut self.rng);
        self.push(format!("{layer}.weight"), w);
        if self.affine {
            self.push(format!("{layer}.scale"), Tensor::filled(&[cout], 1.0));
        }
        self.push(format!("{layer}.shift"), Tensor::zeros(&[cout]));
    }

    fn dense(&mut self, layer: &str, d_in: usize, d_out: usize) {
        let w = glorot_uniform(&[d_out, d_in], d_in, d_out, &mut self.rng);
        self.push(format!("{layer}.weight"), w);
        self.push(format!("{layer}.bias"), Tensor::zeros(&[d_out]));
    }
}

fn residual_stage(level: usize) -> String {
    format!("stage{level}")
}

/// A residual classifier for the global, disc or polar stream.
pub fn build_residual_stream(config: StreamConfig, seed: u64) -> Result<StreamModel> {
    config.validate()?;
    if config.kind == StreamKind::SegGuided {
        return Err(Error::Parameter(
            "the segmentation-guided stream is built by build_seg_guided".into(),
        ));
    }
    let mut params = Vec::new();
    let mut init = Init {
        params: &mut params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        affine: config.channel_affine,
    };
    init.conv("stem", config.input_channels, config.channels_at(0), 3);
    for level in 1..=config.depth {
        let (cin, cout) = (config.channels_at(level - 1), config.channels_at(level));
        let stage = residual_stage(level);
        init.conv(&format!("{stage}.conv1"), cin, cout, 3);
        init.conv(&format!("{stage}.conv2"), cout, cout, 3);
        init.conv(&format!("{stage}.shortcut"), cin, cout, 1);
    }
    init.dense("fc", config.saddle_channels(), 1);
    StreamModel::new(config, params, Phase::Untrained)
}

/// The U-shape disc segmentation network with its classification branch.
pub fn build_seg_guided(config: StreamConfig, seed: u64) -> Result<StreamModel> {
    config.validate()?;
    if config.kind != StreamKind::SegGuided {
        return Err(Error::Parameter(format!(
            "build_seg_guided needs a seg_guided config, got {}",
            config.kind
        )));
    }
    let mut params = Vec::new();
    let mut init = Init {
        params: &mut params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        affine: config.channel_affine,
    };
    init.conv("enc0", config.input_channels, config.channels_at(0), 3);
    for level in 1..=config.depth {
        let (cin, cout) = (config.channels_at(level - 1), config.channels_at(level));
        init.conv(&format!("enc{level}.down"), cin, cout, 3);
        init.conv(&format!("enc{level}.conv"), cout, cout, 3);
    }
    for level in (1..=config.depth).rev() {
        let (up, skip) = (config.channels_at(level), config.channels_at(level - 1));
        init.conv(&format!("dec{level}"), up + skip, skip, 3);
    }
    init.conv("map", config.channels_at(0), 1, 1);
    let c = config.saddle_channels();
    let hidden = (c / 4).max(1);
    init.push(format!("{AUX_NORM_PREFIX}scale"), Tensor::filled(&[c], 1.0));
    init.push(format!("{AUX_NORM_PREFIX}shift"), Tensor::zeros(&[c]));
    init.dense("aux.fc1", c, hidden);
    init.dense("aux.fc2", hidden, 1);
    StreamModel::new(config, params, Phase::Untrained)
}

/// Builds the right architecture for `config.kind`.
pub fn build_stream(config: StreamConfig, seed: u64) -> Result<StreamModel> {
    match config.kind {
        StreamKind::SegGuided => build_seg_guided(config, seed),
        _ => build_residual_stream(config, seed),
    }
}

impl StreamModel {
    fn new(config: StreamConfig, params: Vec<Parameter<f32>>, phase: Phase) -> Result<Self> {
        let mut index = HashMap::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            if index.insert(p.name.clone(), i).is_some() {
                return Err(Error::Parameter(format!("duplicate parameter name `{}`", p.name)));
            }
        }
        Ok(Self {
            config,
            params,
            index,
            phase,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn kind(&self) -> StreamKind {
        self.config.kind
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn parameters(&self) -> &[Parameter<f32>] {
        &self.params
    }

    pub fn parameter(&self, name: &str) -> Option<&Parameter<f32>> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.tensor.len()).sum()
    }

    /// SHA-256 over the names, shapes and values of every convolutional
    /// parameter (everything outside the dense layers).
    pub fn conv_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for p in self.params.iter().filter(|p| is_conv_parameter(&p.name)) {
            hasher.update(p.name.as_bytes());
            for &d in p.tensor.shape() {
                hasher.update((d as u64).to_le_bytes());
            }
            for v in p.tensor.data() {
                hasher.update(v.to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn var(&self, g: &mut Graph<'_, f32>, name: &str) -> Result<Var> {
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| Error::State(format!("model has no parameter `{name}`")))?;
        Ok(g.param(i))
    }

    fn conv_unit(
        &self,
        g: &mut Graph<'_, f32>,
        x: Var,
        layer: &str,
        stride: usize,
        relu: bool,
    ) -> Result<Var> {
        let w = self.var(g, &format!("{layer}.weight"))?;
        let pad = g.value(w).shape()[3] / 2;
        let y = g.conv2d(x, w, stride, pad)?;
        let scale = if self.config.channel_affine {
            Some(self.var(g, &format!("{layer}.scale"))?)
        } else {
            None
        };
        let shift = self.var(g, &format!("{layer}.shift"))?;
        let y = g.channel_affine(y, scale, shift)?;
        Ok(if relu { g.relu(y) } else { y })
    }

    fn dense_unit(&self, g: &mut Graph<'_, f32>, x: Var, layer: &str) -> Result<Var> {
        let w = self.var(g, &format!("{layer}.weight"))?;
        let b = self.var(g, &format!("{layer}.bias"))?;
        g.dense(x, w, b)
    }

    /// Residual classifier forward; returns the pre-sigmoid logit node.
    fn residual_logit(&self, g: &mut Graph<'_, f32>, input: Var) -> Result<Var> {
        let mut x = self.conv_unit(g, input, "stem", 1, true)?;
        for level in 1..=self.config.depth {
            let stage = residual_stage(level);
            let a = self.conv_unit(g, x, &format!("{stage}.conv1"), 2, true)?;
            let b = self.conv_unit(g, a, &format!("{stage}.conv2"), 1, false)?;
            let s = self.conv_unit(g, x, &format!("{stage}.shortcut"), 2, false)?;
            let sum = g.add(b, s)?;
            x = g.relu(sum);
        }
        let pooled = g.pool(x, PoolKind::GlobalMax, 0)?;
        self.dense_unit(g, pooled, "fc")
    }

    /// Encoder of the U-shape network; returns the feature map of every
    /// level, the last one being the saddle.
    fn encoder(&self, g: &mut Graph<'_, f32>, input: Var) -> Result<Vec<Var>> {
        let mut levels = vec![self.conv_unit(g, input, "enc0", 1, true)?];
        for level in 1..=self.config.depth {
            let prev = *levels.last().expect("non-empty");
            let d = self.conv_unit(g, prev, &format!("enc{level}.down"), 2, true)?;
            levels.push(self.conv_unit(g, d, &format!("enc{level}.conv"), 1, true)?);
        }
        Ok(levels)
    }

    /// Disc-map logits `[1, side, side]` from the encoder levels.
    fn decoder(&self, g: &mut Graph<'_, f32>, levels: &[Var]) -> Result<Var> {
        let mut x = levels[self.config.depth];
        for level in (1..=self.config.depth).rev() {
            let cat = g.upsample_concat(x, levels[level - 1])?;
            x = self.conv_unit(g, cat, &format!("dec{level}"), 1, true)?;
        }
        self.conv_unit(g, x, "map", 1, false)
    }

    /// Classification-branch logit from the saddle.
    fn aux_logit(&self, g: &mut Graph<'_, f32>, saddle: Var) -> Result<Var> {
        let pooled = g.pool(saddle, PoolKind::GlobalAverage, 0)?;
        let scale = self.var(g, &format!("{AUX_NORM_PREFIX}scale"))?;
        let shift = self.var(g, &format!("{AUX_NORM_PREFIX}shift"))?;
        let pooled = g.channel_affine(pooled, Some(scale), shift)?;
        let h = self.dense_unit(g, pooled, "aux.fc1")?;
        let h = g.relu(h);
        self.dense_unit(g, h, "aux.fc2")
    }

    /// Network input tensor in `[-1, 1]`; the image is resized to the
    /// configured side and converted to gray when the network has one input
    /// channel.
    pub fn input_tensor(&self, image: &ImageBuffer) -> Result<Tensor<f32>> {
        let side = self.config.input_side;
        let img = if self.config.input_channels == 1 { image.to_gray() } else { image.clone() };
        if img.channels() != self.config.input_channels {
            return Err(Error::Dimension(format!(
                "{} stream expects {} channels, image has {}",
                self.kind(),
                self.config.input_channels,
                img.channels()
            )));
        }
        let mut t = resize(&img, side, side)?.to_tensor();
        t.data_mut().iter_mut().for_each(|v| *v = 2.0 * *v - 1.0);
        Ok(t)
    }

    fn require_phase(&self, allowed: &[Phase], action: &str) -> Result<()> {
        if allowed.contains(&self.phase) {
            Ok(())
        } else {
            Err(Error::State(format!(
                "cannot {action} a {} model in phase {}",
                self.kind(),
                self.phase
            )))
        }
    }

    /// Glaucoma probability of a residual stream.
    pub fn predict_prob(&self, image: &ImageBuffer) -> Result<f64> {
        if self.kind() == StreamKind::SegGuided {
            return self.predict_seg(image).map(|o| o.glaucoma_prob);
        }
        self.require_phase(&[Phase::FullyTrained], "predict with")?;
        let mut g = Graph::new(&self.params);
        let x = g.input(self.input_tensor(image)?);
        let logit = self.residual_logit(&mut g, x)?;
        let p = g.sigmoid(logit);
        Ok(f64::from(g.value(p).data()[0]))
    }

    /// Disc map and glaucoma probability of the segmentation-guided stream.
    /// A seg-trained model yields a map, with probability 0.5 since its
    /// classification branch is untrained.
    pub fn predict_seg(&self, image: &ImageBuffer) -> Result<SegGuidedOutput> {
        if self.kind() != StreamKind::SegGuided {
            return Err(Error::State(format!("{} stream produces no disc map", self.kind())));
        }
        self.require_phase(&[Phase::SegTrained, Phase::FullyTrained], "predict with")?;
        let mut g = Graph::new(&self.params);
        let x = g.input(self.input_tensor(image)?);
        let levels = self.encoder(&mut g, x)?;
        let map_logit = self.decoder(&mut g, &levels)?;
        let map = g.sigmoid(map_logit);
        let glaucoma_prob = if self.phase == Phase::FullyTrained {
            let logit = self.aux_logit(&mut g, levels[self.config.depth])?;
            let p = g.sigmoid(logit);
            f64::from(g.value(p).data()[0])
        } else {
            0.5
        };
        Ok(SegGuidedOutput {
            disc_map: g.value(map).clone(),
            glaucoma_prob,
        })
    }

    /// Saddle feature map `[C, h, w]` of the segmentation-guided stream.
    pub fn saddle_features(&self, image: &ImageBuffer) -> Result<Tensor<f32>> {
        if self.kind() != StreamKind::SegGuided {
            return Err(Error::State(format!("{} stream has no saddle", self.kind())));
        }
        let mut g = Graph::new(&self.params);
        let x = g.input(self.input_tensor(image)?);
        let levels = self.encoder(&mut g, x)?;
        Ok(g.value(levels[self.config.depth]).clone())
    }

    /// Channel means of the saddle feature map.
    pub fn pooled_saddle(&self, image: &ImageBuffer) -> Result<Vec<f64>> {
        let s = self.saddle_features(image)?;
        let plane = s.len() / s.shape()[0];
        Ok(s.data()
            .chunks(plane)
            .map(|c| c.iter().map(|&v| f64::from(v)).sum::<f64>() / plane as f64)
            .collect())
    }

    /// Sets the branch standardization to the per-channel mean and standard
    /// deviation of `features` (rows of [`StreamModel::pooled_saddle`]).
    pub(crate) fn fit_aux_standardization(&mut self, features: &[Vec<f64>]) -> Result<()> {
        let c = self.config.saddle_channels();
        if features.is_empty() || features.iter().any(|f| f.len() != c) {
            return Err(Error::Dimension(format!("standardization needs rows of {c} saddle features")));
        }
        let n = features.len() as f64;
        let mut scale = Vec::with_capacity(c);
        let mut shift = Vec::with_capacity(c);
        for k in 0..c {
            let mean = features.iter().map(|f| f[k]).sum::<f64>() / n;
            let var = features.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / n;
            let a = 1.0 / (var + STANDARDIZE_EPS).sqrt();
            scale.push(a as f32);
            shift.push((-mean * a) as f32);
        }
        for (suffix, values) in [("scale", scale), ("shift", shift)] {
            let i = self.index[&format!("{AUX_NORM_PREFIX}{suffix}")];
            self.params[i].tensor.data_mut().copy_from_slice(&values);
        }
        Ok(())
    }

    /// Spatial shape of the saddle feature map, from a forward pass.
    pub fn saddle_shape(&self) -> Result<[usize; 3]> {
        if self.kind() != StreamKind::SegGuided {
            return Err(Error::State(format!("{} stream has no saddle", self.kind())));
        }
        let mut g = Graph::new(&self.params);
        let side = self.config.input_side;
        let x = g.input(Tensor::zeros(&[self.config.input_channels, side, side]));
        let levels = self.encoder(&mut g, x)?;
        let s = g.value(levels[self.config.depth]).shape();
        Ok([s[0], s[1], s[2]])
    }
}

fn is_conv_parameter(name: &str) -> bool {
    !(name.starts_with(AUX_PREFIX) || name.starts_with("fc."))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: StreamKind) -> StreamConfig {
        StreamConfig {
            input_side: 16,
            base_channels: 2,
            depth: 2,
            max_channels: 8,
            ..StreamConfig::desk(kind)
        }
    }

    fn image(side: usize) -> ImageBuffer {
        ImageBuffer::from_fn(side, side, 3, |u, v, c| ((u * 3 + v * 5 + c) % 17) as f32 / 17.0)
    }

    #[test]
    fn config_validation() {
        assert!(StreamConfig { input_side: 100, ..StreamConfig::desk(StreamKind::Global) }
            .validate()
            .is_err());
        assert!(StreamConfig { depth: 0, ..StreamConfig::desk(StreamKind::Global) }
            .validate()
            .is_err());
        assert!(build_residual_stream(StreamConfig::desk(StreamKind::SegGuided), 0).is_err());
        assert!(build_seg_guided(StreamConfig::desk(StreamKind::Disc), 0).is_err());
    }

    #[test]
    fn residual_shape_arithmetic() {
        assert_eq!(StreamConfig::desk(StreamKind::Global).saddle_side(), 2);
        assert_eq!(StreamConfig::full_scale(StreamKind::Polar).saddle_side(), 7);
    }

    #[test]
    fn saddle_shapes() {
        let full = StreamConfig::full_scale(StreamKind::SegGuided);
        assert_eq!((full.saddle_side(), full.saddle_channels()), (40, 512));
        let desk = build_seg_guided(StreamConfig::desk(StreamKind::SegGuided), 1).unwrap();
        let [_, h, w] = desk.saddle_shape().unwrap();
        assert_eq!((h, w), (8, 8));
    }

    #[test]
    fn predictions_need_training() {
        let m = build_residual_stream(tiny(StreamKind::Disc), 3).unwrap();
        assert!(matches!(m.predict_prob(&image(16)), Err(Error::State(_))));
        let s = build_seg_guided(tiny(StreamKind::SegGuided), 3).unwrap();
        assert!(matches!(s.predict_seg(&image(16)), Err(Error::State(_))));
    }

    #[test]
    fn outputs_are_probabilities_and_deterministic() {
        let mut m = build_residual_stream(tiny(StreamKind::Polar), 4).unwrap();
        m.phase = Phase::FullyTrained;
        let p = m.predict_prob(&image(20)).unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(p, m.predict_prob(&image(20)).unwrap());

        let mut s = build_seg_guided(tiny(StreamKind::SegGuided), 4).unwrap();
        s.phase = Phase::FullyTrained;
        let out = s.predict_seg(&image(16)).unwrap();
        assert_eq!(out.disc_map.shape(), &[1, 16, 16]);
        assert!(out.disc_map.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((0.0..=1.0).contains(&out.glaucoma_prob));
        assert_eq!(out, s.predict_seg(&image(16)).unwrap());
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build_seg_guided(tiny(StreamKind::SegGuided), 9).unwrap();
        let b = build_seg_guided(tiny(StreamKind::SegGuided), 9).unwrap();
        let c = build_seg_guided(tiny(StreamKind::SegGuided), 10).unwrap();
        assert_eq!(a.conv_digest(), b.conv_digest());
        assert_ne!(a.conv_digest(), c.conv_digest());
        assert!(a.parameter("aux.fc1.weight").is_some());
        assert!(!is_conv_parameter("aux.fc2.bias"));
    }
}
