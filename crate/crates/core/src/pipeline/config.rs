//! Flat `key=value` pipeline configuration.
//!
//! ```text
//! # comment
//! seed=7
//! stream.global.input_side=64
//! train.disc.learning_rate=0.01
//! fusion.mode=average
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::StreamPrep;
use crate::ensemble::{FusionMode, StreamSubset};
use crate::error::{Error, Result};
use crate::networks::{StreamConfig, TrainOptions};
use crate::stream::StreamKind;
use crate::tensor::SgdConfig;

/// Training phases that carry their own optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKey {
    Segmentation,
    SegClassifier,
    Global,
    Disc,
    Polar,
}

impl PhaseKey {
    pub const ALL: [PhaseKey; 5] = [
        PhaseKey::Segmentation,
        PhaseKey::SegClassifier,
        PhaseKey::Global,
        PhaseKey::Disc,
        PhaseKey::Polar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhaseKey::Segmentation => "seg",
            PhaseKey::SegClassifier => "seg_cls",
            PhaseKey::Global => "global",
            PhaseKey::Disc => "disc",
            PhaseKey::Polar => "polar",
        }
    }

    pub fn for_classifier(kind: StreamKind) -> Self {
        match kind {
            StreamKind::Global => PhaseKey::Global,
            StreamKind::SegGuided => PhaseKey::SegClassifier,
            StreamKind::Disc => PhaseKey::Disc,
            StreamKind::Polar => PhaseKey::Polar,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Indexed by [`StreamKind::ALL`] order.
    pub streams: [StreamConfig; 4],
    /// Indexed by [`PhaseKey::ALL`] order.
    pub training: [TrainOptions; 5],
    pub augment: bool,
    pub prep: StreamPrep,
    pub fusion: FusionMode,
    pub subset: StreamSubset,
    pub sens_floor: f64,
    /// Classifier streams trained concurrently after localization.
    pub workers: usize,
    pub manifest: Option<PathBuf>,
    pub weights_dir: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let phase = |lr: f64, epochs: usize| TrainOptions {
            max_epochs: epochs,
            batch_size: 8,
            sgd: SgdConfig { learning_rate: lr, momentum: 0.9, decay: 0.9 },
            patience: 5,
            min_delta: 1e-3,
            max_grad_norm: Some(1.0),
            seed: 0,
        };
        Self {
            seed: 0,
            streams: StreamKind::ALL.map(StreamConfig::desk),
            training: [
                phase(0.05, 15),
                phase(0.05, 30),
                phase(0.02, 40),
                phase(0.02, 40),
                phase(0.02, 40),
            ],
            augment: true,
            prep: StreamPrep::default(),
            fusion: FusionMode::Average,
            subset: StreamSubset::ALL,
            sens_floor: 0.95,
            workers: 1,
            manifest: None,
            weights_dir: None,
            report_dir: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value '{value}' for `{key}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("invalid boolean '{value}' for `{key}`")),
    }
}

impl PipelineConfig {
    pub fn stream(&self, kind: StreamKind) -> &StreamConfig {
        &self.streams[kind as usize]
    }

    pub fn training(&self, phase: PhaseKey) -> &TrainOptions {
        &self.training[phase as usize]
    }

    pub fn training_mut(&mut self, phase: PhaseKey) -> &mut TrainOptions {
        &mut self.training[phase as usize]
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["seed"] => self.seed = parse_value(key, value)?,
            ["augment", "enabled"] => self.augment = parse_bool(key, value)?,
            ["prep", "crop_ratio"] => self.prep.crop_ratio = parse_value(key, value)?,
            ["prep", "polar_source_side"] => self.prep.polar_source_side = parse_value(key, value)?,
            ["prep", "polar_divisions"] => self.prep.polar_divisions = parse_value(key, value)?,
            ["prep", "drift_fraction"] => self.prep.drift_fraction = parse_value(key, value)?,
            ["fusion", "mode"] => self.fusion = value.parse().map_err(|e: Error| e.to_string())?,
            ["fusion", "subset"] => self.subset = value.parse().map_err(|e: Error| e.to_string())?,
            ["eval", "sens_floor"] => self.sens_floor = parse_value(key, value)?,
            ["train", "workers"] => self.workers = parse_value(key, value)?,
            ["paths", "manifest"] => self.manifest = Some(PathBuf::from(value)),
            ["paths", "weights"] => self.weights_dir = Some(PathBuf::from(value)),
            ["paths", "reports"] => self.report_dir = Some(PathBuf::from(value)),
            ["stream", name, field] => {
                let kind: StreamKind = name.parse().map_err(|e: Error| e.to_string())?;
                let s = &mut self.streams[kind as usize];
                match *field {
                    "input_side" => s.input_side = parse_value(key, value)?,
                    "base_channels" => s.base_channels = parse_value(key, value)?,
                    "depth" => s.depth = parse_value(key, value)?,
                    "max_channels" => s.max_channels = parse_value(key, value)?,
                    "channel_affine" => s.channel_affine = parse_bool(key, value)?,
                    "input_channels" => s.input_channels = parse_value(key, value)?,
                    _ => return Err(format!("unknown key `{key}`")),
                }
            }
            ["train", name, field] => {
                let phase = PhaseKey::ALL
                    .into_iter()
                    .find(|p| p.name() == *name)
                    .ok_or_else(|| format!("unknown training phase '{name}' in `{key}`"))?;
                let t = self.training_mut(phase);
                match *field {
                    "epochs" => t.max_epochs = parse_value(key, value)?,
                    "batch_size" => t.batch_size = parse_value(key, value)?,
                    "learning_rate" => t.sgd.learning_rate = parse_value(key, value)?,
                    "momentum" => t.sgd.momentum = parse_value(key, value)?,
                    "decay" => t.sgd.decay = parse_value(key, value)?,
                    "patience" => t.patience = parse_value(key, value)?,
                    "min_delta" => t.min_delta = parse_value(key, value)?,
                    "max_grad_norm" => {
                        t.max_grad_norm = match value {
                            "none" | "off" => None,
                            _ => Some(parse_value(key, value)?),
                        }
                    }
                    _ => return Err(format!("unknown key `{key}`")),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text` on top of the defaults.
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: source.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found '{line}'")))?;
            config.set(key.trim(), value.trim()).map_err(err)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Checks every module's preconditions.
    pub fn validate(&self) -> Result<()> {
        let config_err = |e: Error| Error::Config(e.to_string());
        for (kind, s) in StreamKind::ALL.iter().zip(&self.streams) {
            if s.kind != *kind {
                return Err(Error::Config(format!("stream slot {kind} holds a {} config", s.kind)));
            }
            s.validate().map_err(config_err)?;
        }
        for t in &self.training {
            t.validate().map_err(config_err)?;
        }
        self.prep.validate().map_err(config_err)?;
        if !(self.sens_floor > 0.0 && self.sens_floor <= 1.0) {
            return Err(Error::Config(format!(
                "sensitivity floor must lie in (0, 1], got {}",
                self.sens_floor
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        Ok(())
    }

    /// Training options for `phase` with its shuffling seed derived from
    /// the pipeline seed.
    pub fn phase_options(&self, phase: PhaseKey) -> TrainOptions {
        TrainOptions {
            seed: self.seed.wrapping_mul(31).wrapping_add(phase as u64 + 1),
            ..*self.training(phase)
        }
    }

    /// Initialization seed of a stream's parameters.
    pub fn init_seed(&self, kind: StreamKind) -> u64 {
        self.seed.wrapping_mul(17).wrapping_add(kind as u64 + 101)
    }
}
