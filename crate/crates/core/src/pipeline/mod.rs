//! End-to-end commands: dataset generation, training of all four streams,
//! screening, evaluation, and inspection helpers.
//!
//! File layout of a weights directory: one `<stream>.weights` file per
//! stream plus `training_log.tsv`. An evaluation writes `report.txt`,
//! `scores.tsv`, `combinations.tsv` and one `roc_<model>.csv` per model.

mod config;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{PhaseKey, PipelineConfig};
pub use report::{EvalReport, ImageResult};

use crate::data::{
    augment_for_stream, augmentation_rng, generate_sample, prepare_for_stream, write_ppm, DatasetManifest,
    ManifestRecord, StreamSample, SyntheticSpec,
};
use crate::ensemble::{fuse, StreamScores, StreamSubset};
use crate::error::{Error, Result};
use crate::geometry::{inverse_polar_transform, polar_transform, resize, ImageBuffer, PolarParams};
use crate::localization::{locate_disc_scaled, DiscLocation};
use crate::networks::{build_stream, SegGuidedOutput, StreamModel, TrainReport};
use crate::stream::StreamKind;
use crate::tensor::Tensor;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn weights_path(dir: &Path, kind: StreamKind) -> PathBuf {
    dir.join(format!("{kind}.weights"))
}

/// Written next to a generated manifest: true disc geometry per image.
pub const DISC_TRUTH_FILE: &str = "discs.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub manifest: PathBuf,
    pub positives: usize,
    pub negatives: usize,
}

/// Writes `count` synthetic images, their disc masks, `manifest.tsv` and
/// [`DISC_TRUTH_FILE`] under `out_dir`.
pub fn cmd_generate(spec: &SyntheticSpec, count: usize, out_dir: &Path) -> Result<GenerateSummary> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::Parameter("sample count must be positive".into()));
    }
    create_dir(&out_dir.join("images"))?;
    create_dir(&out_dir.join("masks"))?;
    let mut records = Vec::with_capacity(count);
    let mut truth = String::from("image\tlabel\tcenter_u\tcenter_v\tradius\tcdr\n");
    for i in 0..count {
        let s = generate_sample(spec, i)?;
        let image = PathBuf::from(format!("images/{i:05}.ppm"));
        let mask = PathBuf::from(format!("masks/{i:05}.ppm"));
        write_ppm(out_dir.join(&image), &s.image)?;
        write_ppm(out_dir.join(&mask), &s.mask)?;
        let _ = writeln!(
            truth,
            "{}\t{}\t{}\t{}\t{}\t{}",
            image.display(),
            u8::from(s.label),
            s.disc_center.0,
            s.disc_center.1,
            s.disc_radius,
            s.cdr
        );
        records.push(ManifestRecord {
            image_path: image,
            label: s.label,
            mask_path: Some(mask),
        });
    }
    let manifest = DatasetManifest::new(out_dir, records);
    let path = out_dir.join("manifest.tsv");
    manifest.save(&path)?;
    write_file(&out_dir.join(DISC_TRUTH_FILE), truth)?;
    Ok(GenerateSummary {
        manifest: path,
        positives: manifest.positives(),
        negatives: manifest.negatives(),
    })
}

/// A manifest with its images (and masks, where listed) in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub images: Vec<ImageBuffer>,
    pub masks: Vec<Option<ImageBuffer>>,
}

impl Dataset {
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let mut images = Vec::with_capacity(manifest.len());
        let mut masks = Vec::with_capacity(manifest.len());
        for i in 0..manifest.len() {
            let image = manifest.load_image(i)?;
            masks.push(manifest.load_mask(i, &image)?);
            images.push(image);
        }
        Ok(Self { manifest, images, masks })
    }

    pub fn labels(&self) -> Vec<bool> {
        self.manifest.labels()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Up to four trained streams.
#[derive(Debug, Clone, Default)]
pub struct Ensemble {
    models: [Option<StreamModel>; 4],
}

impl Ensemble {
    pub fn get(&self, kind: StreamKind) -> Option<&StreamModel> {
        self.models[kind as usize].as_ref()
    }

    pub fn insert(&mut self, model: StreamModel) {
        let k = model.kind() as usize;
        self.models[k] = Some(model);
    }

    fn require(&self, kind: StreamKind) -> Result<&StreamModel> {
        self.get(kind)
            .ok_or_else(|| Error::State(format!("no weights loaded for the {kind} stream")))
    }

    /// Loads the weights of every stream in `subset`, plus the
    /// segmentation-guided stream when disc or polar streams need a disc
    /// location.
    pub fn load(dir: &Path, subset: StreamSubset) -> Result<Self> {
        let mut ensemble = Self::default();
        let needs_seg = subset.contains(StreamKind::Disc) || subset.contains(StreamKind::Polar);
        for kind in StreamKind::ALL {
            if subset.contains(kind) || (kind == StreamKind::SegGuided && needs_seg) {
                let model = StreamModel::load(weights_path(dir, kind))?;
                if model.kind() != kind {
                    return Err(Error::Format(format!(
                        "{} holds a {} model",
                        weights_path(dir, kind).display(),
                        model.kind()
                    )));
                }
                ensemble.insert(model);
            }
        }
        Ok(ensemble)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        for model in self.models.iter().flatten() {
            model.save(weights_path(dir, model.kind()))?;
        }
        Ok(())
    }

    /// Disc map of the segmentation-guided stream and the disc location in
    /// original-image coordinates (the image centre when nothing is found).
    pub fn localize(&self, image: &ImageBuffer) -> Result<(SegGuidedOutput, DiscLocation)> {
        let seg = self.require(StreamKind::SegGuided)?;
        let out = seg.predict_seg(image)?;
        let side = seg.config().input_side as f64;
        let (su, sv) = (image.width() as f64 / side, image.height() as f64 / side);
        let loc = match locate_disc_scaled(&out.disc_map, su, sv) {
            Err(Error::NoDiscFound) => DiscLocation::fallback(image.width(), image.height()),
            other => other?,
        };
        Ok((out, loc))
    }

    /// Stream probabilities for `subset` on one image.
    pub fn screen(&self, image: &ImageBuffer, config: &PipelineConfig, subset: StreamSubset) -> Result<ImageResult> {
        let needs_loc = subset.contains(StreamKind::SegGuided)
            || subset.contains(StreamKind::Disc)
            || subset.contains(StreamKind::Polar);
        let (seg, location) = if needs_loc {
            let (out, loc) = self.localize(image)?;
            (Some(out), Some(loc))
        } else {
            (None, None)
        };
        let sample = StreamSample { image: image.clone(), mask: None, location };
        let mut probs: [Option<f64>; 4] = [None; 4];
        for kind in subset.kinds() {
            probs[kind as usize] = Some(match kind {
                StreamKind::SegGuided => seg.as_ref().expect("localized").glaucoma_prob,
                _ => {
                    let input = prepare_for_stream(&sample, kind, &config.prep)?;
                    self.require(kind)?.predict_prob(&input.image)?
                }
            });
        }
        let scores = StreamScores::new(probs[0], probs[1], probs[2], probs[3])?;
        Ok(ImageResult {
            scores,
            fused: fuse(&scores, config.fusion, subset)?,
            location,
            disc_map: seg.map(|s| s.disc_map),
        })
    }
}

/// Trained models plus everything logged along the way.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub ensemble: Ensemble,
    pub reports: Vec<TrainReport>,
    pub train_locations: Vec<DiscLocation>,
    /// Convolution digest of the segmentation-guided network before and
    /// after its classification phase.
    pub seg_conv_digests: (String, String),
}

impl TrainOutcome {
    /// `stream, phase, epoch, loss, learning_rate` rows.
    pub fn log_tsv(&self) -> String {
        let mut out = String::from("stream\tphase\tepoch\tloss\tlearning_rate\n");
        for r in &self.reports {
            for e in &r.epochs {
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.stream, r.phase, e.epoch, e.loss, e.learning_rate);
            }
        }
        out
    }
}

fn train_classifier(
    config: &PipelineConfig,
    data: &Dataset,
    kind: StreamKind,
    locations: &[DiscLocation],
) -> Result<(StreamModel, TrainReport)> {
    let mut model = build_stream(*config.stream(kind), config.init_seed(kind))?;
    let labels = data.labels();
    let report = model.train_classifier_phase(data.len(), &config.phase_options(PhaseKey::for_classifier(kind)), |epoch, i| {
        let sample = StreamSample {
            image: data.images[i].clone(),
            mask: None,
            location: Some(locations[i]),
        };
        let input = if config.augment {
            augment_for_stream(&sample, kind, &config.prep, &mut augmentation_rng(config.seed, kind, epoch, i))?
        } else {
            prepare_for_stream(&sample, kind, &config.prep)?
        };
        Ok((input.image, labels[i]))
    })?;
    Ok((model, report))
}

/// Trains the four streams: the segmentation-guided network first (Dice,
/// then its classification branch), then disc localization on the training
/// images, then the global, disc and polar classifiers.
pub fn train_ensemble(config: &PipelineConfig, data: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let (pos, neg) = (data.manifest.positives(), data.manifest.negatives());
    if pos == 0 || neg == 0 {
        return Err(Error::Config(format!(
            "training needs both classes, manifest has {pos} positive and {neg} negative records"
        )));
    }
    let with_masks: Vec<usize> = (0..data.len()).filter(|&i| data.masks[i].is_some()).collect();
    if with_masks.is_empty() {
        return Err(Error::Config(
            "segmentation phase needs disc masks, the manifest lists none".into(),
        ));
    }

    let kind = StreamKind::SegGuided;
    let mut seg = build_stream(*config.stream(kind), config.init_seed(kind))?;
    let mut reports = Vec::new();
    reports.push(seg.train_segmentation_phase(
        with_masks.len(),
        &config.phase_options(PhaseKey::Segmentation),
        |epoch, j| {
            let i = with_masks[j];
            let sample = StreamSample {
                image: data.images[i].clone(),
                mask: data.masks[i].clone(),
                location: None,
            };
            let out = if config.augment {
                augment_for_stream(&sample, kind, &config.prep, &mut augmentation_rng(config.seed, kind, epoch, i))?
            } else {
                sample
            };
            Ok((out.image, out.mask.expect("mask kept")))
        },
    )?);
    let labels = data.labels();
    let digest_before = seg.conv_digest();
    reports.push(seg.train_classifier_phase(
        data.len(),
        &config.phase_options(PhaseKey::SegClassifier),
        |epoch, i| {
            let image = if config.augment {
                let sample = StreamSample { image: data.images[i].clone(), mask: None, location: None };
                let mut rng = augmentation_rng(config.seed ^ 0x5eed, kind, epoch, i);
                augment_for_stream(&sample, kind, &config.prep, &mut rng)?.image
            } else {
                data.images[i].clone()
            };
            Ok((image, labels[i]))
        },
    )?);
    let seg_conv_digests = (digest_before, seg.conv_digest());
    let mut ensemble = Ensemble::default();
    ensemble.insert(seg);

    let train_locations = data
        .images
        .iter()
        .map(|img| ensemble.localize(img).map(|(_, loc)| loc))
        .collect::<Result<Vec<_>>>()?;

    let kinds = [StreamKind::Global, StreamKind::Disc, StreamKind::Polar];
    let mut trained = Vec::with_capacity(kinds.len());
    let locations = &train_locations;
    for chunk in kinds.chunks(config.workers) {
        let results: Vec<Result<(StreamModel, TrainReport)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&k| scope.spawn(move || train_classifier(config, data, k, locations)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::State("training thread panicked".into()))))
                .collect()
        });
        for r in results {
            trained.push(r?);
        }
    }
    for (model, report) in trained {
        ensemble.insert(model);
        reports.push(report);
    }
    Ok(TrainOutcome {
        ensemble,
        reports,
        train_locations,
        seg_conv_digests,
    })
}

/// Trains on `manifest` and writes the weights and `training_log.tsv` to
/// `weights_dir`.
pub fn cmd_train(config: &PipelineConfig, manifest: &Path, weights_dir: &Path) -> Result<TrainOutcome> {
    let data = Dataset::load(manifest)?;
    let outcome = train_ensemble(config, &data)?;
    outcome.ensemble.save(weights_dir)?;
    write_file(&weights_dir.join("training_log.tsv"), outcome.log_tsv())?;
    Ok(outcome)
}

/// One-line screening report for a single image.
pub fn cmd_screen(config: &PipelineConfig, weights_dir: &Path, image_path: &Path) -> Result<String> {
    let ensemble = Ensemble::load(weights_dir, config.subset)?;
    let image = crate::data::read_ppm(image_path)?;
    let r = ensemble.screen(&image, config, config.subset)?;
    let mut line = format!("image={}", image_path.display());
    if let Some(loc) = r.location {
        let _ = write!(
            line,
            "\tdisc_center=({:.2},{:.2})\tdiameter={:.2}\tconfidence={:.4}",
            loc.center_u, loc.center_v, loc.diameter, loc.confidence
        );
        if loc.is_fallback() {
            line.push_str("\tdisc=fallback");
        }
    }
    for kind in StreamKind::ALL {
        if let Some(p) = r.scores.get(kind) {
            let _ = write!(line, "\t{kind}={p:.4}");
        }
    }
    let _ = write!(line, "\tfused({},{})={:.4}", config.fusion, config.subset, r.fused);
    Ok(line)
}

/// Disc location of one image as a report line.
pub fn cmd_localize(weights_dir: &Path, image_path: &Path) -> Result<String> {
    let ensemble = Ensemble::load(weights_dir, StreamSubset::single(StreamKind::SegGuided))?;
    let image = crate::data::read_ppm(image_path)?;
    let (_, loc) = ensemble.localize(&image)?;
    let mut line = format!(
        "image={}\tcenter_u={:.2}\tcenter_v={:.2}\tdiameter={:.2}\tconfidence={:.4}",
        image_path.display(),
        loc.center_u,
        loc.center_v,
        loc.diameter,
        loc.confidence
    );
    if loc.is_fallback() {
        line.push_str("\tfallback=true");
    }
    Ok(line)
}

/// Scores every image of `manifest` with all four streams and writes the
/// evaluation files to `report_dir`.
pub fn cmd_eval(config: &PipelineConfig, weights_dir: &Path, manifest: &Path, report_dir: &Path) -> Result<EvalReport> {
    config.validate()?;
    let data = Dataset::load(manifest)?;
    let ensemble = Ensemble::load(weights_dir, StreamSubset::ALL)?;
    let report = evaluate(config, &ensemble, &data)?;
    report.write(report_dir)?;
    Ok(report)
}

/// Evaluation of a loaded ensemble on an in-memory dataset.
pub fn evaluate(config: &PipelineConfig, ensemble: &Ensemble, data: &Dataset) -> Result<EvalReport> {
    let mut results = Vec::with_capacity(data.len());
    let mut dice = Vec::new();
    for (i, image) in data.images.iter().enumerate() {
        let mut r = ensemble.screen(image, config, StreamSubset::ALL)?;
        if let (Some(mask), Some(map)) = (&data.masks[i], r.disc_map.take()) {
            dice.push(hard_dice(&map, mask)?);
        }
        results.push(r);
    }
    let names = data
        .manifest
        .records()
        .iter()
        .map(|r| r.image_path.display().to_string())
        .collect();
    EvalReport::build(config, names, data.labels(), results, dice)
}

/// Dice overlap between the thresholded map and the mask resampled to the
/// map's size.
fn hard_dice(map: &Tensor<f32>, mask: &ImageBuffer) -> Result<f64> {
    let side = map.shape()[map.shape().len() - 1];
    let rows = map.len() / side;
    let truth = resize(mask, side, rows)?;
    let (mut inter, mut total) = (0usize, 0usize);
    for (&p, &g) in map.data().iter().zip(truth.pixels()) {
        let (p, g) = (p >= 0.5, g >= 0.5);
        inter += usize::from(p && g);
        total += usize::from(p) + usize::from(g);
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Options of the `transform` command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    pub inverse: bool,
    /// Defaults to the image centre.
    pub center: Option<(f64, f64)>,
    /// Defaults to half the shorter side.
    pub radius: Option<f64>,
    pub divisions: usize,
    pub angle_offset: f64,
    /// Output side of an inverse transform; defaults to `2R`.
    pub output_side: Option<usize>,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            inverse: false,
            center: None,
            radius: None,
            divisions: 256,
            angle_offset: 0.0,
            output_side: None,
        }
    }
}

/// Polar (or inverse polar) resampling of a PPM image.
pub fn cmd_transform(input: &Path, output: &Path, opts: &TransformOptions) -> Result<(usize, usize)> {
    let image = crate::data::read_ppm(input)?;
    let out = if opts.inverse {
        let radius = opts.radius.unwrap_or(image.height() as f64);
        let side = opts.output_side.unwrap_or((2.0 * radius).round() as usize);
        let c = (side as f64 - 1.0) / 2.0;
        let (cu, cv) = opts.center.unwrap_or((c, c));
        let params = PolarParams {
            angle_offset: opts.angle_offset,
            ..PolarParams::new(cu, cv, radius, image.width())
        };
        inverse_polar_transform(&image, &params, side, side)?
    } else {
        let (w, h) = (image.width() as f64, image.height() as f64);
        let (cu, cv) = opts.center.unwrap_or(((w - 1.0) / 2.0, (h - 1.0) / 2.0));
        let radius = opts.radius.unwrap_or(w.min(h) / 2.0);
        let params = PolarParams {
            angle_offset: opts.angle_offset,
            ..PolarParams::new(cu, cv, radius, opts.divisions)
        };
        polar_transform(&image, &params)?
    };
    write_ppm(output, &out)?;
    Ok((out.width(), out.height()))
}
