use std::fmt::Write as _;
use std::path::Path;

use crate::ensemble::{evaluate_combinations, fuse_all, CombinationRow, FusionMode, StreamScores, StreamSubset};
use crate::error::{Error, Result};
use crate::localization::DiscLocation;
use crate::metrics::{auc, best_bacc_point, report_line, roc_curve, spe_at_sensitivity, OperatingPoint, RocCurve, ScreeningSummary};
use crate::stream::StreamKind;
use crate::tensor::Tensor;

use super::PipelineConfig;

/// Screening output for one image.
#[derive(Debug, Clone)]
pub struct ImageResult {
    pub scores: StreamScores,
    /// Fusion of the screened subset.
    pub fused: f64,
    pub location: Option<DiscLocation>,
    /// Disc probability map of the segmentation-guided stream.
    pub disc_map: Option<Tensor<f32>>,
}

/// One evaluated model: a single stream or a fused subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub name: String,
    pub curve: RocCurve,
    pub summary: ScreeningSummary,
    pub at_floor: OperatingPoint,
}

impl ModelEval {
    fn new(name: String, scores: &[f64], labels: &[bool], floor: f64) -> Result<Self> {
        let curve = roc_curve(scores, labels)?;
        Ok(Self {
            name,
            summary: ScreeningSummary {
                auc: auc(&curve),
                best: best_bacc_point(&curve),
            },
            at_floor: spe_at_sensitivity(&curve, floor)?,
            curve,
        })
    }
}

/// Metrics of an evaluation run.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub names: Vec<String>,
    pub labels: Vec<bool>,
    pub results: Vec<ImageResult>,
    /// Hard Dice of the disc map for every image with a mask.
    pub dice: Vec<f64>,
    pub sens_floor: f64,
    pub fusion: FusionMode,
    /// Four single streams followed by the configured ensemble.
    pub models: Vec<ModelEval>,
    pub combinations: Vec<CombinationRow>,
    /// All four streams fused with each operator.
    pub operators: Vec<(FusionMode, ScreeningSummary)>,
}

impl EvalReport {
    pub fn build(
        config: &PipelineConfig,
        names: Vec<String>,
        labels: Vec<bool>,
        results: Vec<ImageResult>,
        dice: Vec<f64>,
    ) -> Result<Self> {
        let pairs: Vec<(StreamScores, bool)> = results.iter().map(|r| r.scores).zip(labels.iter().copied()).collect();
        let floor = config.sens_floor;
        let mut models = Vec::with_capacity(5);
        for kind in StreamKind::ALL {
            let scores = fuse_all(&pairs, FusionMode::Average, StreamSubset::single(kind))?;
            models.push(ModelEval::new(kind.name().to_string(), &scores, &labels, floor)?);
        }
        let fused = fuse_all(&pairs, config.fusion, config.subset)?;
        models.push(ModelEval::new(
            format!("ensemble[{},{}]", config.fusion, config.subset),
            &fused,
            &labels,
            floor,
        )?);
        let operators = FusionMode::ALL
            .into_iter()
            .map(|mode| {
                let scores = fuse_all(&pairs, mode, StreamSubset::ALL)?;
                let curve = roc_curve(&scores, &labels)?;
                Ok((mode, ScreeningSummary { auc: auc(&curve), best: best_bacc_point(&curve) }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            combinations: evaluate_combinations(&pairs, config.fusion)?,
            names,
            labels,
            results,
            dice,
            sens_floor: floor,
            fusion: config.fusion,
            models,
            operators,
        })
    }

    pub fn stream(&self, kind: StreamKind) -> &ModelEval {
        &self.models[kind as usize]
    }

    pub fn ensemble(&self) -> &ModelEval {
        &self.models[4]
    }

    pub fn mean_dice(&self) -> Option<f64> {
        if self.dice.is_empty() {
            None
        } else {
            Some(self.dice.iter().sum::<f64>() / self.dice.len() as f64)
        }
    }

    pub fn report_text(&self) -> String {
        let positives = self.labels.iter().filter(|&&y| y).count();
        let mut out = format!(
            "images={}\tpositives={}\tnegatives={}\n\n# max balanced accuracy\n",
            self.labels.len(),
            positives,
            self.labels.len() - positives
        );
        for m in &self.models {
            out.push_str(&report_line(&m.name, &m.summary));
            out.push('\n');
        }
        let _ = writeln!(out, "\n# specificity at sensitivity >= {}", self.sens_floor);
        for m in &self.models {
            let p = &m.at_floor;
            let _ = writeln!(
                out,
                "{}\tsen={:.4}\tspe={:.4}\tbacc={:.4}",
                m.name, p.sensitivity, p.specificity, p.bacc
            );
        }
        out.push_str("\n# fusion operators over all streams\n");
        for (mode, s) in &self.operators {
            out.push_str(&report_line(mode.name(), s));
            out.push('\n');
        }
        if let Some(d) = self.mean_dice() {
            let _ = writeln!(out, "\n# disc segmentation\nmean_dice={d:.4}\tmasks={}", self.dice.len());
        }
        out
    }

    pub fn scores_tsv(&self) -> String {
        let mut out = String::from("image\tlabel");
        for kind in StreamKind::ALL {
            let _ = write!(out, "\t{kind}");
        }
        out.push_str("\tfused\tcenter_u\tcenter_v\tdiameter\tfallback\n");
        for ((name, &label), r) in self.names.iter().zip(&self.labels).zip(&self.results) {
            let _ = write!(out, "{name}\t{}", u8::from(label));
            for kind in StreamKind::ALL {
                match r.scores.get(kind) {
                    Some(p) => {
                        let _ = write!(out, "\t{p}");
                    }
                    None => out.push_str("\t-"),
                }
            }
            let _ = write!(out, "\t{}", r.fused);
            match r.location {
                Some(l) => {
                    let _ = write!(out, "\t{}\t{}\t{}\t{}", l.center_u, l.center_v, l.diameter, l.is_fallback());
                }
                None => out.push_str("\t-\t-\t-\t-"),
            }
            out.push('\n');
        }
        out
    }

    pub fn combinations_tsv(&self) -> String {
        let mut out = String::from("subset\tfusion\tauc\tbacc\tsen\tspe\n");
        let row = |out: &mut String, subset: &dyn std::fmt::Display, mode: FusionMode, s: &ScreeningSummary| {
            let _ = writeln!(
                out,
                "{subset}\t{mode}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                s.auc, s.best.bacc, s.best.sensitivity, s.best.specificity
            );
        };
        for c in &self.combinations {
            row(&mut out, &c.subset, self.fusion, &ScreeningSummary { auc: c.auc, best: c.best });
        }
        for (mode, s) in &self.operators {
            row(&mut out, &StreamSubset::ALL, *mode, s);
        }
        out
    }

    /// Writes `report.txt`, `scores.tsv`, `combinations.tsv` and one
    /// `roc_<model>.csv` per model.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        put("report.txt", self.report_text())?;
        put("scores.tsv", self.scores_tsv())?;
        put("combinations.tsv", self.combinations_tsv())?;
        for (i, m) in self.models.iter().enumerate() {
            let name = if i < 4 { m.name.clone() } else { "ensemble".to_string() };
            put(&format!("roc_{name}.csv"), m.curve.to_csv())?;
        }
        Ok(())
    }
}
