//! Fusion of per-stream probabilities into one screening score, and the
//! evaluation of every stream combination.
//!
//! Fusion is unweighted by design: averaging is the default operator, and
//! `max`, `min` and `multiply` are provided for comparison.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{auc, best_bacc_point, roc_curve, OperatingPoint};
use crate::stream::StreamKind;

/// Per-image stream probabilities; absent streams are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StreamScores([Option<f64>; 4]);

impl StreamScores {
    pub fn new(global: Option<f64>, seg: Option<f64>, disc: Option<f64>, polar: Option<f64>) -> Result<Self> {
        let scores = [global, seg, disc, polar];
        if scores.iter().all(Option::is_none) {
            return Err(Error::Input("at least one stream score is required".into()));
        }
        if let Some(p) = scores.iter().flatten().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Input(format!("stream probability {p} outside [0, 1]")));
        }
        Ok(Self(scores))
    }

    /// All four streams present, in [`StreamKind::ALL`] order.
    pub fn complete(probs: [f64; 4]) -> Result<Self> {
        Self::new(Some(probs[0]), Some(probs[1]), Some(probs[2]), Some(probs[3]))
    }

    pub fn get(&self, kind: StreamKind) -> Option<f64> {
        self.0[kind.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionMode {
    #[default]
    Average,
    Max,
    Min,
    Multiply,
}

impl FusionMode {
    pub const ALL: [FusionMode; 4] = [
        FusionMode::Average,
        FusionMode::Max,
        FusionMode::Min,
        FusionMode::Multiply,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FusionMode::Average => "average",
            FusionMode::Max => "max",
            FusionMode::Min => "min",
            FusionMode::Multiply => "multiply",
        }
    }

    fn apply(self, values: impl Iterator<Item = f64>) -> f64 {
        match self {
            FusionMode::Average => {
                let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                sum / n as f64
            }
            FusionMode::Max => values.fold(f64::NEG_INFINITY, f64::max),
            FusionMode::Min => values.fold(f64::INFINITY, f64::min),
            FusionMode::Multiply => values.product(),
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "average" | "mean" => Ok(FusionMode::Average),
            "max" => Ok(FusionMode::Max),
            "min" => Ok(FusionMode::Min),
            "multiply" | "product" => Ok(FusionMode::Multiply),
            other => Err(Error::Parameter(format!("unknown fusion mode '{other}'"))),
        }
    }
}

/// A non-empty set of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSubset(u8);

impl StreamSubset {
    pub const ALL: StreamSubset = StreamSubset(0b1111);

    pub fn new(kinds: &[StreamKind]) -> Result<Self> {
        let bits = kinds.iter().fold(0u8, |b, k| b | 1 << k.index());
        if bits == 0 {
            return Err(Error::Parameter("stream subset must not be empty".into()));
        }
        Ok(Self(bits))
    }

    pub fn single(kind: StreamKind) -> Self {
        Self(1 << kind.index())
    }

    pub fn contains(self, kind: StreamKind) -> bool {
        self.0 & (1 << kind.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn kinds(self) -> impl Iterator<Item = StreamKind> {
        StreamKind::ALL.into_iter().filter(move |&k| self.contains(k))
    }

    /// The 15 non-empty subsets, singletons first, then pairs, triples and
    /// the full ensemble.
    pub fn all_nonempty() -> Vec<StreamSubset> {
        let mut subsets: Vec<_> = (1u8..16).map(StreamSubset).collect();
        subsets.sort_by_key(|s| (s.len(), std::cmp::Reverse(s.0.reverse_bits())));
        subsets
    }
}

impl fmt::Display for StreamSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.kinds().map(StreamKind::name).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for StreamSubset {
    type Err = Error;

    /// `all`, or stream names joined by `+` or `,`.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        let kinds = s
            .split(['+', ','])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<StreamKind>>>()?;
        Self::new(&kinds)
    }
}

/// Combines the selected stream scores with `mode`.
pub fn fuse(scores: &StreamScores, mode: FusionMode, subset: StreamSubset) -> Result<f64> {
    let values = subset
        .kinds()
        .map(|k| {
            scores
                .get(k)
                .ok_or_else(|| Error::Input(format!("score for stream '{k}' is missing")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mode.apply(values.into_iter()))
}

pub fn fuse_all(images: &[(StreamScores, bool)], mode: FusionMode, subset: StreamSubset) -> Result<Vec<f64>> {
    images.iter().map(|(s, _)| fuse(s, mode, subset)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinationRow {
    pub subset: StreamSubset,
    pub auc: f64,
    pub best: OperatingPoint,
}

/// AUC and best balanced-accuracy point for each of the 15 subsets.
pub fn evaluate_combinations(images: &[(StreamScores, bool)], mode: FusionMode) -> Result<Vec<CombinationRow>> {
    let labels: Vec<bool> = images.iter().map(|(_, y)| *y).collect();
    StreamSubset::all_nonempty()
        .into_iter()
        .map(|subset| {
            let fused = fuse_all(images, mode, subset)?;
            let curve = roc_curve(&fused, &labels)?;
            Ok(CombinationRow {
                subset,
                auc: auc(&curve),
                best: best_bacc_point(&curve),
            })
        })
        .collect()
}
