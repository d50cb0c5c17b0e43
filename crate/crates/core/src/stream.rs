use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The four screening streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    /// Residual classifier over the whole fundus image.
    Global,
    /// U-shape disc segmentation network with a classification branch.
    SegGuided,
    /// Residual classifier over the disc crop.
    Disc,
    /// Residual classifier over the polar-resampled disc crop.
    Polar,
}

impl StreamKind {
    pub const ALL: [StreamKind; 4] = [
        StreamKind::Global,
        StreamKind::SegGuided,
        StreamKind::Disc,
        StreamKind::Polar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Global => "global",
            StreamKind::SegGuided => "seg_guided",
            StreamKind::Disc => "disc",
            StreamKind::Polar => "polar",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StreamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "global" | "image" => Ok(StreamKind::Global),
            "seg_guided" | "seg" => Ok(StreamKind::SegGuided),
            "disc" => Ok(StreamKind::Disc),
            "polar" => Ok(StreamKind::Polar),
            other => Err(Error::Parameter(format!("unknown stream '{other}'"))),
        }
    }
}
