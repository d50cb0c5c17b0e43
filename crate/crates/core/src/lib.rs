//! Four-stream glaucoma screening on fundus images.
//!
//! The crate trains and evaluates an ensemble of four classifiers:
//!
//! * a residual classifier over the whole (resized) fundus image,
//! * a U-shape disc segmentation network with a classification branch
//!   attached to its bottleneck,
//! * a residual classifier over the optic-disc crop,
//! * the same classifier over the polar resampling of the disc crop.
//!
//! Their probabilities are fused (average by default) into one screening
//! score and evaluated with ROC/AUC and balanced-accuracy operating points.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod localization;
pub mod losses;
pub mod metrics;
pub mod networks;
pub mod pipeline;
pub mod stream;
pub mod tensor;

pub use error::{Error, Result};
pub use stream::StreamKind;
