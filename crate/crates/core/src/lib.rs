//! Lumen and media–adventitia segmentation of 20 MHz IVUS B-mode frames.
//!
//! The pipeline runs in four fixed stages: artifact removal ([`preprocess`]),
//! extraction of nested dark-core extremal regions from a min-tree
//! ([`tree`], [`erel`]), texture-stability selection of a lumen and a media
//! region ([`selection`]), and ellipse fitting from second central moments
//! ([`geometry`]). [`metrics`] scores the result against annotated contours
//! and [`phantom`] produces synthetic frames with known geometry.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! batch orchestration live in the `ivus` companion crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod erel;
pub mod error;
pub mod geometry;
pub mod gradient;
pub mod imaging;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod selection;
pub mod tree;

mod stats;

pub use error::{Error, Result};
pub use geometry::Ellipse;
pub use imaging::{Contour, Frame, Mask, Point, Sequence};
pub use pipeline::{segment_frame, Segmentation, SegmentParams};
