//! Segmentation of handwritten and printed text images.
//!
//! Two strategies are provided. Static segmentation dissects a page purely
//! from row and column ink projections. Dynamic segmentation over-segments a
//! line into narrow slices and lets a trained network decide where each
//! character ends, confirming each boundary against reference templates.

// `!(x >= lo)` is how range checks here reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod dynamic_seg;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod mlp;
pub mod pnm;
pub mod preprocess;
pub mod raster;
pub mod similarity;
pub mod static_seg;

pub use error::{Error, Result};
pub use raster::{BinaryImage, GrayImage, Rect};
