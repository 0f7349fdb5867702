//! calscan: landmark detection and angle measurement for lateral calcaneus
//! radiographs.
//!
//! The pipeline stages are:
//!
//! 1. **Imaging** – gray raster container, similarity transforms, bilinear
//!    resampling, CLAHE.
//! 2. **Descriptor** – SIFT descriptors for explicitly placed patches and
//!    dominant-gradient orientation.
//! 3. **Regressor** – epsilon-insensitive support vector regression (SMO).
//! 4. **RIRV** – four-stage coarse-to-fine rotation-invariant regression voting
//!    with half-path double voting and kernel-density vote aggregation.
//! 5. **Angles** – Bohler's angle and the critical angle of Gissane.
//! 6. **ROI** – landmark-driven region normalization for downstream fracture
//!    analysis.
//! 7. **Metrics** – radial errors, SDR, angle MAE, precision/recall/F1, IoU.
//! 8. **Synthdata** – deterministic synthetic radiographs with known landmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod cli;
pub mod descriptor;
pub mod error;
pub mod evaluate;
pub mod formats;
pub mod imaging;
pub mod metrics;
pub mod rirv;
pub mod roi;
pub mod svr;
pub mod synth;

pub use error::{Error, Result};
pub use imaging::{GrayImage, Point2, Similarity2};
pub use rirv::{LandmarkSet, RirvModel, Vec2};
