//! Streak-debris tracking toolkit.
//!
//! Generates annotated synthetic videos of streak-shaped debris moving
//! over astronomical backgrounds, decodes endpoint heatmaps and embedding
//! maps into per-frame detections, associates detections across frames
//! through predicted endpoint offsets, and scores trajectories with
//! standard multi-object-tracking metrics (MOTA, IDF1, IDS, HOTA, DetA,
//! AssA). Training objectives are included as verified pure numeric
//! reference functions with analytic gradients.
//!
//! Pipeline stages:
//!
//! 1. **zscale** – intensity normalization of raw sky frames.
//! 2. **sim** – debris sampling, motion, rasterization, PSF, fracture.
//! 3. **io** – on-disk dataset layout, CSV ground truth, tensor maps.
//! 4. **decode** – heatmap rendering, peak extraction, endpoint pairing,
//!    and the noise-configurable oracle detector.
//! 5. **tracker** – offset-based nearest-neighbor association and track
//!    lifecycle.
//! 6. **losses** – reference objectives with gradient checking.
//! 7. **metrics** – CLEAR/identity/HOTA evaluation and reports.

pub mod assign;
pub mod dataset;
pub mod decode;
pub mod domain;
pub mod error;
pub mod grid;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod sim;
pub mod tracker;
pub mod zscale;

pub use domain::{
    bbox_from_state, endpoints_from_state, AnnotatedObject, Bbox, DebrisState, Detection,
    EndpointPair, Point, SequenceAnnotation, Track,
};
pub use error::{Error, Result};
pub use grid::Grid2D;
