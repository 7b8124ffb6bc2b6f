//! Refinement of coarse corrosion-detection masks.
//!
//! A coarse mask is split into connected regions. Each region is eroded into
//! a high-confidence core and dilated into an uncertain band; a marker-based
//! watershed over the color gradient segments core and band together, and
//! every segment that touches the core is kept. The result follows color
//! edges instead of the blocky contour of the input.
//!
//! [`metrics`] scores masks against ground truth and [`synth`] produces
//! synthetic scenes with exact truth for testing the whole chain.

pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod projection;
pub mod raster;
pub mod region;
pub mod synth;
pub mod watershed;

pub use metrics::{
    aggregate, evaluate, split_dataset, AggregateReport, GroundTruthMask, MetricsReport,
};
pub use morphology::{dilate, erode, make_se, SeShape, StructuringElement};
pub use pipeline::{refine, RefineParams, Refinement};
pub use projection::{assemble_final_mask, project_segments, RefinedRegion};
pub use raster::{
    load_image, load_mask, render_overlay, save_image, save_mask, BinaryMask, OverlaySpec,
    PixelCoord, RasterError, RgbImage, ZoneKind,
};
pub use region::{extract_regions, partition_region, Region, RegionPartition, RegionSet};
pub use synth::{
    baseline_detect, degrade_mask, synth_generate, DegradeSpec, HsvThresholds, SynthSpec,
};
pub use watershed::{
    color_gradient, find_markers, segment_extended_region, watershed_flood, GradientField,
    SegmentMap,
};
