//! End-to-end refinement of a coarse detection mask.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::projection::{project_segments, MaskAccumulator};
use crate::raster::{BinaryMask, RgbImage};
use crate::region::{extract_regions, partition_region, BoundingBox};
use crate::watershed::{segment_extended_region_with, WatershedOptions};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("image is {image:?} but mask is {mask:?}")]
    DimensionMismatch {
        image: (usize, usize),
        mask: (usize, usize),
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineParams {
    pub erosion_radius: usize,
    pub dilation_radius: usize,
    pub smooth_gradient: bool,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            erosion_radius: 3,
            dilation_radius: 3,
            smooth_gradient: true,
        }
    }
}

/// Per-region outcome. `segments` and `accepted` are 0 for degenerate
/// regions, which pass through unrefined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegionSummary {
    pub id: u32,
    pub pixels: usize,
    pub bbox: BoundingBox,
    pub degenerate: bool,
    pub true_foreground: usize,
    pub extended_fuzzy: usize,
    pub segments: u32,
    pub accepted: u32,
    pub final_pixels: usize,
}

/// Wall-clock time spent per stage, summed over regions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageTimings {
    pub extract: Duration,
    pub partition: Duration,
    pub watershed: Duration,
    pub projection: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub mask: BinaryMask,
    pub regions: Vec<RegionSummary>,
    pub timings: StageTimings,
}

impl Refinement {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }
}

/// Regions → partitions → color segments → projection → union.
///
/// Regions are processed one at a time and merged straight into the output
/// so peak memory is bounded by the largest region window.
pub fn refine(
    image: &RgbImage,
    coarse: &BinaryMask,
    params: &RefineParams,
) -> Result<Refinement, RefineError> {
    if image.dims() != coarse.dims() {
        return Err(RefineError::DimensionMismatch {
            image: image.dims(),
            mask: coarse.dims(),
        });
    }
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let set = extract_regions(coarse);
    timings.extract = t.elapsed();

    let options = WatershedOptions {
        smooth_gradient: params.smooth_gradient,
    };
    let mut acc = MaskAccumulator::new(set.width, set.height);
    let mut regions = Vec::with_capacity(set.len());
    for region in &set.regions {
        let t = Instant::now();
        let partition = partition_region(region, params.erosion_radius, params.dilation_radius);
        timings.partition += t.elapsed();

        let mut summary = RegionSummary {
            id: region.id(),
            pixels: region.pixel_count(),
            bbox: region.bbox(),
            degenerate: partition.is_degenerate(),
            true_foreground: partition.true_fg.count(),
            extended_fuzzy: partition.extended_fuzzy.count(),
            segments: 0,
            accepted: 0,
            final_pixels: region.pixel_count(),
        };

        if partition.is_degenerate() {
            log::debug!(
                "region {} ({} px) is thinner than the erosion element; kept as-is",
                region.id(),
                region.pixel_count()
            );
            acc.add_passthrough(region);
            regions.push(summary);
            continue;
        }

        let t = Instant::now();
        let segments = segment_extended_region_with(image, &partition, options)
            .expect("dimensions checked and partition non-degenerate");
        timings.watershed += t.elapsed();

        let t = Instant::now();
        let refined = project_segments(&segments, &partition);
        acc.add_refined(&refined);
        timings.projection += t.elapsed();

        summary.segments = refined.segment_count;
        summary.accepted = refined.accepted.len() as u32;
        summary.final_pixels = refined.final_pixels.count();
        regions.push(summary);
    }
    timings.total = start.elapsed();
    Ok(Refinement {
        mask: acc.finish(),
        regions,
        timings,
    })
}
