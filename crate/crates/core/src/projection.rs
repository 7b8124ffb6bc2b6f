//! Projection of color segments onto the true-foreground zone, and assembly
//! of the refined mask.

use crate::raster::BinaryMask;
use crate::region::{Region, RegionPartition, Window};
use crate::watershed::SegmentMap;

/// Result of projecting one region's segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinedRegion {
    pub region_id: u32,
    pub window: Window,
    /// Labels of segments sharing at least one pixel with `R^T`, ascending.
    pub accepted: Vec<u32>,
    pub segment_count: u32,
    /// `R^(a)`: union of the accepted segments.
    pub accepted_pixels: BinaryMask,
    /// `R^T ∪ R^(a)`.
    pub final_pixels: BinaryMask,
}

/// Accepts every segment that intersects `R^T`; the refined region is
/// `R^T ∪ R^(a)`.
///
/// # Panics
///
/// If `segments` is not expressed in the partition's window.
pub fn project_segments(segments: &SegmentMap, partition: &RegionPartition) -> RefinedRegion {
    let t = &partition.true_fg;
    assert_eq!(
        segments.dims(),
        t.dims(),
        "segment map must use the partition window"
    );
    let labels = segments.labels();

    let mut touches = vec![false; segments.segment_count() as usize + 1];
    for (&l, &in_t) in labels.iter().zip(t.bits()) {
        if in_t {
            touches[l as usize] = true;
        }
    }
    touches[0] = false;
    let accepted: Vec<u32> = (1..=segments.segment_count())
        .filter(|&l| touches[l as usize])
        .collect();

    let accepted_bits: Vec<bool> = labels.iter().map(|&l| touches[l as usize]).collect();
    let accepted_pixels =
        BinaryMask::from_bits(t.width(), t.height(), accepted_bits).expect("window dims");
    let final_pixels = accepted_pixels.union(t);

    RefinedRegion {
        region_id: partition.region_id,
        window: partition.window,
        accepted,
        segment_count: segments.segment_count(),
        accepted_pixels,
        final_pixels,
    }
}

/// Incremental union of refined and pass-through regions into one frame.
#[derive(Clone, Debug)]
pub struct MaskAccumulator {
    mask: BinaryMask,
}

impl MaskAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            mask: BinaryMask::new(width, height),
        }
    }

    pub fn add_refined(&mut self, refined: &RefinedRegion) {
        self.mask
            .or_patch(&refined.final_pixels, refined.window.x0, refined.window.y0);
    }

    pub fn add_passthrough(&mut self, region: &Region) {
        let b = region.bbox();
        self.mask.or_patch(region.local_mask(), b.min_x, b.min_y);
    }

    pub fn finish(self) -> BinaryMask {
        self.mask
    }
}

/// Pixel-wise union of every refined region and every pass-through region.
pub fn assemble_final_mask(
    refined: &[RefinedRegion],
    passthrough: &[Region],
    dims: (usize, usize),
) -> BinaryMask {
    let mut acc = MaskAccumulator::new(dims.0, dims.1);
    for r in refined {
        acc.add_refined(r);
    }
    for r in passthrough {
        acc.add_passthrough(r);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{extract_regions, partition_region};

    fn partition_of(mask: &BinaryMask, erosion: usize, dilation: usize) -> RegionPartition {
        let set = extract_regions(mask);
        partition_region(&set.regions[0], erosion, dilation)
    }

    #[test]
    fn accepts_touching_rejects_fuzzy_only() {
        // 9x9 square in a 15x15 frame; window is the whole frame here
        let m = BinaryMask::from_fn(15, 15, |x, y| (3..12).contains(&x) && (3..12).contains(&y));
        let p = partition_of(&m, 2, 2);
        let (w, h) = p.true_fg.dims();
        // segment 1 sits inside R^T, segment 2 covers everything else
        let labels: Vec<u32> = (0..w * h)
            .map(|i| {
                if p.true_fg.bits()[i] {
                    1
                } else if p.extended_fuzzy.bits()[i] {
                    2
                } else {
                    0
                }
            })
            .collect();
        let seg = SegmentMap::from_labels(w, h, labels);
        let r = project_segments(&seg, &p);
        assert_eq!(r.accepted, vec![1]);
        assert_eq!(r.final_pixels, p.true_fg);
    }

    #[test]
    fn all_rejected_leaves_true_foreground() {
        let m = BinaryMask::from_fn(12, 12, |x, y| (2..10).contains(&x) && (2..10).contains(&y));
        let p = partition_of(&m, 2, 1);
        let (w, h) = p.true_fg.dims();
        let labels: Vec<u32> = p.extended_fuzzy.bits().iter().map(|&b| b as u32).collect();
        let r = project_segments(&SegmentMap::from_labels(w, h, labels), &p);
        assert!(r.accepted.is_empty());
        assert!(r.accepted_pixels.is_all_background());
        assert_eq!(r.final_pixels, p.true_fg);

        let whole = assemble_final_mask(&[r], &[], (12, 12));
        assert_eq!(whole, p.to_frame(&p.true_fg));
    }

    #[test]
    fn union_of_disjoint_and_overlapping_regions() {
        let a = BinaryMask::from_fn(10, 4, |x, _| x < 3);
        let b = BinaryMask::from_fn(10, 4, |x, _| x >= 6);
        let full = a.union(&b);
        let set = extract_regions(&full);
        let refined: Vec<RefinedRegion> = set
            .regions
            .iter()
            .map(|reg| {
                let p = partition_region(reg, 0, 2);
                let dom = p.extended_mask();
                let labels = dom.bits().iter().map(|&d| d as u32).collect();
                project_segments(
                    &SegmentMap::from_labels(dom.width(), dom.height(), labels),
                    &p,
                )
            })
            .collect();
        // both extended zones reach column 4; union counts it once
        let out = assemble_final_mask(&refined, &[], (10, 4));
        assert_eq!(out, BinaryMask::full(10, 4));
        assert_eq!(
            refined[0].final_pixels.count() + refined[1].final_pixels.count(),
            44
        );

        let disjoint = assemble_final_mask(&[], &set.regions, (10, 4));
        assert_eq!(disjoint, full);
    }
}
