//! Marker-based watershed over a color gradient, restricted to a domain mask.
//!
//! The flood is a priority-flood keyed by `(gradient, insertion sequence)`;
//! every domain pixel ends up in exactly one basin (no watershed lines).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::raster::{BinaryMask, RgbImage};
use crate::region::{label_components, RegionPartition};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WatershedError {
    #[error("dimension mismatch: image {image:?}, domain {domain:?}")]
    DimensionMismatch {
        image: (usize, usize),
        domain: (usize, usize),
    },
    #[error("region {0} has an empty true-foreground zone")]
    DegeneratePartition(u32),
    #[error("marker map does not match the gradient domain")]
    InvalidMarkers,
}

/// Non-negative gradient values over a domain; values outside the domain are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    values: Vec<f32>,
    domain: BinaryMask,
}

impl GradientField {
    pub fn new(values: Vec<f32>, domain: BinaryMask) -> Self {
        assert_eq!(
            values.len(),
            domain.len(),
            "gradient length must match domain"
        );
        let (width, height) = domain.dims();
        let values = values
            .into_iter()
            .zip(domain.bits())
            .map(|(v, &d)| if d { v } else { 0.0 })
            .collect();
        Self {
            width,
            height,
            values,
            domain,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn domain(&self) -> &BinaryMask {
        &self.domain
    }

    /// 3x3 box mean over in-domain neighbors.
    pub fn smoothed(&self) -> GradientField {
        let (w, h) = (self.width, self.height);
        let dom = self.domain.bits();
        let mut out = vec![0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !dom[i] {
                    continue;
                }
                let mut sum = 0f32;
                let mut n = 0u32;
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let j = ny * w + nx;
                        if dom[j] {
                            sum += self.values[j];
                            n += 1;
                        }
                    }
                }
                out[i] = sum / n as f32;
            }
        }
        GradientField {
            width: w,
            height: h,
            values: out,
            domain: self.domain.clone(),
        }
    }
}

/// Row-major segment labels: 0 outside the domain (or unseeded, for marker
/// maps), `1..=count` for segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl SegmentMap {
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Self {
        assert_eq!(labels.len(), width * height);
        let count = labels.iter().copied().max().unwrap_or(0);
        Self {
            width,
            height,
            labels,
            count,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// `M_j`.
    pub fn segment_count(&self) -> u32 {
        self.count
    }

    pub fn segment_mask(&self, label: u32) -> BinaryMask {
        BinaryMask::from_bits(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l == label).collect(),
        )
        .expect("label raster matches dims")
    }

    /// `R^w`: union of every segment.
    pub fn coverage(&self) -> BinaryMask {
        BinaryMask::from_bits(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l != 0).collect(),
        )
        .expect("label raster matches dims")
    }
}

const SOBEL_X: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
const SOBEL_Y: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

/// Channel-wise maximum of the Sobel magnitude on every domain pixel.
/// Image borders are replicate-padded.
pub fn color_gradient(
    image: &RgbImage,
    domain: &BinaryMask,
) -> Result<GradientField, WatershedError> {
    if image.dims() != domain.dims() {
        return Err(WatershedError::DimensionMismatch {
            image: image.dims(),
            domain: domain.dims(),
        });
    }
    Ok(color_gradient_window(image, domain, 0, 0))
}

/// Same as [`color_gradient`] with `domain` placed at `(x0, y0)` in the image.
pub(crate) fn color_gradient_window(
    image: &RgbImage,
    domain: &BinaryMask,
    x0: usize,
    y0: usize,
) -> GradientField {
    let (iw, ih) = image.dims();
    let (w, h) = domain.dims();
    let raw = image.as_raw();
    let mut values = vec![0f32; w * h];
    for ly in 0..h {
        let gy = y0 + ly;
        let rows = [gy.saturating_sub(1), gy, (gy + 1).min(ih - 1)];
        for lx in 0..w {
            if !domain.get(lx, ly) {
                continue;
            }
            let gx = x0 + lx;
            let cols = [gx.saturating_sub(1), gx, (gx + 1).min(iw - 1)];
            let mut best = 0i32;
            for c in 0..3 {
                let mut sx = 0i32;
                let mut sy = 0i32;
                for (ky, &ry) in rows.iter().enumerate() {
                    for (kx, &rx) in cols.iter().enumerate() {
                        let v = raw[(ry * iw + rx) * 3 + c] as i32;
                        sx += SOBEL_X[ky][kx] * v;
                        sy += SOBEL_Y[ky][kx] * v;
                    }
                }
                best = best.max(sx * sx + sy * sy);
            }
            values[ly * w + lx] = (best as f32).sqrt();
        }
    }
    GradientField {
        width: w,
        height: h,
        values,
        domain: domain.clone(),
    }
}

#[inline]
fn neighbors8(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let ys = y.saturating_sub(1)..=(y + 1).min(h - 1);
    ys.flat_map(move |ny| (x.saturating_sub(1)..=(x + 1).min(w - 1)).map(move |nx| (nx, ny)))
        .filter(move |&(nx, ny)| nx != x || ny != y)
        .map(move |(nx, ny)| ny * w + nx)
}

/// Seeds: 8-connected components of domain pixels that are no higher than
/// any in-domain 8-neighbor, numbered in raster order.
pub fn find_markers(gradient: &GradientField) -> SegmentMap {
    let (w, h) = (gradient.width, gradient.height);
    let dom = gradient.domain.bits();
    let vals = &gradient.values;
    let mut is_min = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if dom[i] {
                let g = vals[i];
                is_min[i] = neighbors8(x, y, w, h).all(|j| !dom[j] || vals[j] >= g);
            }
        }
    }
    let (labels, count) = label_components(w, h, |i| is_min[i]);
    SegmentMap {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// Priority-flood from `markers`. Every in-domain pixel reachable from a
/// marker receives a label; marker pixels keep theirs.
pub fn watershed_flood(
    gradient: &GradientField,
    markers: &SegmentMap,
) -> Result<SegmentMap, WatershedError> {
    let (w, h) = (gradient.width, gradient.height);
    if markers.dims() != (w, h) {
        return Err(WatershedError::InvalidMarkers);
    }
    let dom = gradient.domain.bits();
    if markers.labels.iter().zip(dom).any(|(&l, &d)| l != 0 && !d) {
        return Err(WatershedError::InvalidMarkers);
    }
    let vals = &gradient.values;
    let mut labels = markers.labels.clone();
    // Key packs the gradient bits (monotone for non-negative floats) above
    // the sequence number, so ties fall back to insertion order.
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut seq: u32 = 0;
    let key = |i: usize, seq: u32| ((vals[i].to_bits() as u64) << 32) | seq as u64;
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 {
            heap.push(Reverse((key(i, seq), i as u32)));
            seq += 1;
        }
    }
    while let Some(Reverse((_, i))) = heap.pop() {
        let i = i as usize;
        let label = labels[i];
        let (x, y) = (i % w, i / w);
        for j in neighbors8(x, y, w, h) {
            if dom[j] && labels[j] == 0 {
                // claimed at push time: the earliest push of a pixel always
                // pops first because its key is the pixel's own gradient
                labels[j] = label;
                heap.push(Reverse((key(j, seq), j as u32)));
                seq += 1;
            }
        }
    }
    Ok(SegmentMap {
        width: w,
        height: h,
        labels,
        count: markers.count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WatershedOptions {
    /// 3x3 box smoothing of the gradient before seeding.
    pub smooth_gradient: bool,
}

impl Default for WatershedOptions {
    fn default() -> Self {
        Self {
            smooth_gradient: true,
        }
    }
}

/// Color segments `s_{i,j}` over `R^T ∪ R^{F+}`, in the partition's window.
pub fn segment_extended_region(
    image: &RgbImage,
    partition: &RegionPartition,
) -> Result<SegmentMap, WatershedError> {
    segment_extended_region_with(image, partition, WatershedOptions::default())
}

pub fn segment_extended_region_with(
    image: &RgbImage,
    partition: &RegionPartition,
    options: WatershedOptions,
) -> Result<SegmentMap, WatershedError> {
    if image.dims() != partition.frame {
        return Err(WatershedError::DimensionMismatch {
            image: image.dims(),
            domain: partition.frame,
        });
    }
    if partition.is_degenerate() {
        return Err(WatershedError::DegeneratePartition(partition.region_id));
    }
    let domain = partition.extended_mask();
    let mut gradient =
        color_gradient_window(image, &domain, partition.window.x0, partition.window.y0);
    if options.smooth_gradient {
        gradient = gradient.smoothed();
    }
    let markers = find_markers(&gradient);
    watershed_flood(&gradient, &markers)
}
