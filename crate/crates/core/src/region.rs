//! Connected detected regions and their confidence-zone partitions.

use serde::Serialize;

use crate::morphology::{dilate, erode, StructuringElement};
use crate::raster::{BinaryMask, PixelCoord};

/// Tight inclusive bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundingBox {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.max_x - self.min_x + 1
    }

    pub fn height(&self) -> usize {
        self.max_y - self.min_y + 1
    }
}

/// Labels the 8-connected components of the pixels where `is_fg` holds.
///
/// Returns a row-major label raster (0 = not selected) and the component
/// count. Components are numbered 1.. in raster order of their first pixel.
pub fn label_components(
    width: usize,
    height: usize,
    is_fg: impl Fn(usize) -> bool,
) -> (Vec<u32>, u32) {
    let n = width * height;
    let mut labels = vec![0u32; n];
    // union-find over provisional labels; parent[0] unused
    let mut parent: Vec<u32> = vec![0];

    fn find(parent: &mut [u32], mut a: u32) -> u32 {
        while parent[a as usize] != a {
            let next = parent[a as usize];
            parent[a as usize] = parent[next as usize];
            a = next;
        }
        a
    }

    fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
        let ra = find(parent, a);
        let rb = find(parent, b);
        // keep the smaller (earlier) root so roots stay in raster order
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
        lo
    }

    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if !is_fg(i) {
                continue;
            }
            let mut current = 0u32;
            let visit = |j: usize, current: &mut u32, parent: &mut Vec<u32>| {
                let l = labels[j];
                if l != 0 {
                    *current = if *current == 0 {
                        find(parent, l)
                    } else {
                        union(parent, *current, l)
                    };
                }
            };
            if x > 0 {
                visit(i - 1, &mut current, &mut parent);
            }
            if y > 0 {
                let up = i - width;
                if x > 0 {
                    visit(up - 1, &mut current, &mut parent);
                }
                visit(up, &mut current, &mut parent);
                if x + 1 < width {
                    visit(up + 1, &mut current, &mut parent);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            labels[i] = current;
        }
    }

    let mut final_of = vec![0u32; parent.len()];
    let mut count = 0u32;
    for l in labels.iter_mut().filter(|l| **l != 0) {
        let root = find(&mut parent, *l);
        if final_of[root as usize] == 0 {
            count += 1;
            final_of[root as usize] = count;
        }
        *l = final_of[root as usize];
    }
    (labels, count)
}

/// One maximal 8-connected detected region `R_j`.
///
/// Pixels are stored as a mask over the bounding box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    id: u32,
    bbox: BoundingBox,
    pixel_count: usize,
    local: BinaryMask,
    frame: (usize, usize),
}

impl Region {
    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    /// `m_j`, the number of pixels.
    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    /// Dimensions of the image this region was extracted from.
    pub fn frame(&self) -> (usize, usize) {
        self.frame
    }

    /// Pixel mask over the bounding box.
    pub fn local_mask(&self) -> &BinaryMask {
        &self.local
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        let b = &self.bbox;
        (b.min_x..=b.max_x).contains(&p.x)
            && (b.min_y..=b.max_y).contains(&p.y)
            && self.local.get(p.x - b.min_x, p.y - b.min_y)
    }

    pub fn pixels(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        let (ox, oy) = (self.bbox.min_x, self.bbox.min_y);
        self.local
            .foreground()
            .map(move |p| PixelCoord::new(p.x + ox, p.y + oy))
    }

    /// The region as a full-frame mask.
    pub fn to_mask(&self) -> BinaryMask {
        let mut m = BinaryMask::new(self.frame.0, self.frame.1);
        m.or_patch(&self.local, self.bbox.min_x, self.bbox.min_y);
        m
    }
}

/// All regions of a detection mask; everything else is background `R^B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionSet {
    pub regions: Vec<Region>,
    pub width: usize,
    pub height: usize,
}

impl RegionSet {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Background `R^B`: pixels in no region.
    pub fn background(&self) -> BinaryMask {
        let mut covered = BinaryMask::new(self.width, self.height);
        for r in &self.regions {
            covered.or_patch(r.local_mask(), r.bbox.min_x, r.bbox.min_y);
        }
        covered.complement()
    }
}

/// Splits a mask into maximal 8-connected foreground components with ids
/// 1..=N in raster order of each component's first pixel.
pub fn extract_regions(mask: &BinaryMask) -> RegionSet {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let (labels, count) = label_components(w, h, |i| bits[i]);

    let mut boxes = vec![
        BoundingBox {
            min_x: usize::MAX,
            min_y: usize::MAX,
            max_x: 0,
            max_y: 0,
        };
        count as usize
    ];
    let mut counts = vec![0usize; count as usize];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let b = &mut boxes[l as usize - 1];
        b.min_x = b.min_x.min(x);
        b.min_y = b.min_y.min(y);
        b.max_x = b.max_x.max(x);
        b.max_y = b.max_y.max(y);
        counts[l as usize - 1] += 1;
    }
    let mut locals: Vec<BinaryMask> = boxes
        .iter()
        .map(|b| BinaryMask::new(b.width(), b.height()))
        .collect();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let b = &boxes[l as usize - 1];
        locals[l as usize - 1].set(i % w - b.min_x, i / w - b.min_y, true);
    }
    drop(labels);

    let regions = locals
        .into_iter()
        .zip(boxes)
        .zip(counts)
        .enumerate()
        .map(|(k, ((local, bbox), pixel_count))| Region {
            id: k as u32 + 1,
            bbox,
            pixel_count,
            local,
            frame: (w, h),
        })
        .collect();
    RegionSet {
        regions,
        width: w,
        height: h,
    }
}

/// Window of the frame a partition is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Window {
    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x >= self.x0
            && p.y >= self.y0
            && p.x < self.x0 + self.width
            && p.y < self.y0 + self.height
    }
}

/// Confidence zones of one region: true foreground `R^T`, fuzzy `R^F` and
/// extended fuzzy `R^{F+}`.
///
/// All masks share one window: the region's bounding box grown by the
/// dilation reach and clipped to the frame. Every zone lies inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionPartition {
    pub region_id: u32,
    pub window: Window,
    pub frame: (usize, usize),
    pub region: BinaryMask,
    pub true_fg: BinaryMask,
    pub fuzzy: BinaryMask,
    pub extended_fuzzy: BinaryMask,
}

impl RegionPartition {
    /// `R^T` is empty: the structuring element fits nowhere in the region.
    pub fn is_degenerate(&self) -> bool {
        self.true_fg.is_all_background()
    }

    /// `R^T ∪ R^{F+}`, the domain the color segmentation runs on.
    pub fn extended_mask(&self) -> BinaryMask {
        self.true_fg.union(&self.extended_fuzzy)
    }

    /// Places a window-local mask into a full-frame mask.
    pub fn to_frame(&self, local: &BinaryMask) -> BinaryMask {
        let mut m = BinaryMask::new(self.frame.0, self.frame.1);
        m.or_patch(local, self.window.x0, self.window.y0);
        m
    }
}

/// Partition with disk structuring elements of the given radii.
pub fn partition_region(
    region: &Region,
    erosion_radius: usize,
    dilation_radius: usize,
) -> RegionPartition {
    partition_region_with(
        region,
        &StructuringElement::disk(erosion_radius),
        &StructuringElement::disk(dilation_radius),
    )
}

/// `R^T = erode(R_j)`, `R^F = R_j \ R^T`, `R^{F+} = dilate(R_j) \ R^T`,
/// each computed on the region's own mask.
pub fn partition_region_with(
    region: &Region,
    erosion_se: &StructuringElement,
    dilation_se: &StructuringElement,
) -> RegionPartition {
    let reach = dilation_se.size();
    let (fw, fh) = region.frame;
    let b = region.bbox;
    let x0 = b.min_x.saturating_sub(reach);
    let y0 = b.min_y.saturating_sub(reach);
    let x1 = (b.max_x + reach).min(fw - 1);
    let y1 = (b.max_y + reach).min(fh - 1);
    let window = Window {
        x0,
        y0,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
    };

    let mut local = BinaryMask::new(window.width, window.height);
    local.or_patch(&region.local, b.min_x - x0, b.min_y - y0);

    // Outside the window the region mask is background, and the window only
    // omits pixels outside the frame, so windowed results equal frame results.
    let true_fg = erode(&local, erosion_se);
    let fuzzy = local.difference(&true_fg);
    let extended_fuzzy = dilate(&local, dilation_se).difference(&true_fg);

    RegionPartition {
        region_id: region.id,
        window,
        frame: region.frame,
        region: local,
        true_fg,
        fuzzy,
        extended_fuzzy,
    }
}
