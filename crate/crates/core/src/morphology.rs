//! Binary erosion and dilation with explicit structuring elements.
//!
//! Pixels outside the raster count as background for both operators.
//! Structuring elements whose rows are contiguous horizontal spans (every
//! built-in shape) go through a row-span path that costs one pass per SE row;
//! anything else falls back to the per-pixel definition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeShape {
    /// Chebyshev ball: `max(|dx|, |dy|) <= k`.
    Square,
    /// Euclidean ball: `dx² + dy² <= r²`.
    Disk,
    /// Manhattan ball: `|dx| + |dy| <= r`.
    Cross,
    Custom,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeError {
    #[error("structuring element must contain the origin")]
    MissingOrigin,
    #[error(
        "structuring element must be symmetric under point reflection; ({0}, {1}) has no mirror"
    )]
    Asymmetric(isize, isize),
}

/// A point-symmetric set of `(dx, dy)` offsets containing the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    shape: SeShape,
    size: usize,
    offsets: Vec<(isize, isize)>,
    /// `(dy, lo, hi)`: row `dy` is exactly the span `lo..=hi`.
    spans: Option<Vec<(isize, isize, isize)>>,
}

impl StructuringElement {
    pub fn new(shape: SeShape, size: usize) -> Self {
        let r = size as isize;
        let r2 = r * r;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let inside = match shape {
                    SeShape::Square | SeShape::Custom => true,
                    SeShape::Disk => dx * dx + dy * dy <= r2,
                    SeShape::Cross => dx.abs() + dy.abs() <= r,
                };
                if inside {
                    offsets.push((dx, dy));
                }
            }
        }
        Self::build(shape, size, offsets)
    }

    pub fn square(k: usize) -> Self {
        Self::new(SeShape::Square, k)
    }

    pub fn disk(r: usize) -> Self {
        Self::new(SeShape::Disk, r)
    }

    pub fn cross(r: usize) -> Self {
        Self::new(SeShape::Cross, r)
    }

    /// Arbitrary offsets; must contain the origin and be point-symmetric.
    pub fn from_offsets(
        offsets: impl IntoIterator<Item = (isize, isize)>,
    ) -> Result<Self, SeError> {
        let mut offsets: Vec<_> = offsets.into_iter().collect();
        offsets.sort_by_key(|&(dx, dy)| (dy, dx));
        offsets.dedup();
        if offsets
            .binary_search_by_key(&(0, 0), |&(dx, dy)| (dy, dx))
            .is_err()
        {
            return Err(SeError::MissingOrigin);
        }
        for &(dx, dy) in &offsets {
            if offsets
                .binary_search_by_key(&(-dy, -dx), |&(a, b)| (b, a))
                .is_err()
            {
                return Err(SeError::Asymmetric(dx, dy));
            }
        }
        let size = offsets
            .iter()
            .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
            .max()
            .unwrap_or(0);
        Ok(Self::build(SeShape::Custom, size, offsets))
    }

    fn build(shape: SeShape, size: usize, offsets: Vec<(isize, isize)>) -> Self {
        let spans = row_spans(&offsets);
        Self {
            shape,
            size,
            offsets,
            spans,
        }
    }

    pub fn shape(&self) -> SeShape {
        self.shape
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Convenience matching the `square(k) | disk(r) | cross(r)` constructor set.
pub fn make_se(shape: SeShape, size: usize) -> StructuringElement {
    StructuringElement::new(shape, size)
}

fn row_spans(offsets: &[(isize, isize)]) -> Option<Vec<(isize, isize, isize)>> {
    // offsets are sorted by (dy, dx)
    let mut spans: Vec<(isize, isize, isize)> = Vec::new();
    for &(dx, dy) in offsets {
        match spans.last_mut() {
            Some((row, _, hi)) if *row == dy => {
                if dx != *hi + 1 {
                    return None;
                }
                *hi = dx;
            }
            _ => spans.push((dy, dx, dx)),
        }
    }
    Some(spans)
}

/// Output pixel is foreground iff every `p + offset` is in bounds and foreground.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    match &se.spans {
        Some(spans) => erode_spans(mask, spans),
        None => erode_pointwise(mask, se),
    }
}

/// Output pixel is foreground iff some `p + offset` is in bounds and foreground.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    match &se.spans {
        Some(spans) => dilate_spans(mask, spans),
        None => dilate_pointwise(mask, se),
    }
}

pub fn open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}

pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(mask, se), se)
}

fn erode_spans(mask: &BinaryMask, spans: &[(isize, isize, isize)]) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = BinaryMask::full(w, h);
    if w == 0 || h == 0 {
        return out;
    }
    // Output rows whose SE row would fall outside the raster are cleared.
    for &(dy, _, _) in spans {
        for y in 0..h {
            let sy = y as isize + dy;
            if sy < 0 || sy >= h as isize {
                out.bits_mut()[y * w..(y + 1) * w].fill(false);
            }
        }
    }
    // run[x] = length of the foreground run starting at x, going right.
    let mut run = vec![0u32; w + 1];
    for sy in 0..h {
        let src = mask.row(sy);
        run[w] = 0;
        for x in (0..w).rev() {
            run[x] = if src[x] { run[x + 1] + 1 } else { 0 };
        }
        for &(dy, lo, hi) in spans {
            let y = sy as isize - dy;
            if y < 0 || y >= h as isize {
                continue;
            }
            let need = (hi - lo + 1) as u32;
            let dst = &mut out.bits_mut()[y as usize * w..(y as usize + 1) * w];
            for (x, d) in dst.iter_mut().enumerate() {
                if !*d {
                    continue;
                }
                let start = x as isize + lo;
                *d = start >= 0 && (start as usize) < w && run[start as usize] >= need;
            }
        }
    }
    out
}

fn dilate_spans(mask: &BinaryMask, spans: &[(isize, isize, isize)]) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = BinaryMask::new(w, h);
    if w == 0 || h == 0 {
        return out;
    }
    // prefix[x] = foreground count in src[0..x]
    let mut prefix = vec![0u32; w + 1];
    for sy in 0..h {
        let src = mask.row(sy);
        if !src.iter().any(|&b| b) {
            continue;
        }
        for x in 0..w {
            prefix[x + 1] = prefix[x] + src[x] as u32;
        }
        for &(dy, lo, hi) in spans {
            let y = sy as isize - dy;
            if y < 0 || y >= h as isize {
                continue;
            }
            let dst = &mut out.bits_mut()[y as usize * w..(y as usize + 1) * w];
            for (x, d) in dst.iter_mut().enumerate() {
                if *d {
                    continue;
                }
                let a = (x as isize + lo).max(0);
                let b = (x as isize + hi).min(w as isize - 1);
                if a <= b && prefix[b as usize + 1] > prefix[a as usize] {
                    *d = true;
                }
            }
        }
    }
    out
}

fn erode_pointwise(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        se.offsets
            .iter()
            .all(|&(dx, dy)| mask.get_signed(x as isize + dx, y as isize + dy))
    })
}

fn dilate_pointwise(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        se.offsets
            .iter()
            .any(|&(dx, dy)| mask.get_signed(x as isize + dx, y as isize + dy))
    })
}
