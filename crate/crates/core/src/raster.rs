//! Raster types shared by the whole pipeline, PNG I/O and overlay rendering.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default luma threshold for mask binarization.
pub const DEFAULT_MASK_THRESHOLD: u8 = 128;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a PNG file")]
    UnsupportedFormat { path: PathBuf },
    #[error("{path}: unsupported bit depth or color type ({detail})")]
    UnsupportedBitDepth { path: PathBuf, detail: String },
    #[error("{path}: decode failed: {detail}")]
    Decode { path: PathBuf, detail: String },
    #[error("encode failed: {0}")]
    Encode(String),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid raster: {0}")]
    Invalid(String),
}

impl RasterError {
    /// Stable numeric code per error kind.
    pub fn code(&self) -> u8 {
        match self {
            RasterError::Io { .. } => 1,
            RasterError::UnsupportedFormat { .. } => 2,
            RasterError::UnsupportedBitDepth { .. } => 3,
            RasterError::Decode { .. } => 4,
            RasterError::Encode(_) => 5,
            RasterError::DimensionMismatch { .. } => 6,
            RasterError::Invalid(_) => 7,
        }
    }
}

/// Column/row position inside a raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// 8-bit RGB raster, row-major, channels interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    /// Builds an image from interleaved `r,g,b` bytes.
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(RasterError::Invalid(format!(
                "expected {} bytes for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: &[[u8; 3]],
    ) -> Result<Self, RasterError> {
        Self::from_raw(width, height, pixels.iter().flatten().copied().collect())
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self, RasterError> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: color.repeat(width * height),
        })
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

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}

/// Per-pixel boolean raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
        if self.width * self.height <= 4096 {
            for row in self.bits.chunks(self.width) {
                let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    /// An all-background mask. Zero-sized masks are allowed here because
    /// region windows can legitimately be empty in one axis during tests.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != width * height {
            return Err(RasterError::Invalid(format!(
                "expected {} bits for {width}x{height}, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Parses rows of `#` (foreground) and `.` (background).
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut bits = Vec::with_capacity(width * height);
        for row in rows {
            assert_eq!(row.len(), width, "ragged ascii mask");
            bits.extend(row.bytes().map(|b| b == b'#'));
        }
        Self {
            width,
            height,
            bits,
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

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get) but treats out-of-bounds as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_all_background(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground coordinates in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| PixelCoord::new(i % w, i / w))
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.dims(), other.dims(), "mask dimension mismatch");
        Self {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a != b)
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        assert_eq!(self.dims(), other.dims(), "mask dimension mismatch");
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        assert_eq!(self.dims(), other.dims(), "mask dimension mismatch");
        !self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    /// Copies the `width x height` window whose top-left corner is `(x0, y0)`.
    /// Parts of the window outside the mask read as background.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| {
            let (gx, gy) = (x0 + x, y0 + y);
            gx < self.width && gy < self.height && self.get(gx, gy)
        })
    }

    /// ORs `patch` into `self` with the patch's top-left corner at `(x0, y0)`.
    pub fn or_patch(&mut self, patch: &BinaryMask, x0: usize, y0: usize) {
        for py in 0..patch.height {
            let gy = y0 + py;
            if gy >= self.height {
                break;
            }
            for (px, &b) in patch.row(py).iter().enumerate() {
                let gx = x0 + px;
                if gx >= self.width {
                    break;
                }
                if b {
                    self.bits[gy * self.width + gx] = true;
                }
            }
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::Invalid(format!(
            "dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Luma as `round(0.299 r + 0.587 g + 0.114 b)` in exact integer arithmetic.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let sum = 299 * rgb[0] as u32 + 587 * rgb[1] as u32 + 114 * rgb[2] as u32;
    ((sum + 500) / 1000) as u8
}

fn read_png(path: &Path) -> Result<DynamicImage, RasterError> {
    let bytes = fs::read(path).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < PNG_SIGNATURE.len() || bytes[..8] != PNG_SIGNATURE {
        return Err(RasterError::UnsupportedFormat {
            path: path.to_path_buf(),
        });
    }
    let decoded = image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| {
        RasterError::Decode {
            path: path.to_path_buf(),
            detail: e.to_string(),
        }
    })?;
    match decoded {
        DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_) => Ok(decoded),
        other => Err(RasterError::UnsupportedBitDepth {
            path: path.to_path_buf(),
            detail: format!("{:?}", other.color()),
        }),
    }
}

/// Decodes an 8-bit PNG. Grayscale is expanded to three equal channels and
/// any alpha channel is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage, RasterError> {
    let decoded = read_png(path.as_ref())?;
    let rgb = decoded.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    RgbImage::from_raw(w, h, rgb.into_raw())
}

/// Decodes a PNG mask: a pixel is foreground iff its luma is at least `threshold`.
pub fn load_mask_with_threshold(
    path: impl AsRef<Path>,
    threshold: u8,
) -> Result<BinaryMask, RasterError> {
    let decoded = read_png(path.as_ref())?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let bits = match decoded {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(|v| v >= threshold).collect(),
        DynamicImage::ImageLumaA8(g) => g
            .into_raw()
            .chunks_exact(2)
            .map(|c| c[0] >= threshold)
            .collect(),
        other => other
            .into_rgb8()
            .into_raw()
            .chunks_exact(3)
            .map(|c| luma([c[0], c[1], c[2]]) >= threshold)
            .collect(),
    };
    BinaryMask::from_bits(w, h, bits)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask, RasterError> {
    load_mask_with_threshold(path, DEFAULT_MASK_THRESHOLD)
}

fn encode_png(
    width: usize,
    height: usize,
    data: &[u8],
    color: image::ExtendedColorType,
) -> Result<Vec<u8>, RasterError> {
    use image::ImageEncoder;
    let mut out = Cursor::new(Vec::new());
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(data, width as u32, height as u32, color)
        .map_err(|e| RasterError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RasterError> {
    fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Encodes a mask as 8-bit grayscale PNG bytes (foreground 255, background 0).
pub fn encode_mask_png(mask: &BinaryMask) -> Result<Vec<u8>, RasterError> {
    let data: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    encode_png(
        mask.width(),
        mask.height(),
        &data,
        image::ExtendedColorType::L8,
    )
}

pub fn encode_image_png(image: &RgbImage) -> Result<Vec<u8>, RasterError> {
    encode_png(
        image.width(),
        image.height(),
        image.as_raw(),
        image::ExtendedColorType::Rgb8,
    )
}

pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<(), RasterError> {
    write_file(path.as_ref(), &encode_mask_png(mask)?)
}

pub fn save_image(image: &RgbImage, path: impl AsRef<Path>) -> Result<(), RasterError> {
    write_file(path.as_ref(), &encode_image_png(image)?)
}

/// Which overlay color a zone is painted with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    TrueForeground,
    Fuzzy,
    RefinedContour,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlaySpec {
    pub true_foreground: [u8; 3],
    pub fuzzy: [u8; 3],
    pub refined_contour: [u8; 3],
    pub alpha: f64,
}

impl Default for OverlaySpec {
    fn default() -> Self {
        Self {
            true_foreground: [0, 255, 0],
            fuzzy: [255, 255, 0],
            refined_contour: [0, 0, 255],
            alpha: 0.5,
        }
    }
}

impl OverlaySpec {
    pub fn color(&self, kind: ZoneKind) -> [u8; 3] {
        match kind {
            ZoneKind::TrueForeground => self.true_foreground,
            ZoneKind::Fuzzy => self.fuzzy,
            ZoneKind::RefinedContour => self.refined_contour,
        }
    }
}

#[inline]
fn blend_channel(zone: u8, base: u8, alpha: f64) -> u8 {
    let v = alpha * zone as f64 + (1.0 - alpha) * base as f64;
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Alpha-blends each zone over `image` in list order, so later zones paint
/// over earlier ones.
pub fn render_overlay(
    image: &RgbImage,
    zones: &[(&BinaryMask, ZoneKind)],
    spec: &OverlaySpec,
) -> Result<RgbImage, RasterError> {
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(RasterError::Invalid(format!(
            "overlay alpha {} outside [0,1]",
            spec.alpha
        )));
    }
    for (mask, _) in zones {
        if mask.dims() != image.dims() {
            return Err(RasterError::DimensionMismatch {
                expected: image.dims(),
                actual: mask.dims(),
            });
        }
    }
    let mut out = image.clone();
    for (mask, kind) in zones {
        let color = spec.color(*kind);
        for (i, _) in mask.bits().iter().enumerate().filter(|(_, &b)| b) {
            let px = &mut out.data[i * 3..i * 3 + 3];
            for c in 0..3 {
                px[c] = blend_channel(color[c], px[c], spec.alpha);
            }
        }
    }
    Ok(out)
}
