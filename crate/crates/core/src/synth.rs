//! Synthetic corrosion scenes with exact ground truth, a coarse-mask
//! degradation model, and a color-threshold baseline detector.

use rand::Rng;
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::GroundTruthMask;
use crate::morphology::{dilate, erode, open, StructuringElement};
use crate::raster::{BinaryMask, RgbImage};

const SCENE_STREAM: u64 = 0x0073_6365_6e65;
const DEGRADE_STREAM: u64 = 0x0064_6567_7261_6465;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// Mean color and per-channel uniform jitter applied once per blob/scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteColor {
    pub mean: [u8; 3],
    pub jitter: [u8; 3],
}

impl PaletteColor {
    pub const fn new(mean: [u8; 3], jitter: [u8; 3]) -> Self {
        Self { mean, jitter }
    }

    fn sample(&self, rng: &mut Pcg32) -> [u8; 3] {
        let mut out = [0u8; 3];
        for (o, (&m, &j)) in out.iter_mut().zip(self.mean.iter().zip(&self.jitter)) {
            let j = j as i32;
            *o = (m as i32 + rng.random_range(-j..=j)).clamp(0, 255) as u8;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    /// Inclusive range of blob counts.
    pub blob_count: (usize, usize),
    /// Inclusive range of blob scales in pixels (roughly the blob radius).
    pub blob_scale: (f64, f64),
    pub rust_palette: Vec<PaletteColor>,
    pub background_palette: Vec<PaletteColor>,
    /// Per-pixel, per-channel uniform noise amplitude.
    pub noise_amplitude: u8,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            blob_count: (1, 3),
            blob_scale: (12.0, 26.0),
            rust_palette: vec![
                PaletteColor::new([150, 75, 35], [15, 12, 10]),
                PaletteColor::new([120, 55, 30], [12, 10, 8]),
                PaletteColor::new([175, 100, 50], [15, 12, 10]),
            ],
            background_palette: vec![
                PaletteColor::new([125, 128, 132], [10, 10, 10]),
                PaletteColor::new([95, 108, 125], [10, 10, 10]),
                PaletteColor::new([150, 152, 158], [10, 10, 10]),
            ],
            noise_amplitude: 12,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.width < 32 || self.height < 32 {
            return bad("dimensions must be at least 32x32");
        }
        if self.blob_count.0 > self.blob_count.1 {
            return bad("blob count range is empty");
        }
        let (lo, hi) = self.blob_scale;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad("blob scale range must be positive and nonempty");
        }
        if self.rust_palette.is_empty() || self.background_palette.is_empty() {
            return bad("palettes must be nonempty");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeSpec {
    /// Half-width in pixels of the band around the true boundary where flips happen.
    pub jitter: usize,
    /// Nearest-neighbor down/up-scaling factor.
    pub downscale: usize,
    /// Probability of flipping a pixel inside the jitter band.
    pub flip_rate: f64,
    pub seed: u64,
}

impl Default for DegradeSpec {
    fn default() -> Self {
        Self {
            jitter: 3,
            downscale: 8,
            flip_rate: 0.25,
            seed: 0,
        }
    }
}

impl DegradeSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.downscale < 1 {
            return Err(SynthError::InvalidSpec(
                "downscale factor must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.flip_rate) {
            return Err(SynthError::InvalidSpec(
                "flip rate must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    cos: f64,
    sin: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }

    fn bounds(&self, w: usize, h: usize) -> (usize, usize, usize, usize) {
        let r = self.a.max(self.b).ceil();
        let clamp = |v: f64, hi: usize| v.max(0.0).min(hi as f64 - 1.0) as usize;
        (
            clamp(self.cx - r, w),
            clamp(self.cy - r, h),
            clamp(self.cx + r, w),
            clamp(self.cy + r, h),
        )
    }
}

fn random_ellipse(rng: &mut Pcg32, cx: f64, cy: f64, axes: (f64, f64)) -> Ellipse {
    let a = rng.random_range(axes.0..=axes.1);
    let b = rng.random_range(axes.0..=axes.1);
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    Ellipse {
        cx,
        cy,
        a,
        b,
        cos: theta.cos(),
        sin: theta.sin(),
    }
}

/// Blob footprint: a main ellipse with semi-axes in `[0.5s, 0.75s]` plus
/// one to three satellites with semi-axes in `[0.3s, 0.5s]` centered within
/// `0.5s` of the main center. The union stays inside the disk of radius `s`.
fn random_blob(rng: &mut Pcg32, cx: f64, cy: f64, s: f64) -> Vec<Ellipse> {
    let mut parts = vec![random_ellipse(rng, cx, cy, (0.5 * s, 0.75 * s))];
    let satellites = rng.random_range(1..=3);
    for _ in 0..satellites {
        let r = rng.random_range(0.0..=0.5 * s);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        parts.push(random_ellipse(
            rng,
            cx + r * phi.cos(),
            cy + r * phi.sin(),
            (0.3 * s, 0.5 * s),
        ));
    }
    parts
}

fn noisy(rng: &mut Pcg32, base: [u8; 3], amp: i32) -> [u8; 3] {
    if amp == 0 {
        return base;
    }
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (base[c] as i32 + rng.random_range(-amp..=amp)).clamp(0, 255) as u8;
    }
    out
}

/// Random rust blobs over a steel-like background; ground truth is the exact
/// blob union. Deterministic per spec.
pub fn synth_generate(spec: &SynthSpec) -> Result<(RgbImage, GroundTruthMask), SynthError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = Pcg32::new(spec.seed, SCENE_STREAM);

    let bg = spec.background_palette[rng.random_range(0..spec.background_palette.len())]
        .sample(&mut rng);
    // per-pixel color index: 0 is background, k is blob k
    let mut owner = vec![0u16; w * h];
    let mut colors = vec![bg];

    let blobs = rng.random_range(spec.blob_count.0..=spec.blob_count.1);
    for _ in 0..blobs {
        let s = rng.random_range(spec.blob_scale.0..=spec.blob_scale.1);
        let span = |len: usize| {
            let (lo, hi) = (s, len as f64 - 1.0 - s);
            if lo < hi {
                (lo, hi)
            } else {
                let mid = (len as f64 - 1.0) / 2.0;
                (mid, mid)
            }
        };
        let (xl, xh) = span(w);
        let (yl, yh) = span(h);
        let cx = rng.random_range(xl..=xh);
        let cy = rng.random_range(yl..=yh);
        let color =
            spec.rust_palette[rng.random_range(0..spec.rust_palette.len())].sample(&mut rng);
        colors.push(color);
        let id = (colors.len() - 1) as u16;
        for e in random_blob(&mut rng, cx, cy, s) {
            let (x0, y0, x1, y1) = e.bounds(w, h);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if e.contains(x as f64, y as f64) {
                        owner[y * w + x] = id;
                    }
                }
            }
        }
    }

    let amp = spec.noise_amplitude as i32;
    let mut data = Vec::with_capacity(w * h * 3);
    for &o in &owner {
        data.extend_from_slice(&noisy(&mut rng, colors[o as usize], amp));
    }
    let truth = BinaryMask::from_bits(w, h, owner.iter().map(|&o| o != 0).collect()).expect("dims");
    let image = RgbImage::from_raw(w, h, data).expect("dims");
    Ok((image, GroundTruthMask::new(truth)))
}

/// Two-sided boundary: foreground pixels with a background 4-neighbor and
/// background pixels with a foreground 4-neighbor.
pub fn mask_boundary(mask: &BinaryMask) -> BinaryMask {
    let cross = StructuringElement::cross(1);
    dilate(mask, &cross).difference(&erode(mask, &cross))
}

/// Pixels eligible for flips: within `jitter - 1` of the two-sided boundary,
/// or nothing when `jitter == 0`.
pub fn jitter_band(truth: &BinaryMask, jitter: usize) -> BinaryMask {
    if jitter == 0 {
        return BinaryMask::new(truth.width(), truth.height());
    }
    dilate(&mask_boundary(truth), &StructuringElement::disk(jitter - 1))
}

/// Coarse "deep output" stand-in: nearest-neighbor down/up-scaling followed
/// by random flips inside the jitter band around the true boundary.
pub fn degrade_mask(truth: &GroundTruthMask, spec: &DegradeSpec) -> Result<BinaryMask, SynthError> {
    spec.validate()?;
    let (w, h) = truth.dims();
    let f = spec.downscale;
    let sample = |v: usize, len: usize| ((v / f) * f + f / 2).min(len - 1);
    let mut out = BinaryMask::from_fn(w, h, |x, y| truth.get(sample(x, w), sample(y, h)));

    if spec.flip_rate > 0.0 {
        let band = jitter_band(truth, spec.jitter);
        let mut rng = Pcg32::new(spec.seed, DEGRADE_STREAM);
        for (bit, &in_band) in out.bits_mut().iter_mut().zip(band.bits()) {
            if in_band && rng.random::<f64>() < spec.flip_rate {
                *bit = !*bit;
            }
        }
    }
    Ok(out)
}

/// Inclusive HSV box. Hue is in degrees; `hue.0 > hue.1` wraps through 0.
/// Saturation and value are in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsvThresholds {
    pub hue: (f64, f64),
    pub saturation: (f64, f64),
    pub value: (f64, f64),
}

impl Default for HsvThresholds {
    /// Reddish-brown to orange oxide colors.
    fn default() -> Self {
        Self {
            hue: (0.0, 40.0),
            saturation: (0.35, 1.0),
            value: (0.15, 0.9),
        }
    }
}

impl HsvThresholds {
    pub fn validate(&self) -> Result<(), SynthError> {
        let in_unit = |(lo, hi): (f64, f64)| {
            (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi
        };
        let (h0, h1) = self.hue;
        if !((0.0..=360.0).contains(&h0) && (0.0..=360.0).contains(&h1)) {
            return Err(SynthError::InvalidSpec(
                "hue bounds must lie in [0, 360]".into(),
            ));
        }
        if !in_unit(self.saturation) || !in_unit(self.value) {
            return Err(SynthError::InvalidSpec(
                "saturation/value bounds must be ordered within [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, (h, s, v): (f64, f64, f64)) -> bool {
        let hue_ok = if self.hue.0 <= self.hue.1 {
            h >= self.hue.0 && h <= self.hue.1
        } else {
            h >= self.hue.0 || h <= self.hue.1
        };
        hue_ok
            && s >= self.saturation.0
            && s <= self.saturation.1
            && v >= self.value.0
            && v <= self.value.1
    }
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    (h, s, max)
}

/// Per-pixel HSV box test, no clean-up.
pub fn threshold_hsv(image: &RgbImage, thresholds: &HsvThresholds) -> BinaryMask {
    let bits = image
        .pixels()
        .map(|p| thresholds.contains(rgb_to_hsv(p)))
        .collect();
    BinaryMask::from_bits(image.width(), image.height(), bits).expect("dims")
}

/// HSV thresholding followed by an opening with `disk(1)`.
///
/// The opening runs on an edge-replicated copy so that detections touching
/// the image frame are not trimmed at the corners.
pub fn baseline_detect(
    image: &RgbImage,
    thresholds: &HsvThresholds,
) -> Result<BinaryMask, SynthError> {
    thresholds.validate()?;
    let raw = threshold_hsv(image, thresholds);
    let (w, h) = raw.dims();
    let pad = 1;
    let padded = BinaryMask::from_fn(w + 2 * pad, h + 2 * pad, |x, y| {
        raw.get(
            x.saturating_sub(pad).min(w - 1),
            y.saturating_sub(pad).min(h - 1),
        )
    });
    Ok(open(&padded, &StructuringElement::disk(1)).crop(pad, pad, w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_blobs_means_empty_truth() {
        let spec = SynthSpec {
            blob_count: (0, 0),
            noise_amplitude: 0,
            ..SynthSpec::default()
        };
        let (img, truth) = synth_generate(&spec).unwrap();
        assert!(truth.is_all_background());
        let first = img.pixel(0, 0);
        assert!(img.pixels().all(|p| p == first));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec {
            seed: 99,
            ..SynthSpec::default()
        };
        assert_eq!(
            synth_generate(&spec).unwrap(),
            synth_generate(&spec).unwrap()
        );
        let other = SynthSpec {
            seed: 100,
            ..SynthSpec::default()
        };
        assert_ne!(
            synth_generate(&spec).unwrap().0,
            synth_generate(&other).unwrap().0
        );
    }

    #[test]
    fn single_blob_area_envelope() {
        let lo = std::f64::consts::PI * 25.0 * 0.5;
        let hi = std::f64::consts::PI * 225.0;
        for seed in 0..50 {
            let spec = SynthSpec {
                width: 64,
                height: 64,
                blob_count: (1, 1),
                blob_scale: (10.0, 10.0),
                seed,
                ..SynthSpec::default()
            };
            let area = synth_generate(&spec).unwrap().1.count() as f64;
            assert!(area >= lo && area <= hi, "seed {seed}: area {area}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let small = SynthSpec {
            width: 16,
            ..SynthSpec::default()
        };
        assert!(synth_generate(&small).is_err());
        let inverted = SynthSpec {
            blob_count: (3, 1),
            ..SynthSpec::default()
        };
        assert!(synth_generate(&inverted).is_err());
        let t = GroundTruthMask::new(BinaryMask::new(40, 40));
        assert!(degrade_mask(
            &t,
            &DegradeSpec {
                downscale: 0,
                ..DegradeSpec::default()
            }
        )
        .is_err());
        assert!(degrade_mask(
            &t,
            &DegradeSpec {
                flip_rate: 1.0,
                ..DegradeSpec::default()
            }
        )
        .is_err());
    }

    #[test]
    fn identity_degradation() {
        let (_, truth) = synth_generate(&SynthSpec {
            seed: 3,
            ..SynthSpec::default()
        })
        .unwrap();
        let spec = DegradeSpec {
            jitter: 0,
            downscale: 1,
            flip_rate: 0.0,
            seed: 1,
        };
        assert_eq!(degrade_mask(&truth, &spec).unwrap(), *truth);
    }

    #[test]
    fn degradation_deterministic_and_local() {
        for seed in 0..10 {
            let (_, truth) = synth_generate(&SynthSpec {
                seed,
                ..SynthSpec::default()
            })
            .unwrap();
            let spec = DegradeSpec {
                seed,
                ..DegradeSpec::default()
            };
            let a = degrade_mask(&truth, &spec).unwrap();
            assert_eq!(a, degrade_mask(&truth, &spec).unwrap());
            let allowed = dilate(
                &mask_boundary(&truth),
                &StructuringElement::disk(spec.jitter + spec.downscale),
            );
            assert!(
                a.symmetric_difference(&truth).is_subset_of(&allowed),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn hsv_conversion() {
        assert_eq!(rgb_to_hsv([255, 0, 0]), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv([0, 0, 255]), (240.0, 1.0, 1.0));
        let (h, s, v) = rgb_to_hsv([150, 75, 35]);
        assert!((h - 60.0 * 40.0 / 115.0).abs() < 1e-12);
        assert!((s - 115.0 / 150.0).abs() < 1e-12);
        assert!((v - 150.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_on_constant_images() {
        let t = HsvThresholds::default();
        let blue = RgbImage::filled(16, 16, [0, 0, 255]).unwrap();
        assert!(baseline_detect(&blue, &t).unwrap().is_all_background());
        let rust = RgbImage::filled(16, 16, [150, 75, 35]).unwrap();
        assert_eq!(
            baseline_detect(&rust, &t).unwrap(),
            BinaryMask::full(16, 16)
        );
    }

    #[test]
    fn hue_wrap() {
        let t = HsvThresholds {
            hue: (340.0, 20.0),
            saturation: (0.0, 1.0),
            value: (0.0, 1.0),
        };
        assert!(t.contains((350.0, 0.5, 0.5)));
        assert!(t.contains((10.0, 0.5, 0.5)));
        assert!(!t.contains((180.0, 0.5, 0.5)));
    }
}
