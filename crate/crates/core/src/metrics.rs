//! Pixel-level evaluation against ground truth, and dataset splitting.

use std::ops::Deref;

use rand::seq::SliceRandom;
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::BinaryMask;

/// PCG stream used by the split shuffle.
const SPLIT_STREAM: u64 = 0x73_706c_6974;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("dimension mismatch: prediction {pred:?}, truth {truth:?}")]
    DimensionMismatch {
        pred: (usize, usize),
        truth: (usize, usize),
    },
    #[error("cannot aggregate an empty list of reports")]
    EmptyAggregate,
    #[error("dataset of {0} items is too small to split (need at least 5)")]
    TooFewItems(usize),
}

/// Ground-truth annotation: foreground is corroded (rust grades B, C, D),
/// background is grade A or clean steel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthMask(BinaryMask);

impl GroundTruthMask {
    pub fn new(mask: BinaryMask) -> Self {
        Self(mask)
    }

    pub fn into_inner(self) -> BinaryMask {
        self.0
    }
}

impl Deref for GroundTruthMask {
    type Target = BinaryMask;

    fn deref(&self) -> &BinaryMask {
        &self.0
    }
}

impl From<BinaryMask> for GroundTruthMask {
    fn from(mask: BinaryMask) -> Self {
        Self(mask)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

/// Confusion counts and derived scores. Zero denominators give 0 with the
/// matching flag set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub iou: f64,
    /// `tp + fp == 0`
    pub no_positive_prediction: bool,
    /// `tp + fn == 0`
    pub no_positive_truth: bool,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_counts(c: ConfusionCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            precision,
            recall,
            f1,
            iou: ratio(c.tp, c.tp + c.fp + c.fn_),
            no_positive_prediction: c.tp + c.fp == 0,
            no_positive_truth: c.tp + c.fn_ == 0,
        }
    }

    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            tn: self.tn,
        }
    }
}

pub fn confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts, MetricsError> {
    if pred.dims() != truth.dims() {
        return Err(MetricsError::DimensionMismatch {
            pred: pred.dims(),
            truth: truth.dims(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn evaluate(pred: &BinaryMask, truth: &GroundTruthMask) -> Result<MetricsReport, MetricsError> {
    confusion(pred, truth).map(MetricsReport::from_counts)
}

/// Unweighted per-image means. Images whose truth has no positive pixel are
/// left out of every mean; `images_scored` counts the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroAverages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub iou: f64,
    pub images: usize,
    pub images_scored: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// Metrics recomputed from pooled confusion counts.
    pub micro: MetricsReport,
    #[serde(rename = "macro")]
    pub macro_avg: MacroAverages,
}

pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    let pooled = reports
        .iter()
        .map(MetricsReport::counts)
        .fold(ConfusionCounts::default(), ConfusionCounts::add);
    let scored: Vec<&MetricsReport> = reports.iter().filter(|r| !r.no_positive_truth).collect();
    let mean = |f: fn(&MetricsReport) -> f64| {
        if scored.is_empty() {
            0.0
        } else {
            scored.iter().map(|r| f(r)).sum::<f64>() / scored.len() as f64
        }
    };
    Ok(AggregateReport {
        micro: MetricsReport::from_counts(pooled),
        macro_avg: MacroAverages {
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            f1: mean(|r| r.f1),
            iou: mean(|r| r.iou),
            images: reports.len(),
            images_scored: scored.len(),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Sizes `(train, val, test)`: test is 20% of the items and validation 25%
/// of the remainder, both rounded half up.
///
/// Returns `None` for fewer than 5 items.
pub fn split_sizes(n: usize) -> Option<(usize, usize, usize)> {
    if n < 5 {
        return None;
    }
    // round(n / 5) and round(rest / 4) with halves going up
    let test = (2 * n + 5) / 10;
    let rest = n - test;
    let val = (rest + 2) / 4;
    Some((rest - val, val, test))
}

/// Seeded shuffle (PCG32) followed by a train/val/test cut.
pub fn split_dataset<T: Clone>(items: &[T], seed: u64) -> Result<DatasetSplit<T>, MetricsError> {
    let (train_n, val_n, _) =
        split_sizes(items.len()).ok_or(MetricsError::TooFewItems(items.len()))?;
    let mut order: Vec<T> = items.to_vec();
    let mut rng = Pcg32::new(seed, SPLIT_STREAM);
    order.shuffle(&mut rng);
    let test = order.split_off(train_n + val_n);
    let val = order.split_off(train_n);
    Ok(DatasetSplit {
        train: order,
        val,
        test,
    })
}
