//! Seeded synthetic weak-detector dumps.
//!
//! Ground-truth objects are dropped, jittered, and relabelled, and random
//! spurious boxes are added, under a four-knob noise model. Randomness comes
//! from ChaCha8 (`rand_chacha`), keyed by `seed_from_u64(seed)`; image `i` of
//! the split draws from stream `i` of that key, so images can be generated in
//! parallel and the output is a pure function of (dataset, params, seed).
//!
//! Per image the draw order is fixed: for each object in document order a
//! uniform miss draw, four standard-normal corner draws (xmin, ymin, xmax,
//! ymax; skipped when sigma is 0), a uniform flip draw, a class draw if flipped,
//! and a score draw; then a Poisson count of spurious boxes, each drawing
//! x, x, y, y, class and score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detections::{Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::voc::{BoundingBox, ClassLabel, Dataset, ImageRecord, ImageSize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Generator for the `stream`-th image of a split.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

/// Closed score interval `[lo, hi]` within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub lo: f64,
    pub hi: f64,
}

impl ScoreRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(0.0 <= self.lo && self.lo <= self.hi && self.hi <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "{what} interval [{}, {}] must satisfy 0 <= lo <= hi <= 1",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Std-dev in pixels of the Gaussian offset added to each box corner.
    pub jitter_sigma: f64,
    /// Probability of dropping a ground-truth object.
    pub miss_prob: f64,
    /// Probability of relabelling a kept object with another class.
    pub flip_prob: f64,
    /// Poisson mean of spurious boxes per image.
    pub spurious_rate: f64,
    pub score_tp: ScoreRange,
    pub score_noise: ScoreRange,
}

impl NoiseParams {
    /// No corruption: detections reproduce the ground truth with score 1.
    pub const IDENTITY: NoiseParams = NoiseParams {
        jitter_sigma: 0.0,
        miss_prob: 0.0,
        flip_prob: 0.0,
        spurious_rate: 0.0,
        score_tp: ScoreRange::new(1.0, 1.0),
        score_noise: ScoreRange::new(1.0, 1.0),
    };

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.jitter_sigma) {
            return Err(Error::InvalidParam(format!(
                "jitter sigma {} must be >= 0",
                self.jitter_sigma
            )));
        }
        for (name, p) in [("miss", self.miss_prob), ("flip", self.flip_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam(format!(
                    "{name} probability {p} outside [0, 1]"
                )));
            }
        }
        if !finite_nonneg(self.spurious_rate) {
            return Err(Error::InvalidParam(format!(
                "spurious rate {} must be >= 0",
                self.spurious_rate
            )));
        }
        self.score_tp.validate("true-box score")?;
        self.score_noise.validate("noise score")
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            jitter_sigma: 0.0,
            miss_prob: 0.0,
            flip_prob: 0.0,
            spurious_rate: 0.0,
            score_tp: ScoreRange::new(0.5, 1.0),
            score_noise: ScoreRange::new(0.05, 0.9),
        }
    }
}

/// Offset each corner by an independent rounded `N(0, sigma^2)` draw, swap
/// inverted corners, and clamp to `[1, width] x [1, height]` when `bounds` is given.
/// With `sigma == 0` the box is returned untouched and nothing is drawn.
pub fn perturb_box(
    bbox: BoundingBox,
    sigma: f64,
    bounds: Option<ImageSize>,
    rng: &mut impl Rng,
) -> BoundingBox {
    if sigma == 0.0 {
        return bbox;
    }
    let mut jitter = |v: i32| -> i32 {
        let z: f64 = StandardNormal.sample(rng);
        let offset = (sigma * z).round();
        (v as f64 + offset).clamp(i32::MIN as f64, i32::MAX as f64) as i32
    };
    let (x1, y1, x2, y2) = (
        jitter(bbox.xmin()),
        jitter(bbox.ymin()),
        jitter(bbox.xmax()),
        jitter(bbox.ymax()),
    );
    let (mut xmin, mut xmax) = (x1.min(x2), x1.max(x2));
    let (mut ymin, mut ymax) = (y1.min(y2), y1.max(y2));
    if let Some(size) = bounds.filter(|s| s.width > 0 && s.height > 0) {
        let (w, h) = (
            size.width.min(i32::MAX as u32) as i32,
            size.height.min(i32::MAX as u32) as i32,
        );
        xmin = xmin.clamp(1, w);
        xmax = xmax.clamp(1, w);
        ymin = ymin.clamp(1, h);
        ymax = ymax.clamp(1, h);
    }
    BoundingBox::new(xmin, ymin, xmax, ymax).expect("corners ordered before clamping")
}

/// Simulate a weak detector's dump on `gt`. Output order: split order, then
/// object index, then spurious draws.
pub fn corrupt_dataset(gt: &Dataset, params: &NoiseParams, seed: Seed) -> Result<DetectionSet> {
    params.validate()?;
    let spurious = if params.spurious_rate > 0.0 {
        Some(Poisson::new(params.spurious_rate).map_err(|e| {
            Error::InvalidParam(format!("spurious rate {}: {e}", params.spurious_rate))
        })?)
    } else {
        None
    };

    let per_image: Vec<Vec<Detection>> = gt
        .images()
        .par_iter()
        .enumerate()
        .map(|(i, img)| corrupt_image(img, params, spurious.as_ref(), &mut seed.rng(i as u64)))
        .collect();

    Ok(DetectionSet::new(
        per_image.into_iter().flatten().collect(),
        format!("simulated(seed={})", seed.0),
    ))
}

fn corrupt_image(
    img: &ImageRecord,
    params: &NoiseParams,
    spurious: Option<&Poisson<f64>>,
    rng: &mut ChaCha8Rng,
) -> Vec<Detection> {
    let mut out = Vec::new();
    for obj in &img.objects {
        if rng.random::<f64>() < params.miss_prob {
            continue;
        }
        let bbox = perturb_box(obj.bbox, params.jitter_sigma, img.size, rng);
        let flipped = rng.random::<f64>() < params.flip_prob;
        let (class, score) = if flipped {
            let k = rng.random_range(0..ClassLabel::COUNT - 1);
            let k = if k >= obj.class.index() { k + 1 } else { k };
            (ClassLabel::ALL[k], params.score_noise.sample(rng))
        } else {
            (obj.class, params.score_tp.sample(rng))
        };
        out.push(Detection {
            image_id: img.image_id.clone(),
            class,
            score,
            bbox,
        });
    }

    if let Some(poisson) = spurious {
        let extent = img
            .size
            .filter(|s| s.width > 0 && s.height > 0)
            .unwrap_or(ImageSize::VOC_DEFAULT);
        let (w, h) = (extent.width as i32, extent.height as i32);
        let count = poisson.sample(rng) as u64;
        for _ in 0..count {
            let (xa, xb) = (rng.random_range(1..=w), rng.random_range(1..=w));
            let (ya, yb) = (rng.random_range(1..=h), rng.random_range(1..=h));
            let class = ClassLabel::ALL[rng.random_range(0..ClassLabel::COUNT)];
            let score = params.score_noise.sample(rng);
            out.push(Detection {
                image_id: img.image_id.clone(),
                class,
                score,
                bbox: BoundingBox::new(xa.min(xb), ya.min(yb), xa.max(xb), ya.max(yb))
                    .expect("ordered corners"),
            });
        }
    }
    out
}
