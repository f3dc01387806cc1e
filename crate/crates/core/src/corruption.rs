//! Seeded generators of corrupted observations at bounded Hamming distance
//! from a ground-truth mask, and single coverage trials built on them.
//!
//! Randomness comes from ChaCha8 seeded with a 64-bit seed ([`RNG_NAME`]).
//! Independent sub-generators are taken from distinct ChaCha streams of the
//! same seed, so trials are reproducible and can run in any order.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::completion::{check_gamma, complete_single_size, distance_cutoff};
use crate::error::{Error, Result};
use crate::mask::{BinaryMask, PatchCandidate};

/// Identifier of the generator and stream layout; bump on any change that
/// alters outputs for a fixed seed.
pub const RNG_NAME: &str = "chacha8-streams-v1";

const CORRUPTION_STREAM: u64 = 0;
const PLACEMENT_STREAM: u64 = 1;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Failure mode emulated by a corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorruptionKind {
    /// Flip `budget` pixels drawn uniformly without replacement.
    UniformFlip,
    /// Remove ones from the outermost layers of the mask inward.
    ErodeBoundary,
    /// Add ones in the rings just outside the mask.
    DilateOutside,
    /// Cut a hole from the interior of the mask's bounding box.
    SplitHole,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 4] = [
        CorruptionKind::UniformFlip,
        CorruptionKind::ErodeBoundary,
        CorruptionKind::DilateOutside,
        CorruptionKind::SplitHole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::UniformFlip => "uniform-flip",
            CorruptionKind::ErodeBoundary => "erode-boundary",
            CorruptionKind::DilateOutside => "dilate-outside",
            CorruptionKind::SplitHole => "split-hole",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown corruption model '{s}' (expected uniform-flip, erode-boundary, dilate-outside or split-hole)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CorruptionModel {
    pub kind: CorruptionKind,
    /// Maximum number of changed pixels.
    pub budget: u64,
    pub seed: u64,
}

impl CorruptionModel {
    pub fn new(kind: CorruptionKind, budget: u64, seed: u64) -> Self {
        Self { kind, budget, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corrupted {
    pub mask: BinaryMask,
    /// Exact Hamming distance to the input.
    pub distance: u64,
    /// The model could not spend the whole budget.
    pub clamped: bool,
}

/// Applies `model` to `gt`. The result differs from `gt` in at most
/// `model.budget` pixels and depends only on `(gt, model)`.
pub fn corrupt(gt: &BinaryMask, model: CorruptionModel) -> Result<Corrupted> {
    let mut rng = seeded_rng(model.seed, CORRUPTION_STREAM);
    if model.kind != CorruptionKind::UniformFlip && gt.is_zero() {
        return Err(Error::EmptyGroundTruth);
    }
    let mut out = gt.clone();
    if model.budget > 0 {
        match model.kind {
            CorruptionKind::UniformFlip => uniform_flip(&mut out, model.budget, &mut rng),
            CorruptionKind::ErodeBoundary => peel_layers(&mut out, model.budget, true, &mut rng),
            CorruptionKind::DilateOutside => peel_layers(&mut out, model.budget, false, &mut rng),
            CorruptionKind::SplitHole => split_hole(&mut out, model.budget, &mut rng),
        }
    }
    let distance = out.hamming(gt)?;
    debug_assert!(distance <= model.budget);
    Ok(Corrupted {
        mask: out,
        distance,
        clamped: distance < model.budget,
    })
}

fn uniform_flip(mask: &mut BinaryMask, budget: u64, rng: &mut ChaCha8Rng) {
    let len = mask.bits().len();
    let amount = budget.min(len as u64) as usize;
    let bits = mask.bits_mut();
    for idx in sample(rng, len, amount) {
        bits[idx] ^= 1;
    }
}

/// Erosion removes ones that touch a zero or the canvas edge; dilation adds
/// zeros that touch a one. Each layer is consumed fully before the next, and
/// the last partial layer is sampled uniformly.
fn peel_layers(mask: &mut BinaryMask, budget: u64, erode: bool, rng: &mut ChaCha8Rng) {
    let (h, w) = mask.dims();
    let mut remaining = budget;
    while remaining > 0 {
        let bits = mask.bits();
        let mut layer = Vec::new();
        for i in 0..h {
            for j in 0..w {
                let v = bits[i * w + j] == 1;
                if v != erode {
                    continue;
                }
                let neighbours = [
                    (i > 0).then(|| (i - 1) * w + j),
                    (i + 1 < h).then(|| (i + 1) * w + j),
                    (j > 0).then(|| i * w + j - 1),
                    (j + 1 < w).then(|| i * w + j + 1),
                ];
                let on_layer = if erode {
                    neighbours.iter().any(|n| n.is_none_or(|k| bits[k] == 0))
                } else {
                    neighbours.iter().flatten().any(|&k| bits[k] == 1)
                };
                if on_layer {
                    layer.push(i * w + j);
                }
            }
        }
        if layer.is_empty() {
            break;
        }
        if layer.len() as u64 > remaining {
            let (chosen, _) = layer.partial_shuffle(rng, remaining as usize);
            layer = chosen.to_vec();
        }
        remaining -= layer.len() as u64;
        let bits = mask.bits_mut();
        for k in layer {
            bits[k] ^= 1;
        }
    }
}

/// Clears a block of about `budget` pixels placed away from the edge of the
/// mask's bounding box where possible: an `a x b` rectangle plus a partial
/// extra row holding the remainder.
fn split_hole(mask: &mut BinaryMask, budget: u64, rng: &mut ChaCha8Rng) {
    let (h, w) = mask.dims();
    let Some((r0, c0, r1, c1)) = bounding_box(mask) else {
        return;
    };
    let (bh, bw) = (r1 - r0, c1 - c0);
    let budget = budget.min((bh * bw) as u64) as usize;
    let mut a = ((budget as f64).sqrt().floor() as usize).clamp(1, bh);
    let mut b = (budget / a).min(bw);
    if b == 0 {
        return;
    }
    // keep the remainder row inside the box
    let mut rem = budget - a * b;
    if rem > 0 && a == bh {
        rem = 0;
    }
    if b == bw && rem > 0 {
        a = (a + 1).min(bh);
        b = (budget / a).min(bw);
        rem = (budget - a * b).min(if a < bh { b } else { 0 });
    }
    let rows_needed = a + usize::from(rem > 0);
    let row = pick_offset(r0, bh, rows_needed, rng);
    let col = pick_offset(c0, bw, b, rng);
    debug_assert!(row + rows_needed <= h && col + b <= w);
    let bits = mask.bits_mut();
    for i in row..row + a {
        bits[i * w + col..i * w + col + b].fill(0);
    }
    if rem > 0 {
        let i = row + a;
        bits[i * w + col..i * w + col + rem].fill(0);
    }
}

/// Offset of a `len` span inside `[start, start + extent)`, strictly interior
/// when there is room for a one-pixel margin on both sides.
fn pick_offset(start: usize, extent: usize, len: usize, rng: &mut ChaCha8Rng) -> usize {
    if extent >= len + 2 {
        start + rng.gen_range(1..=extent - len - 1)
    } else {
        start + rng.gen_range(0..=extent - len)
    }
}

/// Half-open `(r0, c0, r1, c1)` box around the ones.
fn bounding_box(mask: &BinaryMask) -> Option<(usize, usize, usize, usize)> {
    let h = mask.height();
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for i in 0..h {
        for (j, &b) in mask.row(i).iter().enumerate() {
            if b == 1 {
                bbox = Some(match bbox {
                    None => (i, j, i + 1, j + 1),
                    Some((r0, c0, r1, c1)) => (r0.min(i), c0.min(j), r1.max(i + 1), c1.max(j + 1)),
                });
            }
        }
    }
    bbox
}

/// Outcome of one coverage trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub size: usize,
    pub placement: PatchCandidate,
    pub gamma: f64,
    pub model: CorruptionModel,
    /// Hamming distance between observation and ground truth.
    pub distance: u64,
    /// `distance / s^2 <= gamma`, the hypothesis of the coverage guarantee.
    pub within_budget: bool,
    /// Every ground-truth pixel is set in the completion.
    pub covered: bool,
}

impl TrialRecord {
    /// A trial fails only when it is within budget and not covered.
    pub fn passed(&self) -> bool {
        self.covered || !self.within_budget
    }
}

/// Largest corruption budget covered by the guarantee for size `s`.
pub fn guarantee_budget(s: usize, gamma: f64) -> Result<u64> {
    distance_cutoff(s, gamma)
}

/// Places a random fully-contained `s x s` patch on `canvas`, corrupts it
/// with `model`, completes the observation with size `s` at `gamma`, and
/// checks the completion covers the patch.
pub fn guarantee_trial(s: usize, canvas: (usize, usize), gamma: f64, model: CorruptionModel) -> Result<TrialRecord> {
    check_gamma(gamma)?;
    let (h, w) = canvas;
    if s == 0 {
        return Err(Error::ZeroSize);
    }
    if s > h || s > w {
        return Err(Error::NoCandidate {
            size: s,
            height: h,
            width: w,
        });
    }
    let mut rng = seeded_rng(model.seed, PLACEMENT_STREAM);
    let placement = PatchCandidate::new(s, rng.gen_range(0..=h - s), rng.gen_range(0..=w - s));
    let gt = BinaryMask::from_candidate(h, w, placement)?;
    let observed = corrupt(&gt, model)?;
    let completion = complete_single_size(&observed.mask, s, gamma)?;
    let covered = gt.is_subset_of(&completion.mask)?;
    Ok(TrialRecord {
        size: s,
        placement,
        gamma,
        model,
        distance: observed.distance,
        within_budget: observed.distance <= distance_cutoff(s, gamma)?,
        covered,
    })
}
