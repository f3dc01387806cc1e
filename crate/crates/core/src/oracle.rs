//! Brute-force reference completion by direct candidate enumeration.
//!
//! Nothing here uses summed-area tables or the completion module. Each
//! candidate's distance is the mismatch count inside its window plus the
//! ones outside it, and accepted windows are painted into the output one by
//! one. `O(H * W * s^2)` per size.

use crate::completion::SizeSet;
use crate::error::{Error, Result};
use crate::mask::{BinaryMask, PatchCandidate};

fn validate(gamma: f64) -> Result<()> {
    if gamma.is_nan() || !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    Ok(())
}

fn ones_in_window(mask: &BinaryMask, cand: PatchCandidate) -> u64 {
    let mut n = 0u64;
    for i in cand.row..cand.row + cand.size {
        n += mask.row(i)[cand.col..cand.col + cand.size]
            .iter()
            .map(|&b| b as u64)
            .sum::<u64>();
    }
    n
}

/// Hamming distance between `mask` and the candidate's indicator.
pub fn candidate_distance(mask: &BinaryMask, total_ones: u64, cand: PatchCandidate) -> u64 {
    let inside = ones_in_window(mask, cand);
    let area = (cand.size * cand.size) as u64;
    // zeros inside the window plus ones outside it
    (area - inside) + (total_ones - inside)
}

/// Union of every fully-contained `s x s` window with `d / s^2 <= gamma`.
pub fn oracle_complete_single(mask: &BinaryMask, s: usize, gamma: f64) -> Result<BinaryMask> {
    validate(gamma)?;
    if s == 0 {
        return Err(Error::ZeroSize);
    }
    let (h, w) = mask.dims();
    let mut out = BinaryMask::zeros(h, w)?;
    let total = mask.popcount();
    let area = (s * s) as f64;
    for cand in PatchCandidate::all(s, h, w) {
        let d = candidate_distance(mask, total, cand);
        if d as f64 / area <= gamma {
            for i in cand.row..cand.row + s {
                for j in cand.col..cand.col + s {
                    out.set(i, j, true);
                }
            }
        }
    }
    Ok(out)
}

/// Union of [`oracle_complete_single`] over `sizes`.
pub fn oracle_complete_multi(mask: &BinaryMask, sizes: &SizeSet, gamma: f64) -> Result<BinaryMask> {
    validate(gamma)?;
    let (h, w) = mask.dims();
    let mut out = BinaryMask::zeros(h, w)?;
    for s in sizes.iter() {
        out = out.union(&oracle_complete_single(mask, s, gamma)?)?;
    }
    Ok(out)
}

/// Smallest candidate distance for size `s` and the first (row-major)
/// candidate attaining it.
pub fn oracle_min_distance(mask: &BinaryMask, s: usize) -> Result<(u64, PatchCandidate)> {
    if s == 0 {
        return Err(Error::ZeroSize);
    }
    let (h, w) = mask.dims();
    let total = mask.popcount();
    let mut best: Option<(u64, PatchCandidate)> = None;
    for cand in PatchCandidate::all(s, h, w) {
        let d = candidate_distance(mask, total, cand);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cand));
        }
    }
    best.ok_or(Error::NoCandidate {
        size: s,
        height: h,
        width: w,
    })
}
