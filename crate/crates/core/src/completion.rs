//! Square shape completion.
//!
//! Given an observed mask, the completion for patch size `s` and threshold
//! `gamma` is the union of every fully-contained `s x s` window whose relative
//! Hamming distance to the observation is at most `gamma`. It is computed in
//! `O(H * W)` with two summed-area tables: one over the observation gives each
//! window's distance in constant time, one over the acceptance matrix gives
//! each pixel's count of covering accepted windows in constant time.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, IntegralImage};

/// Strictly increasing set of candidate patch sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SizeSet(Vec<usize>);

impl SizeSet {
    /// Sorts the sizes; zero and duplicate sizes are rejected.
    pub fn new(sizes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut sizes: Vec<usize> = sizes.into_iter().collect();
        sizes.sort_unstable();
        if sizes.first() == Some(&0) {
            return Err(Error::InvalidSizeSet("patch sizes must be >= 1".into()));
        }
        if let Some(w) = sizes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSizeSet(format!("duplicate size {}", w[0])));
        }
        Ok(Self(sizes))
    }

    /// `{25, 50, 75, 100}`.
    pub fn xview() -> Self {
        Self(vec![25, 50, 75, 100])
    }

    /// `{25, 50, 75, 100, 125}`.
    pub fn coco() -> Self {
        Self(vec![25, 50, 75, 100, 125])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, s: usize) -> bool {
        self.0.binary_search(&s).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// Geometric schedule `gamma_t = 1 - alpha * beta^(t-1)` for `t = 1..=t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSchedule {
    alpha: f64,
    beta: f64,
    t_max: usize,
}

impl GammaSchedule {
    pub const DEFAULT_ALPHA: f64 = 0.9;
    pub const DEFAULT_BETA: f64 = 0.7;
    pub const DEFAULT_T_MAX: usize = 15;

    /// Requires `0 < alpha < 1`, `0 < beta < 1`, `t_max >= 1`, and that every
    /// step stays strictly increasing and below 1 in double precision.
    pub fn new(alpha: f64, beta: f64, t_max: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidSchedule(format!("alpha must be in (0, 1), got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidSchedule(format!("beta must be in (0, 1), got {beta}")));
        }
        if t_max == 0 {
            return Err(Error::InvalidSchedule("t_max must be >= 1".into()));
        }
        let schedule = Self { alpha, beta, t_max };
        let mut prev = f64::NEG_INFINITY;
        for (t, g) in schedule.iter() {
            if g >= 1.0 || g <= prev {
                return Err(Error::InvalidSchedule(format!(
                    "gamma_{t} = {g} is not strictly increasing below 1; lower t_max"
                )));
            }
            prev = g;
        }
        Ok(schedule)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// `gamma_t` for 1-based `t`.
    pub fn gamma(&self, t: usize) -> f64 {
        assert!(t >= 1, "schedule steps are 1-based");
        1.0 - self.alpha * self.beta.powi((t - 1) as i32)
    }

    /// `(t, gamma_t)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (1..=self.t_max).map(move |t| (t, self.gamma(t)))
    }
}

impl Default for GammaSchedule {
    fn default() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
            beta: Self::DEFAULT_BETA,
            t_max: Self::DEFAULT_T_MAX,
        }
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

/// Largest distance `d` accepted for size `s`, i.e. the largest integer with
/// `d / s^2 <= gamma` under IEEE division. Always `< s^2` for valid `gamma`.
pub fn distance_cutoff(s: usize, gamma: f64) -> Result<u64> {
    check_gamma(gamma)?;
    if s == 0 {
        return Err(Error::ZeroSize);
    }
    let area = (s * s) as u64;
    let af = area as f64;
    let mut k = ((gamma * af).floor() as u64).min(area - 1);
    while k > 0 && (k as f64) / af > gamma {
        k -= 1;
    }
    while k + 1 < area && ((k + 1) as f64) / af <= gamma {
        k += 1;
    }
    Ok(k)
}

/// Acceptance matrix and per-pixel cover counts for one patch size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateField {
    size: usize,
    height: usize,
    width: usize,
    accept: Vec<u8>,
    cover_count: Vec<u32>,
}

impl CandidateField {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `(H - s + 1, W - s + 1)`.
    pub fn accept_dims(&self) -> (usize, usize) {
        (self.height - self.size + 1, self.width - self.size + 1)
    }

    /// Whether the candidate with top-left `(i, j)` is within threshold.
    pub fn accepted(&self, i: usize, j: usize) -> bool {
        let (rows, cols) = self.accept_dims();
        assert!(i < rows && j < cols);
        self.accept[i * cols + j] == 1
    }

    pub fn accepted_count(&self) -> u64 {
        self.accept.iter().map(|&a| a as u64).sum()
    }

    /// Number of accepted windows covering pixel `(i, j)`.
    pub fn cover_count(&self, i: usize, j: usize) -> u32 {
        assert!(i < self.height && j < self.width);
        self.cover_count[i * self.width + j]
    }

    /// Pixels with a nonzero cover count.
    pub fn to_mask(&self) -> BinaryMask {
        let bits = self.cover_count.iter().map(|&c| (c >= 1) as u8).collect();
        BinaryMask::from_bits(self.height, self.width, bits).expect("dimensions already validated")
    }
}

/// Result of completing one patch size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleSizeCompletion {
    pub mask: BinaryMask,
    /// Accepted candidate count.
    pub accepted: u64,
    /// `s` exceeded a dimension, so there were no candidates.
    pub skipped: bool,
}

/// Result of completing every size of a [`SizeSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSizeCompletion {
    pub mask: BinaryMask,
    /// Accepted candidates per non-skipped size.
    pub per_size_accepted: BTreeMap<usize, u64>,
    pub skipped_sizes: Vec<usize>,
}

/// Outcome of [`gamma_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionReport {
    pub attack_found: bool,
    pub gamma_used: Option<f64>,
    /// Schedule step that produced the mask, or `t_max` when none did.
    pub iterations_run: usize,
    pub per_size_accepted: BTreeMap<usize, u64>,
    pub skipped_sizes: Vec<usize>,
    pub output_popcount: u64,
}

/// Reusable completion state for one observed mask: the observation's
/// summed-area table is built once and shared by every size and threshold.
#[derive(Debug, Clone)]
pub struct ShapeCompleter {
    integral: IntegralImage,
}

impl ShapeCompleter {
    pub fn new(observed: &BinaryMask) -> Self {
        Self {
            integral: IntegralImage::new(observed),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.integral.height(), self.integral.width())
    }

    pub fn observed_popcount(&self) -> u64 {
        self.integral.total()
    }

    /// Minimum ones a window must hold to be accepted:
    /// `s^2 + total - 2 * inside <= cutoff`.
    fn min_inside(&self, s: usize, gamma: f64) -> Result<u64> {
        let cutoff = distance_cutoff(s, gamma)?;
        let area = (s * s) as u64;
        let excess = (area + self.integral.total()).saturating_sub(cutoff);
        Ok(excess.div_ceil(2))
    }

    /// Acceptance table padded to `H x W`: entry `(i, j)` is 1 iff the
    /// candidate with top-left `(i, j)` fits and holds at least `min_inside`
    /// ones. Entries without a fully-contained candidate are 0.
    fn accept_matrix(&self, s: usize, min_inside: u64) -> (Vec<u8>, u64) {
        let (h, w) = self.dims();
        let (rows, cols) = (h - s + 1, w - s + 1);
        let stride = w + 1;
        let sums = self.integral.raw();
        let mut accept = vec![0u8; h * w];
        let mut count = 0u64;
        let need = min_inside.min(u32::MAX as u64) as u32;
        let unreachable = min_inside > u32::MAX as u64;
        for i in 0..rows {
            let top = &sums[i * stride..(i + 1) * stride];
            let bottom = &sums[(i + s) * stride..(i + s + 1) * stride];
            let out = &mut accept[i * w..i * w + cols];
            let mut row_count = 0u32;
            let windows = bottom[s..]
                .iter()
                .zip(&bottom[..cols])
                .zip(top[s..].iter().zip(&top[..cols]));
            for (o, ((&br, &bl), (&tr, &tl))) in out.iter_mut().zip(windows) {
                let inside = (br - bl) - (tr - tl);
                let a = (inside >= need && !unreachable) as u8;
                *o = a;
                row_count += a as u32;
            }
            count += row_count as u64;
        }
        (accept, count)
    }

    /// Calls `f(i, row)` for every image row with the number of accepted
    /// windows covering each pixel of that row. Counts come from four lookups
    /// into the summed-area table of the padded acceptance matrix: pixel
    /// `(i, j)` is covered by candidates with top-left in
    /// `[i+1-s, i] x [j+1-s, j]`.
    fn for_each_cover_row(&self, s: usize, accept: &[u8], mut f: impl FnMut(usize, &[u32])) {
        let (h, w) = self.dims();
        let acc = IntegralImage::from_rows(h, w, accept);
        let sums = acc.raw();
        let stride = w + 1;
        let mut band = vec![0u32; stride];
        let mut counts = vec![0u32; w];
        let lead = (s - 1).min(w);
        for i in 0..h {
            let r0 = (i + 1).saturating_sub(s);
            let bottom = &sums[(i + 1) * stride..(i + 2) * stride];
            let top = &sums[r0 * stride..(r0 + 1) * stride];
            // column prefix sums of the accepted rows in [r0, i]
            for ((d, &b), &t) in band.iter_mut().zip(bottom).zip(top) {
                *d = b - t;
            }
            counts[..lead].copy_from_slice(&band[1..=lead]);
            for (c, (&right, &left)) in counts[lead..].iter_mut().zip(band[s..].iter().zip(&band[..])) {
                *c = right - left;
            }
            f(i, &counts);
        }
    }

    /// Acceptance matrix and cover counts for size `s`, or `None` when `s`
    /// exceeds a dimension.
    pub fn candidate_field(&self, s: usize, gamma: f64) -> Result<Option<CandidateField>> {
        let need = self.min_inside(s, gamma)?;
        let (h, w) = self.dims();
        if s > h || s > w {
            return Ok(None);
        }
        let (padded, _) = self.accept_matrix(s, need);
        let mut cover_count = vec![0u32; h * w];
        self.for_each_cover_row(s, &padded, |i, row| {
            cover_count[i * w..(i + 1) * w].copy_from_slice(row)
        });
        let (rows, cols) = (h - s + 1, w - s + 1);
        let accept = (0..rows)
            .flat_map(|i| padded[i * w..i * w + cols].iter().copied())
            .collect();
        Ok(Some(CandidateField {
            size: s,
            height: h,
            width: w,
            accept,
            cover_count,
        }))
    }

    /// Completion for a single patch size.
    pub fn complete(&self, s: usize, gamma: f64) -> Result<SingleSizeCompletion> {
        let need = self.min_inside(s, gamma)?;
        let (h, w) = self.dims();
        let mut mask = BinaryMask::zeros(h, w)?;
        if s > h || s > w {
            return Ok(SingleSizeCompletion {
                mask,
                accepted: 0,
                skipped: true,
            });
        }
        let (accept, accepted) = self.accept_matrix(s, need);
        if accepted > 0 {
            let bits = mask.bits_mut();
            self.for_each_cover_row(s, &accept, |i, row| {
                for (b, &c) in bits[i * w..(i + 1) * w].iter_mut().zip(row) {
                    *b = (c >= 1) as u8;
                }
            });
        }
        Ok(SingleSizeCompletion {
            mask,
            accepted,
            skipped: false,
        })
    }

    /// Union of the single-size completions over `sizes`.
    pub fn complete_multi(&self, sizes: &SizeSet, gamma: f64) -> Result<MultiSizeCompletion> {
        check_gamma(gamma)?;
        let (h, w) = self.dims();
        let mut mask = BinaryMask::zeros(h, w)?;
        let mut per_size_accepted = BTreeMap::new();
        let mut skipped_sizes = Vec::new();
        for s in sizes.iter() {
            let single = self.complete(s, gamma)?;
            if single.skipped {
                skipped_sizes.push(s);
                continue;
            }
            per_size_accepted.insert(s, single.accepted);
            if single.accepted > 0 {
                mask.union_in_place(&single.mask)?;
            }
        }
        Ok(MultiSizeCompletion {
            mask,
            per_size_accepted,
            skipped_sizes,
        })
    }

    /// Runs the schedule and returns the first nonzero multi-size completion.
    pub fn gamma_search(&self, sizes: &SizeSet, schedule: &GammaSchedule) -> Result<(BinaryMask, CompletionReport)> {
        let (h, w) = self.dims();
        let feasible = |s: &usize| *s <= h && *s <= w;
        let skipped_sizes: Vec<usize> = sizes.iter().filter(|s| !feasible(s)).collect();
        let not_found = |per_size_accepted| CompletionReport {
            attack_found: false,
            gamma_used: None,
            iterations_run: schedule.t_max(),
            per_size_accepted,
            skipped_sizes: skipped_sizes.clone(),
            output_popcount: 0,
        };

        // every window is at distance s^2 from an empty observation
        if self.observed_popcount() == 0 {
            let zeros = sizes.iter().filter(feasible).map(|s| (s, 0)).collect();
            return Ok((BinaryMask::zeros(h, w)?, not_found(zeros)));
        }

        let mut last = BTreeMap::new();
        for (t, gamma) in schedule.iter() {
            let out = self.complete_multi(sizes, gamma)?;
            let popcount = out.mask.popcount();
            if popcount > 0 {
                return Ok((
                    out.mask,
                    CompletionReport {
                        attack_found: true,
                        gamma_used: Some(gamma),
                        iterations_run: t,
                        per_size_accepted: out.per_size_accepted,
                        skipped_sizes: out.skipped_sizes,
                        output_popcount: popcount,
                    },
                ));
            }
            last = out.per_size_accepted;
        }
        Ok((BinaryMask::zeros(h, w)?, not_found(last)))
    }
}

/// Completion of `observed` for one patch size at threshold `gamma`.
pub fn complete_single_size(observed: &BinaryMask, s: usize, gamma: f64) -> Result<SingleSizeCompletion> {
    ShapeCompleter::new(observed).complete(s, gamma)
}

/// Completion of `observed` over every size in `sizes` at threshold `gamma`.
pub fn complete_multi_size(observed: &BinaryMask, sizes: &SizeSet, gamma: f64) -> Result<MultiSizeCompletion> {
    ShapeCompleter::new(observed).complete_multi(sizes, gamma)
}

/// Searches the schedule for the first threshold with a nonzero completion.
pub fn gamma_search(
    observed: &BinaryMask,
    sizes: &SizeSet,
    schedule: &GammaSchedule,
) -> Result<(BinaryMask, CompletionReport)> {
    ShapeCompleter::new(observed).gamma_search(sizes, schedule)
}

/// Final mask for shapes that may not be square: observation OR completion.
pub fn final_mask(observed: &BinaryMask, completed: &BinaryMask) -> Result<BinaryMask> {
    observed.union(completed)
}

/// Zeroes the pixels of `grid` covered by `mask`.
pub fn apply_mask(grid: &BinaryMask, mask: &BinaryMask) -> Result<BinaryMask> {
    grid.and_not(mask)
}
