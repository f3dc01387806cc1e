//! Binary masks, summed-area tables and square patch candidates.
//!
//! All indices are 0-based, row-major, with `(row, col)` ordering. Counts and
//! distances are plain integers; nothing in this module touches floating point.

use std::fmt;

use crate::error::{Error, Result};

/// An `height x width` image whose elements are exactly 0 or 1.
///
/// Bit 1 marks an adversarial-patch pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<u8>,
}

impl BinaryMask {
    /// All-zero mask.
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            bits: vec![0; height * width],
        })
    }

    /// All-one mask.
    pub fn ones(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            bits: vec![1; height * width],
        })
    }

    /// Builds a mask from row-major elements, rejecting anything other than 0 or 1.
    pub fn from_bits(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        check_dims(height, width)?;
        if bits.len() != height * width {
            return Err(Error::BitCount {
                expected: height * width,
                actual: bits.len(),
            });
        }
        if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(Error::NonBinary { index, value });
        }
        Ok(Self { height, width, bits })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(height, width)?;
        let mut bits = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                bits.push(f(i, j) as u8);
            }
        }
        Ok(Self { height, width, bits })
    }

    /// The indicator mask of a candidate's `s x s` window.
    pub fn from_candidate(height: usize, width: usize, cand: PatchCandidate) -> Result<Self> {
        cand.check_fits(height, width)?;
        Self::from_fn(height, width, |i, j| cand.contains(i, j))
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Row-major elements, each 0 or 1.
    #[inline]
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.width..(i + 1) * self.width]
    }

    /// Panics if `(i, j)` is out of bounds.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.height && j < self.width, "({i}, {j}) out of bounds");
        self.bits[i * self.width + j] != 0
    }

    /// Panics if `(i, j)` is out of bounds.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.height && j < self.width, "({i}, {j}) out of bounds");
        self.bits[i * self.width + j] = value as u8;
    }

    /// Number of 1 elements (`d_H(0, M)`).
    pub fn popcount(&self) -> u64 {
        self.bits.iter().map(|&b| b as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Element-wise OR.
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    /// Element-wise AND.
    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    /// Element-wise `self AND NOT mask`: zeroes every element covered by `mask`.
    pub fn and_not(&self, mask: &Self) -> Result<Self> {
        self.zip_with(mask, |a, m| a & (m ^ 1))
    }

    /// In-place OR, used when accumulating unions.
    pub fn union_in_place(&mut self, other: &Self) -> Result<()> {
        self.check_same_dims(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    /// Number of differing elements.
    pub fn hamming(&self, other: &Self) -> Result<u64> {
        self.check_same_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).map(|(&a, &b)| (a ^ b) as u64).sum())
    }

    /// True when every 1 of `self` is also a 1 of `other`.
    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        self.check_same_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b))
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Self {
        let mut bits = self.bits.clone();
        for row in bits.chunks_exact_mut(self.width) {
            row.reverse();
        }
        Self { bits, ..*self }
    }

    /// Mirror top-bottom.
    pub fn flip_vertical(&self) -> Self {
        let bits = self.bits.chunks_exact(self.width).rev().flatten().copied().collect();
        Self { bits, ..*self }
    }

    pub fn transpose(&self) -> Self {
        let (h, w) = (self.height, self.width);
        let mut bits = vec![0; h * w];
        for i in 0..h {
            for j in 0..w {
                bits[j * h + i] = self.bits[i * w + j];
            }
        }
        Self {
            height: w,
            width: h,
            bits,
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u8, u8) -> u8) -> Result<Self> {
        self.check_same_dims(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { bits, ..*self })
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.height, self.width)?;
        for row in self.bits.chunks_exact(self.width) {
            let line: String = row.iter().map(|&b| if b == 1 { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::EmptyDimensions { height, width });
    }
    Ok(())
}

/// Upper-left placement of an `size x size` square window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchCandidate {
    pub size: usize,
    pub row: usize,
    pub col: usize,
}

impl PatchCandidate {
    pub fn new(size: usize, row: usize, col: usize) -> Self {
        Self { size, row, col }
    }

    /// Whether the window lies fully inside a `height x width` image.
    pub fn fits(&self, height: usize, width: usize) -> bool {
        self.size >= 1 && self.row + self.size <= height && self.col + self.size <= width
    }

    pub fn check_fits(&self, height: usize, width: usize) -> Result<()> {
        if self.fits(height, width) {
            Ok(())
        } else {
            Err(Error::CandidateOutOfRange {
                size: self.size,
                row: self.row,
                col: self.col,
                height,
                width,
            })
        }
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.row && i < self.row + self.size && j >= self.col && j < self.col + self.size
    }

    /// Every fully-contained placement of size `s`, row-major.
    pub fn all(s: usize, height: usize, width: usize) -> impl Iterator<Item = PatchCandidate> {
        let rows = if s >= 1 && s <= height { height - s + 1 } else { 0 };
        let cols = if s >= 1 && s <= width { width - s + 1 } else { 0 };
        (0..rows).flat_map(move |i| (0..cols).map(move |j| PatchCandidate::new(s, i, j)))
    }
}

/// `(H+1) x (W+1)` summed-area table; row 0 and column 0 are zero and
/// `sum(i, j)` counts the ones in rows `< i` and columns `< j`.
#[derive(Clone, PartialEq, Eq)]
pub struct IntegralImage {
    height: usize,
    width: usize,
    sums: Vec<u32>,
}

impl IntegralImage {
    /// Builds the table in one row-major pass.
    pub fn new(mask: &BinaryMask) -> Self {
        Self::from_rows(mask.height, mask.width, &mask.bits)
    }

    /// Same construction over any row-major 0/1 buffer.
    pub(crate) fn from_rows(height: usize, width: usize, bits: &[u8]) -> Self {
        debug_assert_eq!(bits.len(), height * width);
        let stride = width + 1;
        let mut sums = vec![0u32; (height + 1) * stride];
        for i in 0..height {
            let src = &bits[i * width..(i + 1) * width];
            let (above, below) = sums.split_at_mut((i + 1) * stride);
            let prev = &above[i * stride..];
            let cur = &mut below[..stride];
            let mut run = 0u32;
            for j in 0..width {
                run += src[j] as u32;
                cur[j + 1] = prev[j + 1] + run;
            }
        }
        Self { height, width, sums }
    }

    /// Height of the source mask (the table has one more row).
    pub fn height(&self) -> usize {
        self.height
    }

    /// Width of the source mask (the table has one more column).
    pub fn width(&self) -> usize {
        self.width
    }

    /// Table entry at `(i, j)` with `i <= H`, `j <= W`.
    #[inline]
    pub fn sum(&self, i: usize, j: usize) -> u32 {
        self.sums[i * (self.width + 1) + j]
    }

    pub(crate) fn raw(&self) -> &[u32] {
        &self.sums
    }

    /// Popcount of the source mask.
    pub fn total(&self) -> u64 {
        self.sum(self.height, self.width) as u64
    }

    /// Ones in rows `[r0, r1)` and columns `[c0, c1)`. Four lookups.
    #[inline]
    pub fn rect_sum(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> u32 {
        let stride = self.width + 1;
        let s = &self.sums;
        s[r1 * stride + c1] + s[r0 * stride + c0] - s[r0 * stride + c1] - s[r1 * stride + c0]
    }

    /// Ones inside the candidate's window.
    pub fn window_sum(&self, cand: PatchCandidate) -> Result<u32> {
        cand.check_fits(self.height, self.width)?;
        Ok(self.rect_sum(cand.row, cand.col, cand.row + cand.size, cand.col + cand.size))
    }
}

impl fmt::Debug for IntegralImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegralImage")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("total", &self.total())
            .finish()
    }
}

/// Exact Hamming distance between the source mask and the candidate's
/// indicator: `s^2 + total - 2 * window_sum`.
pub fn hamming_to_candidate(integral: &IntegralImage, total_ones: u64, cand: PatchCandidate) -> Result<u64> {
    let inside = integral.window_sum(cand)? as u64;
    let area = (cand.size * cand.size) as u64;
    Ok(area + total_ones - 2 * inside)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random_mask(h: usize, w: usize, mut state: u64) -> BinaryMask {
        BinaryMask::from_fn(h, w, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state & 1 == 1
        })
        .unwrap()
    }

    #[test]
    fn rejects_empty_and_non_binary() {
        assert!(matches!(BinaryMask::zeros(0, 3), Err(Error::EmptyDimensions { .. })));
        assert!(matches!(
            BinaryMask::from_bits(1, 2, vec![0, 2]),
            Err(Error::NonBinary { index: 1, value: 2 })
        ));
        assert!(matches!(
            BinaryMask::from_bits(2, 2, vec![0, 1, 1]),
            Err(Error::BitCount { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn integral_of_zero_mask_is_zero() {
        let ii = IntegralImage::new(&BinaryMask::zeros(3, 3).unwrap());
        for i in 0..=3 {
            for j in 0..=3 {
                assert_eq!(ii.sum(i, j), 0);
            }
        }
    }

    #[test]
    fn integral_of_ones() {
        let ii = IntegralImage::new(&BinaryMask::ones(2, 2).unwrap());
        assert_eq!(ii.sum(2, 2), 4);
        assert_eq!(ii.sum(1, 1), 1);
        assert_eq!(ii.total(), 4);
    }

    #[test]
    fn integral_matches_double_sum() {
        let m = pseudo_random_mask(8, 8, 0x9e37_79b9_7f4a_7c15);
        let ii = IntegralImage::new(&m);
        for i in 0..=8 {
            for j in 0..=8 {
                let mut direct = 0;
                for a in 0..i {
                    for b in 0..j {
                        direct += m.get(a, b) as u32;
                    }
                }
                assert_eq!(ii.sum(i, j), direct, "({i}, {j})");
            }
        }
        assert_eq!(ii.total(), m.popcount());
    }

    #[test]
    fn window_sum_cases() {
        let ones = IntegralImage::new(&BinaryMask::ones(4, 4).unwrap());
        for cand in PatchCandidate::all(2, 4, 4) {
            assert_eq!(ones.window_sum(cand).unwrap(), 4);
        }
        let zeros = IntegralImage::new(&BinaryMask::zeros(4, 4).unwrap());
        for s in 1..=4 {
            for cand in PatchCandidate::all(s, 4, 4) {
                assert_eq!(zeros.window_sum(cand).unwrap(), 0);
            }
        }
        assert!(matches!(
            ones.window_sum(PatchCandidate::new(2, 3, 0)),
            Err(Error::CandidateOutOfRange { .. })
        ));
    }

    #[test]
    fn window_sum_matches_per_window_loop() {
        let m = pseudo_random_mask(10, 10, 7);
        let ii = IntegralImage::new(&m);
        let mut seen = 0;
        for cand in PatchCandidate::all(3, 10, 10) {
            let mut direct = 0;
            for i in cand.row..cand.row + 3 {
                for j in cand.col..cand.col + 3 {
                    direct += m.get(i, j) as u32;
                }
            }
            assert_eq!(ii.window_sum(cand).unwrap(), direct);
            seen += 1;
        }
        assert_eq!(seen, 64);
    }

    #[test]
    fn hamming_to_candidate_cases() {
        let cand = PatchCandidate::new(3, 2, 4);
        let exact = BinaryMask::from_candidate(9, 9, cand).unwrap();
        let ii = IntegralImage::new(&exact);
        assert_eq!(hamming_to_candidate(&ii, exact.popcount(), cand).unwrap(), 0);

        let empty = BinaryMask::zeros(9, 9).unwrap();
        let ii = IntegralImage::new(&empty);
        for s in 1..=9 {
            for c in PatchCandidate::all(s, 9, 9) {
                assert_eq!(hamming_to_candidate(&ii, 0, c).unwrap(), (s * s) as u64);
            }
        }
    }

    #[test]
    fn hamming_to_candidate_matches_xor_popcount() {
        let m = pseudo_random_mask(12, 12, 12345);
        let ii = IntegralImage::new(&m);
        let total = m.popcount();
        let mut state = 99u64;
        for _ in 0..100 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let s = 1 + (state >> 33) as usize % 12;
            let row = (state >> 20) as usize % (12 - s + 1);
            let col = (state >> 45) as usize % (12 - s + 1);
            let cand = PatchCandidate::new(s, row, col);
            let indicator = BinaryMask::from_candidate(12, 12, cand).unwrap();
            assert_eq!(
                hamming_to_candidate(&ii, total, cand).unwrap(),
                m.hamming(&indicator).unwrap()
            );
        }
    }

    #[test]
    fn union_cases() {
        let a = pseudo_random_mask(6, 7, 3);
        let z = BinaryMask::zeros(6, 7).unwrap();
        assert_eq!(a.union(&z).unwrap(), a);
        assert_eq!(a.union(&a).unwrap(), a);

        let b1 = BinaryMask::from_candidate(6, 6, PatchCandidate::new(2, 0, 0)).unwrap();
        let b2 = BinaryMask::from_candidate(6, 6, PatchCandidate::new(2, 3, 3)).unwrap();
        assert_eq!(b1.union(&b2).unwrap().popcount(), 8);
        assert!(matches!(a.union(&b1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn and_not_cases() {
        let a = pseudo_random_mask(5, 5, 11);
        assert_eq!(a.and_not(&BinaryMask::zeros(5, 5).unwrap()).unwrap(), a);
        assert!(a.and_not(&BinaryMask::ones(5, 5).unwrap()).unwrap().is_zero());
        let m = pseudo_random_mask(5, 5, 17);
        let out = a.and_not(&m).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(out.get(i, j), a.get(i, j) && !m.get(i, j));
            }
        }
    }

    #[test]
    fn transforms_are_involutions() {
        let m = pseudo_random_mask(5, 8, 21);
        assert_eq!(m.flip_horizontal().flip_horizontal(), m);
        assert_eq!(m.flip_vertical().flip_vertical(), m);
        let t = m.transpose();
        assert_eq!(t.dims(), (8, 5));
        assert_eq!(t.get(7, 4), m.get(4, 7));
        assert_eq!(t.transpose(), m);
        assert_eq!(m.flip_horizontal().get(1, 0), m.get(1, 7));
        assert_eq!(m.flip_vertical().get(0, 2), m.get(4, 2));
    }

    #[test]
    fn candidate_enumeration_is_fully_contained() {
        assert_eq!(PatchCandidate::all(3, 5, 4).count(), 6);
        assert_eq!(PatchCandidate::all(6, 5, 10).count(), 0);
        assert_eq!(PatchCandidate::all(0, 5, 5).count(), 0);
        assert!(PatchCandidate::all(2, 4, 7).all(|c| c.fits(4, 7)));
    }
}
