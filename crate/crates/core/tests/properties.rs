use patch_completion::corruption::guarantee_budget;
use patch_completion::shape::shape_footprint;
use patch_completion::*;
use proptest::prelude::*;

fn mask_strategy(max_h: usize, max_w: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max_h, 1..=max_w, 0u32..=100).prop_flat_map(|(h, w, density)| {
        proptest::collection::vec(0u32..100, h * w).prop_map(move |v| {
            let bits = v.into_iter().map(|x| (x < density) as u8).collect();
            BinaryMask::from_bits(h, w, bits).unwrap()
        })
    })
}

/// A square patch with some pixels flipped, so completions are nonempty
/// reasonably often.
fn patchy_mask_strategy(max_dim: usize, max_s: usize) -> impl Strategy<Value = (BinaryMask, usize)> {
    (1..=max_s, 0usize..=max_dim, 0usize..=max_dim).prop_flat_map(move |(s, extra_h, extra_w)| {
        let (h, w) = ((s + extra_h).min(max_dim.max(s)), (s + extra_w).min(max_dim.max(s)));
        (
            0..=h - s,
            0..=w - s,
            proptest::collection::vec((0..h, 0..w), 0..=(s * s / 2 + 1)),
        )
            .prop_map(move |(r, c, flips)| {
                let mut m = BinaryMask::from_candidate(h, w, PatchCandidate::new(s, r, c)).unwrap();
                for (i, j) in flips {
                    let v = m.get(i, j);
                    m.set(i, j, !v);
                }
                (m, s)
            })
    })
}

fn direct_window_sum(m: &BinaryMask, c: PatchCandidate) -> u32 {
    let mut n = 0;
    for i in c.row..c.row + c.size {
        for j in c.col..c.col + c.size {
            n += m.get(i, j) as u32;
        }
    }
    n
}

#[test]
fn window_sums_exhaustive_small() {
    // every 3x3 mask, every candidate
    for code in 0u32..512 {
        let m = BinaryMask::from_fn(3, 3, |i, j| code >> (i * 3 + j) & 1 == 1).unwrap();
        let ii = IntegralImage::new(&m);
        for s in 1..=3 {
            for c in PatchCandidate::all(s, 3, 3) {
                assert_eq!(ii.window_sum(c).unwrap(), direct_window_sum(&m, c));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn window_sums_match_direct(m in mask_strategy(32, 32)) {
        let ii = IntegralImage::new(&m);
        prop_assert_eq!(ii.total(), m.popcount());
        let (h, w) = m.dims();
        for s in 1..=h.min(w).min(6) {
            for c in PatchCandidate::all(s, h, w) {
                prop_assert_eq!(ii.window_sum(c).unwrap(), direct_window_sum(&m, c));
            }
        }
    }

    #[test]
    fn integral_table_invariants(m in mask_strategy(20, 20)) {
        let ii = IntegralImage::new(&m);
        let (h, w) = m.dims();
        for i in 0..=h {
            prop_assert_eq!(ii.sum(i, 0), 0);
            for j in 0..=w {
                prop_assert_eq!(ii.sum(0, j), 0);
                if i > 0 { prop_assert!(ii.sum(i, j) >= ii.sum(i - 1, j)); }
                if j > 0 { prop_assert!(ii.sum(i, j) >= ii.sum(i, j - 1)); }
            }
        }
    }

    #[test]
    fn window_sums_flip_equivariant(m in mask_strategy(16, 16), s in 1usize..5) {
        let (h, w) = m.dims();
        let a = IntegralImage::new(&m);
        let fh = IntegralImage::new(&m.flip_horizontal());
        let fv = IntegralImage::new(&m.flip_vertical());
        let t = IntegralImage::new(&m.transpose());
        for c in PatchCandidate::all(s, h, w) {
            let v = a.window_sum(c).unwrap();
            prop_assert_eq!(fh.window_sum(PatchCandidate::new(s, c.row, w - s - c.col)).unwrap(), v);
            prop_assert_eq!(fv.window_sum(PatchCandidate::new(s, h - s - c.row, c.col)).unwrap(), v);
            prop_assert_eq!(t.window_sum(PatchCandidate::new(s, c.col, c.row)).unwrap(), v);
        }
    }

    #[test]
    fn hamming_to_candidate_is_xor_popcount(m in mask_strategy(16, 16), s in 1usize..8) {
        let (h, w) = m.dims();
        let ii = IntegralImage::new(&m);
        let total = m.popcount();
        for c in PatchCandidate::all(s, h, w) {
            let indicator = BinaryMask::from_candidate(h, w, c).unwrap();
            prop_assert_eq!(hamming_to_candidate(&ii, total, c).unwrap(), m.hamming(&indicator).unwrap());
        }
    }

    #[test]
    fn inclusion_exclusion(pair in (1usize..20, 1usize..20).prop_flat_map(|(h, w)| {
        let v = proptest::collection::vec(0u8..=1, h * w);
        (Just(h), Just(w), v.clone(), v)
    })) {
        let (h, w, a, b) = pair;
        let a = BinaryMask::from_bits(h, w, a).unwrap();
        let b = BinaryMask::from_bits(h, w, b).unwrap();
        let u = a.union(&b).unwrap().popcount();
        let i = a.intersection(&b).unwrap().popcount();
        prop_assert_eq!(u + i, a.popcount() + b.popcount());
    }

    #[test]
    fn completion_matches_oracle(m in mask_strategy(24, 24), s in 1usize..=8, step in 0usize..10) {
        let gamma = step as f64 / 10.0;
        let fast = complete_single_size(&m, s, gamma).unwrap().mask;
        let slow = oracle_complete_single(&m, s, gamma).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn completion_matches_oracle_near_patches((m, s) in patchy_mask_strategy(24, 8), step in 0usize..10) {
        let gamma = step as f64 / 10.0;
        let fast = complete_single_size(&m, s, gamma).unwrap().mask;
        let slow = oracle_complete_single(&m, s, gamma).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn cover_count_matches_output((m, s) in patchy_mask_strategy(20, 6), step in 0usize..10) {
        let gamma = step as f64 / 10.0;
        let completer = ShapeCompleter::new(&m);
        let out = completer.complete(s, gamma).unwrap().mask;
        let (h, w) = m.dims();
        if let Some(field) = completer.candidate_field(s, gamma).unwrap() {
            for i in 0..h {
                for j in 0..w {
                    prop_assert_eq!(field.cover_count(i, j) >= 1, out.get(i, j));
                }
            }
        } else {
            prop_assert!(out.is_zero());
        }
    }

    #[test]
    fn gamma_monotone((m, s) in patchy_mask_strategy(20, 8), a in 0usize..10, b in 0usize..10) {
        let (g1, g2) = (a.min(b) as f64 / 10.0, a.max(b) as f64 / 10.0);
        let sizes = SizeSet::new([s, s + 1]).unwrap();
        let lo = complete_multi_size(&m, &sizes, g1).unwrap().mask;
        let hi = complete_multi_size(&m, &sizes, g2).unwrap().mask;
        prop_assert!(lo.is_subset_of(&hi).unwrap());
    }

    #[test]
    fn size_set_monotone((m, s) in patchy_mask_strategy(20, 8), extra in proptest::collection::btree_set(1usize..10, 0..4), step in 0usize..10) {
        let gamma = step as f64 / 10.0;
        let small = SizeSet::new([s]).unwrap();
        let big = SizeSet::new(extra.into_iter().chain([s]).collect::<std::collections::BTreeSet<_>>()).unwrap();
        let lo = complete_multi_size(&m, &small, gamma).unwrap().mask;
        let hi = complete_multi_size(&m, &big, gamma).unwrap().mask;
        prop_assert!(lo.is_subset_of(&hi).unwrap());
    }

    #[test]
    fn symmetry_equivariance((m, s) in patchy_mask_strategy(20, 8), step in 0usize..10) {
        let gamma = step as f64 / 10.0;
        let c = |x: &BinaryMask| complete_single_size(x, s, gamma).unwrap().mask;
        let base = c(&m);
        prop_assert_eq!(c(&m.flip_horizontal()), base.flip_horizontal());
        prop_assert_eq!(c(&m.flip_vertical()), base.flip_vertical());
        prop_assert_eq!(c(&m.transpose()), base.transpose());
    }

    #[test]
    fn gamma_search_is_deterministic((m, s) in patchy_mask_strategy(20, 8)) {
        let sizes = SizeSet::new([s]).unwrap();
        let a = gamma_search(&m, &sizes, &GammaSchedule::default()).unwrap();
        let b = gamma_search(&m, &sizes, &GammaSchedule::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn corruption_stays_within_budget(s in 2usize..12, budget in 0u64..80, seed: u64, kind in 0usize..4) {
        let gt = BinaryMask::from_candidate(24, 24, PatchCandidate::new(s, 3, 5)).unwrap();
        let model = CorruptionModel::new(CorruptionKind::ALL[kind], budget, seed);
        let out = corrupt(&gt, model).unwrap();
        prop_assert_eq!(out.distance, out.mask.hamming(&gt).unwrap());
        prop_assert!(out.distance <= budget);
        prop_assert_eq!(corrupt(&gt, model).unwrap(), out);
    }
}

#[test]
fn oracle_multi_matches_completion_exhaustive_4x4() {
    let sizes = SizeSet::new([2, 3]).unwrap();
    for code in 0u32..1 << 16 {
        let m = BinaryMask::from_fn(4, 4, |i, j| code >> (i * 4 + j) & 1 == 1).unwrap();
        for gamma in [0.0, 0.25, 0.5, 0.75] {
            assert_eq!(
                complete_multi_size(&m, &sizes, gamma).unwrap().mask,
                oracle_complete_multi(&m, &sizes, gamma).unwrap(),
                "code {code:#06x}, gamma {gamma}"
            );
        }
    }
}

#[test]
fn three_bits_off_matches_oracle() {
    let mut m = BinaryMask::from_candidate(20, 20, PatchCandidate::new(5, 6, 8)).unwrap();
    for (i, j) in [(6, 8), (8, 10), (10, 12)] {
        m.set(i, j, false);
    }
    let fast = complete_single_size(&m, 5, 0.2).unwrap().mask;
    assert_eq!(fast, oracle_complete_single(&m, 5, 0.2).unwrap());
    // the true window is at distance 3 <= 5 and must be covered
    assert!(BinaryMask::from_candidate(20, 20, PatchCandidate::new(5, 6, 8))
        .unwrap()
        .is_subset_of(&fast)
        .unwrap());
}

#[test]
fn multi_size_decomposes_on_large_canvas() {
    let gt = generate_shape_mask(ShapeKind::Square, 60, (200, 150), (500, 500)).unwrap();
    let observed = corrupt(&gt, CorruptionModel::new(CorruptionKind::UniformFlip, 500, 11))
        .unwrap()
        .mask;
    let sizes = SizeSet::xview();
    for gamma in [0.1, 0.5] {
        let multi = complete_multi_size(&observed, &sizes, gamma).unwrap().mask;
        let mut expected = BinaryMask::zeros(500, 500).unwrap();
        for s in sizes.iter() {
            expected = expected
                .union(&complete_single_size(&observed, s, gamma).unwrap().mask)
                .unwrap();
        }
        assert_eq!(multi, expected);
    }
}

#[test]
fn gamma_search_thirty_percent_off() {
    let schedule = GammaSchedule::default();
    for (s, seed) in [(10usize, 1u64), (12, 2), (16, 3), (20, 4)] {
        let gt = BinaryMask::from_candidate(48, 48, PatchCandidate::new(s, 9, 17)).unwrap();
        let off = ((s * s) as f64 * 0.3).round() as u64;
        let mut observed = gt.clone();
        // remove `off` pixels from the patch interior, leaving the window fixed
        let mut removed = 0;
        'outer: for i in 9..9 + s {
            for j in 17..17 + s {
                if removed == off {
                    break 'outer;
                }
                if !(i * 7 + j * 13 + seed as usize).is_multiple_of(3) {
                    observed.set(i, j, false);
                    removed += 1;
                }
            }
        }
        assert_eq!(observed.hamming(&gt).unwrap(), off);

        let sizes = SizeSet::new([s]).unwrap();
        let (mask, report) = gamma_search(&observed, &sizes, &schedule).unwrap();
        let (dmin, _) = oracle_min_distance(&observed, s).unwrap();
        let ratio = dmin as f64 / (s * s) as f64;
        let expected_t = schedule.iter().find(|&(_, g)| ratio <= g).map(|(t, _)| t).unwrap();
        assert_eq!(report.iterations_run, expected_t, "s = {s}");
        // per-step oracle: earlier steps are empty, the stopping step is the returned mask
        for (t, g) in schedule.iter().take(expected_t) {
            let o = oracle_complete_single(&observed, s, g).unwrap();
            if t < expected_t {
                assert!(o.is_zero());
            } else {
                assert_eq!(o, mask);
                assert_eq!(report.gamma_used, Some(g));
            }
        }
        assert!(gt.is_subset_of(&mask).unwrap());
    }
}

#[test]
fn coverage_guarantee_per_size() {
    let gamma = 0.3;
    for s in [4usize, 8, 13] {
        let budget = guarantee_budget(s, gamma).unwrap();
        for kind in CorruptionKind::ALL {
            for seed in 0..250 {
                let rec = guarantee_trial(s, (40, 40), gamma, CorruptionModel::new(kind, budget, seed)).unwrap();
                assert!(rec.within_budget);
                assert!(rec.covered, "s={s} {kind} seed={seed}");
            }
        }
    }
}

fn components(m: &BinaryMask) -> usize {
    let (h, w) = m.dims();
    let mut seen = vec![false; h * w];
    let mut count = 0;
    for start in 0..h * w {
        if seen[start] || m.bits()[start] == 0 {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (i, j) = (k / w, k % w);
            let mut push = |ni: usize, nj: usize| {
                let nk = ni * w + nj;
                if m.bits()[nk] == 1 && !seen[nk] {
                    seen[nk] = true;
                    stack.push(nk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < h {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < w {
                push(i, j + 1);
            }
        }
    }
    count
}

#[test]
fn shapes_are_single_regions() {
    for kind in ShapeKind::ALL {
        for n in [20usize, 50, 75, 100, 125] {
            let fp = shape_footprint(kind, n).unwrap();
            assert_eq!(components(&fp), 1, "{kind} n={n}");
            let target = (n * n) as f64;
            let rel = (fp.popcount() as f64 - target).abs() / target;
            assert!(rel <= 0.02, "{kind} n={n}");
        }
    }
    let ellipse = generate_shape_mask(ShapeKind::Ellipse, 100, (100, 50), (500, 500)).unwrap();
    assert!((9800..=10200).contains(&ellipse.popcount()));
}
