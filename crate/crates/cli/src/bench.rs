//! Wall-clock scaling benchmark for the summed-area-table completion and the
//! brute-force oracle.

use std::hint::black_box;
use std::time::Instant;

use patch_completion::{
    corrupt, generate_shape_mask, oracle_complete_single, BinaryMask, CorruptionKind, CorruptionModel, ShapeCompleter,
    ShapeKind,
};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct BenchConfig {
    /// Square canvas side lengths.
    pub canvases: Vec<usize>,
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub oracle_repetitions: usize,
    /// Oracle timings are taken only on canvases up to this side length
    /// (0 disables the oracle).
    pub oracle_max_canvas: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            canvases: vec![512, 1024],
            sizes: vec![25, 50, 100],
            repetitions: 15,
            oracle_repetitions: 3,
            oracle_max_canvas: 512,
            gamma: 0.3,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchEntry {
    pub canvas: usize,
    pub size: usize,
    pub accepted: u64,
    pub dp_median_ms: f64,
    pub oracle_median_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaScaling {
    pub size: usize,
    pub from_canvas: usize,
    pub to_canvas: usize,
    /// DP time at `to_canvas` over DP time at `from_canvas`.
    pub dp_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeSpread {
    pub canvas: usize,
    /// `max / min - 1` of the DP medians over sizes.
    pub dp_relative_spread: f64,
    /// Oracle time at the largest size over the smallest size.
    pub oracle_growth: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub config: BenchConfig,
    pub entries: Vec<BenchEntry>,
    pub area_scaling: Vec<AreaScaling>,
    pub size_spread: Vec<SizeSpread>,
}

/// A centered `s x s` patch with `floor(s^2 / 10)` uniformly flipped pixels,
/// so every size has accepted candidates at the default threshold.
pub fn bench_mask(canvas: usize, s: usize, seed: u64) -> BinaryMask {
    let off = (canvas - s) / 2;
    let gt = generate_shape_mask(ShapeKind::Square, s, (off, off), (canvas, canvas)).expect("size fits canvas");
    let budget = (s * s / 10) as u64;
    corrupt(&gt, CorruptionModel::new(CorruptionKind::UniformFlip, budget, seed))
        .expect("uniform flips never fail")
        .mask
}

pub fn median(mut samples: Vec<f64>) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

fn elapsed_ms(f: impl FnOnce()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64() * 1e3
}

/// Times the DP path (table construction plus completion) per
/// `(canvas, size)`, and the oracle where enabled. Repetitions are
/// interleaved round-robin across sizes so that slow drift in machine speed
/// affects every size alike.
pub fn run_bench(config: &BenchConfig) -> BenchReport {
    let cases: Vec<(usize, usize, BinaryMask)> = config
        .canvases
        .iter()
        .flat_map(|&c| config.sizes.iter().filter(move |&&s| s <= c).map(move |&s| (c, s)))
        .map(|(c, s)| (c, s, bench_mask(c, s, config.seed)))
        .collect();

    let dp = |mask: &BinaryMask, s: usize| {
        let completer = ShapeCompleter::new(black_box(mask));
        black_box(completer.complete(s, config.gamma).expect("valid gamma"));
    };
    let oracle = |mask: &BinaryMask, s: usize| {
        black_box(oracle_complete_single(black_box(mask), s, config.gamma).expect("valid gamma"));
    };
    let with_oracle = |c: usize| config.oracle_repetitions > 0 && c <= config.oracle_max_canvas;

    // sizes are interleaved within a canvas; canvases run as separate blocks
    // so buffers of one canvas size do not disturb timings of another
    let mut dp_samples = vec![Vec::new(); cases.len()];
    for &canvas in &config.canvases {
        let block: Vec<usize> = (0..cases.len()).filter(|&k| cases[k].0 == canvas).collect();
        for _ in 0..2 {
            for &k in &block {
                dp(&cases[k].2, cases[k].1);
            }
        }
        for _ in 0..config.repetitions.max(1) {
            for &k in &block {
                let (_, s, mask) = &cases[k];
                dp_samples[k].push(elapsed_ms(|| dp(mask, *s)));
            }
        }
    }
    let mut oracle_samples = vec![Vec::new(); cases.len()];
    for _ in 0..config.oracle_repetitions {
        for (k, (c, s, mask)) in cases.iter().enumerate() {
            if with_oracle(*c) {
                oracle_samples[k].push(elapsed_ms(|| oracle(mask, *s)));
            }
        }
    }

    let entries: Vec<BenchEntry> = cases
        .iter()
        .zip(dp_samples.into_iter().zip(oracle_samples))
        .map(|((canvas, s, mask), (dp_t, oracle_t))| BenchEntry {
            canvas: *canvas,
            size: *s,
            accepted: ShapeCompleter::new(mask)
                .complete(*s, config.gamma)
                .expect("valid gamma")
                .accepted,
            dp_median_ms: median(dp_t),
            oracle_median_ms: (!oracle_t.is_empty()).then(|| median(oracle_t)),
        })
        .collect();

    let find = |c: usize, s: usize| entries.iter().find(|e| e.canvas == c && e.size == s);
    let mut area_scaling = Vec::new();
    for pair in config.canvases.windows(2) {
        for &s in &config.sizes {
            if let (Some(a), Some(b)) = (find(pair[0], s), find(pair[1], s)) {
                area_scaling.push(AreaScaling {
                    size: s,
                    from_canvas: pair[0],
                    to_canvas: pair[1],
                    dp_ratio: b.dp_median_ms / a.dp_median_ms,
                });
            }
        }
    }

    let mut size_spread = Vec::new();
    for &canvas in &config.canvases {
        let row: Vec<&BenchEntry> = entries.iter().filter(|e| e.canvas == canvas).collect();
        if row.is_empty() {
            continue;
        }
        let max = row.iter().map(|e| e.dp_median_ms).fold(f64::MIN, f64::max);
        let min = row.iter().map(|e| e.dp_median_ms).fold(f64::MAX, f64::min);
        let oracle_growth = match (
            row.first().and_then(|e| e.oracle_median_ms),
            row.last().and_then(|e| e.oracle_median_ms),
        ) {
            (Some(first), Some(last)) if row.len() > 1 => Some(last / first),
            _ => None,
        };
        size_spread.push(SizeSpread {
            canvas,
            dp_relative_spread: max / min - 1.0,
            oracle_growth,
        });
    }

    BenchReport {
        schema_version: 1,
        config: config.clone(),
        entries,
        area_scaling,
        size_spread,
    }
}
