//! Coverage-guaranteed shape completion for binary patch masks.
//!
//! Given an observed mask `M_obs` (typically a thresholded patch-segmenter
//! output), [`complete_single_size`] returns the smallest mask that covers
//! every `s x s` square patch `M` with `d_H(M_obs, M) / s^2 <= gamma`.
//! [`complete_multi_size`] unions this over a set of patch sizes and
//! [`gamma_search`] walks an increasing threshold schedule until the
//! completion is nonempty. The [`oracle`] module is an independent
//! brute-force implementation used to check the fast path, and
//! [`corruption`] generates seeded observations for coverage trials.

pub mod completion;
pub mod corruption;
pub mod error;
pub mod mask;
pub mod oracle;
pub mod shape;

pub use completion::{
    apply_mask, complete_multi_size, complete_single_size, distance_cutoff, final_mask, gamma_search, CandidateField,
    CompletionReport, GammaSchedule, MultiSizeCompletion, ShapeCompleter, SingleSizeCompletion, SizeSet,
};
pub use corruption::{corrupt, guarantee_trial, Corrupted, CorruptionKind, CorruptionModel, TrialRecord};
pub use error::{Error, Result};
pub use mask::{hamming_to_candidate, BinaryMask, IntegralImage, PatchCandidate};
pub use oracle::{oracle_complete_multi, oracle_complete_single, oracle_min_distance};
pub use shape::{generate_shape_mask, ShapeKind};
