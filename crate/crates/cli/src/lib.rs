//! Command-line tooling for patch-mask completion: PBM mask I/O, JSON
//! reports, seeded trials and the scaling benchmark.

pub mod app;
pub mod bench;
pub mod pbm;

pub use app::run;
