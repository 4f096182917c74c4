//! Batch front end: configuration, scenarios and reports.

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{RunConfig, Scenario};
pub use report::{Assertion, Report};
pub use scenario::run;

/// Exit status when the scenario ran but an assertion failed.
pub const EXIT_ASSERTION: i32 = 10;

/// Exit code table shown by `--help`.
pub const EXIT_CODES: &str = "\
Exit codes:
  0   success, all assertions passed
  1   i/o error
  2   configuration or expression error
  3   geometry (transversality, coverage, orientation)
  4   fields (mask too thin, division by degeneracy)
  5   elliptic stage (solver divergence, maximum principle, continuation stall)
  6   compatibility (characteristic corner, incompatible data)
  7   hyperbolic stage (CFL violation, instability)
  8   composite (glue defect)
  9   Nash-Moser (transform degenerate, residual stagnation)
  10  an assertion failed";
