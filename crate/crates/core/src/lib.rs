//! Two-phase image segmentation by the dual (projection) method for the
//! convex-relaxed TV + fitting energy
//!
//! ```text
//! min_{u ∈ [0,1]}  Σ |∇u| + λ Σ f·u
//! ```
//!
//! with an optional restricted domain: pixels whose fitting value is decisive
//! are pinned to foreground or background up front and the iteration only
//! runs where `|f|` is small.
//!
//! ```no_run
//! use rdseg_core::{chan_vese_fitting, solve, IntensityPair, ScalarField, SolverParams};
//!
//! let z = ScalarField::from_fn(64, 64, |i, j| if i + j < 64 { 0.8 } else { 0.2 })?;
//! let f = chan_vese_fitting(&z, IntensityPair::new(0.8, 0.2)?);
//! let (state, report) = solve(&f, &SolverParams::default(), 0.5)?;
//! println!("{} iterations, energy {}", report.outer_iterations, report.energy);
//! # let _ = state;
//! # Ok::<(), rdseg_core::Error>(())
//! ```

pub mod error;
pub mod fitting;
pub mod grid;
pub mod metrics;
pub mod partition;
pub mod pgm;
pub mod solver;
pub mod study;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use fitting::{
    chan_vese_fitting, distance_selective_fitting, estimate_constants, marker_distance,
    normalize_fitting, IntensityPair, MarkerSet, SelectiveParams,
};
pub use grid::{divergence, gradient, pointwise_norm, total_variation, ScalarField, VectorField};
pub use metrics::{
    l2_difference, make_ground_truth, tanimoto, threshold_indicator, BinaryMask, GroundTruth,
};
pub use partition::{initial_indicator, partition, Label, Partition, Span};
pub use pgm::GrayImage;
pub use solver::{
    psi, relaxed_energy, rho_step, solve, solve_unrestricted, solve_unrestricted_observed,
    solve_with_partition, solve_with_partition_observed, split_energy, update_u, update_v,
    SolveReport, SolverParams, SolverState, StopNorm,
};
pub use study::{study_params, study_q_list, StudyCase};
pub use sweep::{
    evaluate, evaluate_fastest, read_sweep_csv, run_sweep, time_saving, SweepMode, SweepRecord,
    SweepWriter, ACCURATE_E1,
};
pub use synth::{generate, SynthImage, SynthKind, SynthSpec};
