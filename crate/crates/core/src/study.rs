//! The synthetic accuracy/timing study: images, fitting terms and solver
//! settings shared by the command line tool, the benchmarks and the tests.

use crate::error::Result;
use crate::fitting::{
    chan_vese_fitting, distance_selective_fitting, IntensityPair, SelectiveParams,
};
use crate::grid::ScalarField;
use crate::metrics::{make_ground_truth, GroundTruth};
use crate::solver::SolverParams;
use crate::synth::{generate, SynthImage, SynthKind, SynthSpec};

pub const STUDY_SIZE: usize = 128;
/// Gray levels.
pub const STUDY_NOISE_SIGMA: f64 = 20.0;
pub const STUDY_SEED: u64 = 2;
/// Weight of the marker-distance term for [`SynthKind::Concave`].
pub const STUDY_GAMMA: f64 = 1.0;
pub const STUDY_LAMBDA: f64 = 20.0;
pub const STUDY_THETA: f64 = 0.2;
/// Iteration cap for the reference solution. Its change norm keeps creeping
/// down long after the thresholded mask has settled, so `δ = 1e-10` is
/// usually not reached within the cap.
pub const STUDY_GT_MAX_OUTER: usize = 20_000;

/// `0, 0.1, …, 1`.
pub fn study_q_list() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

pub fn study_params() -> SolverParams {
    SolverParams {
        lambda: STUDY_LAMBDA,
        theta: STUDY_THETA,
        ..Default::default()
    }
}

#[derive(Clone, Debug)]
pub struct StudyCase {
    pub kind: SynthKind,
    pub synth: SynthImage,
    pub constants: IntensityPair,
    pub f: ScalarField,
    pub params: SolverParams,
}

impl StudyCase {
    pub fn new(kind: SynthKind, seed: u64) -> Result<Self> {
        let synth = generate(&SynthSpec {
            kind,
            width: STUDY_SIZE,
            height: STUDY_SIZE,
            noise_sigma: STUDY_NOISE_SIGMA,
            seed,
        })?;
        let z = synth.image.to_field();
        let constants =
            IntensityPair::new(f64::from(synth.hi) / 255.0, f64::from(synth.lo) / 255.0)?;
        let f = match &synth.markers {
            Some(m) => {
                distance_selective_fitting(&z, constants, m, SelectiveParams::new(STUDY_GAMMA)?)?
            }
            None => chan_vese_fitting(&z, constants),
        };
        Ok(Self {
            kind,
            synth,
            constants,
            f,
            params: study_params(),
        })
    }

    /// All three kinds at [`STUDY_SEED`].
    pub fn all() -> Result<Vec<Self>> {
        SynthKind::ALL
            .into_iter()
            .map(|k| Self::new(k, STUDY_SEED))
            .collect()
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        make_ground_truth(
            &self.f,
            &SolverParams {
                max_outer: STUDY_GT_MAX_OUTER,
                ..self.params.clone()
            },
        )
    }
}
