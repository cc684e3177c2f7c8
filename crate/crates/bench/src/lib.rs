//! Fixtures shared by the benchmarks.

use rdseg_core::{Partition, ScalarField, StudyCase, VectorField};

/// Restriction fractions timed against the plain solver.
pub const BENCH_Q: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// The three synthetic study images with their fitting terms.
pub fn study_cases() -> Vec<StudyCase> {
    StudyCase::all().expect("study images are valid")
}

/// Smooth deterministic field with values in [-1, 1].
pub fn wavy_field(w: usize, h: usize) -> ScalarField {
    ScalarField::from_fn(w, h, |i, j| {
        ((i as f64 * 0.37).sin() * (j as f64 * 0.23).cos()).clamp(-1.0, 1.0)
    })
    .expect("nonzero size")
}

pub fn wavy_vector_field(w: usize, h: usize) -> VectorField {
    let a = wavy_field(w, h);
    let b = ScalarField::from_fn(w, h, |i, j| (i as f64 * 0.11 - j as f64 * 0.19).sin())
        .expect("nonzero size");
    VectorField::new(a, b).expect("same size")
}

pub fn partitions(case: &StudyCase) -> Vec<(f64, Partition)> {
    BENCH_Q
        .iter()
        .map(|&q| (q, rdseg_core::partition(&case.f, q).expect("q in range")))
        .collect()
}
