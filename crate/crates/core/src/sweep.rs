//! Accuracy and timing as a function of the restriction fraction `q`.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::metrics::{l2_difference, tanimoto, threshold_indicator, GroundTruth};
use crate::partition::partition;
use crate::solver::{solve_with_partition, SolverParams};

/// E₁ above which a restricted result counts as accurate for the time-saving
/// summary.
pub const ACCURATE_E1: f64 = 0.98;

/// One row of a sweep; field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub q: f64,
    pub q_hat: f64,
    pub rd_fraction: f64,
    pub e1: f64,
    pub e2: f64,
    pub wall_time_s: f64,
    pub outer_iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepMode {
    /// One solve at a time; use whenever wall times matter.
    #[default]
    Serial,
    /// Independent solves on the rayon pool. Wall times are contended.
    Parallel,
}

/// Solves at `q` (timing partition construction plus iteration) and scores
/// the result against `gt`.
pub fn evaluate(
    f: &ScalarField,
    params: &SolverParams,
    gt: &GroundTruth,
    q: f64,
) -> Result<SweepRecord> {
    let start = std::time::Instant::now();
    let part = partition(f, q)?;
    let (state, report) = solve_with_partition(f, params, &part)?;
    let wall = start.elapsed().as_secs_f64();
    let mask = threshold_indicator(&state.u, params.epsilon);
    Ok(SweepRecord {
        q,
        q_hat: part.q_hat(),
        rd_fraction: part.rd_fraction(),
        e1: tanimoto(&gt.mask, &mask)?,
        e2: l2_difference(&state.u, &gt.u)?,
        wall_time_s: wall,
        outer_iterations: report.outer_iterations,
        converged: report.converged,
    })
}

/// [`evaluate`] `repeats` times, keeping the shortest wall time. The solves
/// are deterministic, so every other field is the same each time.
pub fn evaluate_fastest(
    f: &ScalarField,
    params: &SolverParams,
    gt: &GroundTruth,
    q: f64,
    repeats: usize,
) -> Result<SweepRecord> {
    let mut best = evaluate(f, params, gt, q)?;
    for _ in 1..repeats {
        let again = evaluate(f, params, gt, q)?;
        best.wall_time_s = best.wall_time_s.min(again.wall_time_s);
    }
    Ok(best)
}

/// Evaluates every `q`, keeping the shortest of `repeats` wall times, and
/// hands each record to `on_record` in `q_list` order as soon as it (and all
/// earlier ones) are available.
pub fn run_sweep(
    f: &ScalarField,
    params: &SolverParams,
    gt: &GroundTruth,
    q_list: &[f64],
    mode: SweepMode,
    repeats: usize,
    mut on_record: impl FnMut(&SweepRecord) -> Result<()>,
) -> Result<Vec<SweepRecord>> {
    params.validate()?;
    if let Some(q) = q_list.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::InvalidInput(format!("q = {q} outside [0, 1]")));
    }
    let repeats = repeats.max(1);
    match mode {
        SweepMode::Serial => {
            // Repeats go round the whole list so that drifts in machine speed
            // hit every q alike. Records are emitted on the last round.
            let mut fastest = vec![f64::INFINITY; q_list.len()];
            for _ in 1..repeats {
                for (t, &q) in fastest.iter_mut().zip(q_list) {
                    *t = t.min(evaluate(f, params, gt, q)?.wall_time_s);
                }
            }
            let mut out = Vec::with_capacity(q_list.len());
            for (t, &q) in fastest.iter().zip(q_list) {
                let mut rec = evaluate(f, params, gt, q)?;
                rec.wall_time_s = rec.wall_time_s.min(*t);
                on_record(&rec)?;
                out.push(rec);
            }
            Ok(out)
        }
        SweepMode::Parallel => {
            let out = q_list
                .par_iter()
                .map(|&q| evaluate_fastest(f, params, gt, q, repeats))
                .collect::<Result<Vec<_>>>()?;
            out.iter().try_for_each(&mut on_record)?;
            Ok(out)
        }
    }
}

/// Fractional time saving of accurate restricted runs relative to the
/// unrestricted run: `1 − mean(t(q) : 0 < q < 1, e1 > 0.98) / t(1)`.
/// `None` without a `q = 1` row or without accurate restricted rows.
pub fn time_saving(records: &[SweepRecord]) -> Option<f64> {
    let full = records.iter().find(|r| r.q == 1.0)?.wall_time_s;
    let times: Vec<f64> = records
        .iter()
        .filter(|r| r.q > 0.0 && r.q < 1.0 && r.e1 > ACCURATE_E1)
        .map(|r| r.wall_time_s)
        .collect();
    if times.is_empty() || full <= 0.0 {
        return None;
    }
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    Some(1.0 - mean / full)
}

/// CSV sink that flushes after every row, so an interrupted sweep keeps the
/// rows already computed. Wall times are written to the millisecond.
pub struct SweepWriter {
    inner: csv::Writer<File>,
}

impl SweepWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            inner: csv::Writer::from_path(path)?,
        })
    }

    pub fn write(&mut self, rec: &SweepRecord) -> Result<()> {
        self.inner.serialize(SweepRecord {
            wall_time_s: (rec.wall_time_s * 1e3).round() / 1e3,
            ..rec.clone()
        })?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let records = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(records)
}
