//! Alternating minimisation of the split functional
//!
//! ```text
//! TV(u) + 1/(2θ)·Σ(u − v)² + Σ λ·f·v + α·ψ(v)
//! ```
//!
//! over `u` and `v`, with `u` obtained from the dual variable `ρ` as
//! `u = v − θ·div ρ` and `ρ` advanced by the projected fixed-point step
//!
//! ```text
//! ρ ← (ρ + τ·∇(div ρ − v/θ)) / (1 + τ·|∇(div ρ − v/θ)|)
//! ```
//!
//! The restricted variant runs every update only on the restricted domain of a
//! [`Partition`]; pinned pixels keep `u = v = 1` (foreground) or `u = v = 0`
//! (background) and `ρ = 0`. Work per iteration is proportional to the size of
//! the restricted domain. With every pixel restricted, the iterates are
//! bit-identical to [`solve_unrestricted`].

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{total_variation, ScalarField, VectorField};
use crate::partition::{initial_indicator, partition, Label, Partition, Span};

/// Norm applied to successive-iterate differences in the stopping test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopNorm {
    /// Euclidean norm divided by `√N`.
    Rms,
    /// Largest absolute pixel change.
    Max,
    /// Plain Euclidean norm over all pixels.
    #[default]
    L2,
}

impl std::str::FromStr for StopNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rms" => Ok(StopNorm::Rms),
            "max" => Ok(StopNorm::Max),
            "l2" => Ok(StopNorm::L2),
            _ => Err(Error::InvalidInput(format!(
                "unknown stopping norm {s:?} (expected rms, l2 or max)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Fitting weight λ.
    pub lambda: f64,
    /// Coupling θ between `u` and `v`.
    pub theta: f64,
    /// Fixed-point step τ, at most 1/8.
    pub tau: f64,
    /// Stopping tolerance δ.
    pub delta: f64,
    /// Threshold ε used when binarising `u`.
    pub epsilon: f64,
    pub max_outer: usize,
    /// `ρ` steps per outer iteration.
    pub inner_steps: usize,
    /// Constraint weight α. Only enters [`split_energy`]: the clamp in the
    /// `v`-update keeps `v ∈ [0, 1]` so the penalty is never active.
    pub alpha: f64,
    pub stop_norm: StopNorm,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 5.0,
            theta: 0.1,
            tau: 0.125,
            delta: 1e-2,
            epsilon: 0.5,
            max_outer: 5000,
            inner_steps: 1,
            alpha: 1.0,
            stop_norm: StopNorm::L2,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("theta", self.theta),
            ("tau", self.tau),
            ("delta", self.delta),
            ("alpha", self.alpha),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.tau > 0.125 {
            return Err(Error::InvalidInput(format!(
                "tau = {} exceeds the stability bound 1/8",
                self.tau
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon = {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.max_outer == 0 || self.inner_steps == 0 {
            return Err(Error::InvalidInput(
                "max_outer and inner_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub u: ScalarField,
    pub v: ScalarField,
    pub rho: VectorField,
    pub outer_iter: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub outer_iterations: usize,
    /// Stopping quantity `max(‖Δu‖, ‖Δv‖)` at the last iteration.
    pub final_residual: f64,
    /// Seconds.
    pub wall_time: f64,
    pub converged: bool,
    /// [`relaxed_energy`] of the returned `u`.
    pub energy: f64,
}

/// Constraint penalty `max{0, 2|v − ½| − 1}`, zero exactly on `[0, 1]`.
pub fn psi(v: f64) -> f64 {
    (2.0 * (v - 0.5).abs() - 1.0).max(0.0)
}

/// `TV(u) + λ·Σ f·u`.
pub fn relaxed_energy(u: &ScalarField, f: &ScalarField, lambda: f64) -> Result<f64> {
    Ok(total_variation(u) + lambda * f.dot(u)?)
}

/// The split functional minimised by the alternation, including `α·ψ(v)`.
pub fn split_energy(
    u: &ScalarField,
    v: &ScalarField,
    f: &ScalarField,
    params: &SolverParams,
) -> Result<f64> {
    u.check_shape(v)?;
    u.check_shape(f)?;
    let coupling: f64 = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let data: f64 = f
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(&fx, &vx)| params.lambda * fx * vx + params.alpha * psi(vx))
        .sum();
    Ok(total_variation(u) + coupling / (2.0 * params.theta) + data)
}

// ---------------------------------------------------------------------------
// Row kernels shared by both solvers. They evaluate, pixel for pixel, the same
// floating-point expressions as `grid::gradient` / `grid::divergence` composed
// with the update formulas, so iterates do not depend on which pixels are
// visited or in which order.

#[inline(always)]
#[allow(clippy::manual_clamp)]
fn clamp_unit(x: f64) -> f64 {
    x.max(0.0).min(1.0)
}

#[derive(Clone, Copy)]
struct Residual {
    norm: StopNorm,
    acc: f64,
}

impl Residual {
    fn new(norm: StopNorm) -> Self {
        Self { norm, acc: 0.0 }
    }

    #[inline(always)]
    fn push(&mut self, d: f64) {
        match self.norm {
            StopNorm::Rms | StopNorm::L2 => self.acc += d * d,
            StopNorm::Max => self.acc = self.acc.max(d.abs()),
        }
    }

    /// Takes back a change pushed earlier; sums of squares only.
    #[inline(always)]
    fn remove(&mut self, d: f64) {
        debug_assert!(self.norm != StopNorm::Max);
        self.acc -= d * d;
    }

    fn finish(self, n: usize) -> f64 {
        match self.norm {
            StopNorm::Rms => (self.acc / n as f64).sqrt(),
            StopNorm::L2 => self.acc.sqrt(),
            StopNorm::Max => self.acc,
        }
    }
}

/// Per-pixel weight of a row in the change norms: 1 for updated pixels, 0
/// for pinned ones swept over with them.
trait Weight: Copy {
    fn at(self, j: usize) -> f64;
}

#[derive(Clone, Copy)]
struct Everywhere;

impl Weight for Everywhere {
    #[inline(always)]
    fn at(self, _: usize) -> f64 {
        1.0
    }
}

#[derive(Clone, Copy)]
struct RowWeight<'a>(&'a [f64]);

impl Weight for RowWeight<'_> {
    #[inline(always)]
    fn at(self, j: usize) -> f64 {
        self.0[j]
    }
}

/// Largest run of pinned pixels that is swept over instead of skipped.
const MERGE_GAP: usize = 8;

/// Cost of a gathered pixel relative to a swept one.
const COMPACT_COST: f64 = 1.6;

/// A row range to sweep. Pinned pixels inside it are `pinned[fix]`.
#[derive(Clone, Debug)]
struct Run {
    span: Span,
    fix: std::ops::Range<usize>,
}

impl Run {
    fn pure(&self) -> bool {
        self.fix.is_empty()
    }
}

/// Joins spans of the same row separated by at most `gap` columns, so that a
/// scattered domain runs as a few wide loops instead of many tiny ones.
/// Pinned pixels swept over this way are listed in `pinned` with their value.
fn coalesce(
    spans: &[Span],
    gap: usize,
    part: &Partition,
    pinned: &mut Vec<(usize, f64)>,
) -> Vec<Run> {
    let w = part.width();
    let mut out: Vec<Run> = Vec::with_capacity(spans.len());
    for &s in spans {
        match out.last_mut() {
            Some(last) if last.span.row == s.row && s.start <= last.span.end + gap => {
                for j in last.span.end..s.start {
                    let k = s.row * w + j;
                    pinned.push((k, pinned_value(part.labels()[k]).unwrap_or(0.0)));
                }
                last.fix.end = pinned.len();
                last.span.end = s.end;
            }
            _ => out.push(Run {
                span: s,
                fix: pinned.len()..pinned.len(),
            }),
        }
    }
    out
}

struct Kernel {
    w: usize,
    h: usize,
    /// Stands in for the rows outside the grid.
    zero_row: Vec<f64>,
    /// `div ρ − v/θ`, valid on the pixels last passed to `dual_residual`.
    g: Vec<f64>,
}

impl Kernel {
    fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            zero_row: vec![0.0; w],
            g: vec![0.0; w * h],
        }
    }

    /// Calls `emit(j, (div ρ)(row, j))` for `j in start..end`.
    #[inline(always)]
    fn div_row(&self, p1: &[f64], p2: &[f64], s: Span, mut emit: impl FnMut(usize, f64)) {
        let (w, h) = (self.w, self.h);
        let base = s.row * w;
        let own = if s.row + 1 < h {
            &p1[base..base + w]
        } else {
            &self.zero_row[..]
        };
        let above = if s.row > 0 {
            &p1[base - w..base]
        } else {
            &self.zero_row[..]
        };
        let p2r = &p2[base..base + w];
        let mut j = s.start;
        if j == 0 && j < s.end {
            let right = if w > 1 { p2r[0] } else { 0.0 };
            emit(0, (own[0] - above[0]) + (right - 0.0));
            j = 1;
        }
        let stop = s.end.min(w - 1);
        while j < stop {
            emit(j, (own[j] - above[j]) + (p2r[j] - p2r[j - 1]));
            j += 1;
        }
        if j < s.end {
            // last column, j = w − 1 ≥ 1
            emit(j, (own[j] - above[j]) + (0.0 - p2r[j - 1]));
        }
    }

    fn dual_residual(&mut self, p1: &[f64], p2: &[f64], v: &[f64], theta: f64, s: Span) {
        let base = s.row * self.w;
        let mut g = std::mem::take(&mut self.g);
        let (gr, vr) = (&mut g[base..base + self.w], &v[base..base + self.w]);
        self.div_row(p1, p2, s, |j, d| gr[j] = d - vr[j] / theta);
        self.g = g;
    }

    fn project(&self, p1: &mut [f64], p2: &mut [f64], tau: f64, s: Span) {
        let (w, h) = (self.w, self.h);
        #[inline(always)]
        fn step(a: &mut f64, b: &mut f64, g1: f64, g2: f64, tau: f64) {
            let denom = 1.0 + tau * (g1 * g1 + g2 * g2).sqrt();
            *a = (*a + tau * g1) / denom;
            *b = (*b + tau * g2) / denom;
        }
        let base = s.row * w;
        let gr = &self.g[base..base + w];
        let (a, b) = (&mut p1[base..base + w], &mut p2[base..base + w]);
        let interior_end = s.end.min(w - 1);
        if s.row + 1 < h {
            let gd = &self.g[base + w..base + 2 * w];
            for j in s.start..interior_end {
                step(&mut a[j], &mut b[j], gd[j] - gr[j], gr[j + 1] - gr[j], tau);
            }
            if s.end == w {
                let j = w - 1;
                step(&mut a[j], &mut b[j], gd[j] - gr[j], 0.0, tau);
            }
        } else {
            for j in s.start..interior_end {
                step(&mut a[j], &mut b[j], 0.0, gr[j + 1] - gr[j], tau);
            }
            if s.end == w {
                let j = w - 1;
                step(&mut a[j], &mut b[j], 0.0, 0.0, tau);
            }
        }
    }

    /// The u-update followed by the v-update on one row range. A pixel's new
    /// v depends only on its own new u, so both run in one pass.
    fn update_uv(&self, st: &mut UvStep<'_>, s: Span, weight: impl Weight) {
        let w = self.w;
        let base = s.row * w;
        let (theta, lambda) = (st.theta, st.lambda);
        let (mut du, mut dv) = (st.du, st.dv);
        let ur = &mut st.u[base..base + w];
        let vr = &mut st.v[base..base + w];
        let fr = &st.f[base..base + w];
        self.div_row(st.p1, st.p2, s, |j, d| {
            let u = vr[j] - theta * d;
            du.push((u - ur[j]) * weight.at(j));
            ur[j] = u;
            let v = clamp_unit(u - theta * lambda * fr[j]);
            dv.push((v - vr[j]) * weight.at(j));
            vr[j] = v;
        });
        st.du = du;
        st.dv = dv;
    }
}

struct UvStep<'a> {
    u: &'a mut [f64],
    v: &'a mut [f64],
    p1: &'a [f64],
    p2: &'a [f64],
    f: &'a [f64],
    theta: f64,
    lambda: f64,
    du: Residual,
    dv: Residual,
}

/// One way of visiting the pixels the iteration updates.
trait Plan {
    fn is_empty(&self) -> bool;
    /// One outer iteration; returns the change accumulators for u and v.
    fn outer(
        &mut self,
        st: &mut SolverState,
        f: &[f64],
        params: &SolverParams,
    ) -> (Residual, Residual);
    /// Writes any privately held iterate back into `st`.
    fn sync(&self, _st: &mut SolverState) {}
}

/// Row ranges over the full-grid arrays. Pinned pixels swept over inside a
/// run are computed like the others and reset afterwards.
struct RangePlan {
    kernel: Kernel,
    halo: Vec<Span>,
    active: Vec<Run>,
    pinned: Vec<(usize, f64)>,
    /// Row-major change-norm weights; empty when every run is pure.
    weight: Vec<f64>,
}

impl RangePlan {
    fn full(w: usize, h: usize) -> Self {
        let rows: Vec<Span> = (0..h)
            .map(|row| Span {
                row,
                start: 0,
                end: w,
            })
            .collect();
        Self {
            kernel: Kernel::new(w, h),
            active: rows.iter().map(|&span| Run { span, fix: 0..0 }).collect(),
            halo: rows,
            pinned: Vec::new(),
            weight: Vec::new(),
        }
    }

    fn restricted(part: &Partition, gap: usize) -> Self {
        let mut pinned = Vec::new();
        // g may be computed on extra pixels, so the halo needs no fix-up
        let halo = coalesce(part.halo_spans(), gap, part, &mut Vec::new());
        let active = coalesce(part.rd_spans(), gap, part, &mut pinned);
        let weight = if pinned.is_empty() {
            Vec::new()
        } else {
            part.labels()
                .iter()
                .map(|&l| if l == Label::Restricted { 1.0 } else { 0.0 })
                .collect()
        };
        Self {
            kernel: Kernel::new(part.width(), part.height()),
            halo: halo.into_iter().map(|r| r.span).collect(),
            active,
            pinned,
            weight,
        }
    }

    fn swept(&self) -> usize {
        let len = |s: &Span| s.end - s.start;
        self.halo.iter().map(len).sum::<usize>()
            + self.active.iter().map(|r| len(&r.span)).sum::<usize>()
    }

    fn rho_step(&mut self, p1: &mut [f64], p2: &mut [f64], v: &[f64], theta: f64, tau: f64) {
        for &s in &self.halo {
            self.kernel.dual_residual(p1, p2, v, theta, s);
        }
        for r in &self.active {
            self.kernel.project(p1, p2, tau, r.span);
            for &(k, _) in &self.pinned[r.fix.clone()] {
                p1[k] = 0.0;
                p2[k] = 0.0;
            }
        }
    }
}

impl Plan for RangePlan {
    fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    fn outer(
        &mut self,
        st: &mut SolverState,
        f: &[f64],
        params: &SolverParams,
    ) -> (Residual, Residual) {
        let SolverState { u, v, rho, .. } = st;
        let (p1, p2) = rho.slices_mut();
        for _ in 0..params.inner_steps {
            self.rho_step(p1, p2, v.as_slice(), params.theta, params.tau);
        }
        let mut uv = UvStep {
            u: u.as_mut_slice(),
            v: v.as_mut_slice(),
            p1,
            p2,
            f,
            theta: params.theta,
            lambda: params.lambda,
            du: Residual::new(params.stop_norm),
            dv: Residual::new(params.stop_norm),
        };
        let w = self.kernel.w;
        for r in &self.active {
            if r.pure() || params.stop_norm != StopNorm::Max {
                self.kernel.update_uv(&mut uv, r.span, Everywhere);
                for &(k, value) in &self.pinned[r.fix.clone()] {
                    uv.du.remove(uv.u[k] - value);
                    uv.dv.remove(uv.v[k] - value);
                    uv.u[k] = value;
                    uv.v[k] = value;
                }
            } else {
                let row = r.span.row * w;
                self.kernel
                    .update_uv(&mut uv, r.span, RowWeight(&self.weight[row..row + w]));
                for &(k, value) in &self.pinned[r.fix.clone()] {
                    uv.u[k] = value;
                    uv.v[k] = value;
                }
            }
        }
        (uv.du, uv.dv)
    }
}

/// The iterate gathered into dense arrays over the halo, so that the cost per
/// iteration follows the size of the restricted domain however scattered it
/// is. Missing neighbours are redirected instead of tested:
///
/// * `up`/`left` of a pixel whose neighbour is pinned or off-grid point at a
///   trailing zero slot of `p1`/`p2`, where a pinned `ρ` would read zero;
/// * `down`/`right` of a pixel on the last row/column point at the pixel
///   itself, so the forward difference of `g` is exactly zero.
///
/// `ρ₁` on the last row and `ρ₂` on the last column stay `+0`, so reading
/// them directly matches the full-grid stencil bit for bit.
struct CompactPlan {
    /// Full-grid index of each halo pixel, row-major.
    idx: Vec<u32>,
    up: Vec<u32>,
    left: Vec<u32>,
    /// Halo index of each restricted pixel.
    rd: Vec<u32>,
    down: Vec<u32>,
    right: Vec<u32>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    v: Vec<f64>,
    g: Vec<f64>,
    /// Indexed like `rd`.
    u: Vec<f64>,
    f: Vec<f64>,
}

impl CompactPlan {
    fn new(part: &Partition, f: &[f64], u0: &[f64]) -> Self {
        let (w, h) = (part.width(), part.height());
        let mut slot = vec![u32::MAX; w * h];
        let mut idx = Vec::new();
        for s in part.halo_spans() {
            let row = s.row * w;
            for (k, sl) in slot
                .iter_mut()
                .enumerate()
                .take(row + s.end)
                .skip(row + s.start)
            {
                *sl = idx.len() as u32;
                idx.push(k as u32);
            }
        }
        let n = idx.len();
        let zero = n as u32;
        let labels = part.labels();
        let neighbour = |k: usize, exists: bool, dk: usize| -> u32 {
            if exists && labels[k - dk] == Label::Restricted {
                slot[k - dk]
            } else {
                zero
            }
        };
        let up = idx
            .iter()
            .map(|&k| neighbour(k as usize, k as usize >= w, w))
            .collect();
        let left = idx
            .iter()
            .map(|&k| neighbour(k as usize, !(k as usize).is_multiple_of(w), 1))
            .collect();
        let rd: Vec<u32> = idx
            .iter()
            .enumerate()
            .filter(|&(_, &k)| labels[k as usize] == Label::Restricted)
            .map(|(c, _)| c as u32)
            .collect();
        let down = rd
            .iter()
            .map(|&c| {
                let k = idx[c as usize] as usize;
                if k / w + 1 < h {
                    slot[k + w]
                } else {
                    c
                }
            })
            .collect();
        let right = rd
            .iter()
            .map(|&c| {
                let k = idx[c as usize] as usize;
                if k % w + 1 < w {
                    slot[k + 1]
                } else {
                    c
                }
            })
            .collect();
        let at = |c: &u32| idx[*c as usize] as usize;
        Self {
            up,
            left,
            down,
            right,
            p1: vec![0.0; n + 1],
            p2: vec![0.0; n + 1],
            v: idx.iter().map(|&k| u0[k as usize]).collect(),
            g: vec![0.0; n],
            u: rd.iter().map(|c| u0[at(c)]).collect(),
            f: rd.iter().map(|c| f[at(c)]).collect(),
            rd,
            idx,
        }
    }
}

#[inline(always)]
fn gathered_div(p1: &[f64], p2: &[f64], up: u32, left: u32, c: usize) -> f64 {
    (p1[c] - p1[up as usize]) + (p2[c] - p2[left as usize])
}

impl Plan for CompactPlan {
    fn is_empty(&self) -> bool {
        self.rd.is_empty()
    }

    fn outer(
        &mut self,
        _st: &mut SolverState,
        _f: &[f64],
        params: &SolverParams,
    ) -> (Residual, Residual) {
        let (theta, tau, lambda) = (params.theta, params.tau, params.lambda);
        let n = self.g.len();
        let (up, left) = (&self.up[..n], &self.left[..n]);
        let (p1, p2) = (&mut self.p1[..], &mut self.p2[..]);
        let (v, g) = (&mut self.v[..n], &mut self.g[..n]);
        let m = self.rd.len();
        let (rd, down, right) = (&self.rd[..m], &self.down[..m], &self.right[..m]);
        let (uu, ff) = (&mut self.u[..m], &self.f[..m]);
        for _ in 0..params.inner_steps {
            for c in 0..n {
                g[c] = gathered_div(p1, p2, up[c], left[c], c) - v[c] / theta;
            }
            for r in 0..m {
                let c = rd[r] as usize;
                let g1 = g[down[r] as usize] - g[c];
                let g2 = g[right[r] as usize] - g[c];
                let denom = 1.0 + tau * (g1 * g1 + g2 * g2).sqrt();
                p1[c] = (p1[c] + tau * g1) / denom;
                p2[c] = (p2[c] + tau * g2) / denom;
            }
        }
        let mut du = Residual::new(params.stop_norm);
        let mut dv = Residual::new(params.stop_norm);
        for r in 0..m {
            let c = rd[r] as usize;
            let u = v[c] - theta * gathered_div(p1, p2, up[c], left[c], c);
            du.push(u - uu[r]);
            uu[r] = u;
            let vn = clamp_unit(u - theta * lambda * ff[r]);
            dv.push(vn - v[c]);
            v[c] = vn;
        }
        (du, dv)
    }

    fn sync(&self, st: &mut SolverState) {
        let (p1, p2) = st.rho.slices_mut();
        let (u, v) = (st.u.as_mut_slice(), st.v.as_mut_slice());
        for (r, &c) in self.rd.iter().enumerate() {
            let (c, k) = (c as usize, self.idx[c as usize] as usize);
            u[k] = self.u[r];
            v[k] = self.v[c];
            p1[k] = self.p1[c];
            p2[k] = self.p2[c];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
enum Layout {
    Cheapest,
    Ranges,
    Compact,
}

/// Builds the plan for `part`; [`Layout::Cheapest`] compares estimated costs.
fn plan_for(part: &Partition, f: &[f64], u0: &[f64], layout: Layout) -> Box<dyn Plan> {
    let ranges = RangePlan::restricted(part, MERGE_GAP);
    let compact = match layout {
        Layout::Ranges => false,
        Layout::Compact => true,
        Layout::Cheapest => {
            let len = |s: &Span| s.end - s.start;
            let listed = part.rd_count() + part.halo_spans().iter().map(len).sum::<usize>();
            (listed as f64) * COMPACT_COST < ranges.swept() as f64
        }
    };
    if compact {
        Box::new(CompactPlan::new(part, f, u0))
    } else {
        Box::new(ranges)
    }
}

fn check_same(part: &Partition, fields: &[&ScalarField]) -> Result<()> {
    fields.iter().try_for_each(|f| part.check_grid(f))
}

fn pinned_value(l: Label) -> Option<f64> {
    match l {
        Label::Foreground => Some(1.0),
        Label::Background => Some(0.0),
        Label::Restricted => None,
    }
}

/// One projected fixed-point step for `ρ` on the restricted domain; `ρ` is
/// zero on pinned pixels of the result.
pub fn rho_step(
    rho: &VectorField,
    v: &ScalarField,
    params: &SolverParams,
    part: &Partition,
) -> Result<VectorField> {
    check_same(part, &[rho.comp1(), v])?;
    let mut out = rho.clone();
    let (p1, p2) = out.slices_mut();
    for (k, &l) in part.labels().iter().enumerate() {
        if l != Label::Restricted {
            p1[k] = 0.0;
            p2[k] = 0.0;
        }
    }
    let mut plan = RangePlan::restricted(part, 0);
    plan.rho_step(p1, p2, v.as_slice(), params.theta, params.tau);
    Ok(out)
}

/// `u = 1` on foreground, `0` on background, `v − θ·div ρ` on the restricted
/// domain.
pub fn update_u(
    v: &ScalarField,
    rho: &VectorField,
    params: &SolverParams,
    part: &Partition,
) -> Result<ScalarField> {
    check_same(part, &[v, rho.comp1()])?;
    let mut u = v.clone();
    for (k, &l) in part.labels().iter().enumerate() {
        if let Some(p) = pinned_value(l) {
            u.as_mut_slice()[k] = p;
        }
    }
    let kernel = Kernel::new(part.width(), part.height());
    let (p1, p2) = (rho.comp1().as_slice(), rho.comp2().as_slice());
    let (out, vs) = (u.as_mut_slice(), v.as_slice());
    for &s in part.rd_spans() {
        let base = s.row * part.width();
        kernel.div_row(p1, p2, s, |j, d| {
            out[base + j] = vs[base + j] - params.theta * d
        });
    }
    Ok(u)
}

/// `v = 1` on foreground, `0` on background, `clamp(u − θλf, 0, 1)` on the
/// restricted domain.
pub fn update_v(
    u: &ScalarField,
    f: &ScalarField,
    params: &SolverParams,
    part: &Partition,
) -> Result<ScalarField> {
    check_same(part, &[u, f])?;
    let mut v = u.clone();
    for (k, &l) in part.labels().iter().enumerate() {
        if let Some(p) = pinned_value(l) {
            v.as_mut_slice()[k] = p;
        }
    }
    let (out, us, fs) = (v.as_mut_slice(), u.as_slice(), f.as_slice());
    for s in part.rd_spans() {
        for k in s.row * part.width() + s.start..s.row * part.width() + s.end {
            out[k] = clamp_unit(us[k] - params.theta * params.lambda * fs[k]);
        }
    }
    Ok(v)
}

/// Partitions `f` at restriction fraction `q` and runs the restricted solver.
/// The reported wall time includes building the partition.
pub fn solve(f: &ScalarField, params: &SolverParams, q: f64) -> Result<(SolverState, SolveReport)> {
    let start = Instant::now();
    params.validate()?;
    let part = partition(f, q)?;
    let (state, mut report) = solve_with_partition(f, params, &part)?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((state, report))
}

/// Restricted solver on a precomputed partition.
pub fn solve_with_partition(
    f: &ScalarField,
    params: &SolverParams,
    part: &Partition,
) -> Result<(SolverState, SolveReport)> {
    part.check_grid(f)?;
    iterate(f, params, Some((part, Layout::Cheapest)), None)
}

/// [`solve_with_partition`], handing the state after every outer iteration
/// to `observer`.
pub fn solve_with_partition_observed(
    f: &ScalarField,
    params: &SolverParams,
    part: &Partition,
    mut observer: impl FnMut(&SolverState),
) -> Result<(SolverState, SolveReport)> {
    part.check_grid(f)?;
    iterate(
        f,
        params,
        Some((part, Layout::Cheapest)),
        Some(&mut observer),
    )
}

/// The plain alternation over the whole grid, with no partition.
pub fn solve_unrestricted(
    f: &ScalarField,
    params: &SolverParams,
) -> Result<(SolverState, SolveReport)> {
    iterate(f, params, None, None)
}

pub fn solve_unrestricted_observed(
    f: &ScalarField,
    params: &SolverParams,
    mut observer: impl FnMut(&SolverState),
) -> Result<(SolverState, SolveReport)> {
    iterate(f, params, None, Some(&mut observer))
}

/// The alternation loop; over the whole grid when `part` is `None`. Pixels
/// outside the restricted domain keep their initial values.
fn iterate(
    f: &ScalarField,
    params: &SolverParams,
    part: Option<(&Partition, Layout)>,
    mut observer: Option<&mut dyn FnMut(&SolverState)>,
) -> Result<(SolverState, SolveReport)> {
    let start = Instant::now();
    params.validate()?;
    let (w, h, n) = (f.width(), f.height(), f.len());
    let u0 = initial_indicator(f);
    let mut plan: Box<dyn Plan> = match part {
        Some((part, layout)) => plan_for(part, f.as_slice(), u0.as_slice(), layout),
        None => Box::new(RangePlan::full(w, h)),
    };
    let mut state = SolverState {
        v: u0.clone(),
        u: u0,
        rho: VectorField::zeros(w, h)?,
        outer_iter: 0,
    };

    let mut residual = 0.0;
    let mut converged = plan.is_empty();
    while !converged && state.outer_iter < params.max_outer {
        let (du, dv) = plan.outer(&mut state, f.as_slice(), params);
        residual = du.finish(n).max(dv.finish(n));
        state.outer_iter += 1;
        converged = residual <= params.delta;
        if let Some(obs) = observer.as_mut() {
            plan.sync(&mut state);
            obs(&state);
        }
    }
    plan.sync(&mut state);

    let energy = relaxed_energy(&state.u, f, params.lambda)?;
    let report = SolveReport {
        outer_iterations: state.outer_iter,
        final_residual: residual,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        energy,
    };
    Ok((state, report))
}
