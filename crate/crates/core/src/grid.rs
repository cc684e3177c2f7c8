//! Scalar and vector fields on a regular pixel grid, with the forward-difference
//! gradient and its negative adjoint, the backward-difference divergence.
//!
//! Storage is row-major: pixel `(i, j)` is row `i`, column `j`, at flat index
//! `i * width + j`.

use crate::error::{Error, Result};

/// A real-valued function on a `width × height` pixel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps row-major `values`. Rejects empty grids, length mismatches and
    /// non-finite values.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} values supplied for a {width}x{height} grid",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at pixel ({}, {})",
                values[pos],
                pos / width,
                pos % width
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    /// Builds a field by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut values = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self::new(width, height, values)
    }

    /// A zero field with the same shape as `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: vec![0.0; self.values.len()],
        }
    }

    /// Applies `f` pixelwise. Panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "map produced a non-finite value"
        );
        Self {
            width: self.width,
            height: self.height,
            values,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: empty grids cannot be constructed.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &ScalarField) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                found: (other.width, other.height),
            })
        }
    }

    /// Euclidean inner product `Σ a(x)·b(x)`.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A pair of scalar fields of identical shape, e.g. the dual variable `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comp1: ScalarField,
    comp2: ScalarField,
}

impl VectorField {
    pub fn new(comp1: ScalarField, comp2: ScalarField) -> Result<Self> {
        comp1.check_shape(&comp2)?;
        Ok(Self { comp1, comp2 })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        let z = ScalarField::zeros(width, height)?;
        Ok(Self {
            comp1: z.clone(),
            comp2: z,
        })
    }

    /// Vertical (row-direction) component.
    #[inline]
    pub fn comp1(&self) -> &ScalarField {
        &self.comp1
    }

    /// Horizontal (column-direction) component.
    #[inline]
    pub fn comp2(&self) -> &ScalarField {
        &self.comp2
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.comp1.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.comp1.height
    }

    pub(crate) fn slices_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.comp1.values, &mut self.comp2.values)
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.comp1, self.comp2)
    }

    /// `Σ p¹q¹ + p²q²`.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        Ok(self.comp1.dot(&other.comp1)? + self.comp2.dot(&other.comp2)?)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Forward differences with a zero last row/column:
/// `(∇u)¹(i,j) = u(i+1,j) − u(i,j)` for `i < height−1`,
/// `(∇u)²(i,j) = u(i,j+1) − u(i,j)` for `j < width−1`.
pub fn gradient(u: &ScalarField) -> VectorField {
    let (w, h) = (u.width, u.height);
    let src = &u.values;
    let mut g1 = vec![0.0; src.len()];
    let mut g2 = vec![0.0; src.len()];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            if i + 1 < h {
                g1[k] = src[k + w] - src[k];
            }
            if j + 1 < w {
                g2[k] = src[k + 1] - src[k];
            }
        }
    }
    VectorField {
        comp1: ScalarField {
            width: w,
            height: h,
            values: g1,
        },
        comp2: ScalarField {
            width: w,
            height: h,
            values: g2,
        },
    }
}

/// Backward-difference divergence, the exact negative adjoint of [`gradient`]:
/// `⟨∇u, p⟩ = −⟨u, div p⟩` for all `u`, `p`.
pub fn divergence(p: &VectorField) -> ScalarField {
    let (w, h) = (p.width(), p.height());
    let p1 = &p.comp1.values;
    let p2 = &p.comp2.values;
    let mut out = vec![0.0; p1.len()];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let d1 = (if i + 1 < h { p1[k] } else { 0.0 }) - (if i > 0 { p1[k - w] } else { 0.0 });
            let d2 = (if j + 1 < w { p2[k] } else { 0.0 }) - (if j > 0 { p2[k - 1] } else { 0.0 });
            out[k] = d1 + d2;
        }
    }
    ScalarField {
        width: w,
        height: h,
        values: out,
    }
}

/// Pixelwise Euclidean length `sqrt(p¹² + p²²)`.
pub fn pointwise_norm(p: &VectorField) -> ScalarField {
    let values = p
        .comp1
        .values
        .iter()
        .zip(&p.comp2.values)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    ScalarField {
        width: p.width(),
        height: p.height(),
        values,
    }
}

/// Isotropic discrete total variation `Σ |∇u|`.
pub fn total_variation(u: &ScalarField) -> f64 {
    pointwise_norm(&gradient(u)).values.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn field(w: usize, h: usize, v: &[f64]) -> ScalarField {
        ScalarField::new(w, h, v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(ScalarField::new(0, 3, vec![]).is_err());
        assert!(ScalarField::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ScalarField::new(1, 1, vec![f64::NAN]).is_err());
        let a = ScalarField::zeros(2, 3).unwrap();
        let b = ScalarField::zeros(3, 2).unwrap();
        assert!(matches!(
            VectorField::new(a, b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let u = ScalarField::filled(5, 5, 0.37).unwrap();
        let g = gradient(&u);
        assert!(g.comp1().as_slice().iter().all(|&v| v == 0.0));
        assert!(g.comp2().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_single_row() {
        let g = gradient(&field(2, 1, &[0.0, 1.0]));
        assert_eq!(g.comp2().as_slice(), &[1.0, 0.0]);
        assert_eq!(g.comp1().as_slice(), &[0.0, 0.0]);
    }

    /// Dense matrices for the stencil, assembled entry by entry.
    fn gradient_matrices(w: usize, h: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = w * h;
        let mut d1 = vec![vec![0.0; n]; n];
        let mut d2 = vec![vec![0.0; n]; n];
        for i in 0..h {
            for j in 0..w {
                let row = i * w + j;
                if i + 1 < h {
                    d1[row][row] = -1.0;
                    d1[row][(i + 1) * w + j] = 1.0;
                }
                if j + 1 < w {
                    d2[row][row] = -1.0;
                    d2[row][i * w + j + 1] = 1.0;
                }
            }
        }
        (d1, d2)
    }

    fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn gradient_matches_dense_matrix() {
        let (w, h) = (4, 4);
        let vals = pseudo_random(w * h, 7);
        let g = gradient(&field(w, h, &vals));
        let (d1, d2) = gradient_matrices(w, h);
        let e1 = matvec(&d1, &vals);
        let e2 = matvec(&d2, &vals);
        for k in 0..w * h {
            assert_abs_diff_eq!(g.comp1().as_slice()[k], e1[k], epsilon = 1e-15);
            assert_abs_diff_eq!(g.comp2().as_slice()[k], e2[k], epsilon = 1e-15);
        }
        // divergence is −(D1ᵀp¹ + D2ᵀp²)
        let p1 = pseudo_random(w * h, 8);
        let p2 = pseudo_random(w * h, 9);
        let p = VectorField::new(field(w, h, &p1), field(w, h, &p2)).unwrap();
        let div = divergence(&p);
        for k in 0..w * h {
            let expected: f64 = -(0..w * h)
                .map(|r| d1[r][k] * p1[r] + d2[r][k] * p2[r])
                .sum::<f64>();
            assert_abs_diff_eq!(div.as_slice()[k], expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        let p = VectorField::zeros(3, 4).unwrap();
        assert!(divergence(&p).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjointness_on_random_pairs() {
        for seed in 0..10 {
            let (w, h) = (6, 6);
            let u = field(w, h, &pseudo_random(36, 3 * seed));
            let p = VectorField::new(
                field(w, h, &pseudo_random(36, 3 * seed + 1)),
                field(w, h, &pseudo_random(36, 3 * seed + 2)),
            )
            .unwrap();
            let lhs = gradient(&u).dot(&p).unwrap();
            let rhs = u.dot(&divergence(&p)).unwrap();
            assert!((lhs + rhs).abs() < 1e-12, "seed {seed}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn div_grad_of_delta_is_neumann_laplacian() {
        let mut u = ScalarField::zeros(3, 3).unwrap();
        u.set(1, 1, 1.0);
        let lap = divergence(&gradient(&u));
        // Hand computation: centre −4, edge neighbours +1, corners 0.
        let expected = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];
        assert_eq!(lap.as_slice(), &expected);

        // Corner delta sees only two neighbours under Neumann boundaries.
        let mut c = ScalarField::zeros(3, 3).unwrap();
        c.set(0, 0, 1.0);
        let lap = divergence(&gradient(&c));
        assert_eq!(
            lap.as_slice(),
            &[-2.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn norm_is_pythagorean() {
        let p = VectorField::new(
            ScalarField::filled(3, 2, 3.0).unwrap(),
            ScalarField::filled(3, 2, 4.0).unwrap(),
        )
        .unwrap();
        assert!(pointwise_norm(&p).as_slice().iter().all(|&v| v == 5.0));
        let z = VectorField::zeros(2, 2).unwrap();
        assert!(pointwise_norm(&z).as_slice().iter().all(|&v| v == 0.0));

        let a = pseudo_random(20, 1);
        let b = pseudo_random(20, 2);
        let p = VectorField::new(field(5, 4, &a), field(5, 4, &b)).unwrap();
        let n = pointwise_norm(&p);
        for k in 0..20 {
            assert_eq!(n.as_slice()[k], (a[k] * a[k] + b[k] * b[k]).sqrt());
        }
    }

    #[test]
    fn tv_of_half_plane() {
        for n in [2usize, 5, 8, 16] {
            let u = ScalarField::from_fn(n, n, |_, j| if j < n / 2 { 1.0 } else { 0.0 }).unwrap();
            // one unit jump per row
            let direct: f64 = (0..n)
                .map(|i| {
                    (0..n - 1)
                        .map(|j| (u.get(i, j + 1) - u.get(i, j)).abs())
                        .sum::<f64>()
                })
                .sum();
            assert_eq!(direct, n as f64);
            assert_eq!(total_variation(&u), n as f64);
        }
        assert_eq!(
            total_variation(&ScalarField::filled(4, 7, 2.5).unwrap()),
            0.0
        );
    }

    proptest! {
        #[test]
        fn tv_is_positively_homogeneous(
            vals in proptest::collection::vec(-1.0f64..1.0, 30),
            a in -5.0f64..5.0,
        ) {
            let u = field(6, 5, &vals);
            let tv = total_variation(&u);
            let scaled = total_variation(&u.map(|v| a * v));
            prop_assert!((scaled - a.abs() * tv).abs() <= 1e-12 * (1.0 + tv * a.abs()));
        }

        #[test]
        fn tv_zero_iff_constant(vals in proptest::collection::vec(-1.0f64..1.0, 12)) {
            let u = field(4, 3, &vals);
            let tv = total_variation(&u);
            prop_assert!(tv >= 0.0);
            let constant = vals.iter().all(|&v| v == vals[0]);
            prop_assert_eq!(tv == 0.0, constant);
        }

        #[test]
        fn adjoint_identity(
            w in 1usize..9, h in 1usize..9, seed in 0u64..1000,
        ) {
            let n = w * h;
            let u = field(w, h, &pseudo_random(n, seed));
            let p = VectorField::new(
                field(w, h, &pseudo_random(n, seed + 1)),
                field(w, h, &pseudo_random(n, seed + 2)),
            ).unwrap();
            let lhs = gradient(&u).dot(&p).unwrap();
            let rhs = u.dot(&divergence(&p)).unwrap();
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            prop_assert!((lhs + rhs).abs() <= 1e-12 * scale);
        }
    }
}
