//! Segmentation accuracy: thresholding, Tanimoto overlap (E₁), squared L²
//! difference (E₂), and the tight-tolerance ground truth they are measured
//! against.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::{solve, SolveReport, SolverParams};

/// Tolerance used for the reference solution.
pub const GROUND_TRUTH_DELTA: f64 = 1e-10;

/// Threshold applied to the reference solution.
pub const GROUND_TRUTH_EPSILON: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 1.0 / 0.0 field.
    pub fn to_field(&self) -> ScalarField {
        ScalarField::new(
            self.width,
            self.height,
            self.bits
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )
        .expect("mask dimensions are valid")
    }

    /// Row-major 0/255 bytes.
    pub fn to_gray(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    fn check_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                found: (other.width, other.height),
            })
        }
    }
}

/// `1` where `u > eps`, `0` otherwise (a value equal to `eps` maps to 0).
pub fn threshold_indicator(u: &ScalarField, eps: f64) -> BinaryMask {
    BinaryMask {
        width: u.width(),
        height: u.height(),
        bits: u.as_slice().iter().map(|&v| v > eps).collect(),
    }
}

/// Intersection over union. Two empty masks score 1.
pub fn tanimoto(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.check_shape(b)?;
    let (inter, union) = a
        .bits
        .iter()
        .zip(&b.bits)
        .fold((0usize, 0usize), |(i, u), (&x, &y)| {
            (i + (x && y) as usize, u + (x || y) as usize)
        });
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// `Σ (a − b)²` with unit pixel area.
pub fn l2_difference(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.check_shape(b)?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub u: ScalarField,
    pub mask: BinaryMask,
    pub report: SolveReport,
}

/// Runs the unrestricted solver (`q = 1`) at `δ = 1e-10` and thresholds the
/// result at `0.5`. Every other parameter, including `max_outer`, is taken
/// from `params`.
pub fn make_ground_truth(f: &ScalarField, params: &SolverParams) -> Result<GroundTruth> {
    let tight = SolverParams {
        delta: GROUND_TRUTH_DELTA,
        ..params.clone()
    };
    let (state, report) = solve(f, &tight, 1.0)?;
    let mask = threshold_indicator(&state.u, GROUND_TRUTH_EPSILON);
    Ok(GroundTruth {
        u: state.u,
        mask,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, bits: &[u8]) -> BinaryMask {
        BinaryMask::new(w, h, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn threshold_is_strict() {
        let u = ScalarField::new(4, 1, vec![0.2, 0.5, 0.7, 0.9]).unwrap();
        assert_eq!(threshold_indicator(&u, 0.5), mask(4, 1, &[0, 0, 1, 1]));
        let ones = ScalarField::filled(3, 3, 1.0).unwrap();
        assert_eq!(threshold_indicator(&ones, 0.5).count(), 9);
    }

    #[test]
    fn tanimoto_hand_values() {
        let a = mask(3, 2, &[1, 1, 0, 1, 1, 0]);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let b = mask(3, 2, &[0, 0, 1, 0, 0, 1]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.0);
        // |A∩B| = 3, |A∪B| = 4
        let c = mask(3, 2, &[1, 1, 0, 1, 0, 0]);
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.75);
        let empty = mask(2, 2, &[0, 0, 0, 0]);
        assert_eq!(tanimoto(&empty, &empty).unwrap(), 1.0);
        assert!(matches!(
            tanimoto(&a, &empty),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn l2_hand_values() {
        let a = ScalarField::new(3, 3, (0..9).map(|k| k as f64 * 0.1).collect()).unwrap();
        assert_eq!(l2_difference(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 0.5);
        assert!((l2_difference(&a, &b).unwrap() - 9.0 * 0.25).abs() < 1e-12);
        let c =
            ScalarField::new(3, 3, vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.5, 2.0, 0.25, -0.75]).unwrap();
        let mut direct = 0.0;
        for k in 0..9 {
            let d = a.as_slice()[k] - c.as_slice()[k];
            direct += d * d;
        }
        assert_eq!(l2_difference(&a, &c).unwrap(), direct);
        assert!(l2_difference(&a, &ScalarField::zeros(2, 2).unwrap()).is_err());
    }

    #[test]
    fn ground_truth_of_negative_fitting_is_everything() {
        let f = ScalarField::filled(8, 8, -0.3).unwrap();
        let gt = make_ground_truth(&f, &SolverParams::default()).unwrap();
        assert!(gt.mask.bits().iter().all(|&b| b));
        let again = make_ground_truth(&f, &SolverParams::default()).unwrap();
        assert_eq!(gt.mask, again.mask);
    }

    proptest! {
        #[test]
        fn metric_properties(
            a in proptest::collection::vec(any::<bool>(), 12),
            b in proptest::collection::vec(any::<bool>(), 12),
            x in proptest::collection::vec(-1.0f64..1.0, 12),
            y in proptest::collection::vec(-1.0f64..1.0, 12),
            e1 in 0.01f64..0.99, e2 in 0.01f64..0.99,
        ) {
            let ma = BinaryMask::new(4, 3, a.clone()).unwrap();
            let mb = BinaryMask::new(4, 3, b.clone()).unwrap();
            let t = tanimoto(&ma, &mb).unwrap();
            prop_assert_eq!(t, tanimoto(&mb, &ma).unwrap());
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert_eq!(t == 1.0, a == b);

            let fx = ScalarField::new(4, 3, x.clone()).unwrap();
            let fy = ScalarField::new(4, 3, y.clone()).unwrap();
            let d = l2_difference(&fx, &fy).unwrap();
            prop_assert_eq!(d, l2_difference(&fy, &fx).unwrap());
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d == 0.0, x == y);

            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let m_lo = threshold_indicator(&fx, lo);
            let m_hi = threshold_indicator(&fx, hi);
            for (l, h) in m_lo.bits().iter().zip(m_hi.bits()) {
                prop_assert!(*l || !*h);
            }
        }
    }
}
