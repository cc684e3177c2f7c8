//! Fitting terms `f(x)`: negative where the data prefers foreground, positive
//! where it prefers background.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Mean foreground (`c1`) and background (`c2`) intensities, both in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensityPair {
    c1: f64,
    c2: f64,
}

impl IntensityPair {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidInput(format!("{name} = {c} outside [0, 1]")));
            }
        }
        if c1 == c2 {
            return Err(Error::DegenerateFitting(c1));
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// The same pair with foreground and background exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            c1: self.c2,
            c2: self.c1,
        }
    }
}

/// Non-empty set of in-bounds `(row, col)` marker pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkerSet {
    points: Vec<(usize, usize)>,
}

impl MarkerSet {
    pub fn new(points: Vec<(usize, usize)>, width: usize, height: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("marker set is empty".into()));
        }
        if let Some(&(r, c)) = points.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(Error::InvalidInput(format!(
                "marker ({r}, {c}) outside {width}x{height} grid"
            )));
        }
        Ok(Self { points })
    }

    /// Parses one `row col` pair per line. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str, width: usize, height: usize) -> Result<Self> {
        let mut points = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Markers {
                line: n + 1,
                reason,
            };
            let mut it = line.split_whitespace();
            let (Some(r), Some(c), None) = (it.next(), it.next(), it.next()) else {
                return Err(bad(format!("expected `row col`, got {line:?}")));
            };
            let r: usize = r.parse().map_err(|_| bad(format!("bad row {r:?}")))?;
            let c: usize = c.parse().map_err(|_| bad(format!("bad column {c:?}")))?;
            if r >= height || c >= width {
                return Err(bad(format!("({r}, {c}) outside {width}x{height} grid")));
            }
            points.push((r, c));
        }
        Self::new(points, width, height)
    }

    pub fn read(path: &Path, width: usize, height: usize) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, width, height)
    }

    /// Serializes in the format accepted by [`MarkerSet::parse`].
    pub fn to_text(&self) -> String {
        self.points
            .iter()
            .map(|(r, c)| format!("{r} {c}\n"))
            .collect()
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }
}

/// Weight `γ ≥ 0` of the distance term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectiveParams {
    gamma: f64,
}

impl SelectiveParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma = {gamma} must be >= 0")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Piecewise-constant fitting `(z − c1)² − (z − c2)²`.
pub fn chan_vese_fitting(z: &ScalarField, c: IntensityPair) -> ScalarField {
    z.map(|v| (v - c.c1).powi(2) - (v - c.c2).powi(2))
}

/// Euclidean distance to the nearest marker, divided by its maximum over the
/// grid, so the result lies in `[0, 1]` and is `0` on every marker.
///
/// Exact: each pixel is compared against every marker.
pub fn marker_distance(markers: &MarkerSet, width: usize, height: usize) -> Result<ScalarField> {
    let mut d = ScalarField::from_fn(width, height, |i, j| {
        markers
            .points
            .iter()
            .map(|&(r, c)| {
                let dr = i as f64 - r as f64;
                let dc = j as f64 - c as f64;
                dr * dr + dc * dc
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    })?;
    let max = d.max();
    if max > 0.0 {
        d = d.map(|v| v / max);
    }
    Ok(d)
}

/// Chan–Vese fitting plus `γ·P(x)`, where `P` is [`marker_distance`].
pub fn distance_selective_fitting(
    z: &ScalarField,
    c: IntensityPair,
    markers: &MarkerSet,
    s: SelectiveParams,
) -> Result<ScalarField> {
    if let Some(&(r, col)) = markers
        .points
        .iter()
        .find(|&&(r, col)| r >= z.height() || col >= z.width())
    {
        return Err(Error::InvalidInput(format!(
            "marker ({r}, {col}) outside {}x{} image",
            z.width(),
            z.height()
        )));
    }
    let p = marker_distance(markers, z.width(), z.height())?;
    let cv = chan_vese_fitting(z, c);
    let values = cv
        .as_slice()
        .iter()
        .zip(p.as_slice())
        .map(|(f, d)| f + s.gamma * d)
        .collect();
    ScalarField::new(z.width(), z.height(), values)
}

/// Divides `f` by `max |f|`. A zero field is returned unchanged.
pub fn normalize_fitting(f: &ScalarField) -> ScalarField {
    let m = f.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        f.map(|v| v / m)
    } else {
        f.clone()
    }
}

/// Region means of `z` under a binary `mask` (1 = foreground).
pub fn estimate_constants(z: &ScalarField, mask: &ScalarField) -> Result<IntensityPair> {
    z.check_shape(mask)?;
    let (mut s1, mut n1, mut s2, mut n2) = (0.0, 0usize, 0.0, 0usize);
    for (&v, &m) in z.as_slice().iter().zip(mask.as_slice()) {
        if m == 1.0 {
            s1 += v;
            n1 += 1;
        } else if m == 0.0 {
            s2 += v;
            n2 += 1;
        } else {
            return Err(Error::InvalidInput(format!("mask value {m} is not binary")));
        }
    }
    if n1 == 0 {
        return Err(Error::InvalidInput("mask has an empty foreground".into()));
    }
    if n2 == 0 {
        return Err(Error::InvalidInput("mask has an empty background".into()));
    }
    IntensityPair::new(s1 / n1 as f64, s2 / n2 as f64)
}
