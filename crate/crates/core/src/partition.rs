//! Splitting the grid into pinned foreground, pinned background and the
//! restricted domain where the dual iteration actually runs.
//!
//! A pixel is pinned when its fitting value is decisive: `f ≤ −q̂` pins it to
//! foreground, `f ≥ q̂` to background. The threshold `q̂` is the smallest value
//! for which at least a fraction `q` of the pixels satisfy `|f| ≤ q̂`; pixels
//! tied at `|f| = q̂` all stay in the restricted domain.

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Foreground,
    Background,
    Restricted,
}

impl Label {
    /// Gray level used when exporting a partition as an image.
    pub fn gray(self) -> u8 {
        match self {
            Label::Foreground => 255,
            Label::Background => 0,
            Label::Restricted => 128,
        }
    }
}

/// Half-open column range `[start, end)` within one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub row: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    width: usize,
    height: usize,
    labels: Vec<Label>,
    q_hat: f64,
    q_requested: f64,
    rd_fraction: f64,
    rd_count: usize,
    rd_spans: Vec<Span>,
    halo_spans: Vec<Span>,
}

impl Partition {
    fn from_labels(
        width: usize,
        height: usize,
        labels: Vec<Label>,
        q_hat: f64,
        q_requested: f64,
    ) -> Self {
        let rd_count = labels.iter().filter(|&&l| l == Label::Restricted).count();
        let rd_spans = restricted_spans(width, height, &labels);
        let halo_spans = halo_spans(width, height, &rd_spans);
        Self {
            width,
            height,
            labels,
            q_hat,
            q_requested,
            rd_fraction: rd_count as f64 / (width * height) as f64,
            rd_count,
            rd_spans,
            halo_spans,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> Label {
        self.labels[row * self.width + col]
    }

    pub fn q_hat(&self) -> f64 {
        self.q_hat
    }

    pub fn q_requested(&self) -> f64 {
        self.q_requested
    }

    /// Achieved fraction of restricted-domain pixels; never below `q_requested`.
    pub fn rd_fraction(&self) -> f64 {
        self.rd_fraction
    }

    pub fn rd_count(&self) -> usize {
        self.rd_count
    }

    pub fn is_unrestricted(&self) -> bool {
        self.rd_count == self.labels.len()
    }

    /// Maximal runs of restricted pixels, in row-major order.
    pub fn rd_spans(&self) -> &[Span] {
        &self.rd_spans
    }

    /// Pixels read by the forward-difference gradient when it is evaluated on
    /// the restricted domain: the domain itself plus its right and lower
    /// neighbours. Row-major, disjoint.
    pub fn halo_spans(&self) -> &[Span] {
        &self.halo_spans
    }

    pub(crate) fn check_grid(&self, f: &ScalarField) -> Result<()> {
        if f.width() == self.width && f.height() == self.height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                found: (f.width(), f.height()),
            })
        }
    }

    /// Row-major 8-bit rendering: foreground 255, background 0, restricted 128.
    pub fn to_gray(&self) -> Vec<u8> {
        self.labels.iter().map(|l| l.gray()).collect()
    }
}

fn restricted_spans(width: usize, height: usize, labels: &[Label]) -> Vec<Span> {
    let mut spans = Vec::new();
    for row in 0..height {
        let line = &labels[row * width..(row + 1) * width];
        let mut j = 0;
        while j < width {
            if line[j] == Label::Restricted {
                let start = j;
                while j < width && line[j] == Label::Restricted {
                    j += 1;
                }
                spans.push(Span { row, start, end: j });
            } else {
                j += 1;
            }
        }
    }
    spans
}

fn halo_spans(width: usize, height: usize, rd: &[Span]) -> Vec<Span> {
    let mut by_row: Vec<Vec<(usize, usize)>> = vec![Vec::new(); height];
    for s in rd {
        by_row[s.row].push((s.start, (s.end + 1).min(width)));
        if s.row + 1 < height {
            by_row[s.row + 1].push((s.start, s.end));
        }
    }
    let mut out = Vec::new();
    for (row, mut ranges) in by_row.into_iter().enumerate() {
        ranges.sort_unstable();
        let mut cur: Option<(usize, usize)> = None;
        for (a, b) in ranges {
            cur = match cur {
                Some((s, e)) if a <= e => Some((s, e.max(b))),
                Some((s, e)) => {
                    out.push(Span {
                        row,
                        start: s,
                        end: e,
                    });
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
        if let Some((start, end)) = cur {
            out.push(Span { row, start, end });
        }
    }
    out
}

/// Number of pixels `k` in the smallest admissible restricted domain: the
/// least `k` with `k / n ≥ q`.
fn required_count(q: f64, n: usize) -> usize {
    let nf = n as f64;
    let mut k = ((q * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= q {
        k -= 1;
    }
    while k < n && (k as f64) / nf < q {
        k += 1;
    }
    k
}

/// Partitions the grid for restriction fraction `q ∈ [0, 1]`.
///
/// `q = 0` gives an empty restricted domain with `f = 0` pixels pinned to
/// foreground; `q = 1` leaves every pixel in the restricted domain.
pub fn partition(f: &ScalarField, q: f64) -> Result<Partition> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("q = {q} outside [0, 1]")));
    }
    let (w, h) = (f.width(), f.height());
    if q == 0.0 {
        let labels = f
            .as_slice()
            .iter()
            .map(|&v| {
                if v <= 0.0 {
                    Label::Foreground
                } else {
                    Label::Background
                }
            })
            .collect();
        return Ok(Partition::from_labels(w, h, labels, 0.0, q));
    }

    let mut mags: Vec<f64> = f.as_slice().iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let q_hat = mags[required_count(q, mags.len()) - 1];
    let labels = f
        .as_slice()
        .iter()
        .map(|&v| {
            if v.abs() <= q_hat {
                Label::Restricted
            } else if v < 0.0 {
                Label::Foreground
            } else {
                Label::Background
            }
        })
        .collect();
    Ok(Partition::from_labels(w, h, labels, q_hat, q))
}

/// Heaviside initialisation `u⁰ = H(−f)`: 1 where `f ≤ 0`, else 0.
pub fn initial_indicator(f: &ScalarField) -> ScalarField {
    f.map(|v| if v <= 0.0 { 1.0 } else { 0.0 })
}
