//! Seeded synthetic test images with known foreground masks.
//!
//! * [`SynthKind::Disk`]: one smooth convex shape.
//! * [`SynthKind::Blobs`]: several components of different sizes, plus thin
//!   bars and specks whose fate depends on the regularisation.
//! * [`SynthKind::Concave`]: a C-shaped target among distractor shapes of the
//!   same intensity, with marker points inside the target for the
//!   distance-selective fitting term.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fitting::MarkerSet;
use crate::metrics::BinaryMask;
use crate::pgm::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SynthKind {
    Disk,
    Blobs,
    Concave,
}

impl SynthKind {
    pub const ALL: [SynthKind; 3] = [SynthKind::Disk, SynthKind::Blobs, SynthKind::Concave];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Disk => "disk",
            SynthKind::Blobs => "blobs",
            SynthKind::Concave => "concave",
        }
    }

    /// (foreground, background) gray levels.
    pub fn levels(self) -> (u8, u8) {
        match self {
            SynthKind::Disk => (200, 60),
            SynthKind::Blobs => (180, 80),
            SynthKind::Concave => (190, 70),
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown synthetic kind {s:?} (expected disk, blobs or concave)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub width: usize,
    pub height: usize,
    /// Standard deviation of additive Gaussian noise, in gray levels.
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SynthImage {
    pub image: GrayImage,
    /// Noise-free target region.
    pub truth: BinaryMask,
    pub hi: u8,
    pub lo: u8,
    /// Points inside the target; present for [`SynthKind::Concave`].
    pub markers: Option<MarkerSet>,
}

/// Geometry in a 128-unit reference frame, scaled to the requested size.
struct Frame {
    sy: f64,
    sx: f64,
}

impl Frame {
    fn disk(&self, i: usize, j: usize, cy: f64, cx: f64, r: f64) -> bool {
        let dy = i as f64 / self.sy - cy;
        let dx = j as f64 / self.sx - cx;
        dy * dy + dx * dx <= r * r
    }

    fn ellipse(&self, i: usize, j: usize, cy: f64, cx: f64, ry: f64, rx: f64) -> bool {
        let dy = (i as f64 / self.sy - cy) / ry;
        let dx = (j as f64 / self.sx - cx) / rx;
        dy * dy + dx * dx <= 1.0
    }

    fn rect(&self, i: usize, j: usize, y0: f64, x0: f64, y1: f64, x1: f64) -> bool {
        let y = i as f64 / self.sy;
        let x = j as f64 / self.sx;
        (y0..y1).contains(&y) && (x0..x1).contains(&x)
    }
}

const C_CENTER: (f64, f64) = (44.0, 46.0);
const C_OUTER: f64 = 28.0;
const C_INNER: f64 = 15.0;

fn in_c_shape(fr: &Frame, i: usize, j: usize) -> bool {
    let (cy, cx) = C_CENTER;
    let dy = i as f64 / fr.sy - cy;
    let dx = j as f64 / fr.sx - cx;
    let r2 = dy * dy + dx * dx;
    // ring with the opening facing right, |angle| < 40°
    let opening = dx > 0.0 && dy.abs() < dx * 40f64.to_radians().tan();
    (C_INNER * C_INNER..=C_OUTER * C_OUTER).contains(&r2) && !opening
}

fn foreground(kind: SynthKind, fr: &Frame, i: usize, j: usize) -> (bool, bool) {
    match kind {
        SynthKind::Disk => {
            let fg = fr.ellipse(i, j, 62.0, 66.0, 34.0, 40.0);
            (fg, fg)
        }
        SynthKind::Blobs => {
            let fg = fr.disk(i, j, 34.0, 36.0, 20.0)
                || fr.disk(i, j, 88.0, 30.0, 13.0)
                || fr.ellipse(i, j, 70.0, 88.0, 22.0, 14.0)
                || fr.disk(i, j, 24.0, 98.0, 9.0)
                || fr.disk(i, j, 110.0, 100.0, 6.0)
                // thin bar bridging two blobs
                || fr.rect(i, j, 50.0, 52.0, 52.5, 80.0)
                // specks
                || fr.disk(i, j, 112.0, 60.0, 2.0)
                || fr.disk(i, j, 10.0, 64.0, 1.5);
            (fg, fg)
        }
        SynthKind::Concave => {
            let target = in_c_shape(fr, i, j);
            let distractor = fr.disk(i, j, 100.0, 100.0, 14.0)
                || fr.rect(i, j, 92.0, 14.0, 116.0, 40.0)
                || fr.disk(i, j, 24.0, 108.0, 9.0);
            (target || distractor, target)
        }
    }
}

fn concave_markers(fr: &Frame, width: usize, height: usize) -> Result<MarkerSet> {
    let (cy, cx) = C_CENTER;
    let r = 0.5 * (C_OUTER + C_INNER);
    let points = (0..7)
        .map(|k| {
            let a = (70.0 + 36.667 * k as f64).to_radians();
            let y = ((cy + r * a.sin()) * fr.sy).round() as usize;
            let x = ((cx + r * a.cos()) * fr.sx).round() as usize;
            (y.min(height - 1), x.min(width - 1))
        })
        .collect();
    MarkerSet::new(points, width, height)
}

/// Generates the image, its truth mask and (for the concave kind) markers.
/// Output is a pure function of `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthImage> {
    if spec.width < 16 || spec.height < 16 {
        return Err(Error::InvalidInput(format!(
            "synthetic images need at least 16x16 pixels, got {}x{}",
            spec.width, spec.height
        )));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise sigma {} must be >= 0",
            spec.noise_sigma
        )));
    }
    let (w, h) = (spec.width, spec.height);
    let fr = Frame {
        sy: h as f64 / 128.0,
        sx: w as f64 / 128.0,
    };
    let (hi, lo) = spec.kind.levels();
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut clean = Vec::with_capacity(w * h);
    let mut truth = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            let (bright, target) = foreground(spec.kind, &fr, i, j);
            clean.push(f64::from(if bright { hi } else { lo }));
            truth.push(target);
        }
    }
    let pixels = clean
        .iter()
        .map(|&base| {
            let n = if spec.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (base + n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let markers = match spec.kind {
        SynthKind::Concave => Some(concave_markers(&fr, w, h)?),
        _ => None,
    };
    Ok(SynthImage {
        image: GrayImage::new(w, h, pixels)?,
        truth: BinaryMask::new(w, h, truth)?,
        hi,
        lo,
        markers,
    })
}
