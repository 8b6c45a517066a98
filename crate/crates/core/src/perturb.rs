//! Image perturbations: skew, noise, brightness and elastic deformation.
//!
//! Every operator keeps the image geometry, keeps pixels in `0..=255` and is
//! a pure function of the image and the [`PerturbationSpec`], including its
//! RNG seed. Resampling is bilinear with border replication and results are
//! rounded half-up.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HdcError, Result};
use crate::image::Image;
use crate::rng::{seeded_rng, HdcRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    Skew,
    Noise,
    Brightness,
    Elastic,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 4] = [
        PerturbationKind::Skew,
        PerturbationKind::Noise,
        PerturbationKind::Brightness,
        PerturbationKind::Elastic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationKind::Skew => "skew",
            PerturbationKind::Noise => "noise",
            PerturbationKind::Brightness => "brightness",
            PerturbationKind::Elastic => "elastic",
        }
    }

    pub(crate) fn code(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbationKind {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        PerturbationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HdcError::domain(format!("unknown perturbation kind {s:?}")))
    }
}

pub const DEFAULT_SKEW_MEAN: f64 = 0.2;
pub const DEFAULT_SKEW_STD: f64 = 0.1;
pub const DEFAULT_NOISE_POINTS: usize = 100;
pub const DEFAULT_BRIGHTNESS: f64 = 0.8;
pub const DEFAULT_ELASTIC_ALPHA: f64 = 34.0;
pub const DEFAULT_ELASTIC_SIGMA: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbationParams {
    /// Horizontal shear; the factor is drawn from Normal(mean, std_dev).
    Skew { mean: f64, std_dev: f64 },
    /// Distinct pixel positions overwritten with 0.
    Noise { points: usize },
    /// Multiplicative factor in (0, 1].
    Brightness { factor: f64 },
    /// Smoothed random displacement field: Gaussian width `sigma`, scale `alpha`.
    Elastic { alpha: f64, sigma: f64 },
}

impl PerturbationParams {
    pub fn kind(&self) -> PerturbationKind {
        match self {
            PerturbationParams::Skew { .. } => PerturbationKind::Skew,
            PerturbationParams::Noise { .. } => PerturbationKind::Noise,
            PerturbationParams::Brightness { .. } => PerturbationKind::Brightness,
            PerturbationParams::Elastic { .. } => PerturbationKind::Elastic,
        }
    }

    pub fn default_for(kind: PerturbationKind) -> Self {
        match kind {
            PerturbationKind::Skew => PerturbationParams::Skew {
                mean: DEFAULT_SKEW_MEAN,
                std_dev: DEFAULT_SKEW_STD,
            },
            PerturbationKind::Noise => PerturbationParams::Noise {
                points: DEFAULT_NOISE_POINTS,
            },
            PerturbationKind::Brightness => PerturbationParams::Brightness {
                factor: DEFAULT_BRIGHTNESS,
            },
            PerturbationKind::Elastic => PerturbationParams::Elastic {
                alpha: DEFAULT_ELASTIC_ALPHA,
                sigma: DEFAULT_ELASTIC_SIGMA,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PerturbationParams::Skew { mean, std_dev } => {
                if !mean.is_finite() || !std_dev.is_finite() || std_dev < 0.0 {
                    return Err(HdcError::domain(format!(
                        "skew needs a finite mean and std_dev >= 0, got ({mean}, {std_dev})"
                    )));
                }
            }
            PerturbationParams::Noise { .. } => {}
            PerturbationParams::Brightness { factor } => {
                if !(factor > 0.0 && factor <= 1.0) {
                    return Err(HdcError::domain(format!(
                        "brightness factor must be in (0, 1], got {factor}"
                    )));
                }
            }
            PerturbationParams::Elastic { alpha, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(HdcError::domain(format!(
                        "elastic sigma must be positive, got {sigma}"
                    )));
                }
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(HdcError::domain(format!(
                        "elastic alpha must be >= 0, got {alpha}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub params: PerturbationParams,
    pub rng_seed: u64,
}

impl PerturbationSpec {
    pub fn new(params: PerturbationParams, rng_seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(PerturbationSpec { params, rng_seed })
    }

    pub fn default_for(kind: PerturbationKind, rng_seed: u64) -> Self {
        PerturbationSpec {
            params: PerturbationParams::default_for(kind),
            rng_seed,
        }
    }

    /// All four kinds with default parameters, sharing one seed.
    pub fn default_set(rng_seed: u64) -> Vec<PerturbationSpec> {
        PerturbationKind::ALL
            .into_iter()
            .map(|k| PerturbationSpec::default_for(k, rng_seed))
            .collect()
    }

    pub fn kind(&self) -> PerturbationKind {
        self.params.kind()
    }

    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    /// Applies the perturbation. The result keeps the parent's label and its
    /// id records the perturbation kind.
    pub fn apply(&self, image: &Image) -> Result<Image> {
        self.params.validate()?;
        let mut rng = seeded_rng(self.rng_seed);
        let pixels = match self.params {
            PerturbationParams::Skew { mean, std_dev } => {
                let normal = Normal::new(mean, std_dev)
                    .map_err(|e| HdcError::domain(format!("skew distribution: {e}")))?;
                shear_pixels(image, normal.sample(&mut rng))
            }
            PerturbationParams::Noise { points } => noise_pixels(image, points, &mut rng)?,
            PerturbationParams::Brightness { factor } => brightness_pixels(image, factor),
            PerturbationParams::Elastic { alpha, sigma } => {
                elastic_pixels(image, alpha, sigma, &mut rng)
            }
        };
        Ok(image.derive(image.id.with_variant(self.kind()), pixels))
    }
}

pub fn skew(image: &Image, spec: &PerturbationSpec) -> Result<Image> {
    expect_kind(spec, PerturbationKind::Skew)?;
    spec.apply(image)
}

pub fn add_noise(image: &Image, spec: &PerturbationSpec) -> Result<Image> {
    expect_kind(spec, PerturbationKind::Noise)?;
    spec.apply(image)
}

pub fn brightness(image: &Image, spec: &PerturbationSpec) -> Result<Image> {
    expect_kind(spec, PerturbationKind::Brightness)?;
    spec.apply(image)
}

pub fn elastic_transform(image: &Image, spec: &PerturbationSpec) -> Result<Image> {
    expect_kind(spec, PerturbationKind::Elastic)?;
    spec.apply(image)
}

fn expect_kind(spec: &PerturbationSpec, kind: PerturbationKind) -> Result<()> {
    if spec.kind() != kind {
        return Err(HdcError::domain(format!(
            "expected a {kind} spec, got {}",
            spec.kind()
        )));
    }
    Ok(())
}

/// Horizontal shear with a fixed factor, about the centre row:
/// output `(r, c)` samples the input at `(r, c - factor * (r - centre))`.
pub fn shear(image: &Image, factor: f64) -> Image {
    let pixels = shear_pixels(image, factor);
    image.derive(image.id.with_variant(PerturbationKind::Skew), pixels)
}

fn shear_pixels(image: &Image, factor: f64) -> Vec<u8> {
    let (w, h) = (image.width(), image.height());
    let centre = (h as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        let offset = factor * (r as f64 - centre);
        for c in 0..w {
            out.push(round_pixel(sample_bilinear(image, r as f64, c as f64 - offset)));
        }
    }
    out
}

fn noise_pixels(image: &Image, points: usize, rng: &mut HdcRng) -> Result<Vec<u8>> {
    let n = image.pixels().len();
    if points > n {
        return Err(HdcError::domain(format!(
            "cannot choose {points} noise points from {n} pixels"
        )));
    }
    let mut out = image.pixels().to_vec();
    for i in index::sample(rng, n, points) {
        out[i] = 0;
    }
    Ok(out)
}

fn brightness_pixels(image: &Image, factor: f64) -> Vec<u8> {
    image
        .pixels()
        .iter()
        .map(|&p| (f64::from(p) * factor).floor().clamp(0.0, 255.0) as u8)
        .collect()
}

fn elastic_pixels(image: &Image, alpha: f64, sigma: f64, rng: &mut HdcRng) -> Vec<u8> {
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    let dx: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dy: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let kernel = gaussian_kernel(sigma);
    let dx = gaussian_blur(&dx, w, h, &kernel);
    let dy = gaussian_blur(&dy, w, h, &kernel);
    let mut out = Vec::with_capacity(n);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let y = r as f64 + alpha * dy[i];
            let x = c as f64 + alpha * dx[i];
            out.push(round_pixel(sample_bilinear(image, y, x)));
        }
    }
    out
}

/// Normalized 1-D Gaussian truncated at four standard deviations.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|v| v / total).collect()
}

/// Separable convolution with border replication.
fn gaussian_blur(field: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let clamp = |v: isize, max: usize| v.clamp(0, max as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * field[r * w + clamp(c as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * tmp[clamp(r as isize + k as isize - radius, h) * w + c])
                .sum();
        }
    }
    out
}

/// Bilinear interpolation at fractional `(y, x)`, coordinates clamped to the
/// image (border replication).
fn sample_bilinear(image: &Image, y: f64, x: f64) -> f64 {
    let (w, h) = (image.width(), image.height());
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let p = |r: usize, c: usize| f64::from(image.get(r, c));
    let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
    let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
    top * (1.0 - fy) + bottom * fy
}

fn round_pixel(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}
