//! Procedural test textures.
//!
//! Texture coordinates `(x, y)` cover `[0, 1]²`; on sphere, torus and surfaces
//! of revolution `x` is the azimuth and wraps, so the generators keep `x`
//! periodic where that matters.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use noise::{Fbm, MultiFractal, NoiseFn, Perlin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{IoError, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Black and white bands along `x`.
    Stripes,
    Checkerboard,
    /// Brown concentric growth rings distorted by turbulence.
    Wood,
    /// Curved dark ridges on white with random gaps.
    Fingerprint,
    /// Yellow seed florets on a golden-angle spiral over a green background.
    Sunflower,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Stripes => "stripes",
            Pattern::Checkerboard => "checkerboard",
            Pattern::Wood => "wood",
            Pattern::Fingerprint => "fingerprint",
            Pattern::Sunflower => "sunflower",
        })
    }
}

impl FromStr for Pattern {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "stripes" => Pattern::Stripes,
            "checkerboard" => Pattern::Checkerboard,
            "wood" => Pattern::Wood,
            "fingerprint" => Pattern::Fingerprint,
            "sunflower" => Pattern::Sunflower,
            other => return Err(IoError::InvalidImage(format!("unknown pattern `{other}`"))),
        })
    }
}

/// Parameters shared by the generators; each uses the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub pattern: Pattern,
    pub width: usize,
    pub height: usize,
    /// Stripe or checker count along `x` (ring count for wood, ridge count for fingerprints).
    pub periods: usize,
    pub seed: u64,
}

impl PatternSpec {
    pub fn new(pattern: Pattern, width: usize, height: usize, periods: usize, seed: u64) -> Self {
        Self { pattern, width, height, periods, seed }
    }

    pub fn generate(&self) -> RasterImage {
        let (w, h, p) = (self.width, self.height, self.periods.max(1) as f64);
        match self.pattern {
            Pattern::Stripes => stripes(w, h, p),
            Pattern::Checkerboard => checkerboard(w, h, p),
            Pattern::Wood => wood(w, h, p, self.seed),
            Pattern::Fingerprint => fingerprint(w, h, p, self.seed),
            Pattern::Sunflower => sunflower(w, h, p),
        }
    }
}

pub fn stripes(width: usize, height: usize, periods: f64) -> RasterImage {
    RasterImage::from_fn(width, height, 1, |x, _| vec![if (x * periods).fract() < 0.5 { 1.0 } else { 0.0 }])
}

/// `periods` cells along `x` and half as many along `y`.
pub fn checkerboard(width: usize, height: usize, periods: f64) -> RasterImage {
    RasterImage::from_fn(width, height, 1, |x, y| {
        let (i, j) = ((x * periods).floor() as i64, (y * periods * 0.5).floor() as i64);
        vec![if (i + j).rem_euclid(2) == 0 { 1.0 } else { 0.0 }]
    })
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> Vec<f64> {
    (0..3).map(|c| a[c] + (b[c] - a[c]) * t).collect()
}

pub fn wood(width: usize, height: usize, rings: f64, seed: u64) -> RasterImage {
    let fbm = Fbm::<Perlin>::new(seed as u32).set_octaves(4);
    let light = [0.87, 0.69, 0.45];
    let dark = [0.45, 0.27, 0.12];
    RasterImage::from_fn(width, height, 3, |x, y| {
        // the trunk axis runs along y; x is sampled on a circle so the texture wraps
        let (cx, cy) = ((TAU * x).cos(), (TAU * x).sin());
        let turb = fbm.get([cx, cy, 3.0 * y]);
        let r = (0.5 + 0.35 * cx + 0.2 * (2.0 * PI * y).sin()).abs() + 0.15 * turb;
        let ring = 0.5 + 0.5 * (TAU * rings * r).sin();
        mix(light, dark, ring.powi(3))
    })
}

pub fn fingerprint(width: usize, height: usize, ridges: f64, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // gaps are small ellipses elongated along the ridges
    let gaps: Vec<(f64, f64, f64)> = (0..(ridges * 4.0) as usize)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen_range(0.012..0.03)))
        .collect();
    let warp = Perlin::new(seed as u32 ^ 0x5eed);
    RasterImage::from_fn(width, height, 1, |x, y| {
        let (dx, dy) = ((x - 0.5) * 2.0, y - 0.45);
        // whorl: distorted distance to a core, periodic in x through the warp
        let phase = (dx * dx * 0.25 + dy * dy).sqrt() + 0.03 * warp.get([(TAU * x).cos(), (TAU * x).sin(), 4.0 * y]);
        let ridge = 0.5 + 0.5 * (TAU * ridges * phase).cos();
        let in_gap = gaps.iter().any(|&(gx, gy, r)| {
            let ex = (x - gx).abs().min(1.0 - (x - gx).abs());
            (ex / 2.0).hypot(y - gy) < r
        });
        vec![if in_gap { 1.0 } else { 1.0 - ridge.powi(2) }]
    })
}

pub fn sunflower(width: usize, height: usize, florets: f64) -> RasterImage {
    let golden = PI * (3.0 - 5f64.sqrt());
    let n = (florets * florets) as usize;
    let centres: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let r = (k as f64 + 0.5).sqrt() / (n as f64).sqrt();
            let a = k as f64 * golden;
            (0.5 + 0.5 * r * a.cos(), 0.5 + 0.5 * r * a.sin())
        })
        .collect();
    let radius = 0.35 / (n as f64).sqrt();
    RasterImage::from_fn(width, height, 3, |x, y| {
        let d = centres.iter().map(|&(cx, cy)| (x - cx).hypot(y - cy)).fold(f64::INFINITY, f64::min);
        let t = (1.0 - d / radius).clamp(0.0, 1.0);
        mix([0.15, 0.35, 0.1], [0.95, 0.8, 0.1], (3.0 * t).min(1.0))
    })
}
