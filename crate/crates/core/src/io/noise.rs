//! Seeded noise models.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with the 64-bit
//! seed through `SeedableRng::seed_from_u64`. ChaCha8 is a fixed, portable
//! stream cipher, so a seed reproduces the same field on every platform.
//! Band points are visited in band order and draws are made in this order:
//!
//! * `gaussian_additive`: one normal draw per channel, `v + strength·N(0, 1)`;
//! * `salt_pepper`: one uniform draw `p`; if `p < strength` a second uniform
//!   draw picks black (`< 0.5`) or white for all channels;
//! * `random_color_replacement`: one uniform draw `p`; if `p < strength` a
//!   uniform palette index is drawn and its color written to all channels.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain::SurfaceDomain;
use crate::ops::SurfaceField;

use super::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    GaussianAdditive,
    SaltPepper,
    RandomColorReplacement,
}

impl FromStr for NoiseModel {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian_additive" => Ok(NoiseModel::GaussianAdditive),
            "salt_pepper" => Ok(NoiseModel::SaltPepper),
            "random_color_replacement" => Ok(NoiseModel::RandomColorReplacement),
            other => Err(IoError::InvalidNoise(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Standard deviation for additive noise, otherwise the fraction of band points hit.
    pub strength: f64,
    pub seed: u64,
    /// Replacement colors, one entry per channel each.
    pub palette: Vec<Vec<f64>>,
}

impl NoiseSpec {
    pub fn validate(&self, channels: usize) -> Result<(), IoError> {
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(IoError::InvalidNoise(format!("strength {} must be finite and >= 0", self.strength)));
        }
        if self.model != NoiseModel::GaussianAdditive && self.strength > 1.0 {
            return Err(IoError::InvalidNoise(format!("fraction {} must lie in [0, 1]", self.strength)));
        }
        if self.model == NoiseModel::RandomColorReplacement {
            if self.palette.is_empty() {
                return Err(IoError::InvalidNoise("replacement needs a non-empty palette".into()));
            }
            if let Some(c) = self.palette.iter().find(|c| c.len() != channels) {
                return Err(IoError::InvalidNoise(format!("palette entry {c:?} does not have {channels} channels")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NoiseOutcome {
    pub field: SurfaceField,
    /// Band points whose value was overwritten (additive noise: all points touched).
    pub replaced: usize,
}

/// Applies `spec` to `u` and re-extends the result with `E`, clamped to `[0, 1]`.
///
/// When no point is changed the input is returned untouched.
pub fn add_noise(u: &SurfaceField, spec: &NoiseSpec, domain: &SurfaceDomain) -> Result<NoiseOutcome, IoError> {
    spec.validate(u.channels())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noisy = u.clone();
    let mut replaced = 0;
    for i in 0..u.len() {
        let p = noisy.point_mut(i);
        match spec.model {
            NoiseModel::GaussianAdditive => {
                if spec.strength > 0.0 {
                    for v in p.iter_mut() {
                        *v += spec.strength * rng.sample::<f64, _>(StandardNormal);
                    }
                    replaced += 1;
                }
            }
            NoiseModel::SaltPepper => {
                if rng.gen::<f64>() < spec.strength {
                    let value = if rng.gen::<f64>() < 0.5 { 0.0 } else { 1.0 };
                    p.fill(value);
                    replaced += 1;
                }
            }
            NoiseModel::RandomColorReplacement => {
                if rng.gen::<f64>() < spec.strength {
                    p.copy_from_slice(&spec.palette[rng.gen_range(0..spec.palette.len())]);
                    replaced += 1;
                }
            }
        }
    }
    if replaced == 0 {
        return Ok(NoiseOutcome { field: u.clone(), replaced });
    }
    let field = domain.extension().apply(&noisy).map(|v| v.clamp(0.0, 1.0)).extended(true);
    Ok(NoiseOutcome { field, replaced })
}
