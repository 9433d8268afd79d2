//! TOML run configuration.
//!
//! Every section rejects unknown keys. Input paths (images, meshes, profiles)
//! are resolved relative to the directory of the config file; the output
//! directory is relative to the working directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use cpdiff::filters::FilterKind;
use cpdiff::io::{NoiseModel, NoiseSpec, Pattern};
use cpdiff::FilterConfig;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    pub surface: SurfaceSection,
    #[serde(default)]
    pub grid: GridSection,
    pub texture: TextureSection,
    pub noise: Option<NoiseSection>,
    pub filter: FilterSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// `sphere`, `torus`, `plane`, `revolution` or `mesh`.
    pub kind: String,
    pub radius: Option<f64>,
    pub major: Option<f64>,
    pub minor: Option<f64>,
    pub min: Option<[f64; 2]>,
    pub max: Option<[f64; 2]>,
    pub height: Option<f64>,
    /// `vase` or a CSV file of `(radius, z)` rows.
    pub profile: Option<String>,
    pub profile_samples: Option<usize>,
    /// OBJ or PLY file.
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_h")]
    pub h: f64,
    /// Box corner and node counts; when omitted the box is fitted to the surface.
    pub origin: Option<[f64; 3]>,
    pub extents: Option<[usize; 3]>,
}

fn default_h() -> f64 {
    0.0125
}

impl Default for GridSection {
    fn default() -> Self {
        Self { h: default_h(), origin: None, extents: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureSection {
    /// Generated pattern: `stripes`, `checkerboard`, `wood`, `fingerprint` or `sunflower`.
    pub pattern: Option<String>,
    /// PNG texture.
    pub image: Option<PathBuf>,
    /// Use the vertex colors of the mesh surface.
    #[serde(default)]
    pub mesh_colors: bool,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replicate a gray pattern into three channels.
    #[serde(default)]
    pub color: bool,
}

fn default_width() -> usize {
    1024
}

fn default_height() -> usize {
    512
}

fn default_periods() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `gaussian_additive`, `salt_pepper` or `random_color_replacement`.
    pub model: String,
    pub strength: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub palette: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    /// `gaussian`, `perona_malik`, `edge_enhancing` or `coherence_enhancing`.
    pub kind: String,
    pub stop_time: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub rho: f64,
    pub lambda_rel: Option<f64>,
    pub alpha: Option<f64>,
    pub b_rel: Option<f64>,
    pub tau_factor: Option<f64>,
    pub g_refresh: Option<usize>,
    /// Fixed number of nominal steps instead of `stop_time`.
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File name prefix; defaults to the config file stem.
    pub name: Option<String>,
    /// Per-step CSV diagnostics, relative to `dir`.
    pub diagnostics: Option<PathBuf>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), name: None, diagnostics: None }
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid `{field}`: {reason}"))
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} must be positive and finite")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every value before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.surface;
        match s.kind.as_str() {
            "sphere" => {
                positive("surface.radius", s.radius.unwrap_or(1.0))?;
            }
            "torus" => {
                let major = positive("surface.major", s.major.unwrap_or(1.0))?;
                let minor = positive("surface.minor", s.minor.unwrap_or(0.4))?;
                if minor >= major {
                    return Err(invalid("surface.minor", format!("{minor} must be below surface.major = {major}")));
                }
            }
            "plane" => {
                let (min, max) = (s.min.unwrap_or([-1.0, -1.0]), s.max.unwrap_or([1.0, 1.0]));
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return Err(invalid("surface.max", format!("{max:?} must exceed surface.min = {min:?}")));
                }
                if !s.height.unwrap_or(0.0).is_finite() {
                    return Err(invalid("surface.height", "must be finite"));
                }
            }
            "revolution" => {
                if s.profile.is_none() {
                    return Err(invalid("surface.profile", "required for a revolution surface (`vase` or a CSV path)"));
                }
                if s.profile_samples.is_some_and(|n| n < 2) {
                    return Err(invalid("surface.profile_samples", "needs at least 2 samples"));
                }
            }
            "mesh" => {
                if s.mesh.is_none() {
                    return Err(invalid("surface.mesh", "required for a mesh surface"));
                }
            }
            other => {
                return Err(invalid("surface.kind", format!("unknown kind `{other}`")));
            }
        }

        positive("grid.h", self.grid.h)?;
        match (self.grid.origin, self.grid.extents) {
            (Some(o), Some(_)) if o.iter().any(|v| !v.is_finite()) => {
                return Err(invalid("grid.origin", "must be finite"))
            }
            (Some(_), None) => return Err(invalid("grid.extents", "required together with grid.origin")),
            (None, Some(_)) => return Err(invalid("grid.origin", "required together with grid.extents")),
            _ => {}
        }

        let t = &self.texture;
        let sources = usize::from(t.pattern.is_some()) + usize::from(t.image.is_some()) + usize::from(t.mesh_colors);
        if sources != 1 {
            return Err(invalid("texture", "set exactly one of `pattern`, `image` or `mesh_colors`"));
        }
        if let Some(p) = &t.pattern {
            p.parse::<Pattern>().map_err(|e| invalid("texture.pattern", e))?;
            if t.width == 0 || t.height == 0 {
                return Err(invalid("texture.width", "width and height must be at least 1"));
            }
            if t.periods == 0 {
                return Err(invalid("texture.periods", "must be at least 1"));
            }
        }
        if t.mesh_colors && s.kind != "mesh" {
            return Err(invalid("texture.mesh_colors", "needs a mesh surface"));
        }

        if let Some(n) = &self.noise {
            let spec = self.noise_spec(None)?.expect("noise section present");
            let channels = n.palette.first().map_or(1, Vec::len);
            spec.validate(channels).map_err(|e| invalid("noise", e))?;
            if n.palette.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid("noise.palette", "colors must lie in [0, 1]"));
            }
        }

        let f = &self.filter;
        let kind: FilterKind = f.kind.parse().map_err(|e| invalid("filter.kind", e))?;
        if matches!(kind, FilterKind::PeronaMalik | FilterKind::EdgeEnhancing) && f.lambda_rel.is_none() {
            return Err(invalid("filter.lambda_rel", format!("required for {kind}")));
        }
        self.filter_config()?.validate().map_err(|e| match e {
            cpdiff::FilterError::InvalidConfig { field, reason } => invalid(&format!("filter.{field}"), reason),
            other => invalid("filter", other),
        })?;
        Ok(())
    }

    pub fn filter_config(&self) -> Result<FilterConfig, CliError> {
        let f = &self.filter;
        let kind: FilterKind = f.kind.parse().map_err(|e| invalid("filter.kind", e))?;
        let defaults = FilterConfig::new(kind);
        Ok(FilterConfig {
            kind,
            sigma: f.sigma,
            rho: f.rho,
            lambda_rel: f.lambda_rel.unwrap_or(defaults.lambda_rel),
            alpha: f.alpha.unwrap_or(defaults.alpha),
            b_rel: f.b_rel.unwrap_or(defaults.b_rel),
            stop_time: f.stop_time,
            tau_factor: f.tau_factor.unwrap_or(defaults.tau_factor),
            g_refresh: f.g_refresh.unwrap_or(defaults.g_refresh),
            steps: f.steps,
        })
    }

    /// The noise spec, with the seed replaced by `seed` when given.
    pub fn noise_spec(&self, seed: Option<u64>) -> Result<Option<NoiseSpec>, CliError> {
        let Some(n) = &self.noise else { return Ok(None) };
        let model: NoiseModel = n.model.parse().map_err(|e| invalid("noise.model", e))?;
        Ok(Some(NoiseSpec { model, strength: n.strength, seed: seed.unwrap_or(n.seed), palette: n.palette.clone() }))
    }
}

/// Resolves `p` against the config directory unless it is absolute.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new("")).join(p)
    }
}
