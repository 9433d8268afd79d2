//! The pipeline stages behind the subcommands: band, map (texture and noise),
//! filter, export and metrics. Each stage is a prefix of the next.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cpdiff::band::build_band;
use cpdiff::geometry::{PlanePatch, Profile};
use cpdiff::io::{self, IoError, PatternSpec, RasterImage};
use cpdiff::{FilterConfig, GridSpec, Surface, SurfaceDomain, SurfaceField};

use crate::config::{resolve, RunConfig};
use crate::CliError;

/// Command-line overrides shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub diagnostics: Option<PathBuf>,
    pub steps: Option<usize>,
}

/// A loaded config with its output location.
pub struct Session {
    pub config_path: PathBuf,
    pub config: RunConfig,
    pub overrides: Overrides,
    name: String,
    out_dir: PathBuf,
}

/// What `map` produced: the clean surface image and the filter input.
pub struct Mapped {
    pub domain: SurfaceDomain,
    pub clean: SurfaceField,
    pub noisy: Option<SurfaceField>,
}

impl Mapped {
    pub fn input(&self) -> &SurfaceField {
        self.noisy.as_ref().unwrap_or(&self.clean)
    }
}

/// Summary of a filter run, as printed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub iterations: usize,
    pub tau: f64,
    pub psnr_input: Option<f64>,
    pub psnr_output: Option<f64>,
}

impl Session {
    pub fn load(config_path: &Path, overrides: Overrides) -> Result<Self, CliError> {
        let config = RunConfig::load(config_path)?;
        let name = match &config.output.name {
            Some(n) => n.clone(),
            None => config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into()),
        };
        let out_dir = overrides.out.clone().unwrap_or_else(|| config.output.dir.clone());
        Ok(Self { config_path: config_path.to_path_buf(), config, overrides, name, out_dir })
    }

    pub fn threads(&self) -> usize {
        self.overrides.threads.unwrap_or(self.config.threads)
    }

    pub fn filter_config(&self) -> Result<FilterConfig, CliError> {
        let mut c = self.config.filter_config()?;
        if self.overrides.steps.is_some() {
            c.steps = self.overrides.steps;
        }
        Ok(c)
    }

    /// `<out_dir>/<name><suffix>`, creating the directory.
    pub fn output(&self, suffix: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", self.out_dir.display())))?;
        Ok(self.out_dir.join(format!("{}{suffix}", self.name)))
    }

    fn input(&self, p: &Path) -> PathBuf {
        resolve(&self.config_path, p)
    }

    pub fn surface(&self) -> Result<Surface, CliError> {
        let s = &self.config.surface;
        Ok(match s.kind.as_str() {
            "sphere" => Surface::Sphere { radius: s.radius.unwrap_or(1.0) },
            "torus" => Surface::Torus { major: s.major.unwrap_or(1.0), minor: s.minor.unwrap_or(0.4) },
            "plane" => Surface::Plane(PlanePatch::new(
                s.min.unwrap_or([-1.0, -1.0]),
                s.max.unwrap_or([1.0, 1.0]),
                s.height.unwrap_or(0.0),
            )),
            "revolution" => {
                let profile = match s.profile.as_deref() {
                    Some("vase") => Profile::vase(s.profile_samples.unwrap_or(400)),
                    Some(path) => {
                        let path = self.input(Path::new(path));
                        let text =
                            fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                        Profile::from_csv(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
                    }
                    None => unreachable!("validated"),
                };
                Surface::Revolution(profile)
            }
            "mesh" => {
                let path = self.input(s.mesh.as_deref().expect("validated"));
                Surface::Mesh(Arc::new(io::load_mesh(&path)?))
            }
            _ => unreachable!("validated"),
        })
    }

    fn grid(&self, surface: &Surface) -> Result<GridSpec, CliError> {
        let g = &self.config.grid;
        Ok(match (g.origin, g.extents) {
            (Some(origin), Some(extents)) => GridSpec::new(origin, g.h, extents)?,
            _ => SurfaceDomain::fitted_grid(surface, g.h)?,
        })
    }

    pub fn domain(&self) -> Result<SurfaceDomain, CliError> {
        let surface = self.surface()?;
        let spec = self.grid(&surface)?;
        Ok(SurfaceDomain::new(surface, spec)?)
    }

    /// Builds the band only and writes it as text; returns the point count.
    pub fn band(&self) -> Result<usize, CliError> {
        let surface = self.surface()?;
        let spec = self.grid(&surface)?;
        let band = build_band(&surface, spec, SurfaceDomain::band_radius(spec.h))?;
        let path = self.output(".band")?;
        fs::write(&path, band.to_text()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("band: {} points, h = {}", band.len(), spec.h);
        println!("wrote {}", path.display());
        Ok(band.len())
    }

    fn texture(&self, domain: &SurfaceDomain) -> Result<SurfaceField, CliError> {
        let t = &self.config.texture;
        if t.mesh_colors {
            return Ok(io::mesh_colors_to_surface(domain)?);
        }
        let img = match (&t.pattern, &t.image) {
            (Some(p), _) => PatternSpec::new(p.parse()?, t.width, t.height, t.periods, t.seed).generate(),
            (None, Some(path)) => RasterImage::load_png(&self.input(path))?,
            (None, None) => unreachable!("validated"),
        };
        let img = if t.color { img.to_rgb() } else { img };
        Ok(io::texture_to_surface(&img, domain)?)
    }

    /// Builds the domain, maps the texture and adds noise; writes PLY and field dumps.
    pub fn map(&self) -> Result<Mapped, CliError> {
        let start = Instant::now();
        let domain = self.domain()?;
        println!(
            "surface: {}, h = {}, band points: {} ({:.1?})",
            domain.surface().name(),
            domain.h(),
            domain.len(),
            start.elapsed()
        );
        let clean = self.texture(&domain)?;
        self.export(&clean, &domain, "_clean")?;
        let noisy = match self.config.noise_spec(self.overrides.seed)? {
            Some(spec) => {
                let outcome = io::add_noise(&clean, &spec, &domain)?;
                println!("noise: {} of {} points changed", outcome.replaced, domain.len());
                self.export(&outcome.field, &domain, "_noisy")?;
                Some(outcome.field)
            }
            None => None,
        };
        Ok(Mapped { domain, clean, noisy })
    }

    fn export(&self, field: &SurfaceField, domain: &SurfaceDomain, suffix: &str) -> Result<(), CliError> {
        let ply = self.output(&format!("{suffix}.ply"))?;
        let count = io::export_surface(field, domain, &ply)?;
        let dump = self.output(&format!("{suffix}.field"))?;
        io::write_field(&dump, field)?;
        println!("wrote {} ({count} points) and {}", ply.display(), dump.display());
        if let Surface::Mesh(mesh) = domain.surface() {
            let path = self.output(&format!("{suffix}_mesh.ply"))?;
            io::export_mesh_colors(mesh, field, domain, &path)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }

    /// The iteration count and step the filter would use.
    pub fn schedule(&self) -> Result<(usize, f64), CliError> {
        Ok(self.filter_config()?.schedule(self.config.grid.h))
    }

    /// The full pipeline: map, filter, export, metrics.
    pub fn run(&self) -> Result<RunReport, CliError> {
        let mapped = self.map()?;
        let config = self.filter_config()?;
        let start = Instant::now();
        let out = cpdiff::filters::run_filter(mapped.input(), &config, &mapped.domain)?;
        println!(
            "filter: {}, iterations: {}, tau = {:e} ({:.1?})",
            config.kind,
            out.iterations,
            out.tau,
            start.elapsed()
        );
        if let Some(p) = &out.params {
            println!("adapted: lambda = {:e}, b = {:e}, max gradient = {:e}", p.lambda, p.b, p.gradient_max);
        }
        self.export(&out.field, &mapped.domain, "_filtered")?;
        let diagnostics = self
            .overrides
            .diagnostics
            .clone()
            .or_else(|| self.config.output.diagnostics.as_ref().map(|p| self.out_dir.join(p)));
        if let Some(path) = diagnostics {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            io::write_diagnostics(&path, &out.diagnostics)?;
            println!("wrote {}", path.display());
        }
        let (psnr_input, psnr_output) = match &mapped.noisy {
            Some(noisy) => (Some(io::psnr(noisy, &mapped.clean)?), Some(io::psnr(&out.field, &mapped.clean)?)),
            None => (None, None),
        };
        if let (Some(a), Some(b)) = (psnr_input, psnr_output) {
            println!("psnr noisy: {a:.3} dB");
            println!("psnr filtered: {b:.3} dB");
        }
        Ok(RunReport { iterations: out.iterations, tau: out.tau, psnr_input, psnr_output })
    }
}

/// Loads a field dump, or the vertex colors of a PLY file as three channels.
pub fn load_values(path: &Path) -> Result<SurfaceField, IoError> {
    let is_ply = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        let colors = io::read_ply_colors(path)?;
        let values = colors.iter().flat_map(|c| c.map(|v| v as f64 / 255.0)).collect();
        Ok(SurfaceField::new(values, 3))
    } else {
        io::read_field(path)
    }
}

/// PSNR of `a` against `b`; identical inputs give infinity.
pub fn metrics(a: &Path, b: &Path) -> Result<f64, CliError> {
    let (u, v) = (load_values(a)?, load_values(b)?);
    let mse = io::mse(&u, &v).map_err(|e| CliError::Config(e.to_string()))?;
    let psnr = io::psnr(&u, &v).map_err(|e| CliError::Config(e.to_string()))?;
    println!("mse: {mse:e}");
    println!("psnr: {psnr} dB");
    Ok(psnr)
}
