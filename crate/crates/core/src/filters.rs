//! Ruuth–Merriman time loops for Gaussian, Perona–Malik, edge-enhancing and
//! coherence-enhancing diffusion of scalar and color surface images.
//!
//! Every step evolves the embedding equation on the stencil-complete rows and
//! re-extends the result with `E`. Channels are filtered with one shared
//! diffusion tensor built from the channel-averaged structure tensor.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::domain::SurfaceDomain;
use crate::ops::{anisotropic_divergence, isotropic_divergence, SurfaceField, TensorField};
use crate::structure::{
    build_structure_tensor, contract_and_decompose, diffusion_tensor_from_structure, heat_smooth, order_free_sum,
    perona_malik, step_count, surface_gradient, DiffusionTensor, Eigen2, KappaParams, DEFAULT_TAU_FACTOR,
};

/// Gradients below this are treated as a constant image.
pub const CONSTANT_GRADIENT_EPS: f64 = 1e-14;
/// Edge-enhancing diffusion uses the projector where `c < COHERENCE_FLOOR_REL · ‖c⁰‖∞`.
pub const COHERENCE_FLOOR_REL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid filter parameter `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(
        "initial image is constant on the surface (max smoothed gradient {0:e}); relative parameters are undefined"
    )]
    ConstantInput(f64),
    #[error("state became non-finite in step {step}; reduce the time step factor")]
    NonFiniteState { step: usize },
    #[error("unknown filter kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Gaussian,
    PeronaMalik,
    EdgeEnhancing,
    CoherenceEnhancing,
}

impl FilterKind {
    pub fn is_anisotropic(self) -> bool {
        matches!(self, FilterKind::EdgeEnhancing | FilterKind::CoherenceEnhancing)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::Gaussian => "gaussian",
            FilterKind::PeronaMalik => "perona_malik",
            FilterKind::EdgeEnhancing => "edge_enhancing",
            FilterKind::CoherenceEnhancing => "coherence_enhancing",
        })
    }
}

impl FromStr for FilterKind {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(FilterKind::Gaussian),
            "perona_malik" => Ok(FilterKind::PeronaMalik),
            "edge_enhancing" => Ok(FilterKind::EdgeEnhancing),
            "coherence_enhancing" => Ok(FilterKind::CoherenceEnhancing),
            other => Err(FilterError::UnknownKind(other.to_string())),
        }
    }
}

/// Filter parameters. Times are in surface units (the data is not rescaled).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub kind: FilterKind,
    /// Pre-smoothing time of the gradient.
    pub sigma: f64,
    /// Post-smoothing time of the structure tensor.
    pub rho: f64,
    pub lambda_rel: f64,
    pub alpha: f64,
    pub b_rel: f64,
    pub stop_time: f64,
    /// Nominal step is `tau_factor · h²`.
    pub tau_factor: f64,
    /// Steps between diffusion tensor rebuilds.
    pub g_refresh: usize,
    /// Runs exactly this many nominal steps instead of stopping at `stop_time`.
    pub steps: Option<usize>,
}

impl FilterConfig {
    pub fn new(kind: FilterKind) -> Self {
        Self {
            kind,
            sigma: 0.0,
            rho: 0.0,
            lambda_rel: 1.0,
            alpha: 1e-3,
            b_rel: 1e-3,
            stop_time: 0.0,
            tau_factor: DEFAULT_TAU_FACTOR,
            g_refresh: 1,
            steps: None,
        }
    }

    pub fn gaussian(stop_time: f64) -> Self {
        Self { stop_time, ..Self::new(FilterKind::Gaussian) }
    }

    pub fn perona_malik(lambda_rel: f64, sigma: f64, stop_time: f64) -> Self {
        Self { lambda_rel, sigma, stop_time, ..Self::new(FilterKind::PeronaMalik) }
    }

    pub fn edge_enhancing(sigma: f64, rho: f64, lambda_rel: f64, stop_time: f64) -> Self {
        Self { sigma, rho, lambda_rel, stop_time, ..Self::new(FilterKind::EdgeEnhancing) }
    }

    pub fn coherence_enhancing(sigma: f64, rho: f64, alpha: f64, b_rel: f64, stop_time: f64) -> Self {
        Self { sigma, rho, alpha, b_rel, stop_time, ..Self::new(FilterKind::CoherenceEnhancing) }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |field, reason: &str| Err(FilterError::InvalidConfig { field, reason: reason.to_string() });
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.stop_time) {
            return bad("stop_time", "must be finite and >= 0");
        }
        if !(self.tau_factor > 0.0 && self.tau_factor <= 0.5) {
            return bad("tau_factor", "must lie in (0, 0.5]");
        }
        if !finite_nonneg(self.sigma) {
            return bad("sigma", "must be finite and >= 0");
        }
        if !finite_nonneg(self.rho) {
            return bad("rho", "must be finite and >= 0");
        }
        if self.g_refresh == 0 {
            return bad("g_refresh", "must be at least 1");
        }
        match self.kind {
            FilterKind::PeronaMalik | FilterKind::EdgeEnhancing if !(self.lambda_rel > 0.0) => {
                bad("lambda_rel", "must be > 0")
            }
            FilterKind::CoherenceEnhancing if !(0.0..1.0).contains(&self.alpha) => bad("alpha", "must lie in [0, 1)"),
            FilterKind::CoherenceEnhancing if !(self.b_rel > 0.0 && self.b_rel.is_finite()) => {
                bad("b_rel", "must be finite and > 0")
            }
            _ => Ok(()),
        }
    }

    /// Number of steps and step size on a grid of spacing `h`.
    ///
    /// The step is shortened from `tau_factor · h²` so that the steps end
    /// exactly at `stop_time`.
    pub fn schedule(&self, h: f64) -> (usize, f64) {
        let nominal = self.tau_factor * h * h;
        if let Some(n) = self.steps {
            return (n, nominal);
        }
        let n = step_count(self.stop_time, nominal);
        let tau = if n == 0 { nominal } else { self.stop_time / n as f64 };
        (n, tau)
    }
}

/// Converts the times of a filter run on a pixel grid (unit spacing) to the
/// surface scale, where a length `L` of pixels spans one surface unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleTransfer {
    pub length: f64,
}

impl ScaleTransfer {
    /// `L = pixels / √area` for a square image of side `pixels` covering `area`.
    pub fn from_area(pixels: f64, area: f64) -> Self {
        Self { length: pixels / area.sqrt() }
    }

    /// A Gaussian of standard deviation `width` pixels is the heat kernel at time
    /// `width²/2`; in surface units that is `width²/(2L²)`.
    pub fn smoothing_time(&self, width: f64) -> f64 {
        width * width / (2.0 * self.length * self.length)
    }

    /// Diffusion time scales with length squared: `T/L²`.
    pub fn stop_time(&self, t: f64) -> f64 {
        t / (self.length * self.length)
    }
}

/// Absolute thresholds derived from the initial image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedParams {
    /// Perona–Malik: `λ_rel ‖∇u⁰_σ‖∞`; edge-enhancing: `λ_rel ‖c⁰‖∞`.
    pub lambda: f64,
    /// `B_rel ‖c⁰‖∞` (coherence-enhancing only, otherwise 0).
    pub b: f64,
    pub gradient_max: f64,
    /// `‖c⁰‖∞`, computed for the anisotropic filters only.
    pub coherence_max: Option<f64>,
}

impl AdaptedParams {
    pub fn kappa_params(&self, config: &FilterConfig) -> Option<KappaParams> {
        let cmax = self.coherence_max?;
        match config.kind {
            FilterKind::EdgeEnhancing => {
                Some(KappaParams::EdgeEnhancing { lambda: self.lambda, coherence_floor: COHERENCE_FLOOR_REL * cmax })
            }
            FilterKind::CoherenceEnhancing => Some(KappaParams::CoherenceEnhancing { alpha: config.alpha, b: self.b }),
            _ => None,
        }
    }
}

/// Channel mean of the squared gradient norms, per point.
fn gradient_sq(grad: &SurfaceField) -> Vec<f64> {
    let k = grad.channels() / 3;
    (0..grad.len())
        .into_par_iter()
        .map(|i| {
            let mut terms: Vec<f64> = grad.point(i).iter().map(|g| g * g).collect();
            order_free_sum(&mut terms) / k as f64
        })
        .collect()
}

/// `‖∇u⁰_σ‖∞` and `‖c⁰‖∞` and the resulting absolute thresholds.
pub fn adapt_parameters(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<AdaptedParams, FilterError> {
    adapt_with_structure(u0, config, domain).map(|(p, _)| p)
}

fn adapt_with_structure(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<(AdaptedParams, Option<(TensorField, Vec<Eigen2>)>), FilterError> {
    config.validate()?;
    let u_sigma = heat_smooth(u0, config.sigma, domain, config.tau_factor);
    let gradient_max = gradient_sq(&surface_gradient(&u_sigma, domain)).into_iter().fold(0.0, f64::max).sqrt();
    if !(gradient_max >= CONSTANT_GRADIENT_EPS) {
        return Err(FilterError::ConstantInput(gradient_max));
    }
    if !config.kind.is_anisotropic() {
        let lambda = if config.kind == FilterKind::PeronaMalik { config.lambda_rel * gradient_max } else { 0.0 };
        return Ok((AdaptedParams { lambda, b: 0.0, gradient_max, coherence_max: None }, None));
    }
    let j = build_structure_tensor(u0, config.sigma, config.rho, domain, config.tau_factor);
    let eigen = contract_and_decompose(&j, domain.bases());
    let cmax = eigen.iter().map(Eigen2::coherence).fold(0.0, f64::max);
    let (lambda, b) = match config.kind {
        FilterKind::EdgeEnhancing => (config.lambda_rel * cmax, 0.0),
        _ => (0.0, config.b_rel * cmax),
    };
    Ok((AdaptedParams { lambda, b, gradient_max, coherence_max: Some(cmax) }, Some((j, eigen))))
}

/// Scalar summary of the state after a step (`step = 0` is the input).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Max coherence of the tensor used in this step; NaN when none was built.
    pub max_coherence: f64,
}

impl StepDiagnostics {
    fn of(step: usize, time: f64, v: &SurfaceField, max_coherence: f64) -> Self {
        Self { step, time, min: v.min(), max: v.max(), mean: v.mean(), max_coherence }
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub field: SurfaceField,
    pub iterations: usize,
    pub tau: f64,
    pub params: Option<AdaptedParams>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Runs the filter selected by `config.kind`.
pub fn run_filter(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<FilterOutput, FilterError> {
    match config.kind {
        FilterKind::Gaussian => run_gaussian(u0, config, domain),
        FilterKind::PeronaMalik => run_perona_malik(u0, config, domain),
        FilterKind::EdgeEnhancing | FilterKind::CoherenceEnhancing => run_anisotropic(u0, config, domain),
    }
}

/// `w = v + τ·update`, `v ← E w`; fails on a non-finite result.
fn advance(
    v: &mut SurfaceField,
    update: &SurfaceField,
    tau: f64,
    domain: &SurfaceDomain,
    step: usize,
) -> Result<(), FilterError> {
    let w = v.axpby(1.0, update, tau);
    domain.extension().apply_into(&w, v);
    if v.all_finite() {
        Ok(())
    } else {
        Err(FilterError::NonFiniteState { step })
    }
}

/// Linear diffusion `∂t u = Δ_S u` until `stop_time`.
pub fn run_gaussian(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<FilterOutput, FilterError> {
    config.validate()?;
    let (n, tau) = config.schedule(domain.h());
    let mut v = u0.clone();
    let mut diagnostics = vec![StepDiagnostics::of(0, 0.0, &v, f64::NAN)];
    for step in 1..=n {
        let lap = domain.laplacian().apply(&v);
        advance(&mut v, &lap, tau, domain, step)?;
        diagnostics.push(StepDiagnostics::of(step, step as f64 * tau, &v, f64::NAN));
    }
    Ok(FilterOutput { field: v, iterations: n, tau, params: None, diagnostics })
}

/// Perona–Malik diffusion with `G = g(|∇_S u_σ|²) I`.
pub fn run_perona_malik(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<FilterOutput, FilterError> {
    let params = adapt_parameters(u0, config, domain)?;
    let (n, tau) = config.schedule(domain.h());
    let mut v = u0.clone();
    let mut diagnostics = vec![StepDiagnostics::of(0, 0.0, &v, f64::NAN)];
    for step in 1..=n {
        let u_sigma = heat_smooth(&v, config.sigma, domain, config.tau_factor);
        let g: Vec<f64> = gradient_sq(&surface_gradient(&u_sigma, domain))
            .into_iter()
            .map(|s2| perona_malik(s2, params.lambda))
            .collect();
        let div = isotropic_divergence(&g, &v, domain.topology());
        advance(&mut v, &div, tau, domain, step)?;
        diagnostics.push(StepDiagnostics::of(step, step as f64 * tau, &v, f64::NAN));
    }
    Ok(FilterOutput { field: v, iterations: n, tau, params: Some(params), diagnostics })
}

/// Edge- or coherence-enhancing diffusion `∂t u = div_S(G[u] ∇_S u)`.
pub fn run_anisotropic(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<FilterOutput, FilterError> {
    let (params, initial) = adapt_with_structure(u0, config, domain)?;
    let kappa = params.kappa_params(config).expect("anisotropic filter kind");
    let (n, tau) = config.schedule(domain.h());
    let mut v = u0.clone();
    let mut diagnostics = vec![StepDiagnostics::of(0, 0.0, &v, params.coherence_max.unwrap_or(f64::NAN))];
    let mut initial = initial.map(|(j, _)| j);
    let mut tensor: Option<DiffusionTensor> = None;
    for step in 1..=n {
        if (step - 1) % config.g_refresh == 0 || tensor.is_none() {
            let j = match initial.take() {
                Some(j) => j,
                None => build_structure_tensor(&v, config.sigma, config.rho, domain, config.tau_factor),
            };
            tensor = Some(diffusion_tensor_from_structure(&j, &kappa, domain.bases()));
        }
        let g = tensor.as_ref().expect("tensor built above");
        let div = anisotropic_divergence(&g.g, &v, domain.topology());
        let cmax = g.eigen.iter().map(Eigen2::coherence).fold(0.0, f64::max);
        advance(&mut v, &div, tau, domain, step)?;
        diagnostics.push(StepDiagnostics::of(step, step as f64 * tau, &v, cmax));
    }
    Ok(FilterOutput { field: v, iterations: n, tau, params: Some(params), diagnostics })
}

/// Diffusion tensor of the initial state with the thresholds adapted to it.
pub fn initial_diffusion_tensor(
    u0: &SurfaceField,
    config: &FilterConfig,
    domain: &SurfaceDomain,
) -> Result<(AdaptedParams, DiffusionTensor), FilterError> {
    if !config.kind.is_anisotropic() {
        return Err(FilterError::InvalidConfig { field: "kind", reason: "needs an anisotropic filter".to_string() });
    }
    let (params, initial) = adapt_with_structure(u0, config, domain)?;
    let kappa = params.kappa_params(config).expect("anisotropic filter kind");
    let (j, _) = initial.expect("anisotropic filter kind");
    Ok((params, diffusion_tensor_from_structure(&j, &kappa, domain.bases())))
}
