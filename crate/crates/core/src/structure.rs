//! Surface-intrinsic structure tensor and diffusion tensor construction.
//!
//! The diffusion tensor is built from the state in these stages:
//!
//! 1. tangent bases `Q` per band point (precomputed by [`SurfaceDomain`]),
//! 2. pre-smoothing `u_σ` by a surface heat solve until time σ,
//! 3. `J₀ = ∇_S u_σ ∇_S u_σᵀ` (averaged over channels),
//! 4. component-wise heat solves of `J₀` until time ρ,
//! 5. contraction `J̃ = Qᵀ J Q` to the tangent plane,
//! 6. closed-form 2×2 eigen decomposition,
//! 7. eigenvalue replacement `(μ1, μ2) → (κ1, κ2)`,
//! 8. expansion `G = Q G̃ Qᵀ`.
//!
//! Because `Q` is evaluated at the closest point of every band point and `J`
//! is a closest point extension, the resulting `G` is itself an extension and
//! maps into the tangent plane exactly up to round-off.

use rayon::prelude::*;

use crate::domain::SurfaceDomain;
use crate::geometry::{TangentBasis, Vec3};
use crate::ops::{central_gradient, SurfaceField, TensorField, XX, XY, XZ, YY, YZ, ZZ};

/// Default explicit time step factor, `τ = 0.15 h²`.
pub const DEFAULT_TAU_FACTOR: f64 = 0.15;

/// Number of explicit steps needed to reach time `t` with steps no longer than `tau`.
pub fn step_count(t: f64, tau: f64) -> usize {
    if t <= 0.0 {
        return 0;
    }
    // the slack absorbs round-off when t is an exact multiple of tau
    ((t / tau) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Surface heat solve `∂τ w = Δ_S w` until time `t`.
///
/// Runs `n = ceil(t / τ_nominal)` Ruuth–Merriman steps (evolve with `L`, extend
/// with `E`) with the step shortened to `t / n`, so the final time is exactly `t`.
/// All channels are smoothed independently. `t = 0` returns `v` unchanged.
pub fn heat_smooth(v: &SurfaceField, t: f64, domain: &SurfaceDomain, tau_factor: f64) -> SurfaceField {
    let h = domain.h();
    let n = step_count(t, tau_factor * h * h);
    if n == 0 {
        return v.clone();
    }
    let tau = t / n as f64;
    let mut state = v.clone();
    let mut lap = SurfaceField::zeros(v.len(), v.channels());
    for _ in 0..n {
        domain.laplacian().apply_into(&state, &mut lap);
        for (s, l) in state.values_mut().iter_mut().zip(lap.values()) {
            *s += tau * l;
        }
        domain.extension().apply_into(&state, &mut lap);
        std::mem::swap(&mut state, &mut lap);
    }
    state
}

/// Surface gradient of an extension: central differences, then one extension.
///
/// The output has `3·k` channels, `(∂x, ∂y, ∂z)` per input channel.
pub fn surface_gradient(v: &SurfaceField, domain: &SurfaceDomain) -> SurfaceField {
    domain.extension().apply(&central_gradient(v, domain.topology()))
}

/// Sum whose result does not depend on the order of `terms` (they get sorted),
/// so permuting image channels permutes filter outputs bit for bit.
pub fn order_free_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

/// Channel-averaged outer products of a `3·k`-channel gradient field.
pub fn gradient_outer_products(grad: &SurfaceField) -> TensorField {
    let k = grad.channels() / 3;
    let mut j0 = SurfaceField::from_fn(grad.len(), 6, |i| {
        let g = grad.point(i);
        let mut terms = vec![0.0; k];
        let mut t = [0.0; 6];
        for (comp, a, b) in [(XX, 0, 0), (XY, 0, 1), (XZ, 0, 2), (YY, 1, 1), (YZ, 1, 2), (ZZ, 2, 2)] {
            for (c, term) in terms.iter_mut().enumerate() {
                *term = g[3 * c + a] * g[3 * c + b];
            }
            t[comp] = order_free_sum(&mut terms) / k as f64;
        }
        t.to_vec()
    });
    j0.extended = grad.extended;
    TensorField::new(j0)
}

/// `J_{σ,ρ}` of a (possibly multi-channel) image.
///
/// Heat smoothing is linear, so averaging the channel tensors before the
/// ρ-solve equals the mean of the per-channel structure tensors.
pub fn build_structure_tensor(
    u: &SurfaceField,
    sigma: f64,
    rho: f64,
    domain: &SurfaceDomain,
    tau_factor: f64,
) -> TensorField {
    let u_sigma = heat_smooth(u, sigma, domain, tau_factor);
    let grad = surface_gradient(&u_sigma, domain);
    let j0 = gradient_outer_products(&grad);
    TensorField::new(heat_smooth(j0.as_field(), rho, domain, tau_factor))
}

/// Spectral decomposition of a symmetric 2×2 tensor, `μ1 ≥ μ2`.
///
/// `omega` is the eigenvector of `μ2` (the edge direction) and
/// `omega_perp` the eigenvector of `μ1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub mu1: f64,
    pub mu2: f64,
    pub omega_perp: [f64; 2],
    pub omega: [f64; 2],
}

impl Eigen2 {
    /// `c = μ1 − μ2` after clamping negative round-off eigenvalues to zero.
    pub fn coherence(&self) -> f64 {
        self.mu1.max(0.0) - self.mu2.max(0.0)
    }

    /// `[[a, b], [b, d]]` rebuilt from the decomposition.
    pub fn reconstruct(&self) -> [f64; 3] {
        let (p, w) = (self.omega_perp, self.omega);
        [
            self.mu1 * p[0] * p[0] + self.mu2 * w[0] * w[0],
            self.mu1 * p[0] * p[1] + self.mu2 * w[0] * w[1],
            self.mu1 * p[1] * p[1] + self.mu2 * w[1] * w[1],
        ]
    }
}

/// Closed-form eigen decomposition of `[[a, b], [b, d]]`.
pub fn eigen_sym2(a: f64, b: f64, d: f64) -> Eigen2 {
    let half_diff = 0.5 * (a - d);
    let mean = 0.5 * (a + d);
    let r = half_diff.hypot(b);
    let (mu1, mu2) = (mean + r, mean - r);
    // eigenvector of mu1 from the better conditioned row of (A - mu2 I)
    let v = if r == 0.0 {
        [1.0, 0.0]
    } else if half_diff >= 0.0 {
        [r + half_diff, b]
    } else {
        [b, r - half_diff]
    };
    let len = v[0].hypot(v[1]);
    let omega_perp = [v[0] / len, v[1] / len];
    Eigen2 { mu1, mu2, omega_perp, omega: [-omega_perp[1], omega_perp[0]] }
}

/// `Qᵀ J Q` as `(a, b, d)`.
pub fn contract(j: &[f64; 6], q: &TangentBasis) -> [f64; 3] {
    let apply = |v: &Vec3| {
        Vec3::new(
            j[XX] * v.x + j[XY] * v.y + j[XZ] * v.z,
            j[XY] * v.x + j[YY] * v.y + j[YZ] * v.z,
            j[XZ] * v.x + j[YZ] * v.y + j[ZZ] * v.z,
        )
    };
    let (j1, j2) = (apply(&q.q1), apply(&q.q2));
    [q.q1.dot(&j1), q.q1.dot(&j2), q.q2.dot(&j2)]
}

pub fn contract_and_decompose(j: &TensorField, bases: &[TangentBasis]) -> Vec<Eigen2> {
    assert_eq!(j.len(), bases.len());
    (0..j.len())
        .into_par_iter()
        .map(|i| {
            let [a, b, d] = contract(&j.components(i), &bases[i]);
            eigen_sym2(a, b, d)
        })
        .collect()
}

/// Perona–Malik diffusivity `g(s²) = 1 / (1 + s²/λ²)`, taking `s²` directly.
pub fn perona_malik(s2: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + s2 / (lambda * lambda))
}

/// Edge-enhancing eigenvalues: `κ1 = g` evaluated at `s = c`, `κ2 = 1`.
pub fn kappa_edge_enhancing(mu1: f64, mu2: f64, lambda: f64) -> (f64, f64) {
    let c = mu1.max(0.0) - mu2.max(0.0);
    (perona_malik(c * c, lambda), 1.0)
}

/// Coherence-enhancing eigenvalues: `κ1 = α`, `κ2 = α + (1 − α) exp(−B²/c²)`.
pub fn kappa_coherence_enhancing(mu1: f64, mu2: f64, alpha: f64, b: f64) -> (f64, f64) {
    let c = mu1.max(0.0) - mu2.max(0.0);
    let k2 = if c > 0.0 { alpha + (1.0 - alpha) * (-(b * b) / (c * c)).exp() } else { alpha };
    (alpha, k2)
}

/// Absolute parameters of the eigenvalue replacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaParams {
    /// Below `coherence_floor` the orientation is unreliable and `G` becomes
    /// the tangential projector.
    EdgeEnhancing {
        lambda: f64,
        coherence_floor: f64,
    },
    CoherenceEnhancing {
        alpha: f64,
        b: f64,
    },
}

impl KappaParams {
    pub fn kappa(&self, e: &Eigen2) -> (f64, f64) {
        match *self {
            KappaParams::EdgeEnhancing { lambda, coherence_floor } => {
                if e.coherence() < coherence_floor {
                    (1.0, 1.0)
                } else {
                    kappa_edge_enhancing(e.mu1, e.mu2, lambda)
                }
            }
            KappaParams::CoherenceEnhancing { alpha, b } => kappa_coherence_enhancing(e.mu1, e.mu2, alpha, b),
        }
    }
}

/// Diffusion tensor field with the per-point quantities it was built from.
#[derive(Debug, Clone)]
pub struct DiffusionTensor {
    pub g: TensorField,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub eigen: Vec<Eigen2>,
}

impl DiffusionTensor {
    pub fn coherence(&self) -> Vec<f64> {
        self.eigen.iter().map(Eigen2::coherence).collect()
    }
}

/// `G = Q (κ1 ω̃⊥ω̃⊥ᵀ + κ2 ω̃ω̃ᵀ) Qᵀ` from a structure tensor field.
pub fn diffusion_tensor_from_structure(
    j: &TensorField,
    params: &KappaParams,
    bases: &[TangentBasis],
) -> DiffusionTensor {
    let eigen = contract_and_decompose(j, bases);
    let per_point: Vec<([f64; 6], f64, f64)> = eigen
        .par_iter()
        .zip(bases.par_iter())
        .map(|(e, q)| {
            let (k1, k2) = params.kappa(e);
            let perp = q.q1 * e.omega_perp[0] + q.q2 * e.omega_perp[1];
            let along = q.q1 * e.omega[0] + q.q2 * e.omega[1];
            let m = perp * perp.transpose() * k1 + along * along.transpose() * k2;
            ([m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)]], k1, k2)
        })
        .collect();
    let g = SurfaceField::new(per_point.iter().flat_map(|p| p.0).collect(), 6).extended(true);
    DiffusionTensor {
        g: TensorField::new(g),
        kappa1: per_point.iter().map(|p| p.1).collect(),
        kappa2: per_point.iter().map(|p| p.2).collect(),
        eigen,
    }
}

/// Full construction of `G[u]` from the current state.
pub fn build_diffusion_tensor(
    u: &SurfaceField,
    params: &KappaParams,
    sigma: f64,
    rho: f64,
    domain: &SurfaceDomain,
    tau_factor: f64,
) -> DiffusionTensor {
    let j = build_structure_tensor(u, sigma, rho, domain, tau_factor);
    diffusion_tensor_from_structure(&j, params, domain.bases())
}
