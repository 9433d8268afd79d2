use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::band::GridSpec;
use crate::domain::SurfaceDomain;
use crate::geometry::{PlanePatch, Surface, Vec3};

fn sphere_domain(h: f64) -> SurfaceDomain {
    SurfaceDomain::fitted(Surface::Sphere { radius: 1.0 }, h).unwrap()
}

fn grid_field(d: &SurfaceDomain, f: impl Fn(&Vec3) -> f64 + Sync) -> SurfaceField {
    SurfaceField::from_fn(d.len(), 1, |i| vec![f(&d.band().position(i))])
}

fn random_field(n: usize, k: usize, seed: u64) -> SurfaceField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SurfaceField::new((0..n * k).map(|_| rng.gen::<f64>()).collect(), k)
}

#[test]
fn cubic_weights_partition_and_nodes() {
    for s in [0.0, 0.25, 0.5, 0.9] {
        let w = cubic_weights(s);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }
    assert_eq!(cubic_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn laplacian_annihilates_constants_and_is_exact_on_quadratics() {
    let d = sphere_domain(0.1);
    let lap = d.laplacian();
    let c = SurfaceField::constant(d.len(), &[3.7]);
    let lc = lap.apply(&c);
    assert!(lc.values().iter().all(|&v| v.abs() < 1e-10));
    for i in 0..d.len() {
        if d.topology().is_interior(i) {
            assert!(lap.row_sum(i).abs() < 1e-12 * 6.0 / (0.1 * 0.1));
            assert_eq!(lap.row(i).count(), 7);
        }
    }
    let q = grid_field(&d, |p| p.x * p.x);
    let lq = lap.apply(&q);
    for i in (0..d.len()).filter(|&i| d.topology().is_interior(i)) {
        assert_relative_eq!(lq.get(i, 0), 2.0, epsilon = 1e-9);
    }
}

#[test]
fn laplacian_of_extension_approximates_laplace_beltrami() {
    // Δ_S z = -2 z on the unit sphere
    let mut errs = Vec::new();
    for h in [0.1, 0.05] {
        let d = sphere_domain(h);
        let v = d.extend_fn(1, |cp| vec![cp.position.z]);
        let lv = d.extension().apply(&d.laplacian().apply(&v));
        let err =
            (0..d.len()).map(|i| (lv.get(i, 0) + 2.0 * d.closest_points()[i].position.z).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[0] < 0.05, "{errs:?}");
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
}

#[test]
fn extension_reproduces_cubics_and_constants() {
    let d = sphere_domain(0.1);
    let w = grid_field(&d, |p| p.x.powi(3) + 2.0 * p.y * p.y * p.z - p.z);
    let ew = d.extension().apply(&w);
    for (i, cp) in d.closest_points().iter().enumerate() {
        let p = cp.position;
        let exact = p.x.powi(3) + 2.0 * p.y * p.y * p.z - p.z;
        assert!((ew.get(i, 0) - exact).abs() < 1e-12, "{} vs {exact}", ew.get(i, 0));
        let row_sum: f64 = d.extension().row(i).iter().map(|e| e.1).sum();
        assert!((row_sum - 1.0).abs() < 1e-12);
    }
    let c = SurfaceField::constant(d.len(), &[0.25, -4.0]);
    let ec = d.extension().apply(&c);
    for i in 0..d.len() {
        assert!((ec.get(i, 0) - 0.25).abs() < 1e-14);
        assert!((ec.get(i, 1) + 4.0).abs() < 1e-13);
    }
}

#[test]
fn extension_compact_form_matches_sparse_rows() {
    let d = sphere_domain(0.15);
    let w = random_field(d.len(), 3, 1);
    let a = d.extension().apply(&w);
    let b = d.extension().to_sparse().apply(&w);
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-13);
    }
    let w5 = random_field(d.len(), 5, 2);
    let a = d.extension().apply(&w5);
    let b = d.extension().to_sparse().apply(&w5);
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-13);
    }
}

/// `max |E(Ew) - Ew|` for a smooth function on the unit sphere.
fn idempotence_defect(h: f64) -> f64 {
    let d = sphere_domain(h);
    let w = grid_field(&d, |p| (2.0 * p.x).sin() * p.y + p.z * p.z);
    let ew = d.extension().apply(&w);
    let eew = d.extension().apply(&ew);
    ew.values().iter().zip(eew.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn extension_is_idempotent_up_to_interpolation_error() {
    // The defect is the tri-cubic interpolation error of an extension field,
    // measured at 2.5e-4 (h = 0.1) and 1.7e-5 (h = 0.05), i.e. O(h⁴).
    let coarse = idempotence_defect(0.1);
    let fine = idempotence_defect(0.05);
    assert!(fine < 3e-5, "defect {fine}");
    assert!((coarse / fine).log2() > 3.0, "observed order {}", (coarse / fine).log2());
}

#[test]
fn axis_differences_on_polynomials() {
    let d = sphere_domain(0.1);
    let topo = d.topology();
    let x = grid_field(&d, |p| p.x);
    let x2 = grid_field(&d, |p| p.x * p.x);
    let c = SurfaceField::constant(d.len(), &[2.0]);
    for i in (0..d.len()).filter(|&i| topo.is_interior(i)) {
        for variant in [DiffVariant::Forward, DiffVariant::Backward, DiffVariant::Central] {
            assert_relative_eq!(axis_diff(&x, topo, 0, variant).get(i, 0), 1.0, epsilon = 1e-12);
            assert_eq!(axis_diff(&c, topo, 1, variant).get(i, 0), 0.0);
        }
        let px = d.band().position(i).x;
        assert_relative_eq!(axis_diff(&x2, topo, 0, DiffVariant::Central).get(i, 0), 2.0 * px, epsilon = 1e-12);
        assert_eq!(axis_avg_forward(&c, topo, 2).get(i, 0), 2.0);
    }
}

#[test]
fn anisotropic_with_identity_equals_laplacian() {
    let d = sphere_domain(0.1);
    let v = random_field(d.len(), 1, 7);
    let g = TensorField::isotropic(&vec![1.0; d.len()]);
    let a = anisotropic_divergence(&g, &v, d.topology());
    let l = d.laplacian().apply(&v);
    for (x, y) in a.values().iter().zip(l.values()) {
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
}

/// Isotropic flux-form scheme written directly on grid coordinates.
fn isotropic_oracle(d: &SurfaceDomain, g: &[f64], v: &[f64]) -> Vec<f64> {
    let band = d.band();
    let h2 = d.h() * d.h();
    (0..d.len())
        .map(|i| {
            if !d.topology().is_interior(i) {
                return 0.0;
            }
            let c = band.points()[i];
            let mut sum = 0.0;
            for axis in 0..3 {
                let mut up = c;
                up[axis] += 1;
                let mut dn = c;
                dn[axis] -= 1;
                let (p, m) = (band.index_of(up).unwrap(), band.index_of(dn).unwrap());
                let flux_up = (g[i] + g[p]) / 2.0 * (v[p] - v[i]);
                let flux_dn = (g[i] + g[m]) / 2.0 * (v[i] - v[m]);
                sum += (flux_up - flux_dn) / h2;
            }
            sum
        })
        .collect()
}

#[test]
fn anisotropic_with_scalar_diffusivity_matches_isotropic_oracle() {
    let d = sphere_domain(0.1);
    let v = random_field(d.len(), 1, 8);
    let g: Vec<f64> = random_field(d.len(), 1, 9).into_values();
    let oracle = isotropic_oracle(&d, &g, v.values());
    let aniso = anisotropic_divergence(&TensorField::isotropic(&g), &v, d.topology());
    let iso = isotropic_divergence(&g, &v, d.topology());
    for i in 0..d.len() {
        let tol = 1e-12 * oracle[i].abs().max(1.0);
        assert!((aniso.get(i, 0) - oracle[i]).abs() <= tol);
        assert!((iso.get(i, 0) - oracle[i]).abs() <= tol);
    }
}

#[test]
fn anisotropic_kills_constants_and_is_linear() {
    let d = sphere_domain(0.1);
    let g = TensorField::new(random_field(d.len(), 6, 10));
    let c = SurfaceField::constant(d.len(), &[0.4]);
    assert!(anisotropic_divergence(&g, &c, d.topology()).values().iter().all(|&x| x == 0.0));

    let u = random_field(d.len(), 1, 11);
    let w = random_field(d.len(), 1, 12);
    let lhs = anisotropic_divergence(&g, &u.axpby(2.0, &w, -0.5), d.topology());
    let rhs =
        anisotropic_divergence(&g, &u, d.topology()).axpby(2.0, &anisotropic_divergence(&g, &w, d.topology()), -0.5);
    for (a, b) in lhs.values().iter().zip(rhs.values()) {
        assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
    }
}

#[test]
fn anisotropic_channels_share_tensor() {
    let d = sphere_domain(0.15);
    let g = TensorField::new(random_field(d.len(), 6, 13));
    let v = random_field(d.len(), 3, 14);
    let all = anisotropic_divergence(&g, &v, d.topology());
    for c in 0..3 {
        let single = anisotropic_divergence(&g, &v.select(&[c]), d.topology());
        assert_eq!(all.channel(c), single.channel(0));
    }
}

/// Truncation error of the nine-term stencil against an analytic `div(G ∇v)`.
fn manufactured_error(h: f64) -> f64 {
    let d = sphere_domain(h);
    let wv = Vec3::new(0.7, -0.4, 0.5);
    let pv = Vec3::new(1.1, 0.6, -0.9);
    let m = nalgebra::Matrix3::new(0.3, 0.1, -0.2, 0.1, 0.25, 0.05, -0.2, 0.05, 0.2);
    let gmat = |x: &Vec3| nalgebra::Matrix3::identity() * 2.0 + m * x.dot(&wv).sin();
    let g = TensorField::new(SurfaceField::from_fn(d.len(), 6, |i| {
        let t = gmat(&d.band().position(i));
        vec![t[(0, 0)], t[(0, 1)], t[(0, 2)], t[(1, 1)], t[(1, 2)], t[(2, 2)]]
    }));
    let v = grid_field(&d, |x| x.dot(&pv).sin());
    let exact = |x: &Vec3| {
        let (s, c) = (x.dot(&pv).sin(), x.dot(&pv).cos());
        let cw = x.dot(&wv).cos();
        let gx = gmat(x);
        let mut sum = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                sum += m[(a, b)] * wv[a] * cw * pv[b] * c - gx[(a, b)] * pv[a] * pv[b] * s;
            }
        }
        sum
    };
    let approx = anisotropic_divergence(&g, &v, d.topology());
    (0..d.len())
        .filter(|&i| d.topology().is_interior(i))
        .map(|i| (approx.get(i, 0) - exact(&d.band().position(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn anisotropic_stencil_is_second_order() {
    let coarse = manufactured_error(0.1);
    let fine = manufactured_error(0.05);
    let order = (coarse / fine).log2();
    assert!(order >= 1.8, "observed order {order} ({coarse} -> {fine})");
}

#[test]
fn footprint_escape_detected_for_thin_band() {
    let plane = Surface::Plane(PlanePatch::new([-0.5, -0.5], [0.5, 0.5], 0.0));
    let spec = GridSpec::cube(-1.0, 1.0, 0.1).unwrap();
    let err = SurfaceDomain::with_radius(plane, spec, 0.15).unwrap_err();
    assert!(matches!(err, crate::Error::Operator(OperatorError::FootprintEscapesBand { .. })), "{err}");
}

#[test]
fn interpolate_at_matches_extension_row() {
    let d = sphere_domain(0.1);
    let w = random_field(d.len(), 2, 15);
    let ew = d.extension().apply(&w);
    for i in (0..d.len()).step_by(97) {
        let p = d.closest_points()[i].position;
        let direct = interpolate_at(d.band(), &w, &p).unwrap();
        assert!((direct[0] - ew.get(i, 0)).abs() < 1e-13);
        assert!((direct[1] - ew.get(i, 1)).abs() < 1e-13);
    }
}
