use nalgebra::{Matrix3, SymmetricEigen};

use super::{ClosestPoint, GeometryError, Vec3};

/// Orthonormal pair spanning the tangent plane, the columns of `Q = [q1 | q2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBasis {
    pub q1: Vec3,
    pub q2: Vec3,
}

impl TangentBasis {
    /// `Q Qᵀ`, the orthogonal projector onto the tangent plane.
    pub fn projector(&self) -> Matrix3<f64> {
        self.q1 * self.q1.transpose() + self.q2 * self.q2.transpose()
    }

    pub fn normal(&self) -> Vec3 {
        self.q1.cross(&self.q2)
    }
}

const UNIT_TOL: f64 = 1e-8;

/// Tangent basis from a single Householder reflection of the normal.
///
/// The reflector `H = I - 2 v vᵀ / vᵀv` with `v = n ± e1` maps `n` to `∓e1`;
/// its second and third columns are orthogonal to `n`.
pub fn tangent_basis_householder(n: &Vec3) -> Result<TangentBasis, GeometryError> {
    let len = n.norm();
    if (len - 1.0).abs() > UNIT_TOL {
        return Err(GeometryError::NotUnit(len));
    }
    let sign = if n.x >= 0.0 { 1.0 } else { -1.0 };
    let v = Vec3::new(n.x + sign, n.y, n.z);
    let scale = 2.0 / v.norm_squared();
    let q1 = Vec3::y() - v * (scale * v.y);
    let q2 = Vec3::z() - v * (scale * v.z);
    Ok(TangentBasis { q1, q2 })
}

/// Tangent basis from the eigenvectors of the closest point Jacobian at a surface point.
///
/// On the surface `Dcp = I - n nᵀ`; the Jacobian is formed with second order
/// central differences of step `h_fd`, symmetrized, and decomposed. The two
/// eigenvectors with eigenvalues near one span the tangent plane.
pub fn tangent_basis_from_cp_jacobian<S: ClosestPoint + ?Sized>(
    surface: &S,
    x: &Vec3,
    h_fd: f64,
) -> Result<TangentBasis, GeometryError> {
    let mut jac = Matrix3::zeros();
    for axis in 0..3 {
        let mut e = Vec3::zeros();
        e[axis] = h_fd;
        let fwd = surface.closest_point(&(x + e))?.position;
        let bwd = surface.closest_point(&(x - e))?.position;
        jac.set_column(axis, &((fwd - bwd) / (2.0 * h_fd)));
    }
    let sym = (jac + jac.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i]);
    if vals[0].abs() > 0.2 || (vals[1] - 1.0).abs() > 0.2 || (vals[2] - 1.0).abs() > 0.2 {
        return Err(GeometryError::IllConditioned(vals));
    }
    let q1: Vec3 = eig.eigenvectors.column(idx[1]).normalize();
    let q2: Vec3 = eig.eigenvectors.column(idx[2]).normalize();
    Ok(TangentBasis { q1, q2 })
}
