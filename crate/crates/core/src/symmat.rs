//! Symmetric 3×3 linear algebra and the Pucci extremal operators.
//!
//! Eigenvalues use the trigonometric closed form for a depressed cubic, with
//! cyclic Jacobi as the fallback whenever two eigenvalues nearly coincide and
//! the `acos` argument loses precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold (relative to `max(1, ‖M‖)`) below which an eigenvalue counts as zero.
pub const SIGN_THRESHOLD: f64 = 1e-12;

const DEGENERACY_GUARD: f64 = 1e3 * f64::EPSILON;

/// A dense 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    pub const IDENTITY: Matrix3 = Matrix3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn transpose(&self) -> Matrix3 {
        let m = &self.0;
        Matrix3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul(&self, other: &Matrix3) -> Matrix3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Matrix3(out)
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Inverse via the adjugate. Fails when the determinant is negligible
    /// relative to the cube of the largest entry.
    pub fn inverse(&self) -> Result<Matrix3> {
        if self.0.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let det = self.det();
        let scale = self.max_abs();
        if scale == 0.0 || det.abs() <= 1e-14 * scale.powi(3) {
            return Err(Error::SingularMatrix { det });
        }
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = adj[i][j] / det;
            }
        }
        Ok(Matrix3(out))
    }
}

/// Symmetric 3×3 matrix stored by its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMatrix3 {
    pub m11: f64,
    pub m22: f64,
    pub m33: f64,
    pub m12: f64,
    pub m13: f64,
    pub m23: f64,
}

impl SymMatrix3 {
    pub const fn new(m11: f64, m22: f64, m33: f64, m12: f64, m13: f64, m23: f64) -> Self {
        SymMatrix3 { m11, m22, m33, m12, m13, m23 }
    }

    pub const fn diag(d1: f64, d2: f64, d3: f64) -> Self {
        SymMatrix3::new(d1, d2, d3, 0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        SymMatrix3::diag(1.0, 1.0, 1.0)
    }

    /// Builds from a full matrix, averaging the off-diagonal pairs.
    pub fn from_matrix(m: &Matrix3) -> Self {
        let a = &m.0;
        SymMatrix3::new(
            a[0][0],
            a[1][1],
            a[2][2],
            0.5 * (a[0][1] + a[1][0]),
            0.5 * (a[0][2] + a[2][0]),
            0.5 * (a[1][2] + a[2][1]),
        )
    }

    pub fn to_matrix(&self) -> Matrix3 {
        Matrix3([
            [self.m11, self.m12, self.m13],
            [self.m12, self.m22, self.m23],
            [self.m13, self.m23, self.m33],
        ])
    }

    /// `[m11, m22, m33, m12, m13, m23]`
    pub fn to_array(&self) -> [f64; 6] {
        [self.m11, self.m22, self.m33, self.m12, self.m13, self.m23]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        SymMatrix3::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22 + self.m33
    }

    pub fn det(&self) -> f64 {
        self.to_matrix().det()
    }

    /// Largest absolute entry.
    pub fn norm(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn scale(&self, t: f64) -> Self {
        let a = self.to_array();
        SymMatrix3::from_array(a.map(|x| x * t))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        self.m12 == 0.0 && self.m13 == 0.0 && self.m23 == 0.0
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Result<[f64; 3]> {
        if !self.is_finite() {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let off = self.m12 * self.m12 + self.m13 * self.m13 + self.m23 * self.m23;
        if off == 0.0 {
            let mut e = [self.m11, self.m22, self.m33];
            e.sort_by(f64::total_cmp);
            return Ok(e);
        }
        let q = self.trace() / 3.0;
        let (d1, d2, d3) = (self.m11 - q, self.m22 - q, self.m33 - q);
        let p2 = d1 * d1 + d2 * d2 + d3 * d3 + 2.0 * off;
        let p = (p2 / 6.0).sqrt();
        let b = SymMatrix3::new(d1 / p, d2 / p, d3 / p, self.m12 / p, self.m13 / p, self.m23 / p);
        let r = b.det() / 2.0;
        if 1.0 - r.abs() <= DEGENERACY_GUARD {
            let (mut e, _) = jacobi(self);
            e.sort_by(f64::total_cmp);
            return Ok(e);
        }
        let phi = r.clamp(-1.0, 1.0).acos() / 3.0;
        let largest = q + 2.0 * p * phi.cos();
        let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let middle = 3.0 * q - largest - smallest;
        let mut e = [smallest, middle, largest];
        e.sort_by(f64::total_cmp);
        Ok(e)
    }

    /// Eigenvalues (nondecreasing) with orthonormal eigenvectors as columns.
    pub fn eigen_decomposition(&self) -> Result<([f64; 3], Matrix3)> {
        if !self.is_finite() {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let (e, v) = jacobi(self);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| e[i].total_cmp(&e[j]));
        let vals = order.map(|i| e[i]);
        let mut vecs = [[0.0; 3]; 3];
        for (col, &src) in order.iter().enumerate() {
            for row in 0..3 {
                vecs[row][col] = v.0[row][src];
            }
        }
        Ok((vals, Matrix3(vecs)))
    }

    /// Signs of the eigenvalues (−1, 0, +1) with the zero threshold used by the Pucci operators.
    pub fn inertia(&self) -> Result<[i8; 3]> {
        let thr = SIGN_THRESHOLD * self.norm().max(1.0);
        Ok(self.eigenvalues()?.map(|e| sign_with_threshold(e, thr)))
    }
}

pub(crate) fn sign_with_threshold(x: f64, thr: f64) -> i8 {
    if x > thr {
        1
    } else if x < -thr {
        -1
    } else {
        0
    }
}

/// Cyclic Jacobi rotations. Returns unsorted eigenvalues and the rotation matrix
/// whose columns are eigenvectors.
fn jacobi(m: &SymMatrix3) -> ([f64; 3], Matrix3) {
    let mut a = m.to_matrix().0;
    let mut v = Matrix3::IDENTITY.0;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= f64::EPSILON * scale * 1e-2 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], Matrix3(v))
}

/// Ellipticity constants `0 < λ ≤ Λ` and their ratio `ω = Λ/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityParams {
    lambda: f64,
    big_lambda: f64,
    omega: f64,
}

impl EllipticityParams {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && big_lambda.is_finite()) || lambda <= 0.0 || big_lambda < lambda {
            return Err(Error::Parameter(format!(
                "need 0 < lambda <= Lambda, got lambda = {lambda}, Lambda = {big_lambda}"
            )));
        }
        Ok(EllipticityParams { lambda, big_lambda, omega: big_lambda / lambda })
    }

    /// `λ = 1`, `Λ = ω`.
    pub fn from_omega(omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega < 1.0 {
            return Err(Error::Parameter(format!("need omega >= 1, got {omega}")));
        }
        Ok(EllipticityParams { lambda: 1.0, big_lambda: omega, omega })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sqrt_omega(&self) -> f64 {
        self.omega.sqrt()
    }
}

fn weighted_eigensum(m: &SymMatrix3, pos_weight: f64, neg_weight: f64) -> Result<f64> {
    let e = m.eigenvalues()?;
    let thr = SIGN_THRESHOLD * m.norm().max(1.0);
    let mut pos = 0.0;
    let mut neg = 0.0;
    for x in e {
        if x > thr {
            pos += x;
        } else if x < -thr {
            neg += x;
        }
    }
    Ok(pos_weight * pos + neg_weight * neg)
}

/// Maximal Pucci operator: `Λ·Σ(e > 0) + λ·Σ(e < 0)`.
pub fn pucci_plus(m: &SymMatrix3, p: &EllipticityParams) -> Result<f64> {
    weighted_eigensum(m, p.big_lambda, p.lambda)
}

/// Minimal Pucci operator: `λ·Σ(e > 0) + Λ·Σ(e < 0)`.
pub fn pucci_minus(m: &SymMatrix3, p: &EllipticityParams) -> Result<f64> {
    weighted_eigensum(m, p.lambda, p.big_lambda)
}

/// `A⁻ᵀ M A⁻¹`, the Hessian of `x ↦ u(A⁻¹x)` given the Hessian `M` of `u`.
pub fn congruence(a: &Matrix3, m: &SymMatrix3) -> Result<SymMatrix3> {
    let inv = a.inverse()?;
    let out = inv.transpose().mul(&m.to_matrix()).mul(&inv);
    Ok(SymMatrix3::from_matrix(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(ax: f64, ay: f64, az: f64) -> Matrix3 {
        let (sx, cx) = ax.sin_cos();
        let (sy, cy) = ay.sin_cos();
        let (sz, cz) = az.sin_cos();
        let rx = Matrix3([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]]);
        let ry = Matrix3([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]]);
        let rz = Matrix3([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]]);
        rz.mul(&ry).mul(&rx)
    }

    /// Roots of det(tI − M) by bisection on the characteristic cubic, bracketed
    /// between Gershgorin bounds and refined around sign changes.
    fn char_poly_roots(m: &SymMatrix3) -> [f64; 3] {
        let c2 = -m.trace();
        let c1 = m.m11 * m.m22 + m.m11 * m.m33 + m.m22 * m.m33
            - m.m12 * m.m12
            - m.m13 * m.m13
            - m.m23 * m.m23;
        let c0 = -m.det();
        let f = |t: f64| ((t + c2) * t + c1) * t + c0;
        let r = 3.0 * m.norm() + 1.0;
        let n = 200_000;
        let mut roots = Vec::new();
        let mut prev = -r;
        for i in 1..=n {
            let t = -r + 2.0 * r * i as f64 / n as f64;
            if f(prev) == 0.0 {
                roots.push(prev);
            } else if f(prev) * f(t) < 0.0 {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(lo) * f(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev = t;
        }
        assert_eq!(roots.len(), 3, "expected three simple roots, got {roots:?}");
        [roots[0], roots[1], roots[2]]
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(SymMatrix3::identity().eigenvalues().unwrap(), [1.0, 1.0, 1.0]);
        assert_eq!(SymMatrix3::diag(3.0, -2.0, 1.0).eigenvalues().unwrap(), [-2.0, 1.0, 3.0]);
    }

    #[test]
    fn rotated_spectrum_matches_characteristic_polynomial() {
        let r = rotation(0.3, -1.1, 2.4);
        let m = SymMatrix3::from_matrix(&r.mul(&SymMatrix3::diag(-2.0, 1.0, 3.0).to_matrix()).mul(&r.transpose()));
        let oracle = char_poly_roots(&m);
        let e = m.eigenvalues().unwrap();
        for i in 0..3 {
            assert!((e[i] - oracle[i]).abs() < 1e-9, "{e:?} vs {oracle:?}");
        }
        for (x, y) in e.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn near_degenerate_uses_fallback_and_stays_accurate() {
        let r = rotation(0.7, 0.2, -0.4);
        let m = SymMatrix3::from_matrix(
            &r.mul(&SymMatrix3::diag(1.0, 1.0 + 1e-13, 5.0).to_matrix()).mul(&r.transpose()),
        );
        let e = m.eigenvalues().unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12 && (e[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = SymMatrix3::diag(f64::NAN, 0.0, 0.0);
        assert!(matches!(m.eigenvalues(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pucci_examples() {
        let p = EllipticityParams::new(1.0, 2.0).unwrap();
        assert_eq!(pucci_plus(&SymMatrix3::diag(-1.0, -1.0, -1.0), &p).unwrap(), -3.0);
        assert_eq!(pucci_plus(&SymMatrix3::diag(1.0, -2.0, 3.0), &p).unwrap(), 6.0);
        assert_eq!(pucci_minus(&SymMatrix3::diag(1.0, -2.0, 3.0), &p).unwrap(), 0.0);
        assert_eq!(pucci_minus(&SymMatrix3::diag(-1.0, -1.0, -1.0), &p).unwrap(), -6.0);
        let c = EllipticityParams::new(2.5, 2.5).unwrap();
        let m = SymMatrix3::new(1.0, -3.0, 0.5, 0.2, -0.7, 1.1);
        assert!((pucci_plus(&m, &c).unwrap() - 2.5 * m.trace()).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(EllipticityParams::new(0.0, 1.0).is_err());
        assert!(EllipticityParams::new(2.0, 1.0).is_err());
        assert!(EllipticityParams::from_omega(0.5).is_err());
        let p = EllipticityParams::new(0.5, 4.5).unwrap();
        assert_eq!(p.omega(), 9.0);
    }

    #[test]
    fn congruence_identity_and_singular() {
        let m = SymMatrix3::new(1.0, 2.0, 3.0, 0.1, 0.2, 0.3);
        assert_eq!(congruence(&Matrix3::IDENTITY, &m).unwrap(), m);
        let sing = Matrix3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(congruence(&sing, &m), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn eigen_decomposition_reconstructs() {
        let m = SymMatrix3::new(1.0, -3.0, 0.5, 0.2, -0.7, 1.1);
        let (e, v) = m.eigen_decomposition().unwrap();
        let d = SymMatrix3::diag(e[0], e[1], e[2]).to_matrix();
        let back = v.mul(&d).mul(&v.transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.0[i][j] - m.to_matrix().0[i][j]).abs() < 1e-13);
            }
        }
        for (a, b) in e.iter().zip(m.eigenvalues().unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
