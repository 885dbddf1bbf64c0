//! The piecewise eigenfunction, its gradient and Hessian, on the reflected
//! domain and under the shear map.
//!
//! On each first-octant patch the field is a sum of one-dimensional profiles
//! `u = Σ c_i φ_i(q_i)` with amplitudes `c = (γ, γ, 1)` and
//!
//! ```text
//! φ(t) = cos t                          (t ≤ α)
//! φ(t) = −√ω · sin((t − α)/√ω)          (t beyond α on that patch)
//! ```
//!
//! so the Hessian is diagonal everywhere off the interfaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Domain, Patch, PatchId, ALPHA};
use crate::symmat::{self, EllipticityParams, SymMatrix3, SIGN_THRESHOLD};

/// Value, gradient, Hessian and inertia of the field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchEval {
    pub patch: PatchId,
    pub value: f64,
    pub gradient: [f64; 3],
    pub hessian: SymMatrix3,
    /// Diagonal Hessian `(u_xx, u_yy, u_zz)` of the unsheared field.
    pub pqr: [f64; 3],
    /// Signs of `pqr` with threshold `1e-12`.
    pub inertia: [i8; 3],
}

/// Which coefficient of the patch formulas a [`Mutation`] perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MutationKind {
    /// `c_axis → c_axis·(1 + δ)`.
    Amplitude,
    /// `1/√ω → (1 + δ)/√ω` inside the sine profile on `axis`.
    SineRate,
    /// Adds `δ·q_axis²` to the field.
    Quadratic,
}

/// A deliberate perturbation of the field, used to check that the
/// verification suites detect wrong formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    /// Restrict to one patch; `None` perturbs every patch.
    pub patch: Option<Patch>,
    pub axis: usize,
    pub kind: MutationKind,
    pub delta: f64,
}

/// The eigenfunction `u^ω_γ` attached to a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenfield {
    pub domain: Domain,
    pub mutation: Option<Mutation>,
}

impl Eigenfield {
    pub fn new(domain: Domain) -> Self {
        Eigenfield { domain, mutation: None }
    }

    pub fn with_mutation(domain: Domain, mutation: Mutation) -> Self {
        Eigenfield { domain, mutation: Some(mutation) }
    }

    fn mutation_for(&self, patch: Patch) -> Option<Mutation> {
        self.mutation.filter(|m| m.patch.is_none_or(|p| p == patch))
    }

    /// Evaluates the closed-form expression of `patch` at the first-octant
    /// point `q` without checking membership.
    pub fn eval_patch(&self, patch: Patch, q: [f64; 3]) -> PatchEval {
        let r = self.domain.ep.sqrt_omega();
        let mut c = self.domain.amplitudes();
        let mut rate = [1.0 / r; 3];
        let m = self.mutation_for(patch);
        if let Some(m) = m {
            match m.kind {
                MutationKind::Amplitude => c[m.axis] *= 1.0 + m.delta,
                MutationKind::SineRate => rate[m.axis] *= 1.0 + m.delta,
                MutationKind::Quadratic => {}
            }
        }
        let beyond = patch.beyond();
        let mut value = 0.0;
        let mut grad = [0.0; 3];
        let mut diag = [0.0; 3];
        for i in 0..3 {
            if beyond[i] {
                let s = (q[i] - ALPHA) * rate[i];
                value -= c[i] * r * s.sin();
                grad[i] = -c[i] * r * rate[i] * s.cos();
                diag[i] = c[i] * r * rate[i] * rate[i] * s.sin();
            } else {
                value += c[i] * q[i].cos();
                grad[i] = -c[i] * q[i].sin();
                diag[i] = -c[i] * q[i].cos();
            }
        }
        if let Some(m) = m.filter(|m| m.kind == MutationKind::Quadratic) {
            value += m.delta * q[m.axis] * q[m.axis];
            grad[m.axis] += 2.0 * m.delta * q[m.axis];
            diag[m.axis] += 2.0 * m.delta;
        }
        PatchEval {
            patch: PatchId { patch, octant: [1; 3] },
            value,
            gradient: grad,
            hessian: SymMatrix3::diag(diag[0], diag[1], diag[2]),
            pqr: diag,
            inertia: signs(diag),
        }
    }

    /// Evaluates at a point of the unsheared domain (any octant).
    pub fn eval(&self, p: [f64; 3]) -> Result<PatchEval> {
        let id = self.domain.classify(p)?.ok_or(Error::Outside { point: p })?;
        let q = p.map(f64::abs);
        let mut e = self.eval_patch(id.patch, q);
        for i in 0..3 {
            e.gradient[i] *= f64::from(id.octant[i]);
        }
        e.patch = id;
        Ok(e)
    }

    /// Evaluates `u_{γ,a}(X) = u(C_a⁻¹ X)` on the sheared domain.
    pub fn eval_sheared(&self, x: [f64; 3]) -> Result<PatchEval> {
        let sp = &self.domain.sp;
        if sp.a() == 0.0 {
            return self.eval(x);
        }
        let inv = sp.shear_inverse();
        let mut e = self.eval(inv.apply(x))?;
        e.hessian = symmat::congruence(&sp.shear(), &e.hessian)?;
        e.gradient = inv.transpose().apply(e.gradient);
        Ok(e)
    }

    /// `−M⁺(D²u) − λu` at an evaluated point.
    pub fn residual(&self, e: &PatchEval) -> Result<f64> {
        let ep = &self.domain.ep;
        Ok(-symmat::pucci_plus(&e.hessian, ep)? - ep.lambda() * e.value)
    }
}

fn signs(d: [f64; 3]) -> [i8; 3] {
    let thr = SIGN_THRESHOLD * d.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    d.map(|x| symmat::sign_with_threshold(x, thr))
}

/// Eigenvalues of the upper-left 2×2 block of a sheared diagonal Hessian,
/// plus the decoupled third eigenvalue when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub mu3: Option<f64>,
}

/// The block `B_a` of `C_a⁻ᵀ diag(p, q, ·) C_a⁻¹`.
pub fn block_matrix(p: f64, q: f64, a: f64) -> Result<[[f64; 2]; 2]> {
    let m = symmat::congruence(&geometry::shear_matrix(a)?, &SymMatrix3::diag(p, q, 0.0))?;
    Ok([[m.m11, m.m12], [m.m12, m.m22]])
}

/// `μ± = (κ²/2)[p + q ± √(p² + q² + 2βpq)]`.
///
/// The root of larger magnitude is taken from the formula and the other from
/// the product `μ₊μ₋ = κ²pq`, which avoids cancellation.
pub fn block_spectrum(p: f64, q: f64, a: f64) -> Result<BlockSpectrum> {
    geometry::check_shear(a)?;
    let det = geometry::det_shear(a);
    let k2 = 1.0 / det;
    let beta = 1.0 - 2.0 * det;
    let disc = (p * p + q * q + 2.0 * beta * p * q).max(0.0).sqrt();
    let sum = p + q;
    let (mu_plus, mu_minus) = if sum >= 0.0 {
        let big = 0.5 * k2 * (sum + disc);
        let small = if big != 0.0 { k2 * p * q / big } else { 0.0 };
        (big, small)
    } else {
        let big = 0.5 * k2 * (sum - disc);
        let other = k2 * p * q / big;
        (other, big)
    };
    Ok(BlockSpectrum { mu_plus, mu_minus, mu3: None })
}

impl BlockSpectrum {
    /// Fills in `μ₃ = κ²r`.
    pub fn with_r(mut self, r: f64, a: f64) -> Self {
        self.mu3 = Some(r / geometry::det_shear(a));
        self
    }
}

/// Result of evaluating the separable candidate `∏ cos(x_i/√n)` along the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableResidual {
    pub x: f64,
    /// `−M⁺(D²u) − λu` from the explicit Hessian.
    pub residual: f64,
    /// `(Λ − λ)·cos^{n−2}θ·(cos²θ − (n−1)/n)`, `θ = x/√n`.
    pub closed_form: f64,
    /// Whether the outlier Hessian eigenvalue is positive (`tan²θ > 1/(n−1)`).
    pub precondition: bool,
}

/// Residual of the product-of-cosines candidate at `(x, …, x)`.
pub fn separable_candidate_residual(x: f64, n: usize, ep: &EllipticityParams) -> Result<SeparableResidual> {
    if n != 3 {
        return Err(Error::InvalidInput(format!("only n = 3 is supported, got {n}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite x = {x}")));
    }
    let nf = n as f64;
    let th = x / nf.sqrt();
    let (s, c) = th.sin_cos();
    let value = c.powi(n as i32);
    let d = -c.powi(n as i32) / nf;
    let o = s * s * c.powi(n as i32 - 2) / nf;
    let h = SymMatrix3::new(d, d, d, o, o, o);
    let residual = -symmat::pucci_plus(&h, ep)? - ep.lambda() * value;
    let closed_form = (ep.big_lambda() - ep.lambda()) * c.powi(n as i32 - 2) * (c * c - (nf - 1.0) / nf);
    let precondition = (nf - 1.0) * s * s > c * c;
    Ok(SeparableResidual { x, residual, closed_form, precondition })
}
