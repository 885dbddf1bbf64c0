//! The seven-patch first-octant domain, its even reflection, and the shear map.
//!
//! A point is folded into the first octant by absolute values and then tested
//! against the patch predicates in the declared order `C, X, Y, Z, ZX, XY, YZ`.
//! Each patch is described by which coordinates lie beyond `α = π/2`: the cube
//! has none, a cap has one, a bridge has two. Inverse-trigonometric arguments
//! outside `[0, 1]` exclude the point from that patch.

mod interfaces;
mod sampling;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::{EllipticityParams, Matrix3};

pub use interfaces::{Interface, InterfaceId};
pub use sampling::{BoundaryPoint, SamplePoint, SampleSet};

/// Half-width of the central cube.
pub const ALPHA: f64 = FRAC_PI_2;

/// Patches of the first-octant decomposition, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Patch {
    C,
    X,
    Y,
    Z,
    ZX,
    XY,
    YZ,
}

impl Patch {
    pub const ALL: [Patch; 7] = [Patch::C, Patch::X, Patch::Y, Patch::Z, Patch::ZX, Patch::XY, Patch::YZ];

    pub fn name(self) -> &'static str {
        match self {
            Patch::C => "C",
            Patch::X => "X",
            Patch::Y => "Y",
            Patch::Z => "Z",
            Patch::ZX => "ZX",
            Patch::XY => "XY",
            Patch::YZ => "YZ",
        }
    }

    pub fn from_name(s: &str) -> Option<Patch> {
        Patch::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Which coordinates lie beyond `α` on this patch.
    pub fn beyond(self) -> [bool; 3] {
        match self {
            Patch::C => [false, false, false],
            Patch::X => [true, false, false],
            Patch::Y => [false, true, false],
            Patch::Z => [false, false, true],
            Patch::ZX => [true, false, true],
            Patch::XY => [true, true, false],
            Patch::YZ => [false, true, true],
        }
    }

    /// Expected sign pattern of the diagonal Hessian `(u_xx, u_yy, u_zz)`.
    pub fn inertia(self) -> [i8; 3] {
        self.beyond().map(|b| if b { 1 } else { -1 })
    }
}

impl fmt::Display for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A patch together with the octant a point was reflected from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchId {
    pub patch: Patch,
    pub octant: [i8; 3],
}

/// Shape parameters `(γ, a)` and the derived shear quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    gamma: f64,
    a: f64,
}

impl ShapeParams {
    /// Validates `γ ∈ [ω^{-1/2}, ω^{1/2}]` and `|a| < π`.
    pub fn new(gamma: f64, a: f64, ep: &EllipticityParams) -> Result<Self> {
        let (lo, hi) = gamma_bounds(ep);
        let slack = 1e-12;
        if !gamma.is_finite() || gamma < lo * (1.0 - slack) || gamma > hi * (1.0 + slack) {
            return Err(Error::Parameter(format!(
                "gamma = {gamma} outside the admissible interval [{lo}, {hi}] for omega = {}",
                ep.omega()
            )));
        }
        check_shear(a)?;
        Ok(ShapeParams { gamma, a })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `s(a) = √(1 − (a/π)²)`
    pub fn s(&self) -> f64 {
        shear_s(self.a)
    }

    /// `κ(a) = 1/s(a)`
    pub fn kappa(&self) -> f64 {
        1.0 / self.s()
    }

    /// `β(a) = 2a²/π² − 1`
    pub fn beta(&self) -> f64 {
        1.0 - 2.0 * det_shear(self.a)
    }

    pub fn shear(&self) -> Matrix3 {
        shear_matrix_unchecked(self.a)
    }

    pub fn shear_inverse(&self) -> Matrix3 {
        shear_inverse_matrix(self.a)
    }

    /// `det C_a = 1 − a²/π²`
    pub fn shear_det(&self) -> f64 {
        det_shear(self.a)
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        check_shear(a)?;
        Ok(ShapeParams { a, ..*self })
    }
}

/// The admissible interval `[ω^{-1/2}, ω^{1/2}]`.
pub fn gamma_bounds(ep: &EllipticityParams) -> (f64, f64) {
    let r = ep.sqrt_omega();
    (1.0 / r, r)
}

pub(crate) fn check_shear(a: f64) -> Result<()> {
    if !a.is_finite() || a.abs() >= PI {
        return Err(Error::Parameter(format!("shear parameter a = {a} must satisfy |a| < pi")));
    }
    Ok(())
}

/// `1 − a²/π²` in factored form, accurate as `|a| → π`.
pub(crate) fn det_shear(a: f64) -> f64 {
    (PI - a) * (PI + a) / (PI * PI)
}

fn shear_s(a: f64) -> f64 {
    det_shear(a).sqrt()
}

fn shear_matrix_unchecked(a: f64) -> Matrix3 {
    let s = shear_s(a);
    Matrix3([[s, 0.0, 0.0], [a / PI, 1.0, 0.0], [0.0, 0.0, s]])
}

fn shear_inverse_matrix(a: f64) -> Matrix3 {
    let root = ((PI - a) * (PI + a)).sqrt();
    Matrix3([[PI / root, 0.0, 0.0], [-a / root, 1.0, 0.0], [0.0, 0.0, PI / root]])
}

/// The matrix `C_a`.
pub fn shear_matrix(a: f64) -> Result<Matrix3> {
    check_shear(a)?;
    Ok(shear_matrix_unchecked(a))
}

/// Applies `C_a`.
pub fn shear_forward(p: [f64; 3], a: f64) -> Result<[f64; 3]> {
    check_shear(a)?;
    Ok(shear_matrix_unchecked(a).apply(p))
}

/// Applies `C_a⁻¹`.
pub fn shear_inverse(x: [f64; 3], a: f64) -> Result<[f64; 3]> {
    check_shear(a)?;
    Ok(shear_inverse_matrix(a).apply(x))
}

/// The domain `Ω^ω_γ` together with its shear image `C_a(Ω^ω_γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub ep: EllipticityParams,
    pub sp: ShapeParams,
}

impl Domain {
    pub fn new(ep: EllipticityParams, sp: ShapeParams) -> Self {
        Domain { ep, sp }
    }

    /// Convenience constructor with `λ = 1`.
    pub fn from_omega(omega: f64, gamma: f64, a: f64) -> Result<Self> {
        let ep = EllipticityParams::from_omega(omega)?;
        let sp = ShapeParams::new(gamma, a, &ep)?;
        Ok(Domain { ep, sp })
    }

    /// Per-axis amplitudes `(γ, γ, 1)` of the eigenfunction profiles.
    pub fn amplitudes(&self) -> [f64; 3] {
        let g = self.sp.gamma();
        [g, g, 1.0]
    }

    /// Argument of the cap height `arcsin(·)` for a cap beyond axis `k`,
    /// evaluated at the first-octant point `q` (only base coordinates are used).
    pub fn cap_argument(&self, k: usize, q: [f64; 3]) -> f64 {
        let c = self.amplitudes();
        let (b1, b2) = other_axes(k);
        (c[b1] * q[b1].cos() + c[b2] * q[b2].cos()) / (c[k] * self.ep.sqrt_omega())
    }

    /// Upper bound of the reduced variable `(q_i − α)/√ω` on a bridge whose
    /// free axis is `k`.
    pub fn bridge_reduced_max(&self, i: usize, k: usize) -> f64 {
        let c = self.amplitudes();
        (c[k] / (self.ep.sqrt_omega() * c[i])).min(1.0).asin()
    }

    /// `w` such that the bridge with beyond axes `i, j` and free axis `k` is
    /// `{q_k ≤ arccos w}`.
    pub fn bridge_argument(&self, i: usize, j: usize, k: usize, q: [f64; 3]) -> f64 {
        let c = self.amplitudes();
        let r = self.ep.sqrt_omega();
        let si = ((q[i] - ALPHA) / r).sin();
        let sj = ((q[j] - ALPHA) / r).sin();
        r / c[k] * (c[i] * si + c[j] * sj)
    }

    /// Closed membership predicate of one first-octant patch.
    pub fn in_patch(&self, patch: Patch, q: [f64; 3]) -> bool {
        if q.iter().any(|&x| x < 0.0) {
            return false;
        }
        let beyond = patch.beyond();
        let r = self.ep.sqrt_omega();
        for axis in 0..3 {
            if beyond[axis] && q[axis] < ALPHA || !beyond[axis] && q[axis] > ALPHA {
                return false;
            }
        }
        match beyond.iter().filter(|&&b| b).count() {
            0 => true,
            1 => {
                let k = beyond.iter().position(|&b| b).unwrap_or(0);
                let arg = self.cap_argument(k, q);
                (0.0..=1.0).contains(&arg) && (q[k] - ALPHA) / r <= arg.asin()
            }
            _ => {
                let k = beyond.iter().position(|&b| !b).unwrap_or(0);
                let (i, j) = other_axes(k);
                if (q[i] - ALPHA) / r > self.bridge_reduced_max(i, k)
                    || (q[j] - ALPHA) / r > self.bridge_reduced_max(j, k)
                {
                    return false;
                }
                let w = self.bridge_argument(i, j, k, q);
                (0.0..=1.0).contains(&w) && q[k] <= w.acos()
            }
        }
    }

    /// Whether a point outside the domain is outside only because the patch
    /// of its region has an argument beyond the principal branch (or no patch
    /// covers the region), as opposed to lying past that patch's zero level.
    pub fn excluded_by_branch(&self, p: [f64; 3]) -> bool {
        let q = p.map(f64::abs);
        let beyond = q.map(|x| x > ALPHA);
        let r = self.ep.sqrt_omega();
        match beyond.iter().filter(|&&b| b).count() {
            0 => false,
            1 => {
                let k = beyond.iter().position(|&b| b).unwrap_or(0);
                !(0.0..=1.0).contains(&self.cap_argument(k, q))
            }
            2 => {
                let k = beyond.iter().position(|&b| !b).unwrap_or(0);
                let (i, j) = other_axes(k);
                (q[i] - ALPHA) / r > self.bridge_reduced_max(i, k)
                    || (q[j] - ALPHA) / r > self.bridge_reduced_max(j, k)
                    || !(0.0..=1.0).contains(&self.bridge_argument(i, j, k, q))
            }
            _ => true,
        }
    }

    /// Classifies a point of the unsheared domain, or `None` when outside.
    pub fn classify(&self, p: [f64; 3]) -> Result<Option<PatchId>> {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite point {p:?}")));
        }
        let q = p.map(f64::abs);
        let octant = p.map(|x| if x < 0.0 { -1 } else { 1 });
        Ok(Patch::ALL
            .into_iter()
            .find(|&patch| self.in_patch(patch, q))
            .map(|patch| PatchId { patch, octant }))
    }

    /// Membership in the unsheared domain `Ω^ω_γ`.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        matches!(self.classify(p), Ok(Some(_)))
    }

    /// Membership in the sheared domain `C_a(Ω^ω_γ)`.
    pub fn contains_sheared(&self, x: [f64; 3]) -> bool {
        self.contains(self.sp.shear_inverse().apply(x))
    }

    /// Half-extents of an axis-aligned box enclosing the unsheared domain.
    pub fn half_extents(&self) -> [f64; 3] {
        let r = self.ep.sqrt_omega();
        let g = self.sp.gamma();
        let side = ALPHA + r * ((g + 1.0) / (g * r)).min(1.0).asin();
        let top = ALPHA + r * (2.0 * g / r).min(1.0).asin();
        [side, side, top]
    }

    /// Half-extents of an axis-aligned box enclosing the sheared domain.
    pub fn sheared_half_extents(&self) -> [f64; 3] {
        let e = self.half_extents();
        let s = self.sp.s();
        [s * e[0], (self.sp.a() / PI).abs() * e[0] + e[1], s * e[2]]
    }

    /// First-octant coordinate box of a patch, derived from its constraints.
    /// `None` when the box is degenerate.
    pub fn patch_box(&self, patch: Patch) -> Option<([f64; 3], [f64; 3])> {
        let r = self.ep.sqrt_omega();
        let c = self.amplitudes();
        let beyond = patch.beyond();
        let mut lo = [0.0; 3];
        let mut hi = [ALPHA; 3];
        match beyond.iter().filter(|&&b| b).count() {
            0 => {}
            1 => {
                let k = beyond.iter().position(|&b| b).unwrap_or(0);
                let (b1, b2) = other_axes(k);
                let max_arg = (c[b1] + c[b2]) / (c[k] * r);
                lo[k] = ALPHA;
                hi[k] = ALPHA + r * max_arg.min(1.0).asin();
            }
            _ => {
                let k = beyond.iter().position(|&b| !b).unwrap_or(0);
                let (i, j) = other_axes(k);
                for axis in [i, j] {
                    lo[axis] = ALPHA;
                    hi[axis] = ALPHA + r * self.bridge_reduced_max(axis, k);
                }
            }
        }
        if (0..3).any(|d| hi[d] <= lo[d]) {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// The largest reach of the bridge `ZX` along `x` implied by its
    /// constraints, `α + √ω·arcsin(1/√ω)`, alongside the printed coordinate
    /// bound `α + √ω·arcsin(1/√(γω))`. The two differ unless `γ = 1`.
    pub fn zx_extent_discrepancy(&self) -> (f64, f64) {
        let r = self.ep.sqrt_omega();
        let derived = ALPHA + r * self.bridge_reduced_max(0, 1);
        let printed = ALPHA + r * (1.0 / (self.sp.gamma() * self.ep.omega()).sqrt()).min(1.0).asin();
        (derived, printed)
    }

    /// True when every cap and bridge argument stays within `[0, 1]`, so the
    /// zero set of the eigenfunction closes off the union of patches.
    pub fn is_closed_regime(&self) -> bool {
        let r = self.ep.sqrt_omega();
        let g = self.sp.gamma();
        2.0 * g / r <= 1.0 && (g + 1.0) / (g * r) <= 1.0
    }
}

/// The two axes other than `k`, in increasing order.
pub(crate) fn other_axes(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(omega: f64, gamma: f64) -> Domain {
        Domain::from_omega(omega, gamma, 0.0).unwrap()
    }

    #[test]
    fn branch_exclusion_classifies_exits() {
        let closed = Domain::from_omega(9.0, 1.0, 0.0).unwrap();
        let b = closed.boundary_along([0.0, 0.0, 1.0]).unwrap();
        assert!(!closed.excluded_by_branch(b.point_outside()));
        let open = Domain::from_omega(1.0, 1.0, 0.0).unwrap();
        let b = open.boundary_along([0.0, 0.0, 1.0]).unwrap();
        assert!(open.excluded_by_branch(b.point_outside()));
        let b = open.boundary_along([1.0, 1.0, 1.0]).unwrap();
        assert!(open.excluded_by_branch(b.point_outside()));
    }

    #[test]
    fn classify_examples() {
        for (omega, gamma) in [(1.0, 1.0), (9.0, 1.0), (9.0, 0.5), (4.0, 1.5)] {
            let d = dom(omega, gamma);
            assert_eq!(d.classify([0.1, 0.2, 0.3]).unwrap().unwrap().patch, Patch::C);
        }
        let d = dom(9.0, 1.0);
        assert_eq!(d.classify([ALPHA + 0.01, 0.1, 0.1]).unwrap().unwrap().patch, Patch::X);
        assert_eq!(d.classify([ALPHA + 2.0; 3]).unwrap(), None);
        let id = d.classify([-0.1, 0.2, -(ALPHA + 0.1)]).unwrap().unwrap();
        assert_eq!(id.patch, Patch::Z);
        assert_eq!(id.octant, [-1, 1, -1]);
    }

    #[test]
    fn outside_point_fails_every_predicate() {
        let d = dom(9.0, 1.0);
        let q = [ALPHA + 2.0; 3];
        assert!(Patch::ALL.iter().all(|&p| !d.in_patch(p, q)));
    }

    #[test]
    fn interface_points_take_lowest_patch() {
        let d = dom(9.0, 1.0);
        assert_eq!(d.classify([ALPHA, 0.3, 0.4]).unwrap().unwrap().patch, Patch::C);
        assert_eq!(d.classify([ALPHA + 0.1, 0.2, ALPHA]).unwrap().unwrap().patch, Patch::X);
    }

    #[test]
    fn contains_examples() {
        let d = dom(9.0, 1.0);
        assert!(d.contains([0.0; 3]));
        assert!(!d.contains([0.0, 0.0, 50.0]));
        assert!(d.classify([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn parameter_validation() {
        let ep = EllipticityParams::from_omega(9.0).unwrap();
        assert!(ShapeParams::new(3.5, 0.0, &ep).is_err());
        assert!(ShapeParams::new(1.0 / 3.0, 0.0, &ep).is_ok());
        assert!(ShapeParams::new(3.0, 0.0, &ep).is_ok());
        assert!(ShapeParams::new(1.0, PI, &ep).is_err());
        assert!(shear_forward([1.0, 0.0, 0.0], -PI).is_err());
    }

    #[test]
    fn shear_quantities() {
        let ep = EllipticityParams::from_omega(9.0).unwrap();
        let sp = ShapeParams::new(1.0, FRAC_PI_2, &ep).unwrap();
        assert!((sp.beta() + 0.5).abs() < 1e-15);
        assert!((sp.kappa().powi(2) - 4.0 / 3.0).abs() < 1e-14);
        for a in [-3.0, -1.0, 0.0, 0.5, 2.0, 3.1] {
            let sp = ShapeParams::new(1.0, a, &ep).unwrap();
            assert!((sp.shear().det() - (1.0 - a * a / (PI * PI))).abs() < 1e-14);
            assert!((sp.kappa().powi(2) * (1.0 - sp.beta()) / 2.0 - 1.0).abs() < 1e-14);
            assert!(sp.s() > 0.0 && sp.s() <= 1.0 && sp.kappa() >= 1.0);
        }
        assert_eq!(ShapeParams::new(1.0, 0.0, &ep).unwrap().kappa(), 1.0);
    }

    #[test]
    fn shear_examples() {
        let p = [0.3, -1.2, 2.5];
        assert_eq!(shear_forward(p, 0.0).unwrap(), p);
        let a = 1.3;
        let x = shear_forward([1.0, 0.0, 0.0], a).unwrap();
        assert_eq!(x, [shear_s(a), a / PI, 0.0]);
        let back = shear_inverse(shear_forward(p, a).unwrap(), a).unwrap();
        for i in 0..3 {
            assert!((back[i] - p[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zx_extent_discrepancy_matches_x_cap_trace() {
        let d = dom(9.0, 0.8);
        let (derived, printed) = d.zx_extent_discrepancy();
        let trace = ALPHA + 3.0 * (1.0_f64 / 3.0).asin();
        assert!((derived - trace).abs() < 1e-12);
        assert!((printed - derived).abs() > 1e-3);
        let (derived, printed) = dom(9.0, 1.0).zx_extent_discrepancy();
        assert!((derived - printed).abs() < 1e-15);
    }

    #[test]
    fn closed_regime() {
        assert!(dom(9.0, 1.0).is_closed_regime());
        assert!(dom(9.0, 0.5).is_closed_regime());
        assert!(dom(9.0, 1.5).is_closed_regime());
        assert!(!dom(9.0, 1.6).is_closed_regime());
        assert!(!dom(1.0, 1.0).is_closed_regime());
        assert!(!dom(4.0, 1.2).is_closed_regime());
    }
}
