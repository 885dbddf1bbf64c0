use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, Patch, ALPHA};

/// The nine patch interfaces plus the three reflection planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InterfaceId {
    CZ,
    CX,
    CY,
    ZXX,
    ZXZ,
    XYX,
    XYY,
    YZY,
    YZZ,
    ReflX,
    ReflY,
    ReflZ,
}

impl InterfaceId {
    pub const ALL: [InterfaceId; 12] = [
        InterfaceId::CZ,
        InterfaceId::CX,
        InterfaceId::CY,
        InterfaceId::ZXX,
        InterfaceId::ZXZ,
        InterfaceId::XYX,
        InterfaceId::XYY,
        InterfaceId::YZY,
        InterfaceId::YZZ,
        InterfaceId::ReflX,
        InterfaceId::ReflY,
        InterfaceId::ReflZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InterfaceId::CZ => "C-Z@z",
            InterfaceId::CX => "C-X@x",
            InterfaceId::CY => "C-Y@y",
            InterfaceId::ZXX => "ZX-X@z",
            InterfaceId::ZXZ => "ZX-Z@x",
            InterfaceId::XYX => "XY-X@y",
            InterfaceId::XYY => "XY-Y@x",
            InterfaceId::YZY => "YZ-Y@z",
            InterfaceId::YZZ => "YZ-Z@y",
            InterfaceId::ReflX => "refl@x",
            InterfaceId::ReflY => "refl@y",
            InterfaceId::ReflZ => "refl@z",
        }
    }

    /// Axis normal to the interface plane.
    pub fn normal_axis(self) -> usize {
        match self {
            InterfaceId::CX | InterfaceId::ZXZ | InterfaceId::XYY | InterfaceId::ReflX => 0,
            InterfaceId::CY | InterfaceId::XYX | InterfaceId::YZZ | InterfaceId::ReflY => 1,
            InterfaceId::CZ | InterfaceId::ZXX | InterfaceId::YZY | InterfaceId::ReflZ => 2,
        }
    }

    pub fn is_reflection(self) -> bool {
        matches!(self, InterfaceId::ReflX | InterfaceId::ReflY | InterfaceId::ReflZ)
    }

    /// The two patches meeting across the interface. For reflection planes
    /// the patch on either side is the one containing the point, so `None`.
    pub fn sides(self) -> Option<(Patch, Patch)> {
        Some(match self {
            InterfaceId::CZ => (Patch::C, Patch::Z),
            InterfaceId::CX => (Patch::C, Patch::X),
            InterfaceId::CY => (Patch::C, Patch::Y),
            InterfaceId::ZXX => (Patch::ZX, Patch::X),
            InterfaceId::ZXZ => (Patch::ZX, Patch::Z),
            InterfaceId::XYX => (Patch::XY, Patch::X),
            InterfaceId::XYY => (Patch::XY, Patch::Y),
            InterfaceId::YZY => (Patch::YZ, Patch::Y),
            InterfaceId::YZZ => (Patch::YZ, Patch::Z),
            _ => return None,
        })
    }

    /// For cap traces: the cap axis that varies along the trace.
    fn cap_axis(self) -> Option<usize> {
        match self {
            InterfaceId::ZXX | InterfaceId::XYX => Some(0),
            InterfaceId::XYY | InterfaceId::YZY => Some(1),
            InterfaceId::ZXZ | InterfaceId::YZZ => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 2D trace of an interface, parametrized by `(u, v)` over the closed set
/// `u ∈ [u0, u1]`, `v ∈ [v0, v_upper(u)]` (for reflection planes, the box
/// intersected with the domain closure).
#[derive(Debug, Clone, Copy)]
pub struct Interface {
    pub id: InterfaceId,
    domain: Domain,
}

impl Interface {
    pub fn new(id: InterfaceId, domain: Domain) -> Self {
        Interface { id, domain }
    }

    /// Axes carried by the parameters `(u, v)`. For cap traces `v` is the
    /// cap axis.
    pub fn param_axes(&self) -> (usize, usize) {
        let n = self.id.normal_axis();
        match self.id.cap_axis() {
            Some(k) => {
                let other = 3 - n - k;
                (other, k)
            }
            None => super::other_axes(n),
        }
    }

    fn plane_value(&self) -> f64 {
        if self.id.is_reflection() {
            0.0
        } else {
            ALPHA
        }
    }

    /// Bounds of `u` and the lower bound of `v`, with the largest upper bound of `v`.
    pub fn param_bounds(&self) -> ((f64, f64), (f64, f64)) {
        if self.id.is_reflection() {
            let e = self.domain.half_extents();
            let (ua, va) = self.param_axes();
            return ((0.0, e[ua]), (0.0, e[va]));
        }
        match self.id.cap_axis() {
            None => ((0.0, ALPHA), (0.0, ALPHA)),
            Some(k) => {
                let mut q = [0.0; 3];
                q[self.id.normal_axis()] = ALPHA;
                let arg = self.domain.cap_argument(k, q);
                let hi = ALPHA + self.domain.ep.sqrt_omega() * arg.clamp(0.0, 1.0).asin();
                ((0.0, ALPHA), (ALPHA, hi))
            }
        }
    }

    /// Upper bound of `v` at parameter `u`, or `None` when the trace is
    /// empty there (the cap argument leaves `[0, 1]`).
    pub fn v_upper(&self, u: f64) -> Option<f64> {
        match self.id.cap_axis() {
            None if self.id.is_reflection() => None,
            None => Some(ALPHA),
            Some(k) => {
                let mut q = [0.0; 3];
                q[self.id.normal_axis()] = ALPHA;
                q[self.param_axes().0] = u;
                let arg = self.domain.cap_argument(k, q);
                if (0.0..=1.0).contains(&arg) {
                    Some(ALPHA + self.domain.ep.sqrt_omega() * arg.asin())
                } else {
                    None
                }
            }
        }
    }

    /// Maps parameters to the first-octant point on the interface.
    pub fn point(&self, u: f64, v: f64) -> [f64; 3] {
        let (ua, va) = self.param_axes();
        let mut q = [0.0; 3];
        q[self.id.normal_axis()] = self.plane_value();
        q[ua] = u;
        q[va] = v;
        q
    }

    /// Whether `(u, v)` lies in the closed parameter domain.
    pub fn contains_param(&self, u: f64, v: f64) -> bool {
        let ((u0, u1), (v0, _)) = self.param_bounds();
        if u < u0 || u > u1 || v < v0 {
            return false;
        }
        if self.id.is_reflection() {
            return self.domain.contains(self.point(u, v));
        }
        self.v_upper(u).is_some_and(|hi| v <= hi)
    }

    /// Draws one point of the trace, or `None` after repeated misses.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<[f64; 3]> {
        let ((u0, u1), (v0, v1)) = self.param_bounds();
        for _ in 0..10_000 {
            let u = rng.gen_range(u0..=u1);
            if self.id.is_reflection() {
                let v = rng.gen_range(v0..=v1);
                let q = self.point(u, v);
                if self.domain.contains(q) {
                    return Some(q);
                }
            } else if let Some(hi) = self.v_upper(u) {
                let v = if hi > v0 { rng.gen_range(v0..=hi) } else { v0 };
                return Some(self.point(u, v));
            }
        }
        None
    }
}

impl Domain {
    /// All twelve interfaces of the first-octant decomposition.
    pub fn interfaces(&self) -> Vec<Interface> {
        InterfaceId::ALL.into_iter().map(|id| Interface::new(id, *self)).collect()
    }
}
