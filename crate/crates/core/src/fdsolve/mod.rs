//! Finite-difference estimate of the principal half-eigenvalue on a voxelized
//! domain.
//!
//! The nonlinear problem `−M⁺(D²u) = μu` is attacked by a frozen-coefficient
//! iteration: the current iterate's discrete Hessian selects, node by node,
//! the coefficient matrix `A = Q·diag(w)·Qᵀ` (`w = Λ` on nonnegative and `λ`
//! on negative eigendirections) that realizes `M⁺`, and one inverse-power
//! step is taken for the linear operator `−tr(A·D²_h)` with zero boundary
//! values. The linear solves use eight-colour SOR, so every stencil
//! neighbour of a node has a different colour and sweeps are deterministic
//! under parallel execution.

pub mod voxel;

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::symmat::{self, EllipticityParams, SymMatrix3};
use voxel::{Payload, VoxelFile};

pub const OUTSIDE: u8 = 0;
pub const INTERIOR: u8 = 1;
pub const BOUNDARY: u8 = 2;

/// A region to voxelize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeKind {
    /// `C_a(Ω^ω_γ)`.
    Pucci(Domain),
    /// The cube `[−π/2, π/2]³`.
    Cube,
}

/// A shape dilated by `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: ShapeKind,
    pub scale: f64,
}

impl Shape {
    pub fn pucci(d: Domain) -> Self {
        Shape { kind: ShapeKind::Pucci(d), scale: 1.0 }
    }

    pub fn cube() -> Self {
        Shape { kind: ShapeKind::Cube, scale: 1.0 }
    }

    pub fn scaled(self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Parameter(format!("scale t = {t} must be positive")));
        }
        Ok(Shape { scale: self.scale * t, ..self })
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        let p = x.map(|c| c / self.scale);
        match &self.kind {
            ShapeKind::Pucci(d) => d.contains_sheared(p),
            ShapeKind::Cube => p.iter().all(|c| c.abs() <= FRAC_PI_2),
        }
    }

    pub fn half_extents(&self) -> [f64; 3] {
        let e = match &self.kind {
            ShapeKind::Pucci(d) => d.sheared_half_extents(),
            ShapeKind::Cube => [FRAC_PI_2; 3],
        };
        e.map(|c| c * self.scale)
    }

    /// Coarsest admissible spacing: `(π/2)/8` times the scale.
    pub fn max_spacing(&self) -> f64 {
        FRAC_PI_2 / 8.0 * self.scale
    }
}

/// A node-centred grid with a domain mask and nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub h: f64,
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub mask: Vec<u8>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        let i = idx / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [0, 1, 2].map(|d| self.origin[d] + c[d] as f64 * self.h)
    }

    pub fn count(&self, kind: u8) -> usize {
        self.mask.iter().filter(|&&m| m == kind).count()
    }

    fn strides(&self) -> [isize; 3] {
        [(self.dims[1] * self.dims[2]) as isize, self.dims[2] as isize, 1]
    }

    /// Rebuilds the boundary layer from inside/outside information.
    fn classify_boundary(&mut self) {
        let strides = self.strides();
        let inside: Vec<bool> = self.mask.iter().map(|&m| m != OUTSIDE).collect();
        let dims = self.dims;
        let new: Vec<u8> = (0..self.mask.len())
            .into_par_iter()
            .map(|idx| {
                if !inside[idx] {
                    return OUTSIDE;
                }
                let c = [idx / (dims[1] * dims[2]), (idx / dims[2]) % dims[1], idx % dims[2]];
                for d in 0..3 {
                    if c[d] == 0 || c[d] + 1 == dims[d] {
                        return BOUNDARY;
                    }
                    let s = strides[d];
                    if !inside[(idx as isize + s) as usize] || !inside[(idx as isize - s) as usize] {
                        return BOUNDARY;
                    }
                }
                INTERIOR
            })
            .collect();
        self.mask = new;
    }

    /// Adds one ring of cells around the inside set.
    pub fn dilate(&self) -> GridField {
        let strides = self.strides();
        let dims = self.dims;
        let mut out = self.clone();
        out.mask = (0..self.mask.len())
            .into_par_iter()
            .map(|idx| {
                if self.mask[idx] != OUTSIDE {
                    return INTERIOR;
                }
                let c = [idx / (dims[1] * dims[2]), (idx / dims[2]) % dims[1], idx % dims[2]];
                for d in 0..3 {
                    let s = strides[d];
                    if c[d] > 0 && self.mask[(idx as isize - s) as usize] != OUTSIDE {
                        return INTERIOR;
                    }
                    if c[d] + 1 < dims[d] && self.mask[(idx as isize + s) as usize] != OUTSIDE {
                        return INTERIOR;
                    }
                }
                OUTSIDE
            })
            .collect();
        out.classify_boundary();
        out.values = vec![0.0; out.mask.len()];
        out
    }

    pub fn to_mask_file(&self) -> VoxelFile {
        VoxelFile { dims: self.dims, h: self.h, origin: self.origin, payload: Payload::Mask(self.mask.clone()) }
    }

    pub fn to_values_file(&self) -> VoxelFile {
        VoxelFile { dims: self.dims, h: self.h, origin: self.origin, payload: Payload::Values(self.values.clone()) }
    }

    /// Builds a grid from a mask file. Boundary bytes are recomputed from the
    /// inside set so that the interior-neighbour invariant holds.
    pub fn from_mask_file(f: &VoxelFile) -> Result<GridField> {
        let Payload::Mask(mask) = &f.payload else {
            return Err(Error::Format("expected a mask file".into()));
        };
        let mut g = GridField { h: f.h, dims: f.dims, origin: f.origin, mask: mask.clone(), values: vec![0.0; mask.len()] };
        g.classify_boundary();
        Ok(g)
    }
}

/// Voxelizes `shape` on a grid of spacing `h`, symmetric about the origin.
pub fn voxelize(shape: &Shape, h: f64) -> Result<GridField> {
    let limit = shape.max_spacing();
    if !(h > 0.0 && h.is_finite()) || h > limit * (1.0 + 1e-12) {
        return Err(Error::Resolution { h, limit });
    }
    let e = shape.half_extents();
    let n = e.map(|x| (x / h).ceil() as usize + 2);
    let dims = n.map(|m| 2 * m + 1);
    let origin = [0, 1, 2].map(|d| -(n[d] as f64) * h);
    let total = dims[0] * dims[1] * dims[2];
    let mask: Vec<u8> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let c = [idx / (dims[1] * dims[2]), (idx / dims[2]) % dims[1], idx % dims[2]];
            let x = [0, 1, 2].map(|d| (c[d] as f64 - n[d] as f64) * h);
            if shape.contains(x) {
                INTERIOR
            } else {
                OUTSIDE
            }
        })
        .collect();
    let mut g = GridField { h, dims, origin, mask, values: vec![0.0; total] };
    g.classify_boundary();
    Ok(g)
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Cap on SOR sweeps per linear solve.
    pub max_sweeps: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { tol: 1e-6, max_iterations: 400, max_sweeps: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolveResult {
    pub mu: f64,
    pub iterations: usize,
    /// Relative change of `μ` per outer iteration.
    pub history: Vec<f64>,
    pub h: f64,
    /// `(max − min)/μ` of `−M⁺(D²_h u)/u` over nodes at distance ≥ 2 from the boundary.
    pub spread: f64,
    /// Outer iterations in which clipping at zero was needed.
    pub positivity_events: Vec<usize>,
    pub linear_sweeps: usize,
    pub interior_nodes: usize,
    /// Normalized eigenfunction (max 1) on the grid.
    #[serde(skip)]
    pub field: Option<GridField>,
}

/// Frozen coefficients at one node, scaled for the update formula.
#[derive(Debug, Clone, Copy)]
struct Coef {
    diag: f64,
    axis: [f64; 3],
    /// `A_ij / 2` for `(0,1), (0,2), (1,2)`.
    cross: [f64; 3],
}

const MAX_RELAX: f64 = 1.995;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

struct Operator<'a> {
    g: &'a GridField,
    interior: Vec<usize>,
    /// Position in `interior`, or `usize::MAX`.
    slot: Vec<usize>,
    colors: [Vec<usize>; 8],
    strides: [isize; 3],
    deep: Vec<usize>,
}

impl<'a> Operator<'a> {
    fn new(g: &'a GridField) -> Self {
        let interior: Vec<usize> = (0..g.len()).filter(|&i| g.mask[i] == INTERIOR).collect();
        let mut slot = vec![usize::MAX; g.len()];
        for (s, &i) in interior.iter().enumerate() {
            slot[i] = s;
        }
        let mut colors: [Vec<usize>; 8] = Default::default();
        for (s, &i) in interior.iter().enumerate() {
            let c = g.coords(i);
            colors[(c[0] % 2) * 4 + (c[1] % 2) * 2 + c[2] % 2].push(s);
        }
        let strides = g.strides();
        let deep = (0..interior.len())
            .filter(|&s| {
                let i = interior[s] as isize;
                strides.iter().all(|&st| g.mask[(i + st) as usize] == INTERIOR && g.mask[(i - st) as usize] == INTERIOR)
            })
            .collect();
        Operator { g, interior, slot, colors, strides, deep }
    }

    #[inline]
    fn at(&self, v: &[f64], idx: usize, off: isize) -> f64 {
        let j = (idx as isize + off) as usize;
        match self.slot[j] {
            usize::MAX => 0.0,
            s => v[s],
        }
    }

    /// Discrete Hessian at interior slot `s` with zero extension.
    fn hessian(&self, v: &[f64], s: usize) -> SymMatrix3 {
        let idx = self.interior[s];
        let h2 = self.g.h * self.g.h;
        let u0 = v[s];
        let st = self.strides;
        let d = |a: usize| (self.at(v, idx, st[a]) - 2.0 * u0 + self.at(v, idx, -st[a])) / h2;
        let x = |a: usize, b: usize| {
            (self.at(v, idx, st[a] + st[b]) - self.at(v, idx, st[a] - st[b]) - self.at(v, idx, st[b] - st[a])
                + self.at(v, idx, -st[a] - st[b]))
                / (4.0 * h2)
        };
        SymMatrix3::new(d(0), d(1), d(2), x(0, 1), x(0, 2), x(1, 2))
    }

    fn freeze(&self, v: &[f64], ep: &EllipticityParams) -> Vec<Coef> {
        (0..self.interior.len())
            .into_par_iter()
            .map(|s| {
                let a = if ep.lambda() == ep.big_lambda() {
                    SymMatrix3::diag(ep.lambda(), ep.lambda(), ep.lambda())
                } else {
                    extremal_coefficients(&self.hessian(v, s), ep)
                };
                Coef {
                    diag: 2.0 * (a.m11 + a.m22 + a.m33),
                    axis: [a.m11, a.m22, a.m33],
                    cross: [0.5 * a.m12, 0.5 * a.m13, 0.5 * a.m23],
                }
            })
            .collect()
    }

    /// `Σ a_i (v₊ + v₋) + Σ c_ij (v₊₊ − v₊₋ − v₋₊ + v₋₋)` at slot `s`.
    fn neighbours(&self, c: &Coef, v: &[f64], s: usize) -> f64 {
        let idx = self.interior[s];
        let st = self.strides;
        let mut acc = 0.0;
        for d in 0..3 {
            acc += c.axis[d] * (self.at(v, idx, st[d]) + self.at(v, idx, -st[d]));
        }
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            if c.cross[p] != 0.0 {
                acc += c.cross[p]
                    * (self.at(v, idx, st[a] + st[b]) - self.at(v, idx, st[a] - st[b]) - self.at(v, idx, st[b] - st[a])
                        + self.at(v, idx, -st[a] - st[b]));
            }
        }
        acc
    }

    /// `max |f − (−L v)| / max |f|`.
    fn residual(&self, coefs: &[Coef], f: &[f64], v: &[f64]) -> f64 {
        let h2 = self.g.h * self.g.h;
        let (num, den) = (0..self.interior.len())
            .into_par_iter()
            .map(|s| {
                let lv = (coefs[s].diag * v[s] - self.neighbours(&coefs[s], v, s)) / h2;
                ((f[s] - lv).abs(), f[s].abs())
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Solves `−L v = f` by eight-colour SOR starting from `v`.
    fn solve(&self, coefs: &[Coef], f: &[f64], v: &mut [f64], tol: f64, max_sweeps: usize) -> (usize, f64) {
        let h2 = self.g.h * self.g.h;
        let n = *self.g.dims.iter().max().unwrap_or(&1) as f64;
        let mut relax = 2.0 / (1.0 + (PI / n).sin());
        let mut sweeps = 0;
        let mut res = self.residual(coefs, f, v);
        let mut best = res;
        let mut since_change = 0;
        while res > tol && sweeps < max_sweeps {
            for _ in 0..10 {
                for color in &self.colors {
                    let new: Vec<f64> = color
                        .par_iter()
                        .map(|&s| {
                            let gs = (h2 * f[s] + self.neighbours(&coefs[s], v, s)) / coefs[s].diag;
                            v[s] + relax * (gs - v[s])
                        })
                        .collect();
                    for (&s, x) in color.iter().zip(new) {
                        v[s] = x;
                    }
                }
                sweeps += 1;
            }
            let r = self.residual(coefs, f, v);
            if !r.is_finite() || r > 1e4 * best {
                // Over-relaxation is diverging on this operator: fall back to damped sweeps.
                relax = if relax > 1.0 { 1.0 } else { 0.8 * relax };
                if !r.is_finite() {
                    v.iter_mut().zip(f).for_each(|(x, &y)| *x = y.max(0.0));
                }
                since_change = 0;
            } else {
                since_change += 1;
                // Adaptive SOR: infer the Jacobi spectral radius from the observed
                // contraction and raise the relaxation factor toward its optimum.
                let rate = (r / res).powf(0.1);
                if since_change >= 3 && rate < 1.0 && rate > relax - 1.0 + 0.01 && relax >= 1.0 {
                    let rho2 = (rate + relax - 1.0).powi(2) / (rate * relax * relax);
                    if rho2 < 1.0 {
                        let opt = (2.0 / (1.0 + (1.0 - rho2).sqrt())).min(MAX_RELAX);
                        if opt > relax + 1e-3 {
                            relax = opt;
                            since_change = 0;
                        }
                    }
                }
            }
            best = best.min(r);
            res = r;
        }
        (sweeps, res)
    }

    /// `−M⁺(D²_h u)/u` at the deep interior nodes.
    fn ratios(&self, v: &[f64], ep: &EllipticityParams) -> Vec<f64> {
        self.deep
            .par_iter()
            .map(|&s| -symmat::pucci_plus(&self.hessian(v, s), ep).unwrap_or(f64::NAN) / v[s])
            .collect()
    }
}

/// `A = Q·diag(w)·Qᵀ` with `w = Λ` on nonnegative and `λ` on negative
/// eigenvalues of `m`, so that `tr(A·m) = M⁺(m)`.
pub fn extremal_coefficients(m: &SymMatrix3, ep: &EllipticityParams) -> SymMatrix3 {
    let Ok((e, q)) = m.eigen_decomposition() else {
        return SymMatrix3::diag(ep.lambda(), ep.lambda(), ep.lambda());
    };
    let w = e.map(|x| if x >= 0.0 { ep.big_lambda() } else { ep.lambda() });
    let q = q.0;
    let entry = |i: usize, j: usize| (0..3).map(|k| q[i][k] * w[k] * q[j][k]).sum::<f64>();
    SymMatrix3::new(entry(0, 0), entry(1, 1), entry(2, 2), entry(0, 1), entry(0, 2), entry(1, 2))
}

fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the frozen-coefficient inverse-power iteration on `grid`.
pub fn solve_eigen(grid: &GridField, ep: &EllipticityParams, cfg: &SolveConfig) -> Result<EigenSolveResult> {
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        return Err(Error::Parameter(format!("tolerance {} must lie in (0, 1)", cfg.tol)));
    }
    let op = Operator::new(grid);
    let n = op.interior.len();
    if n == 0 {
        return Err(Error::InvalidInput("mask has no interior nodes".into()));
    }
    // Product-of-cosines bump over the bounding box of the inside set.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for i in 0..grid.len() {
        if grid.mask[i] != OUTSIDE {
            let p = grid.position(i);
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
    }
    let mut u: Vec<f64> = op
        .interior
        .iter()
        .map(|&i| {
            let p = grid.position(i);
            (0..3)
                .map(|d| {
                    let c = 0.5 * (lo[d] + hi[d]);
                    let w = 0.5 * (hi[d] - lo[d]) + grid.h;
                    (FRAC_PI_2 * (p[d] - c) / w).cos()
                })
                .product::<f64>()
        })
        .collect();
    let mut mu = median(&op.ratios(&u, ep));
    if !mu.is_finite() || mu <= 0.0 {
        mu = 1.0;
    }
    let mut history = Vec::new();
    let mut positivity_events = Vec::new();
    let mut linear_sweeps = 0;
    for it in 1..=cfg.max_iterations {
        let coefs = op.freeze(&u, ep);
        let mut v: Vec<f64> = u.iter().map(|x| x / mu).collect();
        let (sweeps, res) = op.solve(&coefs, &u, &mut v, cfg.tol / 10.0, cfg.max_sweeps);
        linear_sweeps += sweeps;
        if !res.is_finite() {
            return Err(Error::SolverFailure(format!("linear solve diverged at outer iteration {it}")));
        }
        let ratio: Vec<f64> = (0..n).filter(|&s| v[s] > 0.0).map(|s| u[s] / v[s]).collect();
        let mu_new = median(&ratio);
        if !(mu_new.is_finite() && mu_new > 0.0) {
            return Err(Error::SolverFailure(format!("eigenvalue estimate lost at outer iteration {it}")));
        }
        if v.iter().any(|&x| x <= 0.0) {
            positivity_events.push(it);
            let streak = positivity_events.iter().rev().zip((1..=it).rev()).take_while(|(a, b)| *a == b).count();
            if it > 10 && streak >= 2 {
                return Err(Error::SolverFailure(format!(
                    "iterate lost positivity in {streak} consecutive outer iterations up to {it}"
                )));
            }
            clip_and_smooth(&op, &mut v);
        }
        let vmax = v.iter().fold(0.0_f64, |m, &x| m.max(x));
        u = v.into_iter().map(|x| x / vmax).collect();
        let change = (mu_new - mu).abs() / mu_new;
        history.push(change);
        mu = mu_new;
        let r = op.ratios(&u, ep);
        let spread = if r.is_empty() {
            0.0
        } else {
            let (mn, mx) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            (mx - mn) / mu
        };
        if change < cfg.tol && spread < 10.0 * cfg.tol {
            let mut field = grid.clone();
            field.values = vec![0.0; grid.len()];
            for (s, &i) in op.interior.iter().enumerate() {
                field.values[i] = u[s];
            }
            return Ok(EigenSolveResult {
                mu,
                iterations: it,
                history,
                h: grid.h,
                spread,
                positivity_events,
                linear_sweeps,
                interior_nodes: n,
                field: Some(field),
            });
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iterations, last_change: history.last().copied().unwrap_or(f64::NAN), history })
}

/// Zeroes nonpositive entries and replaces them by the mean of their axis
/// neighbours.
fn clip_and_smooth(op: &Operator<'_>, v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let snapshot = v.to_vec();
    for s in 0..v.len() {
        if snapshot[s] == 0.0 {
            let idx = op.interior[s];
            let sum: f64 = op.strides.iter().map(|&st| op.at(&snapshot, idx, st) + op.at(&snapshot, idx, -st)).sum();
            v[s] = sum / 6.0;
        }
    }
    let floor = 1e-12 * v.iter().fold(0.0_f64, |m, &x| m.max(x));
    for x in v.iter_mut() {
        if *x <= 0.0 {
            *x = floor;
        }
    }
}

/// Discrete Dirichlet eigenvalue of `−λΔ_h` on the cube `[−π/2, π/2]³` when
/// `π/2` is a multiple of `h`.
pub fn cube_discrete_eigenvalue(h: f64, lambda: f64) -> f64 {
    3.0 * lambda * (2.0 - 2.0 * h.cos()) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_counts() {
        let g = voxelize(&Shape::cube(), PI / 16.0).unwrap();
        assert_eq!(g.count(INTERIOR), 15 * 15 * 15);
        assert_eq!(g.count(BOUNDARY), 17usize.pow(3) - 15usize.pow(3));
    }

    #[test]
    fn resolution_guard() {
        assert!(matches!(voxelize(&Shape::cube(), 0.3), Err(Error::Resolution { .. })));
        assert!(voxelize(&Shape::cube().scaled(4.0).unwrap(), 0.6).is_ok());
    }

    #[test]
    fn pucci_mask_is_octant_symmetric() {
        let d = Domain::from_omega(9.0, 1.0, 0.0).unwrap();
        let g = voxelize(&Shape::pucci(d), PI / 16.0).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            let flip = g.index(g.dims[0] - 1 - i, j, g.dims[2] - 1 - k);
            assert_eq!(g.mask[idx], g.mask[flip]);
            let flip = g.index(i, g.dims[1] - 1 - j, k);
            assert_eq!(g.mask[idx], g.mask[flip]);
        }
    }

    #[test]
    fn mask_volume_tracks_quadrature() {
        let d = Domain::from_omega(9.0, 1.0, 0.0).unwrap();
        let g = voxelize(&Shape::pucci(d), PI / 32.0).unwrap();
        let v = (g.len() - g.count(OUTSIDE)) as f64 * g.h.powi(3);
        let q = crate::measure::volume_quadrature(&d).unwrap().volume;
        assert!((v / q - 1.0).abs() < 0.05, "{v} vs {q}");
    }

    #[test]
    fn extremal_coefficients_realize_pucci() {
        let ep = EllipticityParams::new(1.0, 4.0).unwrap();
        let m = SymMatrix3::new(1.0, -2.0, 0.5, 0.3, -0.4, 0.7);
        let a = extremal_coefficients(&m, &ep);
        let tr = a.to_matrix().mul(&m.to_matrix());
        let tr = tr.0[0][0] + tr.0[1][1] + tr.0[2][2];
        assert!((tr - symmat::pucci_plus(&m, &ep).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cube_matches_discrete_laplacian_eigenvalue() {
        let ep = EllipticityParams::new(1.0, 1.0).unwrap();
        let h = PI / 16.0;
        let g = voxelize(&Shape::cube(), h).unwrap();
        let cfg = SolveConfig { tol: 1e-10, ..SolveConfig::default() };
        let r = solve_eigen(&g, &ep, &cfg).unwrap();
        let exact = cube_discrete_eigenvalue(h, 1.0);
        assert!((r.mu / exact - 1.0).abs() < 1e-8, "{} vs {exact}", r.mu);
        assert!(r.positivity_events.is_empty());
    }

    /// Plain inverse power iteration for the 7-point Laplacian using
    /// conjugate gradients, independent of the solver above.
    fn laplacian_oracle(g: &GridField, lambda: f64) -> f64 {
        let idx: Vec<usize> = (0..g.len()).filter(|&i| g.mask[i] == INTERIOR).collect();
        let mut slot = vec![usize::MAX; g.len()];
        for (s, &i) in idx.iter().enumerate() {
            slot[i] = s;
        }
        let st = [(g.dims[1] * g.dims[2]) as isize, g.dims[2] as isize, 1isize];
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..idx.len())
                .map(|s| {
                    let mut acc = 6.0 * x[s];
                    for d in st {
                        for o in [d, -d] {
                            let j = slot[(idx[s] as isize + o) as usize];
                            if j != usize::MAX {
                                acc -= x[j];
                            }
                        }
                    }
                    lambda * acc / (g.h * g.h)
                })
                .collect()
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut u = vec![1.0; idx.len()];
        let mut mu = 0.0;
        for _ in 0..200 {
            // CG for apply(v) = u
            let mut v = vec![0.0; u.len()];
            let mut r = u.clone();
            let mut p = r.clone();
            let mut rr = dot(&r, &r);
            for _ in 0..2000 {
                let ap = apply(&p);
                let alpha = rr / dot(&p, &ap);
                for i in 0..v.len() {
                    v[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                let rr2 = dot(&r, &r);
                if rr2.sqrt() < 1e-14 * dot(&u, &u).sqrt() {
                    break;
                }
                for i in 0..p.len() {
                    p[i] = r[i] + rr2 / rr * p[i];
                }
                rr = rr2;
            }
            let next = dot(&u, &u) / dot(&u, &v);
            let norm = dot(&v, &v).sqrt();
            u = v.iter().map(|x| x / norm).collect();
            if (next - mu).abs() < 1e-13 * next {
                return next;
            }
            mu = next;
        }
        mu
    }

    #[test]
    fn omega_one_reduces_to_laplacian() {
        let d = Domain::from_omega(4.0, 1.0, 0.0).unwrap();
        let g = voxelize(&Shape::pucci(d), FRAC_PI_2 / 8.0).unwrap();
        let ep = EllipticityParams::new(1.0, 1.0).unwrap();
        let cfg = SolveConfig { tol: 1e-11, ..SolveConfig::default() };
        let r = solve_eigen(&g, &ep, &cfg).unwrap();
        let oracle = laplacian_oracle(&g, 1.0);
        assert!((r.mu / oracle - 1.0).abs() < 1e-8, "{} vs {oracle}", r.mu);
    }

    #[test]
    fn scaling_law_at_matched_resolution() {
        let ep = EllipticityParams::new(1.0, 1.0).unwrap();
        let cfg = SolveConfig { tol: 1e-9, ..SolveConfig::default() };
        let h = PI / 16.0;
        let a = solve_eigen(&voxelize(&Shape::cube(), h).unwrap(), &ep, &cfg).unwrap();
        let b = solve_eigen(&voxelize(&Shape::cube().scaled(2.0).unwrap(), 2.0 * h).unwrap(), &ep, &cfg).unwrap();
        assert!((b.mu / a.mu - 0.25).abs() < 1e-8);
    }

    #[test]
    fn dilation_does_not_raise_mu() {
        let ep = EllipticityParams::new(1.0, 1.0).unwrap();
        let cfg = SolveConfig { tol: 1e-9, ..SolveConfig::default() };
        let g = voxelize(&Shape::cube(), PI / 16.0).unwrap();
        let a = solve_eigen(&g, &ep, &cfg).unwrap();
        let b = solve_eigen(&g.dilate(), &ep, &cfg).unwrap();
        assert!(b.mu <= a.mu * (1.0 + 1e-9));
    }

    #[test]
    fn converged_field_is_octant_symmetric() {
        let d = Domain::from_omega(9.0, 1.0, 0.0).unwrap();
        let g = voxelize(&Shape::pucci(d), PI / 16.0).unwrap();
        let r = solve_eigen(&g, &d.ep, &SolveConfig::default()).unwrap();
        assert!((r.mu - 1.0).abs() < 0.05, "{}", r.mu);
        let f = r.field.unwrap();
        let mut worst = 0.0_f64;
        for idx in 0..f.len() {
            let [i, j, k] = f.coords(idx);
            let (ri, rj, rk) = (f.dims[0] - 1 - i, f.dims[1] - 1 - j, f.dims[2] - 1 - k);
            for m in [f.index(ri, j, k), f.index(i, rj, k), f.index(i, j, rk), f.index(ri, rj, rk)] {
                worst = worst.max((f.values[idx] - f.values[m]).abs());
            }
            if f.mask[idx] == INTERIOR {
                assert!(f.values[idx] > 0.0);
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn sheared_domain_respects_lower_bound() {
        let d = Domain::from_omega(9.0, 1.0, 1.0).unwrap();
        let g = voxelize(&Shape::pucci(d), PI / 16.0).unwrap();
        let r = solve_eigen(&g, &d.ep, &SolveConfig::default()).unwrap();
        let bound = crate::verifier::shear_lower_bound(&d.ep, 1.0);
        assert!(r.mu >= 0.95 * bound, "{} vs {bound}", r.mu);
    }

    #[test]
    fn empty_mask_and_bad_tolerance() {
        let mut g = voxelize(&Shape::cube(), PI / 16.0).unwrap();
        g.mask.iter_mut().for_each(|m| *m = OUTSIDE);
        let ep = EllipticityParams::new(1.0, 1.0).unwrap();
        assert!(solve_eigen(&g, &ep, &SolveConfig::default()).is_err());
        let cfg = SolveConfig { tol: 0.0, ..SolveConfig::default() };
        assert!(solve_eigen(&g, &ep, &cfg).is_err());
    }

    #[test]
    fn non_convergence_carries_history() {
        let g = voxelize(&Shape::cube(), PI / 16.0).unwrap();
        let ep = EllipticityParams::new(1.0, 2.0).unwrap();
        let cfg = SolveConfig { tol: 1e-12, max_iterations: 2, max_sweeps: 50 };
        match solve_eigen(&g, &ep, &cfg) {
            Err(Error::NonConvergence { history, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
