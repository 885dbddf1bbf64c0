//! Volumes, volume derivatives, kernel integrals, and the normalized
//! eigenvalue functional.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{other_axes, Domain, Patch, ShapeParams, ALPHA};
use crate::quad::{self, QuadConfig, QuadResult};
use crate::rng;
use crate::symmat::EllipticityParams;

/// Relative tolerance of the volume quadrature.
pub const VOLUME_REL_TOL: f64 = 1e-8;
/// Relative tolerance of the kernel quadrature.
pub const KERNEL_REL_TOL: f64 = 1e-10;
/// Default central-difference step for `dV/dγ`.
pub const DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    Quadrature,
    MonteCarlo,
}

/// First-octant volume of one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchVolume {
    pub patch: Patch,
    pub volume: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub omega: f64,
    pub gamma: f64,
    pub a: f64,
    /// Volume of the full (reflected, sheared) domain.
    pub volume: f64,
    pub error: f64,
    pub method: VolumeMethod,
    /// First-octant breakdown (quadrature only).
    pub patches: Vec<PatchVolume>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

fn cap_volume(d: &Domain, k: usize, cfg: QuadConfig) -> QuadResult {
    let r = d.ep.sqrt_omega();
    let c = d.amplitudes();
    let (b1, b2) = other_axes(k);
    // Base points with cos-weighted sum above `limit` have argument > 1 and are excluded.
    let limit = c[k] * r;
    let lower = |x1: f64| {
        let bound = (limit - c[b1] * x1.cos()) / c[b2];
        if bound >= 1.0 {
            0.0
        } else if bound < 0.0 {
            ALPHA
        } else {
            bound.acos()
        }
    };
    let height = |x1: f64, x2: f64| {
        let arg = (c[b1] * x1.cos() + c[b2] * x2.cos()) / limit;
        r * arg.clamp(0.0, 1.0).asin()
    };
    let mut breaks = vec![0.0];
    let kink = (limit - c[b2]) / c[b1];
    if kink > 0.0 && kink < 1.0 {
        breaks.push(kink.acos());
    }
    breaks.push(ALPHA);
    quad::integrate_2d(height, &breaks, lower, |_| ALPHA, cfg)
}

/// Bridge beyond axes `i, j` with free axis `k`, integrated in the reduced
/// variables `s = (q_i − α)/√ω`, `t = (q_j − α)/√ω` (Jacobian `ω`).
fn bridge_volume(d: &Domain, i: usize, j: usize, k: usize, cfg: QuadConfig) -> QuadResult {
    let r = d.ep.sqrt_omega();
    let c = d.amplitudes();
    let bound = c[k] / r;
    let t_max = (bound / c[j]).min(1.0).asin();
    let s_hi = |t: f64| ((bound - c[j] * t.sin()) / c[i]).clamp(0.0, 1.0).asin();
    let height = |s: f64, t: f64| {
        let w = r / c[k] * (c[i] * s.sin() + c[j] * t.sin());
        w.clamp(0.0, 1.0).acos()
    };
    let mut breaks = vec![0.0];
    // Below this t the box bound on s is the active one.
    let kink = (bound - c[i]) / c[j];
    if kink > 0.0 && kink < 1.0 && kink.asin() < t_max {
        breaks.push(kink.asin());
    }
    breaks.push(t_max);
    let inner = quad::integrate_2d(|t, s| height(s, t), &breaks, |_| 0.0, s_hi, cfg);
    QuadResult { value: d.ep.omega() * inner.value, error: d.ep.omega() * inner.error, ..inner }
}

/// First-octant volume of every patch, in canonical order.
pub fn patch_volumes(d: &Domain, rel_tol: f64) -> Vec<(Patch, QuadResult)> {
    let cfg = QuadConfig { rel_tol, abs_tol: 1e-14, max_intervals: 4000 };
    Patch::ALL
        .par_iter()
        .map(|&patch| {
            let r = match patch {
                Patch::C => QuadResult { value: ALPHA.powi(3), error: 0.0, evaluations: 0, converged: true },
                Patch::X => cap_volume(d, 0, cfg),
                Patch::Y => cap_volume(d, 1, cfg),
                Patch::Z => cap_volume(d, 2, cfg),
                Patch::ZX => bridge_volume(d, 0, 2, 1, cfg),
                Patch::XY => bridge_volume(d, 0, 1, 2, cfg),
                Patch::YZ => bridge_volume(d, 1, 2, 0, cfg),
            };
            (patch, r)
        })
        .collect()
}

/// Volume of the unsheared domain by adaptive quadrature; with `a ≠ 0` the
/// result is scaled by `det C_a`.
pub fn volume_quadrature(d: &Domain) -> Result<VolumeReport> {
    let parts = patch_volumes(d, VOLUME_REL_TOL);
    let octant = quad::compensated_sum(parts.iter().map(|(_, r)| r.value));
    let octant_err: f64 = parts.iter().map(|(_, r)| r.error).sum();
    if parts.iter().any(|(_, r)| !r.converged) {
        return Err(Error::QuadratureBudget { estimate: 8.0 * octant * d.sp.shear_det(), error: 8.0 * octant_err });
    }
    Ok(VolumeReport {
        omega: d.ep.omega(),
        gamma: d.sp.gamma(),
        a: d.sp.a(),
        volume: 8.0 * octant * d.sp.shear_det(),
        error: 8.0 * octant_err * d.sp.shear_det(),
        method: VolumeMethod::Quadrature,
        patches: parts
            .into_iter()
            .map(|(patch, r)| PatchVolume { patch, volume: r.value, error: r.error })
            .collect(),
        samples: None,
        seed: None,
    })
}

/// Hit-or-miss volume of the sheared domain over its bounding box.
pub fn volume_mc(d: &Domain, n: usize, seed: u64) -> Result<VolumeReport> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let e = d.sheared_half_extents();
    let box_volume = 8.0 * e[0] * e[1] * e[2];
    let hits: usize = rng::chunk_lengths(n)
        .par_iter()
        .enumerate()
        .map(|(c, &len)| {
            let mut r = rng::stream(seed, rng::stream_id(200, c));
            (0..len)
                .filter(|_| {
                    let x = [0, 1, 2].map(|k| e[k] * (2.0 * r.gen::<f64>() - 1.0));
                    d.contains_sheared(x)
                })
                .count()
        })
        .sum();
    let p = hits as f64 / n as f64;
    Ok(VolumeReport {
        omega: d.ep.omega(),
        gamma: d.sp.gamma(),
        a: d.sp.a(),
        volume: p * box_volume,
        error: (p * (1.0 - p) / n as f64).sqrt() * box_volume,
        method: VolumeMethod::MonteCarlo,
        patches: Vec::new(),
        samples: Some(n),
        seed: Some(seed),
    })
}

/// Hit-or-miss volume of one first-octant patch over its coordinate box.
pub fn patch_volume_mc(d: &Domain, patch: Patch, n: usize, seed: u64) -> (f64, f64) {
    let Some((lo, hi)) = d.patch_box(patch) else {
        return (0.0, 0.0);
    };
    let box_volume: f64 = (0..3).map(|k| hi[k] - lo[k]).product();
    let hits: usize = rng::chunk_lengths(n)
        .par_iter()
        .enumerate()
        .map(|(c, &len)| {
            let mut r = rng::stream(seed, rng::stream_id(300 + patch.index() as u32, c));
            (0..len)
                .filter(|_| {
                    let q = [0, 1, 2].map(|k| lo[k] + (hi[k] - lo[k]) * r.gen::<f64>());
                    d.in_patch(patch, q)
                })
                .count()
        })
        .sum();
    let p = hits as f64 / n as f64;
    (p * box_volume, (p * (1.0 - p) / n as f64).sqrt() * box_volume)
}

/// `(V(γ + h) − V(γ − h)) / 2h` from quadrature volumes at `a = 0`.
pub fn volume_derivative(gamma: f64, ep: &EllipticityParams, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("step h = {h} must be positive")));
    }
    let plus = Domain::new(*ep, ShapeParams::new(gamma + h, 0.0, ep)?);
    let minus = Domain::new(*ep, ShapeParams::new(gamma - h, 0.0, ep)?);
    let vp = volume_quadrature(&plus)?.volume;
    let vm = volume_quadrature(&minus)?.volume;
    Ok((vp - vm) / (2.0 * h))
}

/// `N(γ, a) = λ·V(γ)^{2/3}·(1 − a²/π²)^{−1/3}` with `V` the unsheared volume.
pub fn normalized_functional(d: &Domain) -> Result<f64> {
    let unsheared = Domain::new(d.ep, d.sp.with_a(0.0)?);
    let v = volume_quadrature(&unsheared)?.volume;
    Ok(normalized_from_volume(d.ep.lambda(), v, d.sp.a()))
}

pub fn normalized_from_volume(lambda: f64, volume: f64, a: f64) -> f64 {
    lambda * volume.powf(2.0 / 3.0) * (1.0 - a * a / (PI * PI)).powf(-1.0 / 3.0)
}

/// One kernel integral with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    /// The integrand is not integrable for these parameters; `value` is `+∞`.
    pub divergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelIntegrals {
    pub gamma: f64,
    pub omega: f64,
    pub k1: KernelValue,
    pub k2: KernelValue,
    pub h_plus: KernelValue,
    pub h_minus: KernelValue,
}

fn kernel_cfg() -> QuadConfig {
    QuadConfig { rel_tol: KERNEL_REL_TOL, abs_tol: 1e-15, max_intervals: 4000 }
}

/// `∫₀¹ arccos t / √(c − t²) dt` via `t = 1 − u²`, which removes the
/// square-root behaviour at `t = 1`.
fn arccos_kernel(c: f64) -> KernelValue {
    if c < 1.0 - 1e-12 {
        return KernelValue { value: f64::INFINITY, error: f64::INFINITY, converged: false, divergent: true };
    }
    let f = |u: f64| {
        let t = 1.0 - u * u;
        let den = (c - t * t).max(0.0);
        if den == 0.0 {
            // c = 1 and u → 0: arccos t / √(1 − t²) → 1.
            return 2.0 * u;
        }
        t.acos() / den.sqrt() * 2.0 * u
    };
    let r = quad::integrate(f, 0.0, 1.0, kernel_cfg());
    KernelValue { value: r.value, error: r.error, converged: r.converged, divergent: false }
}

/// `∫₀^{π/2} cos t / √(c − cos²t) dt`; logarithmically divergent at `c = 1`.
fn cosine_kernel(c: f64) -> KernelValue {
    if c <= 1.0 + 1e-12 {
        return KernelValue { value: f64::INFINITY, error: f64::INFINITY, converged: false, divergent: true };
    }
    let f = |t: f64| {
        let s = t.sin();
        t.cos() / (c - 1.0 + s * s).sqrt()
    };
    // Resolve the peak of width √(c − 1) near t = 0.
    let w = (c - 1.0).sqrt();
    let breaks: Vec<f64> = if w < 0.1 { vec![0.0, w, 10.0 * w, PI / 2.0] } else { vec![0.0, PI / 2.0] };
    let breaks: Vec<f64> = breaks.into_iter().filter(|&b| b <= PI / 2.0).collect();
    let r = quad::integrate_pieces(f, &breaks, kernel_cfg());
    KernelValue { value: r.value, error: r.error, converged: r.converged, divergent: false }
}

/// `I[K₁], I[K₂]` over `[0, 1)` and `I[H₊], I[H₋]` over `[0, π/2)`, with
///
/// ```text
/// K₁ = arccos t / √(γ²ω − t²)     K₂ = arccos t / √(ω/γ² − t²)
/// H₊ = cos t / √(ω/γ² − cos²t)    H₋ = cos t / √(ωγ² − cos²t)
/// ```
pub fn kernel_integrals(gamma: f64, ep: &EllipticityParams) -> Result<KernelIntegrals> {
    let sp = ShapeParams::new(gamma, 0.0, ep)?;
    let (g, w) = (sp.gamma(), ep.omega());
    let up = g * g * w;
    let down = w / (g * g);
    Ok(KernelIntegrals {
        gamma: g,
        omega: w,
        k1: arccos_kernel(up),
        k2: arccos_kernel(down),
        h_plus: cosine_kernel(down),
        h_minus: cosine_kernel(up),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(omega: f64, gamma: f64, a: f64) -> Domain {
        Domain::from_omega(omega, gamma, a).unwrap()
    }

    #[test]
    fn cube_contribution_is_exact() {
        let parts = patch_volumes(&dom(9.0, 1.0, 0.0), 1e-8);
        assert_eq!(parts[0].1.value, ALPHA.powi(3));
        assert!((parts[0].1.value - 3.875_785).abs() < 1e-6);
    }

    #[test]
    fn z_cap_matches_plain_double_integral() {
        // Full-face double integral with a fixed tensor Gauss–Legendre rule
        // (the argument never exceeds 2/3 here, so the integrand is smooth).
        let (nodes, weights) = gauss_legendre(40);
        let mut oracle = 0.0;
        for (xi, wi) in nodes.iter().zip(&weights) {
            for (yj, wj) in nodes.iter().zip(&weights) {
                let x = ALPHA * 0.5 * (xi + 1.0);
                let y = ALPHA * 0.5 * (yj + 1.0);
                oracle += wi * wj * 3.0 * ((x.cos() + y.cos()) / 3.0).asin();
            }
        }
        oracle *= (ALPHA * 0.5).powi(2);
        let parts = patch_volumes(&dom(9.0, 1.0, 0.0), 1e-10);
        assert!((parts[3].1.value - oracle).abs() < 1e-9, "{} vs {oracle}", parts[3].1.value);
    }

    /// Nodes and weights by Newton iteration on Legendre polynomials.
    fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
            }
            x[i] = z;
        }
        (x, w)
    }

    #[test]
    fn symmetric_patches_agree() {
        let parts = patch_volumes(&dom(9.0, 0.8, 0.0), 1e-9);
        let v = |p: Patch| parts[p.index()].1.value;
        assert!((v(Patch::X) - v(Patch::Y)).abs() < 1e-8);
        assert!((v(Patch::ZX) - v(Patch::YZ)).abs() < 1e-8);
    }

    #[test]
    fn patch_quadrature_matches_mc() {
        let d = dom(9.0, 0.8, 0.0);
        let parts = patch_volumes(&d, 1e-8);
        for (patch, r) in parts {
            let (v, se) = patch_volume_mc(&d, patch, 400_000, 17);
            if patch == Patch::C {
                assert!((v - r.value).abs() < 1e-12);
                continue;
            }
            assert!((v - r.value).abs() <= 4.0 * se, "{patch}: mc {v} ± {se}, quad {}", r.value);
        }
    }

    #[test]
    fn total_matches_mc() {
        let d = dom(9.0, 1.0, 0.0);
        let q = volume_quadrature(&d).unwrap();
        assert!((q.volume - 119.4948).abs() < 1e-3, "{}", q.volume);
        let m = volume_mc(&d, 1_000_000, 5).unwrap();
        assert!((q.volume - m.volume).abs() <= 4.0 * (m.error.powi(2) + q.error.powi(2)).sqrt());
    }

    #[test]
    fn sheared_quadrature_scales_by_determinant() {
        let v0 = volume_quadrature(&dom(9.0, 1.0, 0.0)).unwrap().volume;
        let v1 = volume_quadrature(&dom(9.0, 1.0, 1.0)).unwrap().volume;
        assert!((v1 - v0 * (1.0 - 1.0 / (PI * PI))).abs() < 1e-12 * v0);
    }

    #[test]
    fn normalized_functional_shear_ratio() {
        let n0 = normalized_functional(&dom(9.0, 1.0, 0.0)).unwrap();
        let n1 = normalized_functional(&dom(9.0, 1.0, 1.0)).unwrap();
        assert!((n1 / n0 - (1.0 - 1.0 / (PI * PI)).powf(-1.0 / 3.0)).abs() < 1e-12);
        let n2 = normalized_functional(&dom(9.0, 1.25, 0.0)).unwrap();
        assert!(n2 > n0);
    }

    #[test]
    fn normalized_functional_is_scale_invariant() {
        let v = volume_quadrature(&dom(9.0, 1.0, 0.0)).unwrap().volume;
        for t in [0.5_f64, 2.0, 3.7] {
            let n = normalized_from_volume(1.0 / (t * t), t.powi(3) * v, 0.0);
            assert!((n - normalized_from_volume(1.0, v, 0.0)).abs() < 1e-12 * n);
        }
    }

    #[test]
    fn derivative_needs_admissible_stencil() {
        let ep = EllipticityParams::from_omega(9.0).unwrap();
        assert!(volume_derivative(3.0, &ep, 1e-3).is_err());
        assert!(volume_derivative(1.0, &ep, 0.0).is_err());
    }

    fn closed_cosine(c: f64) -> f64 {
        (1.0 / (c - 1.0).sqrt()).asinh()
    }

    /// `∫₀¹ arccos t/√(c − t²) dt` after `t = cos θ`: `∫₀^{π/2} θ sin θ/√(c − cos²θ) dθ`,
    /// by composite Simpson on a fine grid (smooth for c > 1).
    fn arccos_oracle(c: f64) -> f64 {
        let n = 20_000;
        let h = (PI / 2.0) / n as f64;
        let f = |th: f64| th * th.sin() / (c - th.cos().powi(2)).sqrt();
        let mut s = f(0.0) + f(PI / 2.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn kernels_match_independent_forms() {
        let ep = EllipticityParams::from_omega(9.0).unwrap();
        for g in [0.6, 1.0, 1.67] {
            let k = kernel_integrals(g, &ep).unwrap();
            assert!((k.h_plus.value - closed_cosine(9.0 / (g * g))).abs() < 1e-10);
            assert!((k.h_minus.value - closed_cosine(9.0 * g * g)).abs() < 1e-10);
            assert!((k.k1.value - arccos_oracle(9.0 * g * g)).abs() < 1e-10);
            assert!((k.k2.value - arccos_oracle(9.0 / (g * g))).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_endpoints() {
        let ep = EllipticityParams::from_omega(9.0).unwrap();
        let top = kernel_integrals(3.0, &ep).unwrap();
        assert!(top.k1.value.is_finite() && !top.k1.divergent);
        assert!(top.h_plus.divergent);
        let bottom = kernel_integrals(1.0 / 3.0, &ep).unwrap();
        assert!(bottom.h_minus.divergent);
        assert!((bottom.k1.value - PI * PI / 8.0).abs() < 1e-9, "{:?}", bottom.k1);
        let one = kernel_integrals(1.0, &EllipticityParams::from_omega(1.0).unwrap()).unwrap();
        assert!(one.h_plus.divergent && one.h_minus.divergent);
    }

    #[test]
    fn kernel_monotonicity() {
        let ep = EllipticityParams::from_omega(9.0).unwrap();
        let grid = [0.6, 0.8, 1.0, 1.25, 1.67];
        let ks: Vec<KernelIntegrals> = grid.iter().map(|&g| kernel_integrals(g, &ep).unwrap()).collect();
        for w in ks.windows(2) {
            assert!(w[1].k1.value < w[0].k1.value);
            assert!(w[1].h_minus.value < w[0].h_minus.value);
            assert!(w[1].k2.value > w[0].k2.value);
            assert!(w[1].h_plus.value > w[0].h_plus.value);
        }
    }
}
