//! Batch verification suites. Each suite evaluates one identity or inequality
//! over deterministic samples and reports its worst case with a witness.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenfield::{self, Eigenfield, PatchEval};
use crate::error::{Error, Result};
use crate::geometry::{Domain, InterfaceId, Patch};
use crate::rng;
use crate::symmat::{self, EllipticityParams, SymMatrix3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Residual,
    C1,
    Boundary,
    ShearBound,
    Block,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Residual, Suite::C1, Suite::Boundary, Suite::ShearBound, Suite::Block];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Residual => "residual",
            Suite::C1 => "c1",
            Suite::Boundary => "boundary",
            Suite::ShearBound => "shear-bound",
            Suite::Block => "block",
        }
    }
}

/// Where the worst case of a check occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: [f64; 3],
    pub patch: Option<Patch>,
    pub interface: Option<InterfaceId>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Pass iff `statistic ≤ tolerance`.
    AtMost,
    /// Pass iff `statistic ≥ tolerance`.
    AtLeast,
    /// Pass iff `statistic > tolerance`.
    Above,
    /// Reported only; never fails.
    Report,
}

/// One worst-case statistic compared against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Option<Witness>,
    /// Number of samples the statistic was taken over.
    pub count: usize,
}

impl Check {
    fn new(name: &str, statistic: f64, bound: Bound, tolerance: f64, witness: Option<Witness>, count: usize) -> Self {
        let pass = match bound {
            Bound::AtMost => statistic <= tolerance,
            Bound::AtLeast => statistic >= tolerance,
            Bound::Above => statistic > tolerance,
            Bound::Report => true,
        };
        Check { name: name.to_string(), statistic, bound, tolerance, pass, witness, count }
    }
}

/// Parameters echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub omega: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
    pub a: f64,
    pub samples: usize,
    pub seed: u64,
}

impl ReportParams {
    fn new(d: &Domain, samples: usize, seed: u64) -> Self {
        ReportParams {
            omega: d.ep.omega(),
            lambda: d.ep.lambda(),
            big_lambda: d.ep.big_lambda(),
            gamma: d.sp.gamma(),
            a: d.sp.a(),
            samples,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub params: ReportParams,
    /// The first entry is the suite's headline statistic.
    pub checks: Vec<Check>,
    pub notices: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    fn new(suite: Suite, params: ReportParams, checks: Vec<Check>, notices: Vec<String>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport { suite, params, checks, notices, pass }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn headline(&self) -> &Check {
        &self.checks[0]
    }
}

/// Index and value of the maximum, first occurrence on ties.
fn argmax(xs: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        if best.is_none_or(|(_, b)| x > b || x.is_nan()) {
            best = Some((i, x));
        }
    }
    best
}

fn argmin(xs: &[f64]) -> Option<(usize, f64)> {
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    argmax(&neg).map(|(i, x)| (i, -x))
}

fn patch_notices(empty: &[Patch]) -> Vec<String> {
    empty.iter().map(|p| format!("patch {p} is empty for these parameters; stratum skipped")).collect()
}

/// `|−M⁺(D²u) − λu|` at stratified interior samples, plus the inertia table.
pub fn residual_suite(field: &Eigenfield, n: usize, seed: u64) -> Result<VerificationReport> {
    let d = &field.domain;
    let set = d.sample_stratified(n, seed, &Patch::ALL);
    let evals: Vec<Result<(PatchEval, f64)>> = set
        .points
        .par_iter()
        .map(|s| {
            let e = field.eval(s.point)?;
            let r = field.residual(&e)?;
            Ok((e, r))
        })
        .collect();
    let evals = evals.into_iter().collect::<Result<Vec<_>>>()?;
    let abs: Vec<f64> = evals.iter().map(|(_, r)| r.abs()).collect();
    let tol = 1e-9 * d.ep.lambda() * (2.0 * d.sp.gamma() + 1.0);
    let witness = argmax(&abs).map(|(i, v)| Witness {
        point: set.points[i].point,
        patch: Some(evals[i].0.patch.patch),
        interface: None,
        value: v,
    });
    let worst = witness.map_or(0.0, |w| w.value);
    let mismatches: Vec<usize> = (0..evals.len())
        .filter(|&i| evals[i].0.inertia != evals[i].0.patch.patch.inertia())
        .collect();
    let inertia_witness = mismatches.first().map(|&i| Witness {
        point: set.points[i].point,
        patch: Some(evals[i].0.patch.patch),
        interface: None,
        value: 1.0,
    });
    let checks = vec![
        Check::new("max-abs-residual", worst, Bound::AtMost, tol, witness, abs.len()),
        Check::new("inertia-mismatches", mismatches.len() as f64, Bound::AtMost, 0.0, inertia_witness, abs.len()),
    ];
    Ok(VerificationReport::new(Suite::Residual, ReportParams::new(d, n, seed), checks, patch_notices(&set.empty_patches)))
}

/// Value and gradient jumps of the two adjacent patch formulas on each
/// interface; normal-derivative jumps across the reflection planes.
pub fn c1_suite(field: &Eigenfield, n: usize, seed: u64) -> Result<VerificationReport> {
    let d = &field.domain;
    let mut value_jumps: Vec<(f64, Witness)> = Vec::new();
    let mut grad_jumps: Vec<(f64, Witness)> = Vec::new();
    let mut notices = Vec::new();
    for (idx, iface) in d.interfaces().into_iter().enumerate() {
        let mut r = rng::stream(seed, rng::stream_id(400 + idx as u32, 0));
        let mut taken = 0;
        let mut worst_v = (0.0, None);
        let mut worst_g = (0.0, None);
        for _ in 0..n {
            let Some(q) = iface.sample(&mut r) else { break };
            taken += 1;
            let (vj, gj, patch) = match iface.id.sides() {
                Some((a, b)) => {
                    let ea = field.eval_patch(a, q);
                    let eb = field.eval_patch(b, q);
                    let gj = (0..3).map(|i| (ea.gradient[i] - eb.gradient[i]).abs()).fold(0.0, f64::max);
                    ((ea.value - eb.value).abs(), gj, a)
                }
                None => {
                    let k = iface.id.normal_axis();
                    let id = d.classify(q)?.ok_or(Error::Outside { point: q })?;
                    let e = field.eval_patch(id.patch, q);
                    // The mirror side sees the same value and the negated normal derivative.
                    (0.0, 2.0 * e.gradient[k].abs(), id.patch)
                }
            };
            let w = |value| Witness { point: q, patch: Some(patch), interface: Some(iface.id), value };
            if vj > worst_v.0 || worst_v.1.is_none() {
                worst_v = (vj, Some(w(vj)));
            }
            if gj > worst_g.0 || worst_g.1.is_none() {
                worst_g = (gj, Some(w(gj)));
            }
        }
        if taken < n {
            notices.push(format!("interface {} yielded {taken} of {n} samples", iface.id));
        }
        if let (Some(wv), Some(wg)) = (worst_v.1, worst_g.1) {
            value_jumps.push((worst_v.0, wv));
            grad_jumps.push((worst_g.0, wg));
        }
    }
    let pick = |v: &[(f64, Witness)]| {
        let xs: Vec<f64> = v.iter().map(|x| x.0).collect();
        argmax(&xs).map(|(i, x)| (x, v[i].1))
    };
    let (vmax, vw) = pick(&value_jumps).map_or((0.0, None), |(x, w)| (x, Some(w)));
    let (gmax, gw) = pick(&grad_jumps).map_or((0.0, None), |(x, w)| (x, Some(w)));
    let mut checks = vec![
        Check::new("max-value-jump", vmax, Bound::AtMost, 1e-12, vw, n * value_jumps.len()),
        Check::new("max-gradient-jump", gmax, Bound::AtMost, 1e-12, gw, n * grad_jumps.len()),
    ];
    for ((v, wv), (g, wg)) in value_jumps.iter().zip(&grad_jumps) {
        let name = wv.interface.map_or("?", |i| i.name());
        checks.push(Check::new(&format!("value-jump {name}"), *v, Bound::AtMost, 1e-12, Some(*wv), n));
        checks.push(Check::new(&format!("gradient-jump {name}"), *g, Bound::AtMost, 1e-12, Some(*wg), n));
    }
    Ok(VerificationReport::new(Suite::C1, ReportParams::new(d, n, seed), checks, notices))
}

/// Boundary values not above this count as a closure gap.
pub const CLOSURE_GAP: f64 = 1e-6;
/// Interior samples are pulled towards the origin by this factor.
pub const SHRINK: f64 = 1.0 - 1e-6;

/// `|u|` at the boundary crossings of random rays, closure-gap witnesses, and
/// positivity just inside the boundary and at interior samples.
pub fn boundary_suite(field: &Eigenfield, n: usize, seed: u64) -> Result<VerificationReport> {
    let d = &field.domain;
    let crossings = d.boundary_scan(n, seed)?;
    let on: Vec<Result<f64>> = crossings.par_iter().map(|b| Ok(field.eval(b.inside_point())?.value)).collect();
    let on = on.into_iter().collect::<Result<Vec<_>>>()?;
    let abs: Vec<f64> = on.iter().map(|x| x.abs()).collect();
    let bw = |i: usize, value: f64| {
        let p = crossings[i].inside_point();
        Witness { point: p, patch: d.classify(p).ok().flatten().map(|id| id.patch), interface: None, value }
    };
    // A closure gap is a crossing where the ray leaves because the next
    // region's patch argument is off the principal branch and u is still
    // positive there. Every other crossing must sit on a zero level.
    let gap = |i: usize| on[i] > CLOSURE_GAP && d.excluded_by_branch(crossings[i].point_outside());
    let gaps: Vec<usize> = (0..on.len()).filter(|&i| gap(i)).collect();
    let regular: Vec<f64> = (0..on.len()).map(|i| if gap(i) { 0.0 } else { abs[i] }).collect();
    let (imax, vmax) = argmax(&regular).unwrap_or((0, 0.0));
    let gap_worst = gaps.iter().copied().max_by(|&i, &j| on[i].total_cmp(&on[j]).then(j.cmp(&i)));

    let mut inner: Vec<[f64; 3]> = crossings.iter().map(|b| b.inside_point().map(|x| x * SHRINK)).collect();
    inner.extend(d.sample_interior(n, seed).points.iter().map(|s| s.point.map(|x| x * SHRINK)));
    let vals: Vec<Result<f64>> = inner.par_iter().map(|&p| Ok(field.eval(p)?.value)).collect();
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let (jmin, umin) = argmin(&vals).unwrap_or((0, f64::INFINITY));
    let umin_witness = (!vals.is_empty()).then(|| Witness {
        point: inner[jmin],
        patch: d.classify(inner[jmin]).ok().flatten().map(|id| id.patch),
        interface: None,
        value: umin,
    });

    let mut notices = Vec::new();
    if !gaps.is_empty() {
        notices.push(format!(
            "{} of {} boundary points have u > {CLOSURE_GAP:e} (closure gap: a patch argument leaves [0, 1] there)",
            gaps.len(),
            on.len()
        ));
    }
    let checks = vec![
        Check::new(
            "max-abs-boundary-value",
            vmax,
            Bound::AtMost,
            1e-8,
            (!abs.is_empty()).then(|| bw(imax, vmax)),
            abs.len() - gaps.len(),
        ),
        Check::new(
            "closure-gaps",
            gaps.len() as f64,
            Bound::Report,
            0.0,
            gap_worst.map(|i| bw(i, on[i])),
            on.len(),
        ),
        Check::new("min-interior-value", if vals.is_empty() { 0.0 } else { umin }, Bound::Above, 0.0, umin_witness, vals.len()),
    ];
    Ok(VerificationReport::new(Suite::Boundary, ReportParams::new(d, n, seed), checks, notices))
}

/// `λπ²/(π² − a²)`, the lower bound for the sheared domain.
pub fn shear_lower_bound(ep: &EllipticityParams, a: f64) -> f64 {
    ep.lambda() / crate::geometry::det_shear(a)
}

/// `−M⁺(D²u_{γ,a}) − λπ²/(π²−a²)·u_{γ,a}` at sheared images of stratified samples.
pub fn shear_bound_suite(field: &Eigenfield, n: usize, seed: u64) -> Result<VerificationReport> {
    let d = &field.domain;
    let a = d.sp.a();
    let bound = shear_lower_bound(&d.ep, a);
    let shear = d.sp.shear();
    let set = d.sample_stratified(n, seed, &Patch::ALL);
    let xs: Vec<[f64; 3]> = set.points.iter().map(|s| shear.apply(s.point)).collect();
    let margins: Vec<Result<(Patch, f64)>> = xs
        .par_iter()
        .map(|&x| {
            let e = field.eval_sheared(x)?;
            Ok((e.patch.patch, -symmat::pucci_plus(&e.hessian, &d.ep)? - bound * e.value))
        })
        .collect();
    let margins = margins.into_iter().collect::<Result<Vec<_>>>()?;
    let m: Vec<f64> = margins.iter().map(|x| x.1).collect();
    let w = |i: usize, value: f64| Witness { point: xs[i], patch: Some(margins[i].0), interface: None, value };
    let (imin, mmin) = argmin(&m).unwrap_or((0, 0.0));
    let mut checks = vec![Check::new(
        "min-margin",
        mmin,
        Bound::AtLeast,
        -1e-9 * d.ep.lambda(),
        (!m.is_empty()).then(|| w(imin, mmin)),
        m.len(),
    )];
    let equality = a == 0.0 || d.ep.omega() == 1.0;
    if equality {
        let abs: Vec<f64> = m.iter().map(|x| x.abs()).collect();
        let (i, v) = argmax(&abs).unwrap_or((0, 0.0));
        checks.push(Check::new("max-abs-margin", v, Bound::AtMost, 1e-10, (!abs.is_empty()).then(|| w(i, v)), abs.len()));
    } else {
        let xcap: Vec<usize> = (0..m.len()).filter(|&i| margins[i].0 == Patch::X).collect();
        let vals: Vec<f64> = xcap.iter().map(|&i| m[i]).collect();
        let (j, v) = argmax(&vals).unwrap_or((0, f64::NEG_INFINITY));
        checks.push(Check::new(
            "x-cap-strictness",
            v,
            Bound::Above,
            0.0,
            (!vals.is_empty()).then(|| w(xcap[j], v)),
            vals.len(),
        ));
    }
    Ok(VerificationReport::new(
        Suite::ShearBound,
        ReportParams::new(d, n, seed),
        checks,
        patch_notices(&set.empty_patches),
    ))
}

/// Eigenvalues of a symmetric 2×2 matrix, larger first, by the quadratic formula.
fn sym2_eigen(m: [[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half = 0.5 * (m[0][0] - m[1][1]);
    let rad = half.hypot(m[0][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if mean >= 0.0 {
        let big = mean + rad;
        (big, if big != 0.0 { det / big } else { 0.0 })
    } else {
        let big = mean - rad;
        (det / big, big)
    }
}

/// Block-spectrum identities for random `(p, q, a)`.
/// The shape parameters of `d` are only echoed; `a` is drawn at random.
pub fn block_suite(d: &Domain, n: usize, seed: u64) -> Result<VerificationReport> {
    let mut r = rng::stream(seed, rng::stream_id(500, 0));
    let mut worst = [(0.0_f64, None::<Witness>); 4];
    for _ in 0..n {
        let p: f64 = r.gen_range(-10.0..10.0);
        let q: f64 = r.gen_range(-10.0..10.0);
        let a: f64 = r.gen_range(-0.999 * PI..0.999 * PI);
        let sp = d.sp.with_a(a)?;
        let k2 = sp.kappa().powi(2);
        let b = eigenfield::block_spectrum(p, q, a)?;
        let (dp, dm) = sym2_eigen(eigenfield::block_matrix(p, q, a)?);
        let scale = b.mu_plus.abs().max(b.mu_minus.abs());
        let errs = [
            (b.mu_plus + b.mu_minus - k2 * (p + q)).abs() / (k2 * p.abs().max(q.abs())),
            (b.mu_plus * b.mu_minus - k2 * p * q).abs() / (k2 * p * q).abs(),
            (b.mu_plus - dp).abs().max((b.mu_minus - dm).abs()) / scale,
            {
                // 1 − β cancels as |a| → π (relative loss ≈ κ²·ε), so the
                // identity is checked on a separate draw with |a| ≤ 0.9π.
                let t = d.sp.with_a(0.9 * a / 0.999)?;
                (t.kappa().powi(2) * (1.0 - t.beta()) / 2.0 - 1.0).abs()
            },
        ];
        for (slot, e) in worst.iter_mut().zip(errs) {
            if e > slot.0 || slot.1.is_none() {
                *slot = (e, Some(Witness { point: [p, q, a], patch: None, interface: None, value: e }));
            }
        }
    }
    let names = ["trace-rel-error", "determinant-rel-error", "closed-form-vs-direct", "kappa-beta-identity"];
    let tols = [1e-12, 1e-12, 1e-12, 1e-14];
    let checks = (0..4).map(|i| Check::new(names[i], worst[i].0, Bound::AtMost, tols[i], worst[i].1, n)).collect();
    Ok(VerificationReport::new(Suite::Block, ReportParams::new(d, n, seed), checks, vec!["witness point holds (p, q, a)".into()]))
}

/// Infimum over `points` of `−M⁺(H)/value`: the best constant `μ` with
/// `−M⁺(D²ψ) ≥ μψ` at the samples, hence a sampled lower bound for the
/// principal half-eigenvalue.
pub fn supersolution_bound<F>(field: F, points: &[[f64; 3]], ep: &EllipticityParams) -> Result<f64>
where
    F: Fn([f64; 3]) -> Result<(f64, SymMatrix3)> + Sync,
{
    let ratios: Vec<Result<f64>> = points
        .par_iter()
        .map(|&p| {
            let (value, h) = field(p)?;
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::CertificateInvalid { point: p, value });
            }
            Ok(-symmat::pucci_plus(&h, ep)? / value)
        })
        .collect();
    let mut best = f64::INFINITY;
    for r in ratios {
        best = best.min(r?);
    }
    Ok(best)
}

/// Runs the five suites with shared sample count and seed.
pub fn run_all(field: &Eigenfield, n: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    Ok(vec![
        residual_suite(field, n, seed)?,
        c1_suite(field, n.min(10_000), seed)?,
        boundary_suite(field, n.min(10_000), seed)?,
        shear_bound_suite(field, n, seed)?,
        block_suite(&field.domain, n.min(10_000), seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenfield::{Mutation, MutationKind};
    use crate::geometry::ALPHA;

    fn field(omega: f64, gamma: f64, a: f64) -> Eigenfield {
        Eigenfield::new(Domain::from_omega(omega, gamma, a).unwrap())
    }

    fn mutated(omega: f64, gamma: f64, a: f64, patch: Option<Patch>, axis: usize, kind: MutationKind, delta: f64) -> Eigenfield {
        Eigenfield::with_mutation(Domain::from_omega(omega, gamma, a).unwrap(), Mutation { patch, axis, kind, delta })
    }

    #[test]
    fn residual_passes_and_witness_reevaluates() {
        let f = field(9.0, 1.0, 0.0);
        let rep = residual_suite(&f, 20_000, 7).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.headline().statistic <= 1e-10);
        let w = rep.headline().witness.unwrap();
        let e = f.eval(w.point).unwrap();
        assert!((f.residual(&e).unwrap().abs() - w.value).abs() <= 1e-13);
        assert!(residual_suite(&field(1.0, 1.0, 0.0), 5000, 1).unwrap().pass);
    }

    #[test]
    fn residual_detects_mutations() {
        for kind in [MutationKind::Quadratic, MutationKind::SineRate] {
            let f = mutated(9.0, 1.0, 0.0, Some(Patch::X), 0, kind, 1e-3);
            let rep = residual_suite(&f, 5000, 7).unwrap();
            assert!(!rep.pass, "{kind:?}");
            assert!(rep.headline().witness.unwrap().value > 0.0);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let f = field(9.0, 0.8, 0.0);
        assert_eq!(residual_suite(&f, 3000, 3).unwrap(), residual_suite(&f, 3000, 3).unwrap());
        assert_eq!(boundary_suite(&f, 500, 3).unwrap(), boundary_suite(&f, 500, 3).unwrap());
    }

    #[test]
    fn c1_passes_and_detects_mutations() {
        let rep = c1_suite(&field(9.0, 0.8, 0.0), 2000, 5).unwrap();
        assert!(rep.pass, "{:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert_eq!(rep.checks.len(), 2 + 2 * 12);
        for kind in [MutationKind::Amplitude, MutationKind::SineRate] {
            let f = mutated(9.0, 0.8, 0.0, Some(Patch::Z), 2, kind, 1e-3);
            assert!(!c1_suite(&f, 500, 5).unwrap().pass, "{kind:?}");
        }
        let f = mutated(9.0, 0.8, 0.0, Some(Patch::ZX), 1, MutationKind::Amplitude, 1e-3);
        assert!(!c1_suite(&f, 500, 5).unwrap().pass);
    }

    #[test]
    fn cube_cap_normal_derivative() {
        let f = field(9.0, 0.8, 0.0);
        let q = [0.3, 0.9, ALPHA];
        assert_eq!(f.eval_patch(Patch::C, q).gradient[2], -1.0);
        assert_eq!(f.eval_patch(Patch::Z, q).gradient[2], -1.0);
    }

    #[test]
    fn boundary_closed_and_open_regimes() {
        let rep = boundary_suite(&field(9.0, 1.0, 0.0), 2000, 9).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.check("closure-gaps").unwrap().statistic, 0.0);
        // Gaps are reported with a witness but do not fail the suite.
        let rep = boundary_suite(&field(1.0, 1.0, 0.0), 2000, 9).unwrap();
        assert!(rep.pass, "{rep:?}");
        let gaps = rep.check("closure-gaps").unwrap();
        assert!(gaps.statistic > 0.0 && gaps.witness.unwrap().value > CLOSURE_GAP);
        assert!(!rep.notices.is_empty());
        let f = mutated(9.0, 1.0, 0.0, Some(Patch::Z), 0, MutationKind::Amplitude, 1e-3);
        assert!(!boundary_suite(&f, 2000, 9).unwrap().pass);
    }

    #[test]
    fn closure_gap_at_cap_ceiling_when_omega_is_one() {
        let f = field(1.0, 1.0, 0.0);
        let b = f.domain.boundary_along([0.0, 0.0, 1.0]).unwrap();
        // The Z-cap argument is 2 above the face centre, so the column is
        // excluded and the ray leaves through the cube face z = α.
        assert!((b.point[2] - ALPHA).abs() < 1e-11);
        let u = f.eval(b.inside_point()).unwrap().value;
        assert!((u - 2.0).abs() < 1e-9, "{u}");
        let corner = f.domain.boundary_along([1.0, 1.0, 1.0]).unwrap();
        assert!(f.eval(corner.inside_point()).unwrap().value.abs() <= 1e-8);
    }

    #[test]
    fn shear_bound_cases() {
        let rep = shear_bound_suite(&field(9.0, 1.0, 0.0), 5000, 2).unwrap();
        assert!(rep.pass && rep.check("max-abs-margin").is_some(), "{rep:?}");
        let rep = shear_bound_suite(&field(1.0, 1.0, 1.0), 5000, 2).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = shear_bound_suite(&field(9.0, 1.0, 1.0), 5000, 2).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.check("x-cap-strictness").unwrap().statistic > 0.0);
        let f = mutated(9.0, 1.0, 1.0, Some(Patch::Z), 2, MutationKind::SineRate, 1e-3);
        assert!(!shear_bound_suite(&f, 5000, 2).unwrap().pass);
        let f = mutated(9.0, 1.0, 1.0, Some(Patch::C), 0, MutationKind::Quadratic, 1e-3);
        assert!(!shear_bound_suite(&f, 5000, 2).unwrap().pass);
    }

    #[test]
    fn block_identities() {
        let rep = block_suite(&field(9.0, 1.0, 0.0).domain, 10_000, 4).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn supersolution_bounds() {
        let f = field(9.0, 1.0, 0.0);
        let pts: Vec<[f64; 3]> = f.domain.sample_stratified(5000, 1, &Patch::ALL).points.iter().map(|s| s.point).collect();
        let ep = f.domain.ep;
        let mu = supersolution_bound(|p| f.eval(p).map(|e| (e.value, e.hessian)), &pts, &ep).unwrap();
        assert!((mu - 1.0).abs() < 1e-9);
        let mu2 = supersolution_bound(|p| f.eval(p).map(|e| (2.0 * e.value, e.hessian.scale(2.0))), &pts, &ep).unwrap();
        assert!((mu2 - mu).abs() < 1e-12);
        let g = field(9.0, 1.0, 1.0);
        let xs: Vec<[f64; 3]> = pts.iter().map(|&p| g.domain.sp.shear().apply(p)).collect();
        let mu3 = supersolution_bound(|x| g.eval_sheared(x).map(|e| (e.value, e.hessian)), &xs, &ep).unwrap();
        assert!(mu3 >= shear_lower_bound(&ep, 1.0) - 1e-9);
        let bad = supersolution_bound(|_| Ok((-1.0, SymMatrix3::identity())), &pts[..1], &ep);
        assert!(matches!(bad, Err(Error::CertificateInvalid { .. })));
    }
}
