//! Deterministic point sampling inside the domain and on its boundary.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Domain, Patch, PatchId};
use crate::error::{Error, Result};
use crate::rng;

/// An interior sample with its patch classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub point: [f64; 3],
    pub id: PatchId,
}

/// Samples plus the patches that turned out to be empty.
#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub points: Vec<SamplePoint>,
    pub empty_patches: Vec<Patch>,
}

/// A crossing of the boundary along a ray from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub direction: [f64; 3],
    /// Midpoint of the final bisection bracket.
    pub point: [f64; 3],
    /// Last parameter known to be inside.
    pub t_inside: f64,
    /// First parameter known to be outside.
    pub t_outside: f64,
}

impl BoundaryPoint {
    pub fn inside_point(&self) -> [f64; 3] {
        self.direction.map(|d| d * self.t_inside)
    }

    pub fn point_outside(&self) -> [f64; 3] {
        self.direction.map(|d| d * self.t_outside)
    }
}

const MAX_MISSES_PER_HIT: usize = 20_000;

fn random_octant(rng: &mut ChaCha8Rng, q: [f64; 3]) -> ([f64; 3], [i8; 3]) {
    let bits: u8 = rng.gen();
    let mut p = q;
    let mut octant = [1i8; 3];
    for axis in 0..3 {
        if bits & (1 << axis) != 0 {
            p[axis] = -q[axis];
            octant[axis] = -1;
        }
    }
    (p, octant)
}

fn uniform_in_box(rng: &mut ChaCha8Rng, lo: [f64; 3], hi: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|d| lo[d] + (hi[d] - lo[d]) * rng.gen::<f64>())
}

impl Domain {
    /// Uniform samples over the full (unsheared) domain: rejection inside the
    /// first-octant box followed by a random reflection.
    pub fn sample_interior(&self, n: usize, seed: u64) -> SampleSet {
        let hi = self.half_extents();
        let chunks = rng::chunk_lengths(n);
        let points: Vec<SamplePoint> = chunks
            .par_iter()
            .enumerate()
            .map(|(c, &len)| {
                let mut r = rng::stream(seed, rng::stream_id(0, c));
                let mut out = Vec::with_capacity(len);
                while out.len() < len {
                    let q = uniform_in_box(&mut r, [0.0; 3], hi);
                    if let Ok(Some(id)) = self.classify(q) {
                        let (point, octant) = random_octant(&mut r, q);
                        out.push(SamplePoint { point, id: PatchId { patch: id.patch, octant } });
                    }
                }
                out
            })
            .flatten()
            .collect();
        SampleSet { points, empty_patches: Vec::new() }
    }

    /// Stratified samples: `n` points shared evenly among `patches`, each
    /// drawn uniformly from its patch by rejection inside the patch box.
    pub fn sample_stratified(&self, n: usize, seed: u64, patches: &[Patch]) -> SampleSet {
        let mut set = SampleSet::default();
        if patches.is_empty() {
            return set;
        }
        let base = n / patches.len();
        let extra = n % patches.len();
        for (slot, &patch) in patches.iter().enumerate() {
            let quota = base + usize::from(slot < extra);
            match self.sample_patch(patch, quota, seed) {
                Some(mut pts) => set.points.append(&mut pts),
                None => set.empty_patches.push(patch),
            }
        }
        set
    }

    /// `None` when the patch is empty for these parameters.
    fn sample_patch(&self, patch: Patch, n: usize, seed: u64) -> Option<Vec<SamplePoint>> {
        let (lo, hi) = self.patch_box(patch)?;
        let chunks = rng::chunk_lengths(n);
        let label = 1 + patch.index() as u32;
        let chunked: Vec<Option<Vec<SamplePoint>>> = chunks
            .par_iter()
            .enumerate()
            .map(|(c, &len)| {
                let mut r = rng::stream(seed, rng::stream_id(label, c));
                let mut out = Vec::with_capacity(len);
                let mut misses = 0usize;
                while out.len() < len {
                    let q = uniform_in_box(&mut r, lo, hi);
                    match self.classify(q) {
                        Ok(Some(id)) if id.patch == patch => {
                            let (point, octant) = random_octant(&mut r, q);
                            out.push(SamplePoint { point, id: PatchId { patch, octant } });
                            misses = 0;
                        }
                        _ => {
                            misses += 1;
                            if misses > MAX_MISSES_PER_HIT {
                                return None;
                            }
                        }
                    }
                }
                Some(out)
            })
            .collect();
        let mut all = Vec::with_capacity(n);
        for chunk in chunked {
            all.extend(chunk?);
        }
        Some(all)
    }

    /// Bisects `t ↦ inside(t·dir)` on `[0, t_max]` to bracket width `1e-12`.
    pub fn bisect_ray<F: Fn([f64; 3]) -> bool>(inside: F, dir: [f64; 3], t_max: f64) -> Result<BoundaryPoint> {
        let at = |t: f64| dir.map(|d| d * t);
        if !inside([0.0; 3]) {
            return Err(Error::InvalidInput("ray origin is not inside the domain".into()));
        }
        if inside(at(t_max)) {
            return Err(Error::SolverFailure(format!("direction {dir:?} never leaves the bounding box")));
        }
        let (mut lo, mut hi) = (0.0_f64, t_max);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(BoundaryPoint { direction: dir, point: at(0.5 * (lo + hi)), t_inside: lo, t_outside: hi })
    }

    /// Boundary crossing along a given ray from the origin.
    pub fn boundary_along(&self, dir: [f64; 3]) -> Result<BoundaryPoint> {
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid direction {dir:?}")));
        }
        let dir = dir.map(|x| x / norm);
        let e = self.half_extents();
        let t_max = 1.0 + (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        Domain::bisect_ray(|p| self.contains(p), dir, t_max)
    }

    /// Boundary crossings along `n` uniformly random directions.
    pub fn boundary_scan(&self, n: usize, seed: u64) -> Result<Vec<BoundaryPoint>> {
        let chunks = rng::chunk_lengths(n);
        let per_chunk: Vec<Result<Vec<BoundaryPoint>>> = chunks
            .par_iter()
            .enumerate()
            .map(|(c, &len)| {
                let mut r = rng::stream(seed, rng::stream_id(100, c));
                (0..len)
                    .map(|_| {
                        let z: f64 = r.gen_range(-1.0..=1.0);
                        let phi: f64 = r.gen_range(0.0..2.0 * PI);
                        let rho = (1.0 - z * z).max(0.0).sqrt();
                        self.boundary_along([rho * phi.cos(), rho * phi.sin(), z])
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(n);
        for chunk in per_chunk {
            out.extend(chunk?);
        }
        Ok(out)
    }
}
