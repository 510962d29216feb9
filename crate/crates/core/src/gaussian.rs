//! Finite coherent ensembles approximating the complex-Gaussian input
//! `(1 / pi E) exp(-|z|^2 / E)`.
//!
//! The disk of radius `R` is tiled by annular sectors of diameter at most `2r`.
//! Each sector becomes one coherent amplitude carrying the Gaussian mass of the
//! sector, placed at the angular midpoint with squared modulus equal to the
//! sector's conditional mean energy. Mass outside the disk goes to amplitude 0.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{CoherentEnsemble, DiscretizationMeta};
use crate::error::{ensure_finite, Error, Result};
use crate::fock::CoherentAmplitude;

/// Patch count never exceeds `PATCH_COUNT_CONSTANT * (R / r)^2`.
pub const PATCH_COUNT_CONSTANT: f64 = 8.0;

/// Default limit on the number of patches built by [`discretize_to`].
pub const DEFAULT_MAX_PATCHES: usize = 1_000_000;

/// Share of the trace-distance budget given to the tail outside radius `R`.
pub const TAIL_BUDGET_SHARE: f64 = 0.05;

/// Annular sector `rho in [rho_lo, rho_hi)`, `theta in [theta_lo, theta_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub rho: [f64; 2],
    pub theta: [f64; 2],
}

impl Patch {
    pub fn contains(&self, z: Complex64) -> bool {
        let rho = z.norm();
        if rho < self.rho[0] || rho >= self.rho[1] {
            return false;
        }
        if self.theta[1] - self.theta[0] >= 2.0 * PI {
            return true;
        }
        let th = angle(z);
        th >= self.theta[0] && th < self.theta[1]
    }

    /// Largest distance between two points of the closed patch.
    ///
    /// The farthest pair lies on the boundary; the arcs are sampled densely and
    /// all four corners are included, which is exact for sectors up to a half turn.
    pub fn diameter(&self) -> f64 {
        let span = (self.theta[1] - self.theta[0]).min(2.0 * PI);
        let steps = 64;
        let mut pts = Vec::with_capacity(2 * (steps + 1) + 2);
        for &rho in &self.rho {
            for k in 0..=steps {
                let th = self.theta[0] + span * k as f64 / steps as f64;
                pts.push(Complex64::from_polar(rho, th));
            }
        }
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max((pts[i] - pts[j]).norm());
            }
        }
        best
    }

    /// Gaussian mass `(dtheta / 2 pi)(exp(-a/E) - exp(-b/E))` with `a, b` the squared radii.
    pub fn mass(&self, energy: f64) -> f64 {
        let (a, b) = (self.rho[0].powi(2), self.rho[1].powi(2));
        let frac = (self.theta[1] - self.theta[0]) / (2.0 * PI);
        frac * (-a / energy).exp() * (-(-(b - a) / energy).exp_m1())
    }

    /// Gaussian-weighted mean of `|z|^2` over the patch, normalized by its mass.
    pub fn conditional_energy(&self, energy: f64) -> f64 {
        let (a, b) = (self.rho[0].powi(2), self.rho[1].powi(2));
        let x = (b - a) / energy;
        // E (1 - x / (e^x - 1)) is the mean of an exponential truncated to [0, b - a]
        let excess = if x < 1e-4 {
            energy * (x / 2.0 - x * x / 12.0 + x.powi(4) / 720.0)
        } else {
            energy * (1.0 - x / x.exp_m1())
        };
        (a + excess).clamp(a, b)
    }

    /// Angular midpoint at the conditional-mean modulus.
    pub fn representative(&self, energy: f64) -> Complex64 {
        let mid = 0.5 * (self.theta[0] + self.theta[1]);
        Complex64::from_polar(self.conditional_energy(energy).sqrt(), mid)
    }
}

fn angle(z: Complex64) -> f64 {
    let th = z.im.atan2(z.re);
    if th < 0.0 {
        th + 2.0 * PI
    } else {
        th
    }
}

/// Tiling of the disk of radius `R` by annular sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchPartition {
    outer_radius: f64,
    fineness: f64,
    ring_width: f64,
    /// Index of the first patch of each annulus, plus a final end marker.
    ring_start: Vec<usize>,
    patches: Vec<Patch>,
}

fn ring_layout(outer_radius: f64, fineness: f64) -> (usize, f64, Vec<usize>) {
    let step = fineness * SQRT_2;
    let rings = ((outer_radius / step).ceil() as usize).max(1);
    let width = outer_radius / rings as f64;
    let sectors = (0..rings)
        .map(|k| ((2.0 * PI * (k + 1) as f64 * width / step).ceil() as usize).max(1))
        .collect();
    (rings, width, sectors)
}

/// Number of patches [`build_partition`] would produce, without building them.
pub fn patch_count(outer_radius: f64, fineness: f64) -> usize {
    if outer_radius <= 0.0 {
        return 0;
    }
    ring_layout(outer_radius, fineness.min(outer_radius))
        .2
        .iter()
        .sum()
}

/// Annuli of equal width at most `r sqrt 2`, each cut into sectors whose outer arc
/// is at most `r sqrt 2`; every patch has diameter at most `2r`.
pub fn build_partition(outer_radius: f64, fineness: f64) -> Result<PatchPartition> {
    ensure_finite("R", outer_radius)?;
    ensure_finite("r", fineness)?;
    if !(fineness > 0.0) {
        return Err(Error::OutOfRange(format!(
            "fineness r must be > 0, got {fineness}"
        )));
    }
    if !(outer_radius >= fineness) {
        return Err(Error::OutOfRange(format!(
            "need 0 < r <= R, got R = {outer_radius}, r = {fineness}"
        )));
    }
    let (rings, width, sectors) = ring_layout(outer_radius, fineness);
    let mut patches = Vec::with_capacity(sectors.iter().sum());
    let mut ring_start = Vec::with_capacity(rings + 1);
    for (k, &m) in sectors.iter().enumerate() {
        ring_start.push(patches.len());
        let lo = k as f64 * width;
        let hi = if k + 1 == rings {
            outer_radius
        } else {
            (k + 1) as f64 * width
        };
        let dth = 2.0 * PI / m as f64;
        for j in 0..m {
            let th_hi = if j + 1 == m {
                2.0 * PI
            } else {
                (j + 1) as f64 * dth
            };
            patches.push(Patch {
                rho: [lo, hi],
                theta: [j as f64 * dth, th_hi],
            });
        }
    }
    ring_start.push(patches.len());
    Ok(PatchPartition {
        outer_radius,
        fineness,
        ring_width: width,
        ring_start,
        patches,
    })
}

impl PatchPartition {
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn count(&self) -> usize {
        self.patches.len()
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn fineness(&self) -> f64 {
        self.fineness
    }

    /// Index of the patch containing `z`, or `None` when `|z| >= R`.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        let rho = z.norm();
        if rho >= self.outer_radius {
            return None;
        }
        let rings = self.ring_start.len() - 1;
        let k = ((rho / self.ring_width) as usize).min(rings - 1);
        // guard against rounding at ring boundaries
        let k = if rho < self.patches[self.ring_start[k]].rho[0] {
            k - 1
        } else {
            k
        };
        let k = if k + 1 < rings && rho >= self.patches[self.ring_start[k]].rho[1] {
            k + 1
        } else {
            k
        };
        let (start, end) = (self.ring_start[k], self.ring_start[k + 1]);
        let m = end - start;
        let j = ((angle(z) / (2.0 * PI) * m as f64) as usize).min(m - 1);
        let j = (j.saturating_sub(1)..(j + 2).min(m))
            .find(|&j| self.patches[start + j].contains(z))
            .unwrap_or(j);
        Some(start + j)
    }

    /// Largest patch diameter.
    pub fn diameter(&self) -> f64 {
        self.patches.iter().map(Patch::diameter).fold(0.0, f64::max)
    }
}

/// `2 (1 - e^{-R^2/E}) sqrt(1 - e^{-4 r^2}) + 2 e^{-R^2/E}`: trace-distance bound
/// between the Gaussian average state and the discretized one.
pub fn td_bound(outer_radius: f64, fineness: f64, energy: f64) -> f64 {
    let tail = (-outer_radius * outer_radius / energy).exp();
    let patch = (-(-4.0 * fineness * fineness).exp_m1()).sqrt();
    2.0 * (1.0 - tail) * patch + 2.0 * tail
}

/// Discretization with outer radius `R` and fineness `r` (clamped to `r <= R`).
/// `R = 0` gives the single amplitude 0.
pub fn discretize(energy: f64, outer_radius: f64, fineness: f64) -> Result<CoherentEnsemble> {
    ensure_finite("E", energy)?;
    if !(energy > 0.0) {
        return Err(Error::OutOfRange(format!(
            "energy E must be > 0, got {energy}"
        )));
    }
    ensure_finite("R", outer_radius)?;
    if !(outer_radius >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "outer radius R must be >= 0, got {outer_radius}"
        )));
    }
    if !(fineness > 0.0) {
        return Err(Error::OutOfRange(format!(
            "fineness r must be > 0, got {fineness}"
        )));
    }
    let fineness = fineness.min(outer_radius);
    let meta = DiscretizationMeta {
        energy,
        outer_radius,
        fineness,
    };
    if outer_radius == 0.0 {
        return Ok(
            CoherentEnsemble::single(CoherentAmplitude::new(Complex64::new(0.0, 0.0))?)
                .with_meta(meta),
        );
    }
    let partition = build_partition(outer_radius, fineness)?;
    let mut points = Vec::with_capacity(partition.count() + 1);
    let mut probs = Vec::with_capacity(partition.count() + 1);
    points.push(CoherentAmplitude::new(Complex64::new(0.0, 0.0))?);
    probs.push((-outer_radius * outer_radius / energy).exp());
    for patch in partition.patches() {
        let p = patch.mass(energy);
        if p > 0.0 {
            points.push(CoherentAmplitude::new(patch.representative(energy))?);
            probs.push(p);
        }
    }
    Ok(CoherentEnsemble::new(points, probs)?.with_meta(meta))
}

/// Outer radius and fineness meeting `td_bound <= delta`.
///
/// The tail term gets a [`TAIL_BUDGET_SHARE`] of the budget and the patch term the rest.
pub fn parameters_for(energy: f64, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!("delta must be > 0, got {delta}")));
    }
    if delta >= 2.0 {
        return Ok((0.0, 0.0));
    }
    let tail_budget = TAIL_BUDGET_SHARE * delta;
    let outer_radius = (energy * (2.0 / tail_budget).ln()).sqrt();
    let s = (1.0 - TAIL_BUDGET_SHARE) * delta / 2.0;
    let mut fineness = (-(-s * s).ln_1p() / 4.0).sqrt();
    while td_bound(outer_radius, fineness, energy) > delta {
        fineness *= 1.0 - 1e-9;
    }
    Ok((outer_radius, fineness))
}

/// Discretization with `td_bound <= delta`, rejecting when more than `max_patches`
/// patches would be needed.
pub fn discretize_to(energy: f64, delta: f64, max_patches: usize) -> Result<CoherentEnsemble> {
    ensure_finite("E", energy)?;
    if !(energy > 0.0) {
        return Err(Error::OutOfRange(format!(
            "energy E must be > 0, got {energy}"
        )));
    }
    let (outer_radius, fineness) = parameters_for(energy, delta)?;
    if outer_radius == 0.0 {
        return discretize(energy, 0.0, 1.0);
    }
    let count = patch_count(outer_radius, fineness);
    if count > max_patches {
        return Err(Error::CapExceeded {
            size: count as f64,
            cap: max_patches as f64,
        });
    }
    discretize(energy, outer_radius, fineness)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn td_bound_values() {
        assert!((td_bound(3.0, 0.2, 1.0) - 0.769193422366941).abs() < 1e-12);
        assert_eq!(td_bound(0.0, 0.3, 1.0), 2.0);
        assert!(td_bound(40.0, 0.0, 1.0) < 1e-300);
    }

    #[test]
    fn partition_geometry() {
        let p = build_partition(2.0, 0.5).unwrap();
        assert!(p.count() as f64 <= PATCH_COUNT_CONSTANT * 16.0);
        assert!(p.diameter() <= 1.0 + 1e-12);
        let single = build_partition(1.0, 1.0).unwrap();
        assert_eq!(single.ring_start.len(), 2);
        assert!(single.diameter() <= 2.0 + 1e-12);
    }

    #[test]
    fn probes_belong_to_exactly_one_patch() {
        let p = build_partition(2.0, 0.5).unwrap();
        for i in 0..81 {
            for j in 0..81 {
                let z =
                    Complex64::new(-2.0 + i as f64 * 0.05 + 1e-7, -2.0 + j as f64 * 0.05 + 1e-7);
                let owners: Vec<usize> = (0..p.count())
                    .filter(|&k| p.patches()[k].contains(z))
                    .collect();
                if z.norm() >= 2.0 {
                    assert!(owners.is_empty());
                    assert_eq!(p.locate(z), None);
                } else {
                    assert_eq!(owners.len(), 1, "{z}");
                    assert_eq!(p.locate(z), Some(owners[0]));
                }
            }
        }
    }

    #[test]
    fn discretize_basics() {
        let e = discretize(1.0, 3.0, 0.2).unwrap();
        assert!((e.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.energy() <= 1.0 + 1e-12);
        assert!(e.probs()[0] >= (-9.0f64).exp());
        let zero = discretize(1.0, 0.0, 0.1).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero.points()[0].abs2(), 0.0);
    }

    #[test]
    fn representatives_inside_patches() {
        let p = build_partition(3.0, 0.3).unwrap();
        for patch in p.patches() {
            let x = patch.representative(1.0);
            let (r2, lo, hi) = (x.norm_sqr(), patch.rho[0].powi(2), patch.rho[1].powi(2));
            assert!(r2 >= lo && r2 <= hi);
            assert!(patch.contains(x) || (r2 - hi).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_energy_matches_quadrature() {
        let patch = Patch {
            rho: [0.7, 1.1],
            theta: [0.0, 1.0],
        };
        let e = 1.3;
        let (a, b) = (0.49_f64, 1.21_f64);
        let steps = 200_000;
        let h = (b - a) / steps as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..steps {
            let u = a + (k as f64 + 0.5) * h;
            let w = (-u / e).exp();
            num += u * w;
            den += w;
        }
        assert!((patch.conditional_energy(e) - num / den).abs() < 1e-9);
    }

    #[test]
    fn energy_approaches_e() {
        let e = discretize(2.0, 12.0, 0.5).unwrap();
        assert!((e.energy() - 2.0).abs() < 1e-9);
        assert!(e.energy() <= 2.0 + 1e-12);
    }

    #[test]
    fn discretize_to_meets_budget() {
        for &d in &[1.5, 0.5, 0.2, 0.1] {
            let (rr, r) = parameters_for(1.0, d).unwrap();
            assert!(td_bound(rr, r, 1.0) <= d);
        }
        let trivial = discretize_to(1.0, 2.0, 10).unwrap();
        assert_eq!(trivial.len(), 1);
        let ens = discretize_to(1.0, 0.5, DEFAULT_MAX_PATCHES).unwrap();
        let m = ens.meta().unwrap();
        assert!(td_bound(m.outer_radius, m.fineness, m.energy) <= 0.5);
        assert!(ens.max_energy() <= m.outer_radius.powi(2));
        assert!(matches!(
            discretize_to(1.0, 1e-3, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }
}
