//! Monte Carlo check of the covering bound for coherent ensembles seen by the
//! eavesdropper.
//!
//! A trial draws `L` i.i.d. sequences from the `n`-fold input distribution, forms
//! the uniform average of their eavesdropper outputs and measures its trace
//! distance to the true average output `sigma^{(x) n}`. The concentration bound
//! `min(1, 2D exp(-eps^3 L d / (4D)))` is evaluated with `D = 2^{n (S(sigma) + delta)}`
//! and `d = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::fock::{
    coherent_vector, hermitian_eigenvalues, CoherentAmplitude, FockCutoff, StateVector,
};
use crate::gram::{gram_matrix, mixture_entropy, mixture_trace_norm};
use crate::rng::stream_rng;

/// Largest matrix dimension used by either distance method.
pub const DIMENSION_CAP: usize = 4096;

/// Largest `L * trials`.
pub const SAMPLE_CAP: u64 = 10_000_000;

/// Failure-probability bounds, natural-exponent and base-2 forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    /// `min(1, 2D exp(-eps^3 L d / (4D)))`.
    pub natural: f64,
    /// `min(1, 2D 2^(-eps^3 L d / (4D)))`.
    pub base2: f64,
}

/// Upper bound on `Pr{||rho - rho_L||_1 > 30 eps^(1/4)}` for `L` random draws.
pub fn covering_bound(eps: f64, big_d: f64, small_d: f64, l: u64) -> Result<CoveringBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    if !(small_d > 0.0 && small_d < big_d) || !big_d.is_finite() {
        return Err(Error::OutOfRange(format!(
            "need 0 < d < D, got d = {small_d}, D = {big_d}"
        )));
    }
    if l == 0 {
        return Err(Error::OutOfRange(
            "fake ensemble size L must be >= 1".into(),
        ));
    }
    let exponent = eps.powi(3) * l as f64 * small_d / (4.0 * big_d);
    let ln_prefactor = (2.0 * big_d).ln();
    Ok(CoveringBound {
        natural: (ln_prefactor - exponent).exp().min(1.0),
        base2: (ln_prefactor - exponent * std::f64::consts::LN_2)
            .exp()
            .min(1.0),
    })
}

/// Parameters of a covering experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    /// Eavesdropper amplitude transmission.
    pub eta: f64,
    /// Block length.
    pub n: usize,
    /// Fake ensemble size `|L|`.
    pub l: u64,
    pub trials: usize,
    pub eps: f64,
    /// Slack in `D = 2^{n (S + delta)}`.
    pub delta: f64,
    pub cutoff: FockCutoff,
    pub seed: u64,
}

impl CoveringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::OutOfRange(format!(
                "eta = {} not in [0, 1]",
                self.eta
            )));
        }
        if self.n == 0 || self.l == 0 || self.trials == 0 {
            return Err(Error::OutOfRange("n, L and trials must be >= 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::OutOfRange(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::OutOfRange(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        let samples = self.l.saturating_mul(self.trials as u64);
        if samples > SAMPLE_CAP {
            return Err(Error::CapExceeded {
                size: samples as f64,
                cap: SAMPLE_CAP as f64,
            });
        }
        Ok(())
    }
}

/// How trace distances are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMethod {
    /// Dense `(cutoff+1)^n` product-space matrices.
    Explicit,
    /// Gram matrix of the `|support|^n` pure product states.
    Gram,
}

/// Per-trial record, one CSV row each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringTrial {
    pub trial: usize,
    pub distance: f64,
    pub fake_trace: f64,
    pub failed: bool,
}

/// Result of [`run_covering_trials`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringOutcome {
    pub config: CoveringConfig,
    pub method: DistanceMethod,
    pub distances: Vec<f64>,
    pub fake_traces: Vec<f64>,
    /// `30 eps^(1/4)`.
    pub threshold: f64,
    pub empirical_failure_rate: f64,
    /// Standard error of the failure rate.
    pub failure_std_error: f64,
    pub bound_value: f64,
    pub bound_base2: f64,
    pub mean_distance: f64,
    /// `S(sigma)` of the single-mode eavesdropper average, in bits.
    pub output_entropy: f64,
    pub log2_big_d: f64,
    pub small_d: f64,
}

impl CoveringOutcome {
    pub fn trials(&self) -> Vec<CoveringTrial> {
        self.distances
            .iter()
            .zip(&self.fake_traces)
            .enumerate()
            .map(|(trial, (&distance, &fake_trace))| CoveringTrial {
                trial,
                distance,
                fake_trace,
                failed: distance > self.threshold,
            })
            .collect()
    }

    /// Empirical failure rate within three standard errors of the bound.
    pub fn within_bound(&self) -> bool {
        self.empirical_failure_rate <= self.bound_value + 3.0 * self.failure_std_error
    }
}

/// Support of the input after dropping zero-probability points.
fn support(input: &CoherentEnsemble) -> (Vec<CoherentAmplitude>, Vec<f64>) {
    input
        .points()
        .iter()
        .zip(input.probs())
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, &p)| (*x, p))
        .unzip()
}

fn sequence_amplitudes(idx: usize, k: usize, n: usize, outputs: &[Complex64]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut rem = idx;
    for slot in v.iter_mut().rev() {
        *slot = outputs[rem % k];
        rem /= k;
    }
    v
}

fn kron_vec(
    a: &nalgebra::DVector<Complex64>,
    b: &nalgebra::DVector<Complex64>,
) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_fn(a.len() * b.len(), |i, _| a[i / b.len()] * b[i % b.len()])
}

/// Pick the cheaper exact method, or reject when both exceed [`DIMENSION_CAP`].
fn choose_method(k: usize, cutoff: FockCutoff, n: usize) -> Result<DistanceMethod> {
    let gram_dim = (k as f64).powi(n as i32);
    let dense_dim = (cutoff.dim() as f64).powi(n as i32);
    let best = gram_dim.min(dense_dim);
    if best > DIMENSION_CAP as f64 {
        return Err(Error::CapExceeded {
            size: best,
            cap: DIMENSION_CAP as f64,
        });
    }
    Ok(if gram_dim <= dense_dim {
        DistanceMethod::Gram
    } else {
        DistanceMethod::Explicit
    })
}

/// Runs `trials` independent fake-ensemble draws, in parallel.
///
/// Trial `t` uses the generator stream `(seed, t)`, so results do not depend on
/// scheduling.
pub fn run_covering_trials(
    input: &CoherentEnsemble,
    config: &CoveringConfig,
) -> Result<CoveringOutcome> {
    let method = choose_method(support(input).0.len(), config.cutoff, config.n)?;
    run_covering_trials_with(input, config, method)
}

/// As [`run_covering_trials`] with a forced distance method.
pub fn run_covering_trials_with(
    input: &CoherentEnsemble,
    config: &CoveringConfig,
    method: DistanceMethod,
) -> Result<CoveringOutcome> {
    config.validate()?;
    let (points, probs) = support(input);
    let k = points.len();
    let n = config.n;
    let outputs: Vec<Complex64> = points
        .iter()
        .map(|x| x.scaled(config.eta).value())
        .collect();
    let num_seq = k
        .checked_pow(n as u32)
        .filter(|&s| s <= DIMENSION_CAP || method == DistanceMethod::Explicit);

    // single-mode output entropy for D
    let single: Vec<Vec<Complex64>> = outputs.iter().map(|&z| vec![z]).collect();
    let output_entropy = mixture_entropy(&probs, &gram_matrix(&single));
    let log2_big_d = n as f64 * (output_entropy + config.delta);
    let bound = covering_bound(config.eps, log2_big_d.exp2(), 1.0, config.l)?;

    let sampler = rand::distributions::WeightedIndex::new(&probs).expect("validated ensemble");
    let draw_counts = |trial: usize| -> Vec<(usize, u64)> {
        let mut rng = stream_rng(config.seed, trial as u64);
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..config.l {
            let idx = (0..n).fold(0usize, |acc, _| acc * k + sampler.sample(&mut rng));
            *counts.entry(idx).or_insert(0u64) += 1;
        }
        counts.into_iter().collect()
    };

    let distance_of: Box<dyn Fn(&[(usize, u64)]) -> Result<(f64, f64)> + Sync> = match method {
        DistanceMethod::Gram => {
            let num_seq = num_seq.ok_or(Error::CapExceeded {
                size: (k as f64).powi(n as i32),
                cap: DIMENSION_CAP as f64,
            })?;
            let states: Vec<Vec<Complex64>> = (0..num_seq)
                .map(|i| sequence_amplitudes(i, k, n, &outputs))
                .collect();
            let seq_probs: Vec<f64> = (0..num_seq)
                .map(|i| {
                    let mut rem = i;
                    let mut p = 1.0;
                    for _ in 0..n {
                        p *= probs[rem % k];
                        rem /= k;
                    }
                    p
                })
                .collect();
            let gram = gram_matrix(&states);
            let l = config.l as f64;
            Box::new(move |counts: &[(usize, u64)]| {
                let mut coeffs = seq_probs.clone();
                for &(idx, c) in counts {
                    coeffs[idx] -= c as f64 / l;
                }
                Ok((mixture_trace_norm(&coeffs, &gram), 1.0))
            })
        }
        DistanceMethod::Explicit => {
            let dim = (config.cutoff.dim() as f64).powi(n as i32);
            if dim > DIMENSION_CAP as f64 {
                return Err(Error::CapExceeded {
                    size: dim,
                    cap: DIMENSION_CAP as f64,
                });
            }
            let vecs: Vec<StateVector> = outputs
                .iter()
                .map(|&z| coherent_vector(CoherentAmplitude::new(z)?, config.cutoff))
                .collect::<Result<_>>()?;
            let d1 = config.cutoff.dim();
            let mut sigma1 = DMatrix::<Complex64>::zeros(d1, d1);
            for (v, &p) in vecs.iter().zip(&probs) {
                sigma1.ger(
                    Complex64::new(p, 0.0),
                    v.amplitudes(),
                    &v.amplitudes().conjugate(),
                    Complex64::new(1.0, 0.0),
                );
            }
            let mut sigma = sigma1.clone();
            for _ in 1..n {
                sigma = sigma.kronecker(&sigma1);
            }
            let l = config.l as f64;
            Box::new(move |counts: &[(usize, u64)]| {
                let mut diff = sigma.clone();
                let mut fake_trace = 0.0;
                for &(idx, c) in counts {
                    let mut rem = idx;
                    let mut syms = vec![0usize; n];
                    for slot in syms.iter_mut().rev() {
                        *slot = rem % k;
                        rem /= k;
                    }
                    let mut v = vecs[syms[0]].amplitudes().clone();
                    for &s in &syms[1..] {
                        v = kron_vec(&v, vecs[s].amplitudes());
                    }
                    let w = c as f64 / l;
                    fake_trace += w * v.norm_squared();
                    diff.ger(
                        Complex64::new(-w, 0.0),
                        &v,
                        &v.conjugate(),
                        Complex64::new(1.0, 0.0),
                    );
                }
                let dist = hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum();
                Ok((dist, fake_trace))
            })
        }
    };

    let results: Vec<(f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|t| distance_of(&draw_counts(t)))
        .collect::<Result<_>>()?;
    let (distances, fake_traces): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
    let threshold = 30.0 * config.eps.powf(0.25);
    let trials = distances.len() as f64;
    let failures = distances.iter().filter(|&&d| d > threshold).count() as f64;
    let rate = failures / trials;
    Ok(CoveringOutcome {
        config: *config,
        method,
        mean_distance: distances.iter().sum::<f64>() / trials,
        distances,
        fake_traces,
        threshold,
        empirical_failure_rate: rate,
        failure_std_error: (rate * (1.0 - rate) / trials).sqrt(),
        bound_value: bound.natural,
        bound_base2: bound.base2,
        output_entropy,
        log2_big_d,
        small_d: 1.0,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DimensionMismatch(xs.len(), ys.len()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::OutOfRange("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(eta: f64, n: usize, l: u64, trials: usize) -> CoveringConfig {
        CoveringConfig {
            eta,
            n,
            l,
            trials,
            eps: 0.1,
            delta: 0.1,
            cutoff: FockCutoff::new(12),
            seed: 3,
        }
    }

    #[test]
    fn bound_values() {
        let b = covering_bound(0.1, 1024.0, 1.0, 1_000_000_000).unwrap();
        let oracle = 2048.0 * (-1e9 * 1e-3 / 4096.0f64).exp();
        assert!((b.natural - oracle).abs() <= 1e-12 * oracle);
        assert!(b.natural < 1e-100);
        assert!(b.base2 > b.natural);
        assert_eq!(covering_bound(0.1, 1024.0, 1.0, 1).unwrap().natural, 1.0);
        assert!(covering_bound(0.1, 4.0, 4.0, 10).is_err());
        assert!(covering_bound(1.0, 4.0, 1.0, 10).is_err());
    }

    #[test]
    fn trivial_instances_have_zero_distance() {
        let single = CoherentEnsemble::real(&[1.3], &[1.0]).unwrap();
        let out = run_covering_trials(&single, &config(0.7, 2, 8, 5)).unwrap();
        assert!(out.distances.iter().all(|&d| d.abs() < 1e-9));
        let two = CoherentEnsemble::real(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
        let out = run_covering_trials(&two, &config(0.0, 1, 8, 5)).unwrap();
        assert!(out.distances.iter().all(|&d| d.abs() < 1e-9));
    }

    #[test]
    fn methods_agree() {
        let two = CoherentEnsemble::real(&[1.0, -1.0], &[0.3, 0.7]).unwrap();
        let mut cfg = config(0.5, 2, 16, 6);
        cfg.cutoff = FockCutoff::new(10);
        let a = run_covering_trials_with(&two, &cfg, DistanceMethod::Gram).unwrap();
        let b = run_covering_trials_with(&two, &cfg, DistanceMethod::Explicit).unwrap();
        for (x, y) in a.distances.iter().zip(&b.distances) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        assert!(b.fake_traces.iter().all(|t| (t - 1.0).abs() < 1e-10));
    }

    #[test]
    fn deterministic() {
        let two = CoherentEnsemble::real(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
        let cfg = config(0.5, 3, 32, 10);
        let a = run_covering_trials(&two, &cfg).unwrap();
        let b = run_covering_trials(&two, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, DistanceMethod::Gram);
        assert_eq!(a.trials().len(), 10);
    }

    #[test]
    fn slope_fit() {
        let xs = [64.0, 256.0, 1024.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
    }
}
