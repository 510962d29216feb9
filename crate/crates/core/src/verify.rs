//! Invariant suites run by the `verify` command and the property tests.
//!
//! Each suite draws seeded random instances, evaluates one inequality or
//! identity per instance and reports the number of violations together with the
//! worst margin (`allowed - measured`, negative on violation).

use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::continuity_bound;
use crate::error::{Error, Result};
use crate::fock::{
    coherent_trace_distance, coherent_vector, finite_support_check, holevo_quantity,
    mean_photon_number, relative_entropy, trace_distance, truncation_bound_check,
    von_neumann_entropy, CoherentAmplitude, DensityMatrix, FockCutoff, QuantumState,
    WeightedStates,
};
use crate::rng::{stream_rng, SimRng};
use crate::typicality::{
    pruning_inequalities_check, typical_projector_diag, typical_set_enumerated,
    typical_set_summary, ClassicalChannel, FiniteDistribution, TypicalityParams,
};

/// Named invariant suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Coherent-state truncation tail `<= 2^-(N+1)` for `N > 8 e |alpha|^2`.
    Truncation,
    /// `Tr[L rho] <= Tr[L sigma] + ||rho - sigma||_1` for `0 <= L <= 1`.
    FiniteSupport,
    /// Energy-constrained entropy continuity bound.
    Continuity,
    /// Dense trace distance of coherent states against the closed form.
    TraceDistance,
    /// Holevo quantity equals the relative entropy of joint and product states.
    ChiRelativeEntropy,
    /// Type-class formulas against enumeration, and typical-set cardinality bounds.
    Typicality,
    /// Pruned classical-quantum states: distance identity and operator inequality.
    Pruning,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Truncation,
        Suite::FiniteSupport,
        Suite::Continuity,
        Suite::TraceDistance,
        Suite::ChiRelativeEntropy,
        Suite::Typicality,
        Suite::Pruning,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Truncation => "truncation",
            Suite::FiniteSupport => "finite-support",
            Suite::Continuity => "continuity",
            Suite::TraceDistance => "trace-distance",
            Suite::ChiRelativeEntropy => "chi-relative-entropy",
            Suite::Typicality => "typicality",
            Suite::Pruning => "pruning",
        }
    }

    fn default_trials(&self) -> usize {
        match self {
            Suite::Truncation => 20,
            Suite::FiniteSupport => 10_000,
            Suite::Continuity => 10_000,
            Suite::TraceDistance => 1000,
            Suite::ChiRelativeEntropy => 100,
            Suite::Typicality => 20,
            Suite::Pruning => 10,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown suite '{s}'")))
    }
}

/// Knobs shared by the suites; `None` selects the suite default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    pub seed: u64,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Single `|alpha|^2` for the truncation suite.
    #[serde(default)]
    pub alpha2: Option<f64>,
    /// Single cutoff for the truncation suite.
    #[serde(default)]
    pub n_max: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: None,
            alpha2: None,
            n_max: None,
        }
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: u64,
    pub violations: u64,
    /// Smallest `allowed - measured` over the checks.
    pub worst_margin: f64,
    /// Checks outside the statement's hypotheses, recorded but not counted.
    pub skipped: u64,
}

impl SuiteReport {
    fn from_margins(suite: Suite, margins: &[f64], skipped: u64) -> Self {
        let violations = margins.iter().filter(|&&m| !(m >= 0.0)).count() as u64;
        SuiteReport {
            suite,
            passed: violations == 0 && !margins.is_empty(),
            checks: margins.len() as u64,
            violations,
            worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
            skipped,
        }
    }
}

/// Aggregate of several suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let trials = opts.trials.unwrap_or_else(|| suite.default_trials());
    match suite {
        Suite::Truncation => truncation_suite(opts),
        Suite::FiniteSupport => finite_support_suite(trials, opts.seed),
        Suite::Continuity => continuity_suite(trials, opts.seed, FockCutoff::new(16)),
        Suite::TraceDistance => trace_distance_suite(trials, opts.seed),
        Suite::ChiRelativeEntropy => chi_relative_entropy_suite(trials, opts.seed),
        Suite::Typicality => typicality_suite(trials, opts.seed),
        Suite::Pruning => pruning_suite(trials, opts.seed),
    }
}

pub fn run_all(opts: &VerifyOptions) -> Result<VerifyReport> {
    let suites = Suite::ALL
        .iter()
        .map(|&s| run_suite(s, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

/// Random density matrix of the given rank whose Fock weights decay like `decay^n`.
pub fn random_density<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    decay: f64,
) -> DensityMatrix {
    let a = DMatrix::<Complex64>::from_fn(dim, rank, |i, _| {
        let scale = decay.powf(i as f64 / 2.0);
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    });
    let m = &a * a.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    DensityMatrix::from_matrix(m / Complex64::new(tr, 0.0)).expect("Gram products are valid states")
}

/// Random operator `0 <= L <= 1`.
pub fn random_effect<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<Complex64> {
    let a = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let q = a.qr().q();
    let d = nalgebra::DVector::from_fn(dim, |_, _| Complex64::new(rng.gen_range(0.0..=1.0), 0.0));
    &q * DMatrix::from_diagonal(&d) * q.adjoint()
}

fn random_amplitude(rng: &mut SimRng, max_modulus: f64) -> CoherentAmplitude {
    let r = max_modulus * rng.gen_range(0.0f64..1.0).sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    CoherentAmplitude::new(Complex64::from_polar(r, th)).expect("finite")
}

fn truncation_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let cases: Vec<(f64, usize)> = match (opts.alpha2, opts.n_max) {
        (Some(a2), Some(n)) => vec![(a2, n)],
        (Some(a2), None) => vec![(a2, FockCutoff::energy_rule(a2, 0).n_max())],
        (None, _) => (1..=20)
            .map(|k| {
                let a2 = 0.2 * k as f64;
                (a2, (8.0 * std::f64::consts::E * a2).floor() as usize + 1)
            })
            .collect(),
    };
    let mut margins = Vec::new();
    let mut skipped = 0;
    for (a2, n) in cases {
        if !(a2 >= 0.0) || !a2.is_finite() {
            return Err(Error::OutOfRange(format!(
                "|alpha|^2 = {a2} must be finite and >= 0"
            )));
        }
        let c = truncation_bound_check(a2, FockCutoff::new(n));
        if c.applicable {
            margins.push(c.log2_allowed - c.log2_tail);
        } else {
            skipped += 1;
        }
    }
    Ok(SuiteReport::from_margins(
        Suite::Truncation,
        &margins,
        skipped,
    ))
}

fn finite_support_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = stream_rng(seed, t as u64);
            let dim = rng.gen_range(2..=6);
            let (r1, r2) = (rng.gen_range(1..=dim), rng.gen_range(1..=dim));
            let rho = random_density(&mut rng, dim, r1, 1.0);
            let sigma = random_density(&mut rng, dim, r2, 1.0);
            let lambda = random_effect(&mut rng, dim);
            let ok = finite_support_check(&lambda, &rho, &sigma)?;
            let margin = sigma.expectation(&lambda)? + trace_distance(&rho, &sigma)?
                - rho.expectation(&lambda)?;
            Ok(if ok {
                margin.max(0.0)
            } else {
                margin.min(-f64::MIN_POSITIVE)
            })
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::from_margins(Suite::FiniteSupport, &margins, 0))
}

/// Draws `(rho, sigma, E, eps)` with both mean photon numbers `<= E <= 2` and
/// `eps = ||rho - sigma||_1 / 2 <= E / (1 + E)`.
fn continuity_instance(rng: &mut SimRng, cutoff: FockCutoff) -> Result<(f64, f64, f64)> {
    let d = cutoff.dim();
    loop {
        let (rank, decay) = (rng.gen_range(1..=4), rng.gen_range(0.05..0.75));
        let rho = random_density(rng, d, rank, decay);
        let (rank, decay) = (rng.gen_range(1..=4), rng.gen_range(0.05..0.75));
        let omega = random_density(rng, d, rank, decay);
        let t = rng.gen_range(0.0f64..1.0).powi(3);
        let mix =
            rho.matrix() * Complex64::new(1.0 - t, 0.0) + omega.matrix() * Complex64::new(t, 0.0);
        let sigma = DensityMatrix::from_fock(mix, cutoff)?;
        let energy = mean_photon_number(&rho).max(mean_photon_number(&sigma));
        if energy > 2.0 || energy <= 0.0 {
            continue;
        }
        let eps = 0.5 * trace_distance(&rho, &sigma)?;
        if eps > energy / (1.0 + energy) {
            continue;
        }
        let gap = (von_neumann_entropy(&rho)? - von_neumann_entropy(&sigma)?).abs();
        return Ok((gap, continuity_bound(eps, energy)?, energy));
    }
}

fn continuity_suite(trials: usize, seed: u64, cutoff: FockCutoff) -> Result<SuiteReport> {
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            continuity_instance(&mut rng, cutoff).map(|(gap, bound, _)| bound - gap)
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::from_margins(Suite::Continuity, &margins, 0))
}

/// Tolerance of the dense coherent trace distance against the closed form.
pub const TRACE_DISTANCE_TOL: f64 = 1e-5;

/// Floor on the Fock cutoff so that small amplitudes keep their tail below the tolerance.
pub const TRACE_DISTANCE_MIN_CUTOFF: usize = 24;

fn trace_distance_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = stream_rng(seed, t as u64);
            let a = random_amplitude(&mut rng, 2.0);
            let b = random_amplitude(&mut rng, 2.0);
            let cutoff = FockCutoff::energy_rule(a.abs2().max(b.abs2()), TRACE_DISTANCE_MIN_CUTOFF);
            let ra = coherent_vector(a, cutoff)?.projector();
            let rb = coherent_vector(b, cutoff)?.projector();
            let dense = trace_distance(&ra, &rb)?;
            Ok(TRACE_DISTANCE_TOL - (dense - coherent_trace_distance(a, b)).abs())
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::from_margins(Suite::TraceDistance, &margins, 0))
}

/// Tolerance of the Holevo / relative-entropy identity.
pub const CHI_D_TOL: f64 = 1e-8;

/// `(chi, D(rho_XB || rho_X (x) rho_B))` for a two-symbol coherent ensemble.
pub fn chi_and_relative_entropy(
    probs: [f64; 2],
    points: [CoherentAmplitude; 2],
    cutoff: FockCutoff,
) -> Result<(f64, f64)> {
    let vecs = [
        coherent_vector(points[0], cutoff)?,
        coherent_vector(points[1], cutoff)?,
    ];
    let states: Vec<DensityMatrix> = vecs
        .iter()
        .map(|v| v.projector().truncate_and_normalize(cutoff))
        .collect::<Result<_>>()?;
    let ens = WeightedStates::new(vec![
        (probs[0], QuantumState::Mixed(states[0].clone())),
        (probs[1], QuantumState::Mixed(states[1].clone())),
    ])?;
    let chi = holevo_quantity(&ens)?;
    let d = cutoff.dim();
    let mut joint = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
    let mut avg = DMatrix::<Complex64>::zeros(d, d);
    for x in 0..2 {
        let block = states[x].matrix() * Complex64::new(probs[x], 0.0);
        joint.view_mut((x * d, x * d), (d, d)).copy_from(&block);
        avg += block;
    }
    let mut product = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
    for x in 0..2 {
        product
            .view_mut((x * d, x * d), (d, d))
            .copy_from(&(&avg * Complex64::new(probs[x], 0.0)));
    }
    let rel = relative_entropy(
        &DensityMatrix::from_matrix(joint)?,
        &DensityMatrix::from_matrix(product)?,
    )?;
    Ok((chi, rel))
}

fn chi_relative_entropy_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let cutoff = FockCutoff::new(30);
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = stream_rng(seed, t as u64);
            let p = rng.gen_range(0.05..0.95);
            let pts = [
                random_amplitude(&mut rng, 1.5),
                random_amplitude(&mut rng, 1.5),
            ];
            let (chi, rel) = chi_and_relative_entropy([p, 1.0 - p], pts, cutoff)?;
            Ok(CHI_D_TOL - (chi - rel).abs())
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::from_margins(
        Suite::ChiRelativeEntropy,
        &margins,
        0,
    ))
}

/// Comparison of the type-class formulas with enumeration on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityCheck {
    pub p0: f64,
    pub n: usize,
    pub delta: f64,
    pub size_enumerated: u64,
    pub size_formula: f64,
    pub mass_enumerated: f64,
    pub mass_formula: f64,
    pub exact: bool,
    /// `log2 |T|` against `n (H + c delta)` and `n (H - c delta) - |X| log2(2n)`;
    /// `None` when the set is empty.
    pub cardinality_margin: Option<f64>,
}

/// Mass agreement between the two routes; sizes must agree exactly.
pub const TYPICAL_MASS_TOL: f64 = 1e-12;

pub fn typicality_check(p0: f64, n: usize, delta: f64) -> Result<TypicalityCheck> {
    let dist = FiniteDistribution::new(vec![p0, 1.0 - p0])?;
    let params = TypicalityParams::new(n, delta)?;
    let (size_e, mass_e) = typical_set_enumerated(&dist, params)?;
    let f = typical_set_summary(&dist, params)?;
    let exact = size_e as f64 == f.size && (mass_e - f.mass).abs() <= TYPICAL_MASS_TOL;
    let cardinality_margin = (size_e > 0).then(|| {
        let (h, c, nf) = (dist.entropy(), dist.typicality_constant(), n as f64);
        let log_t = (size_e as f64).log2();
        let upper = nf * (h + c * delta) - log_t;
        let lower = log_t - (nf * (h - c * delta) - 2.0 * (2.0 * nf).log2());
        upper.min(lower)
    });
    Ok(TypicalityCheck {
        p0,
        n,
        delta,
        size_enumerated: size_e,
        size_formula: f.size,
        mass_enumerated: mass_e,
        mass_formula: f.mass,
        exact,
        cardinality_margin,
    })
}

/// Random binary instance with `n <= 14`; trial 0 is the `(0.9, 0.1)`, `n = 10`,
/// `delta = 0.05` instance.
pub fn random_typicality_instance(seed: u64, trial: u64) -> (f64, usize, f64) {
    if trial == 0 {
        return (0.9, 10, 0.05);
    }
    let mut rng = stream_rng(seed, trial);
    (
        rng.gen_range(0.02..0.98),
        rng.gen_range(1..=14),
        rng.gen_range(0.01..0.3),
    )
}

fn typicality_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut margins = Vec::new();
    let mut skipped = 0;
    for t in 0..=trials as u64 {
        let (p0, n, delta) = random_typicality_instance(seed, t);
        let c = typicality_check(p0, n, delta)?;
        margins.push(if c.exact { 0.0 } else { -1.0 });
        match c.cardinality_margin {
            Some(m) => margins.push(m + 1e-9),
            None => skipped += 1,
        }
        let dist = FiniteDistribution::new(vec![p0, 1.0 - p0])?;
        let props = typical_projector_diag(&dist, TypicalityParams::new(n, delta)?)?
            .properties(&dist, delta);
        margins.push(if props.trace_bound_holds && props.sandwich_holds {
            0.0
        } else {
            -1.0
        });
    }
    Ok(SuiteReport::from_margins(
        Suite::Typicality,
        &margins,
        skipped,
    ))
}

fn random_stochastic(rng: &mut SimRng, rows: usize, cols: usize) -> Result<ClassicalChannel> {
    let data = (0..rows)
        .map(|_| {
            let w: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / s).collect();
            let last = 1.0 - row[..cols - 1].iter().sum::<f64>();
            row[cols - 1] = last;
            row
        })
        .collect();
    ClassicalChannel::new(data)
}

fn pruning_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut margins = Vec::new();
    let mut skipped = 0;
    // fixed instance: binary source, two channel states
    let d = FiniteDistribution::new(vec![0.9, 0.1])?;
    let w1 = ClassicalChannel::new(vec![vec![0.95, 0.05], vec![0.1, 0.9]])?;
    let w2 = ClassicalChannel::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]])?;
    let rep = pruning_inequalities_check(&d, &[w1, w2], TypicalityParams::new(6, 0.1)?, 0.1)?;
    margins.push(if rep.all_hold() { 0.0 } else { -1.0 });
    for t in 0..trials as u64 {
        let mut rng = stream_rng(seed, t);
        let k = rng.gen_range(2..=3);
        let ky = rng.gen_range(2..=3);
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
        probs[k - 1] = 1.0 - probs[..k - 1].iter().sum::<f64>();
        let dist = FiniteDistribution::new(probs)?;
        let n = rng.gen_range(2..=if k == 3 { 4 } else { 6 });
        let channels: Vec<ClassicalChannel> = (0..rng.gen_range(1..=3))
            .map(|_| random_stochastic(&mut rng, k, ky))
            .collect::<Result<_>>()?;
        let params = TypicalityParams::new(n, rng.gen_range(0.05..0.5))?;
        match pruning_inequalities_check(&dist, &channels, params, rng.gen_range(0.0..0.5)) {
            Ok(rep) => margins.push(if rep.all_hold() { 0.0 } else { -1.0 }),
            Err(Error::InvalidProbabilities(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SuiteReport::from_margins(Suite::Pruning, &margins, skipped))
}
