//! Strongly typical sets, the pruned (typicality-conditioned) distribution and
//! diagonal typical projectors for small block lengths.
//!
//! Symbols are the indices `0..k` of a [`FiniteDistribution`]. A sequence of
//! length `n` is strongly typical when every symbol frequency is within `delta` of
//! its probability and symbols of probability zero do not occur.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities must sum to one within this.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Slack on the frequency condition so that exact frequencies are not lost to rounding.
pub const FREQUENCY_TOL: f64 = 1e-12;

/// Largest number of sequences or type classes enumerated.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// Draws allowed when sampling from the pruned distribution.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Probability distribution over the symbols `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbabilities("empty alphabet".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidProbabilities(format!("probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }

    /// Constant `c = sum_x -log2 p(x)` over the support, for which every strongly
    /// typical sequence satisfies `|-log2 p(x^n) / n - H| <= c delta`.
    pub fn typicality_constant(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| -p.log2())
            .sum()
    }

    /// `log2 p(x^n)` of an i.i.d. sequence.
    pub fn log2_prob(&self, seq: &[usize]) -> Result<f64> {
        let counts = self.counts(seq)?;
        Ok(self.log2_prob_of_counts(&counts))
    }

    fn log2_prob_of_counts(&self, counts: &[u64]) -> f64 {
        counts
            .iter()
            .zip(&self.probs)
            .map(|(&c, &p)| if c == 0 { 0.0 } else { c as f64 * p.log2() })
            .sum()
    }

    /// Symbol counts `N(x | x^n)`.
    pub fn counts(&self, seq: &[usize]) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.probs.len()];
        for &s in seq {
            *counts.get_mut(s).ok_or_else(|| {
                Error::AlphabetMismatch(format!(
                    "symbol {s} outside alphabet of size {}",
                    self.probs.len()
                ))
            })? += 1;
        }
        Ok(counts)
    }

    pub(crate) fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.probs).expect("validated distribution has positive mass")
    }
}

impl TryFrom<Vec<f64>> for FiniteDistribution {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<FiniteDistribution> for Vec<f64> {
    fn from(d: FiniteDistribution) -> Self {
        d.probs
    }
}

/// Block length and typicality width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityParams {
    pub n: usize,
    pub delta: f64,
}

impl TypicalityParams {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("block length n must be >= 1".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::OutOfRange(format!(
                "typicality delta must be > 0, got {delta}"
            )));
        }
        Ok(Self { n, delta })
    }
}

/// Frequency condition on a count vector of total `params.n`.
pub fn counts_are_typical(
    counts: &[u64],
    dist: &FiniteDistribution,
    params: TypicalityParams,
) -> bool {
    let n = params.n as f64;
    counts.iter().zip(dist.probs()).all(|(&c, &p)| {
        if p == 0.0 {
            c == 0
        } else {
            (c as f64 / n - p).abs() <= params.delta + FREQUENCY_TOL
        }
    })
}

/// Whether `seq` (of length `params.n`) is strongly typical.
pub fn is_typical(
    seq: &[usize],
    dist: &FiniteDistribution,
    params: TypicalityParams,
) -> Result<bool> {
    if seq.len() != params.n {
        return Err(Error::DimensionMismatch(seq.len(), params.n));
    }
    Ok(counts_are_typical(&dist.counts(seq)?, dist, params))
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Multinomial coefficient as a float; exact while it stays below `2^53`.
fn multinomial(counts: &[u64]) -> f64 {
    let mut total = 0u64;
    let mut acc = 1.0f64;
    for &c in counts {
        for j in 1..=c {
            total += 1;
            acc = acc * total as f64 / j as f64;
        }
    }
    acc.round()
}

fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, j| acc * (n - k + j) as f64 / j as f64)
}

/// Calls `f` with each composition of `n` into `parts` non-negative parts.
fn for_each_composition(n: u64, parts: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(rem: u64, idx: usize, cur: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if idx + 1 == cur.len() {
            cur[idx] = rem;
            f(cur);
            return;
        }
        for c in 0..=rem {
            cur[idx] = c;
            rec(rem - c, idx + 1, cur, f);
        }
    }
    let mut cur = vec![0u64; parts];
    rec(n, 0, &mut cur, f);
}

/// Size and probability of the typical set, summed over type classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalSetSummary {
    /// `|T|`, exact while below `2^53`.
    pub size: f64,
    /// `Delta = sum_{x^n in T} p(x^n)`.
    pub mass: f64,
    /// Number of typical type classes.
    pub classes: u64,
}

/// `|T|` and `Delta` from the multinomial type-class formula.
pub fn typical_set_summary(
    dist: &FiniteDistribution,
    params: TypicalityParams,
) -> Result<TypicalSetSummary> {
    let support: Vec<usize> = (0..dist.alphabet_size())
        .filter(|&i| dist.probs()[i] > 0.0)
        .collect();
    let n = params.n as u64;
    let classes = binomial(n + support.len() as u64 - 1, support.len() as u64 - 1);
    if classes > ENUMERATION_CAP as f64 {
        return Err(Error::CapExceeded {
            size: classes,
            cap: ENUMERATION_CAP as f64,
        });
    }
    let lnf = ln_factorials(params.n);
    let ln_p: Vec<f64> = support.iter().map(|&i| dist.probs()[i].ln()).collect();
    let mut full = vec![0u64; dist.alphabet_size()];
    let mut out = TypicalSetSummary {
        size: 0.0,
        mass: 0.0,
        classes: 0,
    };
    for_each_composition(n, support.len(), &mut |c| {
        for (k, &i) in support.iter().enumerate() {
            full[i] = c[k];
        }
        if counts_are_typical(&full, dist, params) {
            let ln_multi = lnf[params.n] - c.iter().map(|&x| lnf[x as usize]).sum::<f64>();
            let ln_seq: f64 = c
                .iter()
                .zip(&ln_p)
                .map(|(&x, &lp)| if x == 0 { 0.0 } else { x as f64 * lp })
                .sum();
            out.size += multinomial(c);
            out.mass += (ln_multi + ln_seq).exp();
            out.classes += 1;
        }
    });
    out.mass = out.mass.min(1.0);
    Ok(out)
}

/// `Delta = sum_{x^n in T} p(x^n)`, exact via type classes.
pub fn typical_mass(dist: &FiniteDistribution, params: TypicalityParams) -> Result<f64> {
    Ok(typical_set_summary(dist, params)?.mass)
}

/// `|T|` via type classes.
pub fn typical_set_size(dist: &FiniteDistribution, params: TypicalityParams) -> Result<f64> {
    Ok(typical_set_summary(dist, params)?.size)
}

fn check_enumerable(k: usize, n: usize) -> Result<u64> {
    let total = (k as f64).powi(n as i32);
    if total > ENUMERATION_CAP as f64 {
        return Err(Error::CapExceeded {
            size: total,
            cap: ENUMERATION_CAP as f64,
        });
    }
    Ok(total as u64)
}

/// Sequence with base-`k` index `idx`, most significant symbol first.
pub fn sequence_of_index(mut idx: u64, k: usize, n: usize) -> Vec<usize> {
    let mut seq = vec![0usize; n];
    for slot in seq.iter_mut().rev() {
        *slot = (idx % k as u64) as usize;
        idx /= k as u64;
    }
    seq
}

/// Base-`k` index of a sequence, most significant symbol first.
pub fn index_of_sequence(seq: &[usize], k: usize) -> u64 {
    seq.iter().fold(0u64, |acc, &s| acc * k as u64 + s as u64)
}

/// `|T|` and `Delta` by visiting every sequence; limited to [`ENUMERATION_CAP`] sequences.
pub fn typical_set_enumerated(
    dist: &FiniteDistribution,
    params: TypicalityParams,
) -> Result<(u64, f64)> {
    let k = dist.alphabet_size();
    let total = check_enumerable(k, params.n)?;
    let (mut size, mut mass) = (0u64, 0.0);
    for idx in 0..total {
        let seq = sequence_of_index(idx, k, params.n);
        if is_typical(&seq, dist, params)? {
            size += 1;
            mass += seq.iter().map(|&s| dist.probs()[s]).product::<f64>();
        }
    }
    Ok((size, mass))
}

/// `p` conditioned on the typical set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedDistribution {
    base: FiniteDistribution,
    params: TypicalityParams,
    mass: f64,
}

impl PrunedDistribution {
    pub fn new(base: FiniteDistribution, params: TypicalityParams) -> Result<Self> {
        let mass = typical_mass(&base, params)?;
        if !(mass > 0.0) {
            return Err(Error::InvalidProbabilities(format!(
                "typical set is empty for n = {}, delta = {}",
                params.n, params.delta
            )));
        }
        Ok(Self { base, params, mass })
    }

    pub fn base(&self) -> &FiniteDistribution {
        &self.base
    }

    pub fn params(&self) -> TypicalityParams {
        self.params
    }

    /// The normalizer `Delta`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `p'(x^n) = p(x^n) 1_T(x^n) / Delta`.
    pub fn prob(&self, seq: &[usize]) -> Result<f64> {
        if !is_typical(seq, &self.base, self.params)? {
            return Ok(0.0);
        }
        Ok(self.base.log2_prob(seq)?.exp2() / self.mass)
    }

    /// Rejection sampling from `p^n`, up to [`REJECTION_BUDGET`] draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        sample_typical(&self.base, self.params, rng, REJECTION_BUDGET)
    }
}

fn sample_typical<R: Rng + ?Sized>(
    dist: &FiniteDistribution,
    params: TypicalityParams,
    rng: &mut R,
    budget: u64,
) -> Result<Vec<usize>> {
    let sampler = dist.sampler();
    let mut seq = vec![0usize; params.n];
    let mut counts = vec![0u64; dist.alphabet_size()];
    for _ in 0..budget {
        counts.iter_mut().for_each(|c| *c = 0);
        for slot in seq.iter_mut() {
            *slot = sampler.sample(rng);
            counts[*slot] += 1;
        }
        if counts_are_typical(&counts, dist, params) {
            return Ok(seq);
        }
    }
    Err(Error::RejectionBudget {
        draws: budget,
        acceptance: 0.0,
    })
}

/// One sequence from the pruned distribution, drawn with the caller's generator.
pub fn pruned_sample<R: Rng + ?Sized>(
    dist: &FiniteDistribution,
    params: TypicalityParams,
    rng: &mut R,
) -> Result<Vec<usize>> {
    sample_typical(dist, params, rng, REJECTION_BUDGET)
}

/// Diagonal projector onto the typical sequences, stored as base-`k` indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalProjector {
    pub alphabet_size: usize,
    pub n: usize,
    pub indices: Vec<u64>,
}

/// Measured properties of a typical projector on the product state `p^{(x) n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorProperties {
    /// `Tr[Pi] = |T|`.
    pub trace: u64,
    /// `log2` of the allowed trace `n (H + c delta)`.
    pub log2_trace_bound: f64,
    /// `Tr[Pi rho^{(x) n}] = Delta`.
    pub mass: f64,
    /// Extremes of `n H + log2 p(x^n)` over members; must lie in `[-n c delta, n c delta]`.
    pub min_log2_ratio: f64,
    pub max_log2_ratio: f64,
    pub sandwich_width: f64,
    pub trace_bound_holds: bool,
    pub sandwich_holds: bool,
}

impl TypicalProjector {
    pub fn trace(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, seq: &[usize]) -> bool {
        self.indices
            .binary_search(&index_of_sequence(seq, self.alphabet_size))
            .is_ok()
    }

    pub fn properties(&self, dist: &FiniteDistribution, delta: f64) -> ProjectorProperties {
        let n = self.n as f64;
        let h = dist.entropy();
        let c = dist.typicality_constant();
        let mut mass = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &idx in &self.indices {
            let seq = sequence_of_index(idx, self.alphabet_size, self.n);
            let lp = dist
                .log2_prob(&seq)
                .expect("indices are within the alphabet");
            mass += lp.exp2();
            lo = lo.min(n * h + lp);
            hi = hi.max(n * h + lp);
        }
        let width = n * c * delta;
        let log2_trace_bound = n * (h + c * delta);
        let tol = 1e-9;
        ProjectorProperties {
            trace: self.indices.len() as u64,
            log2_trace_bound,
            mass,
            min_log2_ratio: lo,
            max_log2_ratio: hi,
            sandwich_width: width,
            trace_bound_holds: (self.indices.len() as f64).log2() <= log2_trace_bound + tol,
            sandwich_holds: self.indices.is_empty() || (lo >= -width - tol && hi <= width + tol),
        }
    }
}

/// Index set of the strongly typical sequences, in increasing order.
pub fn typical_projector_diag(
    dist: &FiniteDistribution,
    params: TypicalityParams,
) -> Result<TypicalProjector> {
    let k = dist.alphabet_size();
    let total = check_enumerable(k, params.n)?;
    let mut indices = Vec::new();
    for idx in 0..total {
        if is_typical(&sequence_of_index(idx, k, params.n), dist, params)? {
            indices.push(idx);
        }
    }
    Ok(TypicalProjector {
        alphabet_size: k,
        n: params.n,
        indices,
    })
}

/// Classical channel `W(y | x)`, one row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalChannel {
    rows: Vec<Vec<f64>>,
}

impl ClassicalChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidProbabilities(
                "channel rows must be non-empty and of equal length".into(),
            ));
        }
        for r in &rows {
            FiniteDistribution::new(r.clone())?;
        }
        Ok(Self { rows })
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.rows[x][y]
    }
}

/// Largest joint dimension `(|X| |Y|)^n` handled by [`pruning_inequalities_check`].
pub const PRUNING_DIM_CAP: u64 = 1 << 22;

/// Outcome of the pruned-state comparison on a classical-quantum instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningReport {
    pub delta_mass: f64,
    /// `||rho_n - rho'_n||_1` and the predicted `2 (1 - Delta)`.
    pub distance: f64,
    pub predicted_distance: f64,
    /// Smallest eigenvalue of `Delta^-2 tau_n - tau'_n` (diagonal here).
    pub min_gap_eigenvalue: f64,
    /// Test threshold `a`, and the decision region `{rho_n >= 2^{n a} tau_n}`.
    pub a: f64,
    /// `lambda = 1 - Tr[P rho_n]` of that region.
    pub lambda: f64,
    pub tr_p_rho_pruned: f64,
    pub tr_p_tau: f64,
    pub tr_p_tau_pruned: f64,
    pub distance_matches: bool,
    pub operator_inequality_holds: bool,
    pub acceptance_bound_holds: bool,
    pub rejection_bound_holds: bool,
}

impl PruningReport {
    pub fn all_hold(&self) -> bool {
        self.distance_matches
            && self.operator_inequality_holds
            && self.acceptance_bound_holds
            && self.rejection_bound_holds
    }
}

/// Builds the averaged joint state `rho_n`, the product `tau_n` of its marginals,
/// and their versions with `p^n` replaced by the pruned distribution, for the
/// diagonal classical-quantum states `sum_x p(x) |x><x| (x) W_s(.|x)`; then checks
/// the distance identity, the operator inequality `tau'_n <= Delta^-2 tau_n` and
/// the acceptance/rejection bounds of the test `{rho_n >= 2^{n a} tau_n}`.
pub fn pruning_inequalities_check(
    dist: &FiniteDistribution,
    channels: &[ClassicalChannel],
    params: TypicalityParams,
    a: f64,
) -> Result<PruningReport> {
    if channels.is_empty() {
        return Err(Error::EmptySet);
    }
    let kx = dist.alphabet_size();
    let ky = channels[0].outputs();
    if channels
        .iter()
        .any(|w| w.inputs() != kx || w.outputs() != ky)
    {
        return Err(Error::AlphabetMismatch(
            "channel shapes differ from the input alphabet".into(),
        ));
    }
    let n = params.n;
    let joint = ((kx * ky) as f64).powi(n as i32);
    if joint > PRUNING_DIM_CAP as f64 {
        return Err(Error::CapExceeded {
            size: joint,
            cap: PRUNING_DIM_CAP as f64,
        });
    }
    let nx = (kx as u64).pow(n as u32) as usize;
    let ny = (ky as u64).pow(n as u32) as usize;
    let xs: Vec<Vec<usize>> = (0..nx)
        .map(|i| sequence_of_index(i as u64, kx, n))
        .collect();
    let ys: Vec<Vec<usize>> = (0..ny)
        .map(|i| sequence_of_index(i as u64, ky, n))
        .collect();
    let mass = typical_mass(dist, params)?;
    if !(mass > 0.0) {
        return Err(Error::InvalidProbabilities(format!(
            "typical set is empty for n = {n}, delta = {}",
            params.delta
        )));
    }
    let p: Vec<f64> = xs
        .iter()
        .map(|x| x.iter().map(|&s| dist.probs()[s]).product())
        .collect();
    let p_pruned: Vec<f64> = xs
        .iter()
        .zip(&p)
        .map(|(x, &px)| {
            if is_typical(x, dist, params).unwrap_or(false) {
                px / mass
            } else {
                0.0
            }
        })
        .collect();
    // averaged channel W(y^n | x^n)
    let s_count = channels.len() as f64;
    let mut w = vec![0.0; nx * ny];
    for (xi, x) in xs.iter().enumerate() {
        for (yi, y) in ys.iter().enumerate() {
            w[xi * ny + yi] = channels
                .iter()
                .map(|ch| {
                    x.iter()
                        .zip(y)
                        .map(|(&a, &b)| ch.prob(b, a))
                        .product::<f64>()
                })
                .sum::<f64>()
                / s_count;
        }
    }
    let output = |px: &[f64]| -> Vec<f64> {
        let mut q = vec![0.0; ny];
        for xi in 0..nx {
            for yi in 0..ny {
                q[yi] += px[xi] * w[xi * ny + yi];
            }
        }
        q
    };
    let (q, q_pruned) = (output(&p), output(&p_pruned));
    let threshold = (n as f64 * a).exp2();
    let mut r = PruningReport {
        delta_mass: mass,
        distance: 0.0,
        predicted_distance: 2.0 * (1.0 - mass),
        min_gap_eigenvalue: f64::INFINITY,
        a,
        lambda: 0.0,
        tr_p_rho_pruned: 0.0,
        tr_p_tau: 0.0,
        tr_p_tau_pruned: 0.0,
        distance_matches: false,
        operator_inequality_holds: false,
        acceptance_bound_holds: false,
        rejection_bound_holds: false,
    };
    let mut tr_p_rho = 0.0;
    for xi in 0..nx {
        for yi in 0..ny {
            let rho = p[xi] * w[xi * ny + yi];
            let rho_p = p_pruned[xi] * w[xi * ny + yi];
            let tau = p[xi] * q[yi];
            let tau_p = p_pruned[xi] * q_pruned[yi];
            r.distance += (rho - rho_p).abs();
            r.min_gap_eigenvalue = r.min_gap_eigenvalue.min(tau / (mass * mass) - tau_p);
            if rho > 0.0 && rho >= threshold * tau {
                tr_p_rho += rho;
                r.tr_p_rho_pruned += rho_p;
                r.tr_p_tau += tau;
                r.tr_p_tau_pruned += tau_p;
            }
        }
    }
    let tol = 1e-10;
    r.lambda = (1.0 - tr_p_rho).max(0.0);
    r.distance_matches = (r.distance - r.predicted_distance).abs() <= tol;
    r.operator_inequality_holds = r.min_gap_eigenvalue >= -tol;
    r.acceptance_bound_holds = r.tr_p_rho_pruned >= 1.0 - r.lambda - r.predicted_distance - tol;
    r.rejection_bound_holds = r.tr_p_tau <= (-(n as f64) * a).exp2() + tol
        && r.tr_p_tau_pruned <= (-(n as f64) * a).exp2() / (mass * mass) + tol;
    Ok(r)
}
