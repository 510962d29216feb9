//! Tiny random wiretap codes over coherent-state alphabets.
//!
//! Codewords are drawn from the typicality-pruned product distribution, decoded
//! by the square-root measurement built on the receiver's pure output states, and
//! scored by the message-level success probability and the Holevo leakage of the
//! eavesdropper's message-averaged states. Every `n`-mode quantity is computed
//! from Gram matrices of coherent product overlaps, without Fock truncation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distributions::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelState, NetParams, StateSet};
use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::fock::{
    coherent_vector, hermitian_eigenvalues, spectral_entropy, CoherentAmplitude, FockCutoff,
};
use crate::gram::{cross_gram, gram_matrix, inv_sqrt_psd, mixture_entropy};
use crate::rng::stream_rng;
use crate::typicality::{counts_are_typical, typical_mass, TypicalityParams, REJECTION_BUDGET};

/// Largest number of pure states in one decoder.
pub const DECODER_STATE_CAP: usize = 2048;

/// Largest `(cutoff+1)^n` for the dense leakage cross-check.
pub const DENSE_DIM_CAP: usize = 4096;

/// Simulation parameters, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub input: CoherentEnsemble,
    pub states: StateSet,
    /// Net radius used when `states` is a rectangle.
    #[serde(default)]
    pub net_mu: Option<NetParams>,
    pub n: usize,
    /// Messages `M`.
    pub m: usize,
    /// Randomizers `L` per message.
    pub l: usize,
    /// Rate back-off `gamma` in `K_n = floor(2^{n (a - gamma)})`.
    pub gamma: f64,
    /// Typicality width of the codeword distribution.
    pub delta: f64,
    /// Per-mode energy limit `sum_i |x_i|^2 <= n E`; no limit when absent.
    #[serde(default)]
    pub energy: Option<f64>,
    /// Fock cutoff for dense cross-checks.
    pub cutoff: FockCutoff,
    pub seed: u64,
    /// Independent codebooks.
    pub trials: usize,
    /// Allowed decoding error `lambda`.
    pub lambda: f64,
    /// Allowed leakage `mu` in bits.
    pub mu: f64,
    /// Reject configurations with `M L > K_n`.
    #[serde(default)]
    pub rate_check: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.states.validate()?;
        if self.n == 0 || self.m == 0 || self.l == 0 || self.trials == 0 {
            return Err(Error::OutOfRange("n, M, L and trials must be >= 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::OutOfRange(format!(
                "rate back-off gamma must be > 0, got {}",
                self.gamma
            )));
        }
        TypicalityParams::new(self.n, self.delta)?;
        if let Some(e) = self.energy {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "energy E = {e} must be finite and >= 0"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) || !(self.mu >= 0.0) {
            return Err(Error::OutOfRange(
                "need lambda in [0, 1] and mu >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn typicality(&self) -> TypicalityParams {
        TypicalityParams {
            n: self.n,
            delta: self.delta,
        }
    }

    /// Channel states evaluated, after netting rectangles.
    pub fn members(&self) -> Result<Vec<ChannelState>> {
        let mu = match self.net_mu {
            Some(mu) => mu,
            None => NetParams::new(0.1)?,
        };
        self.states.members(mu)
    }
}

/// `M x L` codewords of length `n`, stored as indices into the input alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    alphabet: Vec<CoherentAmplitude>,
    /// Row `m * L + l` holds the word of message `m`, randomizer `l`.
    symbols: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn new(
        alphabet: Vec<CoherentAmplitude>,
        m: usize,
        l: usize,
        symbols: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if m == 0 || l == 0 || symbols.len() != m * l {
            return Err(Error::DimensionMismatch(symbols.len(), m * l));
        }
        let n = symbols[0].len();
        if n == 0 || symbols.iter().any(|w| w.len() != n) {
            return Err(Error::InvalidSet(
                "codewords must share a positive length".into(),
            ));
        }
        if symbols.iter().flatten().any(|&s| s >= alphabet.len()) {
            return Err(Error::AlphabetMismatch(
                "codeword symbol outside alphabet".into(),
            ));
        }
        Ok(Self {
            n,
            m,
            l,
            alphabet,
            symbols,
        })
    }

    pub fn symbols(&self, m: usize, l: usize) -> &[usize] {
        &self.symbols[m * self.l + l]
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.symbols
    }

    /// Amplitudes of word `(m, l)` after the loss `component`.
    pub fn output(&self, m: usize, l: usize, component: f64) -> Vec<Complex64> {
        self.symbols(m, l)
            .iter()
            .map(|&s| self.alphabet[s].value() * component)
            .collect()
    }

    /// `sum_i |x_i|^2` of word `(m, l)`.
    pub fn energy(&self, m: usize, l: usize) -> f64 {
        self.symbols(m, l)
            .iter()
            .map(|&s| self.alphabet[s].abs2())
            .sum()
    }

    fn outputs_of_message(&self, m: usize, component: f64) -> Vec<Vec<Complex64>> {
        (0..self.l).map(|l| self.output(m, l, component)).collect()
    }
}

/// Draws `M L` words i.i.d. from the pruned distribution, resampling words that
/// break the energy limit. Codebook `trial` uses generator stream `(seed, trial)`.
pub fn generate_codebook(config: &SimConfig, trial: u64) -> Result<Codebook> {
    config.validate()?;
    let dist = config.input.distribution();
    let params = config.typicality();
    if !(typical_mass(&dist, params)? > 0.0) {
        return Err(Error::InvalidProbabilities(format!(
            "typical set is empty for n = {}, delta = {}",
            params.n, params.delta
        )));
    }
    let sampler = dist.sampler();
    let alphabet = config.input.points().to_vec();
    let limit = config.energy.map(|e| config.n as f64 * e * (1.0 + 1e-12));
    let mut rng = stream_rng(config.seed, trial);
    let mut words = Vec::with_capacity(config.m * config.l);
    let mut counts = vec![0u64; alphabet.len()];
    let (mut draws, mut accepted) = (0u64, 0u64);
    for _ in 0..config.m * config.l {
        let mut budget = REJECTION_BUDGET;
        loop {
            if budget == 0 {
                return Err(Error::RejectionBudget {
                    draws,
                    acceptance: accepted as f64 / draws as f64,
                });
            }
            budget -= 1;
            draws += 1;
            counts.iter_mut().for_each(|c| *c = 0);
            let word: Vec<usize> = (0..config.n).map(|_| sampler.sample(&mut rng)).collect();
            word.iter().for_each(|&s| counts[s] += 1);
            if !counts_are_typical(&counts, &dist, params) {
                continue;
            }
            let energy: f64 = word.iter().map(|&s| alphabet[s].abs2()).sum();
            if limit.map_or(true, |lim| energy <= lim) {
                accepted += 1;
                words.push(word);
                break;
            }
        }
    }
    Codebook::new(alphabet, config.m, config.l, words)
}

/// Square-root measurement on the span of the receiver output states.
///
/// Outcome `w` has vector `mu_w = Sigma^{-1/2} psi_w`, and for a pure query
/// `phi` its probability is `|(G^{+1/2} k)_w|^2` with `k_v = <psi_v|phi>`.
/// Outcomes carry the message label of their codeword; the leftover operator
/// `1 - sum_w |mu_w><mu_w|` counts as an error.
#[derive(Debug, Clone)]
pub struct Decoder {
    states: Vec<Vec<Complex64>>,
    labels: Vec<usize>,
    messages: usize,
    inv_sqrt: DMatrix<Complex64>,
    gram: DMatrix<Complex64>,
    rank: usize,
}

impl Decoder {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn outcomes(&self) -> usize {
        self.states.len()
    }

    /// Message probabilities for a pure product query state.
    pub fn message_probabilities(&self, query: &[Complex64]) -> Vec<f64> {
        let k = cross_gram(&self.states, &[query.to_vec()]);
        let amp: DVector<Complex64> = &self.inv_sqrt * k.column(0);
        let mut out = vec![0.0; self.messages];
        for (w, a) in amp.iter().enumerate() {
            out[self.labels[w]] += a.norm_sqr();
        }
        out
    }

    /// Largest deviation of `sum_w |mu_w><mu_w|` from a projector, measured on the
    /// span: eigenvalues of `G^{+1/2} G G^{+1/2}` must be 0 or 1.
    pub fn completeness_defect(&self) -> f64 {
        let m = &self.inv_sqrt * &self.gram * &self.inv_sqrt;
        let ev = hermitian_eigenvalues(&m);
        let ones = ev.iter().filter(|&&e| e > 0.5).count();
        let defect = ev
            .iter()
            .map(|&e| if e > 0.5 { (e - 1.0).abs() } else { e.abs() })
            .fold(0.0, f64::max);
        if ones != self.rank {
            return f64::INFINITY;
        }
        defect
    }
}

/// Decoder for a single receiver transmission `tau`.
pub fn build_decoder(codebook: &Codebook, tau: f64) -> Result<Decoder> {
    build_compound_decoder(codebook, &[tau])
}

/// Decoder over the union of output states for every `tau` listed, so that one
/// measurement serves all channel states.
pub fn build_compound_decoder(codebook: &Codebook, taus: &[f64]) -> Result<Decoder> {
    let mut distinct: Vec<f64> = taus.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.is_empty() {
        return Err(Error::EmptySet);
    }
    let total = distinct.len() * codebook.m * codebook.l;
    if total > DECODER_STATE_CAP {
        return Err(Error::CapExceeded {
            size: total as f64,
            cap: DECODER_STATE_CAP as f64,
        });
    }
    let mut states = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for &tau in &distinct {
        for m in 0..codebook.m {
            for l in 0..codebook.l {
                states.push(codebook.output(m, l, tau));
                labels.push(m);
            }
        }
    }
    let gram = gram_matrix(&states);
    let (inv_sqrt, rank) = inv_sqrt_psd(&gram);
    if rank < states.len() {
        log::info!(
            "square-root measurement on a degenerate span: rank {rank} of {} states",
            states.len()
        );
    }
    Ok(Decoder {
        states,
        labels,
        messages: codebook.m,
        inv_sqrt,
        gram,
        rank,
    })
}

/// `(1/M) sum_m (1/L) sum_l Pr[decode m | word (m, l) sent through tau]`.
pub fn success_probability(codebook: &Codebook, decoder: &Decoder, s: ChannelState) -> f64 {
    let mut total = 0.0;
    for m in 0..codebook.m {
        for l in 0..codebook.l {
            total += decoder.message_probabilities(&codebook.output(m, l, s.tau()))[m];
        }
    }
    (total / (codebook.m * codebook.l) as f64).clamp(0.0, 1.0)
}

/// Holevo quantity of `{1/M, (1/L) sum_l |eta x_{m,l}><eta x_{m,l}|}`, in bits.
pub fn leakage(codebook: &Codebook, s: ChannelState) -> f64 {
    let eta = s.eta();
    let per_message: Vec<Vec<Vec<Complex64>>> = (0..codebook.m)
        .map(|m| codebook.outputs_of_message(m, eta))
        .collect();
    let w_l = vec![1.0 / codebook.l as f64; codebook.l];
    let conditional: f64 = per_message
        .iter()
        .map(|states| mixture_entropy(&w_l, &gram_matrix(states)))
        .sum::<f64>()
        / codebook.m as f64;
    let all: Vec<Vec<Complex64>> = per_message.into_iter().flatten().collect();
    let w_all = vec![1.0 / all.len() as f64; all.len()];
    (mixture_entropy(&w_all, &gram_matrix(&all)) - conditional).max(0.0)
}

/// Same quantity with dense `(cutoff+1)^n` matrices of truncated coherent states.
pub fn leakage_truncated(codebook: &Codebook, s: ChannelState, cutoff: FockCutoff) -> Result<f64> {
    let dim = (cutoff.dim() as f64).powi(codebook.n as i32);
    if dim > DENSE_DIM_CAP as f64 {
        return Err(Error::CapExceeded {
            size: dim,
            cap: DENSE_DIM_CAP as f64,
        });
    }
    let dim = dim as usize;
    let product = |word: &[Complex64]| -> Result<DVector<Complex64>> {
        let mut v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        for &z in word {
            let f = coherent_vector(CoherentAmplitude::new(z)?, cutoff)?;
            let a = f.amplitudes();
            v = DVector::from_fn(v.len() * a.len(), |i, _| v[i / a.len()] * a[i % a.len()]);
        }
        Ok(v)
    };
    let mut avg = DMatrix::<Complex64>::zeros(dim, dim);
    let mut conditional = 0.0;
    let one = Complex64::new(1.0, 0.0);
    for m in 0..codebook.m {
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        for word in codebook.outputs_of_message(m, s.eta()) {
            let v = product(&word)?;
            rho.ger(
                Complex64::new(1.0 / codebook.l as f64, 0.0),
                &v,
                &v.conjugate(),
                one,
            );
        }
        conditional += spectral_entropy(&hermitian_eigenvalues(&rho)) / codebook.m as f64;
        avg += rho.scale(1.0 / codebook.m as f64);
    }
    Ok((spectral_entropy(&hermitian_eigenvalues(&avg)) - conditional).max(0.0))
}

/// Single-letter receiver Holevo quantity `chi({p(x), |tau x>})` in bits.
pub fn receiver_holevo(input: &CoherentEnsemble, tau: f64) -> f64 {
    let states: Vec<Vec<Complex64>> = input
        .points()
        .iter()
        .map(|x| vec![x.value() * tau])
        .collect();
    mixture_entropy(input.probs(), &gram_matrix(&states))
}

/// `K_n = floor(2^{n (a - gamma)})`, saturating at `u64::MAX`.
pub fn rate_budget(a: f64, gamma: f64, n: usize) -> u64 {
    let v = (n as f64 * (a - gamma)).exp2().floor();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.max(0.0) as u64
    }
}

/// Outcome of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub states: Vec<ChannelState>,
    /// `success[t][s]` for codebook `t` and state `s`.
    pub success: Vec<Vec<f64>>,
    /// `leakage[t][s]` in bits.
    pub leakage: Vec<Vec<f64>>,
    /// Per-state means over codebooks.
    pub mean_success: Vec<f64>,
    pub mean_leakage: Vec<f64>,
    /// Per codebook: worst state for decoding (min success) and for secrecy (max leakage).
    pub worst_success: Vec<f64>,
    pub worst_leakage: Vec<f64>,
    pub median_worst_success: f64,
    pub median_worst_leakage: f64,
    /// Smallest and largest decoding error over states, medians over codebooks.
    pub median_min_error: f64,
    pub median_max_error: f64,
    /// `a = min_s chi_receiver(s)` and the budget `K_n`.
    pub holevo_budget: f64,
    pub rate_budget: u64,
    /// `log2(M) / n`.
    pub message_rate: f64,
    pub typical_mass: f64,
    pub lambda: f64,
    pub mu: f64,
    pub success_pass: bool,
    pub leakage_pass: bool,
}

/// CSV summary row of a [`SimReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSummaryRow {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub trials: usize,
    pub states: usize,
    pub median_worst_success: f64,
    pub median_worst_leakage: f64,
    pub holevo_budget: f64,
    pub rate_budget: u64,
    pub message_rate: f64,
    pub success_pass: bool,
    pub leakage_pass: bool,
}

impl SimReport {
    pub fn passed(&self) -> bool {
        self.success_pass && self.leakage_pass
    }

    pub fn summary_row(&self, config: &SimConfig) -> SimSummaryRow {
        SimSummaryRow {
            n: config.n,
            m: config.m,
            l: config.l,
            trials: config.trials,
            states: self.states.len(),
            median_worst_success: self.median_worst_success,
            median_worst_leakage: self.median_worst_leakage,
            holevo_budget: self.holevo_budget,
            rate_budget: self.rate_budget,
            message_rate: self.message_rate,
            success_pass: self.success_pass,
            leakage_pass: self.leakage_pass,
        }
    }
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Generates `trials` codebooks and scores each on every state of the set: one
/// decoder per codebook serves all states, success is the minimum and leakage the
/// maximum over states.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let states = config.members()?;
    let holevo_budget = states
        .iter()
        .map(|s| receiver_holevo(&config.input, s.tau()))
        .fold(f64::INFINITY, f64::min);
    let k_n = rate_budget(holevo_budget, config.gamma, config.n);
    let words = (config.m as u64).saturating_mul(config.l as u64);
    if config.rate_check && words > k_n {
        return Err(Error::RateBudget {
            requested: words,
            budget: k_n,
        });
    }
    let mass = typical_mass(&config.input.distribution(), config.typicality())?;
    let taus: Vec<f64> = states.iter().map(|s| s.tau()).collect();
    let per_trial: Vec<(Vec<f64>, Vec<f64>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<(Vec<f64>, Vec<f64>)> {
            let book = generate_codebook(config, t as u64)?;
            let decoder = build_compound_decoder(&book, &taus)?;
            let succ = states
                .iter()
                .map(|&s| success_probability(&book, &decoder, s))
                .collect();
            let leak = states.iter().map(|&s| leakage(&book, s)).collect();
            Ok((succ, leak))
        })
        .collect::<Result<_>>()?;
    let (success, leakage): (Vec<Vec<f64>>, Vec<Vec<f64>>) = per_trial.into_iter().unzip();
    let mean_over = |rows: &[Vec<f64>]| -> Vec<f64> {
        (0..states.len())
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
            .collect()
    };
    let worst_success: Vec<f64> = success
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let worst_leakage: Vec<f64> = leakage
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let best_success: Vec<f64> = success
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let median_worst_success = median(&worst_success);
    let median_worst_leakage = median(&worst_leakage);
    Ok(SimReport {
        mean_success: mean_over(&success),
        mean_leakage: mean_over(&leakage),
        median_min_error: 1.0 - median(&best_success),
        median_max_error: 1.0 - median_worst_success,
        states,
        success,
        leakage,
        worst_success,
        worst_leakage,
        median_worst_success,
        median_worst_leakage,
        holevo_budget,
        rate_budget: k_n,
        message_rate: (config.m as f64).log2() / config.n as f64,
        typical_mass: mass,
        lambda: config.lambda,
        mu: config.mu,
        success_pass: 1.0 - median_worst_success <= config.lambda,
        leakage_pass: median_worst_leakage <= config.mu,
    })
}
