//! Truncated Fock-space numerics.
//!
//! States of a single bosonic mode are represented in the photon-number basis
//! `|0>, ..., |n_max>`. Truncated coherent states keep their exact amplitudes
//! and are therefore sub-normalized by the Poisson tail beyond `n_max`; the
//! renormalized form `P_N rho P_N / Tr[P_N rho P_N]` is available through
//! [`DensityMatrix::truncate_and_normalize`].
//!
//! Matrices are Hermitian-symmetrized before every eigendecomposition and
//! eigenvalues below [`EIGEN_CLIP`] are treated as zero in entropies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Eigenvalues below this are clipped to zero inside entropies.
pub const EIGEN_CLIP: f64 = 1e-14;
/// Hermiticity tolerance for user-supplied matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = -1e-10;
/// Trace tolerance for the `normalized` flag.
pub const NORMALIZED_TOL: f64 = 1e-10;
/// Trace tolerance required by entropy functions.
pub const ENTROPY_TRACE_TOL: f64 = 1e-8;

const EIGHT_E: f64 = 8.0 * std::f64::consts::E;

/// Complex field amplitude of a coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct CoherentAmplitude(Complex64);

impl CoherentAmplitude {
    pub fn new(value: Complex64) -> Result<Self> {
        ensure_finite("Re(alpha)", value.re)?;
        ensure_finite("Im(alpha)", value.im)?;
        Ok(Self(value))
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn abs2(&self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0 * factor)
    }
}

impl TryFrom<[f64; 2]> for CoherentAmplitude {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(Complex64::new(v[0], v[1]))
    }
}

impl From<CoherentAmplitude> for [f64; 2] {
    fn from(a: CoherentAmplitude) -> Self {
        [a.0.re, a.0.im]
    }
}

/// Highest retained photon number `N`; the truncated space has dimension `N + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const fn new(n_max: usize) -> Self {
        Self(n_max)
    }

    pub const fn n_max(&self) -> usize {
        self.0
    }

    pub const fn dim(&self) -> usize {
        self.0 + 1
    }

    /// Smallest cutoff with `N > 8e * max_abs2`, raised to `requested` if larger.
    pub fn energy_rule(max_abs2: f64, requested: usize) -> Self {
        let rule = (EIGHT_E * max_abs2.max(0.0)).ceil() as usize + 1;
        Self(rule.max(requested))
    }

    /// `N = ceil(2 log2 n)`, the block-length driven choice.
    pub fn block_length_rule(n: usize) -> Self {
        if n <= 1 {
            return Self(0);
        }
        Self((2.0 * (n as f64).log2()).ceil() as usize)
    }

    /// Whether `N > 8e |alpha|^2`, the regime where the truncation bound is claimed.
    pub fn satisfies_energy_rule(&self, abs2: f64) -> bool {
        (self.0 as f64) > EIGHT_E * abs2
    }
}

/// How to pick a cutoff for a set of amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum CutoffPolicy {
    EnergyRule { requested: usize },
    BlockLength { n: usize },
}

impl CutoffPolicy {
    pub fn select(&self, max_abs2: f64) -> FockCutoff {
        match *self {
            CutoffPolicy::EnergyRule { requested } => FockCutoff::energy_rule(max_abs2, requested),
            CutoffPolicy::BlockLength { n } => FockCutoff::block_length_rule(n),
        }
    }
}

/// Pure state in the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
    cutoff: FockCutoff,
}

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::OutOfRange(
                "state vector must have at least one entry".into(),
            ));
        }
        let norm = amplitudes.norm_squared();
        ensure_finite("squared norm", norm)?;
        if norm > 1.0 + 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        let cutoff = FockCutoff::new(amplitudes.len() - 1);
        Ok(Self { amplitudes, cutoff })
    }

    /// Photon-number state `|n>`.
    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(Error::OutOfRange(format!(
                "|{n}> beyond cutoff {}",
                cutoff.n_max()
            )));
        }
        let mut v = DVector::zeros(cutoff.dim());
        v[n] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes: v,
            cutoff,
        })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::new_unchecked(m, Some(self.cutoff))
    }
}

/// Hermitian PSD matrix with trace at most one.
///
/// `cutoff` is `None` for spaces that are not a single truncated mode, such as a
/// classical register tensored with a mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    cutoff: Option<FockCutoff>,
}

impl DensityMatrix {
    /// Validates a matrix on the truncated Fock space of matching dimension.
    pub fn from_fock(matrix: DMatrix<Complex64>, cutoff: FockCutoff) -> Result<Self> {
        if matrix.nrows() != cutoff.dim() {
            return Err(Error::DimensionMismatch(matrix.nrows(), cutoff.dim()));
        }
        Self::validated(matrix, Some(cutoff))
    }

    /// Validates a matrix on a generic finite-dimensional space.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::validated(matrix, None)
    }

    fn validated(matrix: DMatrix<Complex64>, cutoff: Option<FockCutoff>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch(n, matrix.ncols()));
        }
        for z in matrix.iter() {
            ensure_finite("matrix entry", z.re)?;
            ensure_finite("matrix entry", z.im)?;
        }
        for i in 0..n {
            for j in i..n {
                let d = matrix[(i, j)] - matrix[(j, i)].conj();
                if d.norm() > HERMITIAN_TOL {
                    return Err(Error::OutOfRange(format!(
                        "matrix not Hermitian at ({i},{j}), deviation {:e}",
                        d.norm()
                    )));
                }
            }
        }
        let rho = Self::new_unchecked(matrix, cutoff);
        let tr = rho.trace();
        if !(-NORMALIZED_TOL..=1.0 + 1e-12).contains(&tr) {
            return Err(Error::NotNormalized(tr));
        }
        let min = rho
            .eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < PSD_TOL {
            return Err(Error::OutOfRange(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Symmetrizes and wraps without checks; callers guarantee validity.
    pub(crate) fn new_unchecked(matrix: DMatrix<Complex64>, cutoff: Option<FockCutoff>) -> Self {
        let sym = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Self {
            matrix: sym,
            cutoff,
        }
    }

    /// Diagonal state with the given weights.
    pub fn diagonal(weights: &[f64], cutoff: Option<FockCutoff>) -> Result<Self> {
        let v = DVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| Complex64::new(w, 0.0)),
        );
        let m = DMatrix::from_diagonal(&v);
        match cutoff {
            Some(c) => Self::from_fock(m, c),
            None => Self::from_matrix(m),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / dim as f64; dim], None)
    }

    /// Thermal state with mean photon number `mean`, truncated at `cutoff`
    /// (sub-normalized by the geometric tail).
    pub fn thermal(mean: f64, cutoff: FockCutoff) -> Result<Self> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::OutOfRange(format!("thermal mean {mean}")));
        }
        let q = mean / (mean + 1.0);
        let weights: Vec<f64> = (0..cutoff.dim())
            .map(|n| {
                if n == 0 {
                    1.0 / (mean + 1.0)
                } else {
                    q.powi(n as i32) / (mean + 1.0)
                }
            })
            .collect();
        let v = DVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| Complex64::new(w, 0.0)),
        );
        Ok(Self::new_unchecked(
            DMatrix::from_diagonal(&v),
            Some(cutoff),
        ))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn cutoff(&self) -> Option<FockCutoff> {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= NORMALIZED_TOL
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `Tr[op * rho]` for a Hermitian operator, real part.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Result<f64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(op.nrows(), self.dim()));
        }
        Ok(trace_product(op, &self.matrix))
    }

    /// `lambda * P_N rho P_N` with `lambda = 1 / Tr[P_N rho P_N]`, on the smaller space.
    pub fn truncate_and_normalize(&self, cutoff: FockCutoff) -> Result<Self> {
        let d = cutoff.dim();
        if d > self.dim() {
            return Err(Error::DimensionMismatch(d, self.dim()));
        }
        let block = self.matrix.view((0, 0), (d, d)).into_owned();
        let tr: f64 = block.diagonal().iter().map(|z| z.re).sum();
        if tr <= 0.0 {
            return Err(Error::NotNormalized(tr));
        }
        Ok(Self::new_unchecked(
            block / Complex64::new(tr, 0.0),
            Some(cutoff),
        ))
    }

    /// Tensor product `self ⊗ other` on a generic space.
    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::new_unchecked(self.matrix.kronecker(&other.matrix), None)
    }
}

/// An ensemble member: a pure vector or a mixed state.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.cutoff().dim(),
            QuantumState::Mixed(m) => m.dim(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => v.norm_sqr(),
            QuantumState::Mixed(m) => m.trace(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(v) => v.projector(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }
}

impl From<StateVector> for QuantumState {
    fn from(v: StateVector) -> Self {
        QuantumState::Pure(v)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(m: DensityMatrix) -> Self {
        QuantumState::Mixed(m)
    }
}

/// Probability-weighted list of states on a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStates {
    entries: Vec<(f64, QuantumState)>,
}

impl WeightedStates {
    pub fn new(entries: Vec<(f64, QuantumState)>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidProbabilities("empty ensemble".into()));
        };
        let dim = first.1.dim();
        let mut sum = 0.0;
        for (p, s) in &entries {
            if !(*p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidProbabilities(format!("probability {p}")));
            }
            if s.dim() != dim {
                return Err(Error::MixedCutoffs(dim, s.dim()));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, QuantumState)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries[0].1.dim()
    }
}

/// Truncated coherent state `e^{-|a|^2/2} sum_n a^n / sqrt(n!) |n>`, not renormalized.
pub fn coherent_vector(alpha: CoherentAmplitude, cutoff: FockCutoff) -> Result<StateVector> {
    let a = alpha.value();
    let abs2 = alpha.abs2();
    let dim = cutoff.dim();
    let mut v = DVector::<Complex64>::zeros(dim);
    if abs2 == 0.0 {
        v[0] = Complex64::new(1.0, 0.0);
        return Ok(StateVector {
            amplitudes: v,
            cutoff,
        });
    }
    let ln_abs = 0.5 * abs2.ln();
    let phase = a.arg();
    let mut ln_fact = 0.0;
    let mut any = false;
    for n in 0..dim {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let ln_mag = -0.5 * abs2 + n as f64 * ln_abs - 0.5 * ln_fact;
        let mag = ln_mag.exp();
        if mag > 0.0 {
            any = true;
        }
        v[n] = Complex64::from_polar(mag, n as f64 * phase);
    }
    if !any {
        return Err(Error::CutoffTooSmall {
            abs2,
            n_max: cutoff.n_max(),
        });
    }
    Ok(StateVector {
        amplitudes: v,
        cutoff,
    })
}

/// `(ln P[K <= n_max], ln P[K > n_max])` for `K ~ Poisson(mean)`.
pub fn poisson_split_ln(mean: f64, n_max: usize) -> (f64, f64) {
    if mean <= 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0;
    let mut lower = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        lower.push(-mean + k as f64 * ln_mean - ln_fact);
    }
    let mut upper = Vec::new();
    let mut k = n_max + 1;
    let mut best = f64::NEG_INFINITY;
    loop {
        ln_fact += (k as f64).ln();
        let t = -mean + k as f64 * ln_mean - ln_fact;
        best = best.max(t);
        upper.push(t);
        // past the mode and negligible relative to the largest term
        if (k as f64) > mean && t < best - 60.0 {
            break;
        }
        k += 1;
    }
    (log_sum_exp(&lower), log_sum_exp(&upper))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `Tr[P_N |a><a|]`, the Poisson CDF at `n_max` with mean `|a|^2`.
pub fn truncation_mass(alpha: CoherentAmplitude, cutoff: FockCutoff) -> f64 {
    let (lower, upper) = poisson_split_ln(alpha.abs2(), cutoff.n_max());
    if upper < (0.5f64).ln() {
        -upper.exp_m1()
    } else {
        lower.exp()
    }
}

/// `1 - Tr[P_N |a><a|]`, computed without cancellation.
pub fn truncation_tail(alpha: CoherentAmplitude, cutoff: FockCutoff) -> f64 {
    let (lower, upper) = poisson_split_ln(alpha.abs2(), cutoff.n_max());
    if lower < (0.5f64).ln() {
        -lower.exp_m1()
    } else {
        upper.exp()
    }
}

/// Outcome of checking `Tr[P_N |a><a|] >= 1 - 2^{-N}/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBoundCheck {
    pub abs2: f64,
    pub n_max: usize,
    /// `N > 8e |a|^2`.
    pub applicable: bool,
    pub holds: bool,
    /// `log2` of the tail mass.
    pub log2_tail: f64,
    /// `log2` of the allowed tail `2^{-N}/2`.
    pub log2_allowed: f64,
}

/// Compares the exact tail with `2^{-(N+1)}` in the log domain. Violations for
/// `N <= 8e|a|^2` are recorded, not treated as errors.
pub fn truncation_bound_check(abs2: f64, cutoff: FockCutoff) -> TruncationBoundCheck {
    let (_, ln_tail) = poisson_split_ln(abs2, cutoff.n_max());
    let log2_tail = ln_tail / std::f64::consts::LN_2;
    let log2_allowed = -(cutoff.n_max() as f64) - 1.0;
    TruncationBoundCheck {
        abs2,
        n_max: cutoff.n_max(),
        applicable: cutoff.satisfies_energy_rule(abs2),
        holds: log2_tail <= log2_allowed,
        log2_tail,
        log2_allowed,
    }
}

/// `sum_i p_i rho_i`.
pub fn density_of(ensemble: &WeightedStates) -> DensityMatrix {
    let d = ensemble.dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    let mut cutoff = None;
    for (p, s) in ensemble.entries() {
        let w = Complex64::new(*p, 0.0);
        match s {
            QuantumState::Pure(v) => {
                cutoff = Some(v.cutoff());
                m.ger(
                    w,
                    v.amplitudes(),
                    &v.amplitudes().conjugate(),
                    Complex64::new(1.0, 0.0),
                );
            }
            QuantumState::Mixed(r) => {
                cutoff = cutoff.or(r.cutoff());
                m += r.matrix() * w;
            }
        }
    }
    DensityMatrix::new_unchecked(m, cutoff)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Shannon entropy in bits of a spectrum, clipping tiny eigenvalues.
pub fn spectral_entropy(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > EIGEN_CLIP)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// `S(rho) = -Tr[rho log2 rho]`; rejects states whose trace differs from one by more than 1e-8.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > ENTROPY_TRACE_TOL {
        return Err(Error::NotNormalized(tr));
    }
    Ok(spectral_entropy(&rho.eigenvalues()))
}

/// `||rho - sigma||_1`, the sum of absolute eigenvalues of the difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let diff = rho.matrix() - sigma.matrix();
    Ok(hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum())
}

/// Closed form `2 sqrt(1 - exp(-|a - b|^2))` for untruncated coherent states.
pub fn coherent_trace_distance(alpha: CoherentAmplitude, beta: CoherentAmplitude) -> f64 {
    let d2 = (alpha.value() - beta.value()).norm_sqr();
    2.0 * (-(-d2).exp_m1()).sqrt()
}

/// `chi = S(sum p_i rho_i) - sum p_i S(rho_i)`; pure members contribute zero.
pub fn holevo_quantity(ensemble: &WeightedStates) -> Result<f64> {
    let avg = density_of(ensemble);
    let mut chi = von_neumann_entropy(&avg)?;
    for (p, s) in ensemble.entries() {
        if let QuantumState::Mixed(m) = s {
            if *p > 0.0 {
                chi -= p * von_neumann_entropy(m)?;
            }
        }
    }
    Ok(chi)
}

/// Eigenvalue of `sigma` treated as zero when testing support inclusion.
pub const SUPPORT_EIGEN_TOL: f64 = 1e-12;
/// Weight of `rho` tolerated on the null space of `sigma`.
pub const SUPPORT_LEAK_TOL: f64 = 1e-10;

/// `D(rho || sigma) = Tr[rho (log2 rho - log2 sigma)]`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let sym = (sigma.matrix() + sigma.matrix().adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let u = &eig.eigenvectors;
    let rotated = u.adjoint() * rho.matrix() * u;
    let mut cross = 0.0;
    let mut leaked = 0.0;
    for (j, &mu) in eig.eigenvalues.iter().enumerate() {
        let w = rotated[(j, j)].re;
        if mu <= SUPPORT_EIGEN_TOL {
            leaked += w.max(0.0);
        } else {
            cross += w * mu.log2();
        }
    }
    if leaked > SUPPORT_LEAK_TOL {
        return Err(Error::InfiniteRelativeEntropy(leaked));
    }
    let neg_entropy = -spectral_entropy(&rho.eigenvalues());
    Ok(neg_entropy - cross)
}

/// `sum_n n rho_nn`, with the basis index read as the photon number.
pub fn mean_photon_number(rho: &DensityMatrix) -> f64 {
    rho.matrix()
        .diagonal()
        .iter()
        .enumerate()
        .map(|(n, z)| n as f64 * z.re)
        .sum()
}

/// Photon number operator on the truncated space.
pub fn number_operator(cutoff: FockCutoff) -> DMatrix<Complex64> {
    let v = DVector::from_iterator(
        cutoff.dim(),
        (0..cutoff.dim()).map(|n| Complex64::new(n as f64, 0.0)),
    );
    DMatrix::from_diagonal(&v)
}

/// Checks `Tr[L rho] <= Tr[L sigma] + ||rho - sigma||_1` for `0 <= L <= 1`.
pub fn finite_support_check(
    lambda_op: &DMatrix<Complex64>,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<bool> {
    if lambda_op.nrows() != rho.dim() || lambda_op.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch(lambda_op.nrows(), rho.dim()));
    }
    let ev = hermitian_eigenvalues(lambda_op);
    let (min, max) = (ev[0], ev[ev.len() - 1]);
    if min < -1e-10 || max > 1.0 + 1e-10 {
        return Err(Error::OperatorOutOfRange { min, max });
    }
    let lhs = rho.expectation(lambda_op)?;
    let rhs = sigma.expectation(lambda_op)? + trace_distance(rho, sigma)?;
    Ok(lhs <= rhs + 1e-10)
}

/// `Re Tr[a b]` without forming the product.
pub(crate) fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn amp(re: f64, im: f64) -> CoherentAmplitude {
        CoherentAmplitude::new(Complex64::new(re, im)).unwrap()
    }

    /// Poisson CDF by direct summation of `e^-m m^k / k!`.
    fn poisson_cdf_oracle(mean: f64, n: usize) -> f64 {
        let mut term = (-mean).exp();
        let mut acc = term;
        for k in 1..=n {
            term *= mean / k as f64;
            acc += term;
        }
        acc
    }

    #[test]
    fn vacuum_vector() {
        let v = coherent_vector(amp(0.0, 0.0), FockCutoff::new(5)).unwrap();
        assert_eq!(v.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(v
            .amplitudes()
            .iter()
            .skip(1)
            .all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn coherent_norm_is_poisson_cdf() {
        let v = coherent_vector(amp(1.0, 0.0), FockCutoff::new(5)).unwrap();
        let oracle = poisson_cdf_oracle(1.0, 5);
        assert_abs_diff_eq!(oracle, 0.999405815182418, epsilon = 1e-14);
        assert_abs_diff_eq!(v.norm_sqr(), oracle, epsilon = 1e-14);
        let big = coherent_vector(amp(1.0, 0.0), FockCutoff::new(60)).unwrap();
        assert_abs_diff_eq!(big.norm_sqr(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn coherent_entries_match_formula() {
        let a = Complex64::new(0.7, -0.4);
        let v = coherent_vector(amp(0.7, -0.4), FockCutoff::new(8)).unwrap();
        let mut fact = 1.0;
        for n in 0..=8usize {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-a.norm_sqr() / 2.0).exp() * a.powu(n as u32) / fact.sqrt();
            assert!((v.amplitudes()[n] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn huge_amplitude_with_tiny_cutoff_is_rejected() {
        let err = coherent_vector(amp(60.0, 0.0), FockCutoff::new(3)).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { .. }));
        assert!(err.to_string().contains("cutoff too small for amplitude"));
    }

    #[test]
    fn truncation_mass_values() {
        assert_abs_diff_eq!(
            truncation_mass(amp(1.0, 0.0), FockCutoff::new(5)),
            poisson_cdf_oracle(1.0, 5),
            epsilon = 1e-14
        );
        assert_eq!(truncation_mass(amp(0.0, 0.0), FockCutoff::new(0)), 1.0);
        let m = truncation_mass(amp(1.0, 0.0), FockCutoff::new(25));
        assert!(m >= 1.0 - 0.5 * 2f64.powi(-25));
        // tail vs complement of the CDF, in a regime where both are well conditioned
        let t = truncation_tail(amp(2.0, 0.0), FockCutoff::new(3));
        assert_abs_diff_eq!(t, 1.0 - poisson_cdf_oracle(4.0, 3), epsilon = 1e-14);
        assert_abs_diff_eq!(
            truncation_mass(amp(2.0, 0.0), FockCutoff::new(3)),
            poisson_cdf_oracle(4.0, 3),
            epsilon = 1e-14
        );
    }

    #[test]
    fn truncation_bound_recorded_outside_regime() {
        let c = truncation_bound_check(1.0, FockCutoff::new(25));
        assert!(c.applicable && c.holds);
        let small = truncation_bound_check(4.0, FockCutoff::new(2));
        assert!(!small.applicable);
        assert!(!small.holds);
    }

    #[test]
    fn cutoff_rules() {
        assert_eq!(FockCutoff::energy_rule(1.0, 0).n_max(), 23);
        assert_eq!(FockCutoff::energy_rule(1.0, 40).n_max(), 40);
        assert_eq!(FockCutoff::energy_rule(0.0, 0).n_max(), 1);
        assert!(FockCutoff::energy_rule(4.0, 0).satisfies_energy_rule(4.0));
        assert_eq!(FockCutoff::block_length_rule(16).n_max(), 8);
        assert_eq!(FockCutoff::block_length_rule(100).n_max(), 14);
    }

    #[test]
    fn density_of_simple_ensembles() {
        let c = FockCutoff::new(30);
        let zero = coherent_vector(amp(0.0, 0.0), c).unwrap();
        let one = coherent_vector(amp(1.0, 0.0), c).unwrap();

        let single = WeightedStates::new(vec![(1.0, one.clone().into())]).unwrap();
        assert_eq!(density_of(&single).matrix(), one.projector().matrix());

        let twice =
            WeightedStates::new(vec![(0.5, zero.clone().into()), (0.5, zero.clone().into())])
                .unwrap();
        assert!((density_of(&twice).matrix() - zero.projector().matrix()).norm() < 1e-15);

        // two pure states with overlap o: eigenvalues (1 +- |o|) / 2
        let mixed = WeightedStates::new(vec![(0.5, zero.into()), (0.5, one.into())]).unwrap();
        let ev = density_of(&mixed).eigenvalues();
        let o = (-0.5f64).exp();
        assert_abs_diff_eq!(ev[ev.len() - 1], (1.0 + o) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[ev.len() - 2], (1.0 - o) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mixed_cutoffs_rejected() {
        let a = coherent_vector(amp(0.0, 0.0), FockCutoff::new(3)).unwrap();
        let b = coherent_vector(amp(0.0, 0.0), FockCutoff::new(4)).unwrap();
        let err = WeightedStates::new(vec![(0.5, a.into()), (0.5, b.into())]).unwrap_err();
        assert_eq!(err, Error::MixedCutoffs(4, 5));
    }

    #[test]
    fn entropy_basics() {
        let pure = coherent_vector(amp(0.6, 0.2), FockCutoff::new(30))
            .unwrap()
            .projector();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-9);
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&mixed).unwrap(), 2.0, epsilon = 1e-12);
        let half = DensityMatrix::diagonal(&[0.5, 0.0], None).unwrap();
        assert!(matches!(
            von_neumann_entropy(&half),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let c = FockCutoff::new(4);
        let f0 = StateVector::fock(0, c).unwrap().projector();
        let f1 = StateVector::fock(1, c).unwrap().projector();
        assert_abs_diff_eq!(trace_distance(&f0, &f0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&f0, &f1).unwrap(), 2.0, epsilon = 1e-12);

        let c = FockCutoff::new(40);
        let a = coherent_vector(amp(1.0, 0.0), c).unwrap().projector();
        let b = coherent_vector(amp(0.0, 0.0), c).unwrap().projector();
        let expected = coherent_trace_distance(amp(1.0, 0.0), amp(0.0, 0.0));
        assert_abs_diff_eq!(expected, 1.590120195241300, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), expected, epsilon = 1e-6);

        let small = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(
            trace_distance(&a, &small),
            Err(Error::DimensionMismatch(41, 2))
        ));
    }

    #[test]
    fn holevo_examples() {
        let c = FockCutoff::new(30);
        let v = coherent_vector(amp(0.3, 0.1), c).unwrap();
        let same = WeightedStates::new(vec![(0.3, v.clone().into()), (0.7, v.into())]).unwrap();
        assert!(holevo_quantity(&same).unwrap().abs() < 1e-9);

        let f = FockCutoff::new(3);
        let orth = WeightedStates::new(vec![
            (0.5, StateVector::fock(0, f).unwrap().into()),
            (0.5, StateVector::fock(1, f).unwrap().into()),
        ])
        .unwrap();
        assert_abs_diff_eq!(holevo_quantity(&orth).unwrap(), 1.0, epsilon = 1e-12);

        let ens = WeightedStates::new(vec![
            (0.5, coherent_vector(amp(0.0, 0.0), c).unwrap().into()),
            (0.5, coherent_vector(amp(1.0, 0.0), c).unwrap().into()),
        ])
        .unwrap();
        // h((1 + e^{-1/2}) / 2) from the 2x2 Gram matrix
        assert_abs_diff_eq!(
            holevo_quantity(&ens).unwrap(),
            0.715349166710722,
            epsilon = 1e-10
        );
    }

    #[test]
    fn relative_entropy_examples() {
        let pure = DensityMatrix::diagonal(&[1.0, 0.0], None).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(
            relative_entropy(&pure, &mixed).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(relative_entropy(&mixed, &mixed).unwrap().abs() < 1e-12);
        let other = DensityMatrix::diagonal(&[0.0, 1.0], None).unwrap();
        assert!(matches!(
            relative_entropy(&pure, &other),
            Err(Error::InfiniteRelativeEntropy(_))
        ));
    }

    #[test]
    fn photon_number() {
        let c = FockCutoff::new(40);
        let vac = StateVector::fock(0, c).unwrap().projector();
        assert_eq!(mean_photon_number(&vac), 0.0);
        let coh = coherent_vector(amp(1.0, 0.0), c).unwrap().projector();
        assert_abs_diff_eq!(mean_photon_number(&coh), 1.0, epsilon = 1e-6);
        let mix = DensityMatrix::diagonal(&[0.5, 0.0, 0.5], Some(FockCutoff::new(2))).unwrap();
        assert_abs_diff_eq!(mean_photon_number(&mix), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn finite_support_examples() {
        let c = FockCutoff::new(10);
        let rho = coherent_vector(amp(0.5, 0.5), c).unwrap().projector();
        let sigma = DensityMatrix::thermal(0.3, c).unwrap();
        let id = DMatrix::<Complex64>::identity(11, 11);
        assert!(finite_support_check(&id, &rho, &sigma).unwrap());
        assert!(finite_support_check(&id, &rho, &rho).unwrap());
        let bad = id * Complex64::new(2.0, 0.0);
        assert!(matches!(
            finite_support_check(&bad, &rho, &sigma),
            Err(Error::OperatorOutOfRange { .. })
        ));
    }

    #[test]
    fn truncate_and_normalize_renormalizes() {
        let c = FockCutoff::new(30);
        let rho = coherent_vector(amp(1.5, 0.0), c).unwrap().projector();
        let small = rho.truncate_and_normalize(FockCutoff::new(4)).unwrap();
        assert_eq!(small.dim(), 5);
        assert!(small.is_normalized());
        let mass = truncation_mass(amp(1.5, 0.0), FockCutoff::new(4));
        assert_abs_diff_eq!(
            small.matrix()[(0, 0)].re,
            (-2.25f64).exp() / mass,
            epsilon = 1e-12
        );
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::from_matrix(m.clone()).is_err());
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::from_matrix(m.clone())
            .unwrap()
            .is_normalized());
        m[(0, 1)] = Complex64::new(0.9, 0.0);
        m[(1, 0)] = Complex64::new(0.9, 0.0);
        assert!(DensityMatrix::from_matrix(m).is_err());
    }
}
