//! Exact computations on mixtures of pure multi-mode coherent states.
//!
//! A product coherent state `|a_1> ⊗ ... ⊗ |a_n>` is never expanded in the Fock
//! basis. Everything is expressed through the Gram matrix of overlaps
//! `<a|b> = prod_i exp(-(|a_i|^2 + |b_i|^2)/2 + conj(a_i) b_i)`: the nonzero
//! spectrum of `sum_k w_k |v_k><v_k|` equals that of `G^{1/2} W G^{1/2}`.
//! No truncation is involved.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{hermitian_eigenvalues, spectral_entropy};

/// Relative eigenvalue threshold below which the Gram matrix is treated as singular.
pub const GRAM_RANK_TOL: f64 = 1e-12;

/// `<a|b>` for product coherent states.
pub fn coherent_overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let exponent: Complex64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| -0.5 * (x.norm_sqr() + y.norm_sqr()) + x.conj() * y)
        .sum();
    exponent.exp()
}

pub fn gram_matrix(states: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let m = states.len();
    let mut g = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        g[(i, i)] = Complex64::new(1.0, 0.0);
        for j in (i + 1)..m {
            let o = coherent_overlap(&states[i], &states[j]);
            g[(i, j)] = o;
            g[(j, i)] = o.conj();
        }
    }
    g
}

/// Cross overlaps `K[j, q] = <basis_j | query_q>`.
pub fn cross_gram(basis: &[Vec<Complex64>], queries: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    DMatrix::from_fn(basis.len(), queries.len(), |j, q| {
        coherent_overlap(&basis[j], &queries[q])
    })
}

fn hermitian_power(g: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> (DMatrix<Complex64>, usize) {
    let sym = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = GRAM_RANK_TOL * max.max(1.0);
    let n = g.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    let mut rank = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= tol {
            continue;
        }
        rank += 1;
        let v = eig.eigenvectors.column(k);
        out.ger(
            Complex64::new(f(l), 0.0),
            &v,
            &v.conjugate(),
            Complex64::new(1.0, 0.0),
        );
    }
    (out, rank)
}

/// `G^{1/2}` with eigenvalues below the rank threshold dropped.
pub fn sqrt_psd(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    hermitian_power(g, f64::sqrt).0
}

/// Pseudo-inverse square root `V L^{-1/2} V^dagger` and the numerical rank.
pub fn inv_sqrt_psd(g: &DMatrix<Complex64>) -> (DMatrix<Complex64>, usize) {
    hermitian_power(g, |l| 1.0 / l.sqrt())
}

/// Nonzero-relevant spectrum of `sum_k w_k |v_k><v_k|` for real (possibly signed) weights.
pub fn mixture_spectrum(weights: &[f64], gram: &DMatrix<Complex64>) -> Vec<f64> {
    assert_eq!(weights.len(), gram.nrows());
    if weights.iter().all(|&w| w >= 0.0) {
        // W^{1/2} G W^{1/2}: no square root of G needed
        let s: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let m = DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| {
            gram[(i, j)] * (s[i] * s[j])
        });
        return hermitian_eigenvalues(&m);
    }
    let root = sqrt_psd(gram);
    let mut scaled = root.clone();
    for (j, w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    hermitian_eigenvalues(&(scaled * root))
}

/// Entropy in bits of `sum_k w_k |v_k><v_k|`.
pub fn mixture_entropy(weights: &[f64], gram: &DMatrix<Complex64>) -> f64 {
    spectral_entropy(&mixture_spectrum(weights, gram))
}

/// Trace norm of `sum_k c_k |v_k><v_k|` for signed coefficients.
pub fn mixture_trace_norm(coeffs: &[f64], gram: &DMatrix<Complex64>) -> f64 {
    mixture_spectrum(coeffs, gram).iter().map(|l| l.abs()).sum()
}
