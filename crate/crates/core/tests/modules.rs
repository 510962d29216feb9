//! Integration checks of the Monte Carlo modules against exact or independent routes.

use bosonic_wiretap::channel::{ChannelState, NetParams, StateSet};
use bosonic_wiretap::covering::{run_covering_trials, CoveringConfig};
use bosonic_wiretap::ensemble::CoherentEnsemble;
use bosonic_wiretap::fock::{CoherentAmplitude, FockCutoff};
use bosonic_wiretap::rng::stream_rng;
use bosonic_wiretap::wiretap::{leakage, leakage_truncated, simulate, Codebook, SimConfig};
use num_complex::Complex64;
use rand::Rng;

fn covering_config(l: u64, seed: u64) -> CoveringConfig {
    CoveringConfig {
        eta: 0.5,
        n: 1,
        l,
        trials: 200,
        eps: 0.1,
        delta: 0.1,
        cutoff: FockCutoff::new(12),
        seed,
    }
}

#[test]
fn covering_matrix_respects_bound_and_trend() {
    let ensembles = [
        CoherentEnsemble::real(&[1.0, -1.0], &[0.5, 0.5]).unwrap(),
        CoherentEnsemble::real(&[0.0, 1.5], &[0.7, 0.3]).unwrap(),
        CoherentEnsemble::new(
            vec![
                CoherentAmplitude::new(Complex64::new(1.0, 0.0)).unwrap(),
                CoherentAmplitude::new(Complex64::new(-0.5, 0.8)).unwrap(),
                CoherentAmplitude::new(Complex64::new(-0.5, -0.8)).unwrap(),
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap(),
    ];
    for (i, input) in ensembles.iter().enumerate() {
        let mut means = Vec::new();
        for l in [64, 256, 1024] {
            let out = run_covering_trials(input, &covering_config(l, 100 + i as u64)).unwrap();
            assert!(out.within_bound(), "ensemble {i}, L={l}");
            assert!(out.fake_traces.iter().all(|t| (t - 1.0).abs() < 1e-10));
            means.push(out.mean_distance);
        }
        assert!(
            means.windows(2).all(|w| w[1] <= w[0]),
            "ensemble {i}: {means:?}"
        );
    }
}

fn small_codebook(seed: u64, m: usize, l: usize, n: usize) -> Codebook {
    let mut rng = stream_rng(seed, 9);
    let alphabet: Vec<CoherentAmplitude> = [0.0, 0.9, -0.9]
        .iter()
        .map(|&x| CoherentAmplitude::real(x).unwrap())
        .collect();
    let words = (0..m * l)
        .map(|_| (0..n).map(|_| rng.gen_range(0..3)).collect())
        .collect();
    Codebook::new(alphabet, m, l, words).unwrap()
}

#[test]
fn gram_leakage_matches_dense_matrices() {
    for seed in 0..5 {
        let book = small_codebook(seed, 3, 2, 2);
        for eta in [0.3, 0.7, 1.0] {
            let s = ChannelState::new(1.0, eta).unwrap();
            let dense = leakage_truncated(&book, s, FockCutoff::new(14)).unwrap();
            assert!(
                (leakage(&book, s) - dense).abs() < 1e-6,
                "seed {seed}, eta {eta}"
            );
        }
    }
}

fn sim_config(seed: u64) -> SimConfig {
    SimConfig {
        input: CoherentEnsemble::real(&[0.0, 1.5], &[0.5, 0.5]).unwrap(),
        states: StateSet::rect([0.85, 0.95], [0.4, 0.5]).unwrap(),
        net_mu: Some(NetParams::new(0.05).unwrap()),
        n: 5,
        m: 3,
        l: 2,
        gamma: 0.05,
        delta: 0.3,
        energy: Some(2.0),
        cutoff: FockCutoff::new(8),
        seed,
        trials: 6,
        lambda: 0.5,
        mu: 2.0,
        rate_check: true,
    }
}

#[test]
fn simulation_is_reproducible_per_seed() {
    let a = simulate(&sim_config(11)).unwrap();
    let b = simulate(&sim_config(11)).unwrap();
    assert_eq!(a, b);
    let c = simulate(&sim_config(12)).unwrap();
    assert_ne!(a.success, c.success);
    assert_eq!(a.states.len(), 4);
    for row in &a.success {
        assert!(row.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
    }
    for row in &a.leakage {
        assert!(row.iter().all(|&x| x >= 0.0 && x <= 3f64.log2() + 1e-9));
    }
}
