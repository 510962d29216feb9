//! Acceptance criteria, one line each. Runs as a plain binary (`harness = false`)
//! and exits non-zero when any criterion fails.

use std::time::{Duration, Instant};

use bosonic_wiretap::capacity::{capacity_csi, capacity_nocsi, gordon, EnergyConstraint};
use bosonic_wiretap::channel::{ChannelState, StateSet};
use bosonic_wiretap::covering::{log_log_slope, run_covering_trials, CoveringConfig};
use bosonic_wiretap::ensemble::CoherentEnsemble;
use bosonic_wiretap::fock::{
    trace_distance, truncation_bound_check, truncation_mass, von_neumann_entropy,
    CoherentAmplitude, DensityMatrix, FockCutoff,
};
use bosonic_wiretap::gaussian::{discretize, discretize_to, td_bound, DEFAULT_MAX_PATCHES};
use bosonic_wiretap::verify::{
    random_typicality_instance, run_suite, typicality_check, Suite, VerifyOptions,
};
use bosonic_wiretap::wiretap::{receiver_holevo, simulate, SimConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn oracle_g(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

fn capacity_reproduction() -> Outcome {
    let oracle = oracle_g(0.64) - oracle_g(0.04);
    let frozen = 1.337_927_980_706_92;
    let start = Instant::now();
    let set = StateSet::singleton(ChannelState::new(0.8, 0.2).unwrap());
    let e = EnergyConstraint::new(1.0).unwrap();
    let csi = capacity_csi(&set, e).unwrap().value;
    let nocsi = capacity_nocsi(&set, e).unwrap().value;
    let elapsed = start.elapsed();
    let passed = (csi - oracle).abs() <= 1e-9
        && (nocsi - oracle).abs() <= 1e-9
        && (oracle - frozen).abs() <= 1e-12
        && elapsed < Duration::from_millis(1);
    Outcome {
        passed,
        detail: format!("c_csi={csi:.12} c_nocsi={nocsi:.12} oracle={oracle:.12} in {elapsed:?}"),
    }
}

fn gaussian_entropy() -> Outcome {
    let start = Instant::now();
    let cutoff = FockCutoff::new(40);
    let target = gordon(1.0).unwrap();
    let mut gaps = Vec::new();
    for delta in [0.5, 0.2, 0.1] {
        let ens = discretize_to(1.0, delta, DEFAULT_MAX_PATCHES).unwrap();
        let rho = ens.average_state(cutoff).unwrap();
        gaps.push((von_neumann_entropy(&rho).unwrap() - target).abs());
    }
    let elapsed = start.elapsed();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        passed: gaps[2] <= 0.05 && monotone && elapsed < Duration::from_secs(30),
        detail: format!("gaps (delta 0.5, 0.2, 0.1) = {gaps:.4?} in {elapsed:.2?}"),
    }
}

fn discretization_bound() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut rows = Vec::new();
    for energy in [0.5, 1.0, 2.0] {
        for (outer, fine) in [(1.5, 0.5), (2.5, 0.3), (3.0, 0.2)] {
            let ens = discretize(energy, outer, fine).unwrap();
            let cutoff = FockCutoff::energy_rule(ens.max_energy().max(energy), 0);
            let thermal = DensityMatrix::thermal(energy, cutoff).unwrap();
            let approx = ens.average_state(cutoff).unwrap();
            let tails = (1.0 - thermal.trace()).max(0.0) + (1.0 - approx.trace()).max(0.0);
            let measured = trace_distance(&thermal, &approx).unwrap();
            let allowed = td_bound(outer, fine, energy) + 2.0 * tails;
            worst = worst.min(allowed - measured);
            rows.push(format!(
                "E={energy} R={outer} r={fine}: {measured:.4}<={allowed:.4}"
            ));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: worst >= 0.0 && elapsed < Duration::from_secs(60),
        detail: format!(
            "worst margin {worst:.4}; {} in {elapsed:.2?}",
            rows.join(", ")
        ),
    }
}

fn truncation_grid() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut cases = 0;
    for k in 1..=20 {
        let a2 = 0.2 * k as f64;
        let n = (8.0 * std::f64::consts::E * a2).floor() as usize + 1;
        let cutoff = FockCutoff::new(n);
        let mass = truncation_mass(CoherentAmplitude::real(a2.sqrt()).unwrap(), cutoff);
        let check = truncation_bound_check(a2, cutoff);
        ok &= check.applicable && check.holds && mass >= 1.0 - 0.5 * 2f64.powi(-(n as i32));
        cases += 1;
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: ok && elapsed < Duration::from_secs(1),
        detail: format!(
            "{cases} grid points with N = floor(8e|a|^2)+1, |a|^2 <= 4, in {elapsed:.2?}"
        ),
    }
}

fn suite_outcome(suite: Suite, trials: usize, seed: u64, limit: Duration) -> Outcome {
    let start = Instant::now();
    let r = run_suite(
        suite,
        &VerifyOptions {
            seed,
            trials: Some(trials),
            ..Default::default()
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    Outcome {
        passed: r.passed && r.checks as usize >= trials && elapsed < limit,
        detail: format!(
            "{} checks, {} violations, worst margin {:.3e}, in {elapsed:.2?}",
            r.checks, r.violations, r.worst_margin
        ),
    }
}

fn covering_trend() -> Outcome {
    let start = Instant::now();
    let input = CoherentEnsemble::real(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
    let ls = [64u64, 256, 1024];
    let mut means = Vec::new();
    let mut within = true;
    for &l in &ls {
        let cfg = CoveringConfig {
            eta: 0.5,
            n: 1,
            l,
            trials: 200,
            eps: 0.1,
            delta: 0.1,
            cutoff: FockCutoff::new(12),
            seed: 2024,
        };
        let out = run_covering_trials(&input, &cfg).unwrap();
        within &= out.within_bound();
        means.push(out.mean_distance);
    }
    let xs: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let slope = log_log_slope(&xs, &means).unwrap();
    let elapsed = start.elapsed();
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        passed: within
            && monotone
            && (slope + 0.5).abs() <= 0.15
            && elapsed < Duration::from_secs(300),
        detail: format!("mean distances {means:.4?}, slope {slope:.3}, in {elapsed:.2?}"),
    }
}

fn wiretap_trend() -> Outcome {
    let start = Instant::now();
    let input = CoherentEnsemble::real(&[0.0, 1.5], &[0.5, 0.5]).unwrap();
    let state = ChannelState::new(0.9, 0.5).unwrap();
    let rate = 0.375;
    let gamma = 0.05;
    let budget = receiver_holevo(&input, state.tau());
    let mut success = Vec::new();
    let mut leak_ok = true;
    let mut leaks = Vec::new();
    for n in [4usize, 6, 8] {
        let m = (rate * n as f64).exp2().round() as usize;
        let run = |l: usize| {
            simulate(&SimConfig {
                input: input.clone(),
                states: StateSet::singleton(state),
                net_mu: None,
                n,
                m,
                l,
                gamma,
                delta: 0.3,
                energy: None,
                cutoff: FockCutoff::new(12),
                seed: 8,
                trials: 31,
                lambda: 1.0,
                mu: 1e9,
                rate_check: false,
            })
            .unwrap()
        };
        let (one, sixteen) = (run(1), run(16));
        success.push(one.median_worst_success);
        leak_ok &= sixteen.median_worst_leakage <= one.median_worst_leakage;
        leaks.push((one.median_worst_leakage, sixteen.median_worst_leakage));
    }
    let elapsed = start.elapsed();
    let monotone = success.windows(2).all(|w| w[1] >= w[0]);
    Outcome {
        passed: rate <= budget - gamma && monotone && leak_ok && elapsed < Duration::from_secs(600),
        detail: format!(
            "rate {rate} vs budget {budget:.3}; median success {success:.4?}; leakage (L=1, L=16) {leaks:.3?}; in {elapsed:.2?}"
        ),
    }
}

fn typicality_exactness() -> Outcome {
    let start = Instant::now();
    let fixed = typicality_check(0.9, 10, 0.05).unwrap();
    let mut ok = fixed.exact
        && fixed.size_enumerated == 10
        && (fixed.mass_formula - 0.387_420_489).abs() < 1e-12;
    for t in 1..=20 {
        let (p0, n, delta) = random_typicality_instance(99, t);
        ok &= typicality_check(p0, n, delta).unwrap().exact;
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: ok && elapsed < Duration::from_secs(30),
        detail: format!(
            "|T|={} Delta={:.6} plus 20 random binary instances, in {elapsed:.2?}",
            fixed.size_enumerated, fixed.mass_formula
        ),
    }
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("capacity reproduction", Box::new(capacity_reproduction)),
        ("gaussian entropy identity", Box::new(gaussian_entropy)),
        ("discretization bound", Box::new(discretization_bound)),
        ("truncation bound", Box::new(truncation_grid)),
        (
            "coherent trace distance",
            Box::new(|| suite_outcome(Suite::TraceDistance, 1000, 5, Duration::from_secs(20))),
        ),
        (
            "entropy continuity",
            Box::new(|| suite_outcome(Suite::Continuity, 10_000, 6, Duration::from_secs(60))),
        ),
        ("covering trend", Box::new(covering_trend)),
        ("wiretap trend", Box::new(wiretap_trend)),
        (
            "chi equals relative entropy",
            Box::new(|| suite_outcome(Suite::ChiRelativeEntropy, 100, 9, Duration::from_secs(10))),
        ),
        ("typicality exactness", Box::new(typicality_exactness)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        if !out.passed {
            failures += 1;
        }
        println!(
            "{} [{}] {}: {}",
            if out.passed { "PASS" } else { "FAIL" },
            i + 1,
            name,
            out.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
