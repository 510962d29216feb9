//! The pure-loss channel `alpha -> tau * alpha`, compound state sets and their nets.

use serde::{Deserialize, Serialize};

use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::fock::{
    coherent_vector, truncation_tail, CoherentAmplitude, FockCutoff, QuantumState, WeightedStates,
};

/// Largest truncation tail accepted by [`output_ensemble`] for any scaled amplitude.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// Amplitude transmissions to the receiver (`tau`) and eavesdropper (`eta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ChannelState {
    tau: f64,
    eta: f64,
}

impl ChannelState {
    pub fn new(tau: f64, eta: f64) -> Result<Self> {
        check_unit("tau", tau)?;
        check_unit("eta", eta)?;
        Ok(Self { tau, eta })
    }

    /// From power transmissivities `T = tau^2`.
    pub fn from_transmissivity(t_tau: f64, t_eta: f64) -> Result<Self> {
        check_unit("receiver transmissivity", t_tau)?;
        check_unit("eavesdropper transmissivity", t_eta)?;
        Self::new(t_tau.sqrt(), t_eta.sqrt())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn component(&self, party: Party) -> f64 {
        match party {
            Party::Receiver => self.tau,
            Party::Eavesdropper => self.eta,
        }
    }
}

impl TryFrom<[f64; 2]> for ChannelState {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<ChannelState> for [f64; 2] {
    fn from(s: ChannelState) -> Self {
        [s.tau, s.eta]
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{name} = {x} not in [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Receiver,
    Eavesdropper,
}

/// Compound state set: a finite list or a closed rectangle in `[0,1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSet {
    Finite { states: Vec<ChannelState> },
    Rect { tau: [f64; 2], eta: [f64; 2] },
}

impl StateSet {
    pub fn finite(states: Vec<ChannelState>) -> Result<Self> {
        let s = StateSet::Finite { states };
        s.validate()?;
        Ok(s)
    }

    pub fn rect(tau: [f64; 2], eta: [f64; 2]) -> Result<Self> {
        let s = StateSet::Rect { tau, eta };
        s.validate()?;
        Ok(s)
    }

    pub fn singleton(state: ChannelState) -> Self {
        StateSet::Finite {
            states: vec![state],
        }
    }

    /// Non-empty, bounds ordered and inside `[0,1]`. Deserialized sets should be
    /// passed through this before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            StateSet::Finite { states } if states.is_empty() => Err(Error::EmptySet),
            StateSet::Finite { .. } => Ok(()),
            StateSet::Rect { tau, eta } => {
                for (name, iv) in [("tau", tau), ("eta", eta)] {
                    check_unit(name, iv[0])?;
                    check_unit(name, iv[1])?;
                    if iv[0] > iv[1] {
                        return Err(Error::InvalidSet(format!(
                            "{name} bounds out of order: {iv:?}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Checks `tau > eta` for every member, the hypothesis of the CSI formula.
    pub fn validate_csi(&self) -> Result<()> {
        self.validate()?;
        match self {
            StateSet::Finite { states } => {
                if let Some(s) = states.iter().find(|s| s.tau <= s.eta) {
                    return Err(Error::InvalidSet(format!(
                        "state ({}, {}) has tau <= eta",
                        s.tau, s.eta
                    )));
                }
                Ok(())
            }
            StateSet::Rect { tau, eta } => {
                if tau[0] <= eta[1] {
                    return Err(Error::InvalidSet(format!(
                        "rectangle corner ({}, {}) has tau <= eta",
                        tau[0], eta[1]
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, s: &ChannelState) -> bool {
        match self {
            StateSet::Finite { states } => states.contains(s),
            StateSet::Rect { tau, eta } => {
                (tau[0]..=tau[1]).contains(&s.tau) && (eta[0]..=eta[1]).contains(&s.eta)
            }
        }
    }

    /// Replaces power transmissivities by amplitude coefficients (`tau = sqrt(T)`).
    pub fn from_transmissivities(&self) -> Result<Self> {
        self.validate()?;
        Ok(match self {
            StateSet::Finite { states } => StateSet::Finite {
                states: states
                    .iter()
                    .map(|s| ChannelState::from_transmissivity(s.tau, s.eta))
                    .collect::<Result<_>>()?,
            },
            StateSet::Rect { tau, eta } => StateSet::Rect {
                tau: [tau[0].sqrt(), tau[1].sqrt()],
                eta: [eta[0].sqrt(), eta[1].sqrt()],
            },
        })
    }

    /// Finite members, building a net when the set is a rectangle.
    pub fn members(&self, params: NetParams) -> Result<Vec<ChannelState>> {
        match build_net(self, params)? {
            StateSet::Finite { states } => Ok(states),
            StateSet::Rect { .. } => unreachable!("build_net returns a finite set"),
        }
    }
}

/// Covering radius per coordinate of a net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NetParams {
    mu: f64,
}

impl NetParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "net radius mu = {mu} not in (0, 1]"
            )));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl TryFrom<f64> for NetParams {
    type Error = Error;

    fn try_from(mu: f64) -> Result<Self> {
        Self::new(mu)
    }
}

impl From<NetParams> for f64 {
    fn from(p: NetParams) -> f64 {
        p.mu
    }
}

/// `alpha -> component * alpha`.
pub fn apply_channel(component: f64, alpha: CoherentAmplitude) -> Result<CoherentAmplitude> {
    check_unit("transmission", component)?;
    Ok(alpha.scaled(component))
}

/// Output states seen by one party, with amplitudes scaled by `tau` or `eta`.
pub fn output_ensemble(
    s: ChannelState,
    which: Party,
    input: &CoherentEnsemble,
    cutoff: FockCutoff,
) -> Result<WeightedStates> {
    output_ensemble_with_tolerance(s, which, input, cutoff, DEFAULT_TAIL_TOLERANCE)
}

/// As [`output_ensemble`], rejecting when any scaled amplitude loses more than
/// `tail_tolerance` of its norm to the truncation.
pub fn output_ensemble_with_tolerance(
    s: ChannelState,
    which: Party,
    input: &CoherentEnsemble,
    cutoff: FockCutoff,
    tail_tolerance: f64,
) -> Result<WeightedStates> {
    let k = s.component(which);
    let mut entries = Vec::with_capacity(input.len());
    for (x, &p) in input.points().iter().zip(input.probs()) {
        let y = apply_channel(k, *x)?;
        if truncation_tail(y, cutoff) > tail_tolerance {
            return Err(Error::CutoffTooSmall {
                abs2: y.abs2(),
                n_max: cutoff.n_max(),
            });
        }
        entries.push((p, QuantumState::Pure(coherent_vector(y, cutoff)?)));
    }
    WeightedStates::new(entries)
}

fn axis_points(lo: f64, hi: f64, mu: f64) -> Vec<f64> {
    let width = hi - lo;
    if width == 0.0 {
        return vec![lo];
    }
    let k = ((width / mu).ceil() as usize).max(1);
    let step = width / k as f64;
    (0..k).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

/// Finite subset of `set` within `mu` per coordinate of every member.
///
/// Rectangles get a grid of cell centres with step at most `mu`, so at most
/// `ceil(1/mu)^2` points; finite sets are returned unchanged.
pub fn build_net(set: &StateSet, params: NetParams) -> Result<StateSet> {
    set.validate()?;
    match set {
        StateSet::Finite { .. } => Ok(set.clone()),
        StateSet::Rect { tau, eta } => {
            let ts = axis_points(tau[0], tau[1], params.mu);
            let es = axis_points(eta[0], eta[1], params.mu);
            let mut states = Vec::with_capacity(ts.len() * es.len());
            for &t in &ts {
                for &e in &es {
                    states.push(ChannelState::new(t, e)?);
                }
            }
            Ok(StateSet::Finite { states })
        }
    }
}

/// `2 sqrt(1 - exp(-n mu E_hat))`: trace-distance bound between `n`-mode outputs of
/// two states within `mu` of each other, for inputs of energy at most `E_hat` per mode.
pub fn perturbation_bound(mu: f64, n: usize, e_hat: f64) -> Result<f64> {
    if !(mu >= 0.0) || !(e_hat >= 0.0) || n == 0 {
        return Err(Error::OutOfRange(format!(
            "perturbation bound needs mu, E >= 0 and n >= 1 (mu={mu}, n={n}, E={e_hat})"
        )));
    }
    let x = n as f64 * mu * e_hat;
    Ok(2.0 * (-(-x).exp_m1()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_trace_distance, holevo_quantity};
    use num_complex::Complex64;

    fn amp(re: f64, im: f64) -> CoherentAmplitude {
        CoherentAmplitude::new(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn channel_scaling() {
        assert_eq!(apply_channel(1.0, amp(2.0, 1.0)).unwrap(), amp(2.0, 1.0));
        assert_eq!(apply_channel(0.0, amp(3.0, -2.0)).unwrap().abs2(), 0.0);
        assert_eq!(apply_channel(0.5, amp(2.0, 0.0)).unwrap(), amp(1.0, 0.0));
        assert!(apply_channel(1.5, amp(1.0, 0.0)).is_err());
    }

    #[test]
    fn output_ensembles() {
        let input = CoherentEnsemble::real(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
        let cut = FockCutoff::new(20);
        let s = ChannelState::new(0.5, 0.0).unwrap();
        let eve = output_ensemble(s, Party::Eavesdropper, &input, cut).unwrap();
        assert!(holevo_quantity(&eve).unwrap().abs() < 1e-12);
        let bob = output_ensemble(s, Party::Receiver, &input, cut).unwrap();
        let expected = coherent_vector(amp(-0.5, 0.0), cut).unwrap();
        match &bob.entries()[1].1 {
            QuantumState::Pure(v) => assert_eq!(v, &expected),
            _ => panic!("pure state expected"),
        }
        let id = output_ensemble(
            ChannelState::new(1.0, 1.0).unwrap(),
            Party::Receiver,
            &input,
            cut,
        )
        .unwrap();
        match &id.entries()[0].1 {
            QuantumState::Pure(v) => assert_eq!(v, &coherent_vector(amp(1.0, 0.0), cut).unwrap()),
            _ => panic!("pure state expected"),
        }
        let big = CoherentEnsemble::real(&[5.0], &[1.0]).unwrap();
        assert!(matches!(
            output_ensemble(
                ChannelState::new(1.0, 0.0).unwrap(),
                Party::Receiver,
                &big,
                FockCutoff::new(10)
            ),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn net_unit_square() {
        let set = StateSet::rect([0.0, 1.0], [0.0, 1.0]).unwrap();
        let mu = NetParams::new(0.5).unwrap();
        let net = build_net(&set, mu).unwrap();
        let StateSet::Finite { states } = &net else {
            panic!()
        };
        assert_eq!(states.len(), 4);
        assert!(states.iter().all(|s| set.contains(s)));
        // exhaustive probe grid
        for i in 0..=100 {
            for j in 0..=100 {
                let (t, e) = (i as f64 / 100.0, j as f64 / 100.0);
                assert!(states
                    .iter()
                    .any(|s| (s.tau() - t).abs() <= 0.5 && (s.eta() - e).abs() <= 0.5));
            }
        }
    }

    #[test]
    fn net_trivial_cases() {
        let fin = StateSet::finite(vec![ChannelState::new(0.9, 0.1).unwrap()]).unwrap();
        assert_eq!(build_net(&fin, NetParams::new(0.1).unwrap()).unwrap(), fin);
        let degenerate = StateSet::rect([0.6, 0.6], [0.2, 0.2]).unwrap();
        let net = build_net(&degenerate, NetParams::new(0.1).unwrap()).unwrap();
        assert_eq!(
            net,
            StateSet::finite(vec![ChannelState::new(0.6, 0.2).unwrap()]).unwrap()
        );
    }

    #[test]
    fn set_validation() {
        assert_eq!(StateSet::finite(vec![]).unwrap_err(), Error::EmptySet);
        assert!(StateSet::rect([0.5, 0.4], [0.0, 0.1]).is_err());
        assert!(StateSet::rect([0.5, 1.2], [0.0, 0.1]).is_err());
        let ok = StateSet::rect([0.8, 1.0], [0.0, 0.2]).unwrap();
        assert!(ok.validate_csi().is_ok());
        let bad = StateSet::rect([0.3, 1.0], [0.0, 0.4]).unwrap();
        assert!(bad.validate_csi().is_err());
    }

    #[test]
    fn state_set_json() {
        let r: StateSet =
            serde_json::from_str(r#"{"kind":"rect","tau":[0.8,1.0],"eta":[0.0,0.2]}"#).unwrap();
        assert_eq!(r, StateSet::rect([0.8, 1.0], [0.0, 0.2]).unwrap());
        let f: StateSet =
            serde_json::from_str(r#"{"kind":"finite","states":[[1,0],[0.8,0.2]]}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"kind":"finite","states":[[1.0,0.0],[0.8,0.2]]}"#
        );
        assert!(
            serde_json::from_str::<StateSet>(r#"{"kind":"finite","states":[[1.5,0]]}"#).is_err()
        );
        assert!(
            serde_json::from_str::<StateSet>(r#"{"kind":"finite","states":[],"x":1}"#).is_err()
        );
    }

    #[test]
    fn perturbation_bound_values() {
        assert_eq!(perturbation_bound(0.0, 5, 3.0).unwrap(), 0.0);
        let b = perturbation_bound(1e-4, 100, 4.0).unwrap();
        assert!((b - 0.396033134208120).abs() < 1e-12);
        // same number as the explicit distance of two single-mode states with |a - b|^2 = 0.04
        assert!((b - coherent_trace_distance(amp(0.2, 0.0), amp(0.0, 0.0))).abs() < 1e-12);
        assert!((perturbation_bound(1.0, 1000, 1000.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn transmissivity_parameterization() {
        let s = ChannelState::from_transmissivity(0.64, 0.04).unwrap();
        assert!((s.tau() - 0.8).abs() < 1e-15 && (s.eta() - 0.2).abs() < 1e-15);
    }
}
