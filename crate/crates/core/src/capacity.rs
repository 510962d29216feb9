//! Scalar information functions and the compound wiretap capacities.
//!
//! Capacities use the amplitude convention: a state `(tau, eta)` contributes
//! `g(tau^2 E) - g(eta^2 E)`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelState, StateSet};
use crate::error::{Error, Result};

/// Mean photon number per mode allowed at the input.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EnergyConstraint(f64);

impl EnergyConstraint {
    pub fn new(e: f64) -> Result<Self> {
        if !(e >= 0.0) || !e.is_finite() {
            return Err(Error::OutOfRange(format!(
                "energy E = {e} must be finite and >= 0"
            )));
        }
        Ok(Self(e))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for EnergyConstraint {
    type Error = Error;

    fn try_from(e: f64) -> Result<Self> {
        Self::new(e)
    }
}

impl From<EnergyConstraint> for f64 {
    fn from(e: EnergyConstraint) -> f64 {
        e.0
    }
}

/// Gordon function `(x+1) log2(x+1) - x log2 x`, the entropy of a thermal state
/// with mean photon number `x`.
pub fn gordon(x: f64) -> Result<f64> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::OutOfRange(format!(
            "gordon function needs x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok((x.ln_1p() + x * (1.0 / x).ln_1p()) / std::f64::consts::LN_2)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!(
            "binary entropy needs p in [0, 1], got {p}"
        )));
    }
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// `h(eps) + E h(eps / E)`, valid for `0 <= eps <= E / (1 + E)`.
pub fn continuity_bound(epsilon: f64, energy: f64) -> Result<f64> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::OutOfRange(format!(
            "continuity bound needs E > 0, got {energy}"
        )));
    }
    let max = energy / (1.0 + energy);
    if !(epsilon >= 0.0) || epsilon > max * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "continuity bound needs 0 <= eps <= E/(1+E) = {max}, got {epsilon}"
        )));
    }
    let eps = epsilon.min(max);
    Ok(binary_entropy(eps)? + energy * binary_entropy((eps / energy).min(1.0))?)
}

/// A capacity value together with the state attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witnessed {
    pub value: f64,
    pub witness: ChannelState,
}

/// `inf_s (g(tau^2 E) - g(eta^2 E))`; rectangles are evaluated at `(tau_a, eta_b)`.
pub fn capacity_csi(set: &StateSet, energy: EnergyConstraint) -> Result<Witnessed> {
    set.validate()?;
    let e = energy.value();
    match set {
        StateSet::Finite { states } => {
            let mut best: Option<Witnessed> = None;
            for s in states {
                let v = gordon(s.tau().powi(2) * e)? - gordon(s.eta().powi(2) * e)?;
                if best.map_or(true, |b| v < b.value) {
                    best = Some(Witnessed {
                        value: v,
                        witness: *s,
                    });
                }
            }
            best.ok_or(Error::EmptySet)
        }
        StateSet::Rect { tau, eta } => {
            let w = ChannelState::new(tau[0], eta[1])?;
            Ok(Witnessed {
                value: gordon(w.tau().powi(2) * e)? - gordon(w.eta().powi(2) * e)?,
                witness: w,
            })
        }
    }
}

/// Terms of the capacity without state information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoCsi {
    pub value: f64,
    pub inf_receiver: Witnessed,
    pub sup_eavesdropper: Witnessed,
}

/// `(inf_s g(tau^2 E) - sup_s g(eta^2 E))_+`.
pub fn capacity_nocsi(set: &StateSet, energy: EnergyConstraint) -> Result<NoCsi> {
    set.validate()?;
    let e = energy.value();
    let (inf_receiver, sup_eavesdropper) = match set {
        StateSet::Finite { states } => {
            let first = *states.first().ok_or(Error::EmptySet)?;
            let (mut lo, mut hi) = (first, first);
            for s in states {
                if s.tau() < lo.tau() {
                    lo = *s;
                }
                if s.eta() > hi.eta() {
                    hi = *s;
                }
            }
            (
                Witnessed {
                    value: gordon(lo.tau().powi(2) * e)?,
                    witness: lo,
                },
                Witnessed {
                    value: gordon(hi.eta().powi(2) * e)?,
                    witness: hi,
                },
            )
        }
        StateSet::Rect { tau, eta } => {
            let w = ChannelState::new(tau[0], eta[1])?;
            (
                Witnessed {
                    value: gordon(tau[0].powi(2) * e)?,
                    witness: w,
                },
                Witnessed {
                    value: gordon(eta[1].powi(2) * e)?,
                    witness: w,
                },
            )
        }
    };
    Ok(NoCsi {
        value: (inf_receiver.value - sup_eavesdropper.value).max(0.0),
        inf_receiver,
        sup_eavesdropper,
    })
}

/// Both capacities of a state set at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    #[serde(rename = "E")]
    pub energy: f64,
    pub c_csi: f64,
    pub c_nocsi: f64,
    pub inf_receiver_entropy: f64,
    pub sup_eavesdropper_entropy: f64,
    pub witness_csi: ChannelState,
    pub witness_inf: ChannelState,
    pub witness_sup: ChannelState,
}

/// Flat CSV form of [`CapacityReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    #[serde(rename = "E")]
    pub energy: f64,
    pub c_csi: f64,
    pub c_nocsi: f64,
    pub inf_receiver_entropy: f64,
    pub sup_eavesdropper_entropy: f64,
    pub witness_csi_tau: f64,
    pub witness_csi_eta: f64,
    pub witness_inf_tau: f64,
    pub witness_inf_eta: f64,
    pub witness_sup_tau: f64,
    pub witness_sup_eta: f64,
}

impl CapacityReport {
    pub fn compute(set: &StateSet, energy: EnergyConstraint) -> Result<Self> {
        let csi = capacity_csi(set, energy)?;
        let nocsi = capacity_nocsi(set, energy)?;
        Ok(Self {
            energy: energy.value(),
            c_csi: csi.value,
            c_nocsi: nocsi.value,
            inf_receiver_entropy: nocsi.inf_receiver.value,
            sup_eavesdropper_entropy: nocsi.sup_eavesdropper.value,
            witness_csi: csi.witness,
            witness_inf: nocsi.inf_receiver.witness,
            witness_sup: nocsi.sup_eavesdropper.witness,
        })
    }

    pub fn row(&self) -> CapacityRow {
        CapacityRow {
            energy: self.energy,
            c_csi: self.c_csi,
            c_nocsi: self.c_nocsi,
            inf_receiver_entropy: self.inf_receiver_entropy,
            sup_eavesdropper_entropy: self.sup_eavesdropper_entropy,
            witness_csi_tau: self.witness_csi.tau(),
            witness_csi_eta: self.witness_csi.eta(),
            witness_inf_tau: self.witness_inf.tau(),
            witness_inf_eta: self.witness_inf.eta(),
            witness_sup_tau: self.witness_sup.tau(),
            witness_sup_eta: self.witness_sup.eta(),
        }
    }
}

/// Half-open cell index `(k w, (k+1) w]` of `x` on a grid of width `w` over `[0, 1]`.
fn cell_index(x: f64, w: f64) -> i64 {
    ((x / w).ceil() as i64 - 1).max(0)
}

/// Limiting rate of the two-block scheme with state information.
///
/// A pilot block of length `sqrt(n)` at rate `pilot_rate` tells the sender the cell
/// of width `2^-M1`, `M1 = floor(sqrt(n) pilot_rate)`, that contains the state;
/// the remaining `n - sqrt(n)` uses run the no-CSI code of the worst cell.
pub fn csi_two_block_rate(
    set: &StateSet,
    energy: EnergyConstraint,
    n: u64,
    pilot_rate: f64,
) -> Result<f64> {
    if n < 4 {
        return Err(Error::OutOfRange(format!(
            "two-block rate needs n >= 4, got {n}"
        )));
    }
    if !(pilot_rate >= 0.0) || !pilot_rate.is_finite() {
        return Err(Error::OutOfRange(format!(
            "pilot rate must be finite and >= 0, got {pilot_rate}"
        )));
    }
    set.validate()?;
    let root = (n as f64).sqrt();
    let m1 = (root * pilot_rate).floor().min(1000.0);
    let w = (-m1).exp2();
    let worst = match set {
        // Every cell touching the corner (tau_a, eta_b) sees both extremes, so the
        // worst cell is as bad as the whole rectangle.
        StateSet::Rect { .. } => capacity_nocsi(set, energy)?.value,
        StateSet::Finite { states } => {
            let mut cells: std::collections::BTreeMap<(i64, i64), Vec<ChannelState>> =
                Default::default();
            for s in states {
                cells
                    .entry((cell_index(s.tau(), w), cell_index(s.eta(), w)))
                    .or_default()
                    .push(*s);
            }
            let mut worst = f64::INFINITY;
            for members in cells.into_values() {
                worst =
                    worst.min(capacity_nocsi(&StateSet::Finite { states: members }, energy)?.value);
            }
            worst
        }
    };
    Ok(worst * (n as f64 - root) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: f64) -> EnergyConstraint {
        EnergyConstraint::new(x).unwrap()
    }

    fn st(t: f64, h: f64) -> ChannelState {
        ChannelState::new(t, h).unwrap()
    }

    #[test]
    fn gordon_values() {
        assert_eq!(gordon(0.0).unwrap(), 0.0);
        assert!((gordon(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((gordon(3.0).unwrap() - (8.0 - 3.0 * 3f64.log2())).abs() < 1e-14);
        assert!(gordon(-1e-3).is_err());
        // tiny x: g(x) ~ x log2(e/x)
        let x = 1e-12;
        let approx = x * (std::f64::consts::E / x).log2();
        assert!((gordon(x).unwrap() - approx).abs() < 1e-20);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        let p: f64 = 0.11;
        let oracle = -p * p.ln() / 2f64.ln() - (1.0 - p) * (1.0 - p).ln() / 2f64.ln();
        assert!((binary_entropy(p).unwrap() - oracle).abs() < 1e-15);
        assert!((binary_entropy(p).unwrap() - 0.49992).abs() < 1e-4);
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn continuity_values() {
        assert_eq!(continuity_bound(0.0, 1.0).unwrap(), 0.0);
        assert!((continuity_bound(0.5, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((continuity_bound(0.01, 1.0).unwrap() - 0.161586271791822).abs() < 1e-12);
        let err = continuity_bound(0.6, 1.0).unwrap_err();
        assert!(err.to_string().contains("E/(1+E)"));
    }

    #[test]
    fn capacity_examples() {
        let single = StateSet::singleton(st(1.0, 0.0));
        let r = CapacityReport::compute(&single, e(1.0)).unwrap();
        assert!((r.c_csi - 2.0).abs() < 1e-15 && (r.c_nocsi - 2.0).abs() < 1e-15);

        let oracle = gordon(0.64).unwrap() - gordon(0.04).unwrap();
        assert!((oracle - 1.33792798070692).abs() < 1e-12);
        let two = StateSet::finite(vec![st(1.0, 0.0), st(0.8, 0.2)]).unwrap();
        let c = capacity_csi(&two, e(1.0)).unwrap();
        assert!((c.value - oracle).abs() < 1e-12);
        assert_eq!(c.witness, st(0.8, 0.2));

        let rect = StateSet::rect([0.8, 1.0], [0.0, 0.2]).unwrap();
        assert!((capacity_csi(&rect, e(1.0)).unwrap().value - oracle).abs() < 1e-12);

        let clamp = StateSet::finite(vec![st(0.5, 0.1), st(0.9, 0.6)]).unwrap();
        assert_eq!(capacity_nocsi(&clamp, e(1.0)).unwrap().value, 0.0);
        let r0 = CapacityReport::compute(&clamp, e(0.0)).unwrap();
        assert_eq!((r0.c_csi, r0.c_nocsi), (0.0, 0.0));
    }

    #[test]
    fn rect_corner_matches_grid() {
        let rect = StateSet::rect([0.55, 0.95], [0.05, 0.5]).unwrap();
        let mut grid = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                grid.push(st(
                    0.55 + 0.4 * i as f64 / 9.0,
                    0.05 + 0.45 * j as f64 / 9.0,
                ));
            }
        }
        let fin = StateSet::finite(grid).unwrap();
        let a = capacity_csi(&rect, e(2.0)).unwrap().value;
        let b = capacity_csi(&fin, e(2.0)).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn two_block_rate() {
        let single = StateSet::singleton(st(0.9, 0.3));
        let c = capacity_csi(&single, e(1.0)).unwrap().value;
        let r = csi_two_block_rate(&single, e(1.0), 100_000_000, 1.0).unwrap();
        assert!((r - c).abs() < 1e-3 * c);

        let two = StateSet::finite(vec![st(0.9, 0.1), st(0.5, 0.4)]).unwrap();
        let r4 = csi_two_block_rate(&two, e(1.0), 4, 0.0).unwrap();
        assert!((r4 - 0.5 * capacity_nocsi(&two, e(1.0)).unwrap().value).abs() < 1e-15);
        // with enough pilot information the two states fall into separate cells
        let big = csi_two_block_rate(&two, e(1.0), 1_000_000, 1.0).unwrap();
        let csi = capacity_csi(&two, e(1.0)).unwrap().value;
        assert!((big - 0.999 * csi).abs() < 1e-12);
        assert!(csi_two_block_rate(&two, e(1.0), 3, 1.0).is_err());
    }

    #[test]
    fn report_json_and_row() {
        let r = CapacityReport::compute(&StateSet::singleton(st(1.0, 0.0)), e(1.0)).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        assert_eq!(v["witness_csi"], serde_json::json!([1.0, 0.0]));
        assert_eq!(v["E"], serde_json::json!(1.0));
        assert_eq!(r.row().witness_sup_eta, 0.0);
    }
}
