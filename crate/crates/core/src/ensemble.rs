//! Finite coherent-state ensembles: the channel inputs and discretized Gaussians.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CoherentAmplitude, DensityMatrix, FockCutoff};
use crate::gaussian::td_bound;
use crate::typicality::FiniteDistribution;

/// Probabilities must sum to one within this.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Parameters of the patch discretization an ensemble came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationMeta {
    pub energy: f64,
    pub outer_radius: f64,
    pub fineness: f64,
}

/// Finite set of coherent amplitudes with probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleFile", into = "EnsembleFile")]
pub struct CoherentEnsemble {
    points: Vec<CoherentAmplitude>,
    probs: Vec<f64>,
    meta: Option<DiscretizationMeta>,
}

impl CoherentEnsemble {
    pub fn new(points: Vec<CoherentAmplitude>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidProbabilities("empty ensemble".into()));
        }
        if points.len() != probs.len() {
            return Err(Error::DimensionMismatch(points.len(), probs.len()));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidProbabilities(format!("probability {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self {
            points,
            probs,
            meta: None,
        })
    }

    /// Ensemble from real amplitudes.
    pub fn real(points: &[f64], probs: &[f64]) -> Result<Self> {
        let pts = points
            .iter()
            .map(|&x| CoherentAmplitude::real(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, probs.to_vec())
    }

    pub fn single(point: CoherentAmplitude) -> Self {
        Self {
            points: vec![point],
            probs: vec![1.0],
            meta: None,
        }
    }

    pub(crate) fn with_meta(mut self, meta: DiscretizationMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn points(&self) -> &[CoherentAmplitude] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn meta(&self) -> Option<DiscretizationMeta> {
        self.meta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean photon number `sum p |x|^2`.
    pub fn energy(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x.abs2())
            .sum()
    }

    /// Energy cutoff `max |x|^2` over the support.
    pub fn max_energy(&self) -> f64 {
        self.points.iter().map(|x| x.abs2()).fold(0.0, f64::max)
    }

    /// Every amplitude multiplied by `gamma`; discretization metadata is dropped.
    pub fn scaled(&self, gamma: f64) -> Self {
        Self {
            points: self.points.iter().map(|x| x.scaled(gamma)).collect(),
            probs: self.probs.clone(),
            meta: None,
        }
    }

    pub fn distribution(&self) -> FiniteDistribution {
        FiniteDistribution::new(self.probs.clone()).expect("ensemble probabilities are validated")
    }

    /// `sum_x p(x) |x><x|` with exact (sub-normalized) truncated coherent states.
    pub fn average_state(&self, cutoff: FockCutoff) -> Result<DensityMatrix> {
        let d = cutoff.dim();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (x, &p) in self.points.iter().zip(&self.probs) {
            if p == 0.0 {
                continue;
            }
            let v = crate::fock::coherent_vector(*x, cutoff)?;
            m.ger(
                Complex64::new(p, 0.0),
                v.amplitudes(),
                &v.amplitudes().conjugate(),
                Complex64::new(1.0, 0.0),
            );
        }
        Ok(DensityMatrix::new_unchecked(m, Some(cutoff)))
    }
}

/// On-disk form: `{"E":..,"R":..,"r":..,"points":[[re,im,p],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    energy: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    outer_radius: Option<f64>,
    #[serde(rename = "r", default, skip_serializing_if = "Option::is_none")]
    fineness: Option<f64>,
    points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    td_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_energy: Option<f64>,
}

impl TryFrom<EnsembleFile> for CoherentEnsemble {
    type Error = Error;

    fn try_from(f: EnsembleFile) -> Result<Self> {
        let pts = f
            .points
            .iter()
            .map(|p| CoherentAmplitude::new(Complex64::new(p[0], p[1])))
            .collect::<Result<Vec<_>>>()?;
        let probs = f.points.iter().map(|p| p[2]).collect();
        let ens = Self::new(pts, probs)?;
        Ok(match (f.energy, f.outer_radius, f.fineness) {
            (Some(energy), Some(outer_radius), Some(fineness)) => {
                ens.with_meta(DiscretizationMeta {
                    energy,
                    outer_radius,
                    fineness,
                })
            }
            _ => ens,
        })
    }
}

impl From<CoherentEnsemble> for EnsembleFile {
    fn from(e: CoherentEnsemble) -> Self {
        let max_energy = Some(e.max_energy());
        let points = e
            .points
            .iter()
            .zip(&e.probs)
            .map(|(x, &p)| [x.value().re, x.value().im, p])
            .collect();
        match e.meta {
            Some(m) => EnsembleFile {
                energy: Some(m.energy),
                outer_radius: Some(m.outer_radius),
                fineness: Some(m.fineness),
                points,
                td_bound: Some(td_bound(m.outer_radius, m.fineness, m.energy)),
                max_energy,
            },
            None => EnsembleFile {
                energy: None,
                outer_radius: None,
                fineness: None,
                points,
                td_bound: None,
                max_energy,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let e = CoherentEnsemble::real(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(
            s,
            r#"{"points":[[1.0,0.0,0.5],[-1.0,0.0,0.5]],"max_energy":1.0}"#
        );
        let back: CoherentEnsemble = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CoherentEnsemble::real(&[1.0], &[0.9]).is_err());
        assert!(CoherentEnsemble::real(&[1.0, 2.0], &[1.0]).is_err());
        assert!(
            serde_json::from_str::<CoherentEnsemble>(r#"{"points":[[0,0,1]],"extra":1}"#).is_err()
        );
    }

    #[test]
    fn energy_and_scaling() {
        let e = CoherentEnsemble::real(&[2.0, 0.0], &[0.25, 0.75]).unwrap();
        assert_eq!(e.energy(), 1.0);
        assert_eq!(e.max_energy(), 4.0);
        assert_eq!(e.scaled(0.5).energy(), 0.25);
    }
}
