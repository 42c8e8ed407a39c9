use serde::{Deserialize, Serialize};

use super::config::MIN_TRACE_REPLICAS;
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::linalg::SpectrumSample;
use crate::spectral_stats::sample_all;
use crate::summary::{mean, mean_stderr};

/// Monte Carlo `E Tr S⁴` against the ceiling `E|ξ|⁸ · m⁴`, obtained by
/// bounding every term of the expanded trace with Hölder's inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMomentCheck {
    pub n: usize,
    pub m: usize,
    pub replicas: usize,
    pub mean: f64,
    pub stderr: f64,
    pub eighth_moment: f64,
    pub ceiling: f64,
}

impl TraceMomentCheck {
    pub fn from_spectra(spec: &EnsembleSpec, spectra: &[SpectrumSample]) -> Self {
        let traces: Vec<f64> = spectra
            .iter()
            .map(|s| s.as_slice().iter().map(|l| l.powi(4)).sum())
            .collect();
        let eighth_moment = spec.entry.eighth_absolute_moment();
        Self {
            n: spec.n,
            m: spec.m,
            replicas: spectra.len(),
            mean: mean(&traces),
            stderr: mean_stderr(&traces),
            eighth_moment,
            ceiling: eighth_moment * (spec.m as f64).powi(4),
        }
    }

    pub fn holds(&self, z: f64) -> bool {
        self.mean <= self.ceiling + z * self.stderr
    }
}

pub fn trace_moment_check(spec: &EnsembleSpec, replicas: usize) -> Result<TraceMomentCheck> {
    if replicas < MIN_TRACE_REPLICAS {
        return Err(Error::TooFew {
            what: "replicas",
            needed: MIN_TRACE_REPLICAS,
            got: replicas,
        });
    }
    Ok(TraceMomentCheck::from_spectra(
        spec,
        &sample_all(spec, replicas)?,
    ))
}
