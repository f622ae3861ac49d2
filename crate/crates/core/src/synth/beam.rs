use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cantilever clamped at its left end with a point load at the tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSpec {
    pub length_mm: f64,
    pub height_mm: f64,
    /// N/mm².
    pub modulus: f64,
    /// mm⁴.
    pub inertia: f64,
    /// N, downward.
    pub load: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            length_mm: 2644.0,
            height_mm: 352.5,
            modulus: 3000.0,
            inertia: 1.825e8,
            load: 0.0,
        }
    }
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.length_mm, self.height_mm, self.modulus, self.inertia];
        if dims.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !self.load.is_finite() || self.load < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beam dimensions and stiffness must be positive, load non-negative: {self:?}"
            )));
        }
        Ok(())
    }

    /// Same beam carrying `load`.
    pub fn with_load(&self, load: f64) -> Self {
        Self { load, ..self.clone() }
    }

    /// Tip load giving a tip deflection of `tip_mm`.
    pub fn load_for_tip(&self, tip_mm: f64) -> f64 {
        3.0 * self.modulus * self.inertia * tip_mm / self.length_mm.powi(3)
    }

    pub fn tip_deflection(&self) -> f64 {
        self.load * self.length_mm.powi(3) / (3.0 * self.modulus * self.inertia)
    }
}

/// Euler-Bernoulli deflection `w(x) = P x² (3L - x) / (6EI)`, downward
/// positive, with the clamped end at `x = 0`.
pub fn cantilever_deflection(x_mm: f64, beam: &BeamSpec) -> Result<f64> {
    if !(0.0..=beam.length_mm).contains(&x_mm) {
        return Err(Error::InvalidParameter(format!(
            "x = {x_mm} mm outside the beam [0, {}]",
            beam.length_mm
        )));
    }
    Ok(deflection_unchecked(x_mm, beam))
}

pub(crate) fn deflection_unchecked(x_mm: f64, beam: &BeamSpec) -> f64 {
    beam.load * x_mm * x_mm * (3.0 * beam.length_mm - x_mm) / (6.0 * beam.modulus * beam.inertia)
}
