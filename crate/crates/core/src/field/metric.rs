use serde::{Deserialize, Serialize};

use super::assemble::{DisplacementField, Units};
use crate::error::{Error, Result};

/// `Σ F1 F2 / (sqrt(Σ F1²) sqrt(Σ F2²))` over samples where `valid` holds,
/// summed in index order.
pub fn metric_r(f1: &[f64], f2: &[f64], valid: &[bool]) -> Result<f64> {
    let (mut s12, mut s11, mut s22) = (0.0, 0.0, 0.0);
    for i in 0..f1.len().min(f2.len()).min(valid.len()) {
        if valid[i] {
            s12 += f1[i] * f2[i];
            s11 += f1[i] * f1[i];
            s22 += f2[i] * f2[i];
        }
    }
    if s11 == 0.0 || s22 == 0.0 {
        return Err(Error::UndefinedMetric("R needs two nonzero fields".into()));
    }
    Ok(s12 / (s11.sqrt() * s22.sqrt()))
}

/// `sqrt(Σ (F1 - F2)² / (M N))` with `M N` the number of valid samples.
pub fn metric_d(f1: &[f64], f2: &[f64], valid: &[bool]) -> Result<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for i in 0..f1.len().min(f2.len()).min(valid.len()) {
        if valid[i] {
            let d = f1[i] - f2[i];
            s += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::UndefinedMetric("D needs at least one valid sample".into()));
    }
    Ok((s / n as f64).sqrt())
}

/// Multiplies a pixel field by `mm_per_px`.
pub fn scale_to_mm(field: &DisplacementField, mm_per_px: f64) -> Result<DisplacementField> {
    if !(mm_per_px > 0.0) || !mm_per_px.is_finite() {
        return Err(Error::InvalidParameter(format!("conversion coefficient {mm_per_px} must be positive")));
    }
    if field.units != Units::Px {
        return Err(Error::InvalidParameter("field is already in mm".into()));
    }
    let mut out = field.clone();
    out.u.iter_mut().chain(out.v.iter_mut()).for_each(|x| *x *= mm_per_px);
    out.units = Units::Mm;
    out.mm_per_px = Some(mm_per_px);
    Ok(out)
}

/// Comparison of a measured field against a reference field. `None` marks an
/// undefined metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct FieldReport {
    pub R_u: Option<f64>,
    pub R_v: Option<f64>,
    pub D_u: Option<f64>,
    pub D_v: Option<f64>,
    pub units: Units,
    /// Jointly valid samples over samples valid in the reference.
    pub valid_fraction: f64,
}

pub fn compare_fields(measured: &DisplacementField, reference: &DisplacementField) -> Result<FieldReport> {
    measured.same_grid(reference)?;
    if measured.units != reference.units {
        return Err(Error::InvalidParameter(format!(
            "unit mismatch: {} vs {}",
            measured.units.as_str(),
            reference.units.as_str()
        )));
    }
    let joint: Vec<bool> = measured.valid.iter().zip(&reference.valid).map(|(a, b)| *a && *b).collect();
    let n_joint = joint.iter().filter(|&&b| b).count();
    let n_ref = reference.valid_count();
    Ok(FieldReport {
        R_u: metric_r(&measured.u, &reference.u, &joint).ok(),
        R_v: metric_r(&measured.v, &reference.v, &joint).ok(),
        D_u: metric_d(&measured.u, &reference.u, &joint).ok(),
        D_v: metric_d(&measured.v, &reference.v, &joint).ok(),
        units: measured.units,
        valid_fraction: if n_ref == 0 { 0.0 } else { n_joint as f64 / n_ref as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_identities() {
        let f = [0.3, -1.2, 2.5, 0.0, 4.0];
        let all = [true; 5];
        assert!((metric_r(&f, &f, &all).unwrap() - 1.0).abs() < 1e-15);
        let f2: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
        assert!((metric_r(&f, &f2, &all).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        assert!((metric_r(&f, &neg, &all).unwrap() + 1.0).abs() < 1e-15);
        assert!(metric_r(&f, &[0.0; 5], &all).is_err());
    }

    #[test]
    fn d_identities() {
        let f = [0.3, -1.2, 2.5];
        let all = [true; 3];
        assert_eq!(metric_d(&f, &f, &all).unwrap(), 0.0);
        let g: Vec<f64> = f.iter().map(|x| x + 0.7).collect();
        assert!((metric_d(&f, &g, &all).unwrap() - 0.7).abs() < 1e-12);
        assert!(metric_d(&f, &g, &[false; 3]).is_err());
    }

    #[test]
    fn mm_scaling() {
        let mut f = DisplacementField::empty(10, 10, 5).unwrap();
        f.u.fill(4.0);
        f.v.fill(2.0);
        f.valid.fill(true);
        let g = scale_to_mm(&f, 0.5).unwrap();
        assert_eq!((g.u[0], g.v[0], g.units), (2.0, 1.0, Units::Mm));
        let one = scale_to_mm(&f, 1.0).unwrap();
        assert_eq!(one.u, f.u);
        assert_eq!(one.units, Units::Mm);
        assert!(scale_to_mm(&f, 0.0).is_err());
        assert!(scale_to_mm(&f, -1.0).is_err());
    }
}
