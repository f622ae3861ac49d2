use std::path::Path;

use super::assemble::{DisplacementField, Units};
use super::metric::FieldReport;
use crate::error::{Error, Result};
use crate::imgcore::RgbImage;

/// CSV with header `x_px,y_px,u,v,valid,units`; invalid samples leave `u`
/// and `v` empty.
pub fn write_field_csv(field: &DisplacementField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["x_px", "y_px", "u", "v", "valid", "units"])?;
    for i in 0..field.len() {
        let p = field.position(i);
        let (u, v) = if field.valid[i] {
            (field.u[i].to_string(), field.v[i].to_string())
        } else {
            (String::new(), String::new())
        };
        w.write_record([
            (p.x as usize).to_string(),
            (p.y as usize).to_string(),
            u,
            v,
            (field.valid[i] as u8).to_string(),
            field.units.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_field_csv(path: impl AsRef<Path>) -> Result<DisplacementField> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<(usize, usize, Option<(f64, f64)>, Units)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::InvalidParameter(format!("malformed field row in {}", path.display()));
        let parse = |i: usize| rec.get(i).ok_or_else(bad);
        let x: usize = parse(0)?.trim().parse().map_err(|_| bad())?;
        let y: usize = parse(1)?.trim().parse().map_err(|_| bad())?;
        let valid = parse(4)?.trim() == "1";
        let units = match parse(5)?.trim() {
            "px" => Units::Px,
            "mm" => Units::Mm,
            _ => return Err(bad()),
        };
        let uv = if valid {
            let u: f64 = parse(2)?.trim().parse().map_err(|_| bad())?;
            let v: f64 = parse(3)?.trim().parse().map_err(|_| bad())?;
            Some((u, v))
        } else {
            None
        };
        rows.push((x, y, uv, units));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("field {}", path.display())));
    }
    let max_x = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let max_y = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let spacing = rows
        .iter()
        .map(|r| r.0)
        .filter(|&x| x > 0)
        .min()
        .or_else(|| rows.iter().map(|r| r.1).filter(|&y| y > 0).min())
        .unwrap_or(1);
    let mut field = DisplacementField::empty(max_x + 1, max_y + 1, spacing)?;
    if field.len() != rows.len() {
        return Err(Error::InvalidParameter(format!(
            "{} rows do not form a {}x{} grid",
            rows.len(),
            field.cols,
            field.rows
        )));
    }
    field.units = rows[0].3;
    for (x, y, uv, _) in rows {
        if x % spacing != 0 || y % spacing != 0 {
            return Err(Error::InvalidParameter(format!("sample ({x},{y}) off the grid")));
        }
        let i = (y / spacing) * field.cols + x / spacing;
        if let Some((u, v)) = uv {
            field.u[i] = u;
            field.v[i] = v;
            field.valid[i] = true;
        }
    }
    Ok(field)
}

pub fn write_report(report: &FieldReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(path, e))
}

fn colormap(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        (1.5 - (4.0 * t - 3.0).abs()).clamp(0.0, 1.0),
        (1.5 - (4.0 * t - 2.0).abs()).clamp(0.0, 1.0),
        (1.5 - (4.0 * t - 1.0).abs()).clamp(0.0, 1.0),
    ]
}

/// Heat map of `v`, one `spacing x spacing` block per sample; invalid
/// samples are black.
pub fn render_heatmap(field: &DisplacementField) -> RgbImage {
    let vals = field.v.iter().zip(&field.valid).filter(|(_, ok)| **ok).map(|(v, _)| *v);
    let (lo, hi) = vals.fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    let s = field.spacing;
    RgbImage::from_fn(field.cols * s, field.rows * s, |x, y| {
        let i = (y / s) * field.cols + x / s;
        if field.valid[i] {
            colormap((field.v[i] - lo) / range)
        } else {
            [0.0; 3]
        }
    })
}
