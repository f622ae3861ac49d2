use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
struct Dot {
    x: f64,
    y: f64,
    inv_two_var: f64,
    amp: f64,
}

/// Procedural speckle: Gaussian dots scattered over a bounded domain,
/// passed through `1 - exp(-sum)` so overlapping dots saturate smoothly.
///
/// The pattern is a smooth function of continuous coordinates, so it can
/// be sampled at arbitrary (deformed) positions without aliasing.
#[derive(Debug, Clone)]
pub struct Speckle {
    cell: f64,
    cols: i64,
    rows: i64,
    x0: f64,
    y0: f64,
    cells: Vec<Vec<Dot>>,
}

impl Speckle {
    /// Covers `[x0, x0 + width] x [y0, y0 + height]` plus one cell of
    /// apron; `feature_px` is the typical dot diameter.
    pub fn new(x0: f64, y0: f64, width: f64, height: f64, feature_px: f64, seed: u64) -> Self {
        let feature_px = feature_px.max(2.0);
        let sigma_mid = feature_px / 2.5;
        let cell = (3.0 * sigma_mid * 1.3).ceil();
        let cols = (width / cell).ceil() as i64 + 3;
        let rows = (height / cell).ceil() as i64 + 3;
        // about one dot per (1.6 * feature)^2 keeps roughly half the area dark
        let per_cell = cell * cell / (1.6 * feature_px).powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ox = x0 - cell;
        let oy = y0 - cell;
        let mut cells = Vec::with_capacity((cols * rows) as usize);
        for r in 0..rows {
            for c in 0..cols {
                let count = per_cell.floor() as usize + usize::from(rng.random_bool(per_cell.fract()));
                let dots = (0..count)
                    .map(|_| {
                        let s = sigma_mid * rng.random_range(0.75..1.25);
                        Dot {
                            x: ox + (c as f64 + rng.random::<f64>()) * cell,
                            y: oy + (r as f64 + rng.random::<f64>()) * cell,
                            inv_two_var: 1.0 / (2.0 * s * s),
                            amp: rng.random_range(1.2..2.4),
                        }
                    })
                    .collect();
                cells.push(dots);
            }
        }
        Self {
            cell,
            cols,
            rows,
            x0: ox,
            y0: oy,
            cells,
        }
    }

    /// Darkness in `[0, 1)` at `(x, y)`; zero away from every dot and
    /// outside the covered domain.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let cx = ((x - self.x0) / self.cell).floor() as i64;
        let cy = ((y - self.y0) / self.cell).floor() as i64;
        let mut sum = 0.0;
        for r in (cy - 1).max(0)..=(cy + 1).min(self.rows - 1) {
            for c in (cx - 1).max(0)..=(cx + 1).min(self.cols - 1) {
                for d in &self.cells[(r * self.cols + c) as usize] {
                    let d2 = (x - d.x).powi(2) + (y - d.y).powi(2);
                    sum += d.amp * (-d2 * d.inv_two_var).exp();
                }
            }
        }
        1.0 - (-sum).exp()
    }
}
