//! Exact Euclidean distance transform (separable lower-envelope method) and
//! the inflation built on top of it.

use super::{BinaryGrid, OccupancyGrid};

/// Tolerance on the squared-distance comparison; a cell exactly at the
/// inflation radius counts as inflated.
const RADIUS_SLACK: f64 = 1e-9;

/// Squared distance, in cell units, from every cell center to the nearest
/// seed cell center. `f64::INFINITY` everywhere when there is no seed.
pub fn squared_distance_field(seeds: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(seeds.len(), width * height);
    let mut field: Vec<f64> = seeds
        .iter()
        .map(|s| if *s { 0.0 } else { f64::INFINITY })
        .collect();
    let n = width.max(height);
    let mut scratch = Scratch::new(n);

    // Columns first, then rows on the column result.
    let mut column = vec![0.0; height];
    let mut out = vec![0.0; n];
    for x in 0..width {
        for y in 0..height {
            column[y] = field[y * width + x];
        }
        scratch.transform(&column, &mut out[..height]);
        for y in 0..height {
            field[y * width + x] = out[y];
        }
    }
    let mut row = vec![0.0; width];
    for y in 0..height {
        row.copy_from_slice(&field[y * width..(y + 1) * width]);
        scratch.transform(&row, &mut out[..width]);
        field[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    field
}

struct Scratch {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// 1D transform `out[q] = min_p (q - p)^2 + f[p]` over finite `f[p]`.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        for (q, fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            let fq = *fq;
            let qf = q as f64;
            loop {
                let Some(&v) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let vf = v as f64;
                let s = ((fq + qf * qf) - (f[v] + vf * vf)) / (2.0 * qf - 2.0 * vf);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.sites.len() && self.bounds[k + 1] < qf {
                k += 1;
            }
            let v = self.sites[k];
            let d = qf - v as f64;
            *o = d * d + f[v];
        }
    }
}

/// Whether a squared cell distance lies within `radius` meters.
#[inline]
pub fn within_radius(sq_cells: f64, radius: f64, resolution: f64) -> bool {
    let r = radius / resolution;
    sq_cells <= r * r + RADIUS_SLACK
}

/// Cells whose center is within `radius` of a set cell's center.
pub fn inflate_mask(mask: &BinaryGrid, radius: f64) -> BinaryGrid {
    let geom = *mask.geometry();
    if radius <= 0.0 {
        return mask.clone();
    }
    let field = squared_distance_field(mask.cells(), geom.width, geom.height);
    let cells = field
        .iter()
        .map(|d| within_radius(*d, radius, geom.resolution))
        .collect();
    BinaryGrid::new(geom, cells)
}

/// Inflates obstacles at least `height_threshold` tall by `radius` meters.
/// A threshold of zero counts every obstacle.
pub fn inflate(grid: &OccupancyGrid, radius: f64, height_threshold: f64) -> BinaryGrid {
    let seeds = grid.mask(|h| h > 0.0 && h >= height_threshold);
    inflate_mask(&seeds, radius.max(0.0))
}
