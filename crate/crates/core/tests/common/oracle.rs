//! Brute-force references: Dijkstra over the full move graph and
//! thresholded pairwise distances.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use feasim::ee_motion::{edge_cost, WeightMode};

const MOVES: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

fn step(
    weights: &[f64],
    blocked: &[bool],
    w: usize,
    h: usize,
    (x, y): (usize, usize),
    (dx, dy): (i64, i64),
    mode: WeightMode,
) -> Option<((usize, usize), u64)> {
    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
        return None;
    }
    let (nx, ny) = (nx as usize, ny as usize);
    if blocked[ny * w + nx] {
        return None;
    }
    let diagonal = dx != 0 && dy != 0;
    if diagonal && (blocked[y * w + nx] || blocked[ny * w + x]) {
        return None;
    }
    let length = if diagonal {
        std::f64::consts::SQRT_2
    } else {
        1.0
    };
    Some(((nx, ny), edge_cost(length, weights[ny * w + nx], mode)))
}

/// Cheapest cost from `s` to `g`, or `None` when unreachable.
pub fn dijkstra(
    weights: &[f64],
    blocked: &[bool],
    w: usize,
    h: usize,
    s: (usize, usize),
    g: (usize, usize),
    mode: WeightMode,
) -> Option<u64> {
    let mut dist = vec![u64::MAX; w * h];
    let mut heap = BinaryHeap::new();
    dist[s.1 * w + s.0] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d, c))) = heap.pop() {
        if c == g {
            return Some(d);
        }
        if d > dist[c.1 * w + c.0] {
            continue;
        }
        for m in MOVES {
            if let Some((n, cost)) = step(weights, blocked, w, h, c, m, mode) {
                let nd = d + cost;
                if nd < dist[n.1 * w + n.0] {
                    dist[n.1 * w + n.0] = nd;
                    heap.push(Reverse((nd, n)));
                }
            }
        }
    }
    None
}

/// Cost of walking `cells`, or `None` if any move is not in the graph.
pub fn path_cost(
    weights: &[f64],
    blocked: &[bool],
    w: usize,
    cells: &[(usize, usize)],
    mode: WeightMode,
) -> Option<u64> {
    let h = blocked.len() / w;
    let mut total = 0;
    if cells.iter().any(|c| blocked[c.1 * w + c.0]) {
        return None;
    }
    for pair in cells.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let d = (b.0 as i64 - a.0 as i64, b.1 as i64 - a.1 as i64);
        if d == (0, 0) || d.0.abs() > 1 || d.1.abs() > 1 {
            return None;
        }
        total += step(weights, blocked, w, h, a, d, mode)?.1;
    }
    Some(total)
}

/// Cells whose center lies within `radius` of some seed cell center,
/// measured in world units.
pub fn brute_inflate(
    seeds: &[bool],
    w: usize,
    h: usize,
    resolution: f64,
    radius: f64,
) -> Vec<bool> {
    let reach = (radius / resolution).ceil() as i64 + 1;
    // The seed nearest to any free cell has a free 4-neighbor: stepping one
    // cell toward the free cell would otherwise give a nearer seed. So only
    // those border seeds need to be stamped.
    let mut out = seeds.to_vec();
    let seed_at = |x: i64, y: i64| {
        x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && seeds[y as usize * w + x as usize]
    };
    for i in (0..w * h).filter(|i| seeds[*i]) {
        let (sx, sy) = ((i % w) as i64, (i / w) as i64);
        if seed_at(sx + 1, sy) && seed_at(sx - 1, sy) && seed_at(sx, sy + 1) && seed_at(sx, sy - 1)
        {
            continue;
        }
        for y in (sy - reach).max(0)..(sy + reach + 1).min(h as i64) {
            for x in (sx - reach).max(0)..(sx + reach + 1).min(w as i64) {
                let d = ((x - sx) as f64 * resolution).hypot((y - sy) as f64 * resolution);
                if d <= radius + 1e-9 {
                    out[y as usize * w + x as usize] = true;
                }
            }
        }
    }
    out
}
