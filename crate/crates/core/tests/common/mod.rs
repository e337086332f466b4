//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use std::collections::VecDeque;

use feasim::gridmap::OccupancyGrid;

/// Inflation by stamping a disc of cells around every obstacle cell.
pub fn stamp_inflation(grid: &OccupancyGrid, radius: f64) -> Vec<bool> {
    let g = grid.geometry();
    let (w, h) = (g.width as i64, g.height as i64);
    let r = radius / g.resolution;
    let reach = r.ceil() as i64;
    let mut out = vec![false; g.len()];
    for iy in 0..h {
        for ix in 0..w {
            if grid.height_at(ix as usize, iy as usize) <= 0.0 {
                continue;
            }
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (x, y) = (ix + dx, iy + dy);
                    if x < 0 || y < 0 || x >= w || y >= h {
                        continue;
                    }
                    if ((dx * dx + dy * dy) as f64) <= r * r + 1e-9 {
                        out[(y * w + x) as usize] = true;
                    }
                }
            }
        }
    }
    out
}

/// Breadth-first reachability over 8-connected cells without corner cutting.
pub fn reachable(
    blocked: &[bool],
    width: usize,
    start: (usize, usize),
    goal: (usize, usize),
) -> bool {
    let height = blocked.len() / width;
    let idx = |x: usize, y: usize| y * width + x;
    if blocked[idx(start.0, start.1)] || blocked[idx(goal.0, goal.1)] {
        return false;
    }
    let mut seen = vec![false; blocked.len()];
    let mut queue = VecDeque::from([start]);
    seen[idx(start.0, start.1)] = true;
    while let Some((x, y)) = queue.pop_front() {
        if (x, y) == goal {
            return true;
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if (dx, dy) == (0, 0)
                    || nx < 0
                    || ny < 0
                    || nx >= width as i64
                    || ny >= height as i64
                {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if blocked[idx(nx, ny)] || seen[idx(nx, ny)] {
                    continue;
                }
                if dx != 0 && dy != 0 && (blocked[idx(nx, y)] || blocked[idx(x, ny)]) {
                    continue;
                }
                seen[idx(nx, ny)] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    false
}
