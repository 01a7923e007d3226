//! Room geometry recomputed from the wall set alone.

use std::collections::VecDeque;

use hrl_core::env::{GridPos, Layout, Point};

pub struct Room {
    pub cells: Vec<GridPos>,
    pub center: Point,
    pub diagonal: f64,
}

/// Open cells split into rooms by flood fill with doorways closed.
pub fn rooms(layout: &Layout) -> Vec<Room> {
    let (w, h) = (layout.width, layout.height);
    let open = |p: GridPos| {
        p.x >= 0 && p.y >= 0 && p.x < w && p.y < h && !layout.walls.contains(&p) && !layout.doorways.contains(&p)
    };
    let mut seen = vec![false; (w * h) as usize];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let start = GridPos::new(x, y);
            if !open(start) || seen[(y * w + x) as usize] {
                continue;
            }
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[(y * w + x) as usize] = true;
            while let Some(c) = queue.pop_front() {
                cells.push(c);
                for (dx, dy) in [(0, 1), (0, -1), (1, 0), (-1, 0)] {
                    let n = GridPos::new(c.x + dx, c.y + dy);
                    if open(n) && !seen[(n.y * w + n.x) as usize] {
                        seen[(n.y * w + n.x) as usize] = true;
                        queue.push_back(n);
                    }
                }
            }
            let sx = (w - 1) as f64;
            let sy = (h - 1) as f64;
            let n = cells.len() as f64;
            let center = [
                cells.iter().map(|c| c.x as f64 / sx).sum::<f64>() / n,
                cells.iter().map(|c| c.y as f64 / sy).sum::<f64>() / n,
            ];
            let xs = cells.iter().map(|c| c.x);
            let ys = cells.iter().map(|c| c.y);
            let span_x = (xs.clone().max().unwrap() - xs.min().unwrap() + 1) as f64 / sx;
            let span_y = (ys.clone().max().unwrap() - ys.min().unwrap() + 1) as f64 / sy;
            out.push(Room { cells, center, diagonal: span_x.hypot(span_y) });
        }
    }
    out
}
