//! Topological border following (Suzuki and Abe) on binary maps.
//!
//! Every 8-connected foreground component has exactly one outer border, so
//! the outer borders enumerate the components.

use crate::annotations::BoundingBox;
use crate::kernels::BinaryMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderKind {
    Outer,
    Hole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Border {
    pub kind: BorderKind,
    /// Border pixels in tracing order, as `(x, y)`.
    pub points: Vec<(u32, u32)>,
}

impl Border {
    pub fn bounding_box(&self) -> BoundingBox {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for &(x, y) in &self.points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        BoundingBox::from_corners(x0, y0, x1 + 1, y1 + 1)
    }
}

/// Neighbor offsets `(drow, dcol)` in counter-clockwise order starting east
/// (rows grow downward).
const DIRS: [(isize, isize); 8] = [(0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)];

fn dir_of(from: (usize, usize), to: (usize, usize)) -> usize {
    let d = (to.0 as isize - from.0 as isize, to.1 as isize - from.1 as isize);
    DIRS.iter().position(|&o| o == d).expect("points are 8-neighbors")
}

fn step(p: (usize, usize), d: usize) -> (usize, usize) {
    ((p.0 as isize + DIRS[d].0) as usize, (p.1 as isize + DIRS[d].1) as usize)
}

/// All borders, outer and hole, in raster order of their starting pixels.
pub fn find_borders(map: &BinaryMap) -> Vec<Border> {
    // One-pixel zero frame so every neighbor lookup is in range.
    let (w, h) = (map.width() + 2, map.height() + 2);
    let mut f = vec![0i32; w * h];
    for y in 0..map.height() {
        for x in 0..map.width() {
            f[(y + 1) * w + x + 1] = i32::from(map.get(x, y));
        }
    }
    let idx = |p: (usize, usize)| p.0 * w + p.1;
    let mut nbd = 1i32;
    let mut borders = Vec::new();

    for i in 1..h - 1 {
        for j in 1..w - 1 {
            let v = f[i * w + j];
            let (kind, from) = if v == 1 && f[i * w + j - 1] == 0 {
                (BorderKind::Outer, (i, j - 1))
            } else if v >= 1 && f[i * w + j + 1] == 0 {
                (BorderKind::Hole, (i, j + 1))
            } else {
                continue;
            };
            nbd += 1;
            let start = (i, j);
            let mut points = vec![(j as u32 - 1, i as u32 - 1)];

            // Clockwise search around the start pixel, beginning at `from`.
            let d0 = dir_of(start, from);
            let first = (0..8)
                .map(|k| (d0 + 8 - k) % 8)
                .map(|d| step(start, d))
                .find(|&q| f[idx(q)] != 0);
            let Some(first) = first else {
                f[idx(start)] = -nbd;
                borders.push(Border { kind, points });
                continue;
            };

            let (mut prev, mut cur) = (first, start);
            loop {
                // Counter-clockwise search around `cur`, starting after `prev`.
                let dp = dir_of(cur, prev);
                let mut east_zero = false;
                let mut next = cur;
                for k in 1..=8 {
                    let d = (dp + k) % 8;
                    let q = step(cur, d);
                    if f[idx(q)] != 0 {
                        next = q;
                        break;
                    }
                    if d == 0 {
                        east_zero = true;
                    }
                }
                if east_zero {
                    f[idx(cur)] = -nbd;
                } else if f[idx(cur)] == 1 {
                    f[idx(cur)] = nbd;
                }
                if next == start && cur == first {
                    break;
                }
                prev = cur;
                cur = next;
                if cur != start {
                    points.push((cur.1 as u32 - 1, cur.0 as u32 - 1));
                }
            }
            borders.push(Border { kind, points });
        }
    }
    borders
}

/// Bounding boxes of the 8-connected components, one per outer border.
pub fn component_boxes(map: &BinaryMap) -> Vec<BoundingBox> {
    find_borders(map)
        .iter()
        .filter(|b| b.kind == BorderKind::Outer)
        .map(Border::bounding_box)
        .collect()
}
