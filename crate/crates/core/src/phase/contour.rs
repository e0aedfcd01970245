//! Marching squares on a rectilinear grid.

use std::collections::HashMap;

/// Grid edge a contour vertex sits on. `Horizontal(i, j)` joins nodes
/// `(i, j)` and `(i + 1, j)`; `Vertical(i, j)` joins `(i, j)` and `(i, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridEdge {
    Horizontal(usize, usize),
    Vertical(usize, usize),
}

impl GridEdge {
    pub fn nodes(self) -> [(usize, usize); 2] {
        match self {
            GridEdge::Horizontal(i, j) => [(i, j), (i + 1, j)],
            GridEdge::Vertical(i, j) => [(i, j), (i, j + 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourVertex {
    pub edge: GridEdge,
    /// Position in grid coordinates.
    pub point: [f64; 2],
}

/// Scalar field sampled at `xs[i], ys[j]`, stored row-major with `j` as the
/// row: `values[j * xs.len() + i]`. Non-finite values mark missing nodes;
/// cells touching one produce no segments.
pub struct ScalarGrid<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub values: &'a [f64],
}

impl ScalarGrid<'_> {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    fn vertex(&self, edge: GridEdge, level: f64) -> ContourVertex {
        let [(i0, j0), (i1, j1)] = edge.nodes();
        let (a, b) = (self.at(i0, j0), self.at(i1, j1));
        let t = ((level - a) / (b - a)).clamp(0.0, 1.0);
        let lerp = |p: f64, q: f64| p + t * (q - p);
        ContourVertex {
            edge,
            point: [
                lerp(self.xs[i0], self.xs[i1]),
                lerp(self.ys[j0], self.ys[j1]),
            ],
        }
    }

    /// Unordered iso-segments, one or two per crossed cell, in cell order.
    pub fn segments(&self, level: f64) -> Vec<[ContourVertex; 2]> {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        assert_eq!(self.values.len(), nx * ny, "grid size mismatch");
        let mut out = Vec::new();
        if nx < 2 || ny < 2 {
            return out;
        }
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                // corners counter-clockwise from (i, j)
                let v = [
                    self.at(i, j),
                    self.at(i + 1, j),
                    self.at(i + 1, j + 1),
                    self.at(i, j + 1),
                ];
                if v.iter().any(|x| !x.is_finite()) {
                    continue;
                }
                let case = v
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &x)| acc | (u8::from(x >= level) << k));
                let bottom = GridEdge::Horizontal(i, j);
                let right = GridEdge::Vertical(i + 1, j);
                let top = GridEdge::Horizontal(i, j + 1);
                let left = GridEdge::Vertical(i, j);
                let pairs: &[(GridEdge, GridEdge)] = match case {
                    0 | 15 => &[],
                    1 | 14 => &[(left, bottom)],
                    2 | 13 => &[(bottom, right)],
                    3 | 12 => &[(left, right)],
                    4 | 11 => &[(right, top)],
                    6 | 9 => &[(bottom, top)],
                    7 | 8 => &[(left, top)],
                    5 | 10 => {
                        let centre_above = v.iter().sum::<f64>() / 4.0 >= level;
                        // case 5: corners 0 and 2 above
                        if (case == 5) == centre_above {
                            &[(left, top), (bottom, right)]
                        } else {
                            &[(left, bottom), (right, top)]
                        }
                    }
                    _ => unreachable!(),
                };
                for &(a, b) in pairs {
                    out.push([self.vertex(a, level), self.vertex(b, level)]);
                }
            }
        }
        out
    }

    /// Segments joined into polylines through shared edges. Closed loops
    /// repeat their first vertex at the end.
    pub fn polylines(&self, level: f64) -> Vec<Vec<ContourVertex>> {
        let segments = self.segments(level);
        let mut by_edge: HashMap<GridEdge, Vec<usize>> = HashMap::new();
        for (k, seg) in segments.iter().enumerate() {
            for v in seg {
                by_edge.entry(v.edge).or_default().push(k);
            }
        }
        let other = |k: usize, edge: GridEdge| -> Option<usize> {
            by_edge[&edge].iter().copied().find(|&m| m != k)
        };

        let mut used = vec![false; segments.len()];
        let mut lines = Vec::new();
        // open chains first, starting from an end that has no neighbour
        let starts = (0..segments.len())
            .filter(|&k| segments[k].iter().any(|v| by_edge[&v.edge].len() == 1))
            .chain(0..segments.len())
            .collect::<Vec<_>>();
        for start in starts {
            if used[start] {
                continue;
            }
            let seg = segments[start];
            let (first, second) = if by_edge[&seg[1].edge].len() == 1 {
                (seg[1], seg[0])
            } else {
                (seg[0], seg[1])
            };
            used[start] = true;
            let mut line = vec![first, second];
            let mut current = start;
            let mut tail = second;
            while let Some(next) = other(current, tail.edge) {
                if used[next] {
                    break;
                }
                used[next] = true;
                let nseg = segments[next];
                tail = if nseg[0].edge == tail.edge {
                    nseg[1]
                } else {
                    nseg[0]
                };
                line.push(tail);
                current = next;
            }
            lines.push(line);
        }
        lines
    }
}
