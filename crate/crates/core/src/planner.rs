//! Slope maps, risk costmaps and minimum-risk paths over a heightmap.
//!
//! Every cell is evaluated with the steady-state stride model at the local
//! slope, treating all slopes as ascent. Failure cells are impassable;
//! metastable cells cost extra in proportion to how far their step length
//! falls short of one leg radius.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::format::{fmt_sig, round_sig};
use crate::model::{net_step, RegimeLabel, RobotConfig, SlopeAngle, TerrainStrength};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("heightmap line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid terrain map: {0}")]
    InvalidMap(String),
    #[error("cell ({col}, {row}) is outside the {width}x{height} map")]
    OutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },
    #[error("{which} cell ({col}, {row}) is impassable")]
    Impassable {
        which: &'static str,
        col: usize,
        row: usize,
    },
    #[error("no passable path from start to goal")]
    NoPath,
}

/// Grid cell, `row` 0 at the north edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainMap {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    /// Row-major elevations (m).
    pub elevations: Vec<f64>,
}

impl TerrainMap {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        elevations: Vec<f64>,
    ) -> Result<Self, PlanError> {
        if width < 2 || height < 2 {
            return Err(PlanError::InvalidMap(format!(
                "map must be at least 2x2, got {width}x{height}"
            )));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(PlanError::InvalidMap(format!(
                "cell size must be > 0, got {cell_size}"
            )));
        }
        if elevations.len() != width * height {
            return Err(PlanError::InvalidMap(format!(
                "expected {} elevations, got {}",
                width * height,
                elevations.len()
            )));
        }
        if elevations.iter().any(|z| !z.is_finite()) {
            return Err(PlanError::InvalidMap("non-finite elevation".into()));
        }
        Ok(TerrainMap {
            width,
            height,
            cell_size,
            elevations,
        })
    }

    /// Builds a map by sampling `z(x, y)` at cell centres, `x = col * cell_size`,
    /// `y = row * cell_size`.
    pub fn from_fn(
        width: usize,
        height: usize,
        cell_size: f64,
        z: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, PlanError> {
        let elevations = (0..height)
            .flat_map(|r| (0..width).map(move |c| (c, r)))
            .map(|(c, r)| z(c as f64 * cell_size, r as f64 * cell_size))
            .collect();
        Self::new(width, height, cell_size, elevations)
    }

    /// Parses the ASCII grid format: `ncols nrows cell_size_m` on the first
    /// line, then `nrows` lines of `ncols` elevations, north row first.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, PlanError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(PlanError::Parse {
            line: 1,
            message: "empty heightmap".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let perr = |line: usize, message: String| PlanError::Parse { line, message };
        if fields.len() != 3 {
            return Err(perr(
                hline,
                "header must be `ncols nrows cell_size_m`".into(),
            ));
        }
        let width: usize = fields[0]
            .parse()
            .map_err(|_| perr(hline, format!("bad ncols `{}`", fields[0])))?;
        let height: usize = fields[1]
            .parse()
            .map_err(|_| perr(hline, format!("bad nrows `{}`", fields[1])))?;
        let cell_size: f64 = fields[2]
            .parse()
            .map_err(|_| perr(hline, format!("bad cell_size_m `{}`", fields[2])))?;

        let mut elevations = Vec::with_capacity(width.saturating_mul(height).min(1 << 24));
        let mut rows = 0;
        for (line, row) in lines {
            if rows == height {
                return Err(perr(line, format!("more than {height} elevation rows")));
            }
            let before = elevations.len();
            for tok in row.split_whitespace() {
                let z: f64 = tok
                    .parse()
                    .map_err(|_| perr(line, format!("bad elevation `{tok}`")))?;
                elevations.push(z);
            }
            if elevations.len() - before != width {
                return Err(perr(
                    line,
                    format!("expected {width} values, got {}", elevations.len() - before),
                ));
            }
            rows += 1;
        }
        if rows != height {
            return Err(perr(
                text.lines().count(),
                format!("expected {height} rows, got {rows}"),
            ));
        }
        Self::new(width, height, cell_size, elevations)
    }

    pub fn elevation(&self, col: usize, row: usize) -> f64 {
        self.elevations[row * self.width + col]
    }
}

/// Slope angle (deg) per cell from the gradient magnitude: central
/// differences inside, one-sided at the borders.
pub fn slope_map(map: &TerrainMap) -> Vec<f64> {
    let (w, h, cs) = (map.width, map.height, map.cell_size);
    let derivative =
        |lo: usize, hi: usize, z: &dyn Fn(usize) -> f64| (z(hi) - z(lo)) / ((hi - lo) as f64 * cs);
    (0..h)
        .flat_map(|r| (0..w).map(move |c| (c, r)))
        .map(|(c, r)| {
            let dzdx = derivative(c.saturating_sub(1), (c + 1).min(w - 1), &|cc| {
                map.elevation(cc, r)
            });
            let dzdy = derivative(r.saturating_sub(1), (r + 1).min(h - 1), &|rr| {
                map.elevation(c, rr)
            });
            dzdx.hypot(dzdy).atan().to_degrees()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskWeights {
    /// Weight on the metastable shortfall `(R - s) / R`.
    pub lambda: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        RiskWeights { lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub slope_deg: Vec<f64>,
    /// Net step length per cell, negative infinity where the leg sinks.
    pub step_length: Vec<f64>,
    pub regime: Vec<RegimeLabel>,
    /// Traversal cost per cell; infinite where impassable.
    pub cost: Vec<f64>,
    pub impassable: Vec<bool>,
}

impl RiskMap {
    /// Risk map from explicit per-cell costs. Non-finite costs are
    /// impassable. Slopes and step lengths are left at zero/NaN and regimes
    /// at `Success` (or `SlippageFailure` where impassable).
    pub fn from_costs(width: usize, height: usize, cell_size: f64, cost: Vec<f64>) -> Self {
        assert_eq!(cost.len(), width * height, "cost grid size mismatch");
        let impassable: Vec<bool> = cost.iter().map(|c| !c.is_finite()).collect();
        let regime = impassable
            .iter()
            .map(|&b| {
                if b {
                    RegimeLabel::SlippageFailure
                } else {
                    RegimeLabel::Success
                }
            })
            .collect();
        RiskMap {
            width,
            height,
            cell_size,
            slope_deg: vec![0.0; cost.len()],
            step_length: vec![f64::NAN; cost.len()],
            regime,
            cost,
            impassable,
        }
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    /// CSV export `col,row,slope_deg,s_m,label,cost`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("col,row,slope_deg,s_m,label,cost\n");
        for row in 0..self.height {
            for col in 0..self.width {
                let i = row * self.width + col;
                out.push_str(&format!(
                    "{col},{row},{},{},{},{}\n",
                    fmt_sig(self.slope_deg[i]),
                    fmt_sig(self.step_length[i]),
                    self.regime[i],
                    fmt_sig(self.cost[i])
                ));
            }
        }
        out
    }
}

/// Per-cell regime and traversal cost `cell_size * (1 + lambda * risk)`.
pub fn risk_map(
    map: &TerrainMap,
    robot: &RobotConfig,
    terrain: &TerrainStrength,
    weights: RiskWeights,
) -> RiskMap {
    let slope_deg = slope_map(map);
    let r = robot.leg_radius;
    let cells: Vec<(f64, RegimeLabel, f64)> = slope_deg
        .par_iter()
        .map(|&deg| {
            // gradient slopes are always below 90 deg
            let theta = SlopeAngle::from_degrees(deg).unwrap_or(SlopeAngle::LEVEL);
            let outcome = net_step(robot, terrain, theta);
            let s = outcome.step_length();
            let cost = match outcome.regime {
                RegimeLabel::Success => map.cell_size,
                RegimeLabel::Metastable => map.cell_size * (1.0 + weights.lambda * (r - s) / r),
                _ => f64::INFINITY,
            };
            (s, outcome.regime, cost)
        })
        .collect();
    RiskMap {
        width: map.width,
        height: map.height,
        cell_size: map.cell_size,
        slope_deg,
        step_length: cells.iter().map(|c| c.0).collect(),
        regime: cells.iter().map(|c| c.1).collect(),
        cost: cells.iter().map(|c| c.2).collect(),
        impassable: cells.iter().map(|c| c.1.is_failure()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub waypoints: Vec<Cell>,
    pub total_cost: f64,
    /// Metric length (m).
    pub total_length: f64,
    /// Waypoint count per regime, in [`RegimeLabel::ALL`] order.
    pub regime_counts: [usize; 4],
}

impl PathResult {
    pub fn count(&self, label: RegimeLabel) -> usize {
        self.regime_counts[label.code() as usize]
    }

    pub fn to_json(&self) -> Value {
        let counts: serde_json::Map<String, Value> = RegimeLabel::ALL
            .iter()
            .map(|l| (l.name().to_string(), json!(self.count(*l))))
            .collect();
        json!({
            "waypoints": self.waypoints.iter().map(|c| [c.col, c.row]).collect::<Vec<_>>(),
            "total_cost": round_sig(self.total_cost),
            "total_length_m": round_sig(self.total_length),
            "regime_counts": counts,
        })
    }
}

/// Cost of moving between two 8-connected cells: the mean of both cell
/// costs, scaled by sqrt(2) on diagonals.
pub fn step_cost(risk: &RiskMap, a: usize, b: usize) -> f64 {
    let diagonal = a % risk.width != b % risk.width && a / risk.width != b / risk.width;
    let mean = 0.5 * (risk.cost[a] + risk.cost[b]);
    if diagonal {
        SQRT_2 * mean
    } else {
        mean
    }
}

fn neighbours(width: usize, height: usize, idx: usize) -> impl Iterator<Item = usize> {
    let (c, r) = ((idx % width) as isize, (idx / width) as isize);
    (-1isize..=1)
        .flat_map(|dr| (-1isize..=1).map(move |dc| (dc, dr)))
        .filter(|&d| d != (0, 0))
        .filter_map(move |(dc, dr)| {
            let (nc, nr) = (c + dc, r + dr);
            (nc >= 0 && nr >= 0 && (nc as usize) < width && (nr as usize) < height)
                .then(|| nr as usize * width + nc as usize)
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    cost: f64,
    idx: usize,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost 8-connected path (uniform-cost search). Among equal-cost
/// predecessors the one with the lower row-major index wins.
pub fn plan_path(risk: &RiskMap, start: Cell, goal: Cell) -> Result<PathResult, PlanError> {
    let (w, h) = (risk.width, risk.height);
    for (which, cell) in [("start", start), ("goal", goal)] {
        if cell.col >= w || cell.row >= h {
            return Err(PlanError::OutOfBounds {
                col: cell.col,
                row: cell.row,
                width: w,
                height: h,
            });
        }
        if risk.impassable[risk.index(cell)] {
            return Err(PlanError::Impassable {
                which,
                col: cell.col,
                row: cell.row,
            });
        }
    }
    let (s, g) = (risk.index(start), risk.index(goal));
    let mut dist = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut done = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse(Queued { cost: 0.0, idx: s }));

    while let Some(Reverse(Queued { cost, idx })) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        if idx == g {
            break;
        }
        for n in neighbours(w, h, idx) {
            if risk.impassable[n] || done[n] {
                continue;
            }
            let nd = cost + step_cost(risk, idx, n);
            if nd < dist[n] {
                dist[n] = nd;
                parent[n] = idx;
                heap.push(Reverse(Queued { cost: nd, idx: n }));
            } else if nd == dist[n] && idx < parent[n] {
                parent[n] = idx;
            }
        }
    }
    if !done[g] {
        return Err(PlanError::NoPath);
    }

    let mut path = vec![g];
    while let Some(&last) = path.last() {
        if last == s {
            break;
        }
        path.push(parent[last]);
    }
    path.reverse();

    let total_length = path
        .windows(2)
        .map(|p| {
            let diagonal = p[0] % w != p[1] % w && p[0] / w != p[1] / w;
            if diagonal {
                SQRT_2 * risk.cell_size
            } else {
                risk.cell_size
            }
        })
        .sum();
    let mut regime_counts = [0; 4];
    for &i in &path {
        regime_counts[risk.regime[i].code() as usize] += 1;
    }
    Ok(PathResult {
        waypoints: path.iter().map(|&i| Cell::new(i % w, i / w)).collect(),
        total_cost: dist[g],
        total_length,
        regime_counts,
    })
}
