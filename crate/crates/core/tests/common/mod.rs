//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::SQRT_2;

use granular_slope::model::{penetration_depth, RobotConfig};
use granular_slope::planner::RiskMap;
use rand::Rng;

/// Root of `penetration_depth(t) = target` on the monotone interval, by
/// bisection down to floating-point resolution.
pub fn bisect_anchoring_time(robot: &RobotConfig, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, robot.time_to_max_depth());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if penetration_depth(robot, mid).unwrap() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random robot with valid geometry; `h` anywhere in `(0, 2R)`.
pub fn random_robot(rng: &mut impl Rng) -> RobotConfig {
    let leg_radius = rng.gen_range(0.01..0.1);
    RobotConfig {
        mass: rng.gen_range(0.05..5.0),
        leg_radius,
        hip_height: rng.gen_range(0.05..1.95) * leg_radius,
        leg_width: rng.gen_range(0.002..0.05),
        omega: rng.gen_range(1.0..20.0),
        n_stance: rng.gen_range(1..=4),
        delta_t: rng.gen_range(0.05..0.5),
        stride_period: rng.gen_range(0.3..3.0),
        contact_area: rng.gen_range(1e-5..1e-3),
        gravity: 9.81,
        level_step_override: None,
    }
}

/// Exhaustive single-source shortest paths by repeated edge relaxation
/// (Bellman-Ford) over the 8-connected passable cells. Returns the
/// distance to every cell.
pub fn bellman_ford(risk: &RiskMap, start: usize) -> Vec<f64> {
    let (w, h) = (risk.width, risk.height);
    let mut dist = vec![f64::INFINITY; w * h];
    dist[start] = 0.0;
    loop {
        let mut changed = false;
        for u in 0..w * h {
            if risk.impassable[u] || dist[u].is_infinite() {
                continue;
            }
            let (uc, ur) = ((u % w) as i64, (u / w) as i64);
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    let (c, r) = (uc + dc, ur + dr);
                    if (dc, dr) == (0, 0) || c < 0 || r < 0 || c >= w as i64 || r >= h as i64 {
                        continue;
                    }
                    let v = (r as usize) * w + c as usize;
                    if risk.impassable[v] {
                        continue;
                    }
                    let mean = 0.5 * (risk.cost[u] + risk.cost[v]);
                    let weight = if dc != 0 && dr != 0 {
                        SQRT_2 * mean
                    } else {
                        mean
                    };
                    let nd = dist[u] + weight;
                    if nd < dist[v] {
                        dist[v] = nd;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Random cost grid: passable cells cost `cell_size * (1 + U[0, 3))`,
/// roughly `blocked` of them impassable.
pub fn random_risk_map(rng: &mut impl Rng, w: usize, h: usize, blocked: f64) -> RiskMap {
    let cell = 0.1;
    let cost = (0..w * h)
        .map(|_| {
            if rng.gen_bool(blocked) {
                f64::INFINITY
            } else {
                cell * (1.0 + rng.gen_range(0.0..3.0))
            }
        })
        .collect();
    RiskMap::from_costs(w, h, cell, cost)
}
