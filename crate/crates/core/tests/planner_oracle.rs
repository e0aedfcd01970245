mod common;

use granular_slope::model::{RegimeLabel, RobotConfig, TerrainStrength};
use granular_slope::planner::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn passable_cell(rng: &mut impl Rng, risk: &RiskMap) -> Option<Cell> {
    (0..100).find_map(|_| {
        let c = Cell::new(rng.gen_range(0..risk.width), rng.gen_range(0..risk.height));
        (!risk.impassable[risk.index(c)]).then_some(c)
    })
}

fn check_path_shape(risk: &RiskMap, p: &PathResult) {
    for w in p.waypoints.windows(2) {
        let dc = w[0].col.abs_diff(w[1].col);
        let dr = w[0].row.abs_diff(w[1].row);
        assert!(dc <= 1 && dr <= 1 && (dc, dr) != (0, 0));
    }
    assert!(p.waypoints.iter().all(|&c| !risk.impassable[risk.index(c)]));
    assert_eq!(p.regime_counts.iter().sum::<usize>(), p.waypoints.len());
}

#[test]
fn matches_exhaustive_oracle_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..200 {
        let w = rng.gen_range(2..=12);
        let h = rng.gen_range(2..=12);
        let risk = common::random_risk_map(&mut rng, w, h, 0.25);
        let (Some(s), Some(g)) = (
            passable_cell(&mut rng, &risk),
            passable_cell(&mut rng, &risk),
        ) else {
            continue;
        };
        let oracle = common::bellman_ford(&risk, risk.index(s))[risk.index(g)];
        match plan_path(&risk, s, g) {
            Ok(p) => {
                assert_eq!(p.total_cost, oracle, "trial {trial}");
                check_path_shape(&risk, &p);
                assert_eq!(p.waypoints.first(), Some(&s));
                assert_eq!(p.waypoints.last(), Some(&g));
            }
            Err(PlanError::NoPath) => assert!(oracle.is_infinite(), "trial {trial}"),
            Err(e) => panic!("trial {trial}: {e}"),
        }
    }
}

#[test]
fn routes_through_the_only_gap() {
    let mut cost = vec![1.0; 100];
    for r in 0..10 {
        if r != 7 {
            cost[r * 10 + 5] = f64::INFINITY;
        }
    }
    let risk = RiskMap::from_costs(10, 10, 1.0, cost);
    let p = plan_path(&risk, Cell::new(0, 0), Cell::new(9, 0)).unwrap();
    assert!(p.waypoints.contains(&Cell::new(5, 7)));
    let oracle = common::bellman_ford(&risk, 0)[9];
    assert_eq!(p.total_cost, oracle);
}

#[test]
fn planning_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let risk = common::random_risk_map(&mut rng, 30, 30, 0.1);
    let a = plan_path(&risk, Cell::new(0, 0), Cell::new(29, 29));
    let b = plan_path(&risk, Cell::new(0, 0), Cell::new(29, 29));
    assert_eq!(a, b);
}

#[test]
fn equal_cost_ties_resolve_identically() {
    // uniform costs produce many equal-cost routes
    let risk = RiskMap::from_costs(8, 8, 1.0, vec![1.0; 64]);
    let p = plan_path(&risk, Cell::new(0, 0), Cell::new(7, 3)).unwrap();
    let q = plan_path(&risk, Cell::new(0, 0), Cell::new(7, 3)).unwrap();
    assert_eq!(p.waypoints, q.waypoints);
    assert_eq!(p.total_cost, common::bellman_ford(&risk, 0)[3 * 8 + 7]);
}

#[test]
fn risk_map_csv_export() {
    let map = TerrainMap::from_fn(3, 2, 0.1, |x, _| 0.2 * x).unwrap();
    let robot = RobotConfig::reference_robot();
    let terrain = TerrainStrength::uniform(1e7, 1e7).unwrap();
    let risk = risk_map(&map, &robot, &terrain, RiskWeights { lambda: 1.0 });
    let csv = risk.to_csv();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "col,row,slope_deg,s_m,label,cost");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0,0,11.3099325,"));
    assert_eq!(risk.regime[0], RegimeLabel::Success);
}
