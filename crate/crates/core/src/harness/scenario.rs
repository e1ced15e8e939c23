//! The rest-to-rest regulation cases used for baselines, training and
//! robustness runs.

use serde::{Deserialize, Serialize};

use crate::dynamics::State4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCase {
    pub id: u32,
    pub initial: State4,
    pub target: State4,
}

/// Initial configurations (deg), both at rest.
pub const INITIAL_CONFIGS_DEG: [(f64, f64); 2] = [(0.0, 0.0), (180.0, 0.0)];

/// Targets shared by both initial configurations in the desk-scale subset (deg).
pub const DESK_TARGETS_DEG: [(f64, f64); 4] =
    [(45.0, -90.0), (90.0, 45.0), (135.0, 135.0), (180.0, -180.0)];

impl ScenarioCase {
    pub fn from_degrees(id: u32, initial: (f64, f64), target: (f64, f64)) -> Self {
        Self {
            id,
            initial: State4::at_rest(initial.0.to_radians(), initial.1.to_radians()),
            target: State4::at_rest(target.0.to_radians(), target.1.to_radians()),
        }
    }

    pub fn target_degrees(&self) -> (f64, f64) {
        (self.target.theta1.to_degrees(), self.target.theta2.to_degrees())
    }

    pub fn initial_degrees(&self) -> (f64, f64) {
        (self.initial.theta1.to_degrees(), self.initial.theta2.to_degrees())
    }
}

/// All 88 cases: every 45° grid target with `θ1 ∈ [0°, 180°]` and
/// `θ2 ∈ [−180°, 180°]`, from each initial configuration, skipping the target
/// that equals the start. Ids run 0–43 from (0°, 0°) and 44–87 from (180°, 0°).
pub fn build_scenarios() -> Vec<ScenarioCase> {
    let mut cases = Vec::with_capacity(88);
    let mut id = 0;
    for &start in &INITIAL_CONFIGS_DEG {
        for i in 0..5 {
            for j in 0..9 {
                let target = (45.0 * i as f64, -180.0 + 45.0 * j as f64);
                if target == start {
                    continue;
                }
                cases.push(ScenarioCase::from_degrees(id, start, target));
                id += 1;
            }
        }
    }
    cases
}

/// Ids of the 8-case desk-scale training subset.
pub fn desk_subset_ids() -> Vec<u32> {
    let all = build_scenarios();
    INITIAL_CONFIGS_DEG
        .iter()
        .flat_map(|&start| {
            let all = &all;
            DESK_TARGETS_DEG.iter().map(move |&target| {
                all.iter()
                    .find(|c| approx_eq(c.initial_degrees(), start) && approx_eq(c.target_degrees(), target))
                    .expect("desk target is on the grid")
                    .id
            })
        })
        .collect()
}

/// Id of the (180°, 0°) → (90°, 45°) case.
pub fn showcase_case_id() -> u32 {
    build_scenarios()
        .iter()
        .find(|c| approx_eq(c.initial_degrees(), (180.0, 0.0)) && approx_eq(c.target_degrees(), (90.0, 45.0)))
        .expect("showcase case exists")
        .id
}

fn approx_eq(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
}

/// Selects cases by id, preserving the requested order.
pub fn select_cases(ids: &[u32]) -> Result<Vec<ScenarioCase>, u32> {
    let all = build_scenarios();
    ids.iter()
        .map(|&id| all.iter().find(|c| c.id == id).copied().ok_or(id))
        .collect()
}
