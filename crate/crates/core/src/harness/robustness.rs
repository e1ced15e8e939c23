//! Monte Carlo comparison of two controllers under mass and length
//! uncertainty.
//!
//! Each draw scales `m1, m2, l1, l2` independently by a factor from
//! `Uniform[1 − w, 1 + w]`, recomputes the derived link properties, and runs
//! both controllers on the same perturbed plant. The controllers keep
//! synthesizing against the nominal arm.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::ScenarioCase;
use super::sim::{simulate_case, ControlLaw, SimConfig, SimResult};
use crate::dynamics::ManipulatorParams;
use crate::evo::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    pub n_per_case: usize,
    /// Half-width of the relative perturbation (0.1 = ±10 %).
    pub width: f64,
    pub seed: u64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            n_per_case: 25,
            width: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub settled: bool,
    pub failed: bool,
    pub settle_time: f64,
    pub iac: [f64; 2],
    pub control_variance: [f64; 2],
}

impl From<&SimResult> for DrawOutcome {
    fn from(r: &SimResult) -> Self {
        Self {
            settled: r.settled,
            failed: r.failed,
            settle_time: r.settle_time,
            iac: r.iac,
            control_variance: r.control_variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub case_id: u32,
    pub draw: usize,
    /// Scale factors for `m1, m2, l1, l2`.
    pub factors: [f64; 4],
    pub outcomes: [DrawOutcome; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Some(Self {
            mean,
            std,
            min: sorted[0],
            median,
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Distributions over the draws where both controllers settled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerStats {
    pub settle_time: Option<Summary>,
    pub iac1: Option<Summary>,
    pub iac2: Option<Summary>,
    pub control_variance1: Option<Summary>,
    pub control_variance2: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub total_draws: usize,
    pub successes: [usize; 2],
    pub success_rate: [f64; 2],
    pub mutual_successes: usize,
    pub stats: [ControllerStats; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub draws: Vec<DrawRecord>,
    pub summary: RobustnessSummary,
}

/// Scale factors for one draw, from its own `(seed, case, draw)` stream.
pub fn draw_factors(seed: u64, case_id: u32, draw: usize, width: f64) -> [f64; 4] {
    let mut rng = derived_rng(seed, &[case_id as u64, draw as u64]);
    [0; 4].map(|_| 1.0 + width * (2.0 * rng.random::<f64>() - 1.0))
}

fn stats_for(draws: &[&DrawRecord], k: usize) -> ControllerStats {
    let col = |f: &dyn Fn(&DrawOutcome) -> f64| -> Option<Summary> {
        Summary::of(&draws.iter().map(|d| f(&d.outcomes[k])).collect::<Vec<_>>())
    };
    ControllerStats {
        settle_time: col(&|o| o.settle_time),
        iac1: col(&|o| o.iac[0]),
        iac2: col(&|o| o.iac[1]),
        control_variance1: col(&|o| o.control_variance[0]),
        control_variance2: col(&|o| o.control_variance[1]),
    }
}

pub fn summarize(draws: &[DrawRecord]) -> RobustnessSummary {
    let total = draws.len();
    let successes = [0, 1].map(|k| draws.iter().filter(|d| d.outcomes[k].settled).count());
    let mutual: Vec<&DrawRecord> = draws
        .iter()
        .filter(|d| d.outcomes.iter().all(|o| o.settled))
        .collect();
    RobustnessSummary {
        total_draws: total,
        successes,
        success_rate: successes.map(|s| if total == 0 { 0.0 } else { s as f64 / total as f64 }),
        mutual_successes: mutual.len(),
        stats: [stats_for(&mutual, 0), stats_for(&mutual, 1)],
    }
}

/// Runs `n_per_case` perturbed draws of every case for both controllers.
pub fn robustness_mc(
    controllers: [&dyn ControlLaw; 2],
    cases: &[ScenarioCase],
    nominal: &ManipulatorParams,
    sim_cfg: &SimConfig,
    cfg: &RobustnessConfig,
) -> RobustnessReport {
    let jobs: Vec<(usize, usize)> = (0..cases.len())
        .flat_map(|c| (0..cfg.n_per_case).map(move |d| (c, d)))
        .collect();
    let draws: Vec<DrawRecord> = jobs
        .par_iter()
        .map(|&(c, d)| {
            let case = &cases[c];
            let factors = draw_factors(cfg.seed, case.id, d, cfg.width);
            let plant = nominal
                .scaled(factors)
                .expect("perturbation keeps parameters positive");
            let outcomes = controllers.map(|law| DrawOutcome::from(&simulate_case(law, case, &plant, sim_cfg)));
            DrawRecord {
                case_id: case.id,
                draw: d,
                factors,
                outcomes,
            }
        })
        .collect();
    let summary = summarize(&draws);
    RobustnessReport { draws, summary }
}
