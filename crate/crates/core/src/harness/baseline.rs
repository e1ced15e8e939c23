//! Per-case optimal static LQR: the reference every trained controller is
//! scored against.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioCase;
use super::sim::{case_cost, simulate_case, SimConfig, StaticLqr};
use crate::dynamics::ManipulatorParams;
use crate::evo::{decode_baseline, derived_rng, encode_baseline, run_ga, GaConfig, GaError, BASELINE_GENOME_LEN};
use crate::riccati::{synthesize_gain, GainMatrix, LqrWeights, DEFAULT_R};
use rand::Rng;

/// Hand-tuned weights that every baseline search must at least match.
pub const REFERENCE_Q: [f64; 4] = [100.0, 100.0, 10.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub case_id: u32,
    pub q: [f64; 4],
    pub r: f64,
    /// Gain rows `K[0]`, `K[1]`.
    pub k: [[f64; 4]; 2],
    pub cost: f64,
    /// GA seed used for this case.
    pub seed: u64,
}

impl BaselineRecord {
    pub fn gain(&self) -> GainMatrix {
        GainMatrix::from_rows(self.k)
    }

    pub fn weights(&self) -> LqrWeights {
        LqrWeights::new(self.q, self.r)
    }
}

/// Cached baselines keyed by case id, tagged with the digest of the
/// dynamics and simulation settings they were computed under.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineStore {
    pub config_digest: String,
    pub seed: u64,
    pub records: BTreeMap<u32, BaselineRecord>,
}

impl BaselineStore {
    pub fn cost(&self, case_id: u32) -> Option<f64> {
        self.records.get(&case_id).map(|r| r.cost)
    }

    pub fn missing(&self, cases: &[ScenarioCase]) -> Vec<u32> {
        cases
            .iter()
            .filter(|c| !self.records.contains_key(&c.id))
            .map(|c| c.id)
            .collect()
    }

    pub fn gains(&self) -> BTreeMap<u32, GainMatrix> {
        self.records.iter().map(|(&id, r)| (id, r.gain())).collect()
    }
}

/// Cost charged when no gain can be synthesized for a weight set.
pub fn synthesis_failure_cost(cfg: &SimConfig) -> f64 {
    3.0 * cfg.t_max + cfg.unsettled_penalty
}

/// Static gain from linearizing at the case's target configuration.
pub fn static_gain(
    case: &ScenarioCase,
    params: &ManipulatorParams,
    weights: &LqrWeights,
) -> Option<GainMatrix> {
    synthesize_gain(params, &case.target.angles(), weights).ok()
}

/// Cost of a static controller with `weights` on `case`.
pub fn static_cost(
    case: &ScenarioCase,
    params: &ManipulatorParams,
    cfg: &SimConfig,
    weights: &LqrWeights,
) -> (Option<GainMatrix>, f64) {
    match static_gain(case, params, weights) {
        Some(gain) => {
            let law = StaticLqr {
                gain,
                limits: cfg.limits(params),
            };
            let result = simulate_case(&law, case, params, cfg);
            (Some(gain), case_cost(&result, params, cfg))
        }
        None => (None, synthesis_failure_cost(cfg)),
    }
}

/// Per-case GA seed derived from the master seed.
pub fn case_seed(master: u64, case_id: u32) -> u64 {
    derived_rng(master, &[0xBA5E, case_id as u64]).random()
}

/// Searches diagonal `Q` (with `r` fixed) for the cheapest static LQR on one
/// case. The reference weights seed the population and are also scored
/// exactly, so the result never loses to them.
pub fn optimize_baseline(
    case: &ScenarioCase,
    params: &ManipulatorParams,
    sim_cfg: &SimConfig,
    ga_cfg: &GaConfig,
) -> Result<BaselineRecord, GaError> {
    let seed = case_seed(ga_cfg.seed, case.id);
    let cfg = GaConfig {
        seed,
        ..ga_cfg.clone()
    };
    let outcome = run_ga(
        &cfg,
        BASELINE_GENOME_LEN,
        &[encode_baseline(REFERENCE_Q)],
        |ch| static_cost(case, params, sim_cfg, &decode_baseline(ch)).1,
        |_| {},
    )?;

    let reference = LqrWeights::new(REFERENCE_Q, DEFAULT_R);
    let mut best = (decode_baseline(&outcome.best), outcome.best_cost);
    let ref_cost = static_cost(case, params, sim_cfg, &reference).1;
    if ref_cost < best.1 {
        best = (reference, ref_cost);
    }
    let (weights, cost) = best;
    let gain = static_gain(case, params, &weights).unwrap_or(GainMatrix::from_rows([[0.0; 4]; 2]));
    Ok(BaselineRecord {
        case_id: case.id,
        q: weights.q,
        r: weights.r,
        k: gain.rows(),
        cost,
        seed,
    })
}
