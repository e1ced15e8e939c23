//! Training the fuzzy tree against the cached baselines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::baseline::BaselineStore;
use super::scenario::ScenarioCase;
use super::sim::{case_cost, simulate_case, ControlLaw, GftLaw, SimConfig, SimResult};
use crate::dynamics::ManipulatorParams;
use crate::evo::{decode_gft, run_ga, Chromosome, GaConfig, GaError, GenerationRecord, GFT_GENOME_LEN};
use crate::gft::GftController;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("no cached baseline for case ids {0:?}")]
    MissingBaseline(Vec<u32>),
    #[error("cached baseline cost for case {0} is not positive")]
    BadBaseline(u32),
    #[error(transparent)]
    Ga(#[from] GaError),
}

/// Case cost divided by the cached optimal static-LQR cost.
pub fn relative_cost(
    result: &SimResult,
    case_id: u32,
    params: &ManipulatorParams,
    cfg: &SimConfig,
    store: &BaselineStore,
) -> Result<f64, HarnessError> {
    let base = store
        .cost(case_id)
        .ok_or_else(|| HarnessError::MissingBaseline(vec![case_id]))?;
    if !(base > 0.0) {
        return Err(HarnessError::BadBaseline(case_id));
    }
    Ok(case_cost(result, params, cfg) / base)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseEvaluation {
    pub case_id: u32,
    pub settled: bool,
    pub settle_time: f64,
    pub iac: [f64; 2],
    pub cost: f64,
    pub baseline_cost: f64,
    pub relative_cost: f64,
}

impl CaseEvaluation {
    /// Strictly cheaper than the baseline.
    pub fn wins(&self) -> bool {
        self.cost < self.baseline_cost
    }
}

/// Scores `law` on every case against the store, in case order.
pub fn evaluate_cases(
    law: &dyn ControlLaw,
    cases: &[ScenarioCase],
    params: &ManipulatorParams,
    cfg: &SimConfig,
    store: &BaselineStore,
) -> Result<Vec<CaseEvaluation>, HarnessError> {
    check_coverage(cases, store)?;
    cases
        .iter()
        .map(|case| {
            let result = simulate_case(law, case, params, cfg);
            let relative = relative_cost(&result, case.id, params, cfg, store)?;
            Ok(CaseEvaluation {
                case_id: case.id,
                settled: result.settled,
                settle_time: result.settle_time,
                iac: result.iac,
                cost: case_cost(&result, params, cfg),
                baseline_cost: store.cost(case.id).expect("coverage checked"),
                relative_cost: relative,
            })
        })
        .collect()
}

/// Mean relative cost over the cases.
pub fn mean_relative_cost(evals: &[CaseEvaluation]) -> f64 {
    evals.iter().map(|e| e.relative_cost).sum::<f64>() / evals.len().max(1) as f64
}

fn check_coverage(cases: &[ScenarioCase], store: &BaselineStore) -> Result<(), HarnessError> {
    let missing = store.missing(cases);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::MissingBaseline(missing))
    }
}

/// Mean relative cost of a GFT controller over the cases.
pub fn gft_fitness(
    controller: &GftController,
    cases: &[ScenarioCase],
    params: &ManipulatorParams,
    cfg: &SimConfig,
    store: &BaselineStore,
) -> Result<f64, HarnessError> {
    let law = GftLaw {
        controller,
        model: *params,
        limits: cfg.limits(params),
    };
    let mut total = 0.0;
    for case in cases {
        let result = simulate_case(&law, case, params, cfg);
        total += relative_cost(&result, case.id, params, cfg, store)?;
    }
    Ok(total / cases.len().max(1) as f64)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub controller: GftController,
    pub chromosome: Chromosome,
    pub best_cost: f64,
    pub history: Vec<GenerationRecord>,
}

/// Evolves a fuzzy tree minimizing the mean relative cost over `cases`.
///
/// `seeds` are injected into the initial population.
pub fn train_gft(
    cases: &[ScenarioCase],
    params: &ManipulatorParams,
    sim_cfg: &SimConfig,
    ga_cfg: &GaConfig,
    store: &BaselineStore,
    seeds: &[Chromosome],
    sink: impl FnMut(&GenerationRecord),
) -> Result<TrainOutcome, HarnessError> {
    check_coverage(cases, store)?;
    if let Some(id) = cases.iter().map(|c| c.id).find(|&id| !(store.cost(id).unwrap_or(0.0) > 0.0)) {
        return Err(HarnessError::BadBaseline(id));
    }
    let outcome = run_ga(
        ga_cfg,
        GFT_GENOME_LEN,
        seeds,
        |ch| {
            gft_fitness(&decode_gft(ch), cases, params, sim_cfg, store)
                .expect("baseline coverage checked before training")
        },
        sink,
    )?;
    Ok(TrainOutcome {
        controller: decode_gft(&outcome.best),
        chromosome: outcome.best,
        best_cost: outcome.best_cost,
        history: outcome.history,
    })
}
