//! Scenario curriculum, closed-loop simulation, cost evaluation, baseline
//! search, training and robustness analysis.

pub mod baseline;
pub mod robustness;
pub mod scenario;
pub mod sim;
pub mod train;

pub use baseline::{optimize_baseline, BaselineRecord, BaselineStore, REFERENCE_Q};
pub use robustness::{robustness_mc, RobustnessConfig, RobustnessReport, RobustnessSummary};
pub use scenario::{build_scenarios, desk_subset_ids, select_cases, showcase_case_id, ScenarioCase};
pub use sim::{
    case_cost, simulate_case, BaselineLaw, ControlError, ControlLaw, GftLaw, OpenLoop, SimConfig,
    SimResult, StaticLqr,
};
pub use train::{evaluate_cases, mean_relative_cost, relative_cost, train_gft, CaseEvaluation, HarnessError};
