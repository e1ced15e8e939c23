//! Closed-loop simulation of one case and the settling-time/effort cost.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::ScenarioCase;
use crate::dynamics::{rk4_step, CoriolisVariant, ManipulatorParams, State4};
use crate::gft::{gft_control_step, GftController};
use crate::riccati::{feedback_torque, CareError, GainMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Care(#[from] CareError),
    #[error("no gain available for case {0}")]
    MissingGain(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration and control period [s].
    pub dt: f64,
    /// Propagation limit [s].
    pub t_max: f64,
    /// Per-state settling band, applied to angles [rad] and rates [rad/s].
    pub settle_tol: f64,
    /// Clamp torques to the arm's limits.
    pub saturate: bool,
    pub variant: CoriolisVariant,
    /// Added to the cost of runs that never settle.
    pub unsettled_penalty: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.0167,
            t_max: 10.0,
            settle_tol: 0.02,
            saturate: true,
            variant: CoriolisVariant::PaperVerbatim,
            unsettled_penalty: 10.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err("dt must be positive".into());
        }
        if !(self.t_max.is_finite() && self.t_max >= self.dt) {
            return Err("t_max must be at least dt".into());
        }
        if !(self.settle_tol.is_finite() && self.settle_tol > 0.0) {
            return Err("settle_tol must be positive".into());
        }
        if !(self.unsettled_penalty.is_finite() && self.unsettled_penalty >= 0.0) {
            return Err("unsettled_penalty must be non-negative".into());
        }
        Ok(())
    }

    /// Number of control steps that fit in `t_max`.
    pub fn max_steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    pub fn limits(&self, params: &ManipulatorParams) -> Option<[f64; 2]> {
        self.saturate.then_some(params.tau_max)
    }
}

/// A feedback law evaluated once per control period.
pub trait ControlLaw: Sync {
    fn torque(&self, case: &ScenarioCase, state: &State4) -> Result<Vector2<f64>, ControlError>;
}

/// Fixed gain for every case.
#[derive(Debug, Clone, Copy)]
pub struct StaticLqr {
    pub gain: GainMatrix,
    pub limits: Option<[f64; 2]>,
}

impl ControlLaw for StaticLqr {
    fn torque(&self, case: &ScenarioCase, state: &State4) -> Result<Vector2<f64>, ControlError> {
        Ok(feedback_torque(&self.gain, state, &case.target, self.limits.as_ref()))
    }
}

/// Per-case fixed gains, as produced by the baseline search.
#[derive(Debug, Clone, Default)]
pub struct BaselineLaw {
    pub gains: BTreeMap<u32, GainMatrix>,
    pub limits: Option<[f64; 2]>,
}

impl ControlLaw for BaselineLaw {
    fn torque(&self, case: &ScenarioCase, state: &State4) -> Result<Vector2<f64>, ControlError> {
        let gain = self.gains.get(&case.id).ok_or(ControlError::MissingGain(case.id))?;
        Ok(feedback_torque(gain, state, &case.target, self.limits.as_ref()))
    }
}

/// Fuzzy-tree scheduled LQR. `model` is the nominal arm used for synthesis.
#[derive(Debug, Clone)]
pub struct GftLaw<'a> {
    pub controller: &'a GftController,
    pub model: ManipulatorParams,
    pub limits: Option<[f64; 2]>,
}

impl ControlLaw for GftLaw<'_> {
    fn torque(&self, case: &ScenarioCase, state: &State4) -> Result<Vector2<f64>, ControlError> {
        Ok(gft_control_step(
            self.controller,
            &self.model,
            state,
            &case.target,
            self.limits.as_ref(),
        )?)
    }
}

/// Constant torque regardless of state.
#[derive(Debug, Clone, Copy)]
pub struct OpenLoop(pub [f64; 2]);

impl ControlLaw for OpenLoop {
    fn torque(&self, _case: &ScenarioCase, _state: &State4) -> Result<Vector2<f64>, ControlError> {
        Ok(Vector2::from(self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State4,
    /// Torque held over `[t, t + dt)`; zero on the final row.
    pub tau: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub settled: bool,
    /// The controller or integrator failed before the run ended.
    pub failed: bool,
    /// First time all states are within tolerance; `t_max` when unsettled.
    pub settle_time: f64,
    /// Integral of absolute torque per joint [N·m·s].
    pub iac: [f64; 2],
    /// Population variance of each applied torque series.
    pub control_variance: [f64; 2],
    /// Number of control steps applied.
    pub steps: usize,
    pub trajectory: Vec<Sample>,
}

pub fn within_tolerance(state: &State4, target: &State4, tol: f64) -> bool {
    (state.to_vector() - target.to_vector()).iter().all(|e| e.abs() <= tol)
}

/// Runs `law` on `plant` from the case's initial state.
///
/// Torque is computed once per `dt` and held through the RK4 step. The run
/// stops at the first sample where every state is within `settle_tol` of the
/// target, or after `t_max`.
pub fn simulate_case(
    law: &dyn ControlLaw,
    case: &ScenarioCase,
    plant: &ManipulatorParams,
    cfg: &SimConfig,
) -> SimResult {
    let n_max = cfg.max_steps();
    let mut trajectory = Vec::with_capacity(64);
    let mut state = case.initial;
    let mut iac = [0.0; 2];
    let mut settled = false;
    let mut failed = false;
    let mut settle_time = cfg.t_max;
    let mut steps = 0;

    for j in 0..=n_max {
        let t = j as f64 * cfg.dt;
        if within_tolerance(&state, &case.target, cfg.settle_tol) {
            settled = true;
            settle_time = t;
        }
        if settled || j == n_max {
            trajectory.push(Sample { t, state, tau: [0.0; 2] });
            break;
        }
        let tau = match law.torque(case, &state) {
            Ok(tau) if tau.iter().all(|x| x.is_finite()) => tau,
            _ => {
                failed = true;
                trajectory.push(Sample { t, state, tau: [0.0; 2] });
                break;
            }
        };
        trajectory.push(Sample { t, state, tau: [tau[0], tau[1]] });
        iac[0] += tau[0].abs() * cfg.dt;
        iac[1] += tau[1].abs() * cfg.dt;
        steps += 1;
        match rk4_step(plant, &state, &tau, cfg.dt, cfg.variant) {
            Ok(next) if next.is_finite() => state = next,
            _ => {
                failed = true;
                trajectory.push(Sample {
                    t: t + cfg.dt,
                    state,
                    tau: [0.0; 2],
                });
                break;
            }
        }
    }

    let control_variance = torque_variance(&trajectory[..steps]);
    SimResult {
        settled,
        failed,
        settle_time,
        iac,
        control_variance,
        steps,
        trajectory,
    }
}

fn torque_variance(applied: &[Sample]) -> [f64; 2] {
    if applied.is_empty() {
        return [0.0; 2];
    }
    let n = applied.len() as f64;
    let mut out = [0.0; 2];
    for (i, v) in out.iter_mut().enumerate() {
        let mean = applied.iter().map(|s| s.tau[i]).sum::<f64>() / n;
        *v = applied.iter().map(|s| (s.tau[i] - mean).powi(2)).sum::<f64>() / n;
    }
    out
}

/// `T_s + IAC₁/τ₁max + IAC₂/τ₂max`.
///
/// Unsettled runs are charged `t_max` plus the configured penalty; runs that
/// failed outright are further charged `2·t_max`, the most saturated effort
/// could have cost, so failing early is never cheaper than not settling.
pub fn case_cost(result: &SimResult, params: &ManipulatorParams, cfg: &SimConfig) -> f64 {
    let effort = result.iac[0] / params.tau_max[0] + result.iac[1] / params.tau_max[1];
    if result.settled {
        result.settle_time + effort
    } else if result.failed {
        3.0 * cfg.t_max + cfg.unsettled_penalty + effort
    } else {
        cfg.t_max + cfg.unsettled_penalty + effort
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::{synthesize_gain, LqrWeights, DEFAULT_R};
    use approx::assert_abs_diff_eq;

    fn case(initial: State4, target: State4) -> ScenarioCase {
        ScenarioCase { id: 0, initial, target }
    }

    #[test]
    fn already_settled_case() {
        let p = ManipulatorParams::reference();
        let x = State4::at_rest(0.5, 0.5);
        let r = simulate_case(&OpenLoop([100.0, 100.0]), &case(x, x), &p, &SimConfig::default());
        assert!(r.settled);
        assert_eq!(r.settle_time, 0.0);
        assert_eq!(r.iac, [0.0, 0.0]);
        assert_eq!(r.trajectory.len(), 1);
        assert_eq!(case_cost(&r, &p, &SimConfig::default()), 0.0);
    }

    #[test]
    fn open_loop_effort_accumulates_per_step() {
        let p = ManipulatorParams::reference();
        let cfg = SimConfig {
            t_max: 20.0 * 0.0167,
            ..SimConfig::default()
        };
        let c = case(State4::default(), State4::at_rest(3.0, 3.0));
        let r = simulate_case(&OpenLoop([3.0, -2.0]), &c, &p, &cfg);
        assert!(!r.settled && !r.failed);
        assert_eq!(r.steps, 20);
        assert_abs_diff_eq!(r.iac[0], 3.0 * 20.0 * 0.0167, epsilon = 1e-12);
        assert_abs_diff_eq!(r.iac[1], 2.0 * 20.0 * 0.0167, epsilon = 1e-12);
        assert_eq!(r.control_variance, [0.0, 0.0]);
        assert_eq!(r.settle_time, cfg.t_max);
        assert_eq!(r.trajectory.len(), 21);
    }

    #[test]
    fn max_steps_fit_in_horizon() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.max_steps(), 598);
        assert!(cfg.max_steps() as f64 * cfg.dt <= cfg.t_max);
    }

    #[test]
    fn cost_arithmetic() {
        let p = ManipulatorParams::reference();
        let cfg = SimConfig::default();
        let mut r = SimResult {
            settled: true,
            failed: false,
            settle_time: 2.0,
            iac: [400.0, 150.0],
            control_variance: [0.0; 2],
            steps: 0,
            trajectory: vec![],
        };
        assert_eq!(case_cost(&r, &p, &cfg), 4.0);
        r.settled = false;
        r.settle_time = cfg.t_max;
        assert_eq!(case_cost(&r, &p, &cfg), 10.0 + 10.0 + 2.0);
        r.failed = true;
        assert_eq!(case_cost(&r, &p, &cfg), 30.0 + 10.0 + 2.0);
    }

    #[test]
    fn hand_tuned_lqr_settles_showcase_case() {
        let p = ManipulatorParams::reference();
        let cfg = SimConfig::default();
        let c = ScenarioCase::from_degrees(0, (180.0, 0.0), (90.0, 45.0));
        let w = LqrWeights::new([100.0, 100.0, 10.0, 10.0], DEFAULT_R);
        let gain = synthesize_gain(&p, &c.target.angles(), &w).unwrap();
        let law = StaticLqr {
            gain,
            limits: cfg.limits(&p),
        };
        let r = simulate_case(&law, &c, &p, &cfg);
        assert!(r.settled, "settle time {}", r.settle_time);
        assert!(r.settle_time < cfg.t_max);
        let last = r.trajectory.last().unwrap();
        assert!(within_tolerance(&last.state, &c.target, cfg.settle_tol));
        assert_eq!(r.trajectory.len(), r.steps + 1);
        for (k, s) in r.trajectory.iter().enumerate() {
            assert_abs_diff_eq!(s.t, k as f64 * cfg.dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn missing_gain_fails_run() {
        let p = ManipulatorParams::reference();
        let c = case(State4::default(), State4::at_rest(1.0, 0.0));
        let r = simulate_case(&BaselineLaw::default(), &c, &p, &SimConfig::default());
        assert!(r.failed && !r.settled);
        assert_eq!(r.iac, [0.0, 0.0]);
    }
}
