//! Two-layer fuzzy tree that schedules the LQR state weights.
//!
//! Layer one turns each joint's normalized error and error rate into a bid in
//! `[−1, 1]`. Layer two feeds both bids to four FISs, one per diagonal entry
//! of `Q`. The resulting weights are used to re-solve the Riccati equation at
//! the current configuration on every control step.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ManipulatorParams, State4};
use crate::fuzzy::{fis_eval, FisSpec, FuzzyError};
use crate::riccati::{feedback_torque, synthesize_gain, CareError, LqrWeights, DEFAULT_R, Q_FLOOR};

pub const BID_SETS: usize = 3;
pub const QGAIN_SETS: usize = 7;
pub const FIS_NAMES: [&str; 6] = ["bid1", "bid2", "q1", "q2", "q3", "q4"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GftError {
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("bid FIS {0} must have output bounds [-1, 1]")]
    BidBounds(usize),
    #[error("normalization scales must be positive and finite")]
    Scales,
    #[error("control weight r must be positive and finite")]
    RValue,
}

/// Divisors that map joint errors onto the `[−1, 1]` bid inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormScales {
    /// Angle error scale [rad].
    pub error: f64,
    /// Rate error scale [rad/s].
    pub rate: f64,
}

impl Default for NormScales {
    fn default() -> Self {
        Self {
            error: std::f64::consts::PI,
            rate: std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GftControllerRaw")]
pub struct GftController {
    pub bid_fis: [FisSpec; 2],
    pub qgain_fis: [FisSpec; 4],
    pub norm_scales: NormScales,
    pub r_value: f64,
}

#[derive(Deserialize)]
struct GftControllerRaw {
    bid_fis: [FisSpec; 2],
    qgain_fis: [FisSpec; 4],
    norm_scales: NormScales,
    r_value: f64,
}

impl TryFrom<GftControllerRaw> for GftController {
    type Error = GftError;

    fn try_from(raw: GftControllerRaw) -> Result<Self, GftError> {
        GftController::new(raw.bid_fis, raw.qgain_fis, raw.norm_scales, raw.r_value)
    }
}

impl GftController {
    pub fn new(
        bid_fis: [FisSpec; 2],
        qgain_fis: [FisSpec; 4],
        norm_scales: NormScales,
        r_value: f64,
    ) -> Result<Self, GftError> {
        for (i, fis) in bid_fis.iter().enumerate() {
            if fis.out_lo != -1.0 || fis.out_hi != 1.0 {
                return Err(GftError::BidBounds(i));
            }
        }
        let scales_ok = [norm_scales.error, norm_scales.rate]
            .iter()
            .all(|s| s.is_finite() && *s > 0.0);
        if !scales_ok {
            return Err(GftError::Scales);
        }
        if !(r_value.is_finite() && r_value > 0.0) {
            return Err(GftError::RValue);
        }
        Ok(Self {
            bid_fis,
            qgain_fis,
            norm_scales,
            r_value,
        })
    }

    /// Controller whose q-gain FISs output the constants `q` everywhere.
    ///
    /// The bid layer is irrelevant to such a controller; it is filled with
    /// neutral consequents.
    pub fn constant(q: [f64; 4], r_value: f64) -> Result<Self, GftError> {
        let bid = FisSpec::square(BID_SETS, vec![0.5; BID_SETS * BID_SETS], -1.0, 1.0)?;
        let qgain = q.map(|v| {
            // Consequent 0 pins the output to out_lo exactly.
            FisSpec::square(QGAIN_SETS, vec![0.0; QGAIN_SETS * QGAIN_SETS], v, v * 2.0 + 1.0)
        });
        let [a, b, c, d] = qgain;
        Self::new(
            [bid.clone(), bid],
            [a?, b?, c?, d?],
            NormScales::default(),
            r_value,
        )
    }

    pub fn fis(&self, name: &str) -> Option<&FisSpec> {
        match name {
            "bid1" => Some(&self.bid_fis[0]),
            "bid2" => Some(&self.bid_fis[1]),
            "q1" => Some(&self.qgain_fis[0]),
            "q2" => Some(&self.qgain_fis[1]),
            "q3" => Some(&self.qgain_fis[2]),
            "q4" => Some(&self.qgain_fis[3]),
            _ => None,
        }
    }
}

/// Joint bids from the normalized, clamped angle and rate errors.
pub fn bids(controller: &GftController, state: &State4, target: &State4) -> [f64; 2] {
    let s = &controller.norm_scales;
    let errors = [
        (target.theta1 - state.theta1, target.omega1 - state.omega1),
        (target.theta2 - state.theta2, target.omega2 - state.omega2),
    ];
    let mut out = [0.0; 2];
    for (i, (e, de)) in errors.into_iter().enumerate() {
        let e = (e / s.error).clamp(-1.0, 1.0);
        let de = (de / s.rate).clamp(-1.0, 1.0);
        out[i] = fis_eval(&controller.bid_fis[i], e, de);
    }
    out
}

/// Diagonal state weights inferred from the two bids, floored at [`Q_FLOOR`].
pub fn q_gains(controller: &GftController, bid1: f64, bid2: f64) -> [f64; 4] {
    let mut q = [0.0; 4];
    for (qi, fis) in q.iter_mut().zip(&controller.qgain_fis) {
        *qi = fis_eval(fis, bid1, bid2).max(Q_FLOOR);
    }
    q
}

/// LQR weights the tree selects for this state.
pub fn scheduled_weights(controller: &GftController, state: &State4, target: &State4) -> LqrWeights {
    let [b1, b2] = bids(controller, state, target);
    LqrWeights::new(q_gains(controller, b1, b2), controller.r_value)
}

/// One control update: schedule `Q`, re-linearize at the current angles,
/// solve for the gain and apply the (optionally saturated) regulator law.
pub fn gft_control_step(
    controller: &GftController,
    params: &ManipulatorParams,
    state: &State4,
    target: &State4,
    limits: Option<&[f64; 2]>,
) -> Result<Vector2<f64>, CareError> {
    let weights = scheduled_weights(controller, state, target);
    let gain = synthesize_gain(params, &state.angles(), &weights)?;
    Ok(feedback_torque(&gain, state, target, limits))
}

impl Default for GftController {
    fn default() -> Self {
        Self::constant([1.0; 4], DEFAULT_R).expect("valid constant controller")
    }
}
