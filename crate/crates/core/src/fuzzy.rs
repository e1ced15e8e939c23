//! Zeroth-order Takagi–Sugeno–Kang inference over two inputs.
//!
//! Inputs live on `[−1, 1]` and are covered by evenly spaced triangular
//! membership functions with shouldered ends. Neighbouring triangles cross at
//! one half, so at most two sets fire per input and their degrees sum to one.
//! Rules combine one set per input with the product t-norm; the output is the
//! firing-weighted mean of the rule constants, mapped into `[out_lo, out_hi]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("a partition needs at least 2 membership functions, got {0}")]
    TooFewSets(usize),
    #[error("partition centers are not the evenly spaced grid for {0} sets")]
    BadCenters(usize),
    #[error("expected {expected} rule consequents, got {got}")]
    RuleCount { expected: usize, got: usize },
    #[error("consequent {index} = {value} outside [0, 1]")]
    Consequent { index: usize, value: f64 },
    #[error("output bounds [{lo}, {hi}] are not increasing and finite")]
    Bounds { lo: f64, hi: f64 },
}

/// Evenly spaced triangular sets over `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipPartition {
    count: usize,
    centers: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPartition {
    count: usize,
    centers: Vec<f64>,
}

impl<'de> Deserialize<'de> for MembershipPartition {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = RawPartition::deserialize(de)?;
        let part = MembershipPartition::new(raw.count).map_err(serde::de::Error::custom)?;
        if part.centers != raw.centers {
            return Err(serde::de::Error::custom(FuzzyError::BadCenters(raw.count)));
        }
        Ok(part)
    }
}

impl MembershipPartition {
    pub fn new(count: usize) -> Result<Self, FuzzyError> {
        if count < 2 {
            return Err(FuzzyError::TooFewSets(count));
        }
        let width = 2.0 / (count - 1) as f64;
        let mut centers: Vec<f64> = (0..count).map(|j| -1.0 + j as f64 * width).collect();
        centers[count - 1] = 1.0;
        Ok(Self { count, centers })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    fn width(&self) -> f64 {
        2.0 / (self.count - 1) as f64
    }

    /// Degree of set `j` at `x`, evaluated from the triangle definition.
    pub fn membership(&self, j: usize, x: f64) -> f64 {
        let c = self.centers[j];
        if (j == 0 && x <= c) || (j == self.count - 1 && x >= c) {
            return 1.0;
        }
        (1.0 - (x - c).abs() / self.width()).max(0.0)
    }

    /// The (at most) two sets active at `x` as `[(index, degree); 2]`.
    #[inline]
    pub fn active(&self, x: f64) -> [(usize, f64); 2] {
        let x = x.clamp(-1.0, 1.0);
        let t = (x + 1.0) / self.width();
        let i = (t.floor() as usize).min(self.count - 2);
        let frac = (t - i as f64).clamp(0.0, 1.0);
        [(i, 1.0 - frac), (i + 1, frac)]
    }
}

/// One two-input FIS with constant rule consequents in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FisSpecRaw")]
pub struct FisSpec {
    pub inputs: [MembershipPartition; 2],
    /// Row-major over (set of input 1, set of input 2).
    pub consequents: Vec<f64>,
    pub out_lo: f64,
    pub out_hi: f64,
}

#[derive(Deserialize)]
struct FisSpecRaw {
    inputs: [MembershipPartition; 2],
    consequents: Vec<f64>,
    out_lo: f64,
    out_hi: f64,
}

impl TryFrom<FisSpecRaw> for FisSpec {
    type Error = FuzzyError;

    fn try_from(raw: FisSpecRaw) -> Result<Self, FuzzyError> {
        FisSpec::new(raw.inputs, raw.consequents, raw.out_lo, raw.out_hi)
    }
}

impl FisSpec {
    pub fn new(
        inputs: [MembershipPartition; 2],
        consequents: Vec<f64>,
        out_lo: f64,
        out_hi: f64,
    ) -> Result<Self, FuzzyError> {
        let expected = inputs[0].count() * inputs[1].count();
        if consequents.len() != expected {
            return Err(FuzzyError::RuleCount {
                expected,
                got: consequents.len(),
            });
        }
        if let Some((index, &value)) = consequents
            .iter()
            .enumerate()
            .find(|(_, c)| !(0.0..=1.0).contains(*c))
        {
            return Err(FuzzyError::Consequent { index, value });
        }
        if !(out_lo.is_finite() && out_hi.is_finite() && out_lo < out_hi) {
            return Err(FuzzyError::Bounds {
                lo: out_lo,
                hi: out_hi,
            });
        }
        Ok(Self {
            inputs,
            consequents,
            out_lo,
            out_hi,
        })
    }

    /// Square FIS with `sets` membership functions on both inputs.
    pub fn square(
        sets: usize,
        consequents: Vec<f64>,
        out_lo: f64,
        out_hi: f64,
    ) -> Result<Self, FuzzyError> {
        let part = MembershipPartition::new(sets)?;
        Self::new([part.clone(), part], consequents, out_lo, out_hi)
    }

    pub fn rule_count(&self) -> usize {
        self.consequents.len()
    }

    pub fn rule_index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.inputs[1].count() + i2
    }

    /// Maps a normalized value in `[0, 1]` into the output bounds.
    pub fn denormalize(&self, c: f64) -> f64 {
        self.out_lo + (self.out_hi - self.out_lo) * c
    }
}

/// Evaluates the FIS; inputs outside `[−1, 1]` are clamped.
#[inline]
pub fn fis_eval(fis: &FisSpec, in1: f64, in2: f64) -> f64 {
    let a = fis.inputs[0].active(in1);
    let b = fis.inputs[1].active(in2);
    let mut acc = 0.0;
    for &(i, wi) in &a {
        for &(j, wj) in &b {
            acc += wi * wj * fis.consequents[fis.rule_index(i, j)];
        }
    }
    fis.denormalize(acc).clamp(fis.out_lo, fis.out_hi)
}

/// FIS output sampled on a uniform grid over `[−1, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub axis: Vec<f64>,
    /// `values[i * n + j]` is the output at `(axis[i], axis[j])`.
    pub values: Vec<f64>,
}

impl SurfaceGrid {
    pub fn n(&self) -> usize {
        self.axis.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }
}

pub fn control_surface(fis: &FisSpec, grid_n: usize) -> SurfaceGrid {
    let n = grid_n.max(2);
    let axis: Vec<f64> = (0..n)
        .map(|k| {
            if k == n - 1 {
                1.0
            } else {
                -1.0 + 2.0 * k as f64 / (n - 1) as f64
            }
        })
        .collect();
    let values = axis
        .iter()
        .flat_map(|&x| axis.iter().map(move |&y| fis_eval(fis, x, y)))
        .collect();
    SurfaceGrid { axis, values }
}
