//! Genetic Fuzzy Tree scheduled LQR for a planar two-link manipulator.
//!
//! The crate covers the arm dynamics, Riccati-based gain synthesis, the
//! fuzzy tree that schedules LQR state weights, the island-model GA that
//! trains it, and the experiment harness that compares it against per-case
//! optimal static LQR.

pub mod dynamics;
pub mod evo;
pub mod fuzzy;
pub mod gft;
pub mod harness;
pub mod riccati;

pub use dynamics::{CoriolisVariant, ManipulatorParams, State4};
pub use evo::{Chromosome, GaConfig, GenerationRecord};
pub use fuzzy::{FisSpec, MembershipPartition};
pub use gft::GftController;
pub use harness::{BaselineStore, ScenarioCase, SimConfig, SimResult};
pub use riccati::{GainMatrix, LqrWeights};
