//! Shared fixtures for the benchmarks.

use gftlqr_core::evo::{decode_gft, GFT_GENOME_LEN};
use gftlqr_core::harness::build_scenarios;
use gftlqr_core::{Chromosome, GftController, ScenarioCase};

/// A fixed, non-trivial controller: consequents vary across the rule table.
pub fn sample_controller() -> GftController {
    let genes = (0..GFT_GENOME_LEN).map(|i| (i * 37 % 256) as u8).collect();
    decode_gft(&Chromosome::new(genes))
}

/// The (180°, 0°) -> (90°, 45°) case.
pub fn showcase_case() -> ScenarioCase {
    let id = gftlqr_core::harness::showcase_case_id();
    build_scenarios().into_iter().find(|c| c.id == id).expect("showcase case exists")
}
