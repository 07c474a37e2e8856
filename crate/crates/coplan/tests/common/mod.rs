#![allow(dead_code)]

use coplan::core::scenario::Scenario;
use coplan::generator::{generate_scenario, mixed_suite};

/// Seed of the fixed evaluation suite.
pub const SUITE_SEED: u64 = 2024;

pub fn suite(n: usize) -> Vec<Scenario> {
    mixed_suite(SUITE_SEED, n)
        .iter()
        .map(|p| generate_scenario(p).expect("generator accepts its own profiles"))
        .collect()
}
