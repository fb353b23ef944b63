//! Shared fixtures for the criterion benches.

use regmap_core::harness::{generate_regions, with_ids, GenConfig};
use regmap_core::IdRegion;

/// Two independent seeded datasets of `n` regions each, with store-style ids.
pub fn dataset_pair(n: usize, seed: u64) -> (Vec<IdRegion>, Vec<IdRegion>) {
    let gen = |seed| {
        generate_regions(&GenConfig {
            seed,
            count: n,
            ..GenConfig::default()
        })
        .expect("default generator config is valid")
    };
    (with_ids(gen(seed), 1), with_ids(gen(seed + 1), n as u64 + 1))
}
