//! Shared fixtures for the benchmark targets.

use cachemec_core::{catalog, Scenario};

/// The small comparison desk: two mobiles, three tasks.
pub fn small_scenario() -> Scenario {
    catalog::scenario(2, 3, 0.8, 0.08, 5e4).expect("reference scenario is valid")
}

/// The large comparison desk: four mobiles, twelve tasks (331,776 states).
pub fn large_scenario() -> Scenario {
    catalog::scenario(4, 12, 0.8, 0.08, 2.4e5).expect("reference scenario is valid")
}
