//! Shared fixtures for the criterion benches.

use ferrolearn::instances::random_instance;
use ferrolearn::{CircuitSpec, Path};

/// A fixed circuit so bench numbers are comparable across runs.
pub fn fixture(n: usize, t: usize, kappa: usize, path: Path) -> CircuitSpec {
    random_instance(n, t, kappa, path, 0xBE7C).expect("bench fixture parameters are feasible")
}
