//! Fixtures shared by the benchmarks.

use oldroyd_core::solver::{random_band, SimState};
use oldroyd_core::spectral::{FluidParams, FourierGrid};

/// Small random-band state on an `n³` grid with `M = 4`.
pub fn sample_state(n: usize, seed: u64) -> SimState {
    let grid = FourierGrid::new(n, 4.0).expect("valid grid");
    let (u, tau) = random_band(&grid, 0.25, 1.0, 1e-2, seed).expect("valid band");
    SimState::new(u, tau, FluidParams::default(), 0.0).expect("valid state")
}
