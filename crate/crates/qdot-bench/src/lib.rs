//! Fixtures shared by the benchmarks.

use qdot_core::{
    double_well_potential, lowest_states, make_grid, DoubleWellParams, Grid, ScalarField, SolverOptions, SpectrumResult,
};

/// Barrier width used by every fixture.
pub const W: f64 = 0.2;

/// Grid with the production half-widths and the given step, nm.
pub fn grid(step_nm: f64) -> Grid {
    make_grid(30.0, 20.0, step_nm).expect("fixture grid")
}

pub fn well() -> DoubleWellParams {
    DoubleWellParams::gaas(W).expect("fixture well")
}

pub fn potential(step_nm: f64) -> ScalarField {
    double_well_potential(&well(), grid(step_nm))
}

pub fn spectrum(step_nm: f64) -> SpectrumResult {
    lowest_states(&potential(step_nm), well().m_eff, &SolverOptions::default()).expect("fixture spectrum")
}
