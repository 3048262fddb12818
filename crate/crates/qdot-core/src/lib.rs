//! Charge-qubit simulator for laterally coupled GaAs double quantum dots.
//!
//! Fields live on a node-centred square grid with Dirichlet boundaries; all
//! quantities are SI internally, with lengths given in nanometres at the
//! constructor boundary.

pub mod cnot;
pub mod constants;
pub mod decoherence;
pub mod eigensolver;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod potentials;
pub mod qubit;

pub use eigensolver::{dense_oracle, lowest_states, lowest_states_from, SolverOptions, SpectrumResult};
pub use error::{Error, Result};
pub use fields::{
    apply_hamiltonian, energy_expectation, inner_product, make_grid, FieldKind, Grid, Hamiltonian, ScalarField,
};
pub use num_complex::Complex64;
pub use potentials::{
    coulomb_field_from_density, coulomb_point_estimate, double_well_potential, quartic_potential, CnotGeometry,
    ControlState, DoubleWellParams, OmegaConvention, QuarticParams,
};
pub use qubit::{
    characterize, density_maxima_separation, evolve, localization, logical_basis, not_duration, Half, LogicalState,
    QubitCharacterization,
};

pub use cnot::{
    cnot_schedule, conditional_not_duration, control_densities, tune_amplitude, verify_cnot, CnotSchedule, CnotTimings,
};
pub use decoherence::{
    deformation_phonon_rate, dipole_moment_x, form_factor, photon_rate, photon_rate_bound, piezo_longitudinal_rate,
    piezo_transverse_rate, rate_breakdown, Eq57Variant, Materials, Mechanism, QuadratureSpec, RateBreakdown,
};
