//! Exact energy landscape and Monte Carlo toolkit for the two-dimensional
//! strongly anisotropic lattice gas under Kawasaki dynamics with an open
//! boundary.

pub mod geometry;
pub mod landscape;
pub mod model;
pub mod oracle;
pub mod moves;
pub mod refpath;
pub mod simulator;

pub use model::{
    derive_constants, energy_units, gibbs_weight_log, hamiltonian, standard_states, Configuration,
    DerivedConstants, EnergyScale, ModelError, ModelParams, Regime, Site,
};
