//! Riesz potentials, energies and Riesz transforms.

pub mod energy;
pub mod riesz;
pub mod transform;

pub use energy::{energy, energy_with, weak_energy, EnergyOptions, EnergyReport, WeakEnergyReport};
pub use riesz::{
    riesz_constant, riesz_potential_atomic, riesz_potential_extended, riesz_potential_grid,
    PotentialValue,
};
pub use transform::{
    coefficient_of_variation, riesz_potential_spectral, riesz_transform, verify_riesz_identity,
    RieszIdentityReport,
};
