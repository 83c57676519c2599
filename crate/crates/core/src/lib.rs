//! Symplectic tomography of identical particles: Fock states, permutation
//! symmetry of density matrices, tomographic transforms and their evolution.

pub mod density;
pub mod error;
pub mod evolution;
pub mod hermite;
pub mod io;
pub mod permutation;
pub mod quadrature;
pub mod scalar;
pub mod symmetrized;
pub mod tomogram;
pub mod verify;

pub use error::{Result, TomoError};
pub use scalar::Real;

pub type Density = density::DensityObject<f64>;
pub type State = hermite::ProductState<f64>;
pub type Tomogram = tomogram::TomogramObject<f64>;
pub type Point = tomogram::TomogramPoint<f64>;
