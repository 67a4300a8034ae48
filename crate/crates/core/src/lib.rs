//! Momentum-space solver for three identical bosons with zero-range
//! interactions.
//!
//! The two-body sector is the renormalized dimer propagator
//! ([`twobody`]); the three-body sector is the subtracted
//! Skorniakov–Ter-Martirosian equation, solved by Nyström discretization
//! ([`integral_eq`]) for bound states ([`bound_state`]), wave functions
//! ([`wavefunction`]) and elastic atom–dimer scattering ([`scattering`]).
//! [`universality`] builds the Efimov scaling outputs on top.
//!
//! All quantities are dimensionless: momenta in units of the three-body
//! subtraction scale μ₍₃₎, energies in units of μ₍₃₎², ħ = 1 and unit
//! masses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound_state;
pub mod error;
pub mod integral_eq;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod quadrature;
pub mod scattering;
pub mod twobody;
pub mod universality;
pub mod wavefunction;

pub use error::{Error, Result};
