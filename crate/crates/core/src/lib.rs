//! Numerical core for a diffuse-interface tumour-growth model.
//!
//! The model couples a Cahn-Hilliard equation with singular potential for
//! the tumour fraction `phi`, a quasistatic reaction-diffusion equation for
//! a nutrient `sigma` with boundary supply, and a Brinkman (or, in the
//! vanishing-viscosity limit, Darcy) flow for the mixture velocity, with
//! mass exchange between the phases. Singular potentials are handled by a
//! `delta`-regularization whose structural inequalities are exposed as
//! checkable sweeps.
//!
//! Modules:
//! * [`potentials`] - obstacle/logarithmic potentials, regularizations, cutoff;
//! * [`sources`] - admissible source terms `Gamma_v`, `Gamma_phi` and their
//!   structural extensions beyond the physical range;
//! * [`grid`] - staggered (MAC) grid, fields, difference operators;
//! * [`solvers`] - CSR matrices, CG / BiCGStab, banded LU, spectral Poisson-type
//!   preconditioner;
//! * [`nutrient`] - quasistatic nutrient solve with Robin boundary supply;
//! * [`flow`] - Brinkman saddle-point solve, Darcy limit, divergence lift;
//! * [`evolution`] - semi-implicit time stepping with energy and mass ledgers;
//! * [`stationary`] - damped fixed-point solver for stationary states.

pub mod error;
pub mod evolution;
pub mod flow;
pub mod grid;
pub mod nutrient;
pub mod potentials;
pub mod solvers;
pub mod sources;
pub mod stationary;

pub use error::CoreError;
