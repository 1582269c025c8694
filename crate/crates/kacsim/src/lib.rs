//! Kac particle simulation for the homogeneous Boltzmann equation with
//! regularized very soft kernels, and numerical checks of the spherical
//! functional inequalities behind Fisher information dissipation.

pub mod geometry;
pub mod quadrature;
pub mod sphere_spectral;
pub mod functionals;
pub mod kernels;
pub mod simulator;
pub mod diagnostics;
pub mod cli;
