//! Three independent constructions of the non-relativistic quantum propagator,
//! cross-verified against each other and against the equations it must satisfy.
//!
//! The object of study is the amplitude K(x, x0; T) for a particle of mass m to
//! move from x0 to x in time T. This crate builds it three ways:
//!
//! 1. **Closed form** ([`kernels`]): modulus (m/2πℏT)^{D/2}, phase S/ℏ - Dπ/4,
//!    with S the classical action; also for a linear potential V = V0 - F.(y-x0).
//! 2. **Momentum quadrature** ([`quadrature`]): the constrained momentum integral
//!    (2πℏ)^{-D} ∫d^Dq exp(iq.Δx/ℏ - iq²T/2mℏ), tamed by an ε-regulator ladder
//!    and extrapolated to ε = 0.
//! 3. **Time-sliced composition** ([`lattice`]): N+1 short-time amplitudes with
//!    midpoint Hamiltonians, integrated over intermediate-position grids.
//!
//! [`classical`] supplies the action and its Hamilton-Jacobi residual, [`evolve`]
//! drives wavefunctions with the kernel and checks the Schrödinger equation
//! pointwise, and [`report`] renders every verification as a deterministic JSON
//! [`ResidualReport`].
//!
//! ```
//! use propagator::{free_kernel, BoundaryData, PhysicsConfig, RealVector};
//!
//! let cfg = PhysicsConfig::default(); // m = ℏ = 1, one dimension
//! let b = BoundaryData::new(RealVector::from(0.0), RealVector::from(1.0), 1.0)?;
//! let k = free_kernel(&b, &cfg);
//! // Modulus is displacement-independent, phase is action minus one eighth turn.
//! assert!((k.modulus() - (2.0 * std::f64::consts::PI).sqrt().recip()).abs() < 1e-15);
//! assert!((k.phase() - (0.5 - std::f64::consts::FRAC_PI_4)).abs() < 1e-15);
//! # Ok::<(), propagator::Error>(())
//! ```
//!
//! Numerical discipline, used throughout: every windowed quadrature states the
//! spacing it can tolerate and fails loudly with the admissible value instead of
//! returning silently aliased numbers; every extrapolation reports its ladder so
//! a stalled limit is visible; all reported floats are rounded to nine
//! significant digits so reruns are byte-identical.

pub mod classical;
pub mod core;
pub mod error;
pub mod evolve;
pub mod kernels;
pub mod lattice;
pub mod quadrature;
pub mod report;

pub use classical::{
    classical_action_free, classical_action_linear, classical_momentum, classical_trajectory,
    hamilton_jacobi_residual, hamilton_jacobi_residual_exact, ActionValue, BoundaryData,
    LinearPotentialSpec, DEFAULT_HJ_STEP,
};
pub use core::{
    build_grid, gaussian_packet, inner_product, norm, packet_well_covered, GridAxis,
    PhysicsConfig, RealVector, SpatialGrid, Wavefunction, MAX_DIM,
};
pub use error::{Error, Result};
pub use evolve::{
    ansatz_inversion_check, evolve_wavefunction, mean_wavevector, packet_width,
    schrodinger_residual,
};
pub use kernels::{
    delta_limit_check, free_kernel, kernel_sample, linear_potential_kernel, semigroup_check,
    semigroup_check_windowed, KernelSample, KernelSpec,
};
pub use lattice::{convergence_study, short_time_amplitude, sliced_propagator, SliceConfig};
pub use quadrature::{
    brute_force_gaussian, delta_gaussian, gaussian_closed_form, momentum_kernel_integral,
    momentum_kernel_ladder, GaussianForm, MomentumLadder, OscillatoryQuadratureConfig,
};
pub use report::{fit_order_loglog, format_g9, ResidualReport};

// Every code block in the guide compiles and runs as a doctest, so the book
// cannot drift from the library.
#[cfg(doctest)]
mod book;
