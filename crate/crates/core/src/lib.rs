//! Work statistics of finite-time driven Hubbard chains.
//!
//! This crate simulates open-boundary fermionic Hubbard chains at half
//! filling and zero magnetization, driven out of equilibrium by a linear
//! electric potential that ramps up over a finite time `tau`. It computes
//! two-point-measurement work distributions, their first three moments,
//! entropy production, trace distances to the equilibrium and adiabatic
//! reference states, and the work fluctuation-dissipation ratio, over
//! (L, U, tau) parameter sweeps.
//!
//! Pipeline: enumerate the symmetry sector ([`basis`]), assemble the static
//! and drive operators ([`hamiltonian`]), diagonalize the endpoint
//! Hamiltonians ([`spectral`]), integrate the time-dependent Schroedinger
//! equation for every thermally occupied eigenstate ([`propagator`]), build
//! the work distribution and its moments ([`workstats`]), and derive the
//! thermodynamic record ([`thermo`]). [`experiment`] orchestrates sweeps,
//! [`pipeline`] runs a single grid point end to end.
//!
//! All energies are in units of the hopping parameter J, times in 1/J and
//! inverse temperatures in 1/J (set `j = 1`, the default).

// OpenBLAS provides the BLAS/LAPACK symbols that ndarray and lapack-sys
// declare; the crate must be referenced for the link flags to apply.
use openblas_src as _;

pub mod basis;
pub mod chebyshev;
pub mod check;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod heatmap;
mod lapack;
pub mod pipeline;
pub mod propagator;
pub mod sparse;
pub mod spectral;
pub mod thermo;
pub mod workstats;

pub use basis::{BasisState, SectorBasis, SpinOccupation};
pub use error::CoreError;
pub use hamiltonian::HubbardParams;
pub use propagator::{PropagatedSet, PropagationConfig, Scheme};
pub use sparse::SparseOperator;
pub use spectral::{SpectralDecomposition, ThermalEnsemble};
pub use thermo::{DensityMatrix, ThermoRecord};
pub use workstats::{TransitionTable, WorkDistribution};
