//! Dicke lattice ring threaded by a synthetic magnetic flux.
//!
//! The crate computes normal-phase excitation spectra, the semiclassical
//! (mean-field) ground state with its frustration structure, Gaussian
//! fluctuations around that ground state, and critical exponents extracted
//! from gap and observable series.
//!
//! Units: the cavity frequency sets the energy scale, the coupling `g` is the
//! dimensionless `2λ/√(ωΩ)` and mean-field quadratures are rescaled by the
//! number of atoms per site, which never appears explicitly.

pub mod criticality;
pub mod gaussian;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod npspectrum;
pub mod par;
pub mod real;

pub use criticality::{PhaseCell, PhaseLabel, ScalingFit, Side};
pub use gaussian::{CovarianceMatrix, QuadraticForm, SiteObservables, SymplecticSpectrum};
pub use meanfield::{ConfigClass, EffectiveCouplings, MeanFieldState};
pub use model::{ModelError, ModelParams, MomentumGrid};
pub use real::{Real, DD};
