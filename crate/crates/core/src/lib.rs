//! Arrival-time distributions for a two-level atom entering a laser-illuminated
//! half space.
//!
//! The crate computes, for a freely incoming ground-state wave packet,
//!
//! * the first-photon distribution `Π(t)` of the fluorescence model,
//! * its operator-normalized version `Π^ON(t)`,
//! * Kijowski's axiomatic distribution `Π_K(t)` and the free flux `J(t)`,
//! * the symmetrized variant `Π^J(t)` and the deconvolved ideal distribution `Π_id(t)`,
//! * the one-channel complex-potential model and its operator normalization.
//!
//! All quantities are in SI units at the public surface. Time series are
//! evaluated as Hermitian quadratic forms over a momentum quadrature grid,
//! with the spatial overlap integrals done in closed form.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cpot;
pub mod deconv;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod packets;
pub mod params;
pub mod quadrature;
pub mod scattering;
pub mod scenario;

mod branch;

pub use error::{Error, ErrorKind, Result};
pub use kernels::{Distribution, DistributionSeries, OverlapKernel, TimeGrid};
pub use num_complex::Complex64;
pub use packets::{GaussianComponent, MomentumAmplitude, MomentumGrid, PacketSpec, Width};
pub use params::{CesiumDefaults, PhysicalParams};
pub use scattering::{OneChannelCoefficients, TwoChannelCoefficients};
