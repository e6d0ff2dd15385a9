//! Numerical library for the mean field vortex equation with variable
//! positive intensity:
//!
//! ```text
//!   −Δu = λ (∫ α e^{αu} P(dα)) / (∬ e^{αu} P(dα) dx)   in Ω,  u = 0 on ∂Ω
//! ```
//!
//! where P is a probability measure on [0,1] describing the vortex
//! intensity distribution. The crate provides the measure representation,
//! masked-grid Dirichlet Laplacians and Green functions, a Newton solver
//! with continuation in λ, the variational energy with its
//! exponential-integrability diagnostics, concentration/blow-up analysis
//! with mass quantization checks, and the degree-theoretic machinery used
//! by the min-max construction on non-simply-connected domains.

pub mod banded;
pub mod blowup;
pub mod curve;
pub mod energy;
pub mod grid;
pub mod io;
pub mod measure;
pub mod numeric;
pub mod solver;
pub mod testfn;
pub mod topology;

pub use grid::{DiscreteDomain, DomainSpec, Field};
pub use measure::{IntensityMeasure, MeasureSpec};
