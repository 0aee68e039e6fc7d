//! Canonical solution operator for the ∂̄-equation and the Bergman
//! projection on products of planar domains.
//!
//! Every one-variable operator has an exact path on monomial densities over
//! the unit disc and a numeric path on polar tensor grids (unit disc or a
//! conformal polynomial image of it). Product-domain operators compose the
//! slice operators variable by variable.

pub mod density;
pub mod domain;
pub mod error;
pub mod family;
pub mod form;
pub mod green;
pub mod harness;
pub mod grid;
pub mod product;
pub mod quadrature;
pub mod scalar;
pub mod sharpness;
pub mod slice_ops;
pub mod sobolev;
pub mod spectral;

pub use density::{Density, ExactDensity, FloatDensity, Monomial, PiScaled};
pub use domain::{DomainConfig, GridSpec, SliceDomain, SliceSpec, SobolevIndex};
pub use error::{DbarError, Result};
pub use green::{bergman_kernel, green, green_dz, GreenEval};
pub use grid::{GridFunction, ProductGrid, SliceGrid};
pub use num_complex::Complex64;
pub use scalar::{ExactComplex, Scalar};
