//! Energy minimization on increasingly elongated product domains.
//!
//! A domain `Ω_ℓ = ℓω′ × ω″` is stretched by a factor `ℓ` in its first `r`
//! directions. On each such domain we minimize a convex integral functional
//! `∫ F(∇v) − f″(x″) v` over fields vanishing on the boundary, solve the
//! reduced problem posed on the cross-section `ω″` alone, and measure how the
//! former approaches the latter as `ℓ` grows.
//!
//! The numerical kernels are generic over the scalar type (see [`Scalar`]);
//! the experiment layer in [`study`] works in `f64`. Concrete aliases for the
//! common instantiations live at the crate root.

pub mod density;
pub mod error;
pub mod field;
pub mod geometry;
pub mod solver;
pub mod study;

mod scalar;

pub use density::{Density, DensityKind, EnergyDensity, HypothesisReport, VerticalPart};
pub use error::{Error, Result};
pub use field::{Load, ScalarField};
pub use geometry::{CellSet, CrossSection, DomainSpec, Grid, RegionKind, Shape};
pub use scalar::Scalar;
pub use solver::{Method, SolveOptions, SolveReport};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type DomainSpec64 = DomainSpec<f64>;
pub type EnergyDensity64 = EnergyDensity<f64>;
pub type EnergyDensity32 = EnergyDensity<f32>;
pub type ScalarField64 = ScalarField<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type Load64 = Load<f64>;
pub type Load32 = Load<f32>;
