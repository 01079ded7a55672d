//! Quasi-free Markovian dynamics of hybrid quantum-classical systems,
//! computed at the level of characteristic functions.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The
//! `*64` and `*32` aliases below fix the scalar.

pub mod error;
pub mod examples;
pub mod instruments;
pub mod linalg;
pub mod model;
pub mod phase_space;
pub mod propagation;
pub mod quadrature;
pub mod sampler;
pub mod scalar;
pub mod states;

pub use error::{Error, Result};
pub use model::{GeneratingTriplet, HybridModel, LevyMeasure};
pub use phase_space::{make_dims, symplectic_form, Dims, SymplecticForm};
pub use scalar::Real;
pub use states::{DensityGrid, GaussianHybridState, GridAxis, GridCF};
pub use sampler::PathEnsemble;
pub use instruments::WeylAction;
pub use examples::Example;

pub type SymplecticForm64 = SymplecticForm<f64>;
pub type HybridModel64 = HybridModel<f64>;
pub type LevyMeasure64 = LevyMeasure<f64>;
pub type GaussianHybridState64 = GaussianHybridState<f64>;
pub type GridCF64 = GridCF<f64>;
pub type DensityGrid64 = DensityGrid<f64>;
pub type PathEnsemble64 = PathEnsemble<f64>;
pub type WeylAction64 = WeylAction<f64>;

pub type HybridModel32 = HybridModel<f32>;
pub type GaussianHybridState32 = GaussianHybridState<f32>;
pub type GridCF32 = GridCF<f32>;
pub type DensityGrid32 = DensityGrid<f32>;
pub type PathEnsemble32 = PathEnsemble<f32>;
