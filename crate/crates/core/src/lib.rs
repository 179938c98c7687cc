//! Numerical laboratory for the Kirchhoff wave equation
//! `u_tt − (a‖∇u‖₂² + b)Δu = λu + |u|^{p−1}u` with Dirichlet conditions.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! and `*32` aliases below fix it.

pub mod discretization;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod real;
pub mod scalar_opt;
pub mod seeds;
pub mod wells;

pub use discretization::{build_discretization, principal_eigenpair, DiscId, Discretization, DomainSpec, Eigenpair, Field};
pub use error::{Error, Result};
pub use functionals::{
    blowup_threshold_h0, effective_coeffs, evaluate_i, evaluate_j, fiber_map, radii, total_energy, Derived,
    EffectiveCoeffs, FiberMap, FiberRegime, Growth, NormBundle, Params, Radii, Sign,
};
pub use real::Real;
pub use seeds::{seed, verify_certificate, Certificate, RecipeKind, SeedRecipe, SeedResult};

pub type Discretization64 = Discretization<f64>;
pub type DomainSpec64 = DomainSpec<f64>;
pub type Field64 = Field<f64>;
pub type Params64 = Params<f64>;
pub type NormBundle64 = NormBundle<f64>;
pub type FiberMap64 = FiberMap<f64>;
pub type Constants64 = wells::Constants<f64>;
pub type WellDepths64 = wells::WellDepths<f64>;
pub type Trace64 = dynamics::Trace<f64>;
pub type SimConfig64 = dynamics::SimConfig<f64>;
pub type SeedRecipe64 = seeds::SeedRecipe<f64>;
pub type SeedResult64 = seeds::SeedResult<f64>;

pub type Discretization32 = Discretization<f32>;
pub type Field32 = Field<f32>;
pub type Params32 = Params<f32>;
pub type NormBundle32 = NormBundle<f32>;
