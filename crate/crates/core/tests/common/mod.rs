#![allow(dead_code)]

use kirchhoff_core::wells::rays::DirectionSampler;
use kirchhoff_core::wells::{estimate_depths, Constants, WellDepths};
use kirchhoff_core::{Discretization, DomainSpec, Field, Params};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn interval(n: usize) -> Discretization<f64> {
    Discretization::new(DomainSpec::interval(1.0, n)).unwrap()
}

pub fn constants(disc: &Discretization<f64>) -> Constants<f64> {
    Constants::compute(disc, &[3.0, 5.0], 1e-10).unwrap()
}

pub fn depths(p: &Params<f64>, disc: &Discretization<f64>, c: &Constants<f64>) -> WellDepths<f64> {
    estimate_depths(p, disc, c, 64, 7).unwrap()
}

pub fn params(a: f64, b: f64, lambda: f64, p: f64) -> Params<f64> {
    Params::new(a, b, lambda, p).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random ∇-normalized field, smooth or rough.
pub fn random_field(disc: &Discretization<f64>, rng: &mut ChaCha8Rng) -> Field<f64> {
    disc.field(DirectionSampler::new(disc).direction(rng)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
