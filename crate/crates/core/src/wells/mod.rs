//! Sobolev constants, well depths and set membership.

mod depth;
pub mod rays;
mod sobolev;

pub use depth::{
    estimate_depths, estimate_signed_depths, estimate_well_depth, probe_delta, psi1_condition, DeltaProbe, DepthEstimate, SignedDepths,
    WellDepths, POLISH_ITERATIONS, PROBE_STARTS,
};
pub use sobolev::{
    estimate_sobolev_constant, estimate_sobolev_constant_from, Constants, SobolevConstants, SobolevEntry,
    SOBOLEV_MAX_ITER,
};

use crate::discretization::{Discretization, Field};
use crate::error::Result;
use crate::functionals::{
    effective_coeffs, evaluate_j, nehari_sign, radii, Derived, NormBundle, Params, Radii, Sign,
};
use crate::real::Real;

/// Default relative tolerance of the `I(u) = 0` test.
pub const DEFAULT_MEMBERSHIP_EPS: f64 = 1e-8;

/// Where `‖∇u‖₂` sits relative to the radii of the active regime.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RadiusFlags {
    /// `‖∇u‖ < ρ`
    pub below_rho: Option<bool>,
    /// `‖∇u‖ > R`
    pub above_big_r: Option<bool>,
    /// `‖∇u‖ < r̂`
    pub below_rhat: Option<bool>,
}

/// Membership of a field in the sets `S`, `L±`, `N±`, `W±`.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification<T: Real = f64> {
    pub in_s: bool,
    pub l_sign: Sign,
    pub i_sign: Sign,
    pub j_value: T,
    /// `None` when no depth is available for the regime.
    pub in_w_plus: Option<bool>,
    pub in_w_minus: Option<bool>,
    pub depth: Option<T>,
    pub grad_norm: T,
    pub radius_flags: RadiusFlags,
}

/// Classifies a field.
pub fn classify<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    u: &Field<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
    eps: T,
) -> Result<Classification<T>> {
    let n = disc.norms(u, params.p)?;
    Ok(classify_bundle(params, &n, constants, depths, eps))
}

/// Classifies from the four norms alone.
pub fn classify_bundle<T: Real>(
    params: &Params<T>,
    n: &NormBundle<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
    eps: T,
) -> Classification<T> {
    let lambda1 = constants.lambda1();
    let depth = depths.active_depth(params, lambda1);
    let in_s = n.l4 - params.a * n.g2 * n.g2 > T::zero();
    let l_sign = Sign::of(params.b * n.g2 - params.lambda * n.m2);
    let i_sign = nehari_sign(params, n, eps);
    let j_value = evaluate_j(params, n);
    let origin = n.is_zero();
    let (in_w_plus, in_w_minus) = match depth {
        Some(d) => {
            let below = j_value < d;
            let plus = below && (origin || i_sign == Sign::Positive);
            let minus = below && !origin && i_sign == Sign::Negative;
            (Some(plus), Some(minus))
        }
        None => (None, None),
    };
    let grad_norm = n.g2.sqrt();
    let r = active_radii(params, constants, depth);
    let cmp_below = |x: &Derived<T>| x.value().map(|v| grad_norm < v);
    let cmp_above = |x: &Derived<T>| x.value().map(|v| grad_norm > v);
    let radius_flags = match params.growth() {
        crate::functionals::Growth::Critical => RadiusFlags {
            below_rho: cmp_below(&r.rho3),
            above_big_r: cmp_above(&r.big_r3),
            below_rhat: cmp_below(&r.rhat3),
        },
        crate::functionals::Growth::Superlinear => RadiusFlags {
            below_rho: cmp_below(&r.rhop),
            above_big_r: cmp_above(&r.big_rp),
            below_rhat: cmp_below(&r.rhatp),
        },
        crate::functionals::Growth::Sublinear => RadiusFlags::default(),
    };
    Classification {
        in_s,
        l_sign,
        i_sign,
        j_value,
        in_w_plus,
        in_w_minus,
        depth,
        grad_norm,
        radius_flags,
    }
}

/// Radii from the discretely estimated constants and an optional depth.
pub fn active_radii<T: Real>(params: &Params<T>, constants: &Constants<T>, depth: Option<T>) -> Radii<T> {
    let coeffs = effective_coeffs(params, constants.lambda1());
    let sp1 = constants.sp1(params.p).unwrap_or(T::zero());
    radii(params, &coeffs, constants.lambda_big(), sp1, depth.unwrap_or(T::zero()))
}
