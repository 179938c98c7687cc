//! Initial data `(u₀, u₁) = (k v₀, m v₁)` for each hypothesis row.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discretization::{Discretization, Field};
use crate::error::{Error, Result};
use crate::functionals::{
    blowup_threshold_h0, effective_coeffs, evaluate_i, evaluate_j, fiber_map, FiberRegime, Growth, NormBundle, Params,
};
use crate::real::Real;
use crate::scalar_opt::{bisect, largest_crossing};
use crate::wells::rays::{normalize_grad, DirectionSampler};
use crate::wells::{active_radii, psi1_condition, Constants, WellDepths};

/// Blow-up hypotheses for `p = 3`, `λ < bλ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum P3Case {
    H1,
    H2,
    H3,
    H4,
}

/// Blow-up hypotheses for `p > 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuperCase {
    A1,
    A2,
    A3,
    A4,
    B1,
    B2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RecipeKind {
    /// `1 < p < 3`, `E(0) < 0`.
    SublinearNegE,
    /// `p = 3`, `u₀ ∈ W₃⁺`, `E(0) < d₃`.
    P3WellInterior,
    P3Blowup(P3Case),
    /// `p = 3`, `λ > bλ₁`, `u₀ ∈ N₃⁻`, `E(0) < d₃⁻`.
    P3SuperLambda,
    /// `3 < p < 5`, `u₀ ∈ W_p⁺`, `E(0) < d_p`.
    SuperlinearWellInterior,
    SuperlinearBlowup(SuperCase),
    /// Explicit `k`, `m` on a perturbed `ψ₁`; no hypotheses.
    Scaled,
}

impl RecipeKind {
    pub const ALL: [RecipeKind; 15] = [
        RecipeKind::SublinearNegE,
        RecipeKind::P3WellInterior,
        RecipeKind::P3Blowup(P3Case::H1),
        RecipeKind::P3Blowup(P3Case::H2),
        RecipeKind::P3Blowup(P3Case::H3),
        RecipeKind::P3Blowup(P3Case::H4),
        RecipeKind::P3SuperLambda,
        RecipeKind::SuperlinearWellInterior,
        RecipeKind::SuperlinearBlowup(SuperCase::A1),
        RecipeKind::SuperlinearBlowup(SuperCase::A2),
        RecipeKind::SuperlinearBlowup(SuperCase::A3),
        RecipeKind::SuperlinearBlowup(SuperCase::A4),
        RecipeKind::SuperlinearBlowup(SuperCase::B1),
        RecipeKind::SuperlinearBlowup(SuperCase::B2),
        RecipeKind::Scaled,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RecipeKind::SublinearNegE => "sublinear_negE",
            RecipeKind::P3WellInterior => "p3_well_interior",
            RecipeKind::P3Blowup(P3Case::H1) => "p3_blowup_h1",
            RecipeKind::P3Blowup(P3Case::H2) => "p3_blowup_h2",
            RecipeKind::P3Blowup(P3Case::H3) => "p3_blowup_h3",
            RecipeKind::P3Blowup(P3Case::H4) => "p3_blowup_h4",
            RecipeKind::P3SuperLambda => "p3_super_lambda",
            RecipeKind::SuperlinearWellInterior => "superlinear_well_interior",
            RecipeKind::SuperlinearBlowup(SuperCase::A1) => "superlinear_blowup_a1",
            RecipeKind::SuperlinearBlowup(SuperCase::A2) => "superlinear_blowup_a2",
            RecipeKind::SuperlinearBlowup(SuperCase::A3) => "superlinear_blowup_a3",
            RecipeKind::SuperlinearBlowup(SuperCase::A4) => "superlinear_blowup_a4",
            RecipeKind::SuperlinearBlowup(SuperCase::B1) => "superlinear_blowup_b1",
            RecipeKind::SuperlinearBlowup(SuperCase::B2) => "superlinear_blowup_b2",
            RecipeKind::Scaled => "scaled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Whether the recipe needs `∫u₀u₁ > 0`.
    pub fn needs_overlap(&self) -> bool {
        matches!(
            self,
            RecipeKind::P3Blowup(P3Case::H2)
                | RecipeKind::P3Blowup(P3Case::H4)
                | RecipeKind::SuperlinearBlowup(SuperCase::A2)
                | RecipeKind::SuperlinearBlowup(SuperCase::A3)
                | RecipeKind::SuperlinearBlowup(SuperCase::A4)
                | RecipeKind::SuperlinearBlowup(SuperCase::B2)
        )
    }
}

#[derive(Clone, Debug)]
pub struct SeedRecipe<T: Real = f64> {
    pub kind: RecipeKind,
    /// `(v₀, v₁)`; generated from `rng_seed` when absent.
    pub base: Option<(Field<T>, Field<T>)>,
    pub params: Params<T>,
    /// Relative distance kept inside strict inequalities.
    pub margin: T,
    /// Largest relative size of the random smooth perturbation of the base shape.
    pub perturbation: T,
    pub rng_seed: u64,
    /// `(k, m)` for [`RecipeKind::Scaled`].
    pub scale: Option<(T, T)>,
}

impl<T: Real> SeedRecipe<T> {
    pub fn new(kind: RecipeKind, params: Params<T>) -> Self {
        SeedRecipe {
            kind,
            base: None,
            params,
            margin: T::lit(0.1),
            perturbation: T::lit(0.25),
            rng_seed: 0,
            scale: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_scale(mut self, k: T, m: T) -> Self {
        self.scale = Some((k, m));
        self
    }

    pub fn with_base(mut self, v0: Field<T>, v1: Field<T>) -> Self {
        self.base = Some((v0, v1));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
    /// Equal within the check's tolerance.
    Approx,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
            Relation::Approx => "~=",
        }
    }
}

/// One evaluated inequality `lhs (relation) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check<T: Real = f64> {
    pub name: &'static str,
    pub lhs: T,
    pub rhs: T,
    pub relation: Relation,
    pub tol: T,
    pub holds: bool,
}

impl<T: Real> Check<T> {
    fn new(name: &'static str, lhs: T, relation: Relation, rhs: T) -> Self {
        Self::with_tol(name, lhs, relation, rhs, T::zero())
    }

    fn with_tol(name: &'static str, lhs: T, relation: Relation, rhs: T, tol: T) -> Self {
        let holds = match relation {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Approx => (lhs - rhs).abs() <= tol,
        };
        Check {
            name,
            lhs,
            rhs,
            relation,
            tol,
            holds,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<T: Real = f64> {
    pub e0: T,
    pub j_u0: T,
    pub i_u0: T,
    /// `‖u₀‖₂²`
    pub m_u0: T,
    pub grad_norm_u0: T,
    /// `∫u₀u₁`
    pub overlap: T,
    pub checks: Vec<Check<T>>,
    /// `E(0)` assembled from the recipe's polynomial in `k`.
    pub e0_formula: Option<T>,
    /// Recipe-specific quantities (e.g. the largest admissible `a`).
    pub extras: Vec<(&'static str, T)>,
}

impl<T: Real> Certificate<T> {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

#[derive(Clone, Debug)]
pub struct SeedResult<T: Real = f64> {
    pub kind: RecipeKind,
    pub u0: Field<T>,
    pub u1: Field<T>,
    pub k: T,
    pub m: T,
    /// Shape `v₀` with `u₀ = k v₀`.
    pub v0: Field<T>,
    pub certificate: Certificate<T>,
}

/// `(μ₀, μ₁) = (‖v‖₄⁴ − a‖∇v‖₂⁴, b‖∇v‖₂² − λ‖v‖₂²)`.
pub fn p3_coefficients<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> (T, T) {
    (n.l4 - params.a * n.g2 * n.g2, params.b * n.g2 - params.lambda * n.m2)
}

/// `(A, B, C)` with `J(kv) = −A k^{p+1} + B k⁴ + C k²`.
pub fn power_coefficients<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> (T, T, T) {
    let two = T::lit(2.0);
    (
        n.lp1 / (params.p + T::one()),
        params.a / T::lit(4.0) * n.g2 * n.g2,
        (params.b * n.g2 - params.lambda * n.m2) / two,
    )
}

/// `φ(k) = (a k²/4)‖∇v‖₂⁴ − k^{p−1}‖v‖_{p+1}^{p+1}/(p+1) + (b‖∇v‖₂² − λ‖v‖₂²)/2`, so `J(kv) = k²φ(k)`.
pub fn sublinear_phi<T: Real>(params: &Params<T>, n: &NormBundle<T>, k: T) -> T {
    let one = T::one();
    let p = params.p;
    params.a * k * k / T::lit(4.0) * n.g2 * n.g2 - k.powf(p - one) / (p + one) * n.lp1
        + (params.b * n.g2 - params.lambda * n.m2) / T::lit(2.0)
}

/// Minimizer `k₀ = [2(p−1)‖v‖_{p+1}^{p+1} / (a(p+1)‖∇v‖₂⁴)]^{1/(3−p)}` of [`sublinear_phi`].
pub fn sublinear_k0<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> T {
    let one = T::one();
    let p = params.p;
    (T::lit(2.0) * (p - one) * n.lp1 / (params.a * (p + one) * n.g2 * n.g2)).powf(one / (T::lit(3.0) - p))
}

/// Right-hand side of the smallness condition on `‖∇v‖₂²/‖v‖_{p+1}²` for `1 < p < 3`.
pub fn sublinear_ratio_bound<T: Real>(params: &Params<T>, c1: T) -> T {
    let one = T::one();
    let p = params.p;
    let x = (T::lit(3.0) - p) / (c1 * (p + one));
    let y = (T::lit(2.0) * p - T::lit(2.0)) / (params.a * (p + one));
    x.powf((T::lit(3.0) - p) / (p + one)) * y.powf((p - one) / (p + one))
}

/// Closed form of the largest `a` with `ratio < bound(a)`.
pub fn sublinear_a_max_closed<T: Real>(p: T, c1: T, ratio: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    two * (p - one) / (p + one)
        * ((three - p) / (c1 * (p + one))).powf((three - p) / (p - one))
        * ratio.powf(-(p + one) / (p - one))
}

/// Largest `a` with `ratio < bound(a)`, found by bisection on `a`.
pub fn sublinear_a_max<T: Real>(params: &Params<T>, c1: T, ratio: T) -> Option<T> {
    let f = |a: T| ratio - sublinear_ratio_bound(&params.with_a(a), c1);
    let mut hi = params.a.max(T::lit(1e-300));
    let mut guard = 0;
    while f(hi) < T::zero() {
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 2000 {
            return None;
        }
    }
    let mut lo = hi;
    guard = 0;
    while f(lo) >= T::zero() {
        lo = lo / T::lit(2.0);
        guard += 1;
        if guard > 2000 {
            return None;
        }
    }
    bisect(f, lo, hi, T::epsilon() * T::lit(4.0))
}

/// `p = 3` `h3` window `(K, 2μ₁/μ₀)` for `k²`, if `μ₁² ≥ 4μ₀d₃`.
pub fn h3_window<T: Real>(mu0: T, mu1: T, d3: T) -> Option<(T, T)> {
    let disc = mu1 * mu1 - T::lit(4.0) * mu0 * d3;
    if !(mu0 > T::zero()) || disc < T::zero() {
        return None;
    }
    Some(((mu1 + disc.sqrt()) / mu0, T::lit(2.0) * mu1 / mu0))
}

/// Smallest `k̄² = (μ₁ + √(μ₁² + 2μ₀))/μ₀` with `μ₀k⁴ − 2μ₁k² = 2`.
pub fn h2_k_sq<T: Real>(mu0: T, mu1: T) -> T {
    (mu1 + (mu1 * mu1 + T::lit(2.0) * mu0).sqrt()) / mu0
}

fn hyp<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Hypothesis(msg.into()))
}

fn l2_normalized<T: Real>(disc: &Discretization<T>, v: &[T]) -> Result<Vec<T>> {
    let s = disc.inner(v, v).sqrt();
    if !(s > T::zero()) {
        return Err(Error::InvalidParams("base field v₁ is zero".into()));
    }
    Ok(v.iter().map(|&x| x / s).collect())
}

struct Bases<T: Real> {
    w: Vec<T>,
    v1: Vec<T>,
    provided: bool,
}

fn bases<T: Real>(
    recipe: &SeedRecipe<T>,
    disc: &Discretization<T>,
    shape: &Field<T>,
    rng: &mut ChaCha8Rng,
) -> Result<Bases<T>> {
    if let Some((v0, v1)) = &recipe.base {
        disc.check(v0)?;
        disc.check(v1)?;
        if v0.is_zero() {
            return Err(Error::InvalidParams("base field v₀ is zero".into()));
        }
        let v1 = if recipe.kind.needs_overlap() && disc.inner(v0.values(), v1.values()) <= T::zero() {
            return hyp("supplied v₁ violates ∫v₀v₁ > 0");
        } else {
            l2_normalized(disc, v1.values())?
        };
        return Ok(Bases {
            w: v0.values().to_vec(),
            v1,
            provided: true,
        });
    }
    let sampler = DirectionSampler::new(disc);
    let w = sampler.perturbed(shape.values(), recipe.perturbation.as_f64(), rng);
    let v1 = if recipe.kind.needs_overlap() {
        l2_normalized(disc, &w)?
    } else {
        l2_normalized(disc, &sampler.smooth(rng))?
    };
    Ok(Bases { w, v1, provided: false })
}

fn sp1_entry<'a, T: Real>(constants: &'a Constants<T>, p: T) -> Result<&'a Field<T>> {
    constants
        .sobolev
        .entry(p + T::one())
        .map(|e| &e.minimizer)
        .ok_or_else(|| Error::InvalidParams(format!("S_q for q = {} not computed", p + T::one())))
}

/// Builds initial data for a recipe and certifies its inequalities.
pub fn seed<T: Real>(
    recipe: &SeedRecipe<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
) -> Result<SeedResult<T>> {
    let params = &recipe.params;
    params.validate()?;
    disc.check(constants.psi1())?;
    if !(recipe.margin > T::zero() && recipe.margin < T::one()) {
        return Err(Error::InvalidParams("margin must lie in (0, 1)".into()));
    }
    if !(recipe.perturbation >= T::zero()) {
        return Err(Error::InvalidParams("perturbation must be non-negative".into()));
    }
    check_regime(recipe.kind, params, disc, constants, depths)?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.rng_seed);
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let grow = one + recipe.margin;
    let shrink = one - recipe.margin;
    let lambda1 = constants.lambda1();
    let coeffs = effective_coeffs(params, lambda1);
    let p = params.p;
    let mut extras: Vec<(&'static str, T)> = Vec::new();
    let mut e0_formula = None;

    let (v0, v1, k, m) = match recipe.kind {
        RecipeKind::SublinearNegE => {
            let b = bases(recipe, disc, sp1_entry(constants, p)?, &mut rng)?;
            let v0 = b.w;
            let n = disc.norms_unchecked(&v0, p);
            let ratio = n.g2 / n.lp1.powf(two / (p + one));
            let bound = sublinear_ratio_bound(params, coeffs.c1);
            let a_max = sublinear_a_max(params, coeffs.c1, ratio);
            if let Some(a) = a_max {
                extras.push(("a_max", a));
            }
            extras.push(("a_max_closed_form", sublinear_a_max_closed(p, coeffs.c1, ratio)));
            extras.push(("ratio", ratio));
            extras.push(("ratio_bound", bound));
            if !(ratio < bound) {
                return hyp(format!(
                    "‖∇v₀‖₂²/‖v₀‖²_{{p+1}} = {ratio} ≥ {bound}: the smallness condition on a fails; largest admissible a ≈ {}",
                    a_max.map(|a| a.to_string()).unwrap_or_else(|| "n/a".into())
                ));
            }
            let k0 = sublinear_k0(params, &n);
            let j = k0 * k0 * sublinear_phi(params, &n, k0);
            if !(j < T::zero()) {
                return hyp(format!("J(k₀v₀) = {j} is not negative"));
            }
            (v0, b.v1, k0, shrink * (-j).sqrt())
        }
        RecipeKind::P3WellInterior | RecipeKind::SuperlinearWellInterior => {
            let b = bases(recipe, disc, constants.psi1(), &mut rng)?;
            let mut v0 = b.w;
            normalize_grad(disc, &mut v0);
            let d = depths.active_depth(params, lambda1).expect("checked");
            let r = active_radii(params, constants, Some(d));
            let rhat = if params.growth() == Growth::Critical {
                r.rhat3.value()
            } else {
                r.rhatp.value()
            };
            let rhat = match rhat {
                Some(x) if x > T::zero() => x,
                _ => return hyp("r̂ is unavailable for these parameters"),
            };
            extras.push(("rhat", rhat));
            let k = shrink * rhat;
            let n = disc.norms_unchecked(&v0, p).scaled(k, p);
            let j = evaluate_j(params, &n);
            let room = d - j;
            if !(room > T::zero()) {
                return hyp(format!("J(u₀) = {j} ≥ d = {d}"));
            }
            (v0, b.v1, k, (shrink * room).sqrt())
        }
        RecipeKind::P3Blowup(case) => {
            let b = bases(recipe, disc, constants.phi_lambda(), &mut rng)?;
            // move the shape into N₃⁻ along its ray
            let nw = disc.norms_unchecked(&b.w, p);
            let tau = if evaluate_i(params, &nw) <= T::zero() && b.provided {
                one
            } else {
                let fm = fiber_map(params, &nw, T::lit(1e-14));
                match (fm.regime, fm.sigma.value()) {
                    (FiberRegime::SBranch, Some(s)) => grow * s,
                    _ => return hyp("base shape is not in S, so its ray never enters N₃⁻ (no witness for N₃ ∪ N₃⁻)"),
                }
            };
            let v0: Vec<T> = b.w.iter().map(|&x| tau * x).collect();
            let n = disc.norms_unchecked(&v0, p);
            let (mu0, mu1) = p3_coefficients(params, &n);
            extras.push(("mu0", mu0));
            extras.push(("mu1", mu1));
            if !(mu0 > T::zero()) {
                return hyp("μ₀ ≤ 0 for the witness");
            }
            let kbar_sq = h2_k_sq(mu0, mu1);
            let (k, m) = match case {
                P3Case::H1 => (grow * kbar_sq.sqrt(), one),
                P3Case::H2 => (kbar_sq.sqrt(), one),
                P3Case::H3 | P3Case::H4 => {
                    let d3 = depths.d3_value().expect("checked");
                    let (big_k, upper) = match h3_window(mu0, mu1, d3) {
                        Some(w) => w,
                        None => return hyp("μ₁² < 4μ₀d₃ for this witness"),
                    };
                    extras.push(("K", big_k));
                    extras.push(("k_sq_upper", upper));
                    if case == P3Case::H3 {
                        let mut k_sq = grow * big_k;
                        if !(k_sq < upper) {
                            k_sq = (big_k + upper) / two;
                        }
                        let j = -mu0 / four * k_sq * k_sq + mu1 / two * k_sq;
                        (k_sq.sqrt(), (shrink * (d3 - j)).sqrt())
                    } else {
                        let v_0 = n.m2;
                        let k0_sq = grow * big_k.max(four * d3 / (coeffs.b0 * lambda1 * v_0));
                        let base = mu0 / two * k0_sq * k0_sq - mu1 * k0_sq;
                        let lo = base + two * d3;
                        let hi = base + coeffs.b0 * lambda1 * v_0 * k0_sq / two;
                        extras.push(("m_sq_lower", lo));
                        extras.push(("m_sq_upper", hi));
                        if !(lo > T::zero() && hi > lo) {
                            return hyp("empty m² window");
                        }
                        (k0_sq.sqrt(), (lo + shrink * (hi - lo)).sqrt())
                    }
                }
            };
            let k_sq = k * k;
            e0_formula = Some(m * m / two - mu0 / four * k_sq * k_sq + mu1 / two * k_sq);
            (v0, b.v1, k, m)
        }
        RecipeKind::P3SuperLambda => {
            let d3m = depths.d3_minus.value().expect("checked");
            let shape = constants.phi_lambda();
            let mut found = None;
            let mut eps = recipe.perturbation;
            for attempt in 0..12 {
                let r = SeedRecipe {
                    perturbation: if attempt == 11 { T::zero() } else { eps },
                    ..recipe.clone()
                };
                let b = bases(&r, disc, shape, &mut rng)?;
                let nw = disc.norms_unchecked(&b.w, p);
                let (mu0, mu1) = p3_coefficients(params, &nw);
                if mu0 > T::zero() && mu1 > T::zero() {
                    found = Some((b, mu0, mu1));
                    break;
                }
                if b.provided {
                    break;
                }
                eps = eps / two;
            }
            let (b, mu0, mu1) = match found {
                Some(f) => f,
                None => {
                    return hyp(format!(
                        "no witness in S ∩ L⁺ found near φ_Λ (so L⁺ ∩ N₃ is not exhibited); sufficient condition a < 1/Ã with Ã ≈ Λ = {}",
                        constants.lambda_big()
                    ))
                }
            };
            let sigma = (mu1 / mu0).sqrt();
            let v0: Vec<T> = b.w.iter().map(|&x| sigma * x).collect();
            let n = disc.norms_unchecked(&v0, p);
            let (s0, _) = p3_coefficients(params, &n);
            extras.push(("s0", s0));
            let k_sq = grow * (one + (one - four * d3m / s0).sqrt());
            let j = -(k_sq * k_sq - two * k_sq) * s0 / four;
            if !(j < d3m) {
                return hyp(format!("J(u₀) = {j} ≥ d₃⁻ = {d3m}"));
            }
            (v0, b.v1, k_sq.sqrt(), (shrink * (d3m - j)).sqrt())
        }
        RecipeKind::SuperlinearBlowup(case) => {
            let b = bases(recipe, disc, sp1_entry(constants, p)?, &mut rng)?;
            let mut v0 = b.w;
            normalize_grad(disc, &mut v0);
            let n = disc.norms_unchecked(&v0, p);
            let (ca, cb, cc) = power_coefficients(params, &n);
            let phi = move |k: T| -ca * k.powf(p + one) + cb * k.powi(4) + cc * k * k;
            let half = T::lit(0.5);
            let cross = |target: T| {
                largest_crossing(phi, target, one).ok_or_else(|| Error::Hypothesis("φ(k) has no crossing".into()))
            };
            let (k, m) = match case {
                SuperCase::A1 => (grow * cross(-half)?, one),
                SuperCase::A2 => (cross(-half)?, one),
                SuperCase::A3 => {
                    let dp = depths.dp_value().expect("checked");
                    let big_rp = active_radii(params, constants, Some(dp))
                        .big_rp
                        .value()
                        .ok_or_else(|| Error::Hypothesis("R_p unavailable".into()))?;
                    let khat = largest_crossing(phi, dp, one).unwrap_or(T::zero());
                    let kk = big_rp / n.g2.sqrt();
                    extras.push(("k_hat", khat));
                    extras.push(("K", kk));
                    let k = grow * khat.max(kk);
                    let j = phi(k);
                    let lo = (-two * j).max(T::zero());
                    let hi = two * dp - two * j;
                    (k, ((lo + hi) / two).sqrt())
                }
                SuperCase::A4 => {
                    let dd = (p - T::lit(3.0)) * params.a * lambda1 * lambda1 * n.m2 * n.m2 / (four * (p + one));
                    extras.push(("D", dd));
                    let k4 = grow * largest_crossing(|k| phi(k) - dd * k.powi(4), T::zero(), one)
                        .ok_or_else(|| Error::Hypothesis("J(kv₀) < Dk⁴ never holds".into()))?;
                    let j = phi(k4);
                    let lo = (-two * j).max(T::zero());
                    let hi = two * dd * k4.powi(4) - two * j;
                    (k4, ((lo + hi) / two).sqrt())
                }
                SuperCase::B1 | SuperCase::B2 => {
                    let (h0, gate) = blowup_threshold_h0(params, lambda1)?;
                    extras.push(("h0", h0));
                    let kk = cross(-half + gate)?;
                    if case == SuperCase::B1 {
                        (grow * kk, one)
                    } else {
                        (kk, one)
                    }
                }
            };
            e0_formula = Some(m * m / two + phi(k));
            (v0, b.v1, k, m)
        }
        RecipeKind::Scaled => {
            let (k, m) = recipe
                .scale
                .ok_or_else(|| Error::InvalidParams("the scaled recipe needs k and m".into()))?;
            let b = bases(recipe, disc, constants.psi1(), &mut rng)?;
            let mut v0 = b.w;
            normalize_grad(disc, &mut v0);
            (v0, b.v1, k, m)
        }
    };

    if !(k.is_finite() && m.is_finite() && k > T::zero() && m >= T::zero()) {
        return hyp(format!("recipe produced k = {k}, m = {m}"));
    }
    let u0 = disc.field(v0.iter().map(|&x| k * x).collect())?;
    let u1 = disc.field(v1.iter().map(|&x| m * x).collect())?;
    let mut certificate = certify(recipe.kind, params, disc, constants, depths, &u0, &u1)?;
    certificate.e0_formula = e0_formula;
    certificate.extras = extras;
    if !certificate.all_hold() {
        let failed: Vec<String> = certificate
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{}: {} {} {}", c.name, c.lhs, c.relation.symbol(), c.rhs))
            .collect();
        return hyp(format!("certificate failed: {}", failed.join("; ")));
    }
    Ok(SeedResult {
        kind: recipe.kind,
        u0,
        u1,
        k,
        m,
        v0: disc.field(v0)?,
        certificate,
    })
}

/// Rejects parameters outside the recipe's regime, naming the failed inequality.
pub fn check_regime<T: Real>(
    kind: RecipeKind,
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
) -> Result<()> {
    let lambda1 = constants.lambda1();
    let bl1 = params.b * lambda1;
    let al = params.a * constants.lambda_big();
    let growth = params.growth();
    let name = kind.name();
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { hyp(format!("{name}: requires {what}")) };
    match kind {
        RecipeKind::SublinearNegE => {
            need(growth == Growth::Sublinear, "1 < p < 3")?;
            need(params.lambda < bl1, "λ < bλ₁")?;
        }
        RecipeKind::P3WellInterior | RecipeKind::P3Blowup(_) => {
            need(growth == Growth::Critical, "p = 3")?;
            need(al < T::one(), "0 < a < 1/Λ")?;
            need(params.lambda < bl1, "λ < bλ₁")?;
            if matches!(
                kind,
                RecipeKind::P3WellInterior | RecipeKind::P3Blowup(P3Case::H3) | RecipeKind::P3Blowup(P3Case::H4)
            ) {
                need(depths.d3_value().is_some(), "an estimate of d₃")?;
            }
        }
        RecipeKind::P3SuperLambda => {
            need(growth == Growth::Critical, "p = 3")?;
            need(al < T::one(), "0 < a < 1/Λ")?;
            need(params.lambda > bl1, "λ > bλ₁")?;
            let c = psi1_condition(params, disc, constants);
            need(c < T::zero(), "‖ψ₁‖₄⁴ − a‖∇ψ₁‖₂⁴ < 0")?;
            match depths.delta_estimate.value() {
                Some(delta) => need(params.lambda - bl1 < delta, "λ − bλ₁ < δ")?,
                None => need(false, "an estimate of δ")?,
            }
            need(depths.d3_minus.value().is_some(), "an estimate of d₃⁻")?;
        }
        RecipeKind::SuperlinearWellInterior => {
            need(growth == Growth::Superlinear && params.p < T::lit(5.0), "3 < p < 5")?;
            need(params.lambda <= bl1, "λ ≤ bλ₁")?;
            need(depths.dp_value().is_some(), "an estimate of d_p")?;
        }
        RecipeKind::SuperlinearBlowup(case) => {
            need(growth == Growth::Superlinear, "p > 3")?;
            match case {
                SuperCase::B1 | SuperCase::B2 => need(params.lambda > bl1, "λ > bλ₁")?,
                _ => need(params.lambda <= bl1, "λ ≤ bλ₁")?,
            }
            if case == SuperCase::A3 {
                need(params.p < T::lit(5.0), "3 < p < 5")?;
                need(depths.dp_value().is_some(), "an estimate of d_p")?;
            }
        }
        RecipeKind::Scaled => {}
    }
    Ok(())
}

/// Relative tolerance of the equality checks (`E(0) = 0`, `E(0) = −h₀/(2p+2)`).
const EQUALITY_TOL: f64 = 1e-10;

/// Evaluates the recipe's inequalities on `(u₀, u₁)` from scratch.
pub fn certify<T: Real>(
    kind: RecipeKind,
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
    u0: &Field<T>,
    u1: &Field<T>,
) -> Result<Certificate<T>> {
    let n = disc.norms(u0, params.p)?;
    disc.check(u1)?;
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let p = params.p;
    let lambda1 = constants.lambda1();
    let coeffs = effective_coeffs(params, lambda1);
    let kinetic = disc.inner(u1.values(), u1.values());
    let j = evaluate_j(params, &n);
    let e0 = kinetic / two + j;
    let i = evaluate_i(params, &n);
    let overlap = disc.inner(u0.values(), u1.values());
    let grad = n.g2.sqrt();
    // scale of the terms that cancel in E(0)
    let e_scale = kinetic / two + params.a / four * n.g2 * n.g2 + params.b / two * n.g2
        + (params.lambda * n.m2).abs() / two
        + n.lp1 / (p + one);
    let eq_tol = T::lit(EQUALITY_TOL) * e_scale.max(one);
    let depth = |d: Option<T>| d.ok_or_else(|| Error::Hypothesis("depth unavailable".into()));
    let mut checks = Vec::new();
    let mut push = |c: Check<T>| checks.push(c);
    match kind {
        RecipeKind::SublinearNegE => {
            let ratio = n.g2 / n.lp1.powf(two / (p + one));
            push(Check::new("ratio_condition", ratio, Relation::Lt, sublinear_ratio_bound(params, coeffs.c1)));
            push(Check::new("E0_negative", e0, Relation::Lt, T::zero()));
            push(Check::new("grad_u0_positive", grad, Relation::Gt, T::zero()));
        }
        RecipeKind::P3WellInterior | RecipeKind::SuperlinearWellInterior => {
            let d = depth(depths.active_depth(params, lambda1))?;
            let r = active_radii(params, constants, Some(d));
            let rhat = if kind == RecipeKind::P3WellInterior {
                r.rhat3.value()
            } else {
                r.rhatp.value()
            };
            push(Check::new("grad_u0_positive", grad, Relation::Gt, T::zero()));
            push(Check::new("grad_u0_below_rhat", grad, Relation::Le, rhat.unwrap_or(T::nan())));
            push(Check::new("I_u0_positive", i, Relation::Gt, T::zero()));
            push(Check::new("J_u0_below_depth", j, Relation::Lt, d));
            push(Check::new("E0_below_depth", e0, Relation::Lt, d));
        }
        RecipeKind::P3Blowup(case) => match case {
            P3Case::H1 => push(Check::new("E0_negative", e0, Relation::Lt, T::zero())),
            P3Case::H2 => {
                push(Check::with_tol("E0_zero", e0, Relation::Approx, T::zero(), eq_tol));
                push(Check::new("overlap_positive", overlap, Relation::Gt, T::zero()));
            }
            P3Case::H3 => {
                let d3 = depth(depths.d3_value())?;
                push(Check::new("E0_positive", e0, Relation::Gt, T::zero()));
                push(Check::new("E0_below_d3", e0, Relation::Lt, d3));
                push(Check::new("I_u0_negative", i, Relation::Lt, T::zero()));
                push(Check::new("J_u0_below_d3", j, Relation::Lt, d3));
            }
            P3Case::H4 => {
                let d3 = depth(depths.d3_value())?;
                push(Check::new("E0_at_least_d3", e0, Relation::Ge, d3));
                push(Check::new("overlap_positive", overlap, Relation::Gt, T::zero()));
                push(Check::new("mass_condition", n.m2, Relation::Gt, four * e0 / (coeffs.b0 * lambda1)));
            }
        },
        RecipeKind::P3SuperLambda => {
            let d = depth(depths.d3_minus.value())?;
            push(Check::new("I_u0_negative", i, Relation::Lt, T::zero()));
            push(Check::new("J_u0_below_d3_minus", j, Relation::Lt, d));
            push(Check::new("E0_below_d3_minus", e0, Relation::Lt, d));
        }
        RecipeKind::SuperlinearBlowup(case) => match case {
            SuperCase::A1 => push(Check::new("E0_negative", e0, Relation::Lt, T::zero())),
            SuperCase::A2 => {
                push(Check::with_tol("E0_zero", e0, Relation::Approx, T::zero(), eq_tol));
                push(Check::new("overlap_positive", overlap, Relation::Gt, T::zero()));
            }
            SuperCase::A3 => {
                let dp = depth(depths.dp_value())?;
                push(Check::new("E0_positive", e0, Relation::Gt, T::zero()));
                push(Check::new("E0_below_dp", e0, Relation::Lt, dp));
                push(Check::new("overlap_positive", overlap, Relation::Gt, T::zero()));
                push(Check::new("I_u0_negative", i, Relation::Lt, T::zero()));
                push(Check::new("J_u0_below_dp", j, Relation::Lt, dp));
            }
            SuperCase::A4 => {
                let rhs = four * (p + one) * e0 / ((p - T::lit(3.0)) * params.a * lambda1 * lambda1);
                push(Check::new("E0_positive", e0, Relation::Gt, T::zero()));
                push(Check::new("overlap_positive", overlap, Relation::Gt, T::zero()));
                push(Check::new("mass_condition", n.m2 * n.m2, Relation::Gt, rhs));
            }
            SuperCase::B1 => {
                let (_, gate) = blowup_threshold_h0(params, lambda1)?;
                push(Check::new("E0_below_gate", e0, Relation::Lt, gate));
            }
            SuperCase::B2 => {
                let (_, gate) = blowup_threshold_h0(params, lambda1)?;
                push(Check::with_tol("E0_at_gate", e0, Relation::Approx, gate, eq_tol));
                push(Check::new("overlap_positive", overlap, Relation::Gt, T::zero()));
            }
        },
        RecipeKind::Scaled => {
            push(Check::new("grad_u0_positive", grad, Relation::Gt, T::zero()));
        }
    }
    Ok(Certificate {
        e0,
        j_u0: j,
        i_u0: i,
        m_u0: n.m2,
        grad_norm_u0: grad,
        overlap,
        checks,
        e0_formula: None,
        extras: Vec::new(),
    })
}

/// Re-evaluates every certificate inequality of `result`; `false` on any failure.
pub fn verify_certificate<T: Real>(
    result: &SeedResult<T>,
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
) -> bool {
    match certify(result.kind, params, disc, constants, depths, &result.u0, &result.u1) {
        Ok(c) => !c.checks.is_empty() && c.all_hold(),
        Err(_) => false,
    }
}
