use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::rays::{normalize_grad, polish, ray_value, sphere_descent, DirectionSampler, RayBranch};
use super::sobolev::Constants;
use crate::discretization::{Discretization, Field};
use crate::error::{Error, Result};
use crate::functionals::{effective_coeffs, Derived, Growth, Params};
use crate::real::{abs_pow, Real};

/// Iteration budget of the local descent that follows ray sampling.
pub const POLISH_ITERATIONS: usize = 500;

/// A depth estimate with the bounds the theory places around it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthEstimate<T: Real = f64> {
    /// Polished estimate (an upper bound on the infimum).
    pub value: T,
    /// Best raw ray sample before polishing.
    pub sample_min: T,
    pub lower: T,
    pub upper: Option<T>,
    /// Whether `value` lies within `[lower, upper]` up to rounding.
    pub in_bracket: bool,
}

/// Well depths of the active regime.
#[derive(Clone, Debug)]
pub struct WellDepths<T: Real = f64> {
    pub d3: Derived<DepthEstimate<T>>,
    pub dp: Derived<DepthEstimate<T>>,
    pub d3_plus: Derived<T>,
    pub d3_minus: Derived<T>,
    pub delta_estimate: Derived<T>,
    pub n_ray_samples: usize,
    /// Direction (∇-normalized) attaining the reported depth.
    pub minimizer: Option<Field<T>>,
}

impl<T: Real> WellDepths<T> {
    pub fn empty(reason: &str) -> Self {
        WellDepths {
            d3: Derived::absent(reason),
            dp: Derived::absent(reason),
            d3_plus: Derived::absent(reason),
            d3_minus: Derived::absent(reason),
            delta_estimate: Derived::absent(reason),
            n_ray_samples: 0,
            minimizer: None,
        }
    }

    /// The depth `d` the well sets of this regime are cut at.
    pub fn active_depth(&self, params: &Params<T>, lambda1: T) -> Option<T> {
        match params.growth() {
            Growth::Critical if params.lambda > params.b * lambda1 => self.d3_minus.value(),
            Growth::Critical => self.d3.value().map(|d| d.value),
            Growth::Superlinear => self.dp.value().map(|d| d.value),
            Growth::Sublinear => None,
        }
    }

    pub fn d3_value(&self) -> Option<T> {
        self.d3.value().map(|d| d.value)
    }

    pub fn dp_value(&self) -> Option<T> {
        self.dp.value().map(|d| d.value)
    }
}

/// Relative slack granted to bracket membership for rounding.
const BRACKET_ROUNDING: f64 = 1e-9;

fn sample_directions<T: Real>(disc: &Discretization<T>, n: usize, seed: u64) -> Vec<Vec<T>> {
    let sampler = DirectionSampler::new(disc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sampler.direction(&mut rng)).collect()
}

/// Evaluates rays concurrently; the minimum is reduced in sample order.
fn best_ray<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    dirs: &[Vec<T>],
    branch: RayBranch,
) -> Option<(usize, T)> {
    let values: Vec<Option<T>> = dirs
        .par_iter()
        .map(|u| ray_value(params, disc, u, branch).map(|(v, _)| v))
        .collect();
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best
}

/// Estimates `d₃` (p = 3) or `d_p` (p > 3) by ray sampling plus polishing.
pub fn estimate_well_depth<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    n_rays: usize,
    seed: u64,
) -> Result<WellDepths<T>> {
    disc.check(constants.psi1())?;
    let lambda1 = constants.lambda1();
    let big_l = constants.lambda_big();
    let coeffs = effective_coeffs(params, lambda1);
    let mut out = WellDepths::empty("not computed");
    let one = T::one();
    let four = T::lit(4.0);
    match params.growth() {
        Growth::Critical => {
            out.dp = Derived::absent("not the p > 3 case");
            if !(params.a * big_l < one) {
                out.d3 = Derived::absent("outside 0 < a < 1/Λ regime");
                return Ok(out);
            }
            if !(params.lambda < params.b * lambda1) {
                out.d3 = Derived::absent("requires λ < bλ₁");
                return Ok(out);
            }
        }
        Growth::Superlinear => {
            out.d3 = Derived::absent("not the p = 3 case");
            if params.lambda > params.b * lambda1 {
                out.dp = Derived::absent("requires λ ≤ bλ₁");
                return Ok(out);
            }
        }
        Growth::Sublinear => {
            out.d3 = Derived::absent("not the p = 3 case");
            out.dp = Derived::absent("not the p > 3 case");
            return Ok(out);
        }
    }
    let mut dirs = vec![constants.psi1().values().to_vec(), constants.phi_lambda().values().to_vec()];
    for d in dirs.iter_mut() {
        normalize_grad(disc, d);
    }
    dirs.extend(sample_directions(disc, n_rays, seed));
    out.n_ray_samples = dirs.len();
    let (idx, sample_min) = match best_ray(params, disc, &dirs, RayBranch::Sup) {
        Some(b) => b,
        None => {
            let why = "no sampled ray crosses the Nehari set";
            out.d3 = Derived::absent(why);
            out.dp = Derived::absent(why);
            return Ok(out);
        }
    };
    let (u, polished) = polish(params, disc, &dirs[idx], RayBranch::Sup, POLISH_ITERATIONS);
    let value = if polished < sample_min { polished } else { sample_min };
    let u = if polished < sample_min { u } else { dirs[idx].clone() };
    let slack = T::lit(BRACKET_ROUNDING);
    match params.growth() {
        Growth::Critical => {
            let denom = four * (one - params.a * big_l);
            let lower = big_l * coeffs.b0 * coeffs.b0 / denom;
            let upper = big_l * coeffs.c1 * coeffs.c1 / denom;
            let in_bracket = value >= lower * (one - slack) && value <= upper * (one + slack);
            out.d3 = Derived::Value(DepthEstimate {
                value,
                sample_min,
                lower,
                upper: Some(upper),
                in_bracket,
            });
        }
        _ => {
            let p = params.p;
            let sp1 = constants
                .sp1(p)
                .ok_or_else(|| Error::InvalidParams(format!("S_(p+1) not tabulated for p = {p}")))?;
            let two = T::lit(2.0);
            let rhop = (sp1.powf((p + one) / two) * params.a).powf(one / (p - T::lit(3.0)));
            let lower = (T::lit(0.25) - one / (p + one)) * params.a * abs_pow(rhop, four);
            out.dp = Derived::Value(DepthEstimate {
                value,
                sample_min,
                lower,
                upper: None,
                in_bracket: value >= lower * (one - slack),
            });
        }
    }
    out.minimizer = Some(disc.wrap(u));
    Ok(out)
}

/// Signed depths `d₃⁺ = inf J on N₃∩L⁺` and `d₃⁻ = inf J on N₃∩L⁻`.
#[derive(Clone, Debug)]
pub struct SignedDepths<T: Real = f64> {
    pub d3_plus: Derived<T>,
    pub d3_minus: Derived<T>,
    pub n_plus: usize,
    pub n_minus: usize,
    /// Largest `‖∇(σ_u u)‖₂` among accepted `L⁻` samples.
    pub lminus_radius: T,
    /// Whether that radius hit the sampler's bounding box.
    pub saturated: bool,
    pub minus_minimizer: Option<Field<T>>,
}

/// Radius cap of the `N₃∩L⁻` sampler, in units of `1/√(a)`.
const LMINUS_BOX: f64 = 1e6;

/// Condition `‖ψ₁‖₄⁴ − a‖∇ψ₁‖₂⁴ < 0` for the normalized eigenfunction.
pub fn psi1_condition<T: Real>(params: &Params<T>, disc: &Discretization<T>, constants: &Constants<T>) -> T {
    let n = disc.norms_unchecked(constants.psi1().values(), params.p);
    n.l4 - params.a * n.g2 * n.g2
}

pub fn estimate_signed_depths<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    n_rays: usize,
    seed: u64,
) -> Result<SignedDepths<T>> {
    disc.check(constants.psi1())?;
    let lambda1 = constants.lambda1();
    if params.growth() != Growth::Critical {
        return Err(Error::Hypothesis("signed depths require p = 3".into()));
    }
    if !(params.lambda > params.b * lambda1) {
        return Err(Error::Hypothesis("signed depths require λ > bλ₁".into()));
    }
    if !(params.a * constants.lambda_big() < T::one()) {
        return Err(Error::Hypothesis("signed depths require aΛ < 1".into()));
    }
    let c211 = psi1_condition(params, disc, constants);
    if !(c211 < T::zero()) {
        return Err(Error::Hypothesis(format!(
            "‖ψ₁‖₄⁴ − a‖∇ψ₁‖₂⁴ = {c211} is not negative; sufficient: a < 1/(λ₁²|Ω|) = {}",
            T::one() / (lambda1 * lambda1 * disc.volume())
        )));
    }
    let sampler = DirectionSampler::new(disc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 50 * n_rays.max(1);

    // L⁺ ∩ S: mixtures around φ_Λ, which lies in S
    let mut plus_dirs = vec![{
        let mut v = constants.phi_lambda().values().to_vec();
        normalize_grad(disc, &mut v);
        v
    }];
    let mut tries = 0;
    while plus_dirs.len() < n_rays + 1 && tries < budget {
        tries += 1;
        let u = if tries % 2 == 0 {
            sampler.perturbed(constants.phi_lambda().values(), 1.0, &mut rng)
        } else {
            sampler.direction(&mut rng)
        };
        if ray_value(params, disc, &u, RayBranch::Sup).is_some() {
            plus_dirs.push(u);
        }
    }
    // L⁻: ψ₁-dominant mixtures
    let mut minus_dirs = vec![{
        let mut v = constants.psi1().values().to_vec();
        normalize_grad(disc, &mut v);
        v
    }];
    let mut tries = 0;
    while minus_dirs.len() < n_rays + 1 && tries < budget {
        tries += 1;
        let eps = if tries % 3 == 0 { 0.05 } else { 0.3 };
        let u = sampler.perturbed(constants.psi1().values(), eps, &mut rng);
        if ray_value(params, disc, &u, RayBranch::LMinus).is_some() {
            minus_dirs.push(u);
        }
    }
    minus_dirs.retain(|u| ray_value(params, disc, u, RayBranch::LMinus).is_some());

    let mut out = SignedDepths {
        d3_plus: Derived::absent("no sample in L⁺ ∩ S"),
        d3_minus: Derived::absent("no sample in L⁻"),
        n_plus: plus_dirs.len(),
        n_minus: minus_dirs.len(),
        lminus_radius: T::zero(),
        saturated: false,
        minus_minimizer: None,
    };
    if let Some((i, v)) = best_ray(params, disc, &plus_dirs, RayBranch::Sup) {
        let (_, pv) = polish(params, disc, &plus_dirs[i], RayBranch::Sup, POLISH_ITERATIONS);
        out.d3_plus = Derived::Value(pv.min(v));
    }
    if let Some((i, v)) = best_ray(params, disc, &minus_dirs, RayBranch::LMinus) {
        let (u, pv) = polish(params, disc, &minus_dirs[i], RayBranch::LMinus, POLISH_ITERATIONS);
        let (u, val) = if pv < v { (u, pv) } else { (minus_dirs[i].clone(), v) };
        out.d3_minus = Derived::Value(val);
        out.minus_minimizer = Some(disc.wrap(u));
        let cap = T::lit(LMINUS_BOX) / params.a.sqrt();
        for u in &minus_dirs {
            if let Some((_, s)) = ray_value(params, disc, u, RayBranch::LMinus) {
                // u is ∇-normalized, so ‖∇(σu)‖ = σ
                out.lminus_radius = out.lminus_radius.max(s);
            }
        }
        out.saturated = out.lminus_radius >= cap;
    }
    Ok(out)
}

/// Gap multiples `λ − bλ₁` probed by [`estimate_depths`] when filling `δ`.
pub const DELTA_GRID_MULTIPLES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Separation floor of the `δ` probe used by [`estimate_depths`].
pub const DELTA_FLOOR: f64 = 1e-10;

/// Fills every depth the regime of `params` defines.
///
/// `p = 3` with `λ > bλ₁` gets `d₃^±` and a `δ` estimate probed at multiples of
/// the current gap; the other regimes get `d₃` or `d_p`.
pub fn estimate_depths<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    n_rays: usize,
    seed: u64,
) -> Result<WellDepths<T>> {
    let lambda1 = constants.lambda1();
    let threshold = params.b * lambda1;
    if params.growth() != Growth::Critical || params.lambda <= threshold {
        return estimate_well_depth(params, disc, constants, n_rays, seed);
    }
    let mut out = WellDepths::empty("requires λ < bλ₁");
    out.dp = Derived::absent("not the p = 3 case");
    if !(params.a * constants.lambda_big() < T::one()) {
        let why = "outside 0 < a < 1/Λ regime";
        out.d3_plus = Derived::absent(why);
        out.d3_minus = Derived::absent(why);
        out.delta_estimate = Derived::absent(why);
        return Ok(out);
    }
    match estimate_signed_depths(params, disc, constants, n_rays, seed) {
        Ok(sd) => {
            out.d3_plus = sd.d3_plus;
            out.d3_minus = sd.d3_minus;
            out.n_ray_samples = sd.n_plus + sd.n_minus;
            out.minimizer = sd.minus_minimizer;
        }
        Err(e) => {
            out.d3_plus = Derived::absent(e.to_string());
            out.d3_minus = Derived::absent(e.to_string());
        }
    }
    let gap = params.lambda - threshold;
    let grid: Vec<T> = DELTA_GRID_MULTIPLES.iter().map(|&c| threshold + T::lit(c) * gap).collect();
    out.delta_estimate = match probe_delta(params, disc, constants, &grid, T::lit(DELTA_FLOOR), seed) {
        Ok(pr) => match pr.delta_estimate {
            Some(d) => Derived::Value(d),
            None => Derived::absent("no probed λ above bλ₁ stayed separated"),
        },
        Err(e) => Derived::absent(e.to_string()),
    };
    Ok(out)
}

/// Outcome of the separation probe for `L̄⁻ ∩ S̄ = {0}`.
#[derive(Clone, Debug)]
pub struct DeltaProbe<T: Real = f64> {
    /// Largest `λ − bλ₁` on the grid up to which every probed λ stayed separated.
    pub delta_estimate: Option<T>,
    /// `(λ, min Φ)` per probed λ.
    pub minima: Vec<(T, T)>,
    pub floor: T,
}

/// Number of restarts per λ in the separation probe.
pub const PROBE_STARTS: usize = 24;

/// Heuristic probe of the window `bλ₁ < λ < bλ₁ + δ` in which `L̄⁻ ∩ S̄ = {0}`.
///
/// Minimizes `max(0, a·g2² − l4)² + max(0, b·g2 − λ·m2)²` on the ∇-unit sphere;
/// a minimum above `floor` counts as separated.
pub fn probe_delta<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    constants: &Constants<T>,
    grid: &[T],
    floor: T,
    seed: u64,
) -> Result<DeltaProbe<T>> {
    disc.check(constants.psi1())?;
    let lambda1 = constants.lambda1();
    if params.growth() != Growth::Critical {
        return Err(Error::Hypothesis("the δ probe requires p = 3".into()));
    }
    if !(params.a * constants.lambda_big() < T::one()) {
        return Err(Error::Hypothesis("the δ probe requires aΛ < 1".into()));
    }
    let c211 = psi1_condition(params, disc, constants);
    if !(c211 < T::zero()) {
        return Err(Error::Hypothesis(format!(
            "‖ψ₁‖₄⁴ − a‖∇ψ₁‖₂⁴ = {c211} is not negative; sufficient: a < 1/(λ₁²|Ω|) = {}",
            T::one() / (lambda1 * lambda1 * disc.volume())
        )));
    }
    let sampler = DirectionSampler::new(disc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<T>> = Vec::new();
    for i in 0..PROBE_STARTS {
        let base = if i % 2 == 0 { constants.psi1() } else { constants.phi_lambda() };
        starts.push(match i {
            0 | 1 => {
                let mut v = base.values().to_vec();
                normalize_grad(disc, &mut v);
                v
            }
            _ if i % 3 == 0 => sampler.direction(&mut rng),
            _ => sampler.perturbed(base.values(), 1.0, &mut rng),
        });
    }
    // halfway mixtures of ψ₁ and φ_Λ
    for t in [0.25, 0.5, 0.75] {
        let mut a = constants.psi1().values().to_vec();
        let mut b = constants.phi_lambda().values().to_vec();
        normalize_grad(disc, &mut a);
        normalize_grad(disc, &mut b);
        let t = T::lit(t);
        starts.push(a.iter().zip(&b).map(|(&x, &y)| (T::one() - t) * x + t * y).collect());
    }
    let mut grid_sorted: Vec<T> = grid.to_vec();
    grid_sorted.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let threshold = params.b * lambda1;
    let mut minima = Vec::new();
    let mut delta: Option<T> = None;
    let mut separated_so_far = true;
    for &lam in &grid_sorted {
        let pr = params.with_lambda(lam);
        let best = starts
            .par_iter()
            .map(|s| separation_descent(&pr, disc, s).1)
            .collect::<Vec<T>>()
            .into_iter()
            .fold(T::infinity(), |m, v| m.min(v));
        minima.push((lam, best));
        if lam > threshold && separated_so_far {
            if best > floor {
                delta = Some(lam - threshold);
            } else {
                separated_so_far = false;
            }
        }
    }
    Ok(DeltaProbe {
        delta_estimate: delta,
        minima,
        floor,
    })
}

/// `Φ(u)` on the ∇-unit sphere and its descent.
fn separation_descent<T: Real>(params: &Params<T>, disc: &Discretization<T>, start: &[T]) -> (Vec<T>, T) {
    let phi = |u: &[T]| -> Option<T> {
        let n = disc.norms_unchecked(u, params.p);
        let s = (params.a * n.g2 * n.g2 - n.l4).max(T::zero());
        let l = (params.b * n.g2 - params.lambda * n.m2).max(T::zero());
        Some(s * s + l * l)
    };
    let grad = |u: &[T]| -> Vec<T> {
        let n = disc.norms_unchecked(u, params.p);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let s = (params.a * n.g2 * n.g2 - n.l4).max(T::zero());
        let l = (params.b * n.g2 - params.lambda * n.m2).max(T::zero());
        // Euclidean gradients, then map through A⁻¹
        let cube: Vec<T> = u.iter().map(|&x| x * x * x).collect();
        let cube_inv = disc.solve_laplacian(&cube);
        let u_inv = disc.solve_laplacian(u);
        let mut g: Vec<T> = (0..u.len())
            .map(|i| {
                let ds = four * params.a * n.g2 * u[i] - four * cube_inv[i];
                let dl = two * params.b * u[i] - two * params.lambda * u_inv[i];
                two * s * ds + two * l * dl
            })
            .collect();
        super::rays::project_off(disc, u, &mut g);
        g
    };
    sphere_descent(disc, start, 400, phi, grad)
}
