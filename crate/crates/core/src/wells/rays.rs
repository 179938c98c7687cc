//! Ray sampling on the ∇-unit sphere and local descent of ray values.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::discretization::Discretization;
use crate::functionals::{fiber_map, FiberRegime, Growth, Params};
use crate::real::{abs_pow, dot, Real};

/// Which stationary point of the fiber map a ray contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayBranch {
    /// Maximum of `τ ↦ J(τu)`: σ_u on `S` (p = 3) or τ_u (p > 3).
    Sup,
    /// Minimum at σ_u on `L⁻` (p = 3).
    LMinus,
}

/// Low-order sine modes with their index norms.
pub struct DirectionSampler<'a, T: Real> {
    disc: &'a Discretization<T>,
    modes: Vec<(Vec<T>, T)>,
}

impl<'a, T: Real> DirectionSampler<'a, T> {
    pub fn new(disc: &'a Discretization<T>) -> Self {
        let d = disc.dimension();
        let kmax = match d {
            1 => 8,
            2 => 4,
            _ => 3,
        };
        let mut modes = Vec::new();
        let mut idx = vec![1usize; d];
        loop {
            let fits = idx.iter().zip(&disc.spec().resolution).all(|(&k, &n)| k <= n);
            if fits {
                let norm = T::count(idx.iter().map(|k| k * k).sum::<usize>()).sqrt();
                modes.push((disc.sine_mode(&idx).into_values(), norm));
            }
            let mut ax = 0;
            loop {
                if ax == d {
                    return DirectionSampler { disc, modes };
                }
                idx[ax] += 1;
                if idx[ax] <= kmax {
                    break;
                }
                idx[ax] = 1;
                ax += 1;
            }
        }
    }

    fn gauss(rng: &mut ChaCha8Rng) -> T {
        T::lit(rng.sample::<f64, _>(StandardNormal))
    }

    /// Random smooth mixture `Σ c_k e_k` with `c_k ~ N(0,1)/|k|`.
    pub fn smooth(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut u = vec![T::zero(); self.disc.n_nodes()];
        for (mode, norm) in &self.modes {
            let c = Self::gauss(rng) / *norm;
            for (x, &m) in u.iter_mut().zip(mode) {
                *x = *x + c * m;
            }
        }
        u
    }

    /// Smooth mixture plus white noise of random relative amplitude.
    pub fn rough(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut u = self.smooth(rng);
        let rms = (dot(&u, &u) / T::count(u.len())).sqrt();
        let amp: T = T::lit(rng.random_range(0.0..0.5)) * rms;
        for x in u.iter_mut() {
            *x = *x + amp * Self::gauss(rng);
        }
        u
    }

    /// Half smooth, half rough directions, normalized in the ∇-norm.
    pub fn direction(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut u = if rng.random_bool(0.5) { self.smooth(rng) } else { self.rough(rng) };
        normalize_grad(self.disc, &mut u);
        u
    }

    /// `base + ε·mixture` with `ε` uniform in `[0, eps_max]` relative to the ∇-norm.
    pub fn perturbed(&self, base: &[T], eps_max: f64, rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut b = base.to_vec();
        normalize_grad(self.disc, &mut b);
        let mut m = self.smooth(rng);
        normalize_grad(self.disc, &mut m);
        let eps = T::lit(rng.random_range(0.0..=eps_max));
        let mut u: Vec<T> = b.iter().zip(&m).map(|(&x, &y)| x + eps * y).collect();
        normalize_grad(self.disc, &mut u);
        u
    }
}

/// Scales `u` to `uᵀAu = 1` (no-op for the zero vector).
pub fn normalize_grad<T: Real>(disc: &Discretization<T>, u: &mut [T]) {
    let g = disc.grad_sq(u).sqrt();
    if g > T::zero() {
        for x in u.iter_mut() {
            *x = *x / g;
        }
    }
}

/// `(J at the branch's stationary point, stationary τ)` for the ray through `u`.
pub fn ray_value<T: Real>(params: &Params<T>, disc: &Discretization<T>, u: &[T], branch: RayBranch) -> Option<(T, T)> {
    let n = disc.norms_unchecked(u, params.p);
    let fm = fiber_map(params, &n, T::lit(1e-14));
    let out = match (branch, params.growth(), fm.regime) {
        (RayBranch::Sup, Growth::Critical, FiberRegime::SBranch) => {
            let s = fm.sigma.value()?;
            Some((fm.sup_value()?, s))
        }
        (RayBranch::Sup, Growth::Superlinear, FiberRegime::PowerLaw) => {
            let t = fm.tau_u.value()?;
            Some((fm.value(t), t))
        }
        (RayBranch::LMinus, Growth::Critical, FiberRegime::LMinusBranch) => {
            let s = fm.sigma.value()?;
            let mu0 = n.l4 - params.a * n.g2 * n.g2;
            let mu1 = params.b * n.g2 - params.lambda * n.m2;
            Some((mu1 * mu1 / (T::lit(4.0) * mu0), s))
        }
        _ => None,
    }?;
    if out.0.is_finite() && out.1.is_finite() {
        Some(out)
    } else {
        None
    }
}

/// Gradient of the ray value in the `uᵀAu` inner product, projected off `u`.
///
/// The ray value is `J(t*u)` at a stationary `t*`, so its derivative is
/// `t*·J′(t*u)`.
pub fn ray_gradient<T: Real>(params: &Params<T>, disc: &Discretization<T>, u: &[T], tstar: T) -> Vec<T> {
    let w: Vec<T> = u.iter().map(|&x| tstar * x).collect();
    let g2w = disc.grad_sq(&w);
    let coef = params.a * g2w + params.b;
    let nl: Vec<T> = w.iter().map(|&x| abs_pow(x, params.p - T::one()) * x).collect();
    let lin_inv = disc.solve_laplacian(&w);
    let nl_inv = disc.solve_laplacian(&nl);
    let mut g: Vec<T> = (0..w.len())
        .map(|i| tstar * (coef * w[i] - params.lambda * lin_inv[i] - nl_inv[i]))
        .collect();
    project_off(disc, u, &mut g);
    g
}

/// Removes the `uᵀA`-component of `g` along `u`.
pub fn project_off<T: Real>(disc: &Discretization<T>, u: &[T], g: &mut [T]) {
    let mut au = vec![T::zero(); u.len()];
    disc.apply_stiffness(u, &mut au);
    let uu = dot(u, &au);
    if uu > T::zero() {
        let c = dot(g, &au) / uu;
        for (gi, &ui) in g.iter_mut().zip(u) {
            *gi = *gi - c * ui;
        }
    }
}

/// Projected gradient descent on the ∇-unit sphere with Armijo backtracking.
///
/// `objective` returns `None` outside its admissible set; `gradient` is the
/// tangential gradient in the `uᵀAu` inner product.
pub fn sphere_descent<T: Real>(
    disc: &Discretization<T>,
    start: &[T],
    max_iter: usize,
    objective: impl Fn(&[T]) -> Option<T>,
    gradient: impl Fn(&[T]) -> Vec<T>,
) -> (Vec<T>, T) {
    let mut u = start.to_vec();
    normalize_grad(disc, &mut u);
    let mut value = match objective(&u) {
        Some(v) => v,
        None => return (u, T::infinity()),
    };
    let two = T::lit(2.0);
    let mut step = T::one();
    for _ in 0..max_iter {
        let g = gradient(&u);
        let gg = disc.grad_sq(&g);
        if !(gg > T::zero()) || !gg.is_finite() {
            break;
        }
        let scale = value.abs().max(T::min_positive_value());
        if gg.sqrt() <= T::lit(1e-13) * scale {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<T> = u.iter().zip(&g).map(|(&x, &gi)| x - step * gi).collect();
            normalize_grad(disc, &mut trial);
            if let Some(tv) = objective(&trial) {
                if tv <= value - T::lit(1e-4) * step * gg {
                    u = trial;
                    value = tv;
                    accepted = true;
                    break;
                }
            }
            step = step / two;
        }
        if !accepted {
            break;
        }
        step = step * two;
    }
    (u, value)
}

/// Descends the ray value of one branch.
pub fn polish<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    start: &[T],
    branch: RayBranch,
    max_iter: usize,
) -> (Vec<T>, T) {
    sphere_descent(
        disc,
        start,
        max_iter,
        |u| ray_value(params, disc, u, branch).map(|(v, _)| v),
        |u| match ray_value(params, disc, u, branch) {
            Some((_, t)) => ray_gradient(params, disc, u, t),
            None => vec![T::zero(); u.len()],
        },
    )
}
