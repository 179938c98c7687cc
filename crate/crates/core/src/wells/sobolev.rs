use crate::discretization::{Discretization, Eigenpair, Field};
use crate::error::{Error, Result};
use crate::real::{abs_pow, usable_tol, Real};

/// One row of the Sobolev table.
#[derive(Clone, Debug)]
pub struct SobolevEntry<T: Real = f64> {
    pub q: T,
    /// `inf uᵀAu / (Σ wᵢ|uᵢ|^q)^{2/q}`, estimated from above.
    pub s_q: T,
    /// Minimizer normalized so that `‖u‖_q = 1`.
    pub minimizer: Field<T>,
    pub iterations: usize,
}

/// Descent budget of the Rayleigh-quotient minimizer.
pub const SOBOLEV_MAX_ITER: usize = 20_000;
const WINDOW: usize = 50;

/// Estimates `S_q` starting from the principal eigenfunction.
pub fn estimate_sobolev_constant<T: Real>(disc: &Discretization<T>, q: T, tol: T) -> Result<SobolevEntry<T>> {
    let eig = disc.principal_eigenpair(T::lit(1e-10))?;
    estimate_sobolev_constant_from(disc, q, tol, &eig.psi1)
}

/// Estimates `S_q` from a given start.
///
/// Projected gradient descent on `{‖u‖_q = 1}` with the gradient taken in the
/// `uᵀAu` inner product and backtracking on the quotient. A unit-half step is
/// the nonlinear inverse iteration `u ← L⁻¹(|u|^{q−2}u)`.
pub fn estimate_sobolev_constant_from<T: Real>(
    disc: &Discretization<T>,
    q: T,
    tol: T,
    start: &Field<T>,
) -> Result<SobolevEntry<T>> {
    disc.check(start)?;
    if !(q > T::one()) {
        return Err(Error::InvalidParams(format!("q must exceed 1, got {q}")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    if start.is_zero() {
        return Err(Error::InvalidParams("start must be nonzero".into()));
    }
    let tol = usable_tol(tol);
    let normalize = |u: &mut Vec<T>| {
        let n = disc.lq_pow(u, q).powf(T::one() / q);
        for x in u.iter_mut() {
            *x = *x / n;
        }
    };
    let quotient = |u: &[T]| disc.grad_sq(u) / disc.lq_pow(u, q).powf(T::lit(2.0) / q);
    let mut u = start.values().to_vec();
    normalize(&mut u);
    let mut value = quotient(&u);
    let mut history = vec![value];
    let two = T::lit(2.0);
    for it in 1..=SOBOLEV_MAX_ITER {
        let g2 = disc.grad_sq(&u);
        let nl: Vec<T> = u.iter().map(|&x| abs_pow(x, q - two) * x).collect();
        let inv = disc.solve_laplacian(&nl);
        // H¹ gradient of the quotient at ‖u‖_q = 1
        let grad: Vec<T> = u.iter().zip(&inv).map(|(&x, &y)| two * x - two * g2 * y).collect();
        let mut step = T::lit(0.5);
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<T> = u.iter().zip(&grad).map(|(&x, &g)| x - step * g).collect();
            normalize(&mut trial);
            let tv = quotient(&trial);
            if tv.is_finite() && tv < value {
                accepted = Some((trial, tv));
                break;
            }
            step = step / two;
        }
        match accepted {
            Some((trial, tv)) => {
                u = trial;
                value = tv;
            }
            None => {
                return finish(disc, q, value, u, it);
            }
        }
        if !value.is_finite() || u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonConvergence {
                what: "Sobolev quotient descent (non-finite iterate)",
                iterations: it,
                residual: value.as_f64(),
            });
        }
        history.push(value);
        if history.len() > WINDOW {
            let old = history[history.len() - 1 - WINDOW];
            if (old - value) / value < tol {
                return finish(disc, q, value, u, it);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "Sobolev quotient descent",
        iterations: SOBOLEV_MAX_ITER,
        residual: value.as_f64(),
    })
}

fn finish<T: Real>(disc: &Discretization<T>, q: T, value: T, mut u: Vec<T>, it: usize) -> Result<SobolevEntry<T>> {
    if u.iter().map(|&x| x).sum::<T>() < T::zero() {
        for x in u.iter_mut() {
            *x = -*x;
        }
    }
    Ok(SobolevEntry {
        q,
        s_q: value,
        minimizer: disc.wrap(u),
        iterations: it,
    })
}

/// Principal eigenpair together with the Sobolev table.
#[derive(Clone, Debug)]
pub struct SobolevConstants<T: Real = f64> {
    pub entries: Vec<SobolevEntry<T>>,
    /// `Λ = S₄²`
    pub lambda_big: T,
    /// Minimizer for `q = 4`, `‖φ_Λ‖₄ = 1`.
    pub phi_lambda: Field<T>,
}

impl<T: Real> SobolevConstants<T> {
    pub fn s(&self, q: T) -> Option<T> {
        self.entry(q).map(|e| e.s_q)
    }

    pub fn entry(&self, q: T) -> Option<&SobolevEntry<T>> {
        self.entries.iter().find(|e| e.q == q)
    }
}

/// Everything the variational layer needs from a discretization.
#[derive(Clone, Debug)]
pub struct Constants<T: Real = f64> {
    pub eigen: Eigenpair<T>,
    pub sobolev: SobolevConstants<T>,
}

impl<T: Real> Constants<T> {
    /// Computes `λ₁, ψ₁`, `S₄` (hence `Λ`) and `S_q` for each extra exponent.
    pub fn compute(disc: &Discretization<T>, extra_q: &[T], tol: T) -> Result<Self> {
        let eigen = disc.principal_eigenpair(T::lit(1e-10))?;
        let mut qs = vec![T::lit(4.0)];
        for &q in extra_q {
            if !qs.contains(&q) {
                qs.push(q);
            }
        }
        let mut entries = Vec::with_capacity(qs.len());
        for q in qs {
            entries.push(estimate_sobolev_constant_from(disc, q, tol, &eigen.psi1)?);
        }
        let s4 = entries[0].s_q;
        let phi = entries[0].minimizer.clone();
        Ok(Constants {
            eigen,
            sobolev: SobolevConstants {
                entries,
                lambda_big: s4 * s4,
                phi_lambda: phi,
            },
        })
    }

    /// Constants with `S_{p+1}` for the given exponent.
    pub fn for_exponent(disc: &Discretization<T>, p: T, tol: T) -> Result<Self> {
        Self::compute(disc, &[p + T::one()], tol)
    }

    pub fn lambda1(&self) -> T {
        self.eigen.lambda1
    }

    pub fn psi1(&self) -> &Field<T> {
        &self.eigen.psi1
    }

    pub fn lambda_big(&self) -> T {
        self.sobolev.lambda_big
    }

    pub fn phi_lambda(&self) -> &Field<T> {
        &self.sobolev.phi_lambda
    }

    /// `S_{p+1}`, if tabulated.
    pub fn sp1(&self, p: T) -> Option<T> {
        self.sobolev.s(p + T::one())
    }
}
