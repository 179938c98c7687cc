//! Energy, Nehari functional, fiber maps and the radii built from them.

use crate::discretization::{Discretization, Field};
use crate::error::{Error, Result};
use crate::real::{abs_pow, usable_tol, Real};

/// Coefficients `(a, b, λ, p)` of `u_tt − (a‖∇u‖² + b)Δu = λu + |u|^{p−1}u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params<T: Real = f64> {
    pub a: T,
    pub b: T,
    pub lambda: T,
    pub p: T,
}

/// Growth class of the nonlinearity relative to the quartic Kirchhoff term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Growth {
    /// `1 < p < 3`
    Sublinear,
    /// `p = 3`
    Critical,
    /// `p > 3`
    Superlinear,
}

impl<T: Real> Params<T> {
    pub fn new(a: T, b: T, lambda: T, p: T) -> Result<Self> {
        let params = Params { a, b, lambda, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.lambda, self.p].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("coefficients must be finite".into()));
        }
        if !(self.a > T::zero()) {
            return Err(Error::InvalidParams(format!("a must be positive, got {}", self.a)));
        }
        if !(self.b > T::zero()) {
            return Err(Error::InvalidParams(format!("b must be positive, got {}", self.b)));
        }
        if !(self.p > T::one()) {
            return Err(Error::InvalidParams(format!("p must exceed 1, got {}", self.p)));
        }
        Ok(())
    }

    pub fn growth(&self) -> Growth {
        let three = T::lit(3.0);
        if self.p < three {
            Growth::Sublinear
        } else if self.p == three {
            Growth::Critical
        } else {
            Growth::Superlinear
        }
    }

    pub fn with_lambda(self, lambda: T) -> Self {
        Params { lambda, ..self }
    }

    pub fn with_a(self, a: T) -> Self {
        Params { a, ..self }
    }
}

/// `b₀` and `c₁`: the two-sided bounds `b₀‖∇u‖² ≤ b‖∇u‖² − λ‖u‖² ≤ c₁‖∇u‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveCoeffs<T: Real = f64> {
    pub b0: T,
    pub c1: T,
}

pub fn effective_coeffs<T: Real>(params: &Params<T>, lambda1: T) -> EffectiveCoeffs<T> {
    let shifted = params.b - params.lambda / lambda1;
    if params.lambda >= T::zero() {
        EffectiveCoeffs { b0: shifted, c1: params.b }
    } else {
        EffectiveCoeffs { b0: params.b, c1: shifted }
    }
}

/// The four norms every functional consumes.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NormBundle<T: Real = f64> {
    /// `‖∇u‖₂²`
    pub g2: T,
    /// `‖u‖₂²`
    pub m2: T,
    /// `‖u‖₄⁴`
    pub l4: T,
    /// `‖u‖_{p+1}^{p+1}`
    pub lp1: T,
}

impl<T: Real> NormBundle<T> {
    pub fn new(g2: T, m2: T, l4: T, lp1: T) -> Self {
        NormBundle { g2, m2, l4, lp1 }
    }

    /// Bundle of `c·u` given the bundle of `u`.
    pub fn scaled(&self, c: T, p: T) -> Self {
        let c2 = c * c;
        NormBundle {
            g2: c2 * self.g2,
            m2: c2 * self.m2,
            l4: c2 * c2 * self.l4,
            lp1: abs_pow(c, p + T::one()) * self.lp1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.g2 == T::zero()
    }

    pub fn grad_norm(&self) -> T {
        self.g2.sqrt()
    }
}

/// `J(u) = (a/4)g2² + (b/2)g2 − (λ/2)m2 − lp1/(p+1)`.
pub fn evaluate_j<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> T {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    params.a / four * n.g2 * n.g2 + params.b / two * n.g2 - params.lambda / two * n.m2
        - n.lp1 / (params.p + T::one())
}

/// `I(u) = a·g2² + b·g2 − λ·m2 − lp1`.
pub fn evaluate_i<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> T {
    params.a * n.g2 * n.g2 + params.b * n.g2 - params.lambda * n.m2 - n.lp1
}

/// Right-hand side of `J = a(1/4−1/(p+1))g2² + b(1/2−1/(p+1))g2 − λ(1/2−1/(p+1))m2 + I/(p+1)`.
pub fn j_decomposition<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> T {
    let q = T::one() / (params.p + T::one());
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    params.a * (quarter - q) * n.g2 * n.g2 + params.b * (half - q) * n.g2
        - params.lambda * (half - q) * n.m2
        + evaluate_i(params, n) * q
}

/// `E = ½‖v‖₂² + J(u)`.
pub fn total_energy<T: Real>(params: &Params<T>, disc: &Discretization<T>, u: &Field<T>, v: &Field<T>) -> Result<T> {
    let n = disc.norms(u, params.p)?;
    disc.check(v)?;
    let kinetic = disc.inner(v.values(), v.values());
    Ok(T::lit(0.5) * kinetic + evaluate_j(params, &n))
}

/// Scale against which `|I(u)|` is judged when testing `u ∈ N`.
pub fn nehari_scale<T: Real>(params: &Params<T>, n: &NormBundle<T>) -> T {
    params.a * n.g2 * n.g2 + n.lp1
}

/// Three-valued sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of<T: Real>(x: T) -> Sign {
        Self::with_tol(x, T::zero())
    }

    pub fn with_tol<T: Real>(x: T, tol: T) -> Sign {
        if x > tol {
            Sign::Positive
        } else if x < -tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Sign::Negative => "-",
            Sign::Zero => "0",
            Sign::Positive => "+",
        }
    }
}

/// Sign of `I(u)` with the relative membership tolerance `eps`.
pub fn nehari_sign<T: Real>(params: &Params<T>, n: &NormBundle<T>, eps: T) -> Sign {
    if n.is_zero() {
        return Sign::Zero;
    }
    Sign::with_tol(evaluate_i(params, n), eps * nehari_scale(params, n))
}

/// A value that may be undefined, carrying the reason when it is.
#[derive(Clone, Debug, PartialEq)]
pub enum Derived<T> {
    Value(T),
    Absent(String),
}

impl<T: Copy> Derived<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Derived::Value(v) => Some(*v),
            Derived::Absent(_) => None,
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Derived::Value(_) => None,
            Derived::Absent(r) => Some(r),
        }
    }

    pub fn absent(reason: impl Into<String>) -> Self {
        Derived::Absent(reason.into())
    }
}

/// Which stationary-point picture the fiber map falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberRegime {
    /// `p = 3`, `l4 > a·g2²` and `b·g2 > λ·m2`: σ is the unique maximum.
    SBranch,
    /// `p = 3`, both quantities negative: σ is the unique minimum.
    LMinusBranch,
    /// `p = 3`, the two quantities have opposite signs (or one vanishes).
    NoStationaryPoint,
    /// `p > 3`: τ₀ and τ_u.
    PowerLaw,
    /// `1 < p < 3`: stationary points not tracked.
    Sublinear,
    /// `g2 = 0`.
    Degenerate,
}

/// `K_u(τ) = J(τu) = quartic·τ⁴ + quadratic·τ² − power·τ^{p+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberMap<T: Real = f64> {
    pub params: Params<T>,
    pub bundle: NormBundle<T>,
    /// `a·g2²/4`
    pub quartic: T,
    /// `(b·g2 − λ·m2)/2`
    pub quadratic: T,
    /// `lp1/(p+1)`
    pub power: T,
    pub regime: FiberRegime,
    pub sigma: Derived<T>,
    pub tau0: Derived<T>,
    pub tau_u: Derived<T>,
}

impl<T: Real> FiberMap<T> {
    pub fn value(&self, tau: T) -> T {
        let t2 = tau * tau;
        self.quartic * t2 * t2 + self.quadratic * t2 - self.power * abs_pow(tau, self.params.p + T::one())
    }

    /// `K_u′(τ) = aτ³g2² + (b·g2 − λ·m2)τ − τ^p·lp1`.
    pub fn d1(&self, tau: T) -> T {
        let n = &self.bundle;
        let pr = &self.params;
        pr.a * tau * tau * tau * n.g2 * n.g2 + (pr.b * n.g2 - pr.lambda * n.m2) * tau
            - abs_pow(tau, pr.p) * n.lp1
    }

    /// `K_u″(τ) = 3aτ²g2² + b·g2 − λ·m2 − pτ^{p−1}·lp1`.
    pub fn d2(&self, tau: T) -> T {
        let n = &self.bundle;
        let pr = &self.params;
        T::lit(3.0) * pr.a * tau * tau * n.g2 * n.g2 + pr.b * n.g2 - pr.lambda * n.m2
            - pr.p * abs_pow(tau, pr.p - T::one()) * n.lp1
    }

    /// `h_p(τ) = K_u′(τ)/τ`.
    pub fn h(&self, tau: T) -> T {
        let n = &self.bundle;
        let pr = &self.params;
        pr.a * tau * tau * n.g2 * n.g2 + pr.b * n.g2 - pr.lambda * n.m2 - abs_pow(tau, pr.p - T::one()) * n.lp1
    }

    /// The stationary point σ_u (p = 3) or τ_u (p > 3).
    pub fn stationary_point(&self) -> Option<T> {
        self.sigma.value().or_else(|| self.tau_u.value())
    }

    /// `J` at the stationary point.
    pub fn stationary_value(&self) -> Option<T> {
        self.stationary_point().map(|t| self.value(t))
    }

    /// `sup_τ K_u(τ)` when the ray crosses the Nehari set at a maximum.
    pub fn sup_value(&self) -> Option<T> {
        match self.regime {
            FiberRegime::SBranch => {
                let mu0 = self.bundle.l4 - self.params.a * self.bundle.g2 * self.bundle.g2;
                let mu1 = T::lit(2.0) * self.quadratic;
                Some(mu1 * mu1 / (T::lit(4.0) * mu0))
            }
            FiberRegime::PowerLaw => self.tau_u.value().map(|t| self.value(t)),
            _ => None,
        }
    }
}

/// Builds the fiber map of a field from its norms.
pub fn fiber_map<T: Real>(params: &Params<T>, bundle: &NormBundle<T>, tol: T) -> FiberMap<T> {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mu1 = params.b * bundle.g2 - params.lambda * bundle.m2;
    let mut fm = FiberMap {
        params: *params,
        bundle: *bundle,
        quartic: params.a * bundle.g2 * bundle.g2 / four,
        quadratic: mu1 / two,
        power: bundle.lp1 / (params.p + T::one()),
        regime: FiberRegime::Degenerate,
        sigma: Derived::absent("not the p = 3 case"),
        tau0: Derived::absent("not the p > 3 case"),
        tau_u: Derived::absent("not the p > 3 case"),
    };
    if !(bundle.g2 > T::zero()) {
        let why = "degenerate field: g2 = 0";
        fm.sigma = Derived::absent(why);
        fm.tau0 = Derived::absent(why);
        fm.tau_u = Derived::absent(why);
        return fm;
    }
    match params.growth() {
        Growth::Critical => {
            let mu0 = bundle.l4 - params.a * bundle.g2 * bundle.g2;
            let zero = T::zero();
            if mu0 > zero && mu1 > zero {
                fm.regime = FiberRegime::SBranch;
                fm.sigma = Derived::Value((mu1 / mu0).sqrt());
            } else if mu0 < zero && mu1 < zero {
                fm.regime = FiberRegime::LMinusBranch;
                fm.sigma = Derived::Value((mu1 / mu0).sqrt());
            } else {
                fm.regime = FiberRegime::NoStationaryPoint;
                fm.sigma = Derived::absent("no stationary point");
            }
        }
        Growth::Superlinear => {
            fm.regime = FiberRegime::PowerLaw;
            if !(bundle.lp1 > T::zero()) {
                fm.tau0 = Derived::absent("lp1 = 0");
                fm.tau_u = Derived::absent("lp1 = 0");
                return fm;
            }
            let p = params.p;
            let tau0 = (two * params.a * bundle.g2 * bundle.g2 / ((p - T::one()) * bundle.lp1))
                .powf(T::one() / (p - T::lit(3.0)));
            fm.tau0 = Derived::Value(tau0);
            fm.tau_u = match root_past(|t| fm.h(t), tau0, usable_tol(tol)) {
                Some(t) => Derived::Value(t),
                None => Derived::absent("h_p(τ₀) ≤ 0: no maximum of the fiber map past τ₀"),
            };
        }
        Growth::Sublinear => {
            fm.regime = FiberRegime::Sublinear;
            fm.sigma = Derived::absent("1 < p < 3");
            fm.tau0 = Derived::absent("1 < p < 3");
            fm.tau_u = Derived::absent("1 < p < 3");
        }
    }
    fm
}

/// Root of a function positive at `start` and eventually negative, by bisection.
fn root_past<T: Real>(f: impl Fn(T) -> T, start: T, tol: T) -> Option<T> {
    if !(f(start) > T::zero()) {
        return None;
    }
    let two = T::lit(2.0);
    let mut lo = start;
    let mut hi = if start > T::zero() { start * two } else { T::one() };
    let mut guard = 0;
    while f(hi) >= T::zero() {
        lo = hi;
        hi = hi * two;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..4000 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi || hi - lo <= tol * hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) / two)
}

/// The radii of the `p = 3` and `p > 3` well pictures.
#[derive(Clone, Debug, PartialEq)]
pub struct Radii<T: Real = f64> {
    pub rho3: Derived<T>,
    pub big_r3: Derived<T>,
    pub rhat3: Derived<T>,
    pub rhop: Derived<T>,
    pub big_rp: Derived<T>,
    pub rhatp: Derived<T>,
}

/// Evaluates the radius formulas; `d` is the well depth of the active family.
pub fn radii<T: Real>(params: &Params<T>, coeffs: &EffectiveCoeffs<T>, lambda_big: T, sp1: T, d: T) -> Radii<T> {
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let a = params.a;
    let p = params.p;
    let mut r = Radii {
        rho3: Derived::absent("not the p = 3 case"),
        big_r3: Derived::absent("not the p = 3 case"),
        rhat3: Derived::absent("not the p = 3 case"),
        rhop: Derived::absent("not the p > 3 case"),
        big_rp: Derived::absent("not the p > 3 case"),
        rhatp: Derived::absent("not the p > 3 case"),
    };
    // ‖∇u‖² bound from (a/4)s² + (c1/2)s < d
    let inner_root = |d: T| ((-coeffs.c1 + (coeffs.c1 * coeffs.c1 + four * a * d).sqrt()) / a).sqrt();
    match params.growth() {
        Growth::Critical => {
            let al = a * lambda_big;
            if !(al > zero && al < one) {
                let why = "outside 0 < a < 1/Λ regime";
                r.rho3 = Derived::absent(why);
                r.big_r3 = Derived::absent(why);
                r.rhat3 = Derived::absent(why);
                return r;
            }
            if !(coeffs.b0 > zero) {
                let why = "b0 ≤ 0 (λ ≥ bλ₁)";
                r.rho3 = Derived::absent(why);
                r.big_r3 = Derived::absent(why);
                r.rhat3 = Derived::absent(why);
                return r;
            }
            let rho3 = (coeffs.b0 * lambda_big / (one - al)).sqrt();
            r.rho3 = Derived::Value(rho3);
            if d > zero {
                r.big_r3 = Derived::Value(two * (d / coeffs.b0).sqrt());
                r.rhat3 = Derived::Value(rho3.min(inner_root(d)));
            } else {
                r.big_r3 = Derived::absent("d ≤ 0");
                r.rhat3 = Derived::absent("d ≤ 0");
            }
        }
        Growth::Superlinear => {
            if !(sp1 > zero) {
                r.rhop = Derived::absent("S_{p+1} ≤ 0");
            } else {
                let rhop = (sp1.powf((p + one) / two) * a).powf(one / (p - T::lit(3.0)));
                r.rhop = Derived::Value(rhop);
            }
            if d > zero {
                r.big_rp = Derived::Value((four * (p + one) * d / ((p - T::lit(3.0)) * a)).powf(T::lit(0.25)));
                r.rhatp = match r.rhop.value() {
                    Some(rhop) => Derived::Value(rhop.min(inner_root(d))),
                    None => Derived::absent("ρ_p undefined"),
                };
            } else {
                r.big_rp = Derived::absent("d ≤ 0");
                r.rhatp = Derived::absent("d ≤ 0");
            }
        }
        Growth::Sublinear => {}
    }
    r
}

/// `h₀ = (p−1)²(λ−bλ₁)²/(2(p−3)aλ₁²)` and the energy gate `−h₀/(2p+2)`.
pub fn blowup_threshold_h0<T: Real>(params: &Params<T>, lambda1: T) -> Result<(T, T)> {
    if params.growth() != Growth::Superlinear {
        return Err(Error::InvalidParams(format!("h0 requires p > 3, got p = {}", params.p)));
    }
    let p = params.p;
    let one = T::one();
    let two = T::lit(2.0);
    let gap = params.lambda - params.b * lambda1;
    let h0 = (p - one) * (p - one) * gap * gap / (two * (p - T::lit(3.0)) * params.a * lambda1 * lambda1);
    Ok((h0, -h0 / (two * p + two)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.0, 1.0, 0.0, 3.0).is_ok());
        assert!(Params::new(0.0, 1.0, 0.0, 3.0).is_err());
        assert!(Params::new(1.0, -1.0, 0.0, 3.0).is_err());
        assert!(Params::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Params::new(1.0, 1.0, f64::NAN, 3.0).is_err());
    }

    #[test]
    fn effective_coeff_examples() {
        let l1 = PI * PI;
        let c = effective_coeffs(&Params::new(1.0, 1.0, 0.0, 3.0).unwrap(), l1);
        assert_eq!((c.b0, c.c1), (1.0, 1.0));
        let c = effective_coeffs(&Params::new(1.0, 1.0, l1 / 2.0, 3.0).unwrap(), l1);
        assert!(close(c.b0, 0.5, 1e-15) && c.c1 == 1.0);
        let c = effective_coeffs(&Params::new(1.0, 1.0, -l1, 3.0).unwrap(), l1);
        assert!(c.b0 == 1.0 && close(c.c1, 2.0, 1e-15));
    }

    #[test]
    fn j_and_i_examples() {
        let z = NormBundle::default();
        let pr = Params::new(2.0, 1.0, 0.0, 3.0).unwrap();
        assert_eq!(evaluate_j(&pr, &z), 0.0);
        assert_eq!(evaluate_i(&pr, &z), 0.0);
        let n = NormBundle::new(1.0, 0.7, 1.0, 1.0);
        assert!(close(evaluate_j(&pr, &n), 0.75, 1e-15));
        let pr = Params::new(0.5, 1.0, 0.0, 3.0).unwrap();
        let n = NormBundle::new(2.0, 1.0, 3.0, 3.0);
        assert!(close(evaluate_i(&pr, &n), 1.0, 1e-15));
    }

    #[test]
    fn sigma_example() {
        let pr = Params::new(0.5, 1.0, 0.0, 3.0).unwrap();
        let n = NormBundle::new(2.0, 1.0, 3.0, 3.0);
        let fm = fiber_map(&pr, &n, 1e-12);
        assert_eq!(fm.regime, FiberRegime::SBranch);
        assert!(close(fm.sigma.value().unwrap(), 2f64.sqrt(), 1e-15));
        assert!(close(fm.sup_value().unwrap(), 1.0, 1e-15));
        assert!(close(fm.stationary_value().unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn mixed_signs_have_no_sigma() {
        let pr = Params::new(2.0, 1.0, 0.0, 3.0).unwrap();
        let fm = fiber_map(&pr, &NormBundle::new(1.0, 0.1, 1.0, 1.0), 1e-12);
        assert_eq!(fm.regime, FiberRegime::NoStationaryPoint);
        assert_eq!(fm.sigma.reason(), Some("no stationary point"));
        let fm = fiber_map(&pr, &NormBundle::default(), 1e-12);
        assert_eq!(fm.regime, FiberRegime::Degenerate);
    }

    #[test]
    fn power_law_root() {
        let pr = Params::<f64>::new(0.7, 1.0, 2.0, 4.0).unwrap();
        let n = NormBundle::new(1.3, 0.2, 0.5, 0.4);
        let fm = fiber_map(&pr, &n, 1e-13);
        let t0 = fm.tau0.value().unwrap();
        let tu = fm.tau_u.value().unwrap();
        assert!(tu > t0);
        assert!(fm.h(tu).abs() <= 1e-10 * (pr.a * n.g2 * n.g2 * tu * tu + n.lp1 * tu.powi(3)));
        let fm0 = fiber_map(&pr, &NormBundle::new(1.0, 0.2, 0.1, 0.0), 1e-12);
        assert!(fm0.tau0.value().is_none() && fm0.tau_u.value().is_none());
    }

    #[test]
    fn radii_examples() {
        let pr = Params::new(0.5, 1.0, 0.0, 3.0).unwrap();
        let c = EffectiveCoeffs { b0: 1.0, c1: 1.0 };
        let r = radii(&pr, &c, 1.0, 1.0, 1.0);
        assert!(close(r.rho3.value().unwrap(), 2f64.sqrt(), 1e-15));
        // d at the lower end of its bracket
        let d = 1.0 * 1.0 / (4.0 * (1.0 - 0.5));
        let r = radii(&pr, &c, 1.0, 1.0, d);
        assert!(close(r.big_r3.value().unwrap(), r.rho3.value().unwrap(), 1e-15));
        let r = radii(&pr.with_a(1.5), &c, 1.0, 1.0, d);
        assert_eq!(r.rho3.reason(), Some("outside 0 < a < 1/Λ regime"));
        let pr4 = Params::new(1.0, 1.0, 0.0, 4.0).unwrap();
        let s5 = 2f64.powf(2.0 / 5.0);
        let r = radii(&pr4, &c, 1.0, s5, 1.0);
        assert!(close(r.rhop.value().unwrap(), 2.0, 1e-14));
    }

    #[test]
    fn h0_examples() {
        let l1 = PI * PI;
        let pr = Params::new(1.0, 1.0, l1 + 1.0, 5.0).unwrap();
        let (h0, gate) = blowup_threshold_h0(&pr, l1).unwrap();
        assert!(close(h0, 4.0 / PI.powi(4), 1e-12));
        assert!(close(gate, -h0 / 12.0, 1e-15));
        assert_eq!(blowup_threshold_h0(&pr.with_lambda(l1), l1).unwrap().0, 0.0);
        let (h2, _) = blowup_threshold_h0(&pr.with_lambda(l1 + 2.0), l1).unwrap();
        assert!(close(h2, 4.0 * h0, 1e-12));
        assert!(blowup_threshold_h0(&Params::new(1.0, 1.0, 0.0, 3.0).unwrap(), l1).is_err());
    }

    #[test]
    fn sign_tolerance() {
        assert_eq!(Sign::with_tol(1e-10, 1e-9), Sign::Zero);
        assert_eq!(Sign::with_tol(-1e-8, 1e-9), Sign::Negative);
        assert_eq!(Sign::of(2.0), Sign::Positive);
    }

    #[test]
    fn generic_over_f32() {
        let pr = Params::<f32>::new(0.5, 1.0, 0.0, 3.0).unwrap();
        let n = NormBundle::new(2.0f32, 1.0, 3.0, 3.0);
        let fm = fiber_map(&pr, &n, 1e-6);
        assert!((fm.sigma.value().unwrap() - 2f32.sqrt()).abs() < 1e-6);
    }
}
