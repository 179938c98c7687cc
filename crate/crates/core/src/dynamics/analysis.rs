use super::{BlowupReport, HaltReason, Outcome, Trace, TraceRow};
use crate::error::{Error, Result};
use crate::functionals::{effective_coeffs, evaluate_j, nehari_sign, Growth, NormBundle, Params, Sign};
use crate::real::Real;
use crate::scalar_opt::minimize_on;
use crate::wells::{Constants, WellDepths};

/// Fraction of post-`t₀` samples allowed to break monotonicity or concavity.
pub const CONCAVITY_VIOLATION_FRACTION: f64 = 0.05;

/// Factor applied to vacuum radii built from discretely estimated constants.
pub const VACUUM_SLACK: f64 = 0.95;

const CONCAVITY_SLACK: f64 = 1e-9;

/// `α` of the concavity argument: `1/2` for `p ≤ 3`, `(p−1)/4` above.
pub fn blowup_alpha<T: Real>(p: T) -> T {
    if p > T::lit(3.0) {
        (p - T::one()) / T::lit(4.0)
    } else {
        T::lit(0.5)
    }
}

/// Concavity diagnostics of `M^{−α}` on a trace.
pub fn analyze_blowup<T: Real>(trace: &Trace<T>, p: T) -> Result<BlowupReport<T>> {
    let rows = &trace.rows;
    if rows.len() < 10 {
        return Err(Error::InvalidParams(format!(
            "blow-up analysis needs at least 10 rows, got {}",
            rows.len()
        )));
    }
    let alpha = blowup_alpha(p);
    let mut report = BlowupReport {
        outcome: Outcome::Inconclusive,
        t1_estimate: None,
        alpha_used: alpha,
        concavity_violations: 0,
        samples: 0,
        t0: None,
        threshold_hit: trace.halt,
        vacuum_ok: None,
    };
    match trace.halt {
        HaltReason::Horizon => {
            report.outcome = Outcome::Bounded;
            return Ok(report);
        }
        HaltReason::NonFinite => return Ok(report),
        HaltReason::GradNorm | HaltReason::StepCollapse => {}
    }
    let start = match rows.iter().position(|r| r.mprime > T::zero()) {
        Some(i) => i,
        None => return Ok(report),
    };
    report.t0 = Some(rows[start].t);
    let tail = &rows[start..];
    if tail.len() < 3 {
        return Ok(report);
    }
    let y: Vec<T> = tail.iter().map(|r| r.m.powf(-alpha)).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(report);
    }
    let slope = |i: usize| (y[i + 1] - y[i]) / (tail[i + 1].t - tail[i].t);
    let mut violations = 0usize;
    let mut samples = 0usize;
    for i in 0..y.len() - 1 {
        samples += 1;
        let mut bad = y[i + 1] >= y[i];
        if i + 2 < y.len() {
            let (s0, s1) = (slope(i), slope(i + 1));
            let tol = T::lit(CONCAVITY_SLACK) * s0.abs().max(s1.abs());
            bad |= s1 - s0 > tol;
        }
        if bad {
            violations += 1;
        }
    }
    report.samples = samples;
    report.concavity_violations = violations;
    if T::count(violations) > T::lit(CONCAVITY_VIOLATION_FRACTION) * T::count(samples) {
        return Ok(report);
    }
    let n = y.len();
    let s = slope(n - 2);
    let t1 = tail[n - 1].t - y[n - 1] / s;
    if !(t1.is_finite() && s < T::zero()) {
        return Ok(report);
    }
    report.t1_estimate = Some(t1);
    report.outcome = Outcome::Blowup;
    Ok(report)
}

/// Which bound of `sup (‖u_t‖₂ + ‖∇u‖₂)` applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetKind {
    /// `1 < p < 3`, from `φ₀ = inf φ`.
    Sublinear,
    /// `p = 3`, `aΛ > 1`.
    H1,
    /// `p = 3`, `aΛ = 1`, `λ < bλ₁`.
    H2,
    /// `p = 3`, `aΛ < 1`, `λ < bλ₁`, `E(0) < d₃`.
    H3,
    /// `p > 3`, `λ ≤ bλ₁`, `E(0) < d_p`.
    Superlinear,
}

impl BudgetKind {
    pub fn name(&self) -> &'static str {
        match self {
            BudgetKind::Sublinear => "sublinear",
            BudgetKind::H1 => "H1",
            BudgetKind::H2 => "H2",
            BudgetKind::H3 => "H3",
            BudgetKind::Superlinear => "superlinear",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget<T: Real = f64> {
    pub kind: BudgetKind,
    /// Upper bound on `‖u_t‖₂ + ‖∇u‖₂`.
    pub value: T,
}

/// Relative width of the `aΛ = 1` test.
const H2_BAND: f64 = 1e-9;

/// Bound on `‖u_t‖₂ + ‖∇u‖₂` implied by the energy `e0` in the regime of `params`.
pub fn bounded_budget<T: Real>(
    params: &Params<T>,
    constants: &Constants<T>,
    depths: &WellDepths<T>,
    e0: T,
) -> Result<Budget<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let lambda1 = constants.lambda1();
    let big_l = constants.lambda_big();
    let coeffs = effective_coeffs(params, lambda1);
    let lam_hat = params.lambda.max(T::zero());
    let p = params.p;
    let pair = |kin: T, grad: T| -> Result<T> {
        if !(kin >= T::zero() && grad >= T::zero()) {
            return Err(Error::Hypothesis("energy budget is negative".into()));
        }
        Ok(kin.sqrt() + grad.sqrt())
    };
    match params.growth() {
        Growth::Sublinear => {
            let sp1 = constants
                .sp1(p)
                .ok_or_else(|| Error::InvalidParams("S_{p+1} not computed".into()))?;
            let c = one / ((p + one) * sp1.powf((p + one) / two));
            let phi = |s: T| params.a / four * s.powi(4) - lam_hat / (two * lambda1) * s * s - c * s.powf(p + one);
            let hi = two * (one + (lam_hat / (params.a * lambda1)).sqrt() + (c / params.a).powf(one / (T::lit(3.0) - p)));
            let (_, phi0) = minimize_on(phi, T::zero(), hi);
            let phi0 = phi0.min(T::zero());
            let room = two * (e0 - phi0);
            Ok(Budget {
                kind: BudgetKind::Sublinear,
                value: pair(room, room / params.b)?,
            })
        }
        Growth::Critical => {
            let al = params.a * big_l;
            if (al - one).abs() <= T::lit(H2_BAND) {
                if !(params.lambda < params.b * lambda1) {
                    return Err(Error::Hypothesis("H2 requires λ < bλ₁".into()));
                }
                return Ok(Budget {
                    kind: BudgetKind::H2,
                    value: pair(two * e0, two * e0 / coeffs.b0)?,
                });
            }
            if al > one {
                let h1 = if params.lambda > T::zero() {
                    -params.lambda * params.lambda * big_l / (four * lambda1 * lambda1 * (al - one))
                } else {
                    T::zero()
                };
                let room = two * e0 - two * h1;
                return Ok(Budget {
                    kind: BudgetKind::H1,
                    value: pair(room, room / params.b)?,
                });
            }
            if !(params.lambda < params.b * lambda1) {
                return Err(Error::Hypothesis("H3 requires λ < bλ₁".into()));
            }
            let d3 = depths
                .d3_value()
                .ok_or_else(|| Error::Hypothesis("H3 requires an estimate of d₃".into()))?;
            if !(e0 < d3) {
                return Err(Error::Hypothesis(format!("H3 requires E(0) < d₃, got {e0} ≥ {d3}")));
            }
            Ok(Budget {
                kind: BudgetKind::H3,
                value: pair(two * e0, four * e0 / coeffs.b0)?,
            })
        }
        Growth::Superlinear => {
            if params.lambda > params.b * lambda1 {
                return Err(Error::Hypothesis("bounded p > 3 regime requires λ ≤ bλ₁".into()));
            }
            let dp = depths
                .dp_value()
                .ok_or_else(|| Error::Hypothesis("requires an estimate of d_p".into()))?;
            if !(e0 < dp) {
                return Err(Error::Hypothesis(format!("requires E(0) < d_p, got {e0} ≥ {dp}")));
            }
            let k = params.a * (T::lit(0.25) - one / (p + one));
            let kin = two * e0;
            if !(kin >= T::zero()) {
                return Err(Error::Hypothesis("energy budget is negative".into()));
            }
            Ok(Budget {
                kind: BudgetKind::Superlinear,
                value: kin.sqrt() + (dp / k).powf(T::lit(0.25)),
            })
        }
    }
}

/// Regime of a vacuum-region statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VacuumRegime {
    Sublinear,
    Critical,
    Superlinear,
}

impl VacuumRegime {
    pub fn name(&self) -> &'static str {
        match self {
            VacuumRegime::Sublinear => "sublinear",
            VacuumRegime::Critical => "p3",
            VacuumRegime::Superlinear => "superlinear",
        }
    }
}

/// Radius below which `‖∇u‖₂` cannot fall once `E(0) ≤ 0`.
pub fn vacuum_radius<T: Real>(params: &Params<T>, constants: &Constants<T>) -> Result<(VacuumRegime, T)> {
    let one = T::one();
    let two = T::lit(2.0);
    let p = params.p;
    let lambda1 = constants.lambda1();
    let coeffs = effective_coeffs(params, lambda1);
    let sp1 = || {
        constants
            .sp1(p)
            .ok_or_else(|| Error::InvalidParams("S_{p+1} not computed".into()))
    };
    match params.growth() {
        Growth::Sublinear => {
            if !(params.lambda < params.b * lambda1) {
                return Err(Error::Hypothesis("sublinear vacuum requires λ < bλ₁".into()));
            }
            let s = sp1()?;
            let r = ((p + one) * coeffs.b0 * s.powf((p + one) / two) / two).powf(one / (p - one));
            Ok((VacuumRegime::Sublinear, r))
        }
        Growth::Critical => {
            let al = params.a * constants.lambda_big();
            if !(al < one) {
                return Err(Error::Hypothesis("p = 3 vacuum requires aΛ < 1".into()));
            }
            if !(params.lambda < params.b * lambda1) {
                return Err(Error::Hypothesis("p = 3 vacuum requires λ < bλ₁".into()));
            }
            let r = (two * coeffs.b0 * constants.lambda_big() / (one - al)).sqrt();
            Ok((VacuumRegime::Critical, r))
        }
        Growth::Superlinear => {
            if !(p < T::lit(5.0)) {
                return Err(Error::Hypothesis("p > 3 vacuum requires p < 5".into()));
            }
            if params.lambda > params.b * lambda1 {
                return Err(Error::Hypothesis("p > 3 vacuum requires λ ≤ bλ₁".into()));
            }
            let s = sp1()?;
            let r = ((p + one) * params.a * s.powf((p + one) / two) / T::lit(4.0)).powf(one / (p - T::lit(3.0)));
            Ok((VacuumRegime::Superlinear, r))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VacuumCheck<T: Real = f64> {
    pub regime: VacuumRegime,
    pub radius: T,
    /// `radius × VACUUM_SLACK`
    pub threshold: T,
    pub min_grad_norm: T,
    /// Rows with `‖∇u‖₂` below the threshold.
    pub violations: Vec<usize>,
    pub ok: bool,
}

/// Checks that every row stays outside the vacuum ball.
pub fn check_vacuum<T: Real>(trace: &Trace<T>, params: &Params<T>, constants: &Constants<T>) -> Result<VacuumCheck<T>> {
    let first = trace
        .rows
        .first()
        .ok_or_else(|| Error::InvalidParams("empty trace".into()))?;
    if !(first.e <= T::zero()) {
        return Err(Error::Hypothesis(format!("vacuum check requires E(0) ≤ 0, got {}", first.e)));
    }
    if !(first.grad_l2sq > T::zero()) {
        return Err(Error::Hypothesis("vacuum check requires ‖∇u₀‖₂ > 0".into()));
    }
    let (regime, radius) = vacuum_radius(params, constants)?;
    let threshold = radius * T::lit(VACUUM_SLACK);
    let mut min_grad_norm = T::infinity();
    let mut violations = Vec::new();
    for (i, r) in trace.rows.iter().enumerate() {
        let g = r.grad_l2sq.sqrt();
        min_grad_norm = min_grad_norm.min(g);
        if !(g >= threshold) {
            violations.push(i);
        }
    }
    Ok(VacuumCheck {
        regime,
        radius,
        threshold,
        min_grad_norm,
        ok: violations.is_empty(),
        violations,
    })
}

/// Invariance statements about the well sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvarianceCase {
    /// `p = 3`, `u ∈ W₃⁺`.
    A1,
    /// `p = 3`, `u ∈ W₃⁻`.
    A2,
    /// `p = 3`, `λ > bλ₁`, `u ∈ N₃⁻ ∩ J^{d₃⁻}`.
    B,
    /// `p > 3`, `u ∈ W_p⁺`.
    C1,
    /// `p > 3`, `u ∈ W_p⁻`.
    C2,
}

impl InvarianceCase {
    pub fn name(&self) -> &'static str {
        match self {
            InvarianceCase::A1 => "A1",
            InvarianceCase::A2 => "A2",
            InvarianceCase::B => "B",
            InvarianceCase::C1 => "C1",
            InvarianceCase::C2 => "C2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A1" => Some(InvarianceCase::A1),
            "A2" => Some(InvarianceCase::A2),
            "B" => Some(InvarianceCase::B),
            "C1" => Some(InvarianceCase::C1),
            "C2" => Some(InvarianceCase::C2),
            _ => None,
        }
    }

    fn expects_positive(&self) -> bool {
        matches!(self, InvarianceCase::A1 | InvarianceCase::C1)
    }

    /// The case whose hypotheses the initial row satisfies.
    pub fn infer<T: Real>(
        params: &Params<T>,
        constants: &Constants<T>,
        depths: &WellDepths<T>,
        first: &TraceRow<T>,
        eps: T,
    ) -> Result<Self> {
        let n = row_bundle(params, first);
        let sign = nehari_sign(params, &n, eps);
        let lambda1 = constants.lambda1();
        let case = match params.growth() {
            Growth::Critical if params.lambda > params.b * lambda1 => InvarianceCase::B,
            Growth::Critical if sign == Sign::Negative => InvarianceCase::A2,
            Growth::Critical => InvarianceCase::A1,
            Growth::Superlinear if sign == Sign::Negative => InvarianceCase::C2,
            Growth::Superlinear => InvarianceCase::C1,
            Growth::Sublinear => {
                return Err(Error::Hypothesis("no invariance statement for 1 < p < 3".into()));
            }
        };
        case.check_hypotheses(params, constants, depths, first, eps)?;
        Ok(case)
    }

    /// Verifies the case's hypotheses at `t = 0`; returns the level `d`.
    pub fn check_hypotheses<T: Real>(
        &self,
        params: &Params<T>,
        constants: &Constants<T>,
        depths: &WellDepths<T>,
        first: &TraceRow<T>,
        eps: T,
    ) -> Result<T> {
        let lambda1 = constants.lambda1();
        let fail = |what: &str| Err(Error::Hypothesis(format!("case {}: {what}", self.name())));
        let d = match self {
            InvarianceCase::A1 | InvarianceCase::A2 => {
                if params.growth() != Growth::Critical {
                    return fail("requires p = 3");
                }
                if !(params.a * constants.lambda_big() < T::one()) {
                    return fail("requires aΛ < 1");
                }
                if !(params.lambda < params.b * lambda1) {
                    return fail("requires λ < bλ₁");
                }
                match depths.d3_value() {
                    Some(d) => d,
                    None => return fail("requires an estimate of d₃"),
                }
            }
            InvarianceCase::B => {
                if params.growth() != Growth::Critical {
                    return fail("requires p = 3");
                }
                if !(params.a * constants.lambda_big() < T::one()) {
                    return fail("requires aΛ < 1");
                }
                let gap = params.lambda - params.b * lambda1;
                if !(gap > T::zero()) {
                    return fail("requires λ > bλ₁");
                }
                match depths.delta_estimate.value() {
                    Some(delta) if gap < delta => {}
                    Some(_) => return fail("requires λ − bλ₁ < δ"),
                    None => return fail("requires an estimate of δ"),
                }
                match depths.d3_minus.value() {
                    Some(d) => d,
                    None => return fail("requires an estimate of d₃⁻"),
                }
            }
            InvarianceCase::C1 | InvarianceCase::C2 => {
                if params.growth() != Growth::Superlinear || !(params.p < T::lit(5.0)) {
                    return fail("requires 3 < p < 5");
                }
                if params.lambda > params.b * lambda1 {
                    return fail("requires λ ≤ bλ₁");
                }
                match depths.dp_value() {
                    Some(d) => d,
                    None => return fail("requires an estimate of d_p"),
                }
            }
        };
        if !(first.e < d) {
            return fail(&format!("requires E(0) < d, got {} ≥ {d}", first.e));
        }
        if !(first.j < d) {
            return fail(&format!("requires J(u₀) < d, got {} ≥ {d}", first.j));
        }
        let n = row_bundle(params, first);
        let sign = nehari_sign(params, &n, eps);
        let ok = if self.expects_positive() {
            n.is_zero() || sign == Sign::Positive
        } else {
            !n.is_zero() && sign == Sign::Negative
        };
        if !ok {
            return fail(&format!("initial I(u₀) has sign {}", sign.symbol()));
        }
        Ok(d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `I(u)` left the initial sign class.
    NehariSign,
    /// `J(u) ≥ d`.
    LevelExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation<T: Real = f64> {
    pub row: usize,
    pub t: T,
    pub kind: ViolationKind,
    pub i_sign: Sign,
    pub j: T,
}

fn row_bundle<T: Real>(params: &Params<T>, r: &TraceRow<T>) -> NormBundle<T> {
    let l4 = if params.p == T::lit(3.0) { r.lp1 } else { T::zero() };
    NormBundle::new(r.grad_l2sq, r.m, l4, r.lp1)
}

/// Rows where the trajectory leaves the set of `case`.
pub fn monitor_invariance<T: Real>(
    params: &Params<T>,
    trace: &Trace<T>,
    depths: &WellDepths<T>,
    constants: &Constants<T>,
    case: InvarianceCase,
    eps: T,
) -> Result<Vec<Violation<T>>> {
    let first = trace
        .rows
        .first()
        .ok_or_else(|| Error::InvalidParams("empty trace".into()))?;
    let d = case.check_hypotheses(params, constants, depths, first, eps)?;
    let mut out = Vec::new();
    for (row, r) in trace.rows.iter().enumerate() {
        let n = row_bundle(params, r);
        let i_sign = nehari_sign(params, &n, eps);
        let j = evaluate_j(params, &n);
        let sign_ok = if case.expects_positive() {
            n.is_zero() || i_sign == Sign::Positive
        } else {
            i_sign == Sign::Negative
        };
        if !sign_ok {
            out.push(Violation {
                row,
                t: r.t,
                kind: ViolationKind::NehariSign,
                i_sign,
                j,
            });
        }
        if !(j < d) {
            out.push(Violation {
                row,
                t: r.t,
                kind: ViolationKind::LevelExceeded,
                i_sign,
                j,
            });
        }
    }
    Ok(out)
}
