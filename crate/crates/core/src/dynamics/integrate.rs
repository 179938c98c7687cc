use super::{analyze_blowup, BlowupReport, HaltReason, Outcome, Scheme, SimConfig, Trace, TraceRow};
use crate::discretization::{Discretization, Field};
use crate::error::{Error, Result};
use crate::functionals::{evaluate_i, evaluate_j, Params};
use crate::real::{abs_pow, Real};

/// `f(x) = |x|^{p−1}x`.
#[inline]
fn power_force<T: Real>(x: T, p: T) -> T {
    abs_pow(x, p - T::one()) * x
}

/// `∫₀¹ f(x + s(y − x)) ds`, the averaged force between two states.
///
/// Its product with `y − x` equals `F(y) − F(x)` for `F(x) = |x|^{p+1}/(p+1)`.
#[inline]
pub fn avf_force<T: Real>(x: T, y: T, p: T) -> T {
    let d = y - x;
    if d == T::zero() {
        return power_force(x, p);
    }
    if p == T::lit(3.0) {
        return (x * x * x + x * x * y + x * y * y + y * y * y) / T::lit(4.0);
    }
    let scale = x.abs().max(y.abs());
    let same_sign = (x > T::zero() && y > T::zero()) || (x < T::zero() && y < T::zero());
    if same_sign && d.abs() < T::lit(1e-2) * scale {
        // four-point Gauss-Legendre on [x, y]
        let nodes = [
            (T::lit(0.069_431_844_202_973_71), T::lit(0.173_927_422_568_726_93)),
            (T::lit(0.330_009_478_207_571_87), T::lit(0.326_072_577_431_273_07)),
            (T::lit(0.669_990_521_792_428_1), T::lit(0.326_072_577_431_273_07)),
            (T::lit(0.930_568_155_797_026_3), T::lit(0.173_927_422_568_726_93)),
        ];
        nodes
            .iter()
            .map(|&(s, w)| w * power_force(x + s * d, p))
            .fold(T::zero(), |a, b| a + b)
    } else {
        let q = p + T::one();
        (abs_pow(y, q) - abs_pow(x, q)) / (q * d)
    }
}

/// One midpoint step with the discrete-gradient force.
///
/// Solves `u′ + α c̄ L u′ = u + dt·v − α c̄ L u + αλ(u + u′) + 2α F̄(u, u′)` with
/// `α = dt²/4` and `c̄ = a(g2 + g2′)/2 + b` by a fixed point that treats the
/// stiffness linearly. Returns `None` when the stage iteration does not settle.
pub fn step_implicit_midpoint<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    u: &[T],
    v: &[T],
    dt: T,
    tol: T,
    max_iter: usize,
) -> Option<(Vec<T>, Vec<T>)> {
    let n = u.len();
    let two = T::lit(2.0);
    let alpha = dt * dt / T::lit(4.0);
    let lu = disc.laplacian(u);
    let g2 = disc.cell_volume() * u.iter().zip(&lu).map(|(&a, &b)| a * b).sum::<T>();
    // Störmer–Verlet predictor
    let coef0 = params.a * g2 + params.b;
    let mut next: Vec<T> = (0..n)
        .map(|i| {
            let acc = -coef0 * lu[i] + params.lambda * u[i] + power_force(u[i], params.p);
            u[i] + dt * v[i] + dt * dt / two * acc
        })
        .collect();
    let mut rhs = vec![T::zero(); n];
    // once settled, a few more sweeps while the update keeps shrinking
    let mut settled_at: Option<usize> = None;
    let mut last = T::infinity();
    for it in 0..max_iter + 3 {
        if settled_at.is_none() && it >= max_iter {
            return None;
        }
        let g2n = disc.grad_sq(&next);
        let cbar = params.a * (g2 + g2n) / two + params.b;
        for i in 0..n {
            rhs[i] = u[i] + dt * v[i] - alpha * cbar * lu[i]
                + alpha * params.lambda * (u[i] + next[i])
                + two * alpha * avf_force(u[i], next[i], params.p);
        }
        let cand = disc.solve_shifted(T::one(), alpha * cbar, &rhs);
        let mut diff = T::zero();
        let mut size = T::zero();
        for i in 0..n {
            diff = diff.max((cand[i] - next[i]).abs());
            size = size.max(cand[i].abs());
        }
        if !(diff.is_finite() && size.is_finite()) {
            return None;
        }
        let shrinking = diff < last;
        if shrinking {
            next = cand;
        }
        last = diff;
        if settled_at.is_none() && diff <= tol * size.max(T::min_positive_value()) {
            settled_at = Some(it);
        }
        if let Some(s) = settled_at {
            if !shrinking || diff == T::zero() || it >= s + 3 {
                break;
            }
        }
    }
    settled_at?;
    let vn: Vec<T> = (0..n).map(|i| two * (next[i] - u[i]) / dt - v[i]).collect();
    if vn.iter().all(|x| x.is_finite()) {
        Some((next, vn))
    } else {
        None
    }
}

fn acceleration<T: Real>(params: &Params<T>, disc: &Discretization<T>, u: &[T]) -> Vec<T> {
    let lu = disc.laplacian(u);
    let g2 = disc.cell_volume() * u.iter().zip(&lu).map(|(&a, &b)| a * b).sum::<T>();
    let coef = params.a * g2 + params.b;
    u.iter()
        .zip(&lu)
        .map(|(&x, &l)| -coef * l + params.lambda * x + power_force(x, params.p))
        .collect()
}

/// One Störmer–Verlet step. Returns `None` on a non-finite state.
pub fn step_stormer_verlet<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    u: &[T],
    v: &[T],
    dt: T,
) -> Option<(Vec<T>, Vec<T>)> {
    let half = dt / T::lit(2.0);
    let a0 = acceleration(params, disc, u);
    let vh: Vec<T> = v.iter().zip(&a0).map(|(&x, &a)| x + half * a).collect();
    let un: Vec<T> = u.iter().zip(&vh).map(|(&x, &w)| x + dt * w).collect();
    let a1 = acceleration(params, disc, &un);
    let vn: Vec<T> = vh.iter().zip(&a1).map(|(&x, &a)| x + half * a).collect();
    if un.iter().chain(&vn).all(|x| x.is_finite()) {
        Some((un, vn))
    } else {
        None
    }
}

fn row<T: Real>(params: &Params<T>, disc: &Discretization<T>, t: T, u: &[T], v: &[T]) -> TraceRow<T> {
    let n = disc.norms_unchecked(u, params.p);
    let ut = disc.inner(v, v);
    let j = evaluate_j(params, &n);
    TraceRow {
        t,
        ut_l2sq: ut,
        grad_l2sq: n.g2,
        m: n.m2,
        lp1: n.lp1,
        j,
        i: evaluate_i(params, &n),
        e: T::lit(0.5) * ut + j,
        mprime: T::lit(2.0) * disc.inner(u, v),
    }
}

/// Integrates `u″ = −(a·uᵀAu + b)Lu + λu + |u|^{p−1}u` from `(u0, u1)`.
pub fn integrate<T: Real>(
    params: &Params<T>,
    disc: &Discretization<T>,
    u0: &Field<T>,
    u1: &Field<T>,
    cfg: &SimConfig<T>,
) -> Result<(Trace<T>, BlowupReport<T>)> {
    params.validate()?;
    cfg.validate()?;
    disc.check(u0)?;
    disc.check(u1)?;
    let mut u = u0.values().to_vec();
    let mut v = u1.values().to_vec();
    let mut t = T::zero();
    let mut dt = cfg.dt;
    let floor = cfg.effective_dt_floor();
    let g0 = disc.grad_sq(&u).sqrt();
    let grad_cap = cfg.blowup_gradnorm_factor * g0.max(T::one());
    let mut rows = vec![row(params, disc, t, &u, &v)];
    let mut steps = 0usize;
    let mut halvings = 0usize;
    let end = cfg.horizon;
    let tiny = T::lit(1e-6) * cfg.dt;
    let halt = loop {
        if t >= end - tiny {
            break HaltReason::Horizon;
        }
        let remaining = end - t;
        // absorb rounding remainders into the last step
        let h = if remaining <= dt + tiny { remaining } else { dt };
        let stepped = match cfg.scheme {
            Scheme::ImplicitMidpoint => {
                step_implicit_midpoint(params, disc, &u, &v, h, cfg.stage_tol, cfg.stage_max_iter)
            }
            Scheme::StormerVerlet => step_stormer_verlet(params, disc, &u, &v, h),
        };
        match stepped {
            Some((un, vn)) => {
                u = un;
                v = vn;
                t = if h == remaining { end } else { t + h };
                steps += 1;
                let g = disc.grad_sq(&u);
                if !g.is_finite() {
                    break HaltReason::NonFinite;
                }
                if g.sqrt() > grad_cap {
                    rows.push(row(params, disc, t, &u, &v));
                    break HaltReason::GradNorm;
                }
                if steps % cfg.record_every == 0 {
                    rows.push(row(params, disc, t, &u, &v));
                }
            }
            None => {
                dt = dt / T::lit(2.0);
                halvings += 1;
                if dt < floor {
                    rows.push(row(params, disc, t, &u, &v));
                    break HaltReason::StepCollapse;
                }
            }
        }
    };
    if halt == HaltReason::Horizon && rows.last().map(|r| r.t) != Some(t) {
        rows.push(row(params, disc, t, &u, &v));
    }
    let terminal = if halt == HaltReason::Horizon {
        Some((disc.wrap(u), disc.wrap(v)))
    } else {
        None
    };
    let trace = Trace {
        rows,
        halt,
        terminal,
        steps,
        dt_halvings: halvings,
        final_dt: dt,
    };
    let report = if trace.rows.len() >= 10 {
        analyze_blowup(&trace, params.p)?
    } else {
        let outcome = match halt {
            HaltReason::Horizon => Outcome::Bounded,
            _ => Outcome::Inconclusive,
        };
        BlowupReport {
            outcome,
            t1_estimate: None,
            alpha_used: super::blowup_alpha(params.p),
            concavity_violations: 0,
            samples: 0,
            t0: None,
            threshold_hit: halt,
            vacuum_ok: None,
        }
    };
    if trace.rows.iter().any(|r| !r.e.is_finite()) && halt != HaltReason::NonFinite && !halt.detector_fired() {
        return Err(Error::NonFinite);
    }
    Ok((trace, report))
}
