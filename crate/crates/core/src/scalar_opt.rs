//! One-dimensional root finding and minimization helpers.

use crate::real::Real;

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite signs.
pub fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T, rel_tol: T) -> Option<T> {
    let two = T::lit(2.0);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Some(lo);
    }
    if fhi == T::zero() {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    let lo_positive = flo > T::zero();
    for _ in 0..4000 {
        let mid = (lo + hi) / two;
        if mid <= lo.min(hi) || mid >= hi.max(lo) || (hi - lo).abs() <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Some(mid);
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) / two)
}

/// Largest `k > 0` with `f(k) = target`, for `f` eventually below `target`.
///
/// Doubles until `f` drops below `target`, scans a log grid for the last
/// crossing, then bisects.
pub fn largest_crossing<T: Real>(f: impl Fn(T) -> T, target: T, start: T) -> Option<T> {
    let two = T::lit(2.0);
    let mut hi = start.max(T::min_positive_value());
    let mut guard = 0;
    while !(f(hi) < target) {
        hi = hi * two;
        guard += 1;
        if guard > 3000 || !hi.is_finite() {
            return None;
        }
    }
    // keep doubling a few times so the tail is monotone below target
    for _ in 0..4 {
        let next = hi * two;
        if f(next) < target {
            hi = next;
        } else {
            break;
        }
    }
    let n = 4000;
    let lo_bound = hi * T::lit(1e-8);
    let ratio = (hi / lo_bound).ln() / T::count(n);
    let mut last_above: Option<T> = None;
    let mut below_after: Option<T> = None;
    for i in (0..=n).rev() {
        let k = lo_bound * (ratio * T::count(i)).exp();
        if f(k) >= target {
            last_above = Some(k);
            break;
        }
        below_after = Some(k);
    }
    match (last_above, below_after) {
        (Some(a), Some(b)) => bisect(|k| f(k) - target, a, b, T::epsilon()),
        (None, Some(b)) => {
            // f below target on the whole grid; fall back to the origin side
            bisect(|k| f(k) - target, T::zero(), b, T::epsilon())
        }
        _ => None,
    }
}

/// Minimizes a function on `[lo, hi]`: dense scan then golden section.
pub fn minimize_on<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T) -> (T, T) {
    let n = 2000;
    let step = (hi - lo) / T::count(n);
    let mut best = (lo, f(lo));
    for i in 1..=n {
        let x = lo + step * T::count(i);
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    let mut a = (best.0 - step).max(lo);
    let mut b = (best.0 + step).min(hi);
    let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon() * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / T::lit(2.0);
    let fx = f(x);
    if fx < best.1 {
        (x, fx)
    } else {
        best
    }
}
