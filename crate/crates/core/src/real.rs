use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type the numerics are generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Smallest tolerance worth asking an iterative method for.
    fn tol_floor() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Clamps a requested tolerance to what the scalar type can resolve.
pub fn usable_tol<T: Real>(tol: T) -> T {
    tol.max(T::tol_floor())
}

/// `|x|^e`, using integer powers when `e` is integral.
#[inline]
pub fn abs_pow<T: Real>(x: T, e: T) -> T {
    let ax = x.abs();
    if e == e.round() && e.abs() <= T::lit(16.0) {
        ax.powi(e.to_i32().unwrap_or(0))
    } else if ax == T::zero() {
        T::zero()
    } else {
        ax.powf(e)
    }
}

/// Dot product.
pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// `y += s * x`.
pub fn axpy<T: Real>(s: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + s * xi;
    }
}
