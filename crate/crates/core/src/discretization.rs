//! Finite-difference Dirichlet Laplacian on intervals, rectangles and boxes.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::functionals::NormBundle;
use crate::real::{abs_pow, axpy, dot, usable_tol, Real};

/// Axis-aligned domain `(0, L_1) x ... x (0, L_d)` with `N_i` interior nodes per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec<T: Real = f64> {
    pub extents: Vec<T>,
    pub resolution: Vec<usize>,
}

impl<T: Real> DomainSpec<T> {
    pub fn new(extents: Vec<T>, resolution: Vec<usize>) -> Self {
        DomainSpec { extents, resolution }
    }

    pub fn interval(length: T, n: usize) -> Self {
        Self::new(vec![length], vec![n])
    }

    pub fn rectangle(lx: T, ly: T, nx: usize, ny: usize) -> Self {
        Self::new(vec![lx, ly], vec![nx, ny])
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.extents.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidDomain(format!("dimension {d} not in 1..=3")));
        }
        if self.resolution.len() != d {
            return Err(Error::InvalidDomain(format!(
                "{} extents but {} resolutions",
                d,
                self.resolution.len()
            )));
        }
        for (i, &l) in self.extents.iter().enumerate() {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::InvalidDomain(format!("extent {i} must be positive, got {l}")));
            }
        }
        for (i, &n) in self.resolution.iter().enumerate() {
            if n < 3 {
                return Err(Error::InvalidDomain(format!("resolution {i} must be at least 3, got {n}")));
            }
        }
        Ok(())
    }
}

/// Identity tag shared by structurally equal discretizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DiscId(u64);

/// Coefficient vector over the interior nodes of one discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T: Real = f64> {
    values: Vec<T>,
    disc: DiscId,
}

impl<T: Real> Field<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn disc_id(&self) -> DiscId {
        self.disc
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: T) -> Field<T> {
        Field {
            values: self.values.iter().map(|&x| c * x).collect(),
            disc: self.disc,
        }
    }

    /// `self + s * other`.
    pub fn plus_scaled(&self, s: T, other: &Field<T>) -> Field<T> {
        let mut values = self.values.clone();
        axpy(s, &other.values, &mut values);
        Field { values, disc: self.disc }
    }

    pub fn neg(&self) -> Field<T> {
        self.scaled(-T::one())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Principal Dirichlet eigenpair of the discrete Laplacian.
#[derive(Clone, Debug)]
pub struct Eigenpair<T: Real = f64> {
    pub lambda1: T,
    pub psi1: Field<T>,
    /// `‖Lψ₁ − λ₁ψ₁‖₂` in the weighted norm, with `‖ψ₁‖₂ = 1`.
    pub residual: T,
    pub iterations: usize,
}

/// Second-order centered differences with mass lumping.
///
/// `L = −Δ_h` is the Kronecker sum of 1D three-point stencils. The stiffness
/// form is `uᵀAu` with `A = diag(w) L`, so that `uᵀAu ≈ ‖∇u‖₂²`.
#[derive(Clone, Debug)]
pub struct Discretization<T: Real = f64> {
    spec: DomainSpec<T>,
    id: DiscId,
    h: Vec<T>,
    inv_h2: Vec<T>,
    strides: Vec<usize>,
    n_nodes: usize,
    weight: T,
    weights: Vec<T>,
    coords: Vec<T>,
}

pub fn build_discretization<T: Real>(spec: DomainSpec<T>) -> Result<Discretization<T>> {
    Discretization::new(spec)
}

impl<T: Real> Discretization<T> {
    pub fn new(spec: DomainSpec<T>) -> Result<Self> {
        spec.validate()?;
        let d = spec.dimension();
        let h: Vec<T> = spec
            .extents
            .iter()
            .zip(&spec.resolution)
            .map(|(&l, &n)| l / T::count(n + 1))
            .collect();
        let inv_h2 = h.iter().map(|&x| T::one() / (x * x)).collect();
        // axis 0 varies fastest
        let mut strides = vec![1usize; d];
        for i in 1..d {
            strides[i] = strides[i - 1] * spec.resolution[i - 1];
        }
        let n_nodes: usize = spec.resolution.iter().product();
        let weight = h.iter().fold(T::one(), |acc, &x| acc * x);
        let mut coords = Vec::with_capacity(n_nodes * d);
        for idx in 0..n_nodes {
            for ax in 0..d {
                let j = (idx / strides[ax]) % spec.resolution[ax];
                coords.push(T::count(j + 1) * h[ax]);
            }
        }
        let mut hasher = DefaultHasher::new();
        std::any::type_name::<T>().hash(&mut hasher);
        spec.resolution.hash(&mut hasher);
        for &l in &spec.extents {
            l.as_f64().to_bits().hash(&mut hasher);
        }
        Ok(Discretization {
            id: DiscId(hasher.finish()),
            h,
            inv_h2,
            strides,
            n_nodes,
            weight,
            weights: vec![weight; n_nodes],
            coords,
            spec,
        })
    }

    pub fn spec(&self) -> &DomainSpec<T> {
        &self.spec
    }

    pub fn id(&self) -> DiscId {
        self.id
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacings(&self) -> &[T] {
        &self.h
    }

    /// Lumped quadrature weights (all equal to the cell volume).
    pub fn mass_weights(&self) -> &[T] {
        &self.weights
    }

    pub fn cell_volume(&self) -> T {
        self.weight
    }

    /// Measure of the domain.
    pub fn volume(&self) -> T {
        self.spec.extents.iter().fold(T::one(), |acc, &x| acc * x)
    }

    /// Coordinates of interior node `i`.
    pub fn node_coords(&self, i: usize) -> &[T] {
        let d = self.dimension();
        &self.coords[i * d..(i + 1) * d]
    }

    /// Largest eigenvalue of `L`, in closed form.
    pub fn laplacian_spectral_radius(&self) -> T {
        let four = T::lit(4.0);
        self.inv_h2
            .iter()
            .zip(&self.spec.resolution)
            .map(|(&ih2, &n)| {
                let s = (T::PI() * T::count(n) / T::count(2 * (n + 1))).sin();
                four * ih2 * s * s
            })
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn field(&self, values: Vec<T>) -> Result<Field<T>> {
        if values.len() != self.n_nodes {
            return Err(Error::Length {
                expected: self.n_nodes,
                got: values.len(),
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Field { values, disc: self.id })
    }

    pub fn zeros(&self) -> Field<T> {
        Field {
            values: vec![T::zero(); self.n_nodes],
            disc: self.id,
        }
    }

    /// Samples `f` at the interior nodes.
    pub fn sample(&self, f: impl Fn(&[T]) -> T) -> Field<T> {
        let values = (0..self.n_nodes).map(|i| f(self.node_coords(i))).collect();
        Field { values, disc: self.id }
    }

    /// Product of sines `Π sin(k_i π x_i / L_i)`, a discrete Dirichlet eigenvector.
    pub fn sine_mode(&self, k: &[usize]) -> Field<T> {
        let ext = self.spec.extents.clone();
        self.sample(|x| {
            x.iter()
                .zip(k)
                .zip(&ext)
                .fold(T::one(), |acc, ((&xi, &ki), &l)| acc * (T::count(ki) * T::PI() * xi / l).sin())
        })
    }

    pub fn check(&self, u: &Field<T>) -> Result<()> {
        if u.disc != self.id {
            return Err(Error::Mismatch);
        }
        if u.values.len() != self.n_nodes {
            return Err(Error::Length {
                expected: self.n_nodes,
                got: u.values.len(),
            });
        }
        Ok(())
    }

    /// Wraps a raw vector produced by an internal kernel.
    pub(crate) fn wrap(&self, values: Vec<T>) -> Field<T> {
        Field { values, disc: self.id }
    }

    /// `out = L u` with `L = −Δ_h`.
    pub fn apply_laplacian(&self, u: &[T], out: &mut [T]) {
        let two = T::lit(2.0);
        let d = self.dimension();
        match d {
            1 => {
                let n = self.n_nodes;
                let c = self.inv_h2[0];
                for i in 0..n {
                    let left = if i > 0 { u[i - 1] } else { T::zero() };
                    let right = if i + 1 < n { u[i + 1] } else { T::zero() };
                    out[i] = c * (two * u[i] - left - right);
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for ax in 0..d {
                        let s = self.strides[ax];
                        let j = (i / s) % self.spec.resolution[ax];
                        let left = if j > 0 { u[i - s] } else { T::zero() };
                        let right = if j + 1 < self.spec.resolution[ax] { u[i + s] } else { T::zero() };
                        acc = acc + self.inv_h2[ax] * (two * u[i] - left - right);
                    }
                    *o = acc;
                }
            }
        }
    }

    pub fn laplacian(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); u.len()];
        self.apply_laplacian(u, &mut out);
        out
    }

    /// `A u = diag(w) L u`.
    pub fn apply_stiffness(&self, u: &[T], out: &mut [T]) {
        self.apply_laplacian(u, out);
        for (o, &w) in out.iter_mut().zip(&self.weights) {
            *o = *o * w;
        }
    }

    /// Dense matrix of `L`, row-major. Intended for small grids.
    pub fn laplacian_matrix(&self) -> Vec<Vec<T>> {
        let n = self.n_nodes;
        let mut cols = vec![vec![T::zero(); n]; n];
        let mut e = vec![T::zero(); n];
        let mut out = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply_laplacian(&e, &mut out);
            for i in 0..n {
                cols[i][j] = out[i];
            }
            e[j] = T::zero();
        }
        cols
    }

    /// Dense matrix of the stiffness `A = diag(w) L`.
    pub fn stiffness_matrix(&self) -> Vec<Vec<T>> {
        let mut m = self.laplacian_matrix();
        for (row, &w) in m.iter_mut().zip(&self.weights) {
            for x in row.iter_mut() {
                *x = *x * w;
            }
        }
        m
    }

    /// `uᵀAu`.
    pub fn grad_sq(&self, u: &[T]) -> T {
        let lu = self.laplacian(u);
        self.weight * dot(u, &lu)
    }

    /// `Σ wᵢ uᵢ vᵢ`.
    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        self.weight * dot(u, v)
    }

    /// `Σ wᵢ |uᵢ|^q`.
    pub fn lq_pow(&self, u: &[T], q: T) -> T {
        self.weight * u.iter().map(|&x| abs_pow(x, q)).sum::<T>()
    }

    /// `(‖∇u‖₂², ‖u‖₂², ‖u‖₄⁴, ‖u‖_{p+1}^{p+1})`.
    pub fn norms(&self, u: &Field<T>, p: T) -> Result<NormBundle<T>> {
        self.check(u)?;
        if !(p > T::one()) {
            return Err(Error::InvalidParams(format!("p must exceed 1, got {p}")));
        }
        Ok(self.norms_unchecked(u.values(), p))
    }

    pub(crate) fn norms_unchecked(&self, u: &[T], p: T) -> NormBundle<T> {
        let w = self.weight;
        let mut m2 = T::zero();
        let mut l4 = T::zero();
        let mut lp1 = T::zero();
        let q = p + T::one();
        for &x in u {
            let x2 = x * x;
            m2 = m2 + x2;
            l4 = l4 + x2 * x2;
            lp1 = lp1 + abs_pow(x, q);
        }
        NormBundle {
            g2: self.grad_sq(u),
            m2: w * m2,
            l4: w * l4,
            lp1: w * lp1,
        }
    }

    /// Solves `(alpha I + beta L) x = rhs` with `alpha ≥ 0`, `beta > 0`.
    pub fn solve_shifted(&self, alpha: T, beta: T, rhs: &[T]) -> Vec<T> {
        if self.dimension() == 1 {
            self.thomas(alpha, beta, rhs)
        } else {
            self.conjugate_gradient(alpha, beta, rhs)
        }
    }

    /// `L⁻¹ rhs`.
    pub fn solve_laplacian(&self, rhs: &[T]) -> Vec<T> {
        self.solve_shifted(T::zero(), T::one(), rhs)
    }

    fn thomas(&self, alpha: T, beta: T, rhs: &[T]) -> Vec<T> {
        let n = self.n_nodes;
        let off = -beta * self.inv_h2[0];
        let diag = alpha + T::lit(2.0) * beta * self.inv_h2[0];
        let mut c = vec![T::zero(); n];
        let mut x = vec![T::zero(); n];
        let mut denom = diag;
        c[0] = off / denom;
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = diag - off * c[i - 1];
            c[i] = off / denom;
            x[i] = (rhs[i] - off * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - c[i] * x[i + 1];
        }
        x
    }

    fn conjugate_gradient(&self, alpha: T, beta: T, rhs: &[T]) -> Vec<T> {
        let n = self.n_nodes;
        let op = |x: &[T], out: &mut [T]| {
            self.apply_laplacian(x, out);
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = alpha * xi + beta * *o;
            }
        };
        let mut x = vec![T::zero(); n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![T::zero(); n];
        let rhs_norm = dot(rhs, rhs).sqrt();
        if rhs_norm == T::zero() {
            return x;
        }
        let target = usable_tol(T::lit(1e-14)) * rhs_norm;
        let mut rr = dot(&r, &r);
        for _ in 0..(20 * n).max(100) {
            if rr.sqrt() <= target {
                break;
            }
            op(&p, &mut ap);
            let step = rr / dot(&p, &ap);
            axpy(step, &p, &mut x);
            axpy(-step, &ap, &mut r);
            let rr_new = dot(&r, &r);
            let beta_cg = rr_new / rr;
            for (pi, &ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta_cg * *pi;
            }
            rr = rr_new;
        }
        x
    }

    /// Smallest eigenpair of `(A, diag w)` by inverse power iteration.
    pub fn principal_eigenpair(&self, tol: T) -> Result<Eigenpair<T>> {
        principal_eigenpair(self, tol)
    }
}

/// Inverse power iteration for the generalized problem `A x = λ diag(w) x`.
pub fn principal_eigenpair<T: Real>(disc: &Discretization<T>, tol: T) -> Result<Eigenpair<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParams("eigen tolerance must be positive".into()));
    }
    let n = disc.n_nodes();
    let normalize = |x: &mut Vec<T>| {
        let s = disc.inner(x, x).sqrt();
        for xi in x.iter_mut() {
            *xi = *xi / s;
        }
    };
    let mut x = vec![T::one(); n];
    normalize(&mut x);
    let max_iter = 20_000;
    let mut residual = T::infinity();
    let mut lambda = T::zero();
    // rounding floor of the residual in the weighted norm
    let floor = T::tol_floor() * disc.laplacian_spectral_radius();
    let mut best = T::infinity();
    let mut stalled = 0usize;
    for it in 1..=max_iter {
        let mut y = disc.solve_laplacian(&x);
        normalize(&mut y);
        let ly = disc.laplacian(&y);
        lambda = disc.inner(&y, &ly);
        let r: Vec<T> = ly.iter().zip(&y).map(|(&a, &b)| a - lambda * b).collect();
        residual = disc.inner(&r, &r).sqrt();
        x = y;
        if residual < best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if residual <= tol || (stalled >= 20 && residual <= floor) {
            if x.iter().map(|&v| v).sum::<T>() < T::zero() {
                for xi in x.iter_mut() {
                    *xi = -*xi;
                }
            }
            return Ok(Eigenpair {
                lambda1: lambda,
                psi1: disc.wrap(x),
                residual,
                iterations: it,
            });
        }
    }
    let _ = lambda;
    Err(Error::NonConvergence {
        what: "inverse power iteration",
        iterations: max_iter,
        residual: residual.as_f64(),
    })
}

/// `λ̂₁ = Σᵢ (4/hᵢ²) sin²(π hᵢ / (2 Lᵢ))`, the exact discrete principal eigenvalue.
pub fn discrete_lambda1_closed_form<T: Real>(spec: &DomainSpec<T>) -> T {
    spec.extents
        .iter()
        .zip(&spec.resolution)
        .map(|(&l, &n)| {
            let h = l / T::count(n + 1);
            let s = (T::PI() * h / (T::lit(2.0) * l)).sin();
            T::lit(4.0) / (h * h) * s * s
        })
        .fold(T::zero(), |a, b| a + b)
}
