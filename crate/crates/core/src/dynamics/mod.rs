//! Semi-discrete Kirchhoff flow, blow-up diagnostics and invariance monitors.

mod analysis;
mod integrate;

pub use analysis::{
    analyze_blowup, blowup_alpha, bounded_budget, check_vacuum, monitor_invariance, vacuum_radius, Budget,
    BudgetKind, InvarianceCase, VacuumCheck, VacuumRegime, Violation, ViolationKind, CONCAVITY_VIOLATION_FRACTION,
    VACUUM_SLACK,
};
pub use integrate::{avf_force, integrate, step_implicit_midpoint, step_stormer_verlet};

use crate::discretization::Field;
use crate::error::{Error, Result};
use crate::real::Real;

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Midpoint rule with a discrete-gradient force; conserves the energy.
    ImplicitMidpoint,
    StormerVerlet,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImplicitMidpoint => "implicit-midpoint",
            Scheme::StormerVerlet => "stormer-verlet",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "implicit-midpoint" => Some(Scheme::ImplicitMidpoint),
            "stormer-verlet" => Some(Scheme::StormerVerlet),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T: Real = f64> {
    pub dt: T,
    /// Horizon `T`.
    pub horizon: T,
    pub scheme: Scheme,
    pub record_every: usize,
    pub blowup_gradnorm_factor: T,
    /// Smallest admissible step; defaults to `1e−12·dt`.
    pub dt_floor: Option<T>,
    pub energy_drift_tol: T,
    /// Stage fixed-point tolerance (relative, max-norm).
    pub stage_tol: T,
    /// Stage iterations before the step is halved.
    pub stage_max_iter: usize,
}

impl<T: Real> SimConfig<T> {
    pub fn new(dt: T, horizon: T) -> Self {
        SimConfig {
            dt,
            horizon,
            scheme: Scheme::ImplicitMidpoint,
            record_every: 10,
            blowup_gradnorm_factor: T::lit(1e6),
            dt_floor: None,
            energy_drift_tol: T::lit(1e-8),
            stage_tol: T::lit(1e-12),
            stage_max_iter: 50,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.blowup_gradnorm_factor > T::one()) {
            return Err(Error::InvalidParams("blowup_gradnorm_factor must exceed 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams("record_every must be at least 1".into()));
        }
        if self.stage_max_iter == 0 {
            return Err(Error::InvalidParams("stage_max_iter must be at least 1".into()));
        }
        if let Some(f) = self.dt_floor {
            if !(f > T::zero()) {
                return Err(Error::InvalidParams("dt_floor must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn effective_dt_floor(&self) -> T {
        self.dt_floor.unwrap_or(T::lit(1e-12) * self.dt)
    }
}

/// One diagnostic row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow<T: Real = f64> {
    pub t: T,
    /// `‖u_t‖₂²`
    pub ut_l2sq: T,
    /// `‖∇u‖₂²`
    pub grad_l2sq: T,
    /// `M = ‖u‖₂²`
    pub m: T,
    /// `‖u‖_{p+1}^{p+1}`
    pub lp1: T,
    pub j: T,
    pub i: T,
    pub e: T,
    /// `M′ = 2∫u·u_t`
    pub mprime: T,
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaltReason {
    Horizon,
    /// `‖∇u‖₂` exceeded the blow-up factor.
    GradNorm,
    /// Step size fell below the floor.
    StepCollapse,
    /// Non-finite state before any detector fired.
    NonFinite,
}

impl HaltReason {
    pub fn detector_fired(&self) -> bool {
        matches!(self, HaltReason::GradNorm | HaltReason::StepCollapse)
    }

    pub fn name(&self) -> &'static str {
        match self {
            HaltReason::Horizon => "horizon",
            HaltReason::GradNorm => "gradnorm",
            HaltReason::StepCollapse => "dt-collapse",
            HaltReason::NonFinite => "non-finite",
        }
    }
}

/// Diagnostic time series of one integration.
#[derive(Clone, Debug)]
pub struct Trace<T: Real = f64> {
    pub rows: Vec<TraceRow<T>>,
    pub halt: HaltReason,
    /// Final `(u, v)` when the horizon was reached.
    pub terminal: Option<(Field<T>, Field<T>)>,
    pub steps: usize,
    pub dt_halvings: usize,
    pub final_dt: T,
}

impl<T: Real> Trace<T> {
    /// Trace assembled from externally produced rows.
    pub fn from_rows(rows: Vec<TraceRow<T>>, halt: HaltReason) -> Self {
        let final_dt = T::zero();
        Trace {
            rows,
            halt,
            terminal: None,
            steps: 0,
            dt_halvings: 0,
            final_dt,
        }
    }

    pub fn e0(&self) -> Option<T> {
        self.rows.first().map(|r| r.e)
    }

    /// `max |E(t) − E(0)| / max(1, |E(0)|)`.
    pub fn relative_energy_drift(&self) -> T {
        let e0 = match self.e0() {
            Some(e) => e,
            None => return T::zero(),
        };
        let scale = e0.abs().max(T::one());
        self.rows.iter().fold(T::zero(), |m, r| m.max((r.e - e0).abs())) / scale
    }

    /// `max |E(t) − E(0)|`.
    pub fn absolute_energy_drift(&self) -> T {
        let e0 = match self.e0() {
            Some(e) => e,
            None => return T::zero(),
        };
        self.rows.iter().fold(T::zero(), |m, r| m.max((r.e - e0).abs()))
    }

    /// `sup (‖u_t‖₂ + ‖∇u‖₂)` over the rows.
    pub fn sup_norm_sum(&self) -> T {
        self.rows
            .iter()
            .fold(T::zero(), |m, r| m.max(r.ut_l2sq.sqrt() + r.grad_l2sq.sqrt()))
    }

    pub fn final_time(&self) -> T {
        self.rows.last().map(|r| r.t).unwrap_or(T::zero())
    }
}

/// Verdict of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Bounded,
    Blowup,
    Inconclusive,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Bounded => "bounded",
            Outcome::Blowup => "blowup",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupReport<T: Real = f64> {
    pub outcome: Outcome,
    /// Zero crossing of `M^{−α}` extrapolated from the last two rows.
    pub t1_estimate: Option<T>,
    pub alpha_used: T,
    pub concavity_violations: usize,
    /// Rows examined after `t₀`.
    pub samples: usize,
    /// First time with `M′ > 0` among detector-fired traces.
    pub t0: Option<T>,
    pub threshold_hit: HaltReason,
    pub vacuum_ok: Option<bool>,
}
