//! Cooperative downlink and uplink power control.
//!
//! The joint design `min ζ s.t. Gap_m ≤ κ_m ζ` decomposes into a downlink
//! problem in `p^dl` and an uplink problem in `(p^ul, c)`. Both are solved by
//! bisection on `ζ` over second-order cone feasibility problems in the
//! amplitudes `q = √p`. For fixed `p^ul` the best receive normalizer has the
//! closed form of [`optimal_normalizer`].

mod baselines;
mod downlink;
mod uplink;

pub use baselines::{full_power_downlink, full_power_uplink, ul_ign_inter, ul_max_inter, worst_case_interference};
pub use downlink::{assemble_downlink, optimize_downlink, optimize_downlink_instance, DownlinkInstance, DownlinkSolution};
pub use uplink::{
    assemble_uplink, interference_power, normalizer_with_interference, optimal_normalizer, optimize_uplink,
    optimize_uplink_instance, UplinkInstance, UplinkSolution,
};

use crate::conicfeas::{FeasibilityStatus, FeasibilityVerdict};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solver settings shared by both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Bisection bracket width on `ζ`.
    pub eps: T,
    /// Cone violation tolerance of the feasibility checks.
    pub tol: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(1e-9),
            tol: T::lit(crate::conicfeas::DEFAULT_TOL),
        }
    }
}

/// Transmit powers, receive normalizers and their budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPlan<T> {
    pub p_dl: Vec<T>,
    pub p_ul: Vec<T>,
    pub c: Vec<T>,
    pub budget_dl: Vec<T>,
    pub budget_ul: Vec<T>,
}

impl<T: Scalar> PowerPlan<T> {
    pub fn validate(&self) -> Result<()> {
        let within = |p: &[T], b: &[T]| p.len() == b.len() && p.iter().zip(b).all(|(&x, &y)| x >= T::zero() && x <= y);
        if !within(&self.p_dl, &self.budget_dl) {
            return Err(Error::InvalidPlan("downlink powers outside [0, budget]".into()));
        }
        if !within(&self.p_ul, &self.budget_ul) {
            return Err(Error::InvalidPlan("uplink powers outside [0, budget]".into()));
        }
        if let Some(&c) = self.c.iter().find(|&&c| !(c > T::zero())) {
            return Err(Error::NonPositiveNormalizer(c.as_f64()));
        }
        Ok(())
    }
}

/// A phase-I verdict that counts as feasible only when `accept` confirms
/// its witness in exact terms; `accept` may return an improved point.
pub(crate) fn certified<T: Scalar>(
    verdict: FeasibilityVerdict<T>,
    accept: impl FnOnce(&[T]) -> Option<Vec<T>>,
) -> FeasibilityVerdict<T> {
    match verdict.status {
        FeasibilityStatus::Feasible(x) => match accept(&x) {
            Some(y) => FeasibilityVerdict {
                status: FeasibilityStatus::Feasible(y),
                slack: verdict.slack,
            },
            None => FeasibilityVerdict {
                status: FeasibilityStatus::Infeasible,
                slack: verdict.slack,
            },
        },
        FeasibilityStatus::Infeasible => FeasibilityVerdict {
            status: FeasibilityStatus::Infeasible,
            slack: verdict.slack,
        },
    }
}

/// Scales `q ≥ 0` by the largest common factor that keeps it in `[0, upper]`.
/// Both link directions only gain from a common amplitude scale-up, since
/// the receiver noise stays fixed.
pub(crate) fn scaled_to_box<T: Scalar>(q: &[T], upper: &[T]) -> Vec<T> {
    let s = q
        .iter()
        .zip(upper)
        .filter(|(&x, _)| x > T::zero())
        .map(|(&x, &u)| u / x)
        .fold(T::infinity(), T::min);
    if !s.is_finite() || !(s > T::one()) {
        return q.to_vec();
    }
    q.iter().zip(upper).map(|(&x, &u)| (x * s).min(u)).collect()
}

/// Relative rounding allowance of the exact constraint checks.
pub(crate) fn rounding<T: Scalar>() -> T {
    T::lit(64.0) * T::epsilon()
}

/// `q²`, clamped to the budget against rounding.
pub(crate) fn squared_within<T: Scalar>(q: &[T], budgets: &[T]) -> Vec<T> {
    q.iter()
        .zip(budgets)
        .map(|(&x, &b)| (x * x).min(b).max(T::zero()))
        .collect()
}
