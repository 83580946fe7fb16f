//! Second-order cone feasibility over a box, and monotone bisection.
//!
//! A problem is a set of cones `‖A_j x + b_j‖ ≤ c_jᵀ x + d_j` and bounds
//! `l ≤ x ≤ u`. [`check_feasible`] decides it through the phase-I problem
//!
//! ```text
//! s* = min_{l ≤ x ≤ u} max_j ( ‖A_j x + b_j‖ − c_jᵀ x − d_j )
//! ```
//!
//! and reports `Feasible` iff `s* ≤ tol`, with a witness. Points whose margin
//! is at least `10·tol` on either side are always classified correctly;
//! inside that band either verdict may be returned.

mod barrier;
mod bisect;
pub mod linalg;

pub use bisect::{bisect, BisectionResult, MAX_BRACKET_GROWTH};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// Default feasibility tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// One constraint `‖A x + b‖ ≤ cᵀ x + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocCone<T> {
    /// Rows of `A`, each of length `n`.
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub d: T,
}

impl<T: Scalar> SocCone<T> {
    /// `‖A x + b‖ − cᵀ x − d`; nonpositive when satisfied.
    pub fn violation(&self, x: &[T]) -> T {
        let v: Vec<T> = self.a.iter().zip(&self.b).map(|(row, &b)| dot(row, x) + b).collect();
        norm(&v) - dot(&self.c, x) - self.d
    }

    /// The same cone divided by its largest coefficient magnitude, so that a
    /// violation tolerance acts relative to the cone's own scale.
    pub fn normalized(mut self) -> Self {
        let scale = self
            .a
            .iter()
            .flatten()
            .chain(&self.b)
            .chain(&self.c)
            .chain(std::iter::once(&self.d))
            .fold(T::zero(), |m, &x| m.max(x.abs()));
        if scale > T::zero() && scale.is_finite() {
            let inv = T::one() / scale;
            self.a.iter_mut().flatten().for_each(|x| *x *= inv);
            self.b.iter_mut().for_each(|x| *x *= inv);
            self.c.iter_mut().for_each(|x| *x *= inv);
            self.d *= inv;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocFeasibilityProblem<T> {
    pub n: usize,
    pub cones: Vec<SocCone<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> SocFeasibilityProblem<T> {
    /// A problem over the box `[lower, upper]` with no cones yet.
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Self {
        Self {
            n: lower.len(),
            cones: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn push_cone(&mut self, cone: SocCone<T>) {
        self.cones.push(cone);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::MalformedProblem(format!(
                "box has {}/{} bounds for {n} variables",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for i in 0..n {
            let (l, u) = (self.lower[i], self.upper[i]);
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite(format!("bound of variable {i}")));
            }
            if l > u {
                return Err(Error::MalformedProblem(format!("lower > upper for variable {i}")));
            }
        }
        for (j, cone) in self.cones.iter().enumerate() {
            if cone.a.len() != cone.b.len() {
                return Err(Error::MalformedProblem(format!(
                    "cone {j}: A has {} rows, b has {}",
                    cone.a.len(),
                    cone.b.len()
                )));
            }
            if cone.c.len() != n || cone.a.iter().any(|r| r.len() != n) {
                return Err(Error::MalformedProblem(format!("cone {j}: column count differs from {n}")));
            }
            let finite = cone
                .a
                .iter()
                .flatten()
                .chain(&cone.b)
                .chain(&cone.c)
                .chain(std::iter::once(&cone.d))
                .all(|x| x.is_finite());
            if !finite {
                return Err(Error::NonFinite(format!("cone {j}")));
            }
        }
        Ok(())
    }

    /// Largest cone violation at `x`; `-∞` without cones.
    pub fn max_violation(&self, x: &[T]) -> T {
        self.cones
            .iter()
            .map(|c| c.violation(x))
            .fold(T::neg_infinity(), T::max)
    }

    pub fn in_box(&self, x: &[T]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&l, &u))| l <= v && v <= u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityStatus<T> {
    Feasible(Vec<T>),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict<T> {
    pub status: FeasibilityStatus<T>,
    /// Phase-I value reached: the witness's violation when feasible, the
    /// last iterate's slack otherwise.
    pub slack: T,
}

impl<T: Scalar> FeasibilityVerdict<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, FeasibilityStatus::Feasible(_))
    }

    pub fn witness(&self) -> Option<&[T]> {
        match &self.status {
            FeasibilityStatus::Feasible(x) => Some(x),
            FeasibilityStatus::Infeasible => None,
        }
    }
}

/// Decides whether some box point violates no cone by more than `tol`.
pub fn check_feasible<T: Scalar>(
    problem: &SocFeasibilityProblem<T>,
    tol: T,
) -> Result<FeasibilityVerdict<T>> {
    problem.validate()?;
    if !(tol > T::zero()) {
        return Err(Error::MalformedProblem(format!("tolerance {tol} must be positive")));
    }
    barrier::phase_one(problem, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_cone(a: f64, b: f64, c: f64, d: f64) -> SocCone<f64> {
        SocCone {
            a: vec![vec![a]],
            b: vec![b],
            c: vec![c],
            d,
        }
    }

    #[test]
    fn nonnegativity_cone_is_feasible() {
        let mut p = SocFeasibilityProblem::new(vec![0.0], vec![1.0]);
        p.push_cone(scalar_cone(1.0, 0.0, 1.0, 0.0));
        let v = check_feasible(&p, 1e-9).unwrap();
        let x = v.witness().expect("feasible");
        assert!(x[0] >= 0.0 && x[0] <= 1.0);
        assert!(p.max_violation(x) <= 1e-9);
    }

    #[test]
    fn constant_above_bound_is_infeasible() {
        let mut p = SocFeasibilityProblem::new(vec![0.0], vec![0.5]);
        p.push_cone(scalar_cone(0.0, 1.0, 1.0, 0.0));
        assert!(!check_feasible(&p, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn no_cones_is_feasible() {
        let p = SocFeasibilityProblem::new(vec![0.0, -1.0], vec![1.0, 1.0]);
        assert!(check_feasible(&p, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn fixed_variables_are_evaluated_directly() {
        let mut p = SocFeasibilityProblem::new(vec![0.3], vec![0.3]);
        p.push_cone(scalar_cone(0.0, 0.2, 1.0, 0.0));
        let v = check_feasible(&p, 1e-9).unwrap();
        assert_eq!(v.witness(), Some(&[0.3][..]));
        p.cones[0].b[0] = 0.4;
        assert!(!check_feasible(&p, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn malformed_problems_are_rejected() {
        let mut p = SocFeasibilityProblem::new(vec![0.0], vec![1.0]);
        p.push_cone(SocCone {
            a: vec![vec![1.0, 2.0]],
            b: vec![0.0],
            c: vec![1.0],
            d: 0.0,
        });
        assert!(matches!(check_feasible(&p, 1e-9), Err(Error::MalformedProblem(_))));
        let mut q = SocFeasibilityProblem::new(vec![0.0], vec![1.0]);
        q.push_cone(scalar_cone(f64::NAN, 0.0, 1.0, 0.0));
        assert!(matches!(check_feasible(&q, 1e-9), Err(Error::NonFinite(_))));
        let r = SocFeasibilityProblem::new(vec![1.0], vec![0.0]);
        assert!(check_feasible(&r, 1e-9).is_err());
        assert!(check_feasible(&SocFeasibilityProblem::new(vec![0.0], vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn disk_intersection() {
        // ‖x − (0.5, 0.5)‖ ≤ 0.2 and ‖x − (0.8, 0.5)‖ ≤ 0.2 intersect near x₁ = 0.65.
        let disk = |cx: f64, cy: f64, r: f64| SocCone {
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            b: vec![-cx, -cy],
            c: vec![0.0, 0.0],
            d: r,
        };
        let mut p = SocFeasibilityProblem::new(vec![0.0; 2], vec![1.0; 2]);
        p.push_cone(disk(0.5, 0.5, 0.2));
        p.push_cone(disk(0.8, 0.5, 0.2));
        let v = check_feasible(&p, 1e-9).unwrap();
        let x = v.witness().unwrap();
        assert!(p.max_violation(x) <= 1e-9 && p.in_box(x));
        p.cones[1] = disk(0.95, 0.5, 0.2);
        assert!(!check_feasible(&p, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn deterministic() {
        let mut p = SocFeasibilityProblem::new(vec![0.0; 2], vec![1.0; 2]);
        p.push_cone(SocCone {
            a: vec![vec![0.3, -0.2], vec![0.1, 0.4]],
            b: vec![0.05, -0.1],
            c: vec![0.2, 0.1],
            d: 0.01,
        });
        assert_eq!(check_feasible(&p, 1e-9).unwrap(), check_feasible(&p, 1e-9).unwrap());
    }

    #[test]
    fn single_precision_problem() {
        let mut p = SocFeasibilityProblem::<f32>::new(vec![0.0], vec![2.0]);
        p.push_cone(SocCone {
            a: vec![],
            b: vec![],
            c: vec![1.0],
            d: -1.5,
        });
        let v = check_feasible(&p, 1e-4).unwrap();
        assert!(v.witness().unwrap()[0] >= 1.5 - 1e-4);
        p.cones[0].d = -2.5;
        assert!(!check_feasible(&p, 1e-4).unwrap().is_feasible());
    }
}
