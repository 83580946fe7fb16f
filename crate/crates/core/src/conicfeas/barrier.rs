//! Barrier method for the phase-I problem.
//!
//! Variables are the free coordinates of `x` (fixed ones, `l = u`, are
//! substituted) and a slack `s`. Each cone contributes
//! `−log((cᵀx + d + s)² − ‖Ax + b‖²)`, each free coordinate
//! `−log(x − l) − log(u − x)`, and the path `min t·s + Φ` is followed with a
//! damped Newton method. The barrier parameter `θ = 2J + 2n` bounds the
//! suboptimality of a centered iterate by `θ / t`.

use super::linalg::{solve_spd, SymMatrix};
use super::{FeasibilityStatus, FeasibilityVerdict, SocFeasibilityProblem};
use crate::error::Result;
use crate::scalar::{dot, norm, Scalar};

const MU: f64 = 10.0;
const MAX_NEWTON: usize = 2000;
const MAX_CENTERING: usize = 80;
const CENTERED: f64 = 1e-10;
/// Newton decrement below which the suboptimality certificate is used.
const CERTIFY_DECREMENT: f64 = 0.5;
const ARMIJO: f64 = 0.25;

/// A cone restricted to the free coordinates.
struct Reduced<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    c: Vec<T>,
    d: T,
    ata: SymMatrix<T>,
}

struct PhaseOne<'a, T> {
    problem: &'a SocFeasibilityProblem<T>,
    free: Vec<usize>,
    base: Vec<T>,
    cones: Vec<Reduced<T>>,
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<'a, T: Scalar> PhaseOne<'a, T> {
    fn new(problem: &'a SocFeasibilityProblem<T>) -> Self {
        let free: Vec<usize> = (0..problem.n).filter(|&i| problem.lower[i] < problem.upper[i]).collect();
        let base: Vec<T> = (0..problem.n)
            .map(|i| if problem.lower[i] < problem.upper[i] { T::zero() } else { problem.lower[i] })
            .collect();
        let nf = free.len();
        let cones = problem
            .cones
            .iter()
            .map(|cone| {
                let a: Vec<Vec<T>> = cone.a.iter().map(|row| free.iter().map(|&i| row[i]).collect()).collect();
                let b = cone.a.iter().zip(&cone.b).map(|(row, &b)| b + dot(row, &base)).collect();
                let c = free.iter().map(|&i| cone.c[i]).collect();
                let d = cone.d + dot(&cone.c, &base);
                let mut ata = SymMatrix::zeros(nf);
                for row in &a {
                    ata.rank_one(T::one(), row);
                }
                Reduced { a, b, c, d, ata }
            })
            .collect();
        Self {
            problem,
            lo: free.iter().map(|&i| problem.lower[i]).collect(),
            hi: free.iter().map(|&i| problem.upper[i]).collect(),
            free,
            base,
            cones,
        }
    }

    fn full_x(&self, xf: &[T]) -> Vec<T> {
        let mut x = self.base.clone();
        for (&i, &v) in self.free.iter().zip(xf) {
            x[i] = v;
        }
        x
    }

    fn theta(&self) -> T {
        T::from_count(2 * self.cones.len() + 2 * self.free.len())
    }

    /// `(u, v)` of every cone at `(x, s)`.
    fn cone_values(&self, xf: &[T], s: T) -> Vec<(T, Vec<T>)> {
        self.cones
            .iter()
            .map(|c| {
                let v = c.a.iter().zip(&c.b).map(|(row, &b)| dot(row, xf) + b).collect();
                (dot(&c.c, xf) + c.d + s, v)
            })
            .collect()
    }

    /// Barrier objective, or `None` outside the domain.
    fn objective(&self, xf: &[T], s: T, t: T) -> Option<T> {
        let mut f = t * s;
        for (u, v) in self.cone_values(xf, s) {
            let nv = norm(&v);
            let (lo, hi) = (u - nv, u + nv);
            if !(lo > T::zero()) {
                return None;
            }
            f -= lo.ln() + hi.ln();
        }
        for ((&x, &l), &h) in xf.iter().zip(&self.lo).zip(&self.hi) {
            let (a, b) = (x - l, h - x);
            if !(a > T::zero() && b > T::zero()) {
                return None;
            }
            f -= a.ln() + b.ln();
        }
        Some(f)
    }

    /// Gradient and Hessian in `z = (x_free, s)`.
    fn derivatives(&self, xf: &[T], s: T, t: T) -> (Vec<T>, SymMatrix<T>) {
        let nf = self.free.len();
        let nz = nf + 1;
        let two = T::lit(2.0);
        let mut g = vec![T::zero(); nz];
        let mut h = SymMatrix::zeros(nz);
        g[nf] = t;
        for (cone, (u, v)) in self.cones.iter().zip(self.cone_values(xf, s)) {
            let nv = norm(&v);
            let dd = (u - nv) * (u + nv);
            // w = (u c − Aᵀ v, u) so that ∇D = 2 w.
            let mut w = vec![T::zero(); nz];
            for i in 0..nf {
                let atv: T = cone.a.iter().zip(&v).map(|(row, &vi)| row[i] * vi).sum();
                w[i] = u * cone.c[i] - atv;
            }
            w[nf] = u;
            for i in 0..nz {
                g[i] -= two * w[i] / dd;
            }
            let k = two / dd;
            for i in 0..nf {
                for j in 0..nf {
                    h.add(i, j, k * (cone.ata.get(i, j) - cone.c[i] * cone.c[j]));
                }
                h.add(i, nf, -k * cone.c[i]);
                h.add(nf, i, -k * cone.c[i]);
            }
            h.add(nf, nf, -k);
            h.rank_one(T::lit(4.0) / (dd * dd), &w);
        }
        for i in 0..nf {
            let (a, b) = (xf[i] - self.lo[i], self.hi[i] - xf[i]);
            g[i] += -T::one() / a + T::one() / b;
            h.add(i, i, T::one() / (a * a) + T::one() / (b * b));
        }
        (g, h)
    }

    fn feasible(&self, xf: &[T]) -> FeasibilityVerdict<T> {
        let x = self.full_x(xf);
        FeasibilityVerdict {
            slack: self.problem.max_violation(&x),
            status: FeasibilityStatus::Feasible(x),
        }
    }
}

pub(super) fn phase_one<T: Scalar>(problem: &SocFeasibilityProblem<T>, tol: T) -> Result<FeasibilityVerdict<T>> {
    let ctx = PhaseOne::new(problem);
    let nf = ctx.free.len();
    let mut xf: Vec<T> = ctx.lo.iter().zip(&ctx.hi).map(|(&l, &h)| (l + h) / T::lit(2.0)).collect();

    if ctx.cones.is_empty() {
        return Ok(FeasibilityVerdict {
            status: FeasibilityStatus::Feasible(ctx.full_x(&xf)),
            slack: T::neg_infinity(),
        });
    }
    let start = ctx.feasible(&xf);
    if start.slack <= T::zero() || (nf == 0 && start.slack <= tol) {
        return Ok(start);
    }
    if nf == 0 {
        return Ok(FeasibilityVerdict {
            status: FeasibilityStatus::Infeasible,
            slack: start.slack,
        });
    }

    let delta = T::one() + start.slack.abs();
    let mut s = start.slack + delta;
    let theta = ctx.theta();
    let mut t = theta / delta;
    let mu = T::lit(MU);
    let mut newton = 0;
    let mut last_decrement = T::infinity();

    loop {
        // Centering.
        for _ in 0..MAX_CENTERING {
            if newton >= MAX_NEWTON {
                break;
            }
            newton += 1;
            let (g, h) = ctx.derivatives(&xf, s, t);
            let Some(step) = solve_spd(&h, &g.iter().map(|&x| -x).collect::<Vec<_>>()) else {
                break;
            };
            let slope = dot(&g, &step);
            last_decrement = (-slope).max(T::zero()).sqrt();
            if -slope / T::lit(2.0) <= T::lit(CENTERED) {
                break;
            }
            let f0 = ctx.objective(&xf, s, t).unwrap_or(T::infinity());
            let mut alpha = T::one();
            let mut moved = false;
            for _ in 0..80 {
                let xn: Vec<T> = xf.iter().zip(&step).map(|(&x, &d)| x + alpha * d).collect();
                let sn = s + alpha * step[nf];
                if let Some(f1) = ctx.objective(&xn, sn, t) {
                    if f1 <= f0 + T::lit(ARMIJO) * alpha * slope {
                        xf = xn;
                        s = sn;
                        moved = true;
                        break;
                    }
                }
                alpha /= T::lit(2.0);
            }
            if !moved {
                break;
            }
            let here = ctx.feasible(&xf);
            if here.slack <= T::zero() {
                return Ok(here);
            }
        }

        let gap = theta / t;
        if last_decrement <= T::lit(CERTIFY_DECREMENT) {
            let bound = (theta + T::lit(2.0) * (T::one() + theta.sqrt()) * last_decrement) / t;
            if s - bound > tol {
                return Ok(FeasibilityVerdict {
                    status: FeasibilityStatus::Infeasible,
                    slack: s,
                });
            }
        }
        if gap <= tol / T::lit(4.0) || newton >= MAX_NEWTON {
            let here = ctx.feasible(&xf);
            if here.slack <= tol {
                return Ok(here);
            }
            return Ok(FeasibilityVerdict {
                status: FeasibilityStatus::Infeasible,
                slack: here.slack,
            });
        }
        t *= mu;
    }
}
