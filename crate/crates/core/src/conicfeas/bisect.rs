use super::FeasibilityVerdict;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How many times the upper end may be doubled before giving up.
pub const MAX_BRACKET_GROWTH: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult<T> {
    /// Midpoint of the final bracket.
    pub zeta_star: T,
    /// Feasible point found at the final upper end.
    pub witness: Vec<T>,
    /// Midpoint evaluations performed.
    pub iterations: usize,
    pub bracket: (T, T),
}

/// Bisection on a feasibility oracle that is monotone nondecreasing in `ζ`.
///
/// `up` is checked first. If it is infeasible the bracket is moved up
/// (`low ← up`, `up ← 2·up`) at most [`MAX_BRACKET_GROWTH`] times. The search
/// then halves `[low, up]` until its width is at most `eps` and returns the
/// midpoint together with the witness of the feasible upper end.
pub fn bisect<T, F>(mut feas: F, low: T, up: T, eps: T) -> Result<BisectionResult<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<FeasibilityVerdict<T>>,
{
    if !(eps > T::zero()) || !(up >= low) || !low.is_finite() || !up.is_finite() {
        return Err(Error::InvalidBracket(format!("low = {low}, up = {up}, eps = {eps}")));
    }
    let (mut low, mut up) = (low, up);
    let mut witness = None;
    for _ in 0..=MAX_BRACKET_GROWTH {
        if let Some(x) = feas(up)?.witness() {
            witness = Some(x.to_vec());
            break;
        }
        low = up;
        up = if up > T::zero() { up * T::lit(2.0) } else { T::one() };
    }
    let Some(mut witness) = witness else {
        return Err(Error::NoFeasiblePoint { upper: low.as_f64() });
    };
    let mut iterations = 0;
    while up - low > eps {
        let mid = (low + up) / T::lit(2.0);
        if mid <= low || mid >= up {
            break;
        }
        iterations += 1;
        match feas(mid)?.witness() {
            Some(x) => {
                witness = x.to_vec();
                up = mid;
            }
            None => low = mid,
        }
    }
    Ok(BisectionResult {
        zeta_star: (low + up) / T::lit(2.0),
        witness,
        iterations,
        bracket: (low, up),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conicfeas::FeasibilityStatus;

    fn step(threshold: f64) -> impl FnMut(f64) -> Result<FeasibilityVerdict<f64>> {
        move |z| {
            Ok(FeasibilityVerdict {
                status: if z >= threshold {
                    FeasibilityStatus::Feasible(vec![z])
                } else {
                    FeasibilityStatus::Infeasible
                },
                slack: threshold - z,
            })
        }
    }

    #[test]
    fn finds_step_root() {
        let r = bisect(step(0.3), 0.0, 1.0, 1e-3).unwrap();
        assert!((0.2995..=0.3005).contains(&r.zeta_star), "{}", r.zeta_star);
        assert!(r.bracket.1 - r.bracket.0 <= 1e-3);
        assert!(r.witness[0] >= 0.3);
        assert_eq!(r.iterations, 10);
    }

    #[test]
    fn always_feasible_hugs_lower_edge() {
        let r = bisect(step(f64::NEG_INFINITY), 0.2, 1.0, 1e-6).unwrap();
        assert!(r.zeta_star <= 0.2 + 1e-6);
    }

    #[test]
    fn grows_bracket_when_upper_is_infeasible() {
        let r = bisect(step(5.5), 0.0, 1.0, 1e-9).unwrap();
        assert!((r.zeta_star - 5.5).abs() <= 1e-9);
        assert!(matches!(
            bisect(step(f64::INFINITY), 0.0, 1.0, 1e-9),
            Err(Error::NoFeasiblePoint { .. })
        ));
    }

    #[test]
    fn rejects_bad_brackets() {
        assert!(bisect(step(0.5), 1.0, 0.0, 1e-3).is_err());
        assert!(bisect(step(0.5), 0.0, 1.0, 0.0).is_err());
    }
}
