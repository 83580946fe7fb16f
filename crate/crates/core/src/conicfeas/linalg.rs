//! Small dense symmetric solves for the Newton steps.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
    }

    /// `self += alpha · w wᵀ`.
    pub fn rank_one(&mut self, alpha: T, w: &[T]) {
        for i in 0..self.n {
            let wi = alpha * w[i];
            if wi == T::zero() {
                continue;
            }
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for (r, &wj) in row.iter_mut().zip(w) {
                *r += wi * wj;
            }
        }
    }

    pub fn max_diag(&self) -> T {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(T::zero(), T::max)
    }
}

/// In-place Cholesky factor `L` (lower triangle) of a symmetric positive
/// definite matrix, or `None` if a pivot is not positive.
pub fn cholesky<T: Scalar>(a: &SymMatrix<T>) -> Option<SymMatrix<T>> {
    let n = a.n;
    let mut l = SymMatrix::zeros(n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return None;
        }
        let d = diag.sqrt();
        l.data[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.data[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve<T: Scalar>(l: &SymMatrix<T>, b: &[T]) -> Vec<T> {
    let n = l.n;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    y
}

/// Solves `A x = b` for symmetric positive semidefinite `A`, adding a growing
/// diagonal ridge when the plain factorization fails.
pub fn solve_spd<T: Scalar>(a: &SymMatrix<T>, b: &[T]) -> Option<Vec<T>> {
    if let Some(l) = cholesky(a) {
        return Some(cholesky_solve(&l, b));
    }
    let scale = a.max_diag().max(T::min_positive_value());
    let mut ridge = scale * T::epsilon() * T::lit(16.0);
    for _ in 0..12 {
        let mut shifted = a.clone();
        for i in 0..a.n {
            shifted.add(i, i, ridge);
        }
        if let Some(l) = cholesky(&shifted) {
            return Some(cholesky_solve(&l, b));
        }
        ridge *= T::lit(100.0);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = SymMatrix {
            n: 3,
            data: vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0],
        };
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a.get(i, j) * x_true[j]).sum())
            .collect();
        let x = solve_spd(&a, &b).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_gets_ridge() {
        let a = SymMatrix::<f64> {
            n: 2,
            data: vec![1.0, 1.0, 1.0, 1.0],
        };
        assert!(cholesky(&a).is_none());
        let x = solve_spd(&a, &[2.0, 2.0]).unwrap();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rank_one_update() {
        let mut m = SymMatrix::<f64>::zeros(2);
        m.rank_one(2.0, &[1.0, 3.0]);
        assert_eq!(m.data, vec![2.0, 6.0, 6.0, 18.0]);
    }
}
