//! Uplink: `min ζ` s.t. `min_c E_m^ul(p, c) ≤ κ_m^ul ζ`, `0 ≤ p ≤ P`.
//!
//! With `a_k = |h_k| q_k` for the cell's devices and
//! `N_m = σ_m²/2 + Σ_{k∉m} γ_{m,k}² q_k²`, minimizing over `c` leaves
//! `Σ υ² − (Σ a υ)² / (Σ a² + N)`, so the constraint becomes the cone
//! `√Ξ_m ‖(σ_m/√2, γ_m ∘ q)‖ ≤ ψ_mᵀ q` with `Ξ_m = Σ υ² − κ_m^ul ζ`,
//! `γ_{m,k} = |h_k|` inside the cell, `Re{h_{k,m} h_k^†} / |h_k|` outside, and
//! `ψ_{m,k} = |h_k| υ_k` inside the cell. When `Ξ_m ≤ 0` the constraint holds
//! for every `q` and the cone is dropped.

use super::{certified, rounding, scaled_to_box, squared_within, SolverOptions};
use crate::conicfeas::{bisect, check_feasible, SocCone, SocFeasibilityProblem};
use crate::error::{Error, Result};
use crate::gapmodel::GapProfile;
use crate::netchan::ChannelSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct UplinkInstance<T> {
    /// Device indices of every cell.
    pub cells: Vec<Vec<usize>>,
    /// `|h_k|`.
    pub home_gain: Vec<T>,
    /// `γ_{m,k}` for every cell and device.
    pub gamma: Vec<Vec<T>>,
    /// Constant noise term of every cell, `σ_m²/2` plus any extra constant.
    pub noise: Vec<T>,
    pub upsilon: Vec<T>,
    pub budgets: Vec<T>,
    /// `κ_m^ul = κ_m K_m² / η_m`.
    pub kappa_ul: Vec<T>,
}

impl<T: Scalar> UplinkInstance<T> {
    pub fn new(
        channels: &ChannelSet<T>,
        sigma_ul: &[T],
        upsilon: &[T],
        kappa_ul: Vec<T>,
        budgets: &[T],
    ) -> Result<Self> {
        let (m_cells, k_tot) = (channels.num_cells(), channels.num_devices());
        if sigma_ul.len() != m_cells || kappa_ul.len() != m_cells {
            return Err(Error::DimensionMismatch("uplink inputs differ in cell count".into()));
        }
        if upsilon.len() != k_tot || budgets.len() != k_tot {
            return Err(Error::DimensionMismatch("uplink inputs differ in device count".into()));
        }
        if upsilon.iter().any(|&u| !(u >= T::zero())) {
            return Err(Error::NonFinite("negative or non-finite υ".into()));
        }
        let home_gain: Vec<T> = (0..k_tot).map(|k| channels.ul_home(k).norm()).collect();
        let gamma = (0..m_cells)
            .map(|m| {
                (0..k_tot)
                    .map(|k| {
                        if channels.association[k] == m {
                            home_gain[k]
                        } else {
                            let h = channels.ul_home(k);
                            let g = channels.ul_cross(k, m);
                            (g.re * h.re + g.im * h.im) / home_gain[k]
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            cells: (0..m_cells).map(|m| channels.cell_devices(m)).collect(),
            home_gain,
            gamma,
            noise: sigma_ul.iter().map(|&s| s / T::lit(2.0)).collect(),
            upsilon: upsilon.to_vec(),
            budgets: budgets.to_vec(),
            kappa_ul,
        })
    }

    /// Adds a constant to every cell's noise term.
    pub fn with_extra_noise(mut self, extra: &[T]) -> Self {
        for (n, &e) in self.noise.iter_mut().zip(extra) {
            *n += e;
        }
        self
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// `Σ_{k∈m} υ_k²`: the error with no over-the-air signal.
    pub fn misalignment_ceiling(&self, m: usize) -> T {
        self.cells[m].iter().map(|&k| self.upsilon[k] * self.upsilon[k]).sum()
    }

    /// `Σ υ² / κ^ul` of every cell with a non-constant gradient.
    pub fn ceilings(&self) -> Vec<Option<T>> {
        (0..self.num_cells())
            .map(|m| {
                let s = self.misalignment_ceiling(m);
                (s > T::zero()).then(|| s / self.kappa_ul[m])
            })
            .collect()
    }

    /// Initial upper end `min_m Σ υ² / κ^ul` over active cells.
    pub fn zeta_up(&self) -> Option<T> {
        self.ceilings()
            .into_iter()
            .flatten()
            .filter(|z| z.is_finite())
            .fold(None, |acc: Option<T>, z| Some(acc.map_or(z, |a| a.min(z))))
    }

    /// `min_c E_m^ul` at amplitudes `q` (using this instance's noise term).
    pub fn error_at_best_normalizer(&self, m: usize, q: &[T]) -> T {
        let mut sum_a2 = T::zero();
        let mut sum_au = T::zero();
        let mut n = self.noise[m];
        for k in 0..q.len() {
            let g = self.gamma[m][k] * q[k];
            if self.cells[m].contains(&k) {
                sum_a2 += g * g;
                sum_au += g * self.upsilon[k];
            } else {
                n += g * g;
            }
        }
        let total = sum_a2 + n;
        let ceiling = self.misalignment_ceiling(m);
        if total > T::zero() {
            ceiling - sum_au * sum_au / total
        } else {
            ceiling
        }
    }

    /// Whether `min_c E_m^ul(q) ≤ κ_m^ul ζ` holds in every cell.
    pub fn satisfies(&self, q: &[T], zeta: T) -> bool {
        (0..self.num_cells()).all(|m| {
            let bound = self.kappa_ul[m] * zeta;
            self.misalignment_ceiling(m) <= bound
                || self.error_at_best_normalizer(m, q) <= bound * (T::one() + rounding::<T>())
        })
    }
}

/// The cone program at level `ζ` in `q = √p ∈ [0, √P]`. Devices with
/// `υ_k = 0` send no symbols and are fixed at zero power.
pub fn assemble_uplink<T: Scalar>(inst: &UplinkInstance<T>, zeta: T) -> Result<SocFeasibilityProblem<T>> {
    if !(zeta >= T::zero()) {
        return Err(Error::MalformedProblem(format!("ζ = {zeta} must be nonnegative")));
    }
    let n = inst.upsilon.len();
    let upper = inst
        .budgets
        .iter()
        .zip(&inst.upsilon)
        .map(|(&b, &u)| if u > T::zero() { b.max(T::zero()).sqrt() } else { T::zero() })
        .collect();
    let mut problem = SocFeasibilityProblem::new(vec![T::zero(); n], upper);
    for m in 0..inst.num_cells() {
        let xi = inst.misalignment_ceiling(m) - inst.kappa_ul[m] * zeta;
        if !(xi > T::zero()) {
            continue;
        }
        let root = xi.sqrt();
        let mut a = vec![vec![T::zero(); n]];
        let mut b = vec![root * inst.noise[m].sqrt()];
        for k in 0..n {
            if inst.gamma[m][k] != T::zero() {
                let mut row = vec![T::zero(); n];
                row[k] = root * inst.gamma[m][k];
                a.push(row);
                b.push(T::zero());
            }
        }
        let mut c = vec![T::zero(); n];
        for &k in &inst.cells[m] {
            c[k] = inst.home_gain[k] * inst.upsilon[k];
        }
        problem.push_cone(SocCone { a, b, c, d: T::zero() }.normalized());
    }
    Ok(problem)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UplinkSolution<T> {
    /// Solver-scale `ζ^ul`.
    pub zeta: T,
    pub p: Vec<T>,
    /// Receive normalizers at `p`.
    pub c: Vec<T>,
    pub iterations: usize,
    pub bracket: (T, T),
}

impl<T: Scalar> UplinkSolution<T> {
    /// `ζ₀^ul = L ζ^ul`.
    pub fn zeta0(&self, smoothness: T) -> T {
        smoothness * self.zeta
    }
}

/// Bisection on `ζ` over `[0, min_m Σ υ² / κ^ul]`; the returned `c` is the
/// closed-form normalizer for the instance's noise terms and the actual
/// cross-cell interference at the returned powers.
pub fn optimize_uplink_instance<T: Scalar>(inst: &UplinkInstance<T>, opts: SolverOptions<T>) -> Result<(T, Vec<T>, usize, (T, T))> {
    let Some(up) = inst.zeta_up() else {
        return Ok((T::zero(), vec![T::zero(); inst.upsilon.len()], 0, (T::zero(), T::zero())));
    };
    let upper: Vec<T> = inst
        .budgets
        .iter()
        .zip(&inst.upsilon)
        .map(|(&b, &u)| if u > T::zero() { b.max(T::zero()).sqrt() } else { T::zero() })
        .collect();
    let result = bisect(
        |zeta| {
            let verdict = check_feasible(&assemble_uplink(inst, zeta)?, opts.tol)?;
            Ok(certified(verdict, |q| {
                let q = scaled_to_box(q, &upper);
                inst.satisfies(&q, zeta).then_some(q)
            }))
        },
        T::zero(),
        up,
        opts.eps,
    )?;
    let p = squared_within(&result.witness, &inst.budgets);
    Ok((result.zeta_star, p, result.iterations, result.bracket))
}

/// Cooperative uplink design for the profile `κ` and learning rates `η`.
pub fn optimize_uplink<T: Scalar>(
    channels: &ChannelSet<T>,
    sigma_ul: &[T],
    upsilon: &[T],
    kappa: &GapProfile<T>,
    eta: &[T],
    budgets: &[T],
    opts: SolverOptions<T>,
) -> Result<UplinkSolution<T>> {
    let m_cells = channels.num_cells();
    if kappa.len() != m_cells || eta.len() != m_cells {
        return Err(Error::DimensionMismatch("profile or learning rates differ in cell count".into()));
    }
    let sizes: Vec<usize> = (0..m_cells).map(|m| channels.cell_devices(m).len()).collect();
    let inst = UplinkInstance::new(channels, sigma_ul, upsilon, kappa.kappa_ul(&sizes, eta), budgets)?;
    let (zeta, p, iterations, bracket) = optimize_uplink_instance(&inst, opts)?;
    let c = optimal_normalizer(channels, &p, upsilon, sigma_ul);
    Ok(UplinkSolution {
        zeta,
        p,
        c,
        iterations,
        bracket,
    })
}

/// `Σ_{k'∉m} Re{h_{k',m} h_{k'}^†}² p_{k'} / |h_{k'}|²` for every cell.
pub fn interference_power<T: Scalar>(channels: &ChannelSet<T>, p_ul: &[T]) -> Vec<T> {
    (0..channels.num_cells())
        .map(|m| {
            (0..channels.num_devices())
                .filter(|&k| channels.association[k] != m && p_ul[k] > T::zero())
                .map(|k| {
                    let h = channels.ul_home(k);
                    let g = channels.ul_cross(k, m);
                    let re = g.re * h.re + g.im * h.im;
                    re * re * p_ul[k] / h.norm_sqr()
                })
                .sum()
        })
        .collect()
}

/// `c_m = ((Σ |h_k|² p_k + σ_m²/2 + I_m) / Σ |h_k| √p_k υ_k)²` with a given
/// interference term `I_m`. Cells with a vanishing denominator get `+∞`.
pub fn normalizer_with_interference<T: Scalar>(
    channels: &ChannelSet<T>,
    p_ul: &[T],
    upsilon: &[T],
    sigma_ul: &[T],
    interference: &[T],
) -> Vec<T> {
    (0..channels.num_cells())
        .map(|m| {
            let mut num = sigma_ul[m] / T::lit(2.0) + interference[m];
            let mut den = T::zero();
            for k in channels.cell_devices(m) {
                let a = channels.ul_home(k).norm() * p_ul[k].sqrt();
                num += a * a;
                den += a * upsilon[k];
            }
            if den > T::zero() {
                (num / den).powi(2)
            } else {
                T::infinity()
            }
        })
        .collect()
}

/// Receive normalizers minimizing `E_m^ul` at fixed powers, including the
/// actual interference from the other cells.
pub fn optimal_normalizer<T: Scalar>(channels: &ChannelSet<T>, p_ul: &[T], upsilon: &[T], sigma_ul: &[T]) -> Vec<T> {
    normalizer_with_interference(channels, p_ul, upsilon, sigma_ul, &interference_power(channels, p_ul))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gapmodel::expected_ul_error;
    use num_complex::Complex;

    fn two_by_two() -> ChannelSet<f64> {
        ChannelSet {
            association: vec![0, 0, 1, 1],
            dl: vec![vec![Complex::new(1.0, 0.0); 4]; 2],
            ul: vec![
                vec![Complex::new(0.3, 0.2), Complex::new(0.02, 0.01)],
                vec![Complex::new(-0.1, 0.25), Complex::new(0.01, -0.03)],
                vec![Complex::new(0.04, 0.0), Complex::new(0.2, -0.3)],
                vec![Complex::new(-0.02, 0.02), Complex::new(0.15, 0.1)],
            ],
        }
    }

    #[test]
    fn single_device_alignment() {
        let h = Complex::<f64>::new(0.6, 0.8);
        let ch = ChannelSet {
            association: vec![0],
            dl: vec![vec![h]],
            ul: vec![vec![h]],
        };
        let c = optimal_normalizer(&ch, &[2.0], &[0.5], &[0.0]);
        assert!((c[0] - 2.0 / 0.25).abs() < 1e-12);
        assert!((ch.ul_home(0).norm() * 2f64.sqrt() / c[0].sqrt() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_upsilon_scales_normalizer() {
        let ch = two_by_two();
        let p = [0.5, 1.0, 0.3, 0.8];
        let u = [0.2, 0.1, 0.4, 0.3];
        let u2: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        let c1 = optimal_normalizer(&ch, &p, &u, &[1e-3, 1e-3]);
        let c2 = optimal_normalizer(&ch, &p, &u2, &[1e-3, 1e-3]);
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a / b - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_normalizer_error_matches_closed_form() {
        let ch = two_by_two();
        let p = [0.5, 1.0, 0.3, 0.8];
        let u = [0.2, 0.1, 0.4, 0.3];
        let s = [1e-3, 2e-3];
        let inst = UplinkInstance::new(&ch, &s, &u, vec![1.0; 2], &[1.0; 4]).unwrap();
        let c = optimal_normalizer(&ch, &p, &u, &s);
        let e = expected_ul_error(&ch, &p, &c, &u, &s).unwrap();
        let q: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
        for m in 0..2 {
            assert!((inst.error_at_best_normalizer(m, &q) - e[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn ceiling_level_drops_a_cone() {
        let ch = two_by_two();
        let u = [0.2, 0.1, 0.4, 0.3];
        let inst = UplinkInstance::new(&ch, &[1e-3; 2], &u, vec![2.0, 1.0], &[1.0; 4]).unwrap();
        let up = inst.zeta_up().unwrap();
        assert!((up - 0.05 / 2.0).abs() < 1e-15);
        let prob = assemble_uplink(&inst, up).unwrap();
        assert_eq!(prob.cones.len(), 1);
    }

    #[test]
    fn zero_budgets_give_the_ceiling() {
        let h = Complex::<f64>::new(0.6, 0.8);
        let ch = ChannelSet {
            association: vec![0],
            dl: vec![vec![h]],
            ul: vec![vec![h]],
        };
        let kappa = GapProfile::new(vec![1.0]).unwrap();
        let sol = optimize_uplink(&ch, &[1e-3], &[0.5], &kappa, &[1.0], &[0.0], SolverOptions::default()).unwrap();
        assert!((sol.zeta - 0.25).abs() <= 1e-9);
        assert_eq!(sol.p, vec![0.0]);
        assert!(sol.c[0].is_infinite());
    }

    #[test]
    fn all_constant_gradients_need_no_transmission() {
        let ch = two_by_two();
        let sol = optimize_uplink(&ch, &[1e-3; 2], &[0.0; 4], &GapProfile::uniform(2), &[0.1; 2], &[1.0; 4], SolverOptions::default()).unwrap();
        assert_eq!(sol.zeta, 0.0);
        assert_eq!(sol.p, vec![0.0; 4]);
    }
}
