//! Downlink: `min ζ` s.t. `E_m^dl(p) ≤ κ_m^dl ζ`, `0 ≤ p ≤ P`.
//!
//! With `ϖ_{m,0}² = Σ_k σ_k² / (2|h_k|²)` and
//! `ϖ_{m,l}² = Σ_k Re{h_k^† h_{l,k}}² / |h_k|⁴` (sums over the devices of
//! cell `m`), `E_m^dl = ν_m² (ϖ_{m,0}² + Σ_l ϖ_{m,l}² p_l) / p_m`, so the
//! constraint is the cone `‖(ϖ_{m,0}, ϖ_{m,l} q_l)‖ ≤ ϑ_m q_m` with
//! `ϑ_m = √(κ_m^dl ζ) / ν_m`.

use super::{certified, rounding, scaled_to_box, squared_within, SolverOptions};
use crate::conicfeas::{bisect, check_feasible, SocCone, SocFeasibilityProblem};
use crate::error::{Error, Result};
use crate::gapmodel::GapProfile;
use crate::netchan::ChannelSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkInstance<T> {
    /// `ϖ_{m,0}²`.
    pub varpi0_sq: Vec<T>,
    /// `ϖ_{m,l}²`, zero on the diagonal.
    pub varpi_sq: Vec<Vec<T>>,
    pub nu: Vec<T>,
    /// `κ_m^dl = κ_m K_m`.
    pub kappa_dl: Vec<T>,
    pub budgets: Vec<T>,
}

impl<T: Scalar> DownlinkInstance<T> {
    pub fn new(
        channels: &ChannelSet<T>,
        sigma_dl: &[T],
        nu: &[T],
        kappa_dl: Vec<T>,
        budgets: &[T],
    ) -> Result<Self> {
        let m_cells = channels.num_cells();
        if nu.len() != m_cells || kappa_dl.len() != m_cells || budgets.len() != m_cells {
            return Err(Error::DimensionMismatch("downlink inputs differ in cell count".into()));
        }
        if sigma_dl.len() != channels.num_devices() {
            return Err(Error::DimensionMismatch("one noise power per device expected".into()));
        }
        if let Some(m) = nu.iter().position(|&v| !(v > T::zero())) {
            return Err(Error::NonPositiveModelStd { cell: m, nu: nu[m].as_f64() });
        }
        let mut varpi0_sq = vec![T::zero(); m_cells];
        let mut varpi_sq = vec![vec![T::zero(); m_cells]; m_cells];
        for k in 0..channels.num_devices() {
            let m = channels.association[k];
            let h = channels.dl_home(k);
            let h2 = h.norm_sqr();
            varpi0_sq[m] += sigma_dl[k] / (T::lit(2.0) * h2);
            for l in (0..m_cells).filter(|&l| l != m) {
                let g = channels.dl_cross(l, k);
                let re = h.re * g.re + h.im * g.im;
                varpi_sq[m][l] += re * re / (h2 * h2);
            }
        }
        Ok(Self {
            varpi0_sq,
            varpi_sq,
            nu: nu.to_vec(),
            kappa_dl,
            budgets: budgets.to_vec(),
        })
    }

    pub fn num_cells(&self) -> usize {
        self.nu.len()
    }

    /// Whether `E_m^dl(p) ≤ κ_m^dl ζ` holds in every cell, in the product
    /// form that stays finite at `p_m = 0`.
    pub fn satisfies(&self, p: &[T], zeta: T) -> bool {
        (0..self.num_cells()).all(|m| {
            let num = self.varpi0_sq[m] + (0..self.num_cells()).map(|l| self.varpi_sq[m][l] * p[l]).sum::<T>();
            self.nu[m] * self.nu[m] * num <= self.kappa_dl[m] * zeta * p[m] * (T::one() + rounding::<T>())
        })
    }

    /// `E_m^dl` at powers `p`, `+∞` where `p_m = 0`.
    pub fn expected_error(&self, p: &[T]) -> Vec<T> {
        (0..self.num_cells())
            .map(|m| {
                if !(p[m] > T::zero()) {
                    return T::infinity();
                }
                let num = self.varpi0_sq[m] + (0..self.num_cells()).map(|l| self.varpi_sq[m][l] * p[l]).sum::<T>();
                self.nu[m] * self.nu[m] * num / p[m]
            })
            .collect()
    }
}

/// The cone program at level `ζ` in `q = √p ∈ [0, √P]`.
pub fn assemble_downlink<T: Scalar>(inst: &DownlinkInstance<T>, zeta: T) -> Result<SocFeasibilityProblem<T>> {
    if !(zeta >= T::zero()) {
        return Err(Error::MalformedProblem(format!("ζ = {zeta} must be nonnegative")));
    }
    if let Some(m) = inst.nu.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::NonPositiveModelStd { cell: m, nu: inst.nu[m].as_f64() });
    }
    let n = inst.num_cells();
    let mut problem = SocFeasibilityProblem::new(
        vec![T::zero(); n],
        inst.budgets.iter().map(|&b| b.max(T::zero()).sqrt()).collect(),
    );
    for m in 0..n {
        let mut a = vec![vec![T::zero(); n]];
        let mut b = vec![inst.varpi0_sq[m].sqrt()];
        for l in (0..n).filter(|&l| l != m) {
            let mut row = vec![T::zero(); n];
            row[l] = inst.varpi_sq[m][l].sqrt();
            a.push(row);
            b.push(T::zero());
        }
        let mut c = vec![T::zero(); n];
        c[m] = (inst.kappa_dl[m] * zeta).sqrt() / inst.nu[m];
        problem.push_cone(SocCone { a, b, c, d: T::zero() }.normalized());
    }
    Ok(problem)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkSolution<T> {
    /// Solver-scale `ζ^dl`.
    pub zeta: T,
    /// BS powers; zero for cells whose model is constant.
    pub p: Vec<T>,
    pub iterations: usize,
    pub bracket: (T, T),
}

impl<T: Scalar> DownlinkSolution<T> {
    /// `ζ₀^dl = L² ζ^dl`.
    pub fn zeta0(&self, smoothness: T) -> T {
        smoothness * smoothness * self.zeta
    }
}

/// Bisection on `ζ` starting from the bracket `[0, 1]`.
pub fn optimize_downlink_instance<T: Scalar>(
    inst: &DownlinkInstance<T>,
    opts: SolverOptions<T>,
) -> Result<DownlinkSolution<T>> {
    let upper: Vec<T> = inst.budgets.iter().map(|&b| b.max(T::zero()).sqrt()).collect();
    let result = bisect(
        |zeta| {
            let verdict = check_feasible(&assemble_downlink(inst, zeta)?, opts.tol)?;
            Ok(certified(verdict, |q| {
                let q = scaled_to_box(q, &upper);
                inst.satisfies(&squared_within(&q, &inst.budgets), zeta).then_some(q)
            }))
        },
        T::zero(),
        T::one(),
        opts.eps,
    )?;
    Ok(DownlinkSolution {
        zeta: result.zeta_star,
        p: squared_within(&result.witness, &inst.budgets),
        iterations: result.iterations,
        bracket: result.bracket,
    })
}

/// Cooperative downlink design for the profile `κ`.
///
/// Cells whose model is constant (`ν_m = 0`) need no over-the-air
/// transmission: they get zero power and are left out of the program.
pub fn optimize_downlink<T: Scalar>(
    channels: &ChannelSet<T>,
    sigma_dl: &[T],
    nu: &[T],
    kappa: &GapProfile<T>,
    budgets: &[T],
    opts: SolverOptions<T>,
) -> Result<DownlinkSolution<T>> {
    let m_cells = channels.num_cells();
    if kappa.len() != m_cells || nu.len() != m_cells || budgets.len() != m_cells {
        return Err(Error::DimensionMismatch("downlink inputs differ in cell count".into()));
    }
    if let Some(m) = nu.iter().position(|&v| !(v >= T::zero())) {
        return Err(Error::NonPositiveModelStd { cell: m, nu: nu[m].as_f64() });
    }
    let active: Vec<usize> = (0..m_cells).filter(|&m| nu[m] > T::zero()).collect();
    if active.is_empty() {
        return Ok(DownlinkSolution {
            zeta: T::zero(),
            p: vec![T::zero(); m_cells],
            iterations: 0,
            bracket: (T::zero(), T::zero()),
        });
    }
    let sizes: Vec<usize> = (0..m_cells).map(|m| channels.cell_devices(m).len()).collect();
    let kappa_dl = kappa.kappa_dl(&sizes);
    let sub = channels.restrict(&active);
    let sigma_sub: Vec<T> = active
        .iter()
        .flat_map(|&m| channels.cell_devices(m).into_iter().map(|k| sigma_dl[k]))
        .collect();
    let pick = |v: &[T]| active.iter().map(|&m| v[m]).collect::<Vec<_>>();
    let inst = DownlinkInstance::new(&sub, &sigma_sub, &pick(nu), pick(&kappa_dl), &pick(budgets))?;
    let sol = optimize_downlink_instance(&inst, opts)?;
    let mut p = vec![T::zero(); m_cells];
    for (i, &m) in active.iter().enumerate() {
        p[m] = sol.p[i];
    }
    Ok(DownlinkSolution { p, ..sol })
}
