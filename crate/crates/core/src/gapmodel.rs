//! Closed-form transmission errors and error-induced gaps.
//!
//! For cell `m` with `K_m` devices, smoothness `L` and learning rate `η_m`:
//!
//! ```text
//! E_m^dl = Σ_k ν_m² ( Σ_{l≠m} Re{h_k^† h_{l,k}}² p_l / (|h_k|⁴ p_m) + σ_k² / (2 |h_k|² p_m) )
//! E_m^ul = Σ_{k∈m} (|h_k| √p_k / √c_m − υ_k)²
//!        + Σ_{k'∉m} Re{h_{k',m} h_{k'}^†}² p_{k'} / (|h_{k'}|² c_m) + σ_m² / (2 c_m)
//! Gap_m  = L² E_m^dl / K_m + L η_m E_m^ul / K_m²
//! ```
//!
//! The optimizers work with `κ_m^dl = κ_m K_m`, `ζ^dl = ζ₀^dl / L²` and
//! `κ_m^ul = κ_m K_m² / η_m`, `ζ^ul = ζ₀^ul / L`, so that
//! `Gap_m^dl ≤ κ_m ζ₀^dl ⇔ E_m^dl ≤ κ_m^dl ζ^dl` (and likewise uplink) and
//! `L` drops out of the power-control problems.

use crate::error::{Error, Result};
use crate::netchan::ChannelSet;
use crate::scalar::Scalar;

/// `Re{a^† b}` for complex gains.
fn re_conj_mul<T: Scalar>(a: num_complex::Complex<T>, b: num_complex::Complex<T>) -> T {
    a.re * b.re + a.im * b.im
}

/// Expected squared downlink error of device `k`, per dimension.
///
/// Returns `+∞` when the home BS power is zero while `ν > 0`.
pub fn dl_error_device<T: Scalar>(
    channels: &ChannelSet<T>,
    k: usize,
    p_dl: &[T],
    nu: T,
    sigma2: T,
) -> T {
    if nu == T::zero() {
        return T::zero();
    }
    let m = channels.association[k];
    if !(p_dl[m] > T::zero()) {
        return T::infinity();
    }
    let h = channels.dl_home(k);
    let h2 = h.norm_sqr();
    let interference: T = (0..channels.num_cells())
        .filter(|&l| l != m)
        .map(|l| re_conj_mul(h, channels.dl_cross(l, k)).powi(2) * p_dl[l])
        .sum();
    nu * nu * (interference / (h2 * h2 * p_dl[m]) + sigma2 / (T::lit(2.0) * h2 * p_dl[m]))
}

/// `E_m^dl` for every cell. `nu[m] = 0` gives 0; `p_dl[m] = 0` with
/// `nu[m] > 0` gives the `+∞` sentinel.
pub fn expected_dl_error<T: Scalar>(
    channels: &ChannelSet<T>,
    p_dl: &[T],
    nu: &[T],
    sigma_dl: &[T],
) -> Vec<T> {
    let mut e = vec![T::zero(); channels.num_cells()];
    for k in 0..channels.num_devices() {
        let m = channels.association[k];
        e[m] += dl_error_device(channels, k, p_dl, nu[m], sigma_dl[k]);
    }
    e
}

/// `E_m^ul` split into its three sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkErrorParts<T> {
    pub misalignment: T,
    pub interference: T,
    pub noise: T,
}

impl<T: Scalar> UplinkErrorParts<T> {
    pub fn total(&self) -> T {
        self.misalignment + self.interference + self.noise
    }
}

/// Per-cell decomposition of `E_m^ul`. `c_m = +∞` is accepted and means the
/// over-the-air signal is discarded, leaving `Σ υ_k²`.
pub fn ul_error_parts<T: Scalar>(
    channels: &ChannelSet<T>,
    p_ul: &[T],
    c: &[T],
    upsilon: &[T],
    sigma_ul: &[T],
) -> Result<Vec<UplinkErrorParts<T>>> {
    if let Some(&bad) = c.iter().find(|&&x| !(x > T::zero())) {
        return Err(Error::NonPositiveNormalizer(bad.as_f64()));
    }
    let mut out = Vec::with_capacity(channels.num_cells());
    for m in 0..channels.num_cells() {
        let inv_sqrt_c = T::one() / c[m].sqrt();
        let inv_c = inv_sqrt_c * inv_sqrt_c;
        let mut parts = UplinkErrorParts {
            misalignment: T::zero(),
            interference: T::zero(),
            noise: sigma_ul[m] / T::lit(2.0) * inv_c,
        };
        for k in 0..channels.num_devices() {
            let h = channels.ul_home(k);
            if channels.association[k] == m {
                let a = h.norm() * p_ul[k].sqrt() * inv_sqrt_c;
                parts.misalignment += (a - upsilon[k]).powi(2);
            } else if p_ul[k] > T::zero() {
                let g = re_conj_mul(h, channels.ul_cross(k, m));
                parts.interference += g * g * p_ul[k] / h.norm_sqr() * inv_c;
            }
        }
        out.push(parts);
    }
    Ok(out)
}

/// `E_m^ul` for every cell.
pub fn expected_ul_error<T: Scalar>(
    channels: &ChannelSet<T>,
    p_ul: &[T],
    c: &[T],
    upsilon: &[T],
    sigma_ul: &[T],
) -> Result<Vec<T>> {
    Ok(ul_error_parts(channels, p_ul, c, upsilon, sigma_ul)?
        .iter()
        .map(UplinkErrorParts::total)
        .collect())
}

/// Profiling vector `κ`: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile<T> {
    kappa: Vec<T>,
}

impl<T: Scalar> GapProfile<T> {
    pub fn new(kappa: Vec<T>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::InvalidProfile("empty profile".into()));
        }
        if kappa.iter().any(|&k| !(k >= T::zero()) || !k.is_finite()) {
            return Err(Error::InvalidProfile(format!("negative or non-finite weight in {kappa:?}")));
        }
        let sum: f64 = kappa.iter().map(|k| k.as_f64()).sum();
        if (sum - 1.0).abs() > 1e-12_f64.max(8.0 * T::epsilon().as_f64()) {
            return Err(Error::InvalidProfile(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { kappa })
    }

    /// Equal weights `1/M`.
    pub fn uniform(cells: usize) -> Self {
        Self {
            kappa: vec![T::one() / T::from_count(cells); cells],
        }
    }

    /// `[κ̄, 1 − κ̄]`.
    pub fn two_cell(kappa_bar: T) -> Result<Self> {
        Self::new(vec![kappa_bar, T::one() - kappa_bar])
    }

    pub fn weights(&self) -> &[T] {
        &self.kappa
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `κ_m^dl = κ_m K_m`.
    pub fn kappa_dl(&self, devices_per_cell: &[usize]) -> Vec<T> {
        self.kappa
            .iter()
            .zip(devices_per_cell)
            .map(|(&k, &n)| k * T::from_count(n))
            .collect()
    }

    /// `κ_m^ul = κ_m K_m² / η_m`.
    pub fn kappa_ul(&self, devices_per_cell: &[usize], eta: &[T]) -> Vec<T> {
        self.kappa
            .iter()
            .zip(devices_per_cell)
            .zip(eta)
            .map(|((&k, &n), &e)| k * T::from_count(n * n) / e)
            .collect()
    }
}

/// Expected errors and the resulting gaps of every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTerms<T> {
    pub e_dl: Vec<T>,
    pub e_ul: Vec<T>,
    pub gap_dl: Vec<T>,
    pub gap_ul: Vec<T>,
    pub gap: Vec<T>,
    pub smoothness: T,
    pub eta: Vec<T>,
}

impl<T: Scalar> GapTerms<T> {
    pub fn new(
        e_dl: Vec<T>,
        e_ul: Vec<T>,
        devices_per_cell: &[usize],
        smoothness: T,
        eta: Vec<T>,
    ) -> Result<Self> {
        let m = e_dl.len();
        if e_ul.len() != m || devices_per_cell.len() != m || eta.len() != m {
            return Err(Error::DimensionMismatch("gap inputs differ in cell count".into()));
        }
        let gap_dl: Vec<T> = e_dl
            .iter()
            .zip(devices_per_cell)
            .map(|(&e, &k)| smoothness * smoothness * e / T::from_count(k))
            .collect();
        let gap_ul: Vec<T> = e_ul
            .iter()
            .zip(devices_per_cell)
            .zip(&eta)
            .map(|((&e, &k), &h)| smoothness * h * e / T::from_count(k * k))
            .collect();
        let gap = gap_dl.iter().zip(&gap_ul).map(|(&a, &b)| a + b).collect();
        Ok(Self {
            e_dl,
            e_ul,
            gap_dl,
            gap_ul,
            gap,
            smoothness,
            eta,
        })
    }
}

/// `Gap_m = Gap_m^dl + Gap_m^ul` of every cell.
pub fn gap_tuple<T: Scalar>(terms: &GapTerms<T>) -> Vec<T> {
    terms.gap.clone()
}

/// A point `Δ = κ ζ` of the gap region.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTuple<T> {
    pub delta: Vec<T>,
    pub zeta: T,
}

impl<T: Scalar> GapTuple<T> {
    pub fn from_profile(profile: &GapProfile<T>, zeta: T) -> Self {
        Self {
            delta: profile.weights().iter().map(|&k| k * zeta).collect(),
            zeta,
        }
    }

    /// True if `self` is at least as good as `other` in every cell and better
    /// by more than `tol` in all of them.
    pub fn strictly_dominates(&self, other: &[T], tol: T) -> bool {
        self.delta.iter().zip(other).all(|(&a, &b)| a + tol < b)
    }
}

/// Runs `solve` for every profile and collects the resulting gap tuples.
/// `solve` returns `ζ₀ = ζ₀^dl + ζ₀^ul` for the given profile.
pub fn pareto_sweep<T: Scalar, F>(profiles: &[GapProfile<T>], mut solve: F) -> Result<Vec<GapTuple<T>>>
where
    F: FnMut(&GapProfile<T>) -> Result<T>,
{
    profiles
        .iter()
        .map(|p| Ok(GapTuple::from_profile(p, solve(p)?)))
        .collect()
}

/// `κ̄` values of the two-cell sweep.
pub const TWO_CELL_KAPPA_BARS: [f64; 7] = [0.0001, 0.001, 0.1, 0.5, 0.9, 0.99, 0.9999];

/// Recorded trajectory of one cell for the convergence-bound check.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundTrace<T> {
    /// `‖∇F_m(w^t)‖²` for `t = 0, …, T−1`.
    pub grad_norm_sq: Vec<T>,
    /// `F_m(w^0)`.
    pub initial_loss: T,
    /// A lower bound on `F_m(w*)`.
    pub loss_lower_bound: T,
    /// `Σ_k ‖Re{e_k^dl}‖²` of the round producing `w^{t+1}`.
    pub dl_error_energy: Vec<T>,
    /// `‖Re{e_m^ul}‖²` of the round producing `w^{t+1}`.
    pub ul_error_energy: Vec<T>,
}

/// Both sides of the time-averaged gradient-norm bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck<T> {
    pub lhs: T,
    pub initial_gap: T,
    pub error_gap: T,
}

impl<T: Scalar> BoundCheck<T> {
    pub fn rhs(&self) -> T {
        self.initial_gap + self.error_gap
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs()
    }
}

/// Evaluates `(1/T) Σ ‖∇F(w^t)‖²` against
/// `2 (F(w^0) − F*) / (η T) + (1/T) Σ_t (L²/K Σ_k ‖e_k^dl‖² + L η / K² ‖e^ul‖²)`.
pub fn theorem1_bound<T: Scalar>(
    trace: &BoundTrace<T>,
    smoothness: T,
    eta: T,
    devices: usize,
) -> Result<BoundCheck<T>> {
    if !(eta > T::zero()) || !(eta * smoothness < T::one()) {
        return Err(Error::StepTooLarge {
            eta: eta.as_f64(),
            smoothness: smoothness.as_f64(),
        });
    }
    let t = trace.grad_norm_sq.len();
    if t == 0 || trace.dl_error_energy.len() != t || trace.ul_error_energy.len() != t {
        return Err(Error::DimensionMismatch("bound trace lengths differ or are empty".into()));
    }
    let t_s = T::from_count(t);
    let k = T::from_count(devices);
    let lhs = trace.grad_norm_sq.iter().copied().sum::<T>() / t_s;
    let initial_gap = T::lit(2.0) * (trace.initial_loss - trace.loss_lower_bound) / (eta * t_s);
    let error_gap = trace
        .dl_error_energy
        .iter()
        .zip(&trace.ul_error_energy)
        .map(|(&dl, &ul)| smoothness * smoothness / k * dl + smoothness * eta / (k * k) * ul)
        .sum::<T>()
        / t_s;
    Ok(BoundCheck {
        lhs,
        initial_gap,
        error_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn single_cell_noise_free_downlink_is_exact() {
        let ch = ChannelSet {
            association: vec![0, 0],
            dl: vec![vec![c(0.3, 0.1), c(-0.2, 0.5)]],
            ul: vec![vec![c(1.0, 0.0)]; 2],
        };
        assert_eq!(expected_dl_error(&ch, &[1.0], &[2.0], &[0.0, 0.0]), vec![0.0]);
    }

    #[test]
    fn single_term_noise_arithmetic() {
        let ch = ChannelSet {
            association: vec![0],
            dl: vec![vec![c(1.0, 0.0)]],
            ul: vec![vec![c(1.0, 0.0)]],
        };
        let e = expected_dl_error(&ch, &[1.0], &[1.0], &[1e-14]);
        assert!((e[0] - 5e-15).abs() < 1e-30);
        let inf = expected_dl_error(&ch, &[0.0], &[1.0], &[1e-14]);
        assert!(inf[0].is_infinite());
        assert_eq!(expected_dl_error(&ch, &[0.0], &[0.0], &[1e-14]), vec![0.0]);
    }

    #[test]
    fn uplink_alignment_and_silence() {
        let h = c(0.6, 0.8);
        let ch = ChannelSet {
            association: vec![0],
            dl: vec![vec![h]],
            ul: vec![vec![h]],
        };
        // |h| sqrt(p) / sqrt(c) = υ with |h| = 1, p = 4, c = 16.
        let e = expected_ul_error(&ch, &[4.0], &[16.0], &[0.5], &[0.0]).unwrap();
        assert!(e[0].abs() < 1e-15);
        let e = expected_ul_error(&ch, &[0.0], &[2.0], &[0.5], &[0.2]).unwrap();
        assert!((e[0] - (0.25 + 0.05)).abs() < 1e-15);
        assert!(expected_ul_error(&ch, &[1.0], &[0.0], &[0.5], &[0.2]).is_err());
        let e = expected_ul_error(&ch, &[1.0], &[f64::INFINITY], &[0.5], &[0.2]).unwrap();
        assert_eq!(e[0], 0.25);
    }

    #[test]
    fn gap_arithmetic() {
        let t = GapTerms::<f64>::new(vec![1.0], vec![1.0], &[10], 1.0, vec![0.1]).unwrap();
        assert!((gap_tuple(&t)[0] - 0.101).abs() < 1e-15);
        let z = GapTerms::new(vec![0.0], vec![0.0], &[10], 1.0, vec![0.1]).unwrap();
        assert_eq!(z.gap, vec![0.0]);
        let half = GapTerms::<f64>::new(vec![1.0], vec![1.0], &[10], 1.0, vec![0.05]).unwrap();
        assert_eq!(half.gap_dl, t.gap_dl);
        assert!((half.gap_ul[0] * 2.0 - t.gap_ul[0]).abs() < 1e-18);
    }

    #[test]
    fn profile_validation() {
        assert!(GapProfile::new(vec![0.6, 0.5]).is_err());
        assert!(GapProfile::new(vec![-0.1, 1.1]).is_err());
        assert!(GapProfile::new(vec![0.25, 0.75]).is_ok());
        let p = GapProfile::<f64>::uniform(4);
        assert_eq!(p.weights(), &[0.25; 4]);
        assert_eq!(p.kappa_dl(&[10; 4]), vec![2.5; 4]);
        assert_eq!(p.kappa_ul(&[10; 4], &[0.5; 4]), vec![50.0; 4]);
    }

    #[test]
    fn half_half_profile_splits_zeta() {
        let t = GapTuple::from_profile(&GapProfile::two_cell(0.5).unwrap(), 0.8);
        assert_eq!(t.delta, vec![0.4, 0.4]);
    }

    #[test]
    fn single_cell_sweep_is_one_point() {
        let out = pareto_sweep(&[GapProfile::new(vec![1.0]).unwrap()], |_| Ok(0.3)).unwrap();
        assert_eq!(out[0].delta, vec![0.3]);
    }

    #[test]
    fn error_free_bound_is_initial_gap_only() {
        let trace = BoundTrace {
            grad_norm_sq: vec![0.5, 0.4, 0.3, 0.2],
            initial_loss: 1.0,
            loss_lower_bound: 0.0,
            dl_error_energy: vec![0.0; 4],
            ul_error_energy: vec![0.0; 4],
        };
        let b = theorem1_bound(&trace, 2.0, 0.25, 5).unwrap();
        assert_eq!(b.error_gap, 0.0);
        assert_eq!(b.initial_gap, 2.0);
        let mut longer = trace.clone();
        longer.grad_norm_sq.extend([0.1; 4]);
        longer.dl_error_energy.extend([0.0; 4]);
        longer.ul_error_energy.extend([0.0; 4]);
        let b2 = theorem1_bound(&longer, 2.0, 0.25, 5).unwrap();
        assert_eq!(b2.initial_gap * 2.0, b.initial_gap);
        assert!(theorem1_bound(&trace, 2.0, 0.5, 5).is_err());
    }
}
