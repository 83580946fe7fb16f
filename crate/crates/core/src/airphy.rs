//! Baseband simulation of one training round's transmissions.
//!
//! Models and gradients are normalized to zero-mean, unit-variance real
//! symbols; the mean and standard deviation travel over an ideal scalar side
//! channel. Downlink: every BS broadcasts its model, devices see the other
//! cells' broadcasts as interference. Uplink: devices pre-compensate their
//! home channel phase and transmit simultaneously; BS `m` receives the sum of
//! its own devices plus the other cells' devices.
//!
//! Complex noise `CN(0, σ²)` has real and imaginary parts of variance `σ²/2`
//! each.

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::netchan::ChannelSet;
use crate::rng::SimRng;
use crate::scalar::Scalar;

/// Standard deviations at or below this are treated as degenerate.
pub const DEGENERATE_STD: f64 = 1e-15;

/// A real vector split into unit-variance symbols and its two statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedVector<T> {
    pub s: Vec<T>,
    pub mean: T,
    /// Population standard deviation; zero for a degenerate vector, whose
    /// symbols are then all zero.
    pub std: T,
}

impl<T: Scalar> NormalizedVector<T> {
    /// `std · s + mean · 1`.
    pub fn reconstruct(&self) -> Vec<T> {
        self.s.iter().map(|&x| self.std * x + self.mean).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.std.as_f64() <= DEGENERATE_STD
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

fn population_stats<T: Scalar>(v: &[T]) -> (T, T) {
    let n = T::from_count(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

/// Normalizes `v` to zero mean and unit variance.
pub fn normalize<T: Scalar>(v: &[T]) -> Result<NormalizedVector<T>> {
    if v.len() < 2 {
        return Err(Error::VectorTooShort(v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("vector to normalize".into()));
    }
    let (mean, std) = population_stats(v);
    if std.as_f64() <= DEGENERATE_STD {
        return Err(Error::DegenerateVector { std: std.as_f64() });
    }
    Ok(NormalizedVector {
        s: v.iter().map(|&x| (x - mean) / std).collect(),
        mean,
        std,
    })
}

/// Like [`normalize`] but maps a constant vector to zero symbols with
/// `std = 0`, so only its mean is conveyed.
pub fn normalize_or_constant<T: Scalar>(v: &[T]) -> Result<NormalizedVector<T>> {
    match normalize(v) {
        Err(Error::DegenerateVector { .. }) => Ok(NormalizedVector {
            s: vec![T::zero(); v.len()],
            mean: population_stats(v).0,
            std: T::zero(),
        }),
        other => other,
    }
}

/// Downlink transmit and noise powers.
#[derive(Debug, Clone, PartialEq)]
pub struct AirDownlinkPlan<T> {
    /// `p_m^dl` per BS, watts.
    pub p_dl: Vec<T>,
    /// `σ_k²` per device, watts.
    pub sigma_dl: Vec<T>,
}

/// Uplink transmit powers, receive normalizers and noise powers.
#[derive(Debug, Clone, PartialEq)]
pub struct AirUplinkPlan<T> {
    /// `p_k^ul` per device, watts.
    pub p_ul: Vec<T>,
    /// `c_m` per BS. `+∞` means the over-the-air signal is discarded and only
    /// the side-channel means are used.
    pub c: Vec<T>,
    /// `σ_m²` per BS, watts.
    pub sigma_ul: Vec<T>,
}

impl<T: Scalar> AirUplinkPlan<T> {
    /// Transmit scalar `b_k = (h_k)^† / |h_k| · sqrt(p_k)` of every device.
    pub fn transmit_scalars(&self, channels: &ChannelSet<T>) -> Vec<Complex<T>> {
        (0..channels.num_devices())
            .map(|k| {
                let h = channels.ul_home(k);
                h.conj() * (self.p_ul[k].sqrt() / h.norm())
            })
            .collect()
    }
}

/// Downlink half of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkTrace<T> {
    /// `ŵ_k` per device.
    pub w_hat: Vec<Vec<T>>,
    /// `Re{e_k^dl} = ŵ_k − w_m` per device.
    pub error: Vec<Vec<T>>,
}

/// Uplink half of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkTrace<T> {
    /// `ĝ_m` per cell.
    pub g_hat: Vec<Vec<T>>,
    /// `Re{e_m^ul} = K_m ĝ_m − Σ_k g_k` per cell.
    pub error: Vec<Vec<T>>,
}

/// Both halves of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace<T> {
    pub downlink: DownlinkTrace<T>,
    pub uplink: UplinkTrace<T>,
}

fn complex_noise<T: Scalar>(sigma2: T, rng: &mut Option<&mut SimRng>) -> Complex<T> {
    match rng {
        Some(r) if sigma2 > T::zero() => {
            let scale = (sigma2.as_f64() / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(*r);
            let im: f64 = StandardNormal.sample(*r);
            Complex::new(T::lit(re * scale), T::lit(im * scale))
        }
        _ => Complex::new(T::zero(), T::zero()),
    }
}

fn common_dimension(vs: impl IntoIterator<Item = usize>) -> Result<usize> {
    let mut it = vs.into_iter();
    let d = it.next().ok_or_else(|| Error::DimensionMismatch("no vectors".into()))?;
    if it.any(|x| x != d) {
        return Err(Error::DimensionMismatch("vectors differ in length".into()));
    }
    Ok(d)
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what}: {got} entries, expected {want}")));
    }
    Ok(())
}

/// Downlink over already-normalized symbols, one vector per cell.
///
/// The recorded error is relative to `std · s + mean`. With `rng = None` no
/// receiver noise is added, leaving the interference-only error.
pub fn transmit_downlink<T: Scalar>(
    symbols: &[NormalizedVector<T>],
    channels: &ChannelSet<T>,
    plan: &AirDownlinkPlan<T>,
    mut rng: Option<&mut SimRng>,
) -> Result<DownlinkTrace<T>> {
    let m_cells = channels.num_cells();
    check_len("models", symbols.len(), m_cells)?;
    check_len("p_dl", plan.p_dl.len(), m_cells)?;
    check_len("sigma_dl", plan.sigma_dl.len(), channels.num_devices())?;
    let d = common_dimension(symbols.iter().map(|v| v.len()))?;
    for (m, v) in symbols.iter().enumerate() {
        if !v.is_degenerate() && !(plan.p_dl[m] > T::zero()) {
            return Err(Error::InvalidPlan(format!("BS {m} has zero power but a non-constant model")));
        }
    }
    // A degenerate cell sends zero symbols and therefore no interference.
    let amp: Vec<T> = symbols
        .iter()
        .zip(&plan.p_dl)
        .map(|(v, &p)| if v.is_degenerate() { T::zero() } else { p.sqrt() })
        .collect();

    let mut trace = DownlinkTrace {
        w_hat: Vec::with_capacity(channels.num_devices()),
        error: Vec::with_capacity(channels.num_devices()),
    };
    for k in 0..channels.num_devices() {
        let m = channels.association[k];
        let own = &symbols[m];
        let h = channels.dl_home(k);
        let scale = h.conj() * (own.std / (h.norm_sqr() * amp[m]));
        let mut w_hat = Vec::with_capacity(d);
        let mut err = Vec::with_capacity(d);
        for i in 0..d {
            let mut y = Complex::new(T::zero(), T::zero());
            for (l, v) in symbols.iter().enumerate() {
                if amp[l] > T::zero() {
                    y += channels.dl_cross(l, k) * (amp[l] * v.s[i]);
                }
            }
            y += complex_noise(plan.sigma_dl[k], &mut rng);
            let w = own.std * own.s[i] + own.mean;
            let r = if own.is_degenerate() {
                own.mean
            } else {
                (scale * y).re + own.mean
            };
            w_hat.push(r);
            err.push(r - w);
        }
        trace.w_hat.push(w_hat);
        trace.error.push(err);
    }
    Ok(trace)
}

/// Normalizes each cell's model and disseminates it to the cell's devices.
/// Errors are recorded relative to the exact models passed in.
pub fn downlink_disseminate<T: Scalar>(
    models: &[Vec<T>],
    channels: &ChannelSet<T>,
    plan: &AirDownlinkPlan<T>,
    rng: Option<&mut SimRng>,
) -> Result<DownlinkTrace<T>> {
    common_dimension(models.iter().map(|v| v.len()))?;
    let symbols = models
        .iter()
        .map(|w| normalize_or_constant(w))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = transmit_downlink(&symbols, channels, plan, rng)?;
    for k in 0..channels.num_devices() {
        let w = &models[channels.association[k]];
        for (e, (&r, &x)) in trace.error[k].iter_mut().zip(trace.w_hat[k].iter().zip(w)) {
            *e = r - x;
        }
    }
    Ok(trace)
}

/// Uplink AirComp over already-normalized symbols, one vector per device.
///
/// The recorded error is relative to the sum of `std · s + mean` over the
/// cell's devices.
pub fn transmit_uplink<T: Scalar>(
    symbols: &[NormalizedVector<T>],
    channels: &ChannelSet<T>,
    plan: &AirUplinkPlan<T>,
    mut rng: Option<&mut SimRng>,
) -> Result<UplinkTrace<T>> {
    let (m_cells, k_tot) = (channels.num_cells(), channels.num_devices());
    check_len("gradients", symbols.len(), k_tot)?;
    check_len("p_ul", plan.p_ul.len(), k_tot)?;
    check_len("c", plan.c.len(), m_cells)?;
    check_len("sigma_ul", plan.sigma_ul.len(), m_cells)?;
    let d = common_dimension(symbols.iter().map(|v| v.len()))?;
    if let Some(m) = plan.c.iter().position(|&c| !(c > T::zero())) {
        return Err(Error::NonPositiveNormalizer(plan.c[m].as_f64()));
    }
    let b: Vec<Complex<T>> = plan
        .transmit_scalars(channels)
        .into_iter()
        .zip(symbols)
        .map(|(b, v)| if v.is_degenerate() { Complex::new(T::zero(), T::zero()) } else { b })
        .collect();

    let mut trace = UplinkTrace {
        g_hat: Vec::with_capacity(m_cells),
        error: Vec::with_capacity(m_cells),
    };
    for m in 0..m_cells {
        let members = channels.cell_devices(m);
        let k_m = T::from_count(members.len());
        let mean_sum: T = members.iter().map(|&k| symbols[k].mean).sum();
        let over_air = members.iter().any(|&k| !symbols[k].is_degenerate()) && plan.c[m].is_finite();
        let inv_sqrt_c = T::one() / plan.c[m].sqrt();
        let gains: Vec<Complex<T>> = (0..k_tot).map(|k| b[k] * channels.ul_cross(k, m)).collect();
        let mut g_hat = Vec::with_capacity(d);
        let mut err = Vec::with_capacity(d);
        for i in 0..d {
            let truth: T = members.iter().map(|&k| symbols[k].std * symbols[k].s[i] + symbols[k].mean).sum();
            let r = if over_air {
                let mut y = Complex::new(T::zero(), T::zero());
                for (k, g) in gains.iter().enumerate() {
                    y += *g * symbols[k].s[i];
                }
                y += complex_noise(plan.sigma_ul[m], &mut rng);
                (y.re * inv_sqrt_c + mean_sum) / k_m
            } else {
                mean_sum / k_m
            };
            g_hat.push(r);
            err.push(k_m * r - truth);
        }
        trace.g_hat.push(g_hat);
        trace.error.push(err);
    }
    Ok(trace)
}

/// Normalizes each device's gradient and aggregates per cell over the air.
/// Errors are recorded relative to the exact gradients passed in.
pub fn uplink_aggregate<T: Scalar>(
    gradients: &[Vec<T>],
    channels: &ChannelSet<T>,
    plan: &AirUplinkPlan<T>,
    rng: Option<&mut SimRng>,
) -> Result<UplinkTrace<T>> {
    let d = common_dimension(gradients.iter().map(|v| v.len()))?;
    let symbols = gradients
        .iter()
        .map(|g| normalize_or_constant(g))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = transmit_uplink(&symbols, channels, plan, rng)?;
    for m in 0..channels.num_cells() {
        let members = channels.cell_devices(m);
        let k_m = T::from_count(members.len());
        for i in 0..d {
            let sum: T = members.iter().map(|&k| gradients[k][i]).sum();
            trace.error[m][i] = k_m * trace.g_hat[m][i] - sum;
        }
    }
    Ok(trace)
}

/// `w − η ĝ`.
pub fn global_update<T: Scalar>(w: &[T], g_hat: &[T], eta: T) -> Vec<T> {
    w.iter().zip(g_hat).map(|(&x, &g)| x - eta * g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn one(h: Complex<f64>) -> Vec<Complex<f64>> {
        vec![h]
    }

    fn single_cell(h: Complex<f64>) -> ChannelSet<f64> {
        ChannelSet {
            association: vec![0],
            dl: vec![one(h)],
            ul: vec![one(h)],
        }
    }

    #[test]
    fn already_normalized_vector() {
        let n = normalize(&[1.0, -1.0]).unwrap();
        assert_eq!(n.mean, 0.0);
        assert_eq!(n.std, 1.0);
        assert_eq!(n.s, vec![1.0, -1.0]);
    }

    #[test]
    fn constant_vector_is_degenerate() {
        assert!(matches!(normalize(&[3.0, 3.0, 3.0]), Err(Error::DegenerateVector { .. })));
        let c = normalize_or_constant(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((c.mean, c.std), (3.0, 0.0));
        assert_eq!(c.reconstruct(), vec![3.0; 3]);
        assert!(matches!(normalize(&[1.0]), Err(Error::VectorTooShort(1))));
    }

    #[test]
    fn downlink_single_cell_noise_free_is_exact() {
        let ch = single_cell(Complex::new(0.3, -0.2));
        let w: Vec<f64> = vec![0.5, -1.0, 2.0, 0.25];
        let plan = AirDownlinkPlan { p_dl: vec![2.0], sigma_dl: vec![0.0] };
        let t = downlink_disseminate(&[w.clone()], &ch, &plan, None).unwrap();
        for (a, b) in t.w_hat[0].iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn silenced_bs_leaves_only_interference() {
        let ch = ChannelSet {
            association: vec![0, 1],
            dl: vec![
                vec![Complex::new(1.0, 0.0), Complex::new(0.2, 0.1)],
                vec![Complex::new(0.1, 0.3), Complex::new(0.8, 0.0)],
            ],
            ul: vec![vec![Complex::new(1.0, 0.0); 2]; 2],
        };
        let w1: Vec<f64> = vec![1.0, 2.0, 3.0];
        let w2 = vec![-1.0, 0.0, 4.0];
        let plan = AirDownlinkPlan { p_dl: vec![1.0, 0.0], sigma_dl: vec![0.0, 0.0] };
        let err = transmit_downlink(
            &[normalize(&w1).unwrap(), normalize(&w2).unwrap()],
            &ch,
            &plan,
            None,
        );
        assert!(matches!(err, Err(Error::InvalidPlan(_))));

        let plan = AirDownlinkPlan { p_dl: vec![1.0, 0.5], sigma_dl: vec![0.0, 0.0] };
        let mut ch0 = ch.clone();
        ch0.dl[1][0] = Complex::new(0.0, 0.0);
        let t = downlink_disseminate(&[w1.clone(), w2.clone()], &ch0, &plan, None).unwrap();
        for (a, b) in t.w_hat[0].iter().zip(&w1) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(t.error[1].iter().any(|e| e.abs() > 1e-3));
    }

    #[test]
    fn uplink_perfect_alignment_recovers_gradient() {
        let h = Complex::new(0.6, 0.8);
        let ch = single_cell(h);
        let g: Vec<f64> = vec![0.1, -0.3, 0.7, 0.2];
        let n = normalize(&g).unwrap();
        // |h| sqrt(p) = sqrt(c) υ with c = 1.
        let p = (n.std / h.norm()).powi(2);
        let plan = AirUplinkPlan { p_ul: vec![p], c: vec![1.0], sigma_ul: vec![0.0] };
        let t = uplink_aggregate(&[g.clone()], &ch, &plan, None).unwrap();
        for (a, b) in t.g_hat[0].iter().zip(&g) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_cell_averages_means() {
        let ch = ChannelSet {
            association: vec![0, 0],
            dl: vec![vec![Complex::new(1.0, 0.0); 2]],
            ul: vec![vec![Complex::new(0.5, 0.1)], vec![Complex::new(0.2, 0.4)]],
        };
        let plan = AirUplinkPlan { p_ul: vec![1.0, 1.0], c: vec![3.0], sigma_ul: vec![1.0] };
        let mut rng = stream_rng(1, &[]);
        let t = uplink_aggregate(&[vec![2.0; 3], vec![4.0; 3]], &ch, &plan, Some(&mut rng)).unwrap();
        assert_eq!(t.g_hat[0], vec![3.0; 3]);
        assert!(t.error[0].iter().all(|&e| e == 0.0));
    }

    #[test]
    fn infinite_normalizer_discards_signal() {
        let ch = single_cell(Complex::new(0.6, 0.8));
        let g = vec![1.0, 3.0];
        let plan = AirUplinkPlan { p_ul: vec![1.0], c: vec![f64::INFINITY], sigma_ul: vec![1.0] };
        let t = uplink_aggregate(&[g], &ch, &plan, None).unwrap();
        assert_eq!(t.g_hat[0], vec![2.0, 2.0]);
        let bad = AirUplinkPlan { p_ul: vec![1.0], c: vec![0.0], sigma_ul: vec![1.0] };
        assert!(uplink_aggregate(&[vec![1.0, 2.0]], &ch, &bad, None).is_err());
    }

    #[test]
    fn transmit_scalars_have_requested_power() {
        let ch = single_cell(Complex::new(-0.3, 0.4));
        let plan = AirUplinkPlan { p_ul: vec![2.5], c: vec![1.0], sigma_ul: vec![0.0] };
        let b = plan.transmit_scalars(&ch)[0];
        assert!((b.norm_sqr() - 2.5).abs() < 1e-12);
        assert!((b * ch.ul_home(0)).im.abs() < 1e-12);
    }

    #[test]
    fn global_update_examples() {
        assert_eq!(global_update(&[1.0, 2.0], &[0.0, 0.0], 0.3), vec![1.0, 2.0]);
        assert_eq!(global_update(&[0.0; 3], &[1.0; 3], 0.1), vec![-0.1; 3]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let ch = single_cell(Complex::new(1.0, 0.0));
        let plan = AirDownlinkPlan { p_dl: vec![1.0, 1.0], sigma_dl: vec![0.0] };
        assert!(matches!(
            downlink_disseminate(&[vec![1.0, 2.0]], &ch, &plan, None),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
