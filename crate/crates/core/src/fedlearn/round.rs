//! Training rounds: channel draw, downlink dissemination, local gradients,
//! uplink aggregation and the per-cell model update.

use super::data::Shard;
use super::model::{local_gradient, softmax_grad, softmax_loss, evaluate, LrModel};
use crate::airphy::{downlink_disseminate, normalize_or_constant, uplink_aggregate, AirDownlinkPlan, AirUplinkPlan};
use crate::coopt::{
    full_power_downlink, full_power_uplink, optimize_downlink, optimize_uplink, ul_ign_inter, ul_max_inter,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::fedlearn::data::Dataset;
use crate::gapmodel::{expected_dl_error, expected_ul_error, BoundTrace, GapProfile, GapTerms};
use crate::netchan::{realize_round_seeded, ChannelParams, ChannelSet, Topology};
use crate::rng::{stream, stream_rng};
use crate::scalar::{norm_sq, Scalar};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DlScheme {
    /// Error-free dissemination.
    Free,
    /// Cooperative power control.
    Opt,
    /// Every BS at its budget.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UlScheme {
    /// Error-free aggregation.
    Free,
    /// Cooperative power control with the optimal normalizer.
    Opt,
    /// Every device at its budget with the optimal normalizer.
    Full,
    /// Per-cell design that ignores other cells.
    IgnInter,
    /// Per-cell design against worst-case interference.
    MaxInter,
}

/// A downlink and an uplink transmission scheme.
///
/// Names are `Benchmark`, a single direction such as `DL-Opt` or
/// `UL-MaxInter` (the other direction is then error-free), or a composite
/// `DL-x & UL-y`. Matching ignores case and spacing around `&`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub dl: DlScheme,
    pub ul: UlScheme,
}

impl Scheme {
    pub const BENCHMARK: Scheme = Scheme {
        dl: DlScheme::Free,
        ul: UlScheme::Free,
    };

    pub fn new(dl: DlScheme, ul: UlScheme) -> Self {
        Self { dl, ul }
    }
}

impl fmt::Display for DlScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DlScheme::Free => "Free",
            DlScheme::Opt => "Opt",
            DlScheme::Full => "Full",
        };
        write!(f, "DL-{s}")
    }
}

impl fmt::Display for UlScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UlScheme::Free => "Free",
            UlScheme::Opt => "Opt",
            UlScheme::Full => "Full",
            UlScheme::IgnInter => "IgnInter",
            UlScheme::MaxInter => "MaxInter",
        };
        write!(f, "UL-{s}")
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.dl, self.ul) {
            (DlScheme::Free, UlScheme::Free) => write!(f, "Benchmark"),
            (dl, UlScheme::Free) => write!(f, "{dl}"),
            (DlScheme::Free, ul) => write!(f, "{ul}"),
            (dl, ul) => write!(f, "{dl} & {ul}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownScheme(name.to_string());
        if name.trim().eq_ignore_ascii_case("benchmark") {
            return Ok(Self::BENCHMARK);
        }
        let mut dl = None;
        let mut ul = None;
        for part in name.split('&') {
            let part = part.trim().to_ascii_lowercase();
            let (dir, kind) = part.split_once('-').ok_or_else(unknown)?;
            match dir {
                "dl" if dl.is_none() => {
                    dl = Some(match kind {
                        "free" => DlScheme::Free,
                        "opt" => DlScheme::Opt,
                        "full" => DlScheme::Full,
                        _ => return Err(unknown()),
                    })
                }
                "ul" if ul.is_none() => {
                    ul = Some(match kind {
                        "free" => UlScheme::Free,
                        "opt" => UlScheme::Opt,
                        "full" => UlScheme::Full,
                        "igninter" => UlScheme::IgnInter,
                        "maxinter" => UlScheme::MaxInter,
                        _ => return Err(unknown()),
                    })
                }
                _ => return Err(unknown()),
            }
        }
        Ok(Self {
            dl: dl.unwrap_or(DlScheme::Free),
            ul: ul.unwrap_or(UlScheme::Free),
        })
    }
}

/// Everything a round needs besides the models.
#[derive(Debug, Clone)]
pub struct World<T> {
    pub topology: Topology<T>,
    pub channel: ChannelParams<T>,
    /// Base seed of the channel, noise and mini-batch streams. Schemes run
    /// with the same seed see identical channels.
    pub seed: u64,
    /// Draw fresh channels every round; otherwise round 1's draw is reused.
    pub redraw_channels: bool,
    /// Add receiver noise; without it only interference and misalignment
    /// remain.
    pub receiver_noise: bool,
    /// Local datasets in global device order.
    pub shards: Vec<Shard<T>>,
    /// Test set of every cell.
    pub test: Vec<Dataset<T>>,
    pub classes: usize,
    pub features: usize,
    /// BS budgets, watts.
    pub budget_dl: Vec<T>,
    /// Device budgets, watts.
    pub budget_ul: Vec<T>,
    /// Device receiver noise powers, watts.
    pub sigma_dl: Vec<T>,
    /// BS receiver noise powers, watts.
    pub sigma_ul: Vec<T>,
    pub kappa: GapProfile<T>,
    pub smoothness: T,
    pub solver_dl: SolverOptions<T>,
    pub solver_ul: SolverOptions<T>,
    pub batch_size: Option<usize>,
}

impl<T: Scalar> World<T> {
    pub fn validate(&self) -> Result<()> {
        let (m, k) = (self.topology.num_cells(), self.topology.num_devices());
        let bad = |what: &str| Err(Error::DimensionMismatch(what.to_string()));
        if self.shards.len() != k {
            return bad("one shard per device expected");
        }
        if self.test.len() != m || self.budget_dl.len() != m || self.sigma_ul.len() != m || self.kappa.len() != m {
            return bad("per-cell settings differ from the number of cells");
        }
        if self.budget_ul.len() != k || self.sigma_dl.len() != k {
            return bad("per-device settings differ from the number of devices");
        }
        for cell in 0..m {
            let sizes: Vec<usize> = self.topology.cell_devices(cell).map(|i| self.shards[i].data.len()).collect();
            if sizes.iter().any(|&s| s == 0 || s != sizes[0]) {
                return Err(Error::InvalidDataset(format!("shards of cell {cell} are empty or unequal")));
            }
        }
        Ok(())
    }

    /// The union of the shards of cell `m`.
    pub fn pooled_train(&self, m: usize) -> Result<Dataset<T>> {
        Dataset::concat(self.topology.cell_devices(m).map(|k| &self.shards[k].data))
    }
}

/// Metrics of one cell after one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics<T> {
    /// Pooled training loss at the updated model.
    pub train_loss: T,
    pub test_loss: T,
    pub test_acc: T,
    /// Closed-form `E_m^dl` and `E_m^ul` at the powers used.
    pub e_dl: T,
    pub e_ul: T,
    pub gap_dl: T,
    pub gap_ul: T,
    pub gap: T,
    /// `‖∇F_m(w^t)‖²` at the model before the update.
    pub grad_norm_sq: T,
    /// `Σ_k ‖e_k^dl‖²` realized this round.
    pub dl_error_energy: T,
    /// `‖e_m^ul‖²` realized this round.
    pub ul_error_energy: T,
}

/// One round of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<T> {
    /// 1-based.
    pub round: usize,
    pub cells: Vec<CellMetrics<T>>,
    /// `max_m Gap_m^dl / κ_m` over cells with `κ_m > 0`, at the powers used.
    pub zeta_dl: T,
    /// `max_m Gap_m^ul / κ_m`, likewise.
    pub zeta_ul: T,
    /// The bisection optima `ζ₀^dl`, `ζ₀^ul` where a direction was optimized.
    pub solver_zeta_dl: Option<T>,
    pub solver_zeta_ul: Option<T>,
    pub p_dl: Vec<T>,
    pub p_ul: Vec<T>,
    pub c: Vec<T>,
    pub channels: ChannelSet<T>,
}

/// Models, learning rates and the append-only history of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlState<T> {
    pub models: Vec<LrModel<T>>,
    /// Rounds completed.
    pub round: usize,
    pub eta: Vec<T>,
    /// `F_m(w^0)` of every cell.
    pub initial_loss: Vec<T>,
    pub history: Vec<RoundRecord<T>>,
}

impl<T: Scalar> FlState<T> {
    /// All models at zero.
    pub fn new(world: &World<T>, eta: Vec<T>) -> Result<Self> {
        world.validate()?;
        let m_cells = world.topology.num_cells();
        if eta.len() != m_cells {
            return Err(Error::DimensionMismatch("one learning rate per cell expected".into()));
        }
        if let Some(&e) = eta.iter().find(|&&e| !(e > T::zero()) || !(e * world.smoothness < T::one())) {
            return Err(Error::StepTooLarge {
                eta: e.as_f64(),
                smoothness: world.smoothness.as_f64(),
            });
        }
        let models = vec![LrModel::zeros(world.classes, world.features); m_cells];
        let initial_loss = (0..m_cells)
            .map(|m| softmax_loss(&models[m], &world.pooled_train(m)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            models,
            round: 0,
            eta,
            initial_loss,
            history: Vec::new(),
        })
    }

    /// The recorded trajectory of cell `m` for the convergence-bound check,
    /// with `F* ≥ 0`.
    pub fn bound_trace(&self, m: usize) -> BoundTrace<T> {
        BoundTrace {
            grad_norm_sq: self.history.iter().map(|r| r.cells[m].grad_norm_sq).collect(),
            initial_loss: self.initial_loss[m],
            loss_lower_bound: T::zero(),
            dl_error_energy: self.history.iter().map(|r| r.cells[m].dl_error_energy).collect(),
            ul_error_energy: self.history.iter().map(|r| r.cells[m].ul_error_energy).collect(),
        }
    }
}

fn std_or_zero<T: Scalar>(v: &[T]) -> Result<T> {
    let n = normalize_or_constant(v)?;
    Ok(if n.is_degenerate() { T::zero() } else { n.std })
}

/// Zero where the transmitted vector is constant: such transmitters send
/// zero symbols.
fn effective<T: Scalar>(p: &[T], spread: &[T]) -> Vec<T> {
    p.iter()
        .zip(spread)
        .map(|(&x, &s)| if s > T::zero() { x } else { T::zero() })
        .collect()
}

fn implied_zeta<T: Scalar>(gaps: &[T], kappa: &GapProfile<T>) -> T {
    gaps.iter()
        .zip(kappa.weights())
        .filter(|(_, &k)| k > T::zero())
        .map(|(&g, &k)| g / k)
        .fold(T::zero(), T::max)
}

/// Runs round `state.round + 1` of `scheme` and appends its record.
pub fn run_round<'s, T: Scalar>(
    state: &'s mut FlState<T>,
    scheme: Scheme,
    world: &World<T>,
) -> Result<&'s RoundRecord<T>> {
    let t = state.round + 1;
    let m_cells = world.topology.num_cells();
    let k_tot = world.topology.num_devices();
    let channel_round = if world.redraw_channels { t } else { 1 };
    let channels = realize_round_seeded(&world.topology, &world.channel, world.seed, channel_round as u64)?;
    let mut dl_noise = stream_rng(world.seed, &[stream::DL_NOISE, t as u64]);
    let mut ul_noise = stream_rng(world.seed, &[stream::UL_NOISE, t as u64]);
    let mut batch_rng = stream_rng(world.seed, &[stream::BATCH, t as u64]);
    let noise = world.receiver_noise;
    let sizes: Vec<usize> = (0..m_cells).map(|m| world.topology.cell_devices(m).len()).collect();

    // Downlink.
    let nu = state
        .models
        .iter()
        .map(|w| std_or_zero(&w.w))
        .collect::<Result<Vec<_>>>()?;
    let (p_dl, solver_zeta_dl) = match scheme.dl {
        DlScheme::Free => (vec![T::zero(); m_cells], None),
        DlScheme::Full => (full_power_downlink(&world.budget_dl), None),
        DlScheme::Opt => {
            let sol = optimize_downlink(&channels, &world.sigma_dl, &nu, &world.kappa, &world.budget_dl, world.solver_dl)?;
            let zeta0 = sol.zeta0(world.smoothness);
            // A zero-power witness for an active cell only arises when its
            // error is zero at any power; the budget is then as good.
            let p = (0..m_cells)
                .map(|m| if nu[m] > T::zero() && !(sol.p[m] > T::zero()) { world.budget_dl[m] } else { sol.p[m] })
                .collect();
            (p, Some(zeta0))
        }
    };
    let p_dl = effective(&p_dl, &nu);
    let (w_hat, dl_error, e_dl) = if scheme.dl == DlScheme::Free {
        let w_hat: Vec<Vec<T>> = (0..k_tot)
            .map(|k| state.models[channels.association[k]].w.clone())
            .collect();
        (w_hat, vec![T::zero(); k_tot], vec![T::zero(); m_cells])
    } else {
        let plan = AirDownlinkPlan {
            p_dl: p_dl.clone(),
            sigma_dl: world.sigma_dl.clone(),
        };
        let models: Vec<Vec<T>> = state.models.iter().map(|w| w.w.clone()).collect();
        let trace = downlink_disseminate(&models, &channels, &plan, noise.then_some(&mut dl_noise))?;
        let energy = trace.error.iter().map(|e| norm_sq(e)).collect();
        let e = expected_dl_error(&channels, &p_dl, &nu, &world.sigma_dl);
        (trace.w_hat, energy, e)
    };

    // Local computation.
    let gradients = (0..k_tot)
        .map(|k| {
            let model = LrModel::from_vec(world.classes, world.features, w_hat[k].clone())?;
            local_gradient(&world.shards[k], &model, world.batch_size, &mut batch_rng)
        })
        .collect::<Result<Vec<_>>>()?;

    // Uplink.
    let upsilon = gradients.iter().map(|g| std_or_zero(g)).collect::<Result<Vec<_>>>()?;
    let ul_opts = world.solver_ul;
    let (p_ul, c, solver_zeta_ul) = match scheme.ul {
        UlScheme::Free => (vec![T::zero(); k_tot], vec![T::infinity(); m_cells], None),
        UlScheme::Opt => {
            let sol = optimize_uplink(&channels, &world.sigma_ul, &upsilon, &world.kappa, &state.eta, &world.budget_ul, ul_opts)?;
            let zeta0 = sol.zeta0(world.smoothness);
            (sol.p, sol.c, Some(zeta0))
        }
        UlScheme::Full => {
            let (p, c) = full_power_uplink(&channels, &world.budget_ul, &upsilon, &world.sigma_ul);
            (p, c, None)
        }
        UlScheme::IgnInter => {
            let (p, c) = ul_ign_inter(&channels, &upsilon, &world.sigma_ul, &world.budget_ul, ul_opts)?;
            (p, c, None)
        }
        UlScheme::MaxInter => {
            let (p, c) = ul_max_inter(&channels, &upsilon, &world.sigma_ul, &world.budget_ul, ul_opts)?;
            (p, c, None)
        }
    };
    let p_ul = effective(&p_ul, &upsilon);
    let dim = world.classes * world.features;
    let (g_hat, ul_error, e_ul) = if scheme.ul == UlScheme::Free {
        let g_hat: Vec<Vec<T>> = (0..m_cells)
            .map(|m| {
                let members = channels.cell_devices(m);
                let k_m = T::from_count(members.len());
                (0..dim)
                    .map(|i| members.iter().map(|&k| gradients[k][i]).sum::<T>() / k_m)
                    .collect()
            })
            .collect();
        (g_hat, vec![T::zero(); m_cells], vec![T::zero(); m_cells])
    } else {
        let plan = AirUplinkPlan {
            p_ul: p_ul.clone(),
            c: c.clone(),
            sigma_ul: world.sigma_ul.clone(),
        };
        let trace = uplink_aggregate(&gradients, &channels, &plan, noise.then_some(&mut ul_noise))?;
        let energy = trace.error.iter().map(|e| norm_sq(e)).collect();
        let e = expected_ul_error(&channels, &p_ul, &c, &upsilon, &world.sigma_ul)?;
        (trace.g_hat, energy, e)
    };

    // Exact pooled gradient at w^t, then the update.
    let mut grad_norm_sq = Vec::with_capacity(m_cells);
    let mut dl_energy = vec![T::zero(); m_cells];
    for m in 0..m_cells {
        let members: Vec<usize> = world.topology.cell_devices(m).collect();
        let k_m = T::from_count(members.len());
        let mut pooled = vec![T::zero(); dim];
        for &k in &members {
            let g = softmax_grad(&state.models[m], &world.shards[k].data)?;
            for (a, b) in pooled.iter_mut().zip(&g) {
                *a += *b / k_m;
            }
            dl_energy[m] += dl_error[k];
        }
        grad_norm_sq.push(norm_sq(&pooled));
    }
    for m in 0..m_cells {
        let eta = state.eta[m];
        for (w, &g) in state.models[m].w.iter_mut().zip(&g_hat[m]) {
            *w -= eta * g;
        }
        if state.models[m].w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("model of cell {m} after round {t}")));
        }
    }

    let terms = GapTerms::new(e_dl, e_ul, &sizes, world.smoothness, state.eta.clone())?;
    let mut cells = Vec::with_capacity(m_cells);
    for m in 0..m_cells {
        let train_loss = softmax_loss(&state.models[m], &world.pooled_train(m)?)?;
        let (test_loss, test_acc) = evaluate(&state.models[m], &world.test[m])?;
        cells.push(CellMetrics {
            train_loss,
            test_loss,
            test_acc,
            e_dl: terms.e_dl[m],
            e_ul: terms.e_ul[m],
            gap_dl: terms.gap_dl[m],
            gap_ul: terms.gap_ul[m],
            gap: terms.gap[m],
            grad_norm_sq: grad_norm_sq[m],
            dl_error_energy: dl_energy[m],
            ul_error_energy: ul_error[m],
        });
    }
    state.round = t;
    state.history.push(RoundRecord {
        round: t,
        cells,
        zeta_dl: implied_zeta(&terms.gap_dl, &world.kappa),
        zeta_ul: implied_zeta(&terms.gap_ul, &world.kappa),
        solver_zeta_dl,
        solver_zeta_ul,
        p_dl,
        p_ul,
        c,
        channels,
    });
    Ok(state.history.last().expect("just pushed"))
}
