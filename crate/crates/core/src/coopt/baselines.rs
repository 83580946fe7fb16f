//! Non-cooperative reference schemes.

use super::uplink::{normalizer_with_interference, optimize_uplink_instance, UplinkInstance};
use super::SolverOptions;
use crate::error::Result;
use crate::netchan::ChannelSet;
use crate::scalar::Scalar;

/// Every BS at its budget.
pub fn full_power_downlink<T: Scalar>(budgets: &[T]) -> Vec<T> {
    budgets.to_vec()
}

/// Every device at its budget, with the normalizer that is optimal for those
/// powers under the actual interference. Devices with `υ_k = 0` send no
/// symbols, so they do not count towards the normalizer.
pub fn full_power_uplink<T: Scalar>(
    channels: &ChannelSet<T>,
    budgets: &[T],
    upsilon: &[T],
    sigma_ul: &[T],
) -> (Vec<T>, Vec<T>) {
    let effective: Vec<T> = budgets
        .iter()
        .zip(upsilon)
        .map(|(&b, &u)| if u > T::zero() { b } else { T::zero() })
        .collect();
    let c = super::optimal_normalizer(channels, &effective, upsilon, sigma_ul);
    (budgets.to_vec(), c)
}

/// Worst-case interference at every BS: all other-cell devices at full
/// power, `Σ_{k'∉m} Re{h_{k',m} h_{k'}^†}² P_{k'} / |h_{k'}|²`.
pub fn worst_case_interference<T: Scalar>(channels: &ChannelSet<T>, budgets: &[T]) -> Vec<T> {
    super::interference_power(channels, budgets)
}

/// Solves every cell in isolation with a constant extra noise term, then
/// sets the normalizer with that same constant in place of the interference.
fn per_cell<T: Scalar>(
    channels: &ChannelSet<T>,
    upsilon: &[T],
    sigma_ul: &[T],
    budgets: &[T],
    extra: &[T],
    opts: SolverOptions<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let mut p = vec![T::zero(); channels.num_devices()];
    for m in 0..channels.num_cells() {
        let devices = channels.cell_devices(m);
        let sub = channels.restrict(&[m]);
        let pick = |v: &[T]| devices.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let inst = UplinkInstance::new(&sub, &sigma_ul[m..=m], &pick(upsilon), vec![T::one()], &pick(budgets))?
            .with_extra_noise(&extra[m..=m]);
        let (_, p_cell, _, _) = optimize_uplink_instance(&inst, opts)?;
        for (&k, &x) in devices.iter().zip(&p_cell) {
            p[k] = x;
        }
    }
    let c = normalizer_with_interference(channels, &p, upsilon, sigma_ul, extra);
    Ok((p, c))
}

/// Each cell minimizes its own aggregation error as if there were no other
/// cells.
pub fn ul_ign_inter<T: Scalar>(
    channels: &ChannelSet<T>,
    upsilon: &[T],
    sigma_ul: &[T],
    budgets: &[T],
    opts: SolverOptions<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    per_cell(channels, upsilon, sigma_ul, budgets, &vec![T::zero(); channels.num_cells()], opts)
}

/// Each cell minimizes its own aggregation error assuming every other-cell
/// device transmits at full power.
pub fn ul_max_inter<T: Scalar>(
    channels: &ChannelSet<T>,
    upsilon: &[T],
    sigma_ul: &[T],
    budgets: &[T],
    opts: SolverOptions<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    per_cell(channels, upsilon, sigma_ul, budgets, &worst_case_interference(channels, budgets), opts)
}
