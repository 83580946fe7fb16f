//! Gap-region boundary sweep over profiling vectors.
//!
//! The models are warmed up with error-free rounds, then frozen. Every
//! profile is solved on the channel of the next round with the model and
//! local gradient spreads of the frozen models, so boundary and baseline
//! points share one instance.

use crate::config::ExperimentConfig;
use crate::experiment::{build_world, prepare_data};
use mcfl_core::airphy::normalize_or_constant;
use mcfl_core::coopt::{
    full_power_downlink, full_power_uplink, optimize_downlink, optimize_uplink, ul_ign_inter, ul_max_inter,
};
use mcfl_core::fedlearn::{run_round, softmax_grad, DlScheme, FlState, Scheme, UlScheme, World};
use mcfl_core::gapmodel::{expected_dl_error, expected_ul_error, GapProfile, GapTerms};
use mcfl_core::netchan::{realize_round_seeded, ChannelSet};
use mcfl_core::{Error, Result};
use std::io::Write;

/// One point of the sweep: a boundary tuple `κ ζ₀` or a baseline gap tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub kind: PointKind,
    pub label: String,
    /// Cell 1's profile weight; `None` for baselines.
    pub kappa_bar: Option<f64>,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Boundary,
    Baseline,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Boundary => "boundary",
            PointKind::Baseline => "baseline",
        }
    }
}

/// `[κ̄, (1−κ̄)/(M−1), …]`.
pub fn profile_for(kappa_bar: f64, cells: usize) -> Result<GapProfile<f64>> {
    if cells == 1 {
        return GapProfile::new(vec![1.0]);
    }
    let rest = (1.0 - kappa_bar) / (cells - 1) as f64;
    let mut k = vec![rest; cells];
    k[0] = kappa_bar;
    GapProfile::new(k)
}

fn spread(v: &[f64]) -> Result<f64> {
    let n = normalize_or_constant(v)?;
    Ok(if n.is_degenerate() { 0.0 } else { n.std })
}

fn sizes(ch: &ChannelSet<f64>) -> Vec<usize> {
    (0..ch.num_cells()).map(|m| ch.cell_devices(m).len()).collect()
}

/// A frozen snapshot the sweep is evaluated on.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub channels: ChannelSet<f64>,
    pub nu: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub eta: Vec<f64>,
}

pub fn snapshot(world: &World<f64>, eta: &[f64], warmup: usize) -> Result<Snapshot> {
    let mut state = FlState::new(world, eta.to_vec())?;
    for _ in 0..warmup {
        run_round(&mut state, Scheme::BENCHMARK, world)?;
    }
    let round = if world.redraw_channels { warmup + 1 } else { 1 };
    let channels = realize_round_seeded(&world.topology, &world.channel, world.seed, round as u64)?;
    let nu = state.models.iter().map(|w| spread(&w.w)).collect::<Result<Vec<_>>>()?;
    let upsilon = (0..world.topology.num_devices())
        .map(|k| spread(&softmax_grad(&state.models[channels.association[k]], &world.shards[k].data)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Snapshot {
        channels,
        nu,
        upsilon,
        eta: eta.to_vec(),
    })
}

/// `Δ = κ (ζ₀^dl + ζ₀^ul)` for one profile.
pub fn boundary_point(world: &World<f64>, snap: &Snapshot, profile: &GapProfile<f64>) -> Result<Vec<f64>> {
    let dl = optimize_downlink(&snap.channels, &world.sigma_dl, &snap.nu, profile, &world.budget_dl, world.solver_dl)?;
    let ul = optimize_uplink(
        &snap.channels,
        &world.sigma_ul,
        &snap.upsilon,
        profile,
        &snap.eta,
        &world.budget_ul,
        world.solver_ul,
    )?;
    let zeta = dl.zeta0(world.smoothness) + ul.zeta0(world.smoothness);
    Ok(profile.weights().iter().map(|&k| k * zeta).collect())
}

/// Closed-form `Gap_m` of a profile-independent scheme.
pub fn baseline_point(world: &World<f64>, snap: &Snapshot, scheme: Scheme) -> Result<Vec<f64>> {
    let ch = &snap.channels;
    let p_dl = match scheme.dl {
        DlScheme::Full => full_power_downlink(&world.budget_dl),
        _ => return Err(Error::UnknownScheme(format!("{scheme} is not a baseline"))),
    };
    let (p_ul, c) = match scheme.ul {
        UlScheme::Full => full_power_uplink(ch, &world.budget_ul, &snap.upsilon, &world.sigma_ul),
        UlScheme::IgnInter => ul_ign_inter(ch, &snap.upsilon, &world.sigma_ul, &world.budget_ul, world.solver_ul)?,
        UlScheme::MaxInter => ul_max_inter(ch, &snap.upsilon, &world.sigma_ul, &world.budget_ul, world.solver_ul)?,
        _ => return Err(Error::UnknownScheme(format!("{scheme} is not a baseline"))),
    };
    let zero_if_flat = |p: &[f64], s: &[f64]| -> Vec<f64> {
        p.iter().zip(s).map(|(&x, &v)| if v > 0.0 { x } else { 0.0 }).collect()
    };
    let p_dl = zero_if_flat(&p_dl, &snap.nu);
    let p_ul = zero_if_flat(&p_ul, &snap.upsilon);
    let e_dl = expected_dl_error(ch, &p_dl, &snap.nu, &world.sigma_dl);
    let e_ul = expected_ul_error(ch, &p_ul, &c, &snap.upsilon, &world.sigma_ul)?;
    Ok(GapTerms::new(e_dl, e_ul, &sizes(ch), world.smoothness, snap.eta.clone())?.gap)
}

/// The full sweep on repetition 0 of `cfg`.
pub fn pareto_sweep(cfg: &ExperimentConfig) -> Result<Vec<ParetoPoint>> {
    let data = prepare_data(cfg)?;
    let (world, eta) = build_world(cfg, &data, 0)?;
    let snap = snapshot(&world, &eta, cfg.pareto.warmup_rounds)?;
    let cells = world.topology.num_cells();
    let mut points = Vec::new();
    for &kb in &cfg.pareto.kappa_bars {
        let profile = profile_for(kb, cells)?;
        points.push(ParetoPoint {
            kind: PointKind::Boundary,
            label: "DL-Opt & UL-Opt".into(),
            kappa_bar: Some(kb),
            gaps: boundary_point(&world, &snap, &profile)?,
        });
    }
    for &b in &cfg.pareto.baselines {
        points.push(ParetoPoint {
            kind: PointKind::Baseline,
            label: b.to_string(),
            kappa_bar: None,
            gaps: baseline_point(&world, &snap, b)?,
        });
    }
    Ok(points)
}

pub fn pareto_header(cells: usize) -> Vec<String> {
    let mut h: Vec<String> = ["kind", "label", "kappa_bar"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=cells).map(|m| format!("gap_{m}")));
    h
}

pub fn write_pareto<W: Write>(out: W, points: &[ParetoPoint]) -> csv::Result<()> {
    let cells = points.first().map_or(0, |p| p.gaps.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(pareto_header(cells))?;
    for p in points {
        let mut rec = vec![
            p.kind.as_str().to_string(),
            p.label.clone(),
            p.kappa_bar.map(crate::metrics::fmt_f64).unwrap_or_default(),
        ];
        rec.extend(p.gaps.iter().map(|&g| crate::metrics::fmt_f64(g)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pareto<R: std::io::Read>(input: R) -> std::result::Result<Vec<ParetoPoint>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.len() < 4 || header.iter().take(3).ne(["kind", "label", "kappa_bar"]) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"));
            let kind = match &rec[0] {
                "boundary" => PointKind::Boundary,
                "baseline" => PointKind::Baseline,
                other => return Err(format!("unknown point kind `{other}`")),
            };
            Ok(ParetoPoint {
                kind,
                label: rec[1].to_string(),
                kappa_bar: if rec[2].is_empty() { None } else { Some(num(&rec[2])?) },
                gaps: rec.iter().skip(3).map(num).collect::<std::result::Result<_, _>>()?,
            })
        })
        .collect()
}

/// Ways a sweep can fall short of a boundary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepCheck {
    /// Pairs of consecutive `κ̄` where cell 1's gap decreases or another
    /// cell's gap increases by more than the tolerance.
    pub monotonicity_violations: Vec<(f64, f64)>,
    /// (baseline label, κ̄) where the baseline beats the boundary point in
    /// every cell by more than the tolerance.
    pub dominating_baselines: Vec<(String, f64)>,
}

impl SweepCheck {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations.is_empty() && self.dominating_baselines.is_empty()
    }
}

/// Checks the boundary ordering and that no baseline lies outside it.
pub fn check_sweep(points: &[ParetoPoint], tol: f64) -> SweepCheck {
    let mut boundary: Vec<&ParetoPoint> = points.iter().filter(|p| p.kind == PointKind::Boundary).collect();
    boundary.sort_by(|a, b| a.kappa_bar.partial_cmp(&b.kappa_bar).expect("finite kappa_bar"));
    let mut out = SweepCheck::default();
    for w in boundary.windows(2) {
        let (a, b) = (w[0], w[1]);
        let first_drops = b.gaps[0] < a.gaps[0] - tol;
        let other_rises = a.gaps.iter().zip(&b.gaps).skip(1).any(|(x, y)| *y > *x + tol);
        if first_drops || other_rises {
            out.monotonicity_violations.push((a.kappa_bar.unwrap(), b.kappa_bar.unwrap()));
        }
    }
    for base in points.iter().filter(|p| p.kind == PointKind::Baseline) {
        for b in &boundary {
            if base.gaps.iter().zip(&b.gaps).all(|(x, y)| *x < *y - tol) {
                out.dominating_baselines.push((base.label.clone(), b.kappa_bar.unwrap()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(k: f64, g: [f64; 2]) -> ParetoPoint {
        ParetoPoint {
            kind: PointKind::Boundary,
            label: "b".into(),
            kappa_bar: Some(k),
            gaps: g.to_vec(),
        }
    }

    #[test]
    fn profiles_sum_to_one() {
        assert_eq!(profile_for(0.1, 2).unwrap().weights(), &[0.1, 0.9]);
        let p = profile_for(0.4, 4).unwrap();
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_check_flags_violations() {
        let mut pts = vec![bp(0.1, [1.0, 9.0]), bp(0.5, [5.0, 5.0]), bp(0.9, [9.0, 1.0])];
        assert!(check_sweep(&pts, 1e-9).passed());
        pts.push(ParetoPoint {
            kind: PointKind::Baseline,
            label: "x".into(),
            kappa_bar: None,
            gaps: vec![4.0, 4.0],
        });
        let c = check_sweep(&pts, 1e-9);
        assert_eq!(c.dominating_baselines, vec![("x".to_string(), 0.5)]);
        pts[1].gaps = vec![0.5, 5.0];
        assert_eq!(check_sweep(&pts, 1e-9).monotonicity_violations, vec![(0.1, 0.5)]);
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![
            bp(0.0001, [1e-7, 3.0]),
            ParetoPoint {
                kind: PointKind::Baseline,
                label: "DL-Full & UL-Full".into(),
                kappa_bar: None,
                gaps: vec![2.0, 2.5],
            },
        ];
        let mut buf = Vec::new();
        write_pareto(&mut buf, &pts).unwrap();
        assert_eq!(read_pareto(buf.as_slice()).unwrap(), pts);
    }
}
