//! Oracle suite: every check compares the library against an independent
//! computation of the same quantity.

use mcfl_core::airphy::{transmit_downlink, transmit_uplink, AirDownlinkPlan, AirUplinkPlan, NormalizedVector};
use mcfl_core::conicfeas::{check_feasible, SocCone, SocFeasibilityProblem};
use mcfl_core::coopt::{
    assemble_downlink, optimal_normalizer, optimize_downlink, optimize_uplink, DownlinkInstance, SolverOptions,
};
use mcfl_core::fedlearn::{softmax_grad, softmax_loss, Dataset, LrModel};
use mcfl_core::gapmodel::{dl_error_device, expected_dl_error, expected_ul_error, GapProfile, GapTerms};
use mcfl_core::netchan::{realize_round, sample_topology, ChannelParams, ChannelSet, GeometryConfig};
use mcfl_core::rng::{stream_rng, SimRng};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::time::Instant;

/// Receive normalizer under test: `(channels, p_ul, υ, σ_ul²) -> c`.
pub type NormalizerFn = fn(&ChannelSet<f64>, &[f64], &[f64], &[f64]) -> Vec<f64>;

/// Instance counts of every check.
#[derive(Debug, Clone, Copy)]
pub struct SelftestSizes {
    pub closed_form_instances: usize,
    pub closed_form_draws: usize,
    pub normalizer_instances: usize,
    pub normalizer_grid: usize,
    pub solver_2var: usize,
    pub solver_4var: usize,
    pub dual_form_instances: usize,
    pub bisection_instances: usize,
    pub gradient_instances: usize,
}

impl SelftestSizes {
    pub const FULL: SelftestSizes = SelftestSizes {
        closed_form_instances: 20,
        closed_form_draws: 100_000,
        normalizer_instances: 50,
        normalizer_grid: 100_000,
        solver_2var: 200,
        solver_4var: 50,
        dual_form_instances: 100,
        bisection_instances: 20,
        gradient_instances: 20,
    };

    pub const QUICK: SelftestSizes = SelftestSizes {
        closed_form_instances: 3,
        closed_form_draws: 100_000,
        normalizer_instances: 5,
        normalizer_grid: 100_000,
        solver_2var: 20,
        solver_4var: 5,
        dual_form_instances: 20,
        bisection_instances: 4,
        gradient_instances: 4,
    };
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    /// Largest observed deviation, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<34} {:>9} {:>12} {:>10} {:>8}  result",
            "check", "instances", "worst", "tolerance", "seconds"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<34} {:>9} {:>12.3e} {:>10.1e} {:>8.2}  {}",
                c.name,
                c.instances,
                c.worst,
                c.tolerance,
                c.seconds,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
            if !c.passed && !c.detail.is_empty() {
                writeln!(f, "    {}", c.detail)?;
            }
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "some checks FAILED" })
    }
}

fn finish(name: &'static str, start: Instant, instances: usize, worst: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        instances,
        worst,
        tolerance,
        passed: worst.is_finite() && worst <= tolerance && detail.is_empty(),
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

fn failed(name: &'static str, start: Instant, detail: String) -> CheckResult {
    CheckResult {
        name,
        instances: 0,
        worst: f64::INFINITY,
        tolerance: 0.0,
        passed: false,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

/// Two-cell channels with `k` devices per cell.
fn two_cell(seed: u64, tag: u64, k: usize) -> mcfl_core::Result<ChannelSet<f64>> {
    let mut rng = stream_rng(seed, &[tag]);
    let topo = sample_topology(&GeometryConfig::<f64>::hexagonal_quad(2, k), &mut rng)?;
    realize_round(&topo, &ChannelParams::from_db(2.5, 5.0)?, &mut rng)
}

/// Zero-mean unit-variance symbols with the given spread and mean.
fn symbols(n: usize, std: f64, mean: f64, rng: &mut SimRng) -> NormalizedVector<f64> {
    let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mu = raw.iter().sum::<f64>() / n as f64;
    let sd = (raw.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n as f64).sqrt();
    NormalizedVector {
        s: raw.iter().map(|x| (x - mu) / sd).collect(),
        mean,
        std,
    }
}

fn mean_sq(v: &[f64]) -> f64 {
    v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64
}

/// Simulated downlink and uplink error energies against their closed forms.
/// Worst value is the relative deviation.
pub fn check_closed_forms(instances: usize, draws: usize) -> CheckResult {
    let start = Instant::now();
    let name = "closed-form errors vs Monte Carlo";
    let run = |i: usize| -> mcfl_core::Result<f64> {
        let seed = i as u64;
        let ch = two_cell(seed, 1, 2)?;
        let mut rng = stream_rng(seed, &[2]);
        let p_dl = [rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)];
        let sigma_dl: Vec<f64> = (0..4).map(|_| 10f64.powf(rng.random_range(-9.0..-5.0))).collect();
        let nu = [rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
        let syms = [symbols(draws, nu[0], 0.1, &mut rng), symbols(draws, nu[1], -0.2, &mut rng)];
        let plan = AirDownlinkPlan {
            p_dl: p_dl.to_vec(),
            sigma_dl: sigma_dl.clone(),
        };
        let trace = transmit_downlink(&syms, &ch, &plan, Some(&mut rng))?;
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            let cf = dl_error_device(&ch, k, &p_dl, nu[ch.association[k]], sigma_dl[k]);
            worst = worst.max((mean_sq(&trace.error[k]) - cf).abs() / cf);
        }

        let p_ul: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
        let upsilon: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let sigma_ul: Vec<f64> = (0..2).map(|_| 10f64.powf(rng.random_range(-8.0..-5.0))).collect();
        let mut c = optimal_normalizer(&ch, &p_ul, &upsilon, &sigma_ul);
        c[1] *= rng.random_range(0.5..2.0);
        let syms: Vec<_> = upsilon.iter().map(|&u| symbols(draws, u, 0.3, &mut rng)).collect();
        let plan = AirUplinkPlan {
            p_ul: p_ul.clone(),
            c: c.clone(),
            sigma_ul: sigma_ul.clone(),
        };
        let trace = transmit_uplink(&syms, &ch, &plan, Some(&mut rng))?;
        let cf = expected_ul_error(&ch, &p_ul, &c, &upsilon, &sigma_ul)?;
        for m in 0..2 {
            worst = worst.max((mean_sq(&trace.error[m]) - cf[m]).abs() / cf[m]);
        }
        Ok(worst)
    };
    match (0..instances).into_par_iter().map(run).collect::<mcfl_core::Result<Vec<f64>>>() {
        Ok(w) => finish(name, start, instances, w.into_iter().fold(0.0, f64::max), 0.02, String::new()),
        Err(e) => failed(name, start, e.to_string()),
    }
}

/// The normalizer against a log grid over `c` spanning six decades around
/// it. Worst value is the largest relative amount by which a grid point
/// beats the normalizer.
pub fn check_normalizer(instances: usize, grid: usize, normalizer: NormalizerFn) -> CheckResult {
    let start = Instant::now();
    let name = "receive normalizer vs log grid";
    let run = |i: usize| -> mcfl_core::Result<f64> {
        let seed = 1000 + i as u64;
        let ch = two_cell(seed, 3, 3)?;
        let mut rng = stream_rng(seed, &[4]);
        let p: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        let u: Vec<f64> = (0..6).map(|_| rng.random_range(0.01..1.0)).collect();
        let sigma: Vec<f64> = (0..2).map(|_| 10f64.powf(rng.random_range(-14.0..-6.0))).collect();
        let c = normalizer(&ch, &p, &u, &sigma);
        let at = expected_ul_error(&ch, &p, &c, &u, &sigma)?;
        let mut worst: f64 = 0.0;
        for j in 0..grid {
            let s = 10f64.powf(-3.0 + 6.0 * j as f64 / (grid - 1) as f64);
            let e = expected_ul_error(&ch, &p, &[c[0] * s, c[1] * s], &u, &sigma)?;
            for m in 0..2 {
                worst = worst.max((at[m] - e[m]) / e[m]);
            }
        }
        Ok(worst)
    };
    match (0..instances).into_par_iter().map(run).collect::<mcfl_core::Result<Vec<f64>>>() {
        Ok(w) => finish(name, start, instances, w.into_iter().fold(0.0, f64::max), 1e-6, String::new()),
        Err(e) => failed(name, start, e.to_string()),
    }
}

const SOLVER_TOL: f64 = 1e-9;

fn random_problem(rng: &mut SimRng, n: usize) -> SocFeasibilityProblem<f64> {
    let mut p = SocFeasibilityProblem::new(vec![0.0; n], vec![1.0; n]);
    for _ in 0..rng.random_range(1..=3) {
        let rows = rng.random_range(0..=3);
        p.push_cone(SocCone {
            a: (0..rows)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            b: (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect(),
            c: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            d: rng.random_range(-0.6..0.4),
        });
    }
    p
}

/// Minimum of the largest cone violation over a regular grid of the box.
fn grid_min(p: &SocFeasibilityProblem<f64>, pts: usize) -> f64 {
    let n = p.n;
    let total = pts.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let lo = p.lower[i];
                    let hi = p.upper[i];
                    let j = idx % pts;
                    idx /= pts;
                    lo + (hi - lo) * j as f64 / (pts - 1) as f64
                })
                .collect();
            p.max_violation(&x)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Lipschitz constant of the largest violation in the 2-norm.
fn lipschitz(p: &SocFeasibilityProblem<f64>) -> f64 {
    p.cones
        .iter()
        .map(|c| {
            let fro = c.a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            fro + c.c.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Verdict on a margin-clear instance: `Some(agrees)`, or `None` when the
/// grid cannot decide it.
fn solver_case(n: usize, pts: usize, seed: u64, index: u64) -> Result<Option<bool>, String> {
    let mut rng = stream_rng(seed, &[n as u64, index]);
    let p = random_problem(&mut rng, n);
    let verdict = check_feasible(&p, SOLVER_TOL).map_err(|e| e.to_string())?;
    if let Some(x) = verdict.witness() {
        if !p.in_box(x) || p.max_violation(x) > SOLVER_TOL {
            return Err(format!("witness of instance {index} ({n} variables) does not re-verify"));
        }
    }
    let g = grid_min(&p, pts);
    let pad = lipschitz(&p) * (n as f64).sqrt() / (2.0 * (pts - 1) as f64);
    Ok(if g <= -10.0 * SOLVER_TOL {
        Some(verdict.is_feasible())
    } else if g - pad >= 10.0 * SOLVER_TOL {
        Some(!verdict.is_feasible())
    } else {
        None
    })
}

/// Phase-I verdicts against brute-force grids on margin-clear instances.
/// Worst value is the number of disagreements.
pub fn check_solver(wanted_2: usize, wanted_4: usize) -> CheckResult {
    let start = Instant::now();
    let name = "cone feasibility vs grid";
    let mut disagreements = 0usize;
    let mut decided = 0usize;
    for (n, pts, wanted) in [(2usize, 1001usize, wanted_2), (4, 24, wanted_4)] {
        let mut found = 0usize;
        let mut next = 0u64;
        while found < wanted {
            if next as usize > 40 * wanted.max(1) {
                return failed(name, start, format!("too few margin-clear {n}-variable instances"));
            }
            let batch: Vec<u64> = (next..next + 16).collect();
            next += 16;
            let results: Vec<Result<Option<bool>, String>> =
                batch.par_iter().map(|&i| solver_case(n, pts, 77, i)).collect();
            for r in results {
                match r {
                    Err(e) => return failed(name, start, e),
                    Ok(Some(agree)) if found < wanted => {
                        found += 1;
                        if !agree {
                            disagreements += 1;
                        }
                    }
                    _ => {}
                }
            }
        }
        decided += found;
    }
    let detail = if disagreements > 0 {
        format!("{disagreements} verdicts disagree with the grid")
    } else {
        String::new()
    };
    finish(name, start, decided, disagreements as f64, 0.0, detail)
}

/// Smallest powers meeting every downlink constraint with equality, from
/// `(I − D W) p = D ϖ₀²` with `D = diag(ν² / (κ ζ))`; `None` when the
/// solution is not positive or leaves the budget box.
fn minimal_powers(inst: &DownlinkInstance<f64>, zeta: f64) -> Option<Vec<f64>> {
    let n = inst.num_cells();
    let d: Vec<f64> = (0..n).map(|m| inst.nu[m].powi(2) / (inst.kappa_dl[m] * zeta)).collect();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|m| {
            let mut row: Vec<f64> = (0..n).map(|l| -d[m] * inst.varpi_sq[m][l]).collect();
            row[m] += 1.0;
            row.push(d[m] * inst.varpi0_sq[m]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return None;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let p: Vec<f64> = (0..n).map(|m| a[m][n] / a[m][m]).collect();
    p.iter().zip(&inst.budgets).all(|(&x, &b)| x > 0.0 && x <= b).then_some(p)
}

/// Cone form of the downlink constraints against their linear form in the
/// powers. Worst value is the number of disagreements.
pub fn check_downlink_forms(wanted: usize) -> CheckResult {
    let start = Instant::now();
    let name = "downlink cone vs linear form";
    let mut checked = 0;
    let mut disagreements = 0;
    let mut seed = 0u64;
    while checked < wanted {
        seed += 1;
        if seed as usize > 10 * wanted.max(1) {
            return failed(name, start, "too few instances away from the budget boundary".into());
        }
        let case = || -> mcfl_core::Result<Option<bool>> {
            let cells = 2 + seed as usize % 3;
            let mut rng = stream_rng(seed, &[5]);
            let topo = sample_topology(&GeometryConfig::<f64>::hexagonal_quad(cells, 3), &mut rng)?;
            let ch = realize_round(&topo, &ChannelParams::from_db(2.5, 5.0)?, &mut rng)?;
            let nu: Vec<f64> = (0..cells).map(|_| rng.random_range(0.1..2.0)).collect();
            let sigma: Vec<f64> = (0..ch.num_devices()).map(|_| 10f64.powf(rng.random_range(-14.0..-8.0))).collect();
            let budgets: Vec<f64> = (0..cells).map(|_| rng.random_range(0.5..10.0)).collect();
            let inst = DownlinkInstance::new(&ch, &sigma, &nu, vec![1.0; cells], &budgets)?;
            let zeta = 10f64.powf(rng.random_range(-6.0..1.0));
            let linear = |s: f64| minimal_powers(&inst, zeta * s).is_some();
            if linear(1.0 - 1e-4) != linear(1.0 + 1e-4) {
                return Ok(None);
            }
            let cone = check_feasible(&assemble_downlink(&inst, zeta)?, 1e-12)?;
            Ok(Some(cone.is_feasible() == linear(1.0)))
        };
        match case() {
            Err(e) => return failed(name, start, e.to_string()),
            Ok(None) => {}
            Ok(Some(agree)) => {
                checked += 1;
                if !agree {
                    disagreements += 1;
                }
            }
        }
    }
    let detail = if disagreements > 0 {
        format!("{disagreements} verdicts differ")
    } else {
        String::new()
    };
    finish(name, start, checked, disagreements as f64, 0.0, detail)
}

/// Bracket widths and achieved gaps of both optimizers. Worst value is the
/// largest excess of an achieved gap over `κ_m ζ₀`.
pub fn check_bisection(instances: usize) -> CheckResult {
    let start = Instant::now();
    let name = "bisection bracket and achieved gaps";
    let eps = 1e-9;
    let opts = SolverOptions { eps, tol: 1e-9 };
    let run = |i: usize| -> mcfl_core::Result<(f64, f64)> {
        let seed = 2000 + i as u64;
        let k = 5;
        let ch = two_cell(seed, 6, k)?;
        let mut rng = stream_rng(seed, &[7]);
        let kb = rng.random_range(0.05..0.95);
        let kappa = GapProfile::new(vec![kb, 1.0 - kb])?;
        let nu = [rng.random_range(0.01..0.5), rng.random_range(0.01..0.5)];
        let upsilon: Vec<f64> = (0..2 * k).map(|_| rng.random_range(0.01..0.5)).collect();
        let sigma_dl = vec![1e-14; 2 * k];
        let sigma_ul = [1e-14, 1e-14];
        let budget_dl = [10.0, 1.0];
        let budget_ul: Vec<f64> = (0..2 * k).map(|j| if j % k < k / 2 { 0.0316 } else { 1.0 }).collect();
        let smoothness = rng.random_range(1.0..5.0);
        let eta = [0.9 / smoothness; 2];
        let dl = optimize_downlink(&ch, &sigma_dl, &nu, &kappa, &budget_dl, opts)?;
        let ul = optimize_uplink(&ch, &sigma_ul, &upsilon, &kappa, &eta, &budget_ul, opts)?;
        let width = (dl.bracket.1 - dl.bracket.0).max(ul.bracket.1 - ul.bracket.0);
        let e_dl = expected_dl_error(&ch, &dl.p, &nu, &sigma_dl);
        let e_ul = expected_ul_error(&ch, &ul.p, &ul.c, &upsilon, &sigma_ul)?;
        let terms = GapTerms::new(e_dl, e_ul, &[k, k], smoothness, eta.to_vec())?;
        let (z_dl, z_ul) = (dl.zeta0(smoothness), ul.zeta0(smoothness));
        let excess = (0..2)
            .map(|m| {
                let w = kappa.weights()[m];
                (terms.gap_dl[m] - w * z_dl).max(terms.gap_ul[m] - w * z_ul)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((width, excess))
    };
    match (0..instances).into_par_iter().map(run).collect::<mcfl_core::Result<Vec<_>>>() {
        Ok(r) => {
            let width = r.iter().map(|x| x.0).fold(0.0, f64::max);
            let excess = r.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            let detail = if width > eps {
                format!("bracket width {width:e} exceeds {eps:e}")
            } else {
                String::new()
            };
            finish(name, start, instances, excess.max(0.0), 1e-7, detail)
        }
        Err(e) => failed(name, start, e.to_string()),
    }
}

/// Softmax gradient against central differences of the loss. Worst value is
/// the largest deviation relative to the gradient's largest entry.
pub fn check_gradients(instances: usize) -> CheckResult {
    let start = Instant::now();
    let name = "softmax gradient vs finite differences";
    let run = |i: usize| -> mcfl_core::Result<f64> {
        let mut rng = stream_rng(3000 + i as u64, &[]);
        let classes = rng.random_range(2..6);
        let features = rng.random_range(1..8);
        let n = rng.random_range(1..30);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..features).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let data = Dataset::new(x, y, classes)?;
        let w: Vec<f64> = (0..classes * features).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = LrModel::from_vec(classes, features, w.clone())?;
        let g = softmax_grad(&model, &data)?;
        let scale = g.iter().fold(1e-3, |a: f64, b| a.max(b.abs()));
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for j in 0..w.len() {
            let mut up = w.clone();
            up[j] += h;
            let mut dn = w.clone();
            dn[j] -= h;
            let fd = (softmax_loss(&LrModel::from_vec(classes, features, up)?, &data)?
                - softmax_loss(&LrModel::from_vec(classes, features, dn)?, &data)?)
                / (2.0 * h);
            worst = worst.max((fd - g[j]).abs() / scale);
        }
        Ok(worst)
    };
    match (0..instances).into_par_iter().map(run).collect::<mcfl_core::Result<Vec<f64>>>() {
        Ok(w) => finish(name, start, instances, w.into_iter().fold(0.0, f64::max), 1e-6, String::new()),
        Err(e) => failed(name, start, e.to_string()),
    }
}

/// Every check, in order.
pub fn run_selftest(sizes: SelftestSizes, normalizer: NormalizerFn) -> SelftestReport {
    SelftestReport {
        checks: vec![
            check_closed_forms(sizes.closed_form_instances, sizes.closed_form_draws),
            check_normalizer(sizes.normalizer_instances, sizes.normalizer_grid, normalizer),
            check_solver(sizes.solver_2var, sizes.solver_4var),
            check_downlink_forms(sizes.dual_form_instances),
            check_bisection(sizes.bisection_instances),
            check_gradients(sizes.gradient_instances),
        ],
    }
}

/// The library's own normalizer.
pub fn library_normalizer(ch: &ChannelSet<f64>, p: &[f64], u: &[f64], s: &[f64]) -> Vec<f64> {
    optimal_normalizer(ch, p, u, s)
}
