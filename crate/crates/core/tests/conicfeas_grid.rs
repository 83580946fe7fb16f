//! Phase-I verdicts against brute-force grid evaluation.

use mcfl_core::conicfeas::{check_feasible, SocCone, SocFeasibilityProblem};
use mcfl_core::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-9;

fn random_problem(rng: &mut impl Rng, n: usize) -> SocFeasibilityProblem<f64> {
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

/// Lipschitz constant of the max-violation function in the 2-norm.
fn lipschitz(p: &SocFeasibilityProblem<f64>) -> f64 {
    p.cones
        .iter()
        .map(|c| {
            let fro: f64 = c.a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            fro + c.c.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Minimum violation over a regular grid with `pts` points per axis.
fn grid_min(p: &SocFeasibilityProblem<f64>, pts: usize) -> f64 {
    let n = p.n;
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    loop {
        for i in 0..n {
            x[i] = idx[i] as f64 / (pts - 1) as f64;
        }
        best = best.min(p.max_violation(&x));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            idx[i] += 1;
            if idx[i] < pts {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn agreement(n: usize, pts: usize, wanted: usize, seed: u64) {
    let mut rng = stream_rng(seed, &[n as u64]);
    let (mut clear, mut tried) = (0, 0);
    while clear < wanted {
        tried += 1;
        assert!(tried < 20 * wanted, "too few margin-clear instances");
        let p = random_problem(&mut rng, n);
        let g = grid_min(&p, pts);
        let pad = lipschitz(&p) * (n as f64).sqrt() / (2.0 * (pts - 1) as f64);
        let verdict = check_feasible(&p, TOL).unwrap();
        if let Some(x) = verdict.witness() {
            assert!(p.in_box(x));
            assert!(p.max_violation(x) <= TOL);
        }
        if g <= -10.0 * TOL {
            assert!(verdict.is_feasible(), "grid finds margin {g} but verdict infeasible: {p:?}");
            clear += 1;
        } else if g - pad >= 10.0 * TOL {
            assert!(!verdict.is_feasible(), "grid min {g} (pad {pad}) but verdict feasible: {p:?}");
            clear += 1;
        }
    }
}

#[test]
fn two_variable_instances_match_grid() {
    agreement(2, 2001, 60, 1);
}

#[test]
fn four_variable_instances_match_grid() {
    agreement(4, 32, 15, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feasible_witnesses_reverify(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = stream_rng(seed, &[]);
        let p = random_problem(&mut rng, n);
        let v = check_feasible(&p, TOL).unwrap();
        if let Some(x) = v.witness() {
            prop_assert!(p.in_box(x));
            prop_assert!(p.max_violation(x) <= TOL);
        }
        prop_assert_eq!(v.clone(), check_feasible(&p, TOL).unwrap());
    }
}

/// Shifting every `d_j` by `δ` shifts the phase-I optimum by exactly `−δ`, so
/// the verdict must switch once, within the gray band, as `δ` sweeps.
#[test]
fn verdict_switches_sharply_under_offset() {
    let mut rng = stream_rng(3, &[]);
    for _ in 0..20 {
        let base = random_problem(&mut rng, 3);
        let shifted = |delta: f64| {
            let mut p = base.clone();
            for c in &mut p.cones {
                c.d += delta;
            }
            check_feasible(&p, TOL).unwrap().is_feasible()
        };
        let (mut lo, mut hi) = (-10.0, 10.0);
        assert!(!shifted(lo) && shifted(hi));
        while hi - lo > 1e-11 {
            let mid = 0.5 * (lo + hi);
            if shifted(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        for k in [1.0, 3.0, 10.0, 100.0] {
            assert!(!shifted(lo - 20.0 * k * TOL), "infeasible side at {k}");
            assert!(shifted(hi + 20.0 * k * TOL), "feasible side at {k}");
        }
    }
}
