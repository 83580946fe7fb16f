//! Tab-separated series for plotting tools.
//!
//! `loss_vs_round`, `acc_vs_round` and `avg_multicell` read an averaged
//! metrics file; `pareto_region` reads a sweep file. Every output has one
//! header line and one row per round (or per sweep point).

use crate::metrics::{fmt_f64, read_average, AverageRow};
use crate::pareto::read_pareto;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LossVsRound,
    AccVsRound,
    ParetoRegion,
    AvgMulticell,
}

impl FromStr for PlotKind {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, PlotError> {
        match s {
            "loss_vs_round" => Ok(PlotKind::LossVsRound),
            "acc_vs_round" => Ok(PlotKind::AccVsRound),
            "pareto_region" => Ok(PlotKind::ParetoRegion),
            "avg_multicell" => Ok(PlotKind::AvgMulticell),
            other => Err(PlotError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("unknown plot kind `{0}` (expected loss_vs_round, acc_vs_round, pareto_region or avg_multicell)")]
    UnknownKind(String),
    #[error("scheme filter selects no series")]
    EmptySelection,
    #[error("bad input: {0}")]
    Input(String),
}

fn keep(filter: Option<&[String]>, label: &str) -> bool {
    filter.is_none_or(|f| f.iter().any(|s| s.eq_ignore_ascii_case(label)))
}

fn check_filter(filter: Option<&[String]>) -> Result<(), PlotError> {
    match filter {
        Some([]) => Err(PlotError::EmptySelection),
        _ => Ok(()),
    }
}

/// Series names in first-seen order.
fn series_order(rows: &[AverageRow], name: impl Fn(&AverageRow) -> String) -> Vec<String> {
    let mut seen = Vec::new();
    for r in rows {
        let n = name(r);
        if !seen.contains(&n) {
            seen.push(n);
        }
    }
    seen
}

fn table(rows: &[AverageRow], name: impl Fn(&AverageRow) -> String, value: impl Fn(&AverageRow) -> f64) -> String {
    let names = series_order(rows, &name);
    let mut by_round: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for r in rows {
        let col = names.iter().position(|n| *n == name(r)).expect("series listed");
        by_round.entry(r.round).or_insert_with(|| vec![None; names.len()])[col] = Some(value(r));
    }
    let mut out = String::from("round");
    for n in &names {
        out.push('\t');
        out.push_str(n);
    }
    out.push('\n');
    for (round, vals) in by_round {
        write!(out, "{round}").unwrap();
        for v in vals {
            out.push('\t');
            out.push_str(&v.map(fmt_f64).unwrap_or_else(|| "nan".into()));
        }
        out.push('\n');
    }
    out
}

/// Mean over cells of every (scheme, round).
pub fn cell_means(rows: &[AverageRow]) -> Vec<AverageRow> {
    let schemes = series_order(rows, |r| r.scheme.clone());
    let mut acc: BTreeMap<(usize, usize), (AverageRow, usize)> = BTreeMap::new();
    for r in rows {
        let s = schemes.iter().position(|x| *x == r.scheme).expect("scheme listed");
        let e = acc.entry((s, r.round)).or_insert_with(|| {
            (
                AverageRow {
                    cell: 0,
                    train_loss: 0.0,
                    test_acc: 0.0,
                    zeta_dl: 0.0,
                    zeta_ul: 0.0,
                    e_dl: 0.0,
                    e_ul: 0.0,
                    gap: 0.0,
                    ..r.clone()
                },
                0,
            )
        });
        e.0.train_loss += r.train_loss;
        e.0.test_acc += r.test_acc;
        e.0.zeta_dl = r.zeta_dl;
        e.0.zeta_ul = r.zeta_ul;
        e.0.e_dl += r.e_dl;
        e.0.e_ul += r.e_ul;
        e.0.gap += r.gap;
        e.1 += 1;
    }
    acc.into_values()
        .map(|(mut r, n)| {
            let n = n as f64;
            r.train_loss /= n;
            r.test_acc /= n;
            r.e_dl /= n;
            r.e_ul /= n;
            r.gap /= n;
            r
        })
        .collect()
}

/// Plot-ready TSV for `kind`, read from the text of the matching input file.
pub fn emit_plot_data(kind: PlotKind, input: &str, schemes: Option<&[String]>) -> Result<String, PlotError> {
    check_filter(schemes)?;
    if kind == PlotKind::ParetoRegion {
        let points: Vec<_> = read_pareto(input.as_bytes())
            .map_err(PlotError::Input)?
            .into_iter()
            .filter(|p| keep(schemes, &p.label))
            .collect();
        if points.is_empty() {
            return Err(PlotError::EmptySelection);
        }
        let cells = points[0].gaps.len();
        let mut out = String::from("kind\tlabel\tkappa_bar");
        for m in 1..=cells {
            write!(out, "\tgap_{m}").unwrap();
        }
        out.push('\n');
        for p in points {
            write!(
                out,
                "{}\t{}\t{}",
                p.kind.as_str(),
                p.label,
                p.kappa_bar.map(fmt_f64).unwrap_or_else(|| "nan".into())
            )
            .unwrap();
            for g in p.gaps {
                write!(out, "\t{}", fmt_f64(g)).unwrap();
            }
            out.push('\n');
        }
        return Ok(out);
    }
    let rows: Vec<AverageRow> = read_average(input.as_bytes())
        .map_err(PlotError::Input)?
        .into_iter()
        .filter(|r| keep(schemes, &r.scheme))
        .collect();
    if rows.is_empty() {
        return Err(PlotError::EmptySelection);
    }
    let per_cell = |r: &AverageRow| format!("{} / cell {}", r.scheme, r.cell);
    Ok(match kind {
        PlotKind::LossVsRound => table(&rows, per_cell, |r| r.train_loss),
        PlotKind::AccVsRound => table(&rows, per_cell, |r| r.test_acc),
        PlotKind::AvgMulticell => {
            let means = cell_means(&rows);
            let mut both: Vec<AverageRow> = Vec::with_capacity(2 * means.len());
            for r in &means {
                both.push(AverageRow {
                    scheme: format!("{} / loss", r.scheme),
                    ..r.clone()
                });
                both.push(AverageRow {
                    scheme: format!("{} / acc", r.scheme),
                    train_loss: r.test_acc,
                    ..r.clone()
                });
            }
            table(&both, |r| r.scheme.clone(), |r| r.train_loss)
        }
        PlotKind::ParetoRegion => unreachable!(),
    })
}
