//! CSV rows and their averaging across repetitions.
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! give identical bytes. Infinite values appear as `inf`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

pub const METRICS_HEADER: [&str; 11] = [
    "repetition",
    "round",
    "cell",
    "scheme",
    "train_loss",
    "test_acc",
    "zeta_dl",
    "zeta_ul",
    "E_dl",
    "E_ul",
    "gap_m",
];

/// Values of one cell in one round of one scheme. `cell` is 1-based;
/// round 0 is the initial model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub repetition: usize,
    pub round: usize,
    pub cell: usize,
    pub scheme: String,
    pub train_loss: f64,
    pub test_acc: f64,
    pub zeta_dl: f64,
    pub zeta_ul: f64,
    pub e_dl: f64,
    pub e_ul: f64,
    pub gap: f64,
}

impl MetricsRow {
    fn values(&self) -> [f64; 7] {
        [
            self.train_loss,
            self.test_acc,
            self.zeta_dl,
            self.zeta_ul,
            self.e_dl,
            self.e_ul,
            self.gap,
        ]
    }
}

/// Mean over repetitions of one (scheme, round, cell).
#[derive(Debug, Clone, PartialEq)]
pub struct AverageRow {
    pub round: usize,
    pub cell: usize,
    pub scheme: String,
    pub train_loss: f64,
    pub test_acc: f64,
    pub zeta_dl: f64,
    pub zeta_ul: f64,
    pub e_dl: f64,
    pub e_ul: f64,
    pub gap: f64,
}

/// Channel-draw digest of one round, per scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DigestRow {
    pub repetition: usize,
    pub round: usize,
    pub scheme: String,
    pub digest: String,
}

/// Both sides of the convergence bound for one run of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub repetition: usize,
    pub cell: usize,
    pub scheme: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundRow {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"))
}

/// Averages rows over repetitions. Groups follow the order of `schemes`,
/// then round, then cell.
pub fn average(rows: &[MetricsRow], schemes: &[String]) -> Vec<AverageRow> {
    let mut groups: BTreeMap<(usize, usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let Some(s) = schemes.iter().position(|x| *x == r.scheme) else {
            continue;
        };
        let e = groups.entry((s, r.round, r.cell)).or_insert((vec![0.0; 7], 0));
        for (acc, v) in e.0.iter_mut().zip(r.values()) {
            *acc += v;
        }
        e.1 += 1;
    }
    groups
        .into_iter()
        .map(|((s, round, cell), (sum, n))| {
            let m: Vec<f64> = sum.iter().map(|x| x / n as f64).collect();
            AverageRow {
                round,
                cell,
                scheme: schemes[s].clone(),
                train_loss: m[0],
                test_acc: m[1],
                zeta_dl: m[2],
                zeta_ul: m[3],
                e_dl: m[4],
                e_ul: m[5],
                gap: m[6],
            }
        })
        .collect()
}

pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        let mut rec = vec![r.repetition.to_string(), r.round.to_string(), r.cell.to_string(), r.scheme.clone()];
        rec.extend(r.values().iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_average<W: Write>(out: W, rows: &[AverageRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&METRICS_HEADER[1..])?;
    for r in rows {
        let mut rec = vec![r.round.to_string(), r.cell.to_string(), r.scheme.clone()];
        rec.extend(
            [r.train_loss, r.test_acc, r.zeta_dl, r.zeta_ul, r.e_dl, r.e_ul, r.gap]
                .iter()
                .map(|&x| fmt_f64(x)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_digests<W: Write>(out: W, rows: &[DigestRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["repetition", "round", "scheme", "channel_digest"])?;
    for r in rows {
        w.write_record([r.repetition.to_string(), r.round.to_string(), r.scheme.clone(), r.digest.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds<W: Write>(out: W, rows: &[BoundRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["repetition", "cell", "scheme", "lhs", "rhs", "holds"])?;
    for r in rows {
        w.write_record([
            r.repetition.to_string(),
            r.cell.to_string(),
            r.scheme.clone(),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            r.holds().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_average`].
pub fn read_average<R: Read>(input: R) -> Result<Vec<AverageRow>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(METRICS_HEADER[1..].iter().copied()) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let int = |i: usize| rec[i].parse::<usize>().map_err(|e| format!("bad integer `{}`: {e}", &rec[i]));
            Ok(AverageRow {
                round: int(0)?,
                cell: int(1)?,
                scheme: rec[2].to_string(),
                train_loss: parse_f64(&rec[3])?,
                test_acc: parse_f64(&rec[4])?,
                zeta_dl: parse_f64(&rec[5])?,
                zeta_ul: parse_f64(&rec[6])?,
                e_dl: parse_f64(&rec[7])?,
                e_ul: parse_f64(&rec[8])?,
                gap: parse_f64(&rec[9])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: usize, scheme: &str, loss: f64) -> MetricsRow {
        MetricsRow {
            repetition: rep,
            round: 1,
            cell: 1,
            scheme: scheme.into(),
            train_loss: loss,
            test_acc: 0.5,
            zeta_dl: 0.0,
            zeta_ul: f64::INFINITY,
            e_dl: 0.0,
            e_ul: 0.1,
            gap: 0.2,
        }
    }

    #[test]
    fn averages_follow_scheme_order() {
        let rows = [row(0, "B", 1.0), row(1, "B", 3.0), row(0, "A", 5.0)];
        let avg = average(&rows, &["B".into(), "A".into()]);
        assert_eq!(avg.len(), 2);
        assert_eq!((avg[0].scheme.as_str(), avg[0].train_loss), ("B", 2.0));
        assert_eq!(avg[1].train_loss, 5.0);
        assert!(avg[0].zeta_ul.is_infinite());
    }

    #[test]
    fn average_round_trips_through_csv() {
        let avg = average(&[row(0, "DL-Opt & UL-Opt", 0.1 + 0.2)], &["DL-Opt & UL-Opt".into()]);
        let mut buf = Vec::new();
        write_average(&mut buf, &avg).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("round,cell,scheme,train_loss"));
        assert!(text.contains(",inf,"));
        assert_eq!(read_average(buf.as_slice()).unwrap(), avg);
    }

    #[test]
    fn metrics_header_is_fixed() {
        let mut buf = Vec::new();
        write_metrics(&mut buf, &[row(0, "Benchmark", 1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "repetition,round,cell,scheme,train_loss,test_acc,zeta_dl,zeta_ul,E_dl,E_ul,gap_m"
        );
    }
}
