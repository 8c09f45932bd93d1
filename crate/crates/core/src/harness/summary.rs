//! Per-estimator summaries and the files written for a run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::Method;

use super::runner::{EstimateRow, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub replicates: usize,
    pub failures: usize,
    pub log_evidence_mean: f64,
    pub log_evidence_sd: f64,
    pub log_evidence_q1: f64,
    pub log_evidence_median: f64,
    pub log_evidence_q3: f64,
    pub r_mean: f64,
    pub r_sd: f64,
    pub r_q1: f64,
    pub r_median: f64,
    pub r_q3: f64,
    pub a_size_mean: Option<f64>,
    pub a_size_sd: Option<f64>,
    pub delta_mean: Option<f64>,
    pub delta_sd: Option<f64>,
    pub elapsed_mean: f64,
    pub elapsed_sd: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

fn quartiles(v: &[f64]) -> [f64; 3] {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    [quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75)]
}

/// One row per estimator present, in the canonical estimator order.
pub fn summarize(rows: &[EstimateRow]) -> Vec<SummaryRow> {
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|method| {
            let mine: Vec<&EstimateRow> = rows.iter().filter(|r| r.method == method).collect();
            let ok: Vec<&&EstimateRow> = mine.iter().filter(|r| r.error.is_none()).collect();
            let le: Vec<f64> = ok.iter().filter_map(|r| r.log_evidence).collect();
            let rr: Vec<f64> = ok.iter().filter_map(|r| r.r).collect();
            let a: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.a_size.map(|x| x as f64))
                .collect();
            let d: Vec<f64> = ok.iter().filter_map(|r| r.delta).collect();
            let el: Vec<f64> = ok.iter().map(|r| r.elapsed_seconds).collect();
            let (le_m, le_s) = mean_sd(&le);
            let [le_1, le_2, le_3] = quartiles(&le);
            let (r_m, r_s) = mean_sd(&rr);
            let [r_1, r_2, r_3] = quartiles(&rr);
            let opt = |v: &[f64]| {
                if v.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_sd(v);
                    (Some(m), Some(s))
                }
            };
            let (a_m, a_s) = opt(&a);
            let (d_m, d_s) = opt(&d);
            let (e_m, e_s) = mean_sd(&el);
            SummaryRow {
                method,
                replicates: mine.len(),
                failures: mine.len() - ok.len(),
                log_evidence_mean: le_m,
                log_evidence_sd: le_s,
                log_evidence_q1: le_1,
                log_evidence_median: le_2,
                log_evidence_q3: le_3,
                r_mean: r_m,
                r_sd: r_s,
                r_q1: r_1,
                r_median: r_2,
                r_q3: r_3,
                a_size_mean: a_m,
                a_size_sd: a_s,
                delta_mean: d_m,
                delta_sd: d_s,
                elapsed_mean: e_m,
                elapsed_sd: e_s,
            }
        })
        .collect()
}

fn write_table<W: Write>(
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in summary {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}

/// Writes `config.json`, `records.jsonl`, `chains.csv`, `long.csv`,
/// `summary.csv` and the per-statistic tables `log_evidence.csv`, `r.csv`,
/// `truncation.csv` and `elapsed.csv` into `dir`.
pub fn write_outputs(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&record.config)?,
    )?;

    let mut jsonl = BufWriter::new(File::create(dir.join("records.jsonl"))?);
    for row in &record.rows {
        serde_json::to_writer(&mut jsonl, row)?;
        jsonl.write_all(b"\n")?;
    }
    jsonl.flush()?;

    let mut chains = csv::Writer::from_path(dir.join("chains.csv"))?;
    for c in &record.chains {
        chains.serialize(c)?;
    }
    chains.flush()?;

    write_table(
        File::create(dir.join("long.csv"))?,
        &["estimator", "replicate", "log_evidence", "R"],
        record.rows.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.replicate.to_string(),
                opt(r.log_evidence),
                opt(r.r),
            ]
        }),
    )?;
    write_summary_csv(&record.summary, File::create(dir.join("summary.csv"))?)?;

    let s = &record.summary;
    write_table(
        File::create(dir.join("log_evidence.csv"))?,
        &["estimator", "mean", "sd", "q1", "median", "q3", "failures"],
        s.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.log_evidence_mean.to_string(),
                r.log_evidence_sd.to_string(),
                r.log_evidence_q1.to_string(),
                r.log_evidence_median.to_string(),
                r.log_evidence_q3.to_string(),
                r.failures.to_string(),
            ]
        }),
    )?;
    write_table(
        File::create(dir.join("r.csv"))?,
        &["estimator", "mean", "sd", "q1", "median", "q3"],
        s.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.r_mean.to_string(),
                r.r_sd.to_string(),
                r.r_q1.to_string(),
                r.r_median.to_string(),
                r.r_q3.to_string(),
            ]
        }),
    )?;
    write_table(
        File::create(dir.join("truncation.csv"))?,
        &[
            "estimator",
            "a_size_mean",
            "a_size_sd",
            "delta_mean",
            "delta_sd",
        ],
        s.iter().filter(|r| r.a_size_mean.is_some()).map(|r| {
            vec![
                r.method.to_string(),
                opt(r.a_size_mean),
                opt(r.a_size_sd),
                opt(r.delta_mean),
                opt(r.delta_sd),
            ]
        }),
    )?;
    write_table(
        File::create(dir.join("elapsed.csv"))?,
        &["estimator", "mean_seconds", "sd_seconds"],
        s.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.elapsed_mean.to_string(),
                r.elapsed_sd.to_string(),
            ]
        }),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, replicate: usize, le: f64, a: Option<usize>) -> EstimateRow {
        EstimateRow {
            replicate,
            seed: 7,
            method,
            k: 2,
            log_evidence: Some(le),
            std_error: Some(0.01),
            ess: Some(500.0),
            r: Some(0.5),
            a_size: a,
            phi_hat: a.map(|_| 0.0),
            delta: a.map(|_| 0.55),
            evaluations: Some(10),
            elapsed_seconds: 0.25,
            error: None,
        }
    }

    #[test]
    fn single_replicate_has_zero_spread() {
        let s = summarize(&[row(Method::Ds, 0, -120.5, None)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].log_evidence_sd, 0.0);
        assert_eq!(s[0].r_sd, 0.0);
        assert_eq!(s[0].log_evidence_median, -120.5);
        assert_eq!(s[0].a_size_mean, None);
    }

    #[test]
    fn failures_are_counted_and_excluded() {
        let mut bad = row(Method::Is, 1, 0.0, None);
        bad.log_evidence = None;
        bad.error = Some("boom".into());
        let s = summarize(&[
            row(Method::Is, 0, -3.0, None),
            bad,
            row(Method::DsApprox, 0, -3.0, Some(1)),
        ]);
        let is = s.iter().find(|r| r.method == Method::Is).unwrap();
        assert_eq!((is.replicates, is.failures), (2, 1));
        assert_eq!(is.log_evidence_mean, -3.0);
        let ds = s.iter().find(|r| r.method == Method::DsApprox).unwrap();
        assert_eq!(ds.a_size_mean, Some(1.0));
        assert_eq!(ds.a_size_sd, Some(0.0));
    }

    #[test]
    fn quartiles_interpolate() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), [2.0, 3.0, 4.0]);
        assert_eq!(quartiles(&[1.0, 2.0]), [1.25, 1.5, 1.75]);
    }

    #[test]
    fn summary_csv_round_trips() {
        let rows: Vec<EstimateRow> = (0..5)
            .flat_map(|r| {
                [
                    row(Method::Chib, r, -100.0 - 0.1 * r as f64 / 3.0, None),
                    row(Method::DsApprox, r, -99.9, Some(1 + r % 2)),
                ]
            })
            .collect();
        let s = summarize(&rows);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        write_summary_csv(&s, File::create(&path).unwrap()).unwrap();
        assert_eq!(read_summary_csv(&path).unwrap(), s);
    }
}
