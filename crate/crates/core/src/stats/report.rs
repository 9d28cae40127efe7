//! CSV forms of a comparison.
//!
//! `per_dataset.csv` has a `dataset` column, one accuracy column per method
//! (empty when skipped), and a `skipped` column naming the skipped methods
//! separated by `;`. Summary files hold one row per method with
//! `average_accuracy` and `average_rank`, followed by `#` footer lines.

use std::io::{Read, Write};

use super::{AccuracyMatrix, RankReport, StatsError};

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_per_dataset_csv<W: Write>(matrix: &AccuracyMatrix, out: W) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["dataset".to_string()];
    header.extend(matrix.methods().iter().cloned());
    header.push("skipped".into());
    w.write_record(&header)?;
    for (d, name) in matrix.datasets().iter().enumerate() {
        let mut row = vec![name.clone()];
        let mut skipped = Vec::new();
        for (m, method) in matrix.methods().iter().enumerate() {
            match matrix.cell(m, d) {
                Some(v) => row.push(fmt6(v)),
                None => {
                    row.push(String::new());
                    skipped.push(method.as_str());
                }
            }
        }
        row.push(skipped.join(";"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_per_dataset_csv<R: Read>(input: R) -> Result<AccuracyMatrix, StatsError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols[0] != "dataset" {
        return Err(StatsError::Format("expected a header starting with `dataset`".into()));
    }
    let has_skipped = cols.last() == Some(&"skipped");
    let methods: Vec<String> =
        cols[1..cols.len() - usize::from(has_skipped)].iter().map(|s| s.to_string()).collect();
    let mut datasets = Vec::new();
    let mut cells = vec![Vec::new(); methods.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        datasets.push(rec.get(0).unwrap_or_default().to_string());
        for (m, column) in cells.iter_mut().enumerate() {
            let raw = rec.get(m + 1).unwrap_or_default().trim();
            let cell = if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<f64>().map_err(|_| {
                    StatsError::Format(format!("record {}: {raw:?} is not a number", line + 1))
                })?)
            };
            column.push(cell);
        }
    }
    if datasets.is_empty() {
        return Err(StatsError::NoDatasets);
    }
    AccuracyMatrix::new(methods, datasets, cells)
}

/// Summary rows for the methods in `rows` (all methods when `None`), in the
/// given order.
pub fn write_summary_csv<W: Write>(
    report: &RankReport,
    rows: Option<&[usize]>,
    mut out: W,
) -> Result<(), StatsError> {
    let all: Vec<usize> = (0..report.methods.len()).collect();
    let rows = rows.unwrap_or(&all);
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["method", "average_accuracy", "average_rank"])?;
        for &m in rows {
            let acc = report.average_accuracy[m].map(fmt6).unwrap_or_default();
            w.write_record([report.methods[m].clone(), acc, fmt6(report.average_rank[m])])?;
        }
        w.flush()?;
    }
    writeln!(out, "# ranked_datasets,{}", report.ranked_datasets)?;
    writeln!(out, "# friedman_statistic,{}", fmt6(report.friedman_statistic))?;
    match report.cd {
        Some(cd) => writeln!(out, "# critical_difference_alpha_0.05,{}", fmt6(cd))?,
        None => writeln!(out, "# critical_difference_alpha_0.05,unavailable")?,
    }
    for clique in &report.cliques {
        let names: Vec<&str> = clique.iter().map(|&m| report.methods[m].as_str()).collect();
        writeln!(out, "# clique,{}", names.join(";"))?;
    }
    for (dataset, methods) in &report.skipped {
        writeln!(out, "# skipped,{dataset},{}", methods.join(";"))?;
    }
    Ok(())
}
