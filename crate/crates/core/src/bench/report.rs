//! Aggregation of sweep records and the CSV files written from them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::BenchRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] =
    ["bits", "modulus", "multiplier", "method", "toffoli", "cnot", "depth", "ops", "qubits", "seconds", "model_hash"];
pub const RATIO_HEADER: [&str; 3] = ["bits", "baseline_over_heuristic", "heuristic_over_optimal"];
const ERROR_HEADER: [&str; 6] = ["bits", "modulus", "multiplier", "method", "model_hash", "error"];
const SUMMARY_HEADER: [&str; 6] = ["bits", "method", "moduli", "records", "max_toffoli", "avg_toffoli"];

/// How averages are formed, stated in the summary file.
pub const AVERAGING: &str = "uniform over (M, C) records";

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub bits: u32,
    pub method: String,
    pub moduli: usize,
    pub records: usize,
    pub max_toffoli: u64,
    pub avg_toffoli: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioPoint {
    pub bits: u32,
    pub baseline_over_heuristic: Option<f64>,
    pub heuristic_over_optimal: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub model_hash: Option<String>,
    pub rows: Vec<SummaryRow>,
    pub ratios: Vec<RatioPoint>,
    /// Records skipped because they carry an error.
    pub errors: usize,
}

impl Summary {
    pub fn row(&self, bits: u32, method: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.bits == bits && r.method == method)
    }
}

/// Per-width maxima and averages per method, plus the ratio series.
/// Records with errors are counted but not averaged.
pub fn aggregate(records: &[BenchRecord]) -> Result<Summary> {
    let mut model_hash: Option<&str> = None;
    for r in records {
        match model_hash {
            None => model_hash = Some(&r.model_hash),
            Some(h) if h != r.model_hash => {
                return Err(Error::MixedModels(h.to_string(), r.model_hash.clone()))
            }
            _ => {}
        }
    }
    struct Acc<'a> {
        moduli: BTreeSet<&'a str>,
        count: usize,
        sum: u128,
        max: u64,
    }
    let mut groups: BTreeMap<(u32, &str), Acc> = BTreeMap::new();
    let mut errors = 0;
    for r in records {
        if !r.is_ok() {
            errors += 1;
            continue;
        }
        let acc = groups
            .entry((r.bits, r.method.as_str()))
            .or_insert_with(|| Acc { moduli: BTreeSet::new(), count: 0, sum: 0, max: 0 });
        acc.moduli.insert(&r.modulus);
        acc.count += 1;
        acc.sum += r.toffoli as u128;
        acc.max = acc.max.max(r.toffoli);
    }
    let rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((bits, method), acc)| SummaryRow {
            bits,
            method: method.to_string(),
            moduli: acc.moduli.len(),
            records: acc.count,
            max_toffoli: acc.max,
            avg_toffoli: acc.sum as f64 / acc.count as f64,
        })
        .collect();

    let widths: BTreeSet<u32> = rows.iter().map(|r| r.bits).collect();
    let avg = |bits: u32, method: &str| {
        rows.iter().find(|r| r.bits == bits && r.method == method).map(|r| r.avg_toffoli)
    };
    let ratio = |num: Option<f64>, den: Option<f64>| match (num, den) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let ratios = widths
        .into_iter()
        .map(|bits| RatioPoint {
            bits,
            baseline_over_heuristic: ratio(avg(bits, "baseline"), avg(bits, "heuristic")),
            heuristic_over_optimal: ratio(avg(bits, "heuristic"), avg(bits, "optimal")),
        })
        .collect();
    Ok(Summary { model_hash: model_hash.map(str::to_string), rows, ratios, errors })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Writes the successful records under the fixed header.
pub fn write_csv(path: &Path, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records.iter().filter(|r| r.is_ok()) {
        w.write_record([
            r.bits.to_string(),
            r.modulus.clone(),
            r.multiplier.clone(),
            r.method.clone(),
            r.toffoli.to_string(),
            r.cnot.to_string(),
            r.depth.to_string(),
            r.ops.to_string(),
            r.qubits.to_string(),
            format!("{:.6}", r.seconds),
            r.model_hash.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse { line: 1, message: format!("unexpected header {header:?}") });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |field: &str| Error::Parse { line: i + 2, message: format!("bad {field}") };
        let num = |k: usize| row[k].parse::<u64>().map_err(|_| bad(CSV_HEADER[k]));
        out.push(BenchRecord {
            bits: num(0)? as u32,
            modulus: row[1].to_string(),
            multiplier: row[2].to_string(),
            method: row[3].to_string(),
            toffoli: num(4)?,
            cnot: num(5)?,
            depth: num(6)?,
            ops: num(7)? as usize,
            qubits: num(8)?,
            seconds: row[9].parse().map_err(|_| bad("seconds"))?,
            model_hash: row[10].to_string(),
            error: None,
        });
    }
    Ok(out)
}

/// Writes the failed records; returns how many there were.
pub fn write_errors(path: &Path, records: &[BenchRecord]) -> Result<usize> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ERROR_HEADER)?;
    let mut count = 0;
    for r in records {
        if let Some(e) = &r.error {
            w.write_record([&r.bits.to_string(), &r.modulus, &r.multiplier, &r.method, &r.model_hash, e])?;
            count += 1;
        }
    }
    w.flush()?;
    Ok(count)
}

/// Per-width, per-method table preceded by one `#` metadata line.
pub fn write_summary_csv(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = format!(
        "# averaging: {AVERAGING}; model_hash: {}; records_with_errors: {}\n",
        summary.model_hash.as_deref().unwrap_or("none"),
        summary.errors
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in &summary.rows {
        w.write_record([
            r.bits.to_string(),
            r.method.clone(),
            r.moduli.to_string(),
            r.records.to_string(),
            r.max_toffoli.to_string(),
            format!("{:.3}", r.avg_toffoli),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_ratio_csv(path: &Path, ratios: &[RatioPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RATIO_HEADER)?;
    for p in ratios {
        w.write_record([
            p.bits.to_string(),
            fmt_opt(p.baseline_over_heuristic),
            fmt_opt(p.heuristic_over_optimal),
        ])?;
    }
    w.flush()?;
    Ok(())
}
