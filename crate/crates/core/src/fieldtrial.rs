//! Statistics over drive-test style measurement logs with the IRS on and off.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// One measurement location. RSRP in dBm, throughput in Mbps; any field may
/// be missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementRecord {
    pub location_id: Option<String>,
    pub rsrp_off: Option<f64>,
    pub rsrp_on: Option<f64>,
    pub thr_off: Option<f64>,
    pub thr_on: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLog {
    pub records: Vec<MeasurementRecord>,
}

const FIELDS: [&str; 5] = ["location_id", "rsrp_off", "rsrp_on", "thr_off", "thr_on"];

impl MeasurementLog {
    pub fn new(records: Vec<MeasurementRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Log("no records".into()));
        }
        for (i, r) in records.iter().enumerate() {
            for v in [r.rsrp_off, r.rsrp_on, r.thr_off, r.thr_on].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::Log(format!("record {i}: non-finite value")));
                }
            }
        }
        Ok(Self { records })
    }

    /// Comma-separated text with a header row; columns are matched by name,
    /// unknown columns are ignored and empty cells mean "absent".
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Log(format!("header: {e}")))?.clone();
        let mut columns = [None; 5];
        for (c, name) in headers.iter().enumerate() {
            if let Some(k) = FIELDS.iter().position(|f| *f == name) {
                columns[k] = Some(c);
            }
        }
        if columns[1..].iter().all(Option::is_none) {
            return Err(Error::Log("header names none of the measurement fields".into()));
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Log(e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line());
            let cell = |k: usize| columns[k].and_then(|c| row.get(c)).filter(|s| !s.is_empty());
            let num = |k: usize| -> Result<Option<f64>> {
                match cell(k) {
                    None => Ok(None),
                    Some(s) => {
                        let v: f64 = s
                            .parse()
                            .map_err(|_| Error::Log(format!("line {line}: `{}` is not a number: {s:?}", FIELDS[k])))?;
                        if !v.is_finite() {
                            return Err(Error::Log(format!("line {line}: `{}` is not finite", FIELDS[k])));
                        }
                        Ok(Some(v))
                    }
                }
            };
            records.push(MeasurementRecord {
                location_id: cell(0).map(str::to_owned),
                rsrp_off: num(1)?,
                rsrp_on: num(2)?,
                thr_off: num(3)?,
                thr_on: num(4)?,
            });
        }
        Self::new(records)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Log(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    /// Values of one column, skipping absent cells.
    pub fn column(&self, pick: impl Fn(&MeasurementRecord) -> Option<f64>) -> Vec<f64> {
        self.records.iter().filter_map(pick).collect()
    }
}

/// Empirical CDF as `(value, fraction <= value)` at each distinct value.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("cdf input"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cdf input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    Ok(out)
}

/// Smallest value whose cumulative fraction reaches `q`.
pub fn quantile(cdf: &[(f64, f64)], q: f64) -> Option<f64> {
    cdf.iter().find(|(_, f)| *f >= q - 1e-12).map(|(v, _)| *v)
}

/// Fraction of values at or below `x`.
pub fn fraction_at_or_below(values: &[f64], x: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| **v <= x).count() as f64 / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsrpStats {
    pub samples: usize,
    pub mean_off: f64,
    pub mean_on: f64,
    /// Averaged in the dB domain.
    pub gain_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputStats {
    pub samples: usize,
    pub mean_off: f64,
    pub mean_on: f64,
    pub gain_percent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementStats {
    pub rsrp: Option<RsrpStats>,
    pub throughput: Option<ThroughputStats>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn paired(
    records: &[&MeasurementRecord],
    f: impl Fn(&MeasurementRecord) -> (Option<f64>, Option<f64>),
) -> (Vec<f64>, Vec<f64>) {
    records
        .iter()
        .filter_map(|r| match f(r) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        })
        .unzip()
}

fn stats_of(records: &[&MeasurementRecord]) -> Result<ImprovementStats> {
    let (r_off, r_on) = paired(records, |r| (r.rsrp_off, r.rsrp_on));
    let (t_off, t_on) = paired(records, |r| (r.thr_off, r.thr_on));
    if r_off.is_empty() && t_off.is_empty() {
        return Err(Error::Log("no paired on/off records".into()));
    }
    let rsrp = (!r_off.is_empty()).then(|| {
        let (off, on) = (mean(&r_off), mean(&r_on));
        RsrpStats {
            samples: r_off.len(),
            mean_off: off,
            mean_on: on,
            gain_db: on - off,
        }
    });
    let throughput = (!t_off.is_empty()).then(|| {
        let (off, on) = (mean(&t_off), mean(&t_on));
        ThroughputStats {
            samples: t_off.len(),
            mean_off: off,
            mean_on: on,
            gain_percent: 100.0 * (on - off) / off,
        }
    });
    Ok(ImprovementStats { rsrp, throughput })
}

/// Improvement over all records with paired on/off values.
pub fn improvement_stats(log: &MeasurementLog) -> Result<ImprovementStats> {
    let all: Vec<&MeasurementRecord> = log.records.iter().collect();
    stats_of(&all)
}

/// Improvement per `location_id` (records without an id are grouped under
/// the empty string). Groups without paired data are skipped.
pub fn improvement_by_location(log: &MeasurementLog) -> Vec<(String, ImprovementStats)> {
    let mut groups: BTreeMap<String, Vec<&MeasurementRecord>> = BTreeMap::new();
    for r in &log.records {
        groups
            .entry(r.location_id.clone().unwrap_or_default())
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .filter_map(|(k, v)| stats_of(&v).ok().map(|s| (k, s)))
        .collect()
}
