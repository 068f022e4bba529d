//! RSRP distributions and IRS on/off improvement statistics from a
//! measurement log.

use std::path::Path;

use irs_core::fieldtrial::{
    cdf, fraction_at_or_below, improvement_by_location, improvement_stats, ImprovementStats, MeasurementLog,
    MeasurementRecord,
};

use crate::scenario::Scenario;
use crate::table::ResultTable;
use crate::{CliError, Result};

/// Synthetic log used when the scenario names none.
pub const BUNDLED_LOG: &str = include_str!("../../scenarios/fieldtrial_log.csv");

pub fn load_log(s: &Scenario, base_dir: Option<&Path>) -> Result<MeasurementLog> {
    let c = s.section(&s.fieldtrial, "fieldtrial")?;
    Ok(match &c.log {
        Some(p) => {
            let path = base_dir.map_or_else(|| Path::new(p).to_path_buf(), |d| d.join(p));
            if !path.exists() {
                return Err(CliError::Io(format!("measurement log {} not found", path.display())));
            }
            MeasurementLog::from_path(&path)?
        }
        None => MeasurementLog::from_reader(BUNDLED_LOG.as_bytes())?,
    })
}

fn stats_row(group: usize, s: &ImprovementStats) -> Vec<f64> {
    let nan = f64::NAN;
    let r = s.rsrp;
    let t = s.throughput;
    vec![
        group as f64,
        r.map_or(0.0, |r| r.samples as f64),
        r.map_or(nan, |r| r.mean_off),
        r.map_or(nan, |r| r.mean_on),
        r.map_or(nan, |r| r.gain_db),
        t.map_or(0.0, |t| t.samples as f64),
        t.map_or(nan, |t| t.mean_off),
        t.map_or(nan, |t| t.mean_on),
        t.map_or(nan, |t| t.gain_percent),
    ]
}

pub fn run(s: &Scenario, base_dir: Option<&Path>) -> Result<Vec<ResultTable>> {
    let c = s.section(&s.fieldtrial, "fieldtrial")?;
    let log = load_log(s, base_dir)?;
    let off = log.column(|r| r.rsrp_off);
    let on = log.column(|r| r.rsrp_on);

    let mut t_cdf = ResultTable::new("fieldtrial_cdf", &["irs_on", "rsrp_dbm", "fraction"]);
    for (flag, values) in [(0.0, &off), (1.0, &on)] {
        if values.is_empty() {
            continue;
        }
        for (v, f) in cdf(values)? {
            t_cdf.push(vec![flag, v, f]);
        }
    }

    let groups = improvement_by_location(&log);
    let mut t_frac = ResultTable::new(
        "fieldtrial_fraction",
        &["group", "threshold_dbm", "fraction_off", "fraction_on"],
    );
    for (g, id) in std::iter::once(None)
        .chain(groups.iter().map(|(id, _)| Some(id)))
        .enumerate()
    {
        let pick = |f: fn(&MeasurementRecord) -> Option<f64>| -> Vec<f64> {
            log.records
                .iter()
                .filter(|r| id.is_none_or(|id| r.location_id.as_deref().unwrap_or("") == id))
                .filter_map(f)
                .collect()
        };
        let (g_off, g_on) = (pick(|r| r.rsrp_off), pick(|r| r.rsrp_on));
        for &x in &c.rsrp_thresholds_dbm {
            t_frac.push(vec![
                g as f64,
                x,
                fraction_at_or_below(&g_off, x),
                fraction_at_or_below(&g_on, x),
            ]);
        }
    }

    let mut t_stats = ResultTable::new(
        "fieldtrial_stats",
        &[
            "group",
            "rsrp_samples",
            "rsrp_off_dbm",
            "rsrp_on_dbm",
            "rsrp_gain_db",
            "thr_samples",
            "thr_off_mbps",
            "thr_on_mbps",
            "thr_gain_percent",
        ],
    );
    t_stats.meta("group_0", "all");
    t_stats.push(stats_row(0, &improvement_stats(&log)?));
    for (i, (id, st)) in groups.iter().enumerate() {
        t_stats.meta(&format!("group_{}", i + 1), id);
        t_stats.push(stats_row(i + 1, st));
    }
    Ok(vec![t_stats, t_frac, t_cdf])
}
