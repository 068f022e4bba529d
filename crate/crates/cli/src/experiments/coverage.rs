//! Worst-case received power over an area with static panel phases: BS-side
//! against user-side placement, and D-MIMO with several BSs sharing the
//! BS-side panel.

use irs_core::deploy::dmimo_associate;
use irs_core::link::{area_min_power, wide_beam_config, Area};
use irs_core::propagation::{Endpoint, Position};
use rayon::prelude::*;

use crate::scenario::Scenario;
use crate::table::ResultTable;
use crate::{loglog_slope, Result};

use super::to_dbm;

pub fn area(s: &Scenario) -> Result<Area> {
    let c = s.section(&s.coverage, "coverage")?;
    let a = &c.area;
    Ok(Area {
        x_min: a.center[0] - a.half_width[0],
        x_max: a.center[0] + a.half_width[0],
        y_min: a.center[1] - a.half_width[1],
        y_max: a.center[1] + a.half_width[1],
        z: a.z,
        nx: a.grid[0],
        ny: a.grid[1],
    }
    .validated()?)
}

/// `b` BSs evenly spread over the arc around the BS-side panel, centered on
/// the direction of the configured BS (a single BS sits on that direction).
pub fn dmimo_bss(s: &Scenario, b: usize) -> Result<Vec<Endpoint>> {
    let c = s.section(&s.coverage, "coverage")?;
    let bs = s.endpoint(&c.bs)?;
    let irs = s.position(&c.bs_side_irs)?;
    let center = (bs.position.y - irs.y).atan2(bs.position.x - irs.x);
    (0..b)
        .map(|i| {
            let offset = if b == 1 {
                0.0
            } else {
                c.dmimo_spread * (i as f64 / (b - 1) as f64 - 0.5)
            };
            let th = center + offset;
            Ok(Endpoint {
                position: Position::new(
                    irs.x + c.dmimo_radius * th.cos(),
                    irs.y + c.dmimo_radius * th.sin(),
                    bs.position.z,
                )?,
                geometry: bs.geometry,
            })
        })
        .collect()
}

/// Minimum power over the area with the panel's static wide beam.
pub fn side_min_power(s: &Scenario, panel_id: &str, n: usize) -> Result<f64> {
    let c = s.section(&s.coverage, "coverage")?;
    let area = area(s)?;
    let bs = s.endpoint(&c.bs)?;
    let models = s.models()?;
    let lambda = s.wavelength();
    let panel = s.panel(panel_id, Some(n))?;
    let cfg = wide_beam_config(&bs, &panel, &area.points(), &models, lambda)?;
    Ok(area_min_power(&s.budget()?, &bs, &cfg, &area, &models, lambda)?.min_power)
}

pub fn dmimo_min_power(s: &Scenario, n: usize, b: usize) -> Result<f64> {
    let c = s.section(&s.coverage, "coverage")?;
    let panel = s.panel(&c.bs_side_irs, Some(n))?;
    Ok(dmimo_associate(
        &s.budget()?,
        &dmimo_bss(s, b)?,
        &area(s)?,
        &panel,
        &s.models()?,
        s.wavelength(),
    )?
    .min_power)
}

pub fn run(s: &Scenario) -> Result<Vec<ResultTable>> {
    let c = s.section(&s.coverage, "coverage")?;
    let ns: Vec<f64> = c.n_values.iter().map(|n| *n as f64).collect();

    let sides = c
        .n_values
        .par_iter()
        .map(|&n| {
            Ok((
                side_min_power(s, &c.bs_side_irs, n)?,
                side_min_power(s, &c.user_side_irs, n)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t_sides = ResultTable::new("coverage_sides", &["n", "bs_side_dbm", "user_side_dbm"]);
    let (bs_side, user_side): (Vec<f64>, Vec<f64>) = sides.into_iter().unzip();
    t_sides.meta("bs_side_slope", loglog_slope(&ns, &bs_side));
    t_sides.meta("user_side_slope", loglog_slope(&ns, &user_side));
    for (i, n) in ns.iter().enumerate() {
        t_sides.push(vec![*n, to_dbm(bs_side[i]), to_dbm(user_side[i])]);
    }

    let mut cols = vec!["n".to_string()];
    cols.extend(c.b_values.iter().map(|b| format!("b{b}_dbm")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t_dmimo = ResultTable::new("coverage_dmimo", &cols);
    let grid: Vec<(usize, usize)> = c
        .n_values
        .iter()
        .flat_map(|&n| c.b_values.iter().map(move |&b| (n, b)))
        .collect();
    let powers = grid
        .par_iter()
        .map(|&(n, b)| dmimo_min_power(s, n, b))
        .collect::<Result<Vec<f64>>>()?;
    let nb = c.b_values.len();
    for (j, b) in c.b_values.iter().enumerate() {
        let col: Vec<f64> = (0..ns.len()).map(|i| powers[i * nb + j]).collect();
        t_dmimo.meta(&format!("b{b}_slope"), loglog_slope(&ns, &col));
    }
    for (i, n) in ns.iter().enumerate() {
        let mut row = vec![*n];
        row.extend(powers[i * nb..(i + 1) * nb].iter().map(|p| to_dbm(*p)));
        t_dmimo.push(row);
    }
    Ok(vec![t_sides, t_dmimo])
}
