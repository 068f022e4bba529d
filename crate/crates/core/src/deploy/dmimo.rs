use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::irs::IrsPanel;
use crate::link::{area_min_power, wide_beam_config, Area, TransmitBudget};
use crate::propagation::{Endpoint, LinkModels, Position};

#[derive(Debug, Clone, PartialEq)]
pub struct DmimoAssociation {
    pub points: Vec<Position>,
    /// Serving BS index per grid point.
    pub assignment: Vec<usize>,
    /// Received power from the serving BS per grid point.
    pub powers: Vec<f64>,
    pub min_power: f64,
    /// Static panel configuration used by each BS.
    pub configs: Vec<IrsPanel>,
}

fn azimuth(from: &Position, to: &Position) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

fn aim(
    bss: &[Endpoint],
    panel: &IrsPanel,
    points: &[Position],
    assignment: &[usize],
    previous: Option<&[IrsPanel]>,
    models: &LinkModels,
    wavelength: f64,
) -> Result<Vec<IrsPanel>> {
    (0..bss.len())
        .into_par_iter()
        .map(|b| {
            let sub: Vec<Position> = points
                .iter()
                .zip(assignment)
                .filter(|(_, a)| **a == b)
                .map(|(p, _)| *p)
                .collect();
            match (sub.is_empty(), previous) {
                (true, Some(prev)) => Ok(prev[b].clone()),
                (true, None) => wide_beam_config(&bss[b], panel, points, models, wavelength),
                _ => wide_beam_config(&bss[b], panel, &sub, models, wavelength),
            }
        })
        .collect()
}

/// `power[b][p]`: received power at point `p` from BS `b` with its configuration.
fn power_table(
    budget: &TransmitBudget,
    bss: &[Endpoint],
    configs: &[IrsPanel],
    area: &Area,
    models: &LinkModels,
    wavelength: f64,
) -> Result<Vec<Vec<f64>>> {
    bss.iter()
        .zip(configs)
        .map(|(bs, cfg)| Ok(area_min_power(budget, bs, cfg, area, models, wavelength)?.powers))
        .collect()
}

fn assign_by_power(table: &[Vec<f64>]) -> Vec<usize> {
    (0..table[0].len())
        .map(|p| {
            let mut best = 0;
            for b in 1..table.len() {
                if table[b][p] > table[best][p] {
                    best = b;
                }
            }
            best
        })
        .collect()
}

/// Split the area among BSs that reach it through one IRS, each BS using its
/// own static wide-beam configuration over its subarea.
///
/// Initial association ranks grid points and BSs by azimuth around the IRS
/// and hands out contiguous equal-size sectors. Each BS is then aimed at its
/// subarea, points are re-associated to the strongest BS, subareas are
/// recomputed and re-aimed, and points are re-associated once more.
pub fn dmimo_associate(
    budget: &TransmitBudget,
    bss: &[Endpoint],
    area: &Area,
    panel: &IrsPanel,
    models: &LinkModels,
    wavelength: f64,
) -> Result<DmimoAssociation> {
    if bss.is_empty() {
        return Err(Error::Empty("BS list"));
    }
    let points = area.points();
    let irs = panel.position;
    let b = bss.len();

    let mut bs_rank: Vec<usize> = (0..b).collect();
    bs_rank.sort_by(|&i, &j| {
        azimuth(&irs, &bss[i].position)
            .total_cmp(&azimuth(&irs, &bss[j].position))
            .then(i.cmp(&j))
    });
    let mut point_rank: Vec<usize> = (0..points.len()).collect();
    point_rank.sort_by(|&i, &j| {
        azimuth(&irs, &points[i])
            .total_cmp(&azimuth(&irs, &points[j]))
            .then(i.cmp(&j))
    });
    let mut assignment = vec![0; points.len()];
    for (r, &p) in point_rank.iter().enumerate() {
        assignment[p] = bs_rank[r * b / points.len()];
    }

    let mut configs = aim(bss, panel, &points, &assignment, None, models, wavelength)?;
    let mut table = power_table(budget, bss, &configs, area, models, wavelength)?;
    assignment = assign_by_power(&table);
    configs = aim(bss, panel, &points, &assignment, Some(&configs), models, wavelength)?;
    table = power_table(budget, bss, &configs, area, models, wavelength)?;
    assignment = assign_by_power(&table);
    let powers: Vec<f64> = assignment.iter().enumerate().map(|(p, &a)| table[a][p]).collect();
    let min_power = powers.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DmimoAssociation {
        points,
        assignment,
        powers,
        min_power,
        configs,
    })
}
