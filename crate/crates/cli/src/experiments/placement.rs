//! Single-panel placement by exhaustive search: SNR over every candidate
//! position and the argmax, optionally for several active/passive splits.

use irs_core::deploy::{grid_search, Domain, PlacementScenario, SearchGrid};
use irs_core::irs::IrsPanel;

use crate::scenario::Scenario;
use crate::table::ResultTable;
use crate::Result;

use super::to_db;

pub fn placement_scenario(s: &Scenario) -> Result<(PlacementScenario, SearchGrid)> {
    let c = s.section(&s.placement, "placement")?;
    let sc = PlacementScenario {
        tx: s.endpoint(&c.tx)?,
        rx: s.endpoint(&c.rx)?,
        panel: s.panel(&c.panel, None)?,
        budget: s.budget()?,
        models: s.models()?,
        wavelength: s.wavelength(),
        standoff: c.standoff,
        include_direct: s.include_direct,
    };
    let domain = match &c.rectangle {
        Some(r) => Domain::Rectangle {
            min: (r.min[0], r.min[1]),
            max: (r.max[0], r.max[1]),
            z: r.z,
        },
        None => sc.feasible_segment()?,
    };
    let grid = SearchGrid::new(domain, c.grid_step, c.refinement_levels)?;
    Ok((sc, grid))
}

pub fn run(s: &Scenario) -> Result<Vec<ResultTable>> {
    let c = s.section(&s.placement, "placement")?;
    let (sc, grid) = placement_scenario(s)?;

    let mut panels: Vec<(usize, IrsPanel)> = vec![(sc.panel.active_count(), sc.panel.clone())];
    if !c.hybrid_n_active.is_empty() {
        let active = s.active_params(&c.panel)?;
        for &k in &c.hybrid_n_active {
            panels.push((k, sc.hybrid_panel(k, active)?));
        }
    }

    let mut heatmap = ResultTable::new("placement_heatmap", &["n_active", "level", "x", "y", "z", "snr_db"]);
    let mut summary = ResultTable::new("placement", &["n_active", "x", "y", "z", "snr_db", "d_tx", "d_rx"]);
    summary.meta("panel", &c.panel);
    summary.meta("elements", sc.panel.element_count());
    for (k, panel) in &panels {
        let n = panel.element_count();
        let sol = grid_search(&grid, &[n], |p| sc.feasible(p), |p| sc.snr_with(panel, p))?;
        for t in &sol.trace {
            let p = t.positions[0];
            heatmap.push(vec![*k as f64, t.level as f64, p.x, p.y, p.z, to_db(t.objective)]);
        }
        let p = sol.positions[0];
        summary.push(vec![
            *k as f64,
            p.x,
            p.y,
            p.z,
            to_db(sol.objective),
            p.distance(&sc.tx.position),
            p.distance(&sc.rx.position),
        ]);
    }
    Ok(vec![summary, heatmap])
}
