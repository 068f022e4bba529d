//! Double-IRS links with one active and one passive panel in either order,
//! plus the element split between two fixed panels.

use irs_core::deploy::{allocate_elements, order_hybrid_double, Domain, DoubleScenario, SearchGrid};
use irs_core::propagation::{dbm_to_watts, Position};

use crate::scenario::Scenario;
use crate::table::ResultTable;
use crate::Result;

use super::to_db;

fn segment(p: &[[f64; 3]; 2]) -> Result<Domain> {
    Ok(Domain::Segment {
        a: Position::new(p[0][0], p[0][1], p[0][2])?,
        b: Position::new(p[1][0], p[1][1], p[1][2])?,
    })
}

fn inter_fading(s: &Scenario) -> Option<(f64, u64)> {
    s.k_factor.is_finite().then_some((s.k_factor, s.seed))
}

/// Order-comparison scenario; panel positions and kinds are placeholders
/// overwritten by the search.
pub fn order_scenario(s: &Scenario) -> Result<(DoubleScenario, SearchGrid, SearchGrid)> {
    let c = s.section(&s.fig4, "fig4")?;
    let first = SearchGrid::new(segment(&c.first_segment)?, c.grid_step, 0)?;
    let second = SearchGrid::new(segment(&c.second_segment)?, c.grid_step, 0)?;
    let kind = s.panel_kind(&c.active)?;
    let sc = DoubleScenario {
        bs: s.endpoint(&c.bs)?,
        user: s.endpoint(&c.user)?,
        irs1: first.candidates()[0],
        irs2: second.candidates()[0],
        geometry: s.geometry(&c.active, None)?,
        kind1: kind,
        kind2: kind,
        budget: s.budget()?,
        models: s.models()?,
        wavelength: s.wavelength(),
        include_single_links: c.include_single_links,
        inter_fading: inter_fading(s),
    };
    Ok((sc, first, second))
}

pub fn allocation_scenario(s: &Scenario) -> Result<Option<DoubleScenario>> {
    let c = s.section(&s.fig4, "fig4")?;
    let Some(a) = &c.allocation else { return Ok(None) };
    Ok(Some(DoubleScenario {
        bs: s.endpoint(&a.bs)?,
        user: s.endpoint(&a.user)?,
        irs1: s.position(&a.irs1)?,
        irs2: s.position(&a.irs2)?,
        geometry: s.geometry(&a.irs1, None)?,
        kind1: s.panel_kind(&a.irs1)?,
        kind2: s.panel_kind(&a.irs2)?,
        budget: s.budget()?.with_power(dbm_to_watts(a.tx_power_dbm)),
        models: s.models()?,
        wavelength: s.wavelength(),
        include_single_links: a.include_single_links,
        inter_fading: inter_fading(s),
    }))
}

pub fn run(s: &Scenario) -> Result<Vec<ResultTable>> {
    let c = s.section(&s.fig4, "fig4")?;
    let (sc, first, second) = order_scenario(s)?;
    let active = s.active_params(&c.active)?;
    let cmp = order_hybrid_double(&sc, active, &c.n_values, &first, &second, c.split_divisions)?;
    let mut table = ResultTable::new(
        "fig4",
        &[
            "n", "bapu", "bpau", "bapu_x1", "bapu_x2", "bapu_n1", "bpau_x1", "bpau_x2", "bpau_n1",
        ],
    );
    table.meta(
        "crossover_n",
        cmp.crossover.map_or("none".to_string(), |n| n.to_string()),
    );
    for r in &cmp.rows {
        table.push(vec![
            r.n as f64,
            r.bapu.objective,
            r.bpau.objective,
            r.bapu.positions[0].x,
            r.bapu.positions[1].x,
            r.bapu.element_split[0] as f64,
            r.bpau.positions[0].x,
            r.bpau.positions[1].x,
            r.bpau.element_split[0] as f64,
        ]);
    }
    let mut tables = vec![table];

    if let (Some(a), Some(sc)) = (&c.allocation, allocation_scenario(s)?) {
        let mut t = ResultTable::new("fig4_allocation", &["n", "n1", "n2", "snr_db"]);
        t.meta("irs1", &a.irs1);
        t.meta("irs2", &a.irs2);
        for &n in &a.n_values {
            let sol = allocate_elements(n, |n1, n2| Ok(sc.evaluate(n1, n2)?.snr))?;
            t.push(vec![
                n as f64,
                sol.element_split[0] as f64,
                sol.element_split[1] as f64,
                to_db(sol.objective),
            ]);
        }
        tables.push(t);
    }
    Ok(tables)
}
