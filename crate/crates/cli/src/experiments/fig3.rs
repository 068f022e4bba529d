//! Sum-rate of one panel near the BS (TDMA) against one panel per user
//! (zero-forcing) as the total element count grows.

use irs_core::deploy::{compare_architectures, ArchitectureScenario};

use crate::scenario::Scenario;
use crate::table::ResultTable;
use crate::Result;

pub fn architecture(s: &Scenario) -> Result<ArchitectureScenario> {
    let c = s.section(&s.fig3, "fig3")?;
    Ok(ArchitectureScenario {
        bs: s.endpoint(&c.bs)?,
        users: c.users.iter().map(|u| s.endpoint(u)).collect::<Result<_>>()?,
        central: s.position(&c.central)?,
        distributed: c.distributed.iter().map(|d| s.position(d)).collect::<Result<_>>()?,
        geometry: s.geometry(&c.central, None)?,
        budget: s.budget()?,
        models: s.models()?,
        wavelength: s.wavelength(),
        include_direct: s.include_direct,
    })
}

pub fn run(s: &Scenario) -> Result<Vec<ResultTable>> {
    let c = s.section(&s.fig3, "fig3")?;
    let cmp = compare_architectures(&architecture(s)?, &c.n_values)?;
    let mut table = ResultTable::new("fig3", &["n", "centralized", "distributed"]);
    table.meta(
        "crossover_n",
        cmp.crossover.map_or("none".to_string(), |n| n.to_string()),
    );
    for r in &cmp.rows {
        table.push(vec![r.n as f64, r.centralized, r.distributed]);
    }
    Ok(vec![table])
}
