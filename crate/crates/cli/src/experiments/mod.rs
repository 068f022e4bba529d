use std::path::Path;

use crate::scenario::{parse_scenario_str, Scenario};
use crate::table::ResultTable;
use crate::{CliError, Result};

pub mod coverage;
pub mod fieldtrial;
pub mod fig2;
pub mod fig3;
pub mod fig4;
pub mod placement;
pub mod routing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Fig2,
    Fig3,
    Fig4,
    Placement,
    Coverage,
    Routing,
    Fieldtrial,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Placement,
        Experiment::Coverage,
        Experiment::Routing,
        Experiment::Fieldtrial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Placement => "placement",
            Experiment::Coverage => "coverage",
            Experiment::Routing => "routing",
            Experiment::Fieldtrial => "fieldtrial",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}

/// Bundled scenario file for an experiment.
pub fn default_scenario_text(e: Experiment) -> &'static str {
    match e {
        Experiment::Fig2 => include_str!("../../scenarios/fig2.toml"),
        Experiment::Fig3 => include_str!("../../scenarios/fig3.toml"),
        Experiment::Fig4 => include_str!("../../scenarios/fig4.toml"),
        Experiment::Placement => include_str!("../../scenarios/placement.toml"),
        Experiment::Coverage => include_str!("../../scenarios/coverage.toml"),
        Experiment::Routing => include_str!("../../scenarios/routing.toml"),
        Experiment::Fieldtrial => include_str!("../../scenarios/fieldtrial.toml"),
    }
}

pub fn default_scenario(e: Experiment) -> Scenario {
    parse_scenario_str(default_scenario_text(e)).expect("bundled scenarios are valid")
}

/// Runs `e` on `scenario`. Relative paths inside the scenario resolve
/// against `base_dir`. Every table carries the experiment name, toolkit
/// version, seed and scenario hash.
pub fn run_experiment(e: Experiment, scenario: &Scenario, base_dir: Option<&Path>) -> Result<Vec<ResultTable>> {
    let tables = match e {
        Experiment::Fig2 => fig2::run(scenario)?,
        Experiment::Fig3 => fig3::run(scenario)?,
        Experiment::Fig4 => fig4::run(scenario)?,
        Experiment::Placement => placement::run(scenario)?,
        Experiment::Coverage => coverage::run(scenario)?,
        Experiment::Routing => routing::run(scenario)?,
        Experiment::Fieldtrial => fieldtrial::run(scenario, base_dir)?,
    };
    let hash = scenario.hash();
    Ok(tables
        .into_iter()
        .map(|mut t| {
            let mut meta = vec![
                ("table".to_string(), t.name.clone()),
                ("experiment".to_string(), e.name().to_string()),
                ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
                ("seed".to_string(), scenario.seed.to_string()),
                ("scenario_sha256".to_string(), hash.clone()),
            ];
            meta.append(&mut t.metadata);
            t.metadata = meta;
            t
        })
        .collect())
}

pub(crate) fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub(crate) fn to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
