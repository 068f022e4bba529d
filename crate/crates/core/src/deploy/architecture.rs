use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::irs::{IrsPanel, PanelKind};
use crate::link::{multiuser_centralized_rate, multiuser_distributed_rate, MultiUserRates, TransmitBudget};
use crate::propagation::{ArrayGeometry, Endpoint, LinkModels, Position};

/// Multi-user downlink served either by one panel near the BS (TDMA) or by
/// one panel near each user (zero-forcing).
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureScenario {
    pub bs: Endpoint,
    pub users: Vec<Endpoint>,
    pub central: Position,
    /// One position per user.
    pub distributed: Vec<Position>,
    /// Spacing, orientation and layout of every panel.
    pub geometry: ArrayGeometry,
    pub budget: TransmitBudget,
    pub models: LinkModels,
    pub wavelength: f64,
    pub include_direct: bool,
}

impl ArchitectureScenario {
    pub fn centralized(&self, n: usize) -> Result<MultiUserRates> {
        let panel = IrsPanel::new(self.central, self.geometry.resized(n)?, PanelKind::Passive)?;
        multiuser_centralized_rate(
            &self.budget,
            &self.bs,
            &self.users,
            &panel,
            &self.models,
            self.wavelength,
            self.include_direct,
        )
    }

    pub fn distributed(&self, n: usize) -> Result<MultiUserRates> {
        let k = self.users.len();
        if k == 0 || !n.is_multiple_of(k) {
            return Err(invalid("n", format!("{n} elements do not split over {k} users")));
        }
        let panels = self
            .distributed
            .iter()
            .map(|p| IrsPanel::new(*p, self.geometry.resized(n / k)?, PanelKind::Passive))
            .collect::<Result<Vec<_>>>()?;
        multiuser_distributed_rate(
            &self.budget,
            &self.bs,
            &self.users,
            &panels,
            &self.models,
            self.wavelength,
            self.include_direct,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureRow {
    pub n: usize,
    pub centralized: f64,
    pub distributed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureComparison {
    pub rows: Vec<ArchitectureRow>,
    /// Smallest N at which the distributed sum-rate reaches the centralized one.
    pub crossover: Option<usize>,
}

pub fn compare_architectures(scenario: &ArchitectureScenario, n_values: &[usize]) -> Result<ArchitectureComparison> {
    let rows = n_values
        .par_iter()
        .map(|&n| {
            Ok(ArchitectureRow {
                n,
                centralized: scenario.centralized(n)?.sum_rate,
                distributed: scenario.distributed(n)?.sum_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let crossover = rows.iter().find(|r| r.distributed >= r.centralized).map(|r| r.n);
    Ok(ArchitectureComparison { rows, crossover })
}
