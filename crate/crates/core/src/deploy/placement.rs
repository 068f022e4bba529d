use super::{grid_search, DeploymentSolution, Domain, SearchGrid};
use crate::error::{invalid, Result};
use crate::irs::{ActiveParams, IrsPanel, PanelKind};
use crate::link::{configure_single, siso_single_reflection, SisoChannels, TransmitBudget};
use crate::propagation::{Endpoint, LinkModels, Position};

/// Point-to-point link with one IRS whose position is to be chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementScenario {
    pub tx: Endpoint,
    pub rx: Endpoint,
    /// Panel template; its position is overwritten by each candidate.
    pub panel: IrsPanel,
    pub budget: TransmitBudget,
    pub models: LinkModels,
    pub wavelength: f64,
    /// Minimum distance between the IRS and either transceiver.
    pub standoff: f64,
    pub include_direct: bool,
}

impl PlacementScenario {
    /// The Tx-Rx segment with `standoff` removed at both ends.
    pub fn feasible_segment(&self) -> Result<Domain> {
        let a = self.tx.position.to_vector();
        let b = self.rx.position.to_vector();
        let len = (b - a).norm();
        if len <= 2.0 * self.standoff {
            return Err(invalid("standoff", "leaves no feasible segment between Tx and Rx"));
        }
        let u = (b - a) / len;
        Ok(Domain::Segment {
            a: Position::from_vector(a + u * self.standoff),
            b: Position::from_vector(b - u * self.standoff),
        })
    }

    pub fn feasible(&self, p: &Position) -> bool {
        let margin = self.standoff - 1e-9;
        p.distance(&self.tx.position) >= margin && p.distance(&self.rx.position) >= margin
    }

    /// SNR with `panel` at `position`, co-phased, active amplitude at budget.
    pub fn snr_with(&self, panel: &IrsPanel, position: Position) -> Result<f64> {
        let panel = panel.clone().moved_to(position);
        let ch = SisoChannels::from_geometry(
            &self.tx,
            &panel,
            &self.rx,
            &self.models,
            self.wavelength,
            self.include_direct,
        )?;
        let panel = configure_single(&panel, &ch, self.budget.p_t)?;
        Ok(siso_single_reflection(&self.budget, &ch, &panel)?.snr)
    }

    pub fn snr_at(&self, position: Position) -> Result<f64> {
        self.snr_with(&self.panel, position)
    }

    /// Copy of the template with `n_active` of its elements active.
    pub fn hybrid_panel(&self, n_active: usize, active: ActiveParams) -> Result<IrsPanel> {
        let n = self.panel.element_count();
        if n_active > n {
            return Err(invalid("n_active", format!("{n_active} exceeds {n} elements")));
        }
        let kind = match n_active {
            0 => PanelKind::Passive,
            k if k == n => PanelKind::Active(active),
            k => PanelKind::Hybrid { n_active: k, active },
        };
        IrsPanel::new(self.panel.position, self.panel.geometry, kind)
    }
}

/// Exhaustive SNR-maximizing placement of the scenario's panel.
pub fn place_single_irs(scenario: &PlacementScenario, grid: &SearchGrid) -> Result<DeploymentSolution> {
    grid_search(
        grid,
        &[scenario.panel.element_count()],
        |p| scenario.feasible(p),
        |p| scenario.snr_at(p),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPlacement {
    pub n_active: Vec<usize>,
    pub solutions: Vec<DeploymentSolution>,
    /// All optima lie within one grid step of each other.
    pub coincide: bool,
}

/// Placement for each active/passive split of the panel.
pub fn place_hybrid_irs(
    scenario: &PlacementScenario,
    n_active_values: &[usize],
    active: ActiveParams,
    grid: &SearchGrid,
) -> Result<HybridPlacement> {
    let mut solutions = Vec::with_capacity(n_active_values.len());
    for &k in n_active_values {
        let panel = scenario.hybrid_panel(k, active)?;
        let n = panel.element_count();
        let mut sol = grid_search(grid, &[n], |p| scenario.feasible(p), |p| scenario.snr_with(&panel, p))?;
        sol.element_split = vec![k, n - k];
        for t in &mut sol.trace {
            t.split = vec![k, n - k];
        }
        solutions.push(sol);
    }
    let tol = grid.resolution * (1.0 + 1e-9);
    let coincide = solutions.iter().all(|a| {
        solutions
            .iter()
            .all(|b| a.positions[0].distance(&b.positions[0]) <= tol)
    });
    Ok(HybridPlacement {
        n_active: n_active_values.to_vec(),
        solutions,
        coincide,
    })
}
