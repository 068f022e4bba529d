//! Exhaustive deployment optimizers: placement, element allocation,
//! architecture comparison, transmission order and D-MIMO association.

mod allocation;
mod architecture;
mod dmimo;
mod placement;

pub use allocation::{
    allocate_among, allocate_elements, best_order_deployment, order_hybrid_double, DoubleScenario, HybridOrder,
    OrderComparison, OrderRow,
};
pub use architecture::{compare_architectures, ArchitectureComparison, ArchitectureRow, ArchitectureScenario};
pub use dmimo::{dmimo_associate, DmimoAssociation};
pub use placement::{place_hybrid_irs, place_single_irs, HybridPlacement, PlacementScenario};

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::propagation::Position;

/// Candidate region for a panel position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Segment {
        a: Position,
        b: Position,
    },
    /// Axis-aligned horizontal rectangle at height `z`.
    Rectangle {
        min: (f64, f64),
        max: (f64, f64),
        z: f64,
    },
}

impl Domain {
    fn extents(&self) -> [f64; 2] {
        match *self {
            Domain::Segment { a, b } => [a.distance(&b), 0.0],
            Domain::Rectangle { min, max, .. } => [max.0 - min.0, max.1 - min.1],
        }
    }

    fn at(&self, t: [f64; 2]) -> Position {
        match *self {
            Domain::Segment { a, b } => Position::from_vector(a.to_vector() + (b.to_vector() - a.to_vector()) * t[0]),
            Domain::Rectangle { min, max, z } => Position {
                x: min.0 + (max.0 - min.0) * t[0],
                y: min.1 + (max.1 - min.1) * t[1],
                z,
            },
        }
    }
}

/// Uniform grid over a domain; each refinement level re-grids around the
/// incumbent with half the previous step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub domain: Domain,
    pub resolution: f64,
    pub refinement_levels: u32,
}

impl SearchGrid {
    pub fn new(domain: Domain, resolution: f64, refinement_levels: u32) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid("resolution", "must be positive"));
        }
        Ok(Self {
            domain,
            resolution,
            refinement_levels,
        })
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        if hi - lo <= 1e-15 || step <= 0.0 {
            return vec![lo];
        }
        let n = ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    /// Parameter-space step per axis for level 0.
    fn base_steps(&self) -> [f64; 2] {
        self.domain
            .extents()
            .map(|e| if e > 0.0 { self.resolution / e } else { 0.0 })
    }

    fn params(&self, center: Option<[f64; 2]>, steps: [f64; 2], half_width: [f64; 2]) -> Vec<[f64; 2]> {
        let (lo, hi) = match center {
            None => ([0.0; 2], [1.0; 2]),
            Some(c) => (
                [c[0] - half_width[0], c[1] - half_width[1]],
                [c[0] + half_width[0], c[1] + half_width[1]],
            ),
        };
        let us = Self::axis(lo[0], hi[0], steps[0]);
        let vs = Self::axis(lo[1], hi[1], steps[1]);
        let mut out = Vec::with_capacity(us.len() * vs.len());
        for &v in &vs {
            for &u in &us {
                out.push([u, v]);
            }
        }
        out
    }

    /// Level-0 candidate positions.
    pub fn candidates(&self) -> Vec<Position> {
        self.params(None, self.base_steps(), [0.0; 2])
            .into_iter()
            .map(|t| self.domain.at(t))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub level: u32,
    pub positions: Vec<Position>,
    pub split: Vec<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentSolution {
    pub positions: Vec<Position>,
    pub element_split: Vec<usize>,
    pub objective: f64,
    /// Incumbent objective after each refinement level.
    pub level_objectives: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

/// Lexicographic position order used for ties: x, then y, then z.
pub fn position_order(a: &Position, b: &Position) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

fn better(cand: (f64, &Position), inc: (f64, &Position)) -> bool {
    match cand.0.total_cmp(&inc.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => position_order(cand.1, inc.1) == Ordering::Less,
    }
}

/// Grid search with refinement over one panel position. Infeasible candidates
/// (`keep` false) are skipped. The objective is evaluated in parallel; the
/// argmax and the trace do not depend on scheduling.
pub fn grid_search<F, K>(grid: &SearchGrid, split: &[usize], keep: K, objective: F) -> Result<DeploymentSolution>
where
    F: Fn(Position) -> Result<f64> + Sync,
    K: Fn(&Position) -> bool + Sync,
{
    let mut steps = grid.base_steps();
    let mut center: Option<[f64; 2]> = None;
    let mut best: Option<(f64, Position, [f64; 2])> = None;
    let mut trace = Vec::new();
    let mut level_objectives = Vec::new();
    for level in 0..=grid.refinement_levels {
        let (step, half_width) = if level == 0 {
            (steps, [0.0; 2])
        } else {
            ([steps[0] / 2.0, steps[1] / 2.0], steps)
        };
        let params: Vec<[f64; 2]> = grid
            .params(center, step, half_width)
            .into_iter()
            .filter(|t| keep(&grid.domain.at(*t)))
            .collect();
        let values = params
            .par_iter()
            .map(|t| objective(grid.domain.at(*t)))
            .collect::<Result<Vec<f64>>>()?;
        for (t, v) in params.iter().zip(values) {
            let pos = grid.domain.at(*t);
            trace.push(TraceEntry {
                level,
                positions: vec![pos],
                split: split.to_vec(),
                objective: v,
            });
            let replace = match &best {
                None => true,
                Some((bv, bp, _)) => better((v, &pos), (*bv, bp)),
            };
            if replace {
                best = Some((v, pos, *t));
            }
        }
        let Some((bv, _, bt)) = best else {
            return Err(Error::Empty("search grid has no feasible candidate"));
        };
        level_objectives.push(bv);
        if level > 0 {
            steps = [steps[0] / 2.0, steps[1] / 2.0];
        }
        center = Some(bt);
        if steps.iter().all(|s| *s == 0.0) {
            break;
        }
    }
    let (objective, pos, _) = best.expect("at least one level evaluated");
    Ok(DeploymentSolution {
        positions: vec![pos],
        element_split: split.to_vec(),
        objective,
        level_objectives,
        trace,
    })
}
