use rayon::prelude::*;

use super::{DeploymentSolution, SearchGrid, TraceEntry};
use crate::error::{invalid, Error, Result};
use crate::irs::{ActiveParams, IrsPanel, PanelKind};
use crate::link::{
    configure_double, dominant_singular_pair, double_reflection, LinkReport, SingleLinks, TransmitBudget,
};
use crate::propagation::{los_channel, rician_channel, ArrayGeometry, Endpoint, LinkModels, Position};

/// Brute force over all splits `n1 + n2 = total_n` with both parts >= 1.
/// Ties go to the larger `n2`.
pub fn allocate_elements<F>(total_n: usize, evaluator: F) -> Result<DeploymentSolution>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    if total_n < 2 {
        return Err(invalid("total_n", "need at least two elements to split"));
    }
    let splits: Vec<usize> = (1..total_n).collect();
    let values = splits
        .par_iter()
        .map(|&n1| evaluator(n1, total_n - n1))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    let mut trace = Vec::with_capacity(splits.len());
    for (i, (&n1, &v)) in splits.iter().zip(&values).enumerate() {
        trace.push(TraceEntry {
            level: 0,
            positions: Vec::new(),
            split: vec![n1, total_n - n1],
            objective: v,
        });
        // n1 ascending means n2 descending: keep the earliest maximum
        if v > values[best] {
            best = i;
        }
    }
    let n1 = splits[best];
    Ok(DeploymentSolution {
        positions: Vec::new(),
        element_split: vec![n1, total_n - n1],
        objective: values[best],
        level_objectives: vec![values[best]],
        trace,
    })
}

fn compositions(total: usize, parts: usize, step: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let used: usize = prefix.iter().sum();
    if prefix.len() + 1 == parts {
        if total > used {
            let mut c = prefix.clone();
            c.push(total - used);
            out.push(c);
        }
        return;
    }
    let mut n = step;
    while used + n + (parts - prefix.len() - 1) <= total {
        prefix.push(n);
        compositions(total, parts, step, prefix, out);
        prefix.pop();
        n += step;
    }
}

/// Element split over `parts` panels (each >= 1) maximizing `evaluator`.
/// Searches every split whose free parts are multiples of `coarse_step`, then
/// every split within `coarse_step` of the coarse optimum in each free part,
/// the largest part absorbing the remainder. Ties keep the first candidate
/// in enumeration order.
pub fn allocate_among<F>(total: usize, parts: usize, coarse_step: usize, evaluator: F) -> Result<DeploymentSolution>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if parts == 0 || total < parts {
        return Err(invalid("total", format!("{total} elements cannot fill {parts} panels")));
    }
    let step = coarse_step.max(1);
    let mut coarse = Vec::new();
    compositions(total, parts, step, &mut Vec::new(), &mut coarse);
    if coarse.is_empty() {
        compositions(total, parts, 1, &mut Vec::new(), &mut coarse);
    }
    let eval = |cands: &[Vec<usize>]| -> Result<Vec<f64>> { cands.par_iter().map(|c| evaluator(c)).collect() };
    let coarse_values = eval(&coarse)?;
    let mut best = 0;
    for (i, v) in coarse_values.iter().enumerate() {
        if *v > coarse_values[best] {
            best = i;
        }
    }
    let center = coarse[best].clone();
    let dep = (0..parts).fold(0, |m, i| if center[i] > center[m] { i } else { m });
    let free: Vec<usize> = (0..parts).filter(|&i| i != dep).collect();
    let mut local: Vec<Vec<usize>> = vec![Vec::new()];
    for &i in &free {
        let lo = center[i].saturating_sub(step).max(1);
        let hi = center[i] + step;
        local = local
            .into_iter()
            .flat_map(|c| {
                (lo..=hi).map(move |n| {
                    let mut c = c.clone();
                    c.push(n);
                    c
                })
            })
            .collect();
    }
    let local: Vec<Vec<usize>> = local
        .into_iter()
        .filter_map(|vals| {
            let used: usize = vals.iter().sum();
            (used < total).then(|| {
                let mut c = vec![0; parts];
                for (&i, v) in free.iter().zip(&vals) {
                    c[i] = *v;
                }
                c[dep] = total - used;
                c
            })
        })
        .collect();
    let local_values = eval(&local)?;
    let mut trace = Vec::with_capacity(coarse.len() + local.len());
    let mut best_split = center;
    let mut best_value = coarse_values[best];
    let level0 = best_value;
    for (level, (cands, vals)) in [(&coarse, &coarse_values), (&local, &local_values)]
        .into_iter()
        .enumerate()
    {
        for (c, v) in cands.iter().zip(vals.iter()) {
            trace.push(TraceEntry {
                level: level as u32,
                positions: Vec::new(),
                split: c.clone(),
                objective: *v,
            });
            if level == 1 && *v > best_value {
                best_value = *v;
                best_split = c.clone();
            }
        }
    }
    Ok(DeploymentSolution {
        positions: Vec::new(),
        element_split: best_split,
        objective: best_value,
        level_objectives: vec![level0, best_value],
        trace,
    })
}

/// BS -> IRS 1 -> IRS 2 -> user with optional single-reflection links.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleScenario {
    pub bs: Endpoint,
    pub user: Endpoint,
    pub irs1: Position,
    pub irs2: Position,
    /// Spacing, orientation and layout shared by both panels.
    pub geometry: ArrayGeometry,
    pub kind1: PanelKind,
    pub kind2: PanelKind,
    pub budget: TransmitBudget,
    pub models: LinkModels,
    pub wavelength: f64,
    pub include_single_links: bool,
    /// Rician K-factor and seed for the inter-IRS channel; `None` keeps it LoS.
    pub inter_fading: Option<(f64, u64)>,
}

impl DoubleScenario {
    fn panel(&self, n: usize, pos: Position, kind: PanelKind) -> Result<IrsPanel> {
        let kind = match kind {
            PanelKind::Hybrid { n_active, active } if n_active >= n => PanelKind::Active(active),
            k => k,
        };
        IrsPanel::new(pos, self.geometry.resized(n)?, kind)
    }

    /// Configured panels and the resulting report for the given sizes,
    /// positions and kinds.
    pub fn evaluate_with(
        &self,
        n1: usize,
        n2: usize,
        pos1: Position,
        pos2: Position,
        kind1: PanelKind,
        kind2: PanelKind,
    ) -> Result<(IrsPanel, IrsPanel, LinkReport)> {
        let p1 = self.panel(n1, pos1, kind1)?;
        let p2 = self.panel(n2, pos2, kind2)?;
        let e1 = Endpoint {
            position: p1.position,
            geometry: p1.geometry,
        };
        let e2 = Endpoint {
            position: p2.position,
            geometry: p2.geometry,
        };
        let lambda = self.wavelength;
        let g1 = los_channel(&self.bs, &e1, &self.models.bs_irs, lambda)?.entries;
        let g2 = los_channel(&e2, &self.user, &self.models.irs_user, lambda)?.entries;
        let d = los_channel(&e1, &e2, &self.models.inter_irs, lambda)?;
        let d = match self.inter_fading {
            Some((k, seed)) => rician_channel(&d, k, seed)?.entries,
            None => d.entries,
        };
        let (_, v_tx) = dominant_singular_pair(&g1);
        let (w_rx, _) = dominant_singular_pair(&g2);
        let h1 = &g1 * &v_tx;
        let h2 = (w_rx.adjoint() * &g2).transpose();
        let single = if self.include_single_links {
            let a = los_channel(&e1, &self.user, &self.models.irs_user, lambda)?.entries;
            let b = los_channel(&self.bs, &e2, &self.models.bs_irs, lambda)?.entries;
            Some(SingleLinks {
                g1: (w_rx.adjoint() * a).transpose(),
                f2: b * &v_tx,
            })
        } else {
            None
        };
        let (p1, p2) = configure_double(self.budget.p_t, &h1, &d, &h2, &p1, &p2, single.as_ref())?;
        let report = double_reflection(&self.budget, &h1, &d, &h2, &p1, &p2, single.as_ref())?;
        Ok((p1, p2, report))
    }

    pub fn evaluate(&self, n1: usize, n2: usize) -> Result<LinkReport> {
        Ok(self
            .evaluate_with(n1, n2, self.irs1, self.irs2, self.kind1, self.kind2)?
            .2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HybridOrder {
    /// BS -> active -> passive -> user.
    Bapu,
    /// BS -> passive -> active -> user.
    Bpau,
}

impl HybridOrder {
    pub fn kinds(self, active: ActiveParams) -> (PanelKind, PanelKind) {
        match self {
            HybridOrder::Bapu => (PanelKind::Active(active), PanelKind::Passive),
            HybridOrder::Bpau => (PanelKind::Passive, PanelKind::Active(active)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub n: usize,
    pub bapu: DeploymentSolution,
    pub bpau: DeploymentSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderComparison {
    pub rows: Vec<OrderRow>,
    /// Smallest swept N at which BPAU is at least as good as BAPU.
    pub crossover: Option<usize>,
}

/// Joint brute force over the first-panel position, second-panel position and
/// element split (step `max(1, n / split_divisions)`) for one order and size.
pub fn best_order_deployment(
    scenario: &DoubleScenario,
    order: HybridOrder,
    active: ActiveParams,
    n: usize,
    first: &SearchGrid,
    second: &SearchGrid,
    split_divisions: usize,
) -> Result<DeploymentSolution> {
    if n < 2 {
        return Err(invalid("n", "need at least two elements to split"));
    }
    let step = (n / split_divisions.max(1)).max(1);
    let splits: Vec<usize> = (1..n).filter(|n1| n1 % step == 0 || *n1 == 1 || *n1 == n - 1).collect();
    let mut candidates = Vec::new();
    for p1 in first.candidates() {
        for p2 in second.candidates() {
            if p1.distance(&p2) == 0.0 {
                continue;
            }
            for &n1 in &splits {
                candidates.push((p1, p2, n1));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::Empty("order search grid"));
    }
    let (k1, k2) = order.kinds(active);
    let values = candidates
        .par_iter()
        .map(|&(p1, p2, n1)| Ok(scenario.evaluate_with(n1, n - n1, p1, p2, k1, k2)?.2.rate))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    let mut trace = Vec::with_capacity(candidates.len());
    for (i, (&(p1, p2, n1), &v)) in candidates.iter().zip(&values).enumerate() {
        trace.push(TraceEntry {
            level: 0,
            positions: vec![p1, p2],
            split: vec![n1, n - n1],
            objective: v,
        });
        if v > values[best] {
            best = i;
        }
    }
    let (p1, p2, n1) = candidates[best];
    Ok(DeploymentSolution {
        positions: vec![p1, p2],
        element_split: vec![n1, n - n1],
        objective: values[best],
        level_objectives: vec![values[best]],
        trace,
    })
}

/// Best BAPU and BPAU rates for each total element count.
pub fn order_hybrid_double(
    scenario: &DoubleScenario,
    active: ActiveParams,
    n_values: &[usize],
    first: &SearchGrid,
    second: &SearchGrid,
    split_divisions: usize,
) -> Result<OrderComparison> {
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let bapu = best_order_deployment(scenario, HybridOrder::Bapu, active, n, first, second, split_divisions)?;
        let bpau = best_order_deployment(scenario, HybridOrder::Bpau, active, n, first, second, split_divisions)?;
        rows.push(OrderRow { n, bapu, bpau });
    }
    let crossover = rows.iter().find(|r| r.bpau.objective >= r.bapu.objective).map(|r| r.n);
    Ok(OrderComparison { rows, crossover })
}
