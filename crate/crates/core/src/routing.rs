//! Multi-hop reflection routing over a LoS graph of BSs, IRSs and users.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::irs::IrsPanel;
use crate::link::{
    configure_chain, dominant_singular_pair, evaluate_chain, receiver_noise_report, LinkReport, TransmitBudget,
};
use crate::propagation::{los_channel, path_loss, steering_vector, ArrayGeometry, Endpoint, LinkModels, Position, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Bs,
    Irs,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub role: Role,
    pub position: Position,
    /// Antenna array for BS and user nodes; ignored for IRS nodes.
    pub array: ArrayGeometry,
    pub panel: Option<IrsPanel>,
}

impl Node {
    pub fn bs(id: impl Into<String>, position: Position, array: ArrayGeometry) -> Self {
        Self {
            id: id.into(),
            role: Role::Bs,
            position,
            array,
            panel: None,
        }
    }

    pub fn user(id: impl Into<String>, position: Position, array: ArrayGeometry) -> Self {
        Self {
            id: id.into(),
            role: Role::User,
            position,
            array,
            panel: None,
        }
    }

    pub fn irs(id: impl Into<String>, panel: IrsPanel) -> Self {
        Self {
            id: id.into(),
            role: Role::Irs,
            position: panel.position,
            array: panel.geometry,
            panel: Some(panel),
        }
    }

    fn endpoint(&self) -> Endpoint {
        Endpoint {
            position: self.position,
            geometry: self.array,
        }
    }
}

/// Blockage in the horizontal plane; heights are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Segment { a: (f64, f64), b: (f64, f64) },
    Box { min: (f64, f64), max: (f64, f64) },
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection, touching counts.
pub fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

impl Obstacle {
    pub fn blocks(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        match *self {
            Obstacle::Segment { a: q1, b: q2 } => segments_intersect(a, b, q1, q2),
            Obstacle::Box { min, max } => {
                // Liang-Barsky clip of the segment against the box
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let mut t0: f64 = 0.0;
                let mut t1: f64 = 1.0;
                for (p, q) in [
                    (-dx, a.0 - min.0),
                    (dx, max.0 - a.0),
                    (-dy, a.1 - min.1),
                    (dy, max.1 - a.1),
                ] {
                    if p == 0.0 {
                        if q < 0.0 {
                            return false;
                        }
                    } else {
                        let r = q / p;
                        if p < 0.0 {
                            t0 = t0.max(r);
                        } else {
                            t1 = t1.min(r);
                        }
                    }
                }
                t0 <= t1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsGraph {
    pub nodes: Vec<Node>,
    pub obstacles: Vec<Obstacle>,
    /// Symmetric LoS flags; the diagonal is false.
    pub los: Vec<Vec<bool>>,
    pub distance: Vec<Vec<f64>>,
}

pub fn build_graph(nodes: Vec<Node>, obstacles: Vec<Obstacle>) -> Result<IrsGraph> {
    let n = nodes.len();
    for i in 0..n {
        for j in i + 1..n {
            if nodes[i].position == nodes[j].position {
                return Err(Error::DuplicatePosition(nodes[i].id.clone(), nodes[j].id.clone()));
            }
            if nodes[i].id == nodes[j].id {
                return Err(invalid("node id", format!("`{}` is used twice", nodes[i].id)));
            }
        }
        if nodes[i].role == Role::Irs && nodes[i].panel.is_none() {
            return Err(invalid("node", format!("IRS `{}` has no panel", nodes[i].id)));
        }
    }
    let mut los = vec![vec![false; n]; n];
    let mut distance = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let a = (nodes[i].position.x, nodes[i].position.y);
            let b = (nodes[j].position.x, nodes[j].position.y);
            let clear = !obstacles.iter().any(|o| o.blocks(a, b));
            let d = nodes[i].position.distance(&nodes[j].position);
            los[i][j] = clear;
            los[j][i] = clear;
            distance[i][j] = d;
            distance[j][i] = d;
        }
    }
    Ok(IrsGraph {
        nodes,
        obstacles,
        los,
        distance,
    })
}

impl IrsGraph {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn edge_count(&self) -> usize {
        self.los.iter().flatten().filter(|x| **x).count() / 2
    }

    /// Copy with the edge between `a` and `b` forced on or off.
    pub fn with_edge(&self, a: usize, b: usize, present: bool) -> Self {
        let mut g = self.clone();
        g.los[a][b] = present;
        g.los[b][a] = present;
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopGain {
    pub from: String,
    pub to: String,
    pub distance: f64,
    pub path_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPath {
    pub nodes: Vec<usize>,
    pub ids: Vec<String>,
    pub hops: Vec<HopGain>,
    /// `|sum_n coef_n a_in[n] a_out[n]|^2` per traversed panel (N^2 when co-phased).
    pub panel_gains: Vec<f64>,
    /// `M_tx * M_rx` of the end arrays.
    pub array_gain: f64,
    /// Panels as configured for this path.
    pub panels: Vec<IrsPanel>,
    pub report: LinkReport,
}

impl ReflectionPath {
    /// Number of reflections.
    pub fn reflections(&self) -> usize {
        self.nodes.len() - 2
    }
}

fn check_path(graph: &IrsGraph, path: &[usize]) -> Result<()> {
    if path.len() < 2 {
        return Err(invalid("path", "needs at least a BS and a user"));
    }
    let n = graph.nodes.len();
    if path.iter().any(|&i| i >= n) {
        return Err(invalid("path", "node index out of range"));
    }
    if graph.nodes[path[0]].role != Role::Bs || graph.nodes[path[path.len() - 1]].role != Role::User {
        return Err(invalid("path", "must start at a BS and end at a user"));
    }
    if path[1..path.len() - 1]
        .iter()
        .any(|&i| graph.nodes[i].role != Role::Irs)
    {
        return Err(invalid("path", "intermediate nodes must be IRSs"));
    }
    for (k, a) in path.iter().enumerate() {
        if path[k + 1..].contains(a) {
            return Err(invalid("path", "repeats a node"));
        }
    }
    for w in path.windows(2) {
        if !graph.los[w[0]][w[1]] {
            return Err(Error::MissingEdge(
                graph.nodes[w[0]].id.clone(),
                graph.nodes[w[1]].id.clone(),
            ));
        }
    }
    Ok(())
}

/// End-to-end SNR of a BS -> IRS ... -> user path with every panel co-phased
/// (and active panels at budget). The end arrays use fixed maximum-ratio beams
/// along the first and last hop.
pub fn path_snr(
    graph: &IrsGraph,
    path: &[usize],
    budget: &TransmitBudget,
    models: &LinkModels,
    wavelength: f64,
) -> Result<ReflectionPath> {
    check_path(graph, path)?;
    let nodes: Vec<&Node> = path.iter().map(|&i| &graph.nodes[i]).collect();
    let h = path.len() - 2;
    let tx = nodes[0].endpoint();
    let rx = nodes[h + 1].endpoint();
    let array_gain = (tx.geometry.element_count * rx.geometry.element_count) as f64;

    let mut hops = Vec::with_capacity(h + 1);
    for (k, w) in nodes.windows(2).enumerate() {
        let model = if h == 0 {
            &models.bs_user
        } else if k == 0 {
            &models.bs_irs
        } else if k == h {
            &models.irs_user
        } else {
            &models.inter_irs
        };
        let d = w[0].position.distance(&w[1].position);
        hops.push(HopGain {
            from: w[0].id.clone(),
            to: w[1].id.clone(),
            distance: d,
            path_gain: path_loss(d, model)?,
        });
    }
    let ids = nodes.iter().map(|n| n.id.clone()).collect();

    if h == 0 {
        let g = los_channel(&tx, &rx, &models.bs_user, wavelength)?.entries;
        let s = g.clone().singular_values().max();
        let report = receiver_noise_report(budget, budget.p_t * s * s);
        return Ok(ReflectionPath {
            nodes: path.to_vec(),
            ids,
            hops,
            panel_gains: Vec::new(),
            array_gain,
            panels: Vec::new(),
            report,
        });
    }

    let panels: Vec<IrsPanel> = nodes[1..=h]
        .iter()
        .map(|n| n.panel.clone().expect("IRS nodes carry panels"))
        .collect();
    let ends: Vec<Endpoint> = panels
        .iter()
        .map(|p| Endpoint {
            position: p.position,
            geometry: p.geometry,
        })
        .collect();
    let g_first = los_channel(&tx, &ends[0], &models.bs_irs, wavelength)?.entries;
    let g_last = los_channel(&ends[h - 1], &rx, &models.irs_user, wavelength)?.entries;
    let (_, v_tx) = dominant_singular_pair(&g_first);
    let (w_rx, _) = dominant_singular_pair(&g_last);
    let h_first = &g_first * &v_tx;
    let h_last = (w_rx.adjoint() * &g_last).transpose();
    let inter = ends
        .windows(2)
        .map(|w| Ok(los_channel(&w[0], &w[1], &models.inter_irs, wavelength)?.entries))
        .collect::<Result<Vec<DMatrix<C64>>>>()?;
    let configured = configure_chain(budget.p_t, &h_first, &inter, &h_last, &panels, None)?;
    let eval = evaluate_chain(budget, &h_first, &inter, &h_last, &configured, None)?;

    let positions: Vec<Position> = nodes.iter().map(|n| n.position).collect();
    let panel_gains = configured
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let geom = p.geometry;
            let u_in = positions[k].direction_to(&positions[k + 1])?;
            let u_out = positions[k + 1].direction_to(&positions[k + 2])?;
            let a_in = steering_vector(&geom, &u_in, wavelength)?;
            let a_out = steering_vector(&geom, &u_out, wavelength)?;
            let coef = p.coefficients();
            let s: C64 = (0..geom.element_count)
                .map(|n| a_in[n] * a_out[n].conj() * coef[n])
                .sum();
            Ok(s.norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(ReflectionPath {
        nodes: path.to_vec(),
        ids,
        hops,
        panel_gains,
        array_gain,
        panels: configured,
        report: eval.report,
    })
}

/// All simple BS -> IRS* -> user paths with at most `max_hops` reflections,
/// in DFS order (neighbors by index). Direct BS -> user edges count as
/// zero-reflection paths.
pub fn enumerate_paths(graph: &IrsGraph, max_hops: usize) -> Vec<Vec<usize>> {
    fn dfs(graph: &IrsGraph, max_hops: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().expect("non-empty");
        for next in 0..graph.nodes.len() {
            if !graph.los[last][next] || path.contains(&next) {
                continue;
            }
            match graph.nodes[next].role {
                Role::User => {
                    path.push(next);
                    out.push(path.clone());
                    path.pop();
                }
                Role::Irs if path.len() - 1 < max_hops => {
                    path.push(next);
                    dfs(graph, max_hops, path, out);
                    path.pop();
                }
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    for (i, n) in graph.nodes.iter().enumerate() {
        if n.role == Role::Bs {
            dfs(graph, max_hops, &mut vec![i], &mut out);
        }
    }
    out
}

fn rank(a: &ReflectionPath, b: &ReflectionPath) -> Ordering {
    // Greater means `a` is preferred.
    a.report
        .snr
        .total_cmp(&b.report.snr)
        .then(b.nodes.len().cmp(&a.nodes.len()))
        .then(b.ids.cmp(&a.ids))
}

fn pick_best(paths: Vec<ReflectionPath>) -> Result<ReflectionPath> {
    paths
        .into_iter()
        .reduce(|best, p| if rank(&p, &best) == Ordering::Greater { p } else { best })
        .ok_or(Error::Disconnected)
}

/// Exhaustive search for the SNR-maximizing path. Ties go to fewer hops,
/// then to the lexicographically smallest id sequence.
pub fn best_path(
    graph: &IrsGraph,
    budget: &TransmitBudget,
    models: &LinkModels,
    wavelength: f64,
    max_hops: usize,
) -> Result<ReflectionPath> {
    if max_hops == 0 {
        return Err(invalid("max_hops", "must be >= 1"));
    }
    let paths = enumerate_paths(graph, max_hops);
    let evaluated = paths
        .par_iter()
        .map(|p| path_snr(graph, p, budget, models, wavelength))
        .collect::<Result<Vec<_>>>()?;
    pick_best(evaluated)
}

/// Log-domain hop-bounded dynamic program for graphs of passive panels: each
/// edge weighs `log(path gain)`, each panel `log(N^2)`. Only valid without
/// active panels, where the end-to-end SNR factorizes over hops.
pub fn best_path_passive_fast(
    graph: &IrsGraph,
    budget: &TransmitBudget,
    models: &LinkModels,
    wavelength: f64,
    max_hops: usize,
) -> Result<ReflectionPath> {
    if max_hops == 0 {
        return Err(invalid("max_hops", "must be >= 1"));
    }
    if graph
        .nodes
        .iter()
        .any(|n| n.panel.as_ref().is_some_and(|p| p.active_count() > 0))
    {
        return Err(invalid("graph", "fast mode requires passive panels only"));
    }
    let n = graph.nodes.len();
    let weight = |i: usize, j: usize, model: &crate::propagation::PathLossModel| -> Result<f64> {
        Ok(path_loss(graph.distance[i][j], model)?.ln())
    };
    let panel_log = |i: usize| 2.0 * (graph.nodes[i].array.element_count as f64).ln();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for s in (0..n).filter(|&i| graph.nodes[i].role == Role::Bs) {
        // frontier[v] = best (score, path) reaching IRS v with the current hop count
        let mut frontier: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
        for v in 0..n {
            if graph.nodes[v].role == Role::Irs && graph.los[s][v] {
                frontier[v] = Some((weight(s, v, &models.bs_irs)? + panel_log(v), vec![s, v]));
            }
        }
        for t in (0..n).filter(|&i| graph.nodes[i].role == Role::User) {
            if graph.los[s][t] {
                candidates.push(vec![s, t]);
            }
        }
        for hop in 1..=max_hops {
            for t in (0..n).filter(|&i| graph.nodes[i].role == Role::User) {
                let mut best: Option<(f64, &Vec<usize>)> = None;
                for (v, f) in frontier.iter().enumerate() {
                    if let Some((score, path)) = f {
                        if graph.los[v][t] {
                            let total = score + weight(v, t, &models.irs_user)?;
                            if best.is_none_or(|(b, _)| total > b) {
                                best = Some((total, path));
                            }
                        }
                    }
                }
                if let Some((_, path)) = best {
                    let mut p = path.clone();
                    p.push(t);
                    candidates.push(p);
                }
            }
            if hop == max_hops {
                break;
            }
            let mut next: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
            for (u, f) in frontier.iter().enumerate() {
                let Some((score, path)) = f else { continue };
                for v in 0..n {
                    if graph.nodes[v].role != Role::Irs || !graph.los[u][v] || path.contains(&v) {
                        continue;
                    }
                    let total = score + weight(u, v, &models.inter_irs)? + panel_log(v);
                    if next[v].as_ref().is_none_or(|(b, _)| total > *b) {
                        let mut p = path.clone();
                        p.push(v);
                        next[v] = Some((total, p));
                    }
                }
            }
            frontier = next;
        }
    }
    let evaluated = candidates
        .iter()
        .map(|p| path_snr(graph, p, budget, models, wavelength))
        .collect::<Result<Vec<_>>>()?;
    pick_best(evaluated)
}
