//! Best reflection path between one BS and one user over every IRS in the
//! scenario, with a per-hop and per-panel breakdown.

use irs_core::routing::{best_path, build_graph, IrsGraph, Node, Obstacle, ReflectionPath};

use crate::scenario::{NodeRole, ObstacleConfig, Scenario};
use crate::table::ResultTable;
use crate::Result;

use super::to_db;

/// Graph with the configured BS and user plus every IRS node.
pub fn graph(s: &Scenario) -> Result<IrsGraph> {
    let c = s.section(&s.routing, "routing")?;
    let mut nodes = vec![
        Node::bs(c.bs.clone(), s.position(&c.bs)?, s.geometry(&c.bs, None)?),
        Node::user(c.user.clone(), s.position(&c.user)?, s.geometry(&c.user, None)?),
    ];
    for n in s.nodes.iter().filter(|n| n.role == NodeRole::Irs) {
        nodes.push(Node::irs(n.id.clone(), s.panel(&n.id, None)?));
    }
    let obstacles = s
        .obstacles
        .iter()
        .map(|o| match *o {
            ObstacleConfig::Segment { a, b } => Obstacle::Segment {
                a: (a[0], a[1]),
                b: (b[0], b[1]),
            },
            ObstacleConfig::Box { min, max } => Obstacle::Box {
                min: (min[0], min[1]),
                max: (max[0], max[1]),
            },
        })
        .collect();
    Ok(build_graph(nodes, obstacles)?)
}

pub fn best(s: &Scenario) -> Result<(IrsGraph, ReflectionPath)> {
    let c = s.section(&s.routing, "routing")?;
    let g = graph(s)?;
    let path = best_path(&g, &s.budget()?, &s.models()?, s.wavelength(), c.max_hops)?;
    Ok((g, path))
}

pub fn run(s: &Scenario) -> Result<Vec<ResultTable>> {
    let (g, path) = best(s)?;
    let mut hops = ResultTable::new("routing_hops", &["hop", "distance_m", "path_gain_db"]);
    hops.meta("path", path.ids.join(" -> "));
    hops.meta("reflections", path.reflections());
    hops.meta("snr_db", to_db(path.report.snr));
    hops.meta("rate", path.report.rate);
    hops.meta("edges", g.edge_count());
    for (i, h) in path.hops.iter().enumerate() {
        hops.push(vec![i as f64, h.distance, to_db(h.path_gain)]);
    }
    let mut panels = ResultTable::new(
        "routing_panels",
        &[
            "reflection",
            "elements",
            "active_elements",
            "panel_gain_db",
            "noise_power_dbm",
        ],
    );
    panels.meta("path", path.ids.join(" -> "));
    panels.meta("array_gain_db", to_db(path.array_gain));
    for (i, (p, gain)) in path.panels.iter().zip(&path.panel_gains).enumerate() {
        let label = format!("irs{} amplification", i + 1);
        let noise = path
            .report
            .noise_terms
            .iter()
            .find(|t| t.label == label)
            .map_or(f64::NEG_INFINITY, |t| super::to_dbm(t.power));
        panels.push(vec![
            (i + 1) as f64,
            p.element_count() as f64,
            p.active_count() as f64,
            to_db(*gain),
            noise,
        ]);
    }
    Ok(vec![hops, panels])
}
