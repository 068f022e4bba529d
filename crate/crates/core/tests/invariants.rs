use std::f64::consts::PI;

use approx::assert_relative_eq;
use irs_core::irs::{
    cascade_sum, co_phase_align, quantize_phases, verify_power_profile, ActiveParams, IrsPanel, PanelKind,
    PowerConstraint, ReflectionConfig,
};
use irs_core::link::{
    configure_single, kkt_residuals, siso_single_reflection, water_filling, SisoChannels, TransmitBudget,
};
use irs_core::propagation::{path_loss, ArrayGeometry, Endpoint, LinkModels, PathLossModel, Position, C64};
use irs_core::routing::{best_path, best_path_passive_fast, build_graph, path_snr, IrsGraph, Node, Obstacle, Role};
use nalgebra::Vector3;
use proptest::prelude::*;

const LAMBDA: f64 = 0.1153;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((1e-3f64..1.0, -PI..PI), n)
        .prop_map(|v| v.into_iter().map(|(r, p)| C64::from_polar(r, p)).collect())
}

fn channel_pair() -> impl Strategy<Value = (Vec<C64>, Vec<C64>)> {
    (1usize..24).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
}

proptest! {
    #[test]
    fn co_phasing_beats_any_phase_choice(
        (h_in, h_out) in channel_pair(),
        seed in prop::collection::vec(-PI..PI, 24),
    ) {
        let opt = cascade_sum(&h_in, &h_out, &co_phase_align(&h_in, &h_out).unwrap()).unwrap();
        let bound: f64 = h_in.iter().zip(&h_out).map(|(a, b)| a.norm() * b.norm()).sum();
        prop_assert!((opt.norm() - bound).abs() <= 1e-9 * bound);
        let other = ReflectionConfig { phases: seed[..h_in.len()].to_vec(), amplitudes: vec![1.0; h_in.len()] };
        let any = cascade_sum(&h_in, &h_out, &other).unwrap();
        prop_assert!(any.norm() <= opt.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn quantization_loses_at_most_the_phase_step((h_in, h_out) in channel_pair(), bits in 1u32..6) {
        let cfg = co_phase_align(&h_in, &h_out).unwrap();
        let opt = cascade_sum(&h_in, &h_out, &cfg).unwrap().norm();
        let q = cascade_sum(&h_in, &h_out, &quantize_phases(&cfg, bits).unwrap()).unwrap().norm();
        let worst = (PI / (1u32 << bits) as f64).cos();
        prop_assert!(q >= worst * opt * (1.0 - 1e-12), "q {q} opt {opt} bits {bits}");
        prop_assert!(q <= opt * (1.0 + 1e-12));
    }

    #[test]
    fn active_amplitude_meets_budget_with_equality(
        (h_in, h_out) in channel_pair(),
        budget_dbm in -40.0f64..20.0,
        p_t in 1e-3f64..10.0,
        per_element in any::<bool>(),
    ) {
        let n = h_in.len();
        let constraint = if per_element { PowerConstraint::PerElement } else { PowerConstraint::Total };
        let params = ActiveParams { budget: 1e-3 * 10f64.powf(budget_dbm / 10.0), constraint, noise_power: 1e-10 };
        let panel = IrsPanel::new(
            Position::xy(0.0, 0.0),
            ArrayGeometry::linear(n, LAMBDA / 2.0, Vector3::x()).unwrap(),
            PanelKind::Active(params),
        ).unwrap();
        let ch = SisoChannels {
            h1: h_in.iter().map(|h| h * 1e-3).collect::<Vec<_>>().into(),
            h2: h_out.clone().into(),
            direct: None,
        };
        let configured = configure_single(&panel, &ch, p_t).unwrap();
        let incident: Vec<f64> = ch.h1.iter().map(|h| p_t * h.norm_sqr()).collect();
        let report = verify_power_profile(&configured, &incident);
        prop_assert!(report.satisfied);
        let used = match constraint {
            PowerConstraint::Total => report.total,
            PowerConstraint::PerElement => report.per_element.iter().cloned().fold(0.0, f64::max),
        };
        assert_relative_eq!(used, params.budget, max_relative = 1e-9);
        let snr = siso_single_reflection(&TransmitBudget::new(p_t, 1e-12).unwrap(), &ch, &configured).unwrap().snr;
        prop_assert!(snr.is_finite() && snr > 0.0);
    }

    #[test]
    fn path_loss_never_increases_with_distance(
        d1 in 0.01f64..1e4,
        extra in 0.0f64..1e4,
        alpha in 2.0f64..4.0,
    ) {
        let m = PathLossModel::new(1e-3, alpha).unwrap();
        prop_assert!(path_loss(d1, &m).unwrap() >= path_loss(d1 + extra, &m).unwrap());
        prop_assert!(path_loss(d1, &m).unwrap() <= 1e-3);
    }

    #[test]
    fn water_filling_satisfies_kkt(
        sv in prop::collection::vec(1e-6f64..1e-2, 1..8),
        p_t in 1e-6f64..10.0,
        noise in 1e-13f64..1e-9,
    ) {
        let wf = water_filling(&sv, p_t, noise);
        prop_assert!(kkt_residuals(&sv, p_t, noise, &wf) < 1e-9);
        let used: f64 = wf.powers.iter().sum();
        assert_relative_eq!(used, p_t, max_relative = 1e-9);
        prop_assert!(wf.powers.iter().all(|p| *p >= 0.0));
    }
}

// Routing

fn irs(id: &str, x: f64, y: f64, n: usize, kind: PanelKind) -> Node {
    Node::irs(
        id,
        IrsPanel::new(
            Position::new(x, y, 3.0).unwrap(),
            ArrayGeometry::linear(n, LAMBDA / 2.0, Vector3::y()).unwrap(),
            kind,
        )
        .unwrap(),
    )
}

#[derive(Debug, Clone)]
struct Layout {
    irs: Vec<(f64, f64, usize, bool)>,
    walls: Vec<((f64, f64), (f64, f64))>,
}

fn layout() -> impl Strategy<Value = Layout> {
    let panel = (5.0f64..95.0, -40.0f64..40.0, 2usize..12, any::<bool>());
    let wall = ((5.0f64..95.0, -40.0f64..40.0), (5.0f64..95.0, -40.0f64..40.0));
    (prop::collection::vec(panel, 1..6), prop::collection::vec(wall, 0..4))
        .prop_map(|(irs, walls)| Layout { irs, walls })
}

fn graph(l: &Layout, allow_active: bool) -> IrsGraph {
    let mut nodes = vec![
        Node::bs("bs", Position::new(0.0, 0.0, 3.0).unwrap(), ArrayGeometry::single()),
        Node::user("ue", Position::new(100.0, 0.0, 3.0).unwrap(), ArrayGeometry::single()),
    ];
    for (i, &(x, y, n, active)) in l.irs.iter().enumerate() {
        let kind = if active && allow_active {
            PanelKind::Active(ActiveParams {
                budget: 1e-2,
                constraint: PowerConstraint::Total,
                noise_power: 1e-10,
            })
        } else {
            PanelKind::Passive
        };
        // nudge to keep positions distinct
        nodes.push(irs(&format!("r{i}"), x + 1e-3 * i as f64, y, n, kind));
    }
    let walls = l.walls.iter().map(|&(a, b)| Obstacle::Segment { a, b }).collect();
    build_graph(nodes, walls).unwrap()
}

/// Independent enumeration: every ordered subset of IRSs, checked for LoS on
/// every hop.
fn brute_force_best(g: &IrsGraph, budget: &TransmitBudget, models: &LinkModels, max_hops: usize) -> Option<f64> {
    let irs: Vec<usize> = (0..g.nodes.len()).filter(|&i| g.nodes[i].role == Role::Irs).collect();
    let bs = g.index_of("bs").unwrap();
    let ue = g.index_of("ue").unwrap();
    let mut best: Option<f64> = None;
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(mid) = stack.pop() {
        let mut path = vec![bs];
        path.extend(&mid);
        path.push(ue);
        if path.windows(2).all(|w| g.los[w[0]][w[1]]) {
            let snr = path_snr(g, &path, budget, models, LAMBDA).unwrap().report.snr;
            best = Some(best.map_or(snr, |b: f64| b.max(snr)));
        }
        if mid.len() < max_hops {
            for &r in &irs {
                if !mid.contains(&r) {
                    let mut next = mid.clone();
                    next.push(r);
                    stack.push(next);
                }
            }
        }
    }
    best
}

fn budget() -> TransmitBudget {
    TransmitBudget::new(1.0, 1e-12).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exhaustive_routing_matches_independent_enumeration(l in layout(), max_hops in 1usize..4) {
        let g = graph(&l, true);
        let models = LinkModels::default();
        let expected = brute_force_best(&g, &budget(), &models, max_hops);
        match best_path(&g, &budget(), &models, LAMBDA, max_hops) {
            Ok(p) => {
                let e = expected.expect("router found a path the enumeration missed");
                assert_relative_eq!(p.report.snr, e, max_relative = 1e-12);
                prop_assert!(p.reflections() <= max_hops);
            }
            Err(irs_core::Error::Disconnected) => prop_assert!(expected.is_none()),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn fast_mode_agrees_on_passive_graphs(l in layout(), max_hops in 1usize..4) {
        let g = graph(&l, false);
        let models = LinkModels::default();
        let exact = best_path(&g, &budget(), &models, LAMBDA, max_hops);
        let fast = best_path_passive_fast(&g, &budget(), &models, LAMBDA, max_hops);
        match (exact, fast) {
            (Ok(a), Ok(b)) => assert_relative_eq!(a.report.snr, b.report.snr, max_relative = 1e-6),
            (Err(_), Err(_)) => {}
            (a, b) => panic!("exact {:?} fast {:?}", a.map(|p| p.ids), b.map(|p| p.ids)),
        }
    }

    #[test]
    fn adding_an_edge_never_hurts(l in layout(), a in 0usize..7, b in 0usize..7) {
        let g = graph(&l, true);
        let n = g.nodes.len();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let models = LinkModels::default();
        let before = best_path(&g, &budget(), &models, LAMBDA, 3).map(|p| p.report.snr).unwrap_or(0.0);
        let after = best_path(&g.with_edge(a, b, true), &budget(), &models, LAMBDA, 3)
            .map(|p| p.report.snr)
            .unwrap_or(0.0);
        prop_assert!(after >= before * (1.0 - 1e-12));
    }

    #[test]
    fn passive_route_ignores_transmit_power(l in layout(), scale_db in -30.0f64..30.0) {
        let g = graph(&l, false);
        let models = LinkModels::default();
        let base = best_path(&g, &budget(), &models, LAMBDA, 3);
        let scaled = best_path(&g, &budget().with_power(10f64.powf(scale_db / 10.0)), &models, LAMBDA, 3);
        match (base, scaled) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.ids, b.ids);
                assert_relative_eq!(b.report.snr / a.report.snr, 10f64.powf(scale_db / 10.0), max_relative = 1e-9);
            }
            (Err(_), Err(_)) => {}
            _ => panic!("connectivity changed with transmit power"),
        }
    }
}

#[test]
fn single_panel_gain_is_quadratic_in_elements() {
    let tx = Endpoint::single(Position::new(0.0, 0.0, 5.0).unwrap());
    let rx = Endpoint::single(Position::new(40.0, 0.0, 1.5).unwrap());
    let snr = |n: usize| {
        let panel = IrsPanel::new(
            Position::new(20.0, 3.0, 5.0).unwrap(),
            ArrayGeometry::linear(n, LAMBDA / 2.0, Vector3::x()).unwrap(),
            PanelKind::Passive,
        )
        .unwrap();
        let ch = SisoChannels::from_geometry(&tx, &panel, &rx, &LinkModels::default(), LAMBDA, false).unwrap();
        let panel = configure_single(&panel, &ch, 1.0).unwrap();
        siso_single_reflection(&budget(), &ch, &panel).unwrap().snr
    };
    assert_relative_eq!(snr(64) / snr(16), 16.0, max_relative = 1e-9);
}
