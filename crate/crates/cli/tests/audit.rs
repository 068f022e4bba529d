// Compositional audit: three random rows of every table produced from the
// bundled scenarios are recomputed by calling the library operations
// directly.

use irs_core::deploy::{dmimo_associate, DoubleScenario, HybridOrder};
use irs_core::link::{
    area_min_power, assemble_multi_irs_channel, configure_mimo_panels, mimo_capacity, multi_irs_channels,
    wide_beam_config, TransmitBudget,
};
use irs_core::propagation::{dbm_to_watts, path_loss, Position};
use irs_core::routing::{path_snr, Role};
use irs_sim::experiments::{coverage, fig4, placement, routing};
use irs_sim::{default_scenario, run_experiment, Experiment, ResultTable, Scenario};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rows(t: &ResultTable, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = t.rows.len().min(3);
    let mut r = sample(&mut rng, t.rows.len(), k).into_vec();
    r.sort();
    r
}

fn get(t: &ResultTable, row: usize, col: &str) -> f64 {
    let i = t
        .columns
        .iter()
        .position(|c| c == col)
        .unwrap_or_else(|| panic!("{col}"));
    t.rows[row][i]
}

fn close(a: f64, b: f64, what: &str) {
    let tol = 1e-9 * a.abs().max(b.abs()).max(1e-300);
    assert!((a - b).abs() <= tol, "{what}: table {a} recomputed {b}");
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn run(e: Experiment) -> (Scenario, Vec<ResultTable>) {
    let s = default_scenario(e);
    let t = run_experiment(e, &s, None).unwrap();
    (s, t)
}

fn find<'a>(ts: &'a [ResultTable], name: &str) -> &'a ResultTable {
    ts.iter().find(|t| t.name == name).unwrap()
}

#[test]
fn fig2_points() {
    let (s, ts) = run(Experiment::Fig2);
    let t = find(&ts, "fig2");
    let c = s.fig2.as_ref().unwrap();
    let bs = s.endpoint(&c.bs).unwrap();
    let user = s.endpoint(&c.user).unwrap();
    let models = s.models().unwrap();
    for r in rows(t, 1) {
        let budget = TransmitBudget::new(dbm_to_watts(get(t, r, "tx_power_dbm")), dbm_to_watts(s.noise_dbm)).unwrap();
        for &k in &c.k_values {
            let panels: Vec<_> = (1..=k)
                .map(|i| {
                    let n = get(t, r, &format!("n_k{k}_{i}")) as usize;
                    s.panel(&c.panels[i - 1], Some(n)).unwrap()
                })
                .collect();
            let ch = multi_irs_channels(&bs, &user, &panels, &models, s.wavelength(), s.include_direct).unwrap();
            let panels = configure_mimo_panels(&ch, &panels).unwrap();
            let h = assemble_multi_irs_channel(&bs, &user, &panels, &models, s.wavelength(), s.include_direct).unwrap();
            let rate = mimo_capacity(&budget, &h).rate;
            let want = get(t, r, &format!("capacity_k{k}"));
            assert!(
                (rate - want).abs() <= 1e-9 * want.max(1e-3),
                "K={k} row {r}: {want} vs {rate}"
            );
        }
    }
}

#[test]
fn fig3_points() {
    let (s, ts) = run(Experiment::Fig3);
    let t = find(&ts, "fig3");
    let arch = irs_sim::experiments::fig3::architecture(&s).unwrap();
    for r in rows(t, 2) {
        let n = get(t, r, "n") as usize;
        close(
            get(t, r, "centralized"),
            arch.centralized(n).unwrap().sum_rate,
            "centralized",
        );
        close(
            get(t, r, "distributed"),
            arch.distributed(n).unwrap().sum_rate,
            "distributed",
        );
    }
}

#[test]
fn fig4_points() {
    let (s, ts) = run(Experiment::Fig4);
    let c = s.fig4.as_ref().unwrap();
    let t = find(&ts, "fig4");
    let (sc, _, _) = fig4::order_scenario(&s).unwrap();
    let active = s.active_params(&c.active).unwrap();
    let on = |seg: &[[f64; 3]; 2], x: f64| Position::new(x, seg[0][1], seg[0][2]).unwrap();
    for r in rows(t, 3) {
        let n = get(t, r, "n") as usize;
        for (order, tag) in [(HybridOrder::Bapu, "bapu"), (HybridOrder::Bpau, "bpau")] {
            let (k1, k2) = order.kinds(active);
            let n1 = get(t, r, &format!("{tag}_n1")) as usize;
            let p1 = on(&c.first_segment, get(t, r, &format!("{tag}_x1")));
            let p2 = on(&c.second_segment, get(t, r, &format!("{tag}_x2")));
            let rate = sc.evaluate_with(n1, n - n1, p1, p2, k1, k2).unwrap().2.rate;
            close(get(t, r, tag), rate, tag);
        }
    }

    let t = find(&ts, "fig4_allocation");
    let sc: DoubleScenario = fig4::allocation_scenario(&s).unwrap().unwrap();
    for r in rows(t, 4) {
        let (n1, n2) = (get(t, r, "n1") as usize, get(t, r, "n2") as usize);
        assert_eq!(n1 + n2, get(t, r, "n") as usize);
        close(
            get(t, r, "snr_db"),
            db(sc.evaluate(n1, n2).unwrap().snr),
            "allocation snr",
        );
    }
}

#[test]
fn placement_points() {
    let (s, ts) = run(Experiment::Placement);
    let c = s.placement.as_ref().unwrap();
    let (sc, _) = placement::placement_scenario(&s).unwrap();
    let active = s.active_params(&c.panel).unwrap();
    let panel_for = |k: f64| sc.hybrid_panel(k as usize, active).unwrap();
    for (name, seed) in [("placement", 5), ("placement_heatmap", 6)] {
        let t = find(&ts, name);
        for r in rows(t, seed) {
            let p = Position::new(get(t, r, "x"), get(t, r, "y"), get(t, r, "z")).unwrap();
            let snr = sc.snr_with(&panel_for(get(t, r, "n_active")), p).unwrap();
            close(get(t, r, "snr_db"), db(snr), name);
            if name == "placement" {
                close(get(t, r, "d_rx"), p.distance(&sc.rx.position), "d_rx");
            }
        }
    }
}

#[test]
fn coverage_points() {
    let (s, ts) = run(Experiment::Coverage);
    let c = s.coverage.as_ref().unwrap();
    let area = coverage::area(&s).unwrap();
    let bs = s.endpoint(&c.bs).unwrap();
    let models = s.models().unwrap();
    let budget = s.budget().unwrap();
    let dbm = |w: f64| db(w) + 30.0;
    let t = find(&ts, "coverage_sides");
    for r in rows(t, 7) {
        let n = get(t, r, "n") as usize;
        for (id, col) in [(&c.bs_side_irs, "bs_side_dbm"), (&c.user_side_irs, "user_side_dbm")] {
            let panel = s.panel(id, Some(n)).unwrap();
            let cfg = wide_beam_config(&bs, &panel, &area.points(), &models, s.wavelength()).unwrap();
            let p = area_min_power(&budget, &bs, &cfg, &area, &models, s.wavelength())
                .unwrap()
                .min_power;
            close(get(t, r, col), dbm(p), col);
        }
    }
    let t = find(&ts, "coverage_dmimo");
    for r in rows(t, 8) {
        let n = get(t, r, "n") as usize;
        let panel = s.panel(&c.bs_side_irs, Some(n)).unwrap();
        for &b in &c.b_values {
            let bss = coverage::dmimo_bss(&s, b).unwrap();
            assert_eq!(bss.len(), b);
            let p = dmimo_associate(&budget, &bss, &area, &panel, &models, s.wavelength())
                .unwrap()
                .min_power;
            close(get(t, r, &format!("b{b}_dbm")), dbm(p), "dmimo");
        }
    }
}

#[test]
fn routing_points() {
    let (s, ts) = run(Experiment::Routing);
    let (g, _) = routing::best(&s).unwrap();
    let models = s.models().unwrap();
    let hops = find(&ts, "routing_hops");
    let ids: Vec<&str> = hops.get_meta("path").unwrap().split(" -> ").collect();
    let idx: Vec<usize> = ids.iter().map(|id| g.index_of(id).unwrap()).collect();
    let path = path_snr(&g, &idx, &s.budget().unwrap(), &models, s.wavelength()).unwrap();
    close(
        hops.get_meta("snr_db").unwrap().parse().unwrap(),
        db(path.report.snr),
        "path snr",
    );
    for r in rows(hops, 9) {
        let (a, b) = (&g.nodes[idx[r]], &g.nodes[idx[r + 1]]);
        let d = a.position.distance(&b.position);
        let model = match (a.role, b.role) {
            (Role::Irs, Role::Irs) => models.inter_irs,
            (Role::Irs, _) => models.irs_user,
            (_, Role::Irs) => models.bs_irs,
            _ => models.bs_user,
        };
        close(get(hops, r, "distance_m"), d, "hop distance");
        close(
            get(hops, r, "path_gain_db"),
            db(path_loss(d, &model).unwrap()),
            "hop gain",
        );
    }
    let panels = find(&ts, "routing_panels");
    for r in rows(panels, 10) {
        let node = &g.nodes[idx[r + 1]];
        let panel = node.panel.as_ref().unwrap();
        assert_eq!(get(panels, r, "elements") as usize, panel.element_count());
        assert_eq!(get(panels, r, "active_elements") as usize, panel.active_count());
        close(get(panels, r, "panel_gain_db"), db(path.panel_gains[r]), "panel gain");
    }
}

#[test]
fn fieldtrial_points() {
    let (_, ts) = run(Experiment::Fieldtrial);
    let log =
        irs_core::fieldtrial::MeasurementLog::from_reader(irs_sim::experiments::fieldtrial::BUNDLED_LOG.as_bytes())
            .unwrap();
    let stats = find(&ts, "fieldtrial_stats");
    let group_id = |g: f64| stats.get_meta(&format!("group_{}", g as usize)).unwrap().to_string();
    let in_group =
        |id: &str, r: &irs_core::fieldtrial::MeasurementRecord| id == "all" || r.location_id.as_deref() == Some(id);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for r in rows(stats, 11) {
        let id = group_id(get(stats, r, "group"));
        let pairs: Vec<(f64, f64)> = log
            .records
            .iter()
            .filter(|m| in_group(&id, m))
            .filter_map(|m| Some((m.rsrp_off?, m.rsrp_on?)))
            .collect();
        assert_eq!(get(stats, r, "rsrp_samples") as usize, pairs.len());
        let off: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let on: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        close(get(stats, r, "rsrp_off_dbm"), mean(&off), "rsrp off");
        close(get(stats, r, "rsrp_gain_db"), mean(&on) - mean(&off), "rsrp gain");
        let thr: Vec<(f64, f64)> = log
            .records
            .iter()
            .filter(|m| in_group(&id, m))
            .filter_map(|m| Some((m.thr_off?, m.thr_on?)))
            .collect();
        assert_eq!(get(stats, r, "thr_samples") as usize, thr.len());
        if !thr.is_empty() {
            let off = mean(&thr.iter().map(|p| p.0).collect::<Vec<_>>());
            let on = mean(&thr.iter().map(|p| p.1).collect::<Vec<_>>());
            close(
                get(stats, r, "thr_gain_percent"),
                100.0 * (on / off - 1.0),
                "throughput gain",
            );
        }
    }

    let frac = find(&ts, "fieldtrial_fraction");
    for r in rows(frac, 12) {
        let id = group_id(get(frac, r, "group"));
        let x = get(frac, r, "threshold_dbm");
        let off: Vec<f64> = log
            .records
            .iter()
            .filter(|m| in_group(&id, m))
            .filter_map(|m| m.rsrp_off)
            .collect();
        let below = off.iter().filter(|v| **v <= x).count() as f64 / off.len() as f64;
        close(get(frac, r, "fraction_off"), below, "fraction");
    }

    let cdf = find(&ts, "fieldtrial_cdf");
    for r in rows(cdf, 13) {
        let on = get(cdf, r, "irs_on") == 1.0;
        let v: Vec<f64> = log.column(|m| if on { m.rsrp_on } else { m.rsrp_off });
        let x = get(cdf, r, "rsrp_dbm");
        let f = v.iter().filter(|y| **y <= x).count() as f64 / v.len() as f64;
        close(get(cdf, r, "fraction"), f, "cdf");
    }
}
