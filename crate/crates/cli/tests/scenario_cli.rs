use std::path::Path;
use std::process::{Command, Output};

use irs_sim::experiments::default_scenario_text;
use irs_sim::{
    default_scenario, parse_scenario, parse_scenario_str, run_experiment, CliError, Experiment, ResultTable,
};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs-sim"))
        .args(args)
        .output()
        .expect("spawn irs-sim")
}

fn scenario_error(text: &str) -> (String, Option<usize>, String) {
    match parse_scenario_str(text) {
        Err(CliError::Scenario { field, line, message }) => (field, line, message),
        other => panic!("expected a scenario error, got {other:?}"),
    }
}

#[test]
fn minimal_file_takes_defaults() {
    let s = parse_scenario_str("seed = 3\n").unwrap();
    assert_eq!(s.seed, 3);
    assert_eq!(s.carrier_hz, 2.6e9);
    assert_eq!(s.noise_dbm, -90.0);
    assert_eq!(s.amp_noise_dbm, -70.0);
    assert!(!s.include_direct);
    assert!(s.k_factor.is_infinite());
    assert_eq!(s.path_loss.beta0_db, -30.0);
    assert_eq!(
        (
            s.path_loss.bs_irs,
            s.path_loss.irs_user,
            s.path_loss.bs_user,
            s.path_loss.inter_irs
        ),
        (2.2, 2.8, 3.5, 2.2)
    );
}

#[test]
fn seed_is_mandatory() {
    let (field, _, _) = scenario_error("carrier_hz = 3.5e9\n");
    assert_eq!(field, "seed");
}

#[test]
fn unknown_key_is_named_with_its_line() {
    let (field, line, _) = scenario_error("seed = 1\ncarrier_hz = 2.6e9\nbogus = 2\n");
    assert_eq!(field, "bogus");
    assert_eq!(line, Some(3));

    let text = "seed = 1\n\n[[node]]\nid = \"a\"\nrole = \"bs\"\nposition = [0.0, 0.0, 0.0]\nelemnts = 4\n";
    let (field, line, _) = scenario_error(text);
    assert_eq!(field, "elemnts");
    assert_eq!(line, Some(7));
}

#[test]
fn invalid_values_are_rejected_with_a_line() {
    let text = "seed = 1\n[[node]]\nid = \"a\"\nrole = \"irs\"\nposition = [0.0, 0.0, 0.0]\nelements = 0\n";
    let (field, line, _) = scenario_error(text);
    assert_eq!(field, "node[0].elements");
    assert_eq!(line, Some(6));

    let err = parse_scenario_str("seed = 1\nk_factor = -1.0\n")
        .unwrap_err()
        .to_string();
    assert!(err.contains("k_factor") && err.contains("line 2"), "{err}");
}

#[test]
fn section_references_must_exist() {
    let text = "seed = 1\n[fig3]\nbs = \"nowhere\"\nusers = []\ncentral = \"c\"\ndistributed = []\nn_values = [8]\n";
    let (field, _, message) = scenario_error(text);
    assert_eq!(field, "fig3.bs");
    assert!(message.contains("nowhere"));
}

#[test]
fn missing_section_is_a_mismatch() {
    let s = parse_scenario_str("seed = 1\n").unwrap();
    for e in Experiment::ALL {
        match run_experiment(e, &s, None) {
            Err(CliError::Mismatch(m)) => assert!(m.contains(e.name()), "{m}"),
            other => panic!("{}: {other:?}", e.name()),
        }
    }
}

#[test]
fn normalized_dump_round_trips() {
    for e in Experiment::ALL {
        let s = default_scenario(e);
        let dump = s.to_toml();
        let back = parse_scenario_str(&dump).unwrap();
        assert_eq!(back, s, "{}", e.name());
        assert_eq!(back.to_toml(), dump);
        assert_eq!(back.hash(), s.hash());
        assert_eq!(s.hash().len(), 64);
    }
}

#[test]
fn hash_ignores_formatting_but_not_values() {
    let a = parse_scenario_str("seed = 1\ntx_power_dbm = 20.0\n").unwrap();
    let b = parse_scenario_str("# comment\ntx_power_dbm = 20.0\n\nseed = 1\n").unwrap();
    let c = parse_scenario_str("seed = 1\ntx_power_dbm = 21.0\n").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn bundled_scenarios_parse_from_disk() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for e in Experiment::ALL {
        let s = parse_scenario(&dir.join(format!("{}.toml", e.name()))).unwrap();
        assert_eq!(s, parse_scenario_str(default_scenario_text(e)).unwrap());
    }
}

#[test]
fn every_table_carries_provenance() {
    let s = default_scenario(Experiment::Fig3);
    let t = &run_experiment(Experiment::Fig3, &s, None).unwrap()[0];
    let keys: Vec<&str> = t.metadata.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(
        &keys[..5],
        ["table", "experiment", "version", "seed", "scenario_sha256"]
    );
    assert_eq!(t.get_meta("scenario_sha256"), Some(s.hash().as_str()));
}

#[test]
fn repeated_runs_are_identical() {
    for e in [
        Experiment::Fig3,
        Experiment::Coverage,
        Experiment::Routing,
        Experiment::Fieldtrial,
    ] {
        let s = default_scenario(e);
        let render = |ts: Vec<ResultTable>| ts.iter().map(ResultTable::to_delimited).collect::<Vec<_>>();
        let a = render(run_experiment(e, &s, None).unwrap());
        let b = render(run_experiment(e, &s, None).unwrap());
        assert_eq!(a, b, "{}", e.name());
    }
}

#[test]
fn capacity_grows_with_transmit_power() {
    let ts = run_experiment(Experiment::Fig2, &default_scenario(Experiment::Fig2), None).unwrap();
    let t = &ts[0];
    for k in [1, 2, 4] {
        let c = t.column(&format!("capacity_k{k}")).unwrap();
        assert!(c.windows(2).all(|w| w[1] > w[0]), "K={k}: {c:?}");
    }
    // every split uses exactly the element budget
    let total: usize = t.get_meta("total_elements").unwrap().parse().unwrap();
    for k in [1usize, 2, 4] {
        let parts: Vec<Vec<f64>> = (1..=k).map(|i| t.column(&format!("n_k{k}_{i}")).unwrap()).collect();
        for r in 0..t.rows.len() {
            let sum: f64 = parts.iter().map(|p| p[r]).sum();
            assert_eq!(sum as usize, total);
        }
    }
}

#[test]
fn cli_writes_tables_and_honors_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["fig3", "--seed", "42", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    let t = ResultTable::from_delimited(&text).unwrap();
    assert_eq!(t.get_meta("seed"), Some("42"));
    assert_eq!(t.columns, ["n", "centralized", "distributed"]);

    let out = bin(&["fig3", "--format", "report", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.path().join("fig3.txt")).unwrap();
    assert!(report.starts_with("fig3\n"));
}

#[test]
fn cli_prints_to_stdout_without_out_dir() {
    let out = bin(&["routing"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# table: routing_hops"));
    assert!(text.contains("# table: routing_panels"));
}

#[test]
fn cli_dump_matches_normalized_scenario() {
    let out = bin(&["coverage", "--dump-scenario", "--seed", "9"]);
    assert!(out.status.success());
    let mut s = default_scenario(Experiment::Coverage);
    s.seed = 9;
    assert_eq!(String::from_utf8(out.stdout).unwrap(), s.to_toml());
}

#[test]
fn cli_reports_errors_with_nonzero_exit() {
    let out = bin(&["fig2", "--scenario", "/nonexistent/scenario.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 1\nbogus = true\n").unwrap();
    let out = bin(&["fig2", "--scenario", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("line 2"), "{err}");

    // scenario without the requested section
    std::fs::write(&path, "seed = 1\n").unwrap();
    let out = bin(&["fig4", "--scenario", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig4"));

    let out = bin(&["fig3", "--jobs", "0"]);
    assert!(!out.status.success());
}

#[test]
fn measurement_log_resolves_next_to_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("drive.csv"),
        "location_id,rsrp_off,rsrp_on,thr_off,thr_on\n\
         a,-100,-90,10,20\n\
         a,-80,-76,30,40\n",
    )
    .unwrap();
    let path = dir.path().join("trial.toml");
    std::fs::write(&path, "seed = 1\n[fieldtrial]\nlog = \"drive.csv\"\n").unwrap();
    let out = bin(&["fieldtrial", "--scenario", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let stats = ResultTable::from_delimited(text.split("\n\n").next().unwrap()).unwrap();
    assert_eq!(stats.name, "fieldtrial_stats");
    // group 0: all records
    assert_eq!(stats.column("rsrp_off_dbm").unwrap()[0], -90.0);
    assert_eq!(stats.column("rsrp_gain_db").unwrap()[0], 7.0);
    assert_eq!(stats.column("thr_gain_percent").unwrap()[0], 50.0);

    std::fs::write(&path, "seed = 1\n[fieldtrial]\nlog = \"missing.csv\"\n").unwrap();
    let out = bin(&["fieldtrial", "--scenario", path.to_str().unwrap()]);
    assert!(!out.status.success());
}
