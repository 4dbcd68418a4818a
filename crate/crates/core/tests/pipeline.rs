//! End-to-end runs through the CLI surface: instance files in, reports,
//! trees and exit codes out.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use railflow::cli::run_from;

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn feasible_files(dir: &Path) -> (PathBuf, PathBuf) {
    let net = write(
        dir,
        "net.csv",
        "NODES\nid,label\n0,west\n1,mid\n2,east\nARCS\nfrom,to,cost,capacity\nwest,mid,2,10\nmid,east,3,10\nmid,west,2,10\neast,mid,3,10\n",
    );
    let dem = write(dir, "dem.csv", "origin,destination,volume\nwest,east,4\n");
    (net, dem)
}

fn bottleneck_files(dir: &Path) -> (PathBuf, PathBuf) {
    // The only route crosses a zero-capacity arc; abandoning costs 2/unit.
    let net = write(
        dir,
        "net.csv",
        "NODES\nid,label\n0,a\n1,b\n2,c\nARCS\nfrom,to,cost,capacity\na,b,1,0\nb,c,1,10\n",
    );
    let dem = write(
        dir,
        "dem.csv",
        "origin,destination,volume,shadow_price\na,c,5,2\n",
    );
    (net, dem)
}

fn solve(args: &[&str]) -> i32 {
    let mut argv = vec!["railflow", "solve"];
    argv.extend_from_slice(args);
    run_from(argv)
}

#[test]
fn feasible_instance_exits_zero_with_clean_report() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["objective"]["penalty"], 0.0);
    assert_eq!(report["objective"]["total"], 20.0);
    assert_eq!(report["totals"]["mean_shipment_distance"], 5.0);
    assert!(out.join("trace.log").exists());
}

#[test]
fn bottleneck_with_virtual_abandons_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = bottleneck_files(dir.path());
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["objective"]["penalty"], 0.0);
    assert_eq!(report["abandonment"]["total_cost"], 10.0);
    assert_eq!(report["totals"]["abandoned_volume"], 5.0);
    assert_eq!(report["abandonment"]["attribution"][0]["origin"], "a");
}

#[test]
fn bottleneck_without_virtual_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = bottleneck_files(dir.path());
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--no-virtual",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["objective"]["penalty"].as_f64().unwrap() > 0.0);
}

#[test]
fn unreachable_demand_without_virtual_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(
        dir.path(),
        "net.csv",
        "NODES\nid,label\n0,a\n1,b\nARCS\nfrom,to,cost,capacity\nb,a,1,10\n",
    );
    let dem = write(dir.path(), "dem.csv", "origin,destination,volume\na,b,2\n");
    let code = solve(&[net.to_str().unwrap(), dem.to_str().unwrap(), "--no-virtual"]);
    assert_eq!(code, 1);
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(
        dir.path(),
        "net.csv",
        "NODES\nid,label\n0,a\nnot-a-section\n",
    );
    let dem = write(dir.path(), "dem.csv", "origin,destination,volume\n");
    assert_eq!(solve(&[net.to_str().unwrap(), dem.to_str().unwrap()]), 1);
    assert_eq!(solve(&["/definitely/missing", dem.to_str().unwrap()]), 1);
}

#[test]
fn invalid_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let (net, dem) = (net.to_str().unwrap(), dem.to_str().unwrap());
    assert_eq!(solve(&[net, dem, "--epsilon", "0.8"]), 1);
    assert_eq!(solve(&[net, dem, "--K", "7"]), 1);
    assert_eq!(solve(&[net, dem, "--alpha", "1.0"]), 1);
}

#[test]
fn empty_demands_solve_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let (net, _) = feasible_files(dir.path());
    let dem = write(dir.path(), "empty.csv", "origin,destination,volume\n");
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["objective"]["total"], 0.0);
    assert_eq!(report["totals"]["routed_volume"], 0.0);
}

#[test]
fn trees_are_emitted_for_requested_destinations() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--trees",
        "east",
    ]);
    assert_eq!(code, 0);
    let dot = fs::read_to_string(out.join("trees").join("east.dot")).unwrap();
    assert!(dot.contains("doublecircle"));
    assert!(dot.contains("\"west\" -> \"mid\""));
    let csv = fs::read_to_string(out.join("trees.csv")).unwrap();
    assert!(csv.starts_with("destination,from,to,flow\n"));
    assert!(csv.contains("east,west,mid,4"));

    // Unknown destination label is a named input error.
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--trees",
        "nowhere",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn oracle_subcommand_reports_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let out = dir.path().join("oracle-out");
    let code = run_from([
        "railflow",
        "oracle",
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    assert_eq!(result["optimum"], 20.0);
    assert_eq!(result["penalty"], 0.0);
}

#[test]
fn oracle_cap_refusal_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let code = run_from([
        "railflow",
        "oracle",
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--oracle-cap",
        "1",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn no_prune_widens_the_search_but_keeps_the_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--no-prune",
        "--oracle",
        "--restarts",
        "2",
        "--verbose",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["oracle"]["matched"], true);
    assert!(report["params"]["epsilon"].is_null());
}

#[test]
fn solve_with_oracle_flag_certifies_match() {
    let dir = tempfile::tempdir().unwrap();
    let (net, dem) = feasible_files(dir.path());
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--oracle",
        "--restarts",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["oracle"]["matched"], true);
    assert_eq!(report["oracle"]["optimum"], 20.0);
}

/// Same seed, same instance: the reports agree byte for byte once the
/// wall-clock field is masked.
#[test]
fn reports_are_deterministic_up_to_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut generator = common::rng(0xD00D);
    let cfg = common::GeneratorConfig {
        min_nodes: 8,
        max_nodes: 12,
        min_demands: 5,
        max_demands: 10,
        ..common::GeneratorConfig::default()
    };
    let inst = common::random_instance(&mut generator, &cfg);
    let net = write(
        dir.path(),
        "net.csv",
        &railflow::io::network_to_string(&inst.net),
    );
    let dem = write(
        dir.path(),
        "dem.csv",
        &railflow::io::demands_to_string(&inst.net, &inst.demands),
    );
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let code = solve(&[
            net.to_str().unwrap(),
            dem.to_str().unwrap(),
            "--seed",
            "99",
            "--restarts",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(code == 0 || code == 2);
        let mut report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        report["sa"]["wall_time_ms"] = 0.into();
        reports.push(serde_json::to_string(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

/// The shipped sample instance solves clean and matches its oracle.
#[test]
fn sample_instance_solves() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let net = root.join("sample/network.csv");
    let dem = root.join("sample/demands.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let code = solve(&[
        net.to_str().unwrap(),
        dem.to_str().unwrap(),
        "--seed",
        "7",
        "--oracle",
        "--trees",
        "terminal",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["oracle"]["matched"], true);
    assert_eq!(report["objective"]["total"], 240.0);
    assert!(out.join("trees/terminal.dot").exists());
}

/// Emitted instance files reload into the identical instance.
#[test]
fn emitted_instances_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut generator = common::rng(0xF11E);
    for case in 0..10 {
        let inst = common::random_instance(&mut generator, &common::GeneratorConfig::default());
        let net = write(
            dir.path(),
            &format!("net{case}.csv"),
            &railflow::io::network_to_string(&inst.net),
        );
        let dem = write(
            dir.path(),
            &format!("dem{case}.csv"),
            &railflow::io::demands_to_string(&inst.net, &inst.demands),
        );
        let reloaded = railflow::io::load_instance::<f64>(&net, &dem).unwrap();
        assert_eq!(reloaded.net, inst.net);
        assert_eq!(reloaded.demands, inst.demands);
    }
}
