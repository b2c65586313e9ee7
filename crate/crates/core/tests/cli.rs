use std::path::Path;
use std::process::{Command, Output};

use bnls::fixtures;
use bnls::model::format::{network_to_string, read_network};
use bnls::model::{BayesianNetwork, Cpd, Dag, Representation, VariableTable};

fn bnls(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnls")).args(args).current_dir(dir).output().unwrap()
}

fn write_net(dir: &Path, name: &str, net: &BayesianNetwork) {
    std::fs::write(dir.join(name), network_to_string(net)).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn coins() -> BayesianNetwork {
    let cpds = (0..2).map(|_| Cpd::table(vec![vec![0.5, 0.5]])).collect();
    BayesianNetwork::new(VariableTable::binary(2), Dag::empty(2), cpds).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn sample_zero_rows_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "net.json", &fixtures::alarm_sound_network(Representation::Tree));
    let out = bnls(dir.path(), &["sample", "--network", "net.json", "--n", "0", "--out", "s.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read(dir.path(), "s.csv"), "A,B,E,S\n");
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("N\t0\nA\t2\n"));
}

#[test]
fn bad_network_names_the_node() {
    let dir = tempfile::tempdir().unwrap();
    let text = network_to_string(&coins()).replacen("0.5", "0.7", 1);
    std::fs::write(dir.path().join("bad.json"), text).unwrap();
    let out = bnls(dir.path(), &["sample", "--network", "bad.json", "--n", "3", "--out", "s.csv"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error\tFormat\t"), "{err}");
    assert!(err.contains("node `X0`"), "{err}");
}

#[test]
fn learn_independent_coins_gives_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "coins.json", &coins());
    assert!(bnls(dir.path(), &["sample", "--network", "coins.json", "--n", "4000", "--seed", "2", "--out", "d.csv"]).status.success());
    let out = bnls(
        dir.path(),
        &["learn", "--data", "d.csv", "--schema", "coins.json", "--mode", "table", "--out-network", "l.json", "--out-trace", "t.tsv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let learned = read_network(dir.path().join("l.json")).unwrap();
    assert_eq!(learned.dag().num_edges(), 0);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("actual_params\t2\n") && stdout.contains("tabular_complexity\t2\n"), "{stdout}");
    let trace = read(dir.path(), "t.tsv");
    assert!(trace.contains("# mode=tab\n"));
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn learn_tree_mode_writes_a_tree_cpt() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "t.json", &fixtures::alarm_sound_network(Representation::Tree));
    assert!(bnls(dir.path(), &["sample", "--network", "t.json", "--n", "16000", "--seed", "1", "--out", "d.csv"]).status.success());
    let out = bnls(
        dir.path(),
        &["learn", "--data", "d.csv", "--schema", "t.json", "--mode", "tree", "--out-network", "l.json", "--out-trace", "tr.tsv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let learned = read_network(dir.path().join("l.json")).unwrap();
    let s = learned.vars().index_of("S").unwrap();
    assert_eq!(learned.cpd(s).structure.representation(), Representation::Tree);
    assert!(read(dir.path(), "l.json").contains("\"tree\""));
}

/// Eight rows over two binary variables, scored under the empty graph by hand.
#[test]
fn score_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "coins.json", &coins());
    std::fs::write(dir.path().join("d.csv"), "X0,X1\n0,0\n0,1\n1,1\n1,1\n0,1\n1,0\n1,1\n1,1\n").unwrap();
    let out = bnls(dir.path(), &["score", "--data", "d.csv", "--network", "coins.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let total: f64 = stdout.lines().find(|l| l.starts_with("_total")).unwrap().split('\t').nth(5).unwrap().parse().unwrap();
    // X0: 3 zeros, 5 ones; X1: 2 zeros, 6 ones
    let h = |a: f64, b: f64| -(a * (a / 8.0).log2() + b * (b / 8.0).log2());
    let want = 2.0 + 2.0 * 0.5 * 3.0 + h(3.0, 5.0) + h(2.0, 6.0);
    assert!((total - want).abs() < 1e-6, "{total} vs {want}");

    let bde = bnls(dir.path(), &["score", "--data", "d.csv", "--network", "coins.json", "--objective", "bde", "--ess", "0"]);
    assert!(bde.status.success(), "{}", stderr(&bde));
    let text = String::from_utf8_lossy(&bde.stdout).into_owned();
    let evidence: f64 = text.lines().find(|l| l.starts_with("_total")).unwrap().split('\t').nth(3).unwrap().parse().unwrap();
    assert!((evidence + h(3.0, 5.0) + h(2.0, 6.0)).abs() < 1e-9);
}

#[test]
fn score_with_mismatched_variables_fails() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "coins.json", &coins());
    std::fs::write(dir.path().join("d.csv"), "A,B\n0,0\n").unwrap();
    let out = bnls(dir.path(), &["score", "--data", "d.csv", "--network", "coins.json"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error\tSchemaMismatch\t"), "{}", stderr(&out));
}

#[test]
fn curve_writes_one_record_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "t.json", &fixtures::alarm_sound_network(Representation::Tree));
    let out = bnls(
        dir.path(),
        &["curve", "--target", "t.json", "--sizes", "500,1000", "--reps", "2", "--modes", "tree", "--out", "c.tsv", "--aggregate", "a.tsv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = read(dir.path(), "c.tsv");
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 5);
    assert!(body[0].starts_with("size\trep\tmode"));
    assert!(text.contains("# sizes=500,1000\n") && text.contains("# epsilon=0.0001\n"));
    let agg = read(dir.path(), "a.tsv");
    assert_eq!(agg.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn mixed_writes_a_labelled_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "t.json", &fixtures::alarm_sound_network(Representation::Tree));
    let out = bnls(dir.path(), &["mixed", "--target", "t.json", "--size", "400", "--reps", "2", "--out", "m.tsv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = read(dir.path(), "m.tsv");
    let body: Vec<Vec<&str>> = text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split('\t').collect()).collect();
    assert_eq!(body.len(), 4);
    assert_eq!(body[0], vec!["structure\\params", "tab", "tree", "def"]);
    assert_eq!(body.iter().skip(1).map(|r| r[0]).collect::<Vec<_>>(), vec!["tab", "tree", "def"]);
    assert!(body.iter().skip(1).all(|r| r.len() == 4 && r[1..].iter().all(|v| v.parse::<f64>().is_ok())));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "t.json", &fixtures::alarm_sound_network(Representation::Tree));
    std::fs::write(dir.path().join("c.toml"), "sizes = [300]\nreps = 1\nseed = 4\nmodes = [\"def\"]\n").unwrap();
    let out = bnls(dir.path(), &["curve", "--target", "t.json", "--config", "c.toml", "--seed", "8", "--out", "c.tsv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = read(dir.path(), "c.tsv");
    assert!(text.contains("# seed=8\n") && text.contains("# modes=def\n") && text.contains("# reps=1\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("300\t")).count(), 1);

    std::fs::write(dir.path().join("bad.toml"), "sizes = [300]\ncolour = 1\n").unwrap();
    let out = bnls(dir.path(), &["curve", "--target", "t.json", "--config", "bad.toml", "--out", "c2.tsv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error\tConfig\t"));

    let out = bnls(dir.path(), &["curve", "--target", "t.json", "--epsilon", "1.5", "--out", "c3.tsv"]);
    assert!(stderr(&out).starts_with("error\tConfig\t"));
}

#[test]
fn aborted_curve_leaves_a_failed_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path(), "t.json", &fixtures::alarm_sound_network(Representation::Tree));
    let out = bnls(
        dir.path(),
        &["curve", "--target", "t.json", "--sizes", "300", "--reps", "1", "--kl-method", "exact", "--exact-cap", "4", "--out", "c.tsv"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error\tStateSpaceTooLarge\t"));
    let text = read(dir.path(), "c.tsv");
    assert!(text.lines().last().unwrap().starts_with("FAILED\tStateSpaceTooLarge\t"), "{text}");
}
