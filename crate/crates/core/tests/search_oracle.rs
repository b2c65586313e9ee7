use bnls::data::{ancestral_sample, Dataset};
use bnls::fixtures;
use bnls::mdl::network_score;
use bnls::model::{BayesianNetwork, Cpd, Dag, Representation, VariableTable};
use bnls::search::{hill_climb, neighbor_moves, score_move, FamilyCache, Mdl, Move, SearchConfig, SearchState};

/// All 25 DAGs on three labelled nodes.
fn all_dags3() -> Vec<Dag> {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut out = Vec::new();
    for code in 0..27u32 {
        let mut parents = vec![vec![]; 3];
        let mut c = code;
        for &(a, b) in &pairs {
            match c % 3 {
                1 => parents[b].push(a),
                2 => parents[a].push(b),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(d) = Dag::new(parents) {
            out.push(d);
        }
    }
    out
}

fn table_network(ds: &Dataset, dag: &Dag) -> BayesianNetwork {
    let cpds = (0..dag.len())
        .map(|i| bnls::localfit::learn_local(ds, i, dag.parents(i), Representation::Table).unwrap().into_cpd())
        .collect();
    BayesianNetwork::new(ds.vars().clone(), dag.clone(), cpds).unwrap()
}

fn three_variable_target() -> BayesianNetwork {
    let vars = VariableTable::with_cardinalities(&[2, 3, 2]).unwrap();
    let dag = Dag::new(vec![vec![], vec![0], vec![1]]).unwrap();
    let cpds = vec![
        Cpd::table(vec![vec![0.6, 0.4]]),
        Cpd::table(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]),
        Cpd::table(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.2, 0.8]]),
    ];
    BayesianNetwork::new(vars, dag, cpds).unwrap()
}

#[test]
fn there_are_25_dags_on_three_nodes() {
    assert_eq!(all_dags3().len(), 25);
}

#[test]
fn hill_climb_result_beats_its_enumerated_neighbourhood() {
    for seed in 0..5 {
        let ds = ancestral_sample(&three_variable_target(), 1500, seed);
        let res = hill_climb(&ds, &Mdl(Representation::Table), SearchConfig::default()).unwrap();
        let final_dag = res.network.dag().clone();
        let scores: Vec<(Dag, f64)> =
            all_dags3().into_iter().map(|d| { let s = network_score(&ds, &table_network(&ds, &d)).unwrap().total; (d, s) }).collect();
        let neighbours: Vec<Dag> = neighbor_moves(&final_dag, None)
            .into_iter()
            .map(|m| {
                let mut d = final_dag.clone();
                m.apply(&mut d).unwrap();
                d
            })
            .collect();
        assert!(!neighbours.is_empty());
        for n in &neighbours {
            let s = scores.iter().find(|(d, _)| d == n).unwrap().1;
            assert!(res.score.total <= s + 1e-9, "seed {seed}: {} > {s}", res.score.total);
        }
        let own = scores.iter().find(|(d, _)| *d == final_dag).unwrap().1;
        assert!((own - res.score.total).abs() < 1e-9);
    }
}

#[test]
fn copy_pair_matches_exhaustive_two_node_scoring() {
    let vars = VariableTable::binary(2);
    let net = BayesianNetwork::new(
        vars,
        Dag::new(vec![vec![], vec![0]]).unwrap(),
        vec![Cpd::table(vec![vec![0.5, 0.5]]), Cpd::table(vec![vec![1.0, 0.0], vec![0.0, 1.0]])],
    )
    .unwrap();
    let ds = ancestral_sample(&net, 4000, 3);
    let dags = [Dag::empty(2), Dag::new(vec![vec![], vec![0]]).unwrap(), Dag::new(vec![vec![1], vec![]]).unwrap()];
    let scores: Vec<f64> = dags.iter().map(|d| network_score(&ds, &table_network(&ds, d)).unwrap().total).collect();
    assert!(scores[1] < scores[0] && scores[2] < scores[0]);
    let res = hill_climb(&ds, &Mdl(Representation::Table), SearchConfig::default()).unwrap();
    assert_eq!(res.network.dag().num_edges(), 1);
    assert!((res.score.total - scores[1].min(scores[2])).abs() < 1e-9);
}

#[test]
fn adding_an_independent_parent_is_rejected() {
    let target = fixtures::alarm_sound_network(Representation::Tree);
    for seed in 0..10 {
        let ds = ancestral_sample(&target, 20000, 100 + seed);
        let obj = Mdl(Representation::Table);
        let mut cache = FamilyCache::new(&ds, &obj);
        let state = SearchState::new(Dag::empty(4), &mut cache).unwrap();
        // A and B are independent roots
        assert!(score_move(&state, Move::add(0, 1), &mut cache).unwrap() > 0.0);
    }
}

#[test]
fn table_is_never_better_than_both_local_structures() {
    let ds = ancestral_sample(&fixtures::special_config_network(), 3000, 4);
    let res = hill_climb(&ds, &Mdl(Representation::Tree), SearchConfig::default()).unwrap();
    for i in 0..ds.vars().len() {
        let ps = res.network.dag().parents(i);
        let total = |rep| bnls::localfit::learn_local(&ds, i, ps, rep).unwrap().score.total;
        let tab = total(Representation::Table);
        assert!(tab + 1e-9 >= total(Representation::Tree).min(total(Representation::Default)));
    }
}
