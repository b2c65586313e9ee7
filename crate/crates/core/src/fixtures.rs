//! Reference networks used by tests, experiments and the command-line examples.
//!
//! Numeric CPT entries here are fixture values chosen for these tests. The only
//! structural facts they encode are that `S` never sounds while `A = 0`, and that
//! `E` is irrelevant to `S` once `A = 1, B = 1`.

use crate::model::format::network_from_str;
use crate::model::{BayesianNetwork, Cpd, Dag, LocalStructure, Representation, TreeNode, Variable, VariableTable};

const ALARM_JSON: &str = include_str!("../fixtures/alarm.json");

/// The 37-node Alarm monitoring network, full-table CPTs.
pub fn alarm_network() -> BayesianNetwork {
    network_from_str(ALARM_JSON).expect("bundled Alarm network is valid")
}

/// Tree for `S` over parents `(A, B, E)`: `A=0` is one leaf, `A=1,B=1` another, and `A=1,B=0`
/// splits on `E`.
pub fn alarm_sound_tree() -> TreeNode {
    TreeNode::split(
        0,
        vec![TreeNode::Leaf, TreeNode::split(1, vec![TreeNode::split_leaves(2, 2), TreeNode::Leaf])],
    )
}

/// `P(S = 1 | A, B, E)` indexed by configuration `4A + 2B + E`.
const SOUND_GIVEN_ABE: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 0.2, 0.6, 0.9, 0.9];

/// Four binary variables `A, B, E` (roots) and `S` with parents `(A, B, E)`.
///
/// `rep` selects how `S`'s CPT is stored; every choice denotes the same distribution.
pub fn alarm_sound_network(rep: Representation) -> BayesianNetwork {
    let bin = |n: &str| Variable::new(n.to_string(), ["0".to_string(), "1".to_string()]);
    let vars = VariableTable::new(vec![bin("A"), bin("B"), bin("E"), bin("S")]).expect("valid");
    let dag = Dag::new(vec![vec![], vec![], vec![], vec![0, 1, 2]]).expect("acyclic");
    let dist = |p1: f64| vec![1.0 - p1, p1];
    let s = match rep {
        Representation::Table => Cpd::table(SOUND_GIVEN_ABE.iter().map(|&p| dist(p)).collect()),
        Representation::Default => Cpd::new(
            LocalStructure::default_table(vec![4, 5, 6, 7]),
            vec![dist(0.2), dist(0.6), dist(0.9), dist(0.9), dist(0.0)],
        ),
        Representation::Tree => Cpd::new(
            LocalStructure::tree(alarm_sound_tree()),
            vec![dist(0.0), dist(0.2), dist(0.6), dist(0.9)],
        ),
    };
    let cpds = vec![Cpd::table(vec![dist(0.6)]), Cpd::table(vec![dist(0.3)]), Cpd::table(vec![dist(0.4)]), s];
    BayesianNetwork::new(vars, dag, cpds).expect("fixture is valid")
}

/// Tree over two parents that isolates the configuration `(a, b)`, with the leaf
/// parameters that give it `special` and every other configuration `rest`.
fn isolating_tree(cards: [usize; 2], (a, b): (usize, usize), special: &[f64], rest: &[f64]) -> Cpd {
    let mut leaves = Vec::new();
    let children = (0..cards[0])
        .map(|v| {
            if v == a {
                leaves.extend((0..cards[1]).map(|w| if w == b { special.to_vec() } else { rest.to_vec() }));
                TreeNode::split_leaves(1, cards[1])
            } else {
                leaves.push(rest.to_vec());
                TreeNode::Leaf
            }
        })
        .collect();
    Cpd::new(LocalStructure::tree(TreeNode::split(0, children)), leaves)
}

/// Eight three-valued variables where each child's CPT singles out one parent configuration.
///
/// `R0..R3` are roots. `C4 | R0,R1`, `C5 | R1,R2`, `C6 | R2,R3` and `C7 | C4,C5` each
/// need two cells as a default table, five leaves as a tree and nine rows as a table.
pub fn special_config_network() -> BayesianNetwork {
    let vars = VariableTable::new(
        ["R0", "R1", "R2", "R3", "C4", "C5", "C6", "C7"]
            .iter()
            .map(|n| Variable::new(n.to_string(), (0..3).map(|i| i.to_string())))
            .collect(),
    )
    .expect("valid");
    let dag = Dag::new(vec![vec![], vec![], vec![], vec![], vec![0, 1], vec![1, 2], vec![2, 3], vec![4, 5]])
        .expect("acyclic");
    let root = |d: [f64; 3]| Cpd::table(vec![d.to_vec()]);
    let special = [0.75, 0.15, 0.10];
    let rest = [0.10, 0.30, 0.60];
    let cpds = vec![
        root([0.4, 0.3, 0.3]),
        root([0.3, 0.4, 0.3]),
        root([0.3, 0.3, 0.4]),
        root([0.35, 0.35, 0.3]),
        isolating_tree([3, 3], (0, 1), &special, &rest),
        isolating_tree([3, 3], (1, 2), &special, &rest),
        isolating_tree([3, 3], (2, 0), &[0.1, 0.8, 0.1], &[0.5, 0.2, 0.3]),
        isolating_tree([3, 3], (2, 0), &[0.8, 0.1, 0.1], &[0.2, 0.5, 0.3]),
    ];
    BayesianNetwork::new(vars, dag, cpds).expect("fixture is valid")
}
