//! Description lengths, in bits, and the composed MDL scores.
//!
//! A family's score has three parts: the local-structure encoding, the parameters
//! (half `log2 N` bits each) and the data, `N H(X | cell)` at maximum-likelihood
//! parameters. The graph adds `(1 + |parents|) log2 n` bits per node.

use std::fmt::Write as _;

use crate::data::{family_counts, Dataset, FamilyCounts};
use crate::error::{Error, Result};
use crate::model::{BayesianNetwork, Dag, LocalStructure, ParentSpace, TreeNode};

/// `log2 C(m, k)` as a sum of logarithms; exact binomials overflow for large `m`.
pub fn log2_binomial(m: usize, k: usize) -> f64 {
    assert!(k <= m, "C({m}, {k}) undefined");
    let k = k.min(m - k);
    (1..=k).map(|i| ((m - k + i) as f64).log2() - (i as f64).log2()).sum()
}

/// `½ log2 N`, taken as zero when `N <= 1`.
pub fn half_log2(n: u64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        0.5 * (n as f64).log2()
    }
}

/// Bits for one partition cell's parameters: `½ (||X|| - 1) log2 N`.
pub fn cell_param_bits(child_card: usize, n: u64) -> f64 {
    (child_card - 1) as f64 * half_log2(n)
}

/// `sum_i (1 + |Pi_i|) log2 n`.
pub fn dl_graph(dag: &Dag) -> f64 {
    let n = dag.len();
    if n == 0 {
        return 0.0;
    }
    let log_n = (n as f64).log2();
    (0..n).map(|i| (1 + dag.parents(i).len()) as f64 * log_n).sum()
}

/// Parameter bits of a full table: `½ ||Pi|| (||X|| - 1) log2 N`.
pub fn dl_table_params(child_card: usize, configs: usize, n: u64) -> f64 {
    configs as f64 * cell_param_bits(child_card, n)
}

/// Structure and parameter bits of a local structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBits {
    pub structure: f64,
    pub params: f64,
}

/// Default table with `k` explicit rows:
/// `log2 ||Pi|| + log2 C(||Pi||, k)` structure bits plus `(k + 1)` cells of parameters.
pub fn dl_default(configs: usize, child_card: usize, k: usize, n: u64) -> Result<LocalBits> {
    if configs == 0 || k >= configs {
        return Err(Error::KOutOfRange { k, configs });
    }
    Ok(LocalBits {
        structure: (configs as f64).log2() + log2_binomial(configs, k),
        params: (k + 1) as f64 * cell_param_bits(child_card, n),
    })
}

/// Tree structure bits by the recurrence: a leaf costs 1; an internal node `depth` levels
/// down costs `1 + log2(|Pi| - depth)` plus its subtrees.
pub fn dl_tree_structure(tree: &TreeNode, num_parents: usize) -> f64 {
    fn go(node: &TreeNode, depth: usize, num_parents: usize) -> f64 {
        match node {
            TreeNode::Leaf => 1.0,
            TreeNode::Split { children, .. } => {
                1.0 + ((num_parents - depth) as f64).log2()
                    + children.iter().map(|c| go(c, depth + 1, num_parents)).sum::<f64>()
            }
        }
    }
    go(tree, 0, num_parents)
}

/// Structure and parameter bits for any representation.
pub fn local_bits(ls: &LocalStructure, space: &ParentSpace, child_card: usize, n: u64) -> LocalBits {
    match ls {
        LocalStructure::FullTable => {
            LocalBits { structure: 0.0, params: dl_table_params(child_card, space.size(), n) }
        }
        LocalStructure::DefaultTable { rows } => {
            dl_default(space.size(), child_card, rows.len(), n).expect("validated default table")
        }
        LocalStructure::DecisionTree(t) => LocalBits {
            structure: dl_tree_structure(t.root(), space.num_parents()),
            params: t.num_leaves() as f64 * cell_param_bits(child_card, n),
        },
    }
}

/// `-sum_{cell, x} N(x, cell) log2 theta(x | cell)` with `0 log 0 = 0`; `+inf` when a
/// counted event has zero probability.
pub fn dl_data(counts: &FamilyCounts, params: &[Vec<f64>]) -> f64 {
    let mut bits = 0.0;
    for (p, cell) in counts.nonempty() {
        for (&c, &theta) in cell.iter().zip(&params[p.0]) {
            if c > 0 {
                bits -= c as f64 * theta.log2();
            }
        }
    }
    bits
}

/// `N_cell H(X | cell)` for one cell's counts.
pub fn cell_data_bits(cell: &[u64]) -> f64 {
    let n: u64 = cell.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    cell.iter().filter(|&&c| c > 0).map(|&c| -(c as f64) * (c as f64 / n).log2()).sum()
}

/// `N H(X | cell)`: data bits at maximum-likelihood parameters.
pub fn ml_data_bits(counts: &FamilyCounts) -> f64 {
    counts.nonempty().map(|(_, cell)| cell_data_bits(cell)).sum()
}

/// Empirical conditional entropy `H(X | cell)` in bits per instance.
pub fn conditional_entropy(counts: &FamilyCounts) -> Result<f64> {
    if counts.total() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(ml_data_bits(counts) / counts.total() as f64)
}

/// Score of one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyScore {
    pub structure: f64,
    pub params: f64,
    pub data: f64,
    pub total: f64,
}

impl FamilyScore {
    pub fn new(structure: f64, params: f64, data: f64) -> Self {
        FamilyScore { structure, params, data, total: structure + params + data }
    }

    pub fn infinite() -> Self {
        FamilyScore::new(0.0, 0.0, f64::INFINITY)
    }
}

/// Family score from counts already tallied under `ls`, at maximum-likelihood parameters.
pub fn score_counts(ls: &LocalStructure, space: &ParentSpace, counts: &FamilyCounts) -> FamilyScore {
    let bits = local_bits(ls, space, counts.child_card(), counts.total());
    FamilyScore::new(bits.structure, bits.params, ml_data_bits(counts))
}

/// MDL score of `child` with the given parents and local structure on `ds`.
pub fn family_score(ds: &Dataset, child: usize, parents: &[usize], ls: &LocalStructure) -> Result<FamilyScore> {
    let vars = ds.vars();
    let space = ParentSpace::new(parents.iter().map(|&p| vars.cardinality(p)).collect())?;
    ls.validate(&space).map_err(|reason| Error::InvalidStructure { node: vars.name(child).to_string(), reason })?;
    let counts = family_counts(ds, child, parents, ls)?;
    Ok(score_counts(ls, &space, &counts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScore {
    pub graph: f64,
    pub families: Vec<FamilyScore>,
    pub total: f64,
}

impl NetworkScore {
    pub fn new(graph: f64, families: Vec<FamilyScore>) -> Self {
        let total = graph + families.iter().map(|f| f.total).sum::<f64>();
        NetworkScore { graph, families, total }
    }
}

/// Total description length of `net`'s graph and local structures on `ds`, with
/// maximum-likelihood parameters.
pub fn network_score(ds: &Dataset, net: &BayesianNetwork) -> Result<NetworkScore> {
    if ds.vars() != net.vars() {
        return Err(Error::SchemaMismatch("dataset and network have different variables".into()));
    }
    let families = (0..net.len())
        .map(|i| family_score(ds, i, net.dag().parents(i), &net.cpd(i).structure))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkScore::new(dl_graph(net.dag()), families))
}

/// TSV report: one line per family, then the graph term and the total.
pub fn score_report(net: &BayesianNetwork, score: &NetworkScore) -> String {
    let mut out = String::from("node\trepresentation\tdlStructure\tdlParams\tdlData\ttotal\n");
    for (i, f) in score.families.iter().enumerate() {
        let rep = net.cpd(i).structure.representation();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            net.vars().name(i),
            rep,
            f.structure,
            f.params,
            f.data,
            f.total
        );
    }
    let _ = writeln!(out, "_graph\t-\t{}\t0\t0\t{}", score.graph, score.graph);
    let structure: f64 = score.families.iter().map(|f| f.structure).sum::<f64>() + score.graph;
    let params: f64 = score.families.iter().map(|f| f.params).sum();
    let data: f64 = score.families.iter().map(|f| f.data).sum();
    let _ = writeln!(out, "_total\t-\t{structure}\t{params}\t{data}\t{}", score.total);
    out
}
