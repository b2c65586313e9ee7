use crate::error::{Error, Result};
use crate::model::{Dag, LocalStructure, ParentSpace, PartitionId, VariableTable};

/// Tolerance on the sum of every stored probability vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A node's conditional distribution: a local structure and one vector per partition cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpd {
    pub structure: LocalStructure,
    pub params: Vec<Vec<f64>>,
}

impl Cpd {
    pub fn new(structure: LocalStructure, params: Vec<Vec<f64>>) -> Self {
        Cpd { structure, params }
    }

    /// A full table with the given rows, one per parent configuration.
    pub fn table(params: Vec<Vec<f64>>) -> Self {
        Cpd { structure: LocalStructure::FullTable, params }
    }
}

/// `B = <G, Theta>` over a variable table.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    vars: VariableTable,
    dag: Dag,
    cpds: Vec<Cpd>,
    spaces: Vec<ParentSpace>,
}

impl BayesianNetwork {
    pub fn new(vars: VariableTable, dag: Dag, cpds: Vec<Cpd>) -> Result<Self> {
        if dag.len() != vars.len() || cpds.len() != vars.len() {
            return Err(Error::InvalidGraph(format!(
                "{} variables, {} graph nodes and {} CPDs",
                vars.len(),
                dag.len(),
                cpds.len()
            )));
        }
        let mut spaces = Vec::with_capacity(vars.len());
        for (node, cpd) in cpds.iter().enumerate() {
            let name = vars.name(node).to_string();
            let space = ParentSpace::new(dag.parents(node).iter().map(|&p| vars.cardinality(p)).collect())?;
            cpd.structure
                .validate(&space)
                .map_err(|reason| Error::InvalidStructure { node: name.clone(), reason })?;
            let cells = cpd.structure.num_partitions(&space);
            if cpd.params.len() != cells {
                return Err(Error::InvalidParams {
                    node: name,
                    reason: format!("{} probability vectors for {cells} partition cells", cpd.params.len()),
                });
            }
            let card = vars.cardinality(node);
            for (cell, dist) in cpd.params.iter().enumerate() {
                check_distribution(dist, card).map_err(|reason| Error::InvalidParams {
                    node: name.clone(),
                    reason: format!("cell {cell}: {reason}"),
                })?;
            }
            spaces.push(space);
        }
        Ok(BayesianNetwork { vars, dag, cpds, spaces })
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpd(&self, node: usize) -> &Cpd {
        &self.cpds[node]
    }

    pub fn cpds(&self) -> &[Cpd] {
        &self.cpds
    }

    pub fn parent_space(&self, node: usize) -> &ParentSpace {
        &self.spaces[node]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn partition_of(&self, node: usize, parent_config: &[usize]) -> PartitionId {
        self.cpds[node].structure.partition_of(&self.spaces[node], parent_config)
    }

    /// `P(X_node | parents = parent_config)`.
    pub fn conditional_dist(&self, node: usize, parent_config: &[usize]) -> &[f64] {
        &self.cpds[node].params[self.partition_of(node, parent_config).0]
    }

    /// Conditional distribution of `node` with parent values read from a full assignment.
    pub fn conditional_in(&self, node: usize, assignment: &[usize]) -> &[f64] {
        let parents = self.dag.parents(node);
        let cell = self.cpds[node].structure.partition_with(&self.spaces[node], |j| assignment[parents[j]]);
        &self.cpds[node].params[cell.0]
    }

    /// log2 of the joint probability of a full assignment; `-inf` if any factor is zero.
    pub fn joint_log_prob(&self, assignment: &[usize]) -> f64 {
        debug_assert_eq!(assignment.len(), self.len());
        (0..self.len()).map(|i| self.conditional_in(i, assignment)[assignment[i]].log2()).sum()
    }

    /// Free parameters of one family's local structure.
    pub fn family_param_count(&self, node: usize) -> usize {
        self.cpds[node].structure.param_count(&self.spaces[node], self.vars.cardinality(node))
    }

    pub fn actual_param_count(&self) -> usize {
        (0..self.len()).map(|i| self.family_param_count(i)).sum()
    }

    pub fn tabular_complexity(&self) -> usize {
        tabular_complexity(&self.dag, &self.vars)
    }

    /// Replaces every parameter vector by `(1 - eps) theta + eps uniform`.
    pub fn smoothed(&self, eps: f64) -> BayesianNetwork {
        let mut out = self.clone();
        for (node, cpd) in out.cpds.iter_mut().enumerate() {
            let u = 1.0 / self.vars.cardinality(node) as f64;
            for dist in &mut cpd.params {
                for p in dist.iter_mut() {
                    *p = (1.0 - eps) * *p + eps * u;
                }
            }
        }
        out
    }
}

/// `sum_i ||Pi_i|| (||X_i|| - 1)`: the parameter count if every CPT were a full table.
pub fn tabular_complexity(dag: &Dag, vars: &VariableTable) -> usize {
    (0..dag.len())
        .map(|i| {
            let configs: usize = dag.parents(i).iter().map(|&p| vars.cardinality(p)).product();
            configs * (vars.cardinality(i) - 1)
        })
        .sum()
}

fn check_distribution(dist: &[f64], card: usize) -> std::result::Result<(), String> {
    if dist.len() != card {
        return Err(format!("{} entries for {card} values", dist.len()));
    }
    if let Some(p) = dist.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(format!("entry {p} outside [0, 1]"));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(format!("entries sum to {sum}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{increment, TreeNode};

    #[test]
    fn zero_row_of_the_alarm_sound_cpt() {
        let net = fixtures::alarm_sound_network(Representation::Table);
        let s = net.vars().index_of("S").unwrap();
        // parents of S are (A, B, E)
        assert_eq!(net.conditional_dist(s, &[0, 1, 0])[1], 0.0);
        let mut u = vec![0; 4];
        u[net.vars().index_of("A").unwrap()] = 0;
        u[s] = 1;
        assert_eq!(net.joint_log_prob(&u), f64::NEG_INFINITY);
    }

    use crate::model::Representation;

    #[test]
    fn independent_fair_coins() {
        let vars = VariableTable::binary(2);
        let cpds = vec![Cpd::table(vec![vec![0.5, 0.5]]), Cpd::table(vec![vec![0.5, 0.5]])];
        let net = BayesianNetwork::new(vars, Dag::empty(2), cpds).unwrap();
        for u in [[0, 0], [0, 1], [1, 1]] {
            assert_eq!(net.joint_log_prob(&u), -2.0);
        }
        let single = BayesianNetwork::new(
            VariableTable::binary(1),
            Dag::empty(1),
            vec![Cpd::table(vec![vec![0.3, 0.7]])],
        )
        .unwrap();
        assert_eq!(single.conditional_dist(0, &[]), &[0.3, 0.7]);
    }

    #[test]
    fn parameter_counts() {
        let table = fixtures::alarm_sound_network(Representation::Table);
        let s = table.vars().index_of("S").unwrap();
        let count = |net: &BayesianNetwork| net.cpd(s).structure.param_count(net.parent_space(s), 2);
        assert_eq!(count(&table), 8);
        assert_eq!(count(&fixtures::alarm_sound_network(Representation::Default)), 5);
        assert_eq!(count(&fixtures::alarm_sound_network(Representation::Tree)), 4);
        assert_eq!(tabular_complexity(table.dag(), table.vars()), 11);
        assert_eq!(tabular_complexity(&Dag::empty(4), &VariableTable::binary(4)), 4);
    }

    #[test]
    fn rejects_bad_parameters() {
        let vars = VariableTable::binary(1);
        let bad_sum = BayesianNetwork::new(vars.clone(), Dag::empty(1), vec![Cpd::table(vec![vec![0.5, 0.6]])]);
        assert!(matches!(bad_sum, Err(Error::InvalidParams { .. })));
        let extra = BayesianNetwork::new(
            vars.clone(),
            Dag::empty(1),
            vec![Cpd::table(vec![vec![0.5, 0.5], vec![0.5, 0.5]])],
        );
        assert!(matches!(extra, Err(Error::InvalidParams { .. })));
        let tree_on_nothing = BayesianNetwork::new(
            vars,
            Dag::empty(1),
            vec![Cpd::new(LocalStructure::tree(TreeNode::split_leaves(0, 2)), vec![vec![0.5, 0.5]; 2])],
        );
        assert!(matches!(tree_on_nothing, Err(Error::InvalidStructure { .. })));
    }

    #[test]
    fn one_cell_structures_agree() {
        let vars = VariableTable::binary(1);
        let dist = vec![vec![0.25, 0.75]];
        let forms = [
            LocalStructure::FullTable,
            LocalStructure::default_table(vec![]),
            LocalStructure::tree(TreeNode::Leaf),
        ];
        for ls in forms {
            let net = BayesianNetwork::new(vars.clone(), Dag::empty(1), vec![Cpd::new(ls, dist.clone())]).unwrap();
            assert_eq!(net.conditional_dist(0, &[]), &[0.25, 0.75]);
        }
    }

    #[test]
    fn joint_sums_to_one() {
        let net = fixtures::alarm_sound_network(Representation::Tree);
        let cards = net.vars().cardinalities();
        let mut u = vec![0; cards.len()];
        let mut total = 0.0;
        loop {
            total += net.joint_log_prob(&u).exp2();
            if !increment(&mut u, &cards) {
                break;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
