use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::localfit::parent_space;
use crate::mdl::{cell_data_bits, cell_param_bits};
use crate::model::{LocalStructure, TreeNode};

struct Family<'a> {
    child: &'a [u16],
    child_card: usize,
    parents: Vec<&'a [u16]>,
    parent_cards: Vec<usize>,
    leaf_param_bits: f64,
}

impl<'a> Family<'a> {
    fn new(ds: &'a Dataset, child: usize, parents: &[usize]) -> Self {
        let vars = ds.vars();
        Family {
            child: ds.column(child),
            child_card: vars.cardinality(child),
            parents: parents.iter().map(|&p| ds.column(p)).collect(),
            parent_cards: parents.iter().map(|&p| vars.cardinality(p)).collect(),
            leaf_param_bits: cell_param_bits(vars.cardinality(child), ds.len() as u64),
        }
    }

    fn num_parents(&self) -> usize {
        self.parents.len()
    }

    fn counts(&self, rows: &[u32]) -> Vec<u64> {
        let mut c = vec![0; self.child_card];
        for &r in rows {
            c[self.child[r as usize] as usize] += 1;
        }
        c
    }

    fn split_rows(&self, rows: &[u32], pos: usize) -> Vec<Vec<u32>> {
        let mut parts = vec![Vec::new(); self.parent_cards[pos]];
        for &r in rows {
            parts[self.parents[pos][r as usize] as usize].push(r);
        }
        parts
    }

    /// Bits of a single leaf holding `rows`.
    fn leaf_bits(&self, rows: &[u32]) -> f64 {
        1.0 + self.leaf_param_bits + cell_data_bits(&self.counts(rows))
    }

    /// Bits of a one-level split on `pos` at `depth`, children left as leaves.
    fn split_bits(&self, rows: &[u32], pos: usize, depth: usize) -> f64 {
        let card = self.parent_cards[pos];
        let mut cells = vec![0u64; card * self.child_card];
        for &r in rows {
            let r = r as usize;
            cells[self.parents[pos][r] as usize * self.child_card + self.child[r] as usize] += 1;
        }
        let data: f64 = cells.chunks(self.child_card).map(cell_data_bits).sum();
        1.0 + ((self.num_parents() - depth) as f64).log2() + card as f64 * (1.0 + self.leaf_param_bits) + data
    }

    fn grow(&self, rows: &[u32], tested: &mut Vec<bool>, depth: usize) -> TreeNode {
        if rows.is_empty() || depth == self.num_parents() {
            return TreeNode::Leaf;
        }
        let first = self.child[rows[0] as usize];
        if rows.iter().all(|&r| self.child[r as usize] == first) {
            return TreeNode::Leaf;
        }
        let mut best: Option<(usize, f64)> = None;
        for pos in (0..self.num_parents()).filter(|&p| !tested[p]) {
            let bits = self.split_bits(rows, pos, depth);
            if best.is_none_or(|(_, b)| bits < b) {
                best = Some((pos, bits));
            }
        }
        let (pos, _) = best.expect("an untested parent remains");
        tested[pos] = true;
        let children = self.split_rows(rows, pos).iter().map(|part| self.grow(part, tested, depth + 1)).collect();
        tested[pos] = false;
        TreeNode::split(pos, children)
    }

    /// Bottom-up trimming; returns the trimmed subtree and its bits at this depth.
    fn trim(&self, node: &TreeNode, rows: &[u32], depth: usize) -> (TreeNode, f64) {
        match node {
            TreeNode::Leaf => (TreeNode::Leaf, self.leaf_bits(rows)),
            TreeNode::Split { test, children } => {
                let parts = self.split_rows(rows, *test);
                let mut kept = Vec::with_capacity(children.len());
                let mut bits = 1.0 + ((self.num_parents() - depth) as f64).log2();
                for (child, part) in children.iter().zip(&parts) {
                    let (t, b) = self.trim(child, part, depth + 1);
                    kept.push(t);
                    bits += b;
                }
                let leaf = self.leaf_bits(rows);
                if bits >= leaf {
                    (TreeNode::Leaf, leaf)
                } else {
                    (TreeNode::split(*test, kept), bits)
                }
            }
        }
    }
}

fn all_rows(ds: &Dataset) -> Vec<u32> {
    (0..ds.len() as u32).collect()
}

/// Grows the maximal tree top-down.
///
/// Each leaf is split on the untested parent giving the shortest description of the
/// resulting tree (ties to the lowest parent position). Growth stops at a leaf with no
/// rows, with a constant child, or with every parent already tested on its path.
pub fn grow_tree(ds: &Dataset, child: usize, parents: &[usize]) -> Result<TreeNode> {
    let family = Family::new(ds, child, parents);
    Ok(family.grow(&all_rows(ds), &mut vec![false; parents.len()], 0))
}

/// Replaces, bottom-up, every subtree whose description (structure at its depth, leaf
/// parameters and data) is at least that of a single leaf over the same rows.
pub fn trim_tree(tree: &TreeNode, ds: &Dataset, child: usize, parents: &[usize]) -> Result<TreeNode> {
    let space = parent_space(ds, parents)?;
    LocalStructure::tree(tree.clone())
        .validate(&space)
        .map_err(|reason| Error::InvalidStructure { node: ds.vars().name(child).to_string(), reason })?;
    let family = Family::new(ds, child, parents);
    Ok(family.trim(tree, &all_rows(ds), 0).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ancestral_sample;
    use crate::fixtures;
    use crate::localfit::learn_local;
    use crate::mdl::family_score;
    use crate::model::{BayesianNetwork, Cpd, Dag, ParentSpace, Representation, VariableTable};

    fn valid(tree: &TreeNode, ds: &Dataset, parents: &[usize]) -> bool {
        let space = ParentSpace::new(parents.iter().map(|&p| ds.vars().cardinality(p)).collect()).unwrap();
        LocalStructure::tree(tree.clone()).validate(&space).is_ok()
    }

    fn xor_net(noise: f64) -> BayesianNetwork {
        let vars = VariableTable::binary(3);
        let dag = Dag::new(vec![vec![], vec![], vec![0, 1]]).unwrap();
        let coin = || Cpd::table(vec![vec![0.5, 0.5]]);
        let lo = vec![1.0 - noise, noise];
        let hi = vec![noise, 1.0 - noise];
        BayesianNetwork::new(vars, dag, vec![coin(), coin(), Cpd::table(vec![lo.clone(), hi.clone(), hi, lo])])
            .unwrap()
    }

    #[test]
    fn stopping_rules() {
        let ds = Dataset::from_rows(VariableTable::binary(3), &vec![vec![0, 1, 1]; 5]).unwrap();
        assert_eq!(grow_tree(&ds, 2, &[0, 1]).unwrap(), TreeNode::Leaf);
        let ds = ancestral_sample(&xor_net(0.1), 100, 1);
        assert_eq!(grow_tree(&ds, 2, &[]).unwrap(), TreeNode::Leaf);
        let empty = Dataset::empty(VariableTable::binary(3));
        assert_eq!(grow_tree(&empty, 2, &[0, 1]).unwrap(), TreeNode::Leaf);
    }

    /// Every tree of depth <= 2 over two binary parents.
    fn all_small_trees() -> Vec<TreeNode> {
        let mut out = vec![TreeNode::Leaf];
        for root in 0..2 {
            let other = 1 - root;
            let sub = [TreeNode::Leaf, TreeNode::split_leaves(other, 2)];
            for a in &sub {
                for b in &sub {
                    out.push(TreeNode::split(root, vec![a.clone(), b.clone()]));
                }
            }
        }
        out
    }

    #[test]
    fn xor_needs_the_full_tree() {
        let ds = ancestral_sample(&xor_net(0.0), 4000, 2);
        let grown = grow_tree(&ds, 2, &[0, 1]).unwrap();
        assert_eq!(grown.num_leaves(), 4);
        assert_eq!(grown.depth(), 2);
        let trimmed = trim_tree(&grown, &ds, 2, &[0, 1]).unwrap();
        assert_eq!(trimmed, grown);
        let best = all_small_trees()
            .into_iter()
            .map(|t| family_score(&ds, 2, &[0, 1], &LocalStructure::tree(t)).unwrap().total)
            .fold(f64::INFINITY, f64::min);
        let learned = family_score(&ds, 2, &[0, 1], &LocalStructure::tree(trimmed)).unwrap().total;
        assert!((learned - best).abs() < 1e-9);
    }

    #[test]
    fn independent_child_trims_to_a_leaf() {
        let vars = VariableTable::binary(4);
        let dag = Dag::new(vec![vec![], vec![], vec![], vec![0, 1, 2]]).unwrap();
        let coin = || Cpd::table(vec![vec![0.5, 0.5]]);
        let net =
            BayesianNetwork::new(vars, dag, vec![coin(), coin(), coin(), Cpd::table(vec![vec![0.2, 0.8]; 8])]).unwrap();
        let ds = ancestral_sample(&net, 20_000, 6);
        let grown = grow_tree(&ds, 3, &[0, 1, 2]).unwrap();
        assert!(grown.num_leaves() > 1);
        assert_eq!(trim_tree(&grown, &ds, 3, &[0, 1, 2]).unwrap(), TreeNode::Leaf);
        assert_eq!(trim_tree(&TreeNode::Leaf, &ds, 3, &[0, 1, 2]).unwrap(), TreeNode::Leaf);
    }

    #[test]
    fn alarm_sound_tree_groups_a0() {
        let net = fixtures::alarm_sound_network(Representation::Tree);
        let space = ParentSpace::new(vec![2, 2, 2]).unwrap();
        let mut good = 0;
        for seed in 0..10 {
            let ds = ancestral_sample(&net, 16_000, 100 + seed);
            let grown = grow_tree(&ds, 3, &[0, 1, 2]).unwrap();
            assert!(valid(&grown, &ds, &[0, 1, 2]));
            let trimmed = trim_tree(&grown, &ds, 3, &[0, 1, 2]).unwrap();
            assert!(valid(&trimmed, &ds, &[0, 1, 2]));
            let g = family_score(&ds, 3, &[0, 1, 2], &LocalStructure::tree(grown)).unwrap().total;
            let t = family_score(&ds, 3, &[0, 1, 2], &LocalStructure::tree(trimmed.clone())).unwrap().total;
            assert!(t <= g + 1e-9);
            let ls = LocalStructure::tree(trimmed.clone());
            let cells = ls.partition_members(&space);
            let a0_grouped = cells.iter().any(|c| (0..4).all(|i| c.contains(&i)));
            if trimmed.num_leaves() <= 4 && a0_grouped {
                good += 1;
            }
        }
        assert!(good >= 8, "{good}/10");
    }

    #[test]
    fn learned_tree_scores_match_direct_scoring() {
        let ds = ancestral_sample(&fixtures::alarm_sound_network(Representation::Tree), 3000, 8);
        let f = learn_local(&ds, 3, &[0, 1, 2], Representation::Tree).unwrap();
        assert_eq!(family_score(&ds, 3, &[0, 1, 2], &f.structure).unwrap(), f.score);
    }
}
