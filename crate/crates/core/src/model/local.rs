use std::fmt;

use crate::error::{Error, Result};

/// Mixed-radix indexing of the joint configurations of a parent list.
///
/// Configurations are ordered lexicographically over the parent list with the
/// last parent varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentSpace {
    cards: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl ParentSpace {
    pub fn new(cards: Vec<usize>) -> Result<Self> {
        let mut strides = vec![0; cards.len()];
        let mut size: usize = 1;
        for (j, &c) in cards.iter().enumerate().rev() {
            strides[j] = size;
            size = size.checked_mul(c).ok_or_else(|| {
                Error::InvalidGraph("parent configuration space does not fit in usize".into())
            })?;
        }
        Ok(ParentSpace { cards, strides, size })
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_parents(&self) -> usize {
        self.cards.len()
    }

    /// ||Pi||, the number of joint parent configurations.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index(&self, config: &[usize]) -> usize {
        debug_assert_eq!(config.len(), self.cards.len());
        config.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    pub fn index_with(&self, value: impl Fn(usize) -> usize) -> usize {
        self.strides.iter().enumerate().map(|(j, s)| value(j) * s).sum()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut config = vec![0; self.cards.len()];
        for (j, &s) in self.strides.iter().enumerate() {
            config[j] = index / s;
            index %= s;
        }
        config
    }

    pub fn is_legal(&self, config: &[usize]) -> bool {
        config.len() == self.cards.len() && config.iter().zip(&self.cards).all(|(v, c)| v < c)
    }
}

/// One cell of the partition a local structure induces over parent configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionId(pub usize);

impl fmt::Display for PartitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Recursive decision-tree node. `test` is a position in the family's parent list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreeNode {
    Leaf,
    Split { test: usize, children: Vec<TreeNode> },
}

impl TreeNode {
    pub fn split(test: usize, children: Vec<TreeNode>) -> Self {
        TreeNode::Split { test, children }
    }

    pub fn split_leaves(test: usize, arity: usize) -> Self {
        TreeNode::Split { test, children: vec![TreeNode::Leaf; arity] }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf => 1,
            TreeNode::Split { children, .. } => children.iter().map(TreeNode::num_leaves).sum(),
        }
    }

    pub fn num_internal(&self) -> usize {
        match self {
            TreeNode::Leaf => 0,
            TreeNode::Split { children, .. } => {
                1 + children.iter().map(TreeNode::num_internal).sum::<usize>()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf => 0,
            TreeNode::Split { children, .. } => {
                1 + children.iter().map(TreeNode::depth).max().unwrap_or(0)
            }
        }
    }

    fn validate(&self, cards: &[usize], on_path: &mut Vec<usize>) -> std::result::Result<(), String> {
        match self {
            TreeNode::Leaf => Ok(()),
            TreeNode::Split { test, children } => {
                let test = *test;
                if test >= cards.len() {
                    return Err(format!("test on parent position {test} out of range"));
                }
                if on_path.contains(&test) {
                    return Err(format!("parent position {test} tested twice on one path"));
                }
                if children.len() != cards[test] {
                    return Err(format!(
                        "split on parent position {test} has {} children, expected {}",
                        children.len(),
                        cards[test]
                    ));
                }
                on_path.push(test);
                for child in children {
                    child.validate(cards, on_path)?;
                }
                on_path.pop();
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum FlatNode {
    Leaf(usize),
    Split { test: usize, first_child: usize },
}

/// A decision tree over a family's parents, with a flattened copy for fast lookups.
///
/// Leaves are numbered in pre-order, children visited in value order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecisionTree {
    root: TreeNode,
    flat: Vec<FlatNode>,
    leaves: usize,
}

impl DecisionTree {
    pub fn new(root: TreeNode) -> Self {
        let mut flat = vec![FlatNode::Leaf(0)];
        let mut leaves = 0;
        // breadth-first layout so that siblings are contiguous
        let mut queue = std::collections::VecDeque::from([(&root, 0usize)]);
        let mut leaf_ids = Vec::new();
        while let Some((node, pos)) = queue.pop_front() {
            match node {
                TreeNode::Leaf => {
                    leaf_ids.push(pos);
                }
                TreeNode::Split { test, children } => {
                    let first_child = flat.len();
                    flat[pos] = FlatNode::Split { test: *test, first_child };
                    for (k, child) in children.iter().enumerate() {
                        flat.push(FlatNode::Leaf(0));
                        queue.push_back((child, first_child + k));
                    }
                }
            }
        }
        // number leaves in pre-order
        fn assign(node: &TreeNode, pos: usize, flat: &mut [FlatNode], next: &mut usize) {
            match (node, flat[pos]) {
                (TreeNode::Leaf, _) => {
                    flat[pos] = FlatNode::Leaf(*next);
                    *next += 1;
                }
                (TreeNode::Split { children, .. }, FlatNode::Split { first_child, .. }) => {
                    for (k, child) in children.iter().enumerate() {
                        assign(child, first_child + k, flat, next);
                    }
                }
                _ => unreachable!("flat layout mirrors the tree"),
            }
        }
        assign(&root, 0, &mut flat, &mut leaves);
        debug_assert_eq!(leaves, leaf_ids.len());
        DecisionTree { root, flat, leaves }
    }

    pub fn leaf() -> Self {
        Self::new(TreeNode::Leaf)
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn into_root(self) -> TreeNode {
        self.root
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves
    }

    pub fn leaf_of(&self, value: impl Fn(usize) -> usize) -> usize {
        let mut pos = 0;
        loop {
            match self.flat[pos] {
                FlatNode::Leaf(id) => return id,
                FlatNode::Split { test, first_child } => pos = first_child + value(test),
            }
        }
    }
}

/// The three CPT representations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LocalStructure {
    /// One partition cell per parent configuration.
    FullTable,
    /// Explicit rows (sorted configuration indices); every other configuration maps to the
    /// default row, which is the last partition cell.
    DefaultTable { rows: Vec<usize> },
    DecisionTree(DecisionTree),
}

/// Representation family, used to select a learner or name a structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Representation {
    Table,
    Default,
    Tree,
}

impl Representation {
    pub const ALL: [Representation; 3] =
        [Representation::Table, Representation::Tree, Representation::Default];

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Table => "table",
            Representation::Default => "default",
            Representation::Tree => "tree",
        }
    }

    /// Short label used in experiment tables.
    pub fn short(self) -> &'static str {
        match self {
            Representation::Table => "tab",
            Representation::Default => "def",
            Representation::Tree => "tree",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" | "tab" => Ok(Representation::Table),
            "default" | "def" => Ok(Representation::Default),
            "tree" => Ok(Representation::Tree),
            other => Err(Error::Config(format!(
                "unknown representation `{other}` (expected table, default or tree)"
            ))),
        }
    }
}

impl LocalStructure {
    pub fn default_table(mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        LocalStructure::DefaultTable { rows }
    }

    pub fn tree(root: TreeNode) -> Self {
        LocalStructure::DecisionTree(DecisionTree::new(root))
    }

    pub fn representation(&self) -> Representation {
        match self {
            LocalStructure::FullTable => Representation::Table,
            LocalStructure::DefaultTable { .. } => Representation::Default,
            LocalStructure::DecisionTree(_) => Representation::Tree,
        }
    }

    pub fn num_partitions(&self, space: &ParentSpace) -> usize {
        match self {
            LocalStructure::FullTable => space.size(),
            LocalStructure::DefaultTable { rows } => rows.len() + 1,
            LocalStructure::DecisionTree(t) => t.num_leaves(),
        }
    }

    pub fn partition_of(&self, space: &ParentSpace, config: &[usize]) -> PartitionId {
        self.partition_with(space, |j| config[j])
    }

    /// Partition lookup with parent values supplied by position.
    pub fn partition_with(&self, space: &ParentSpace, value: impl Fn(usize) -> usize) -> PartitionId {
        match self {
            LocalStructure::FullTable => PartitionId(space.index_with(value)),
            LocalStructure::DefaultTable { rows } => {
                let idx = space.index_with(value);
                PartitionId(rows.binary_search(&idx).unwrap_or(rows.len()))
            }
            LocalStructure::DecisionTree(t) => PartitionId(t.leaf_of(value)),
        }
    }

    /// The parent configuration indices in each partition cell.
    pub fn partition_members(&self, space: &ParentSpace) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.num_partitions(space)];
        let mut config = vec![0; space.num_parents()];
        for idx in 0..space.size() {
            cells[self.partition_of(space, &config).0].push(idx);
            increment(&mut config, space.cards());
        }
        cells
    }

    /// Independent parameters: (#cells)(||X|| - 1).
    pub fn param_count(&self, space: &ParentSpace, child_card: usize) -> usize {
        self.num_partitions(space) * (child_card - 1)
    }

    pub fn validate(&self, space: &ParentSpace) -> std::result::Result<(), String> {
        match self {
            LocalStructure::FullTable => Ok(()),
            LocalStructure::DefaultTable { rows } => {
                if rows.windows(2).any(|w| w[0] >= w[1]) {
                    return Err("default-table rows must be distinct and sorted".into());
                }
                if rows.last().is_some_and(|&r| r >= space.size()) {
                    return Err("default-table row refers to a nonexistent configuration".into());
                }
                if rows.len() >= space.size() {
                    return Err(
                        "default table lists every configuration; use a full table instead".into()
                    );
                }
                Ok(())
            }
            LocalStructure::DecisionTree(t) => t.root().validate(space.cards(), &mut Vec::new()),
        }
    }
}

/// Odometer step over a mixed-radix configuration, last position fastest.
/// Returns `false` once the odometer wraps around.
pub fn increment(config: &mut [usize], cards: &[usize]) -> bool {
    for j in (0..config.len()).rev() {
        config[j] += 1;
        if config[j] < cards[j] {
            return true;
        }
        config[j] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::alarm_sound_tree;

    #[test]
    fn parent_space_indexing() {
        let s = ParentSpace::new(vec![2, 3]).unwrap();
        assert_eq!(s.size(), 6);
        assert_eq!(s.index(&[1, 2]), 5);
        assert_eq!(s.index(&[0, 1]), 1);
        assert_eq!(s.decode(4), vec![1, 1]);
        assert_eq!(ParentSpace::new(vec![]).unwrap().size(), 1);
        assert!(ParentSpace::new(vec![usize::MAX, 2]).is_err());
    }

    #[test]
    fn tree_partitions_follow_edges() {
        let s = ParentSpace::new(vec![2, 2, 2]).unwrap();
        let ls = LocalStructure::tree(alarm_sound_tree());
        assert_eq!(ls.num_partitions(&s), 4);
        // pre-order leaves: A=0 | A=1,B=0,E=0 | A=1,B=0,E=1 | A=1,B=1
        assert_eq!(ls.partition_of(&s, &[1, 0, 1]), PartitionId(2));
        assert_eq!(ls.partition_of(&s, &[0, 1, 1]), PartitionId(0));
        assert_eq!(ls.partition_of(&s, &[1, 1, 0]), PartitionId(3));
        let cells = ls.partition_members(&s);
        assert_eq!(cells[0], vec![0, 1, 2, 3]);
        assert_eq!(cells[3], vec![6, 7]);
    }

    #[test]
    fn default_table_maps_unlisted_rows_to_default() {
        let s = ParentSpace::new(vec![2, 2, 2]).unwrap();
        let ls = LocalStructure::default_table(vec![7, 4, 5, 6]);
        assert_eq!(ls.partition_of(&s, &[0, 1, 1]), PartitionId(4));
        assert_eq!(ls.partition_of(&s, &[1, 0, 1]), PartitionId(1));
        assert_eq!(ls.param_count(&s, 2), 5);
    }

    #[test]
    fn validation() {
        let s = ParentSpace::new(vec![2, 3]).unwrap();
        assert!(LocalStructure::default_table((0..6).collect()).validate(&s).is_err());
        assert!(LocalStructure::default_table((0..5).collect()).validate(&s).is_ok());
        assert!(LocalStructure::default_table(vec![9]).validate(&s).is_err());
        let repeated = TreeNode::split(0, vec![TreeNode::split_leaves(0, 2), TreeNode::Leaf]);
        assert!(LocalStructure::tree(repeated).validate(&s).is_err());
        assert!(LocalStructure::tree(TreeNode::split_leaves(1, 2)).validate(&s).is_err());
        assert!(LocalStructure::tree(TreeNode::split_leaves(1, 3)).validate(&s).is_ok());
    }

    #[test]
    fn param_counts_of_the_three_forms() {
        let s = ParentSpace::new(vec![2, 2, 2]).unwrap();
        assert_eq!(LocalStructure::FullTable.param_count(&s, 2), 8);
        assert_eq!(LocalStructure::default_table(vec![4, 5, 6, 7]).param_count(&s, 2), 5);
        assert_eq!(LocalStructure::tree(alarm_sound_tree()).param_count(&s, 2), 4);
    }
}
