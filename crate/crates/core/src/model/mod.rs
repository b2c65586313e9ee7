//! Variables, graphs, CPT representations and network semantics.

mod dag;
pub mod format;
mod local;
mod network;
mod variables;

pub use dag::{topological_order, Dag};
pub use local::{
    increment, DecisionTree, LocalStructure, ParentSpace, PartitionId, Representation, TreeNode,
};
pub use network::{tabular_complexity, BayesianNetwork, Cpd, SIMPLEX_TOLERANCE};
pub use variables::{Variable, VariableTable};
