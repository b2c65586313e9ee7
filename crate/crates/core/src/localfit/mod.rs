//! Maximum-likelihood parameters and local-structure learners.

mod default_table;
mod tree;

pub use default_table::learn_default_table;
pub use tree::{grow_tree, trim_tree};

use crate::data::{family_counts_in, Dataset, FamilyCounts};
use crate::error::{Error, Result};
use crate::mdl::{score_counts, FamilyScore};
use crate::model::{Cpd, LocalStructure, ParentSpace, PartitionId, Representation};

/// A step must lower the description length by more than this many bits to be taken.
pub const IMPROVEMENT_EPS: f64 = 1e-9;

/// A family's local structure with maximum-likelihood parameters and its MDL score.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFamily {
    pub structure: LocalStructure,
    pub params: Vec<Vec<f64>>,
    pub score: FamilyScore,
}

impl FittedFamily {
    pub fn into_cpd(self) -> Cpd {
        Cpd::new(self.structure, self.params)
    }

    pub fn to_cpd(&self) -> Cpd {
        Cpd::new(self.structure.clone(), self.params.clone())
    }
}

/// Per-cell empirical frequencies; cells without data get the uniform vector.
pub fn fit_params(counts: &FamilyCounts) -> Vec<Vec<f64>> {
    let card = counts.child_card();
    (0..counts.num_partitions())
        .map(|p| match counts.cell(PartitionId(p)) {
            Some(cell) => {
                let n: u64 = cell.iter().sum();
                cell.iter().map(|&c| c as f64 / n as f64).collect()
            }
            None => vec![1.0 / card as f64; card],
        })
        .collect()
}

pub(crate) fn parent_space(ds: &Dataset, parents: &[usize]) -> Result<ParentSpace> {
    ParentSpace::new(parents.iter().map(|&p| ds.vars().cardinality(p)).collect())
}

/// Fits parameters for a fixed structure and scores the family.
pub fn fit_structure(
    ds: &Dataset,
    child: usize,
    parents: &[usize],
    structure: LocalStructure,
) -> Result<FittedFamily> {
    let space = parent_space(ds, parents)?;
    structure
        .validate(&space)
        .map_err(|reason| Error::InvalidStructure { node: ds.vars().name(child).to_string(), reason })?;
    let counts = family_counts_in(ds, child, parents, &space, &structure, 0..ds.len());
    let score = score_counts(&structure, &space, &counts);
    Ok(FittedFamily { params: fit_params(&counts), structure, score })
}

/// Learns the family's local structure in the requested representation.
///
/// Families without parents always get a one-cell full table.
pub fn learn_local(ds: &Dataset, child: usize, parents: &[usize], rep: Representation) -> Result<FittedFamily> {
    if parents.is_empty() {
        return fit_structure(ds, child, parents, LocalStructure::FullTable);
    }
    match rep {
        Representation::Table => fit_structure(ds, child, parents, LocalStructure::FullTable),
        Representation::Default => learn_default_table(ds, child, parents),
        Representation::Tree => {
            let grown = grow_tree(ds, child, parents)?;
            let trimmed = trim_tree(&grown, ds, child, parents)?;
            fit_structure(ds, child, parents, LocalStructure::tree(trimmed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ancestral_sample;
    use crate::fixtures;
    use crate::mdl::dl_table_params;

    #[test]
    fn frequencies_and_uniform_empty_cells() {
        let counts = FamilyCounts::from_cells(2, 3, [(0, vec![30, 70]), (2, vec![0, 4])]);
        let p = fit_params(&counts);
        assert_eq!(p, vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.0, 1.0]]);
    }

    #[test]
    fn table_mode_has_no_structure_bits() {
        let net = fixtures::alarm_sound_network(Representation::Table);
        let ds = ancestral_sample(&net, 2000, 3);
        let f = learn_local(&ds, 3, &[0, 1, 2], Representation::Table).unwrap();
        assert_eq!(f.score.structure, 0.0);
        assert_eq!(f.score.params, dl_table_params(2, 8, 2000));
    }

    #[test]
    fn parentless_family_is_the_same_in_every_mode() {
        let net = fixtures::alarm_sound_network(Representation::Table);
        let ds = ancestral_sample(&net, 1000, 4);
        let totals: Vec<f64> = Representation::ALL
            .iter()
            .map(|&rep| learn_local(&ds, 0, &[], rep).unwrap().score.total)
            .collect();
        assert!(totals.windows(2).all(|w| w[0] == w[1]), "{totals:?}");
    }

    #[test]
    fn local_modes_beat_the_table_on_alarm_sound_data() {
        let net = fixtures::alarm_sound_network(Representation::Tree);
        let mut wins = 0;
        for seed in 0..10 {
            let ds = ancestral_sample(&net, 16_000, seed);
            let tab = learn_local(&ds, 3, &[0, 1, 2], Representation::Table).unwrap().score.total;
            let def = learn_local(&ds, 3, &[0, 1, 2], Representation::Default).unwrap().score.total;
            let tree = learn_local(&ds, 3, &[0, 1, 2], Representation::Tree).unwrap().score.total;
            if def <= tab && tree <= tab {
                wins += 1;
            }
        }
        assert!(wins >= 9, "{wins}/10");
    }
}
