use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::Result;
use crate::model::{LocalStructure, ParentSpace, PartitionId};

/// Per-partition child-value counts for one family.
///
/// Only occupied cells are stored; every other cell reads as a zero vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCounts {
    child_card: usize,
    num_partitions: usize,
    cells: BTreeMap<usize, Vec<u64>>,
    total: u64,
}

impl FamilyCounts {
    pub fn from_cells(
        child_card: usize,
        num_partitions: usize,
        cells: impl IntoIterator<Item = (usize, Vec<u64>)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        let mut total = 0;
        for (p, counts) in cells {
            assert!(p < num_partitions, "cell {p} out of range");
            assert_eq!(counts.len(), child_card);
            let n: u64 = counts.iter().sum();
            if n > 0 {
                total += n;
                let slot = map.entry(p).or_insert_with(|| vec![0; child_card]);
                for (s, c) in slot.iter_mut().zip(counts) {
                    *s += c;
                }
            }
        }
        FamilyCounts { child_card, num_partitions, cells: map, total }
    }

    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn num_partitions(&self) -> usize {
        self.num_partitions
    }

    /// `N`, the number of counted rows.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cell(&self, p: PartitionId) -> Option<&[u64]> {
        self.cells.get(&p.0).map(Vec::as_slice)
    }

    pub fn counts(&self, p: PartitionId) -> Vec<u64> {
        self.cell(p).map_or_else(|| vec![0; self.child_card], <[u64]>::to_vec)
    }

    pub fn occupancy(&self, p: PartitionId) -> u64 {
        self.cell(p).map_or(0, |c| c.iter().sum())
    }

    /// Occupied cells in increasing partition order.
    pub fn nonempty(&self) -> impl Iterator<Item = (PartitionId, &[u64])> {
        self.cells.iter().map(|(&p, c)| (PartitionId(p), c.as_slice()))
    }
}

const DENSE_LIMIT: usize = 1 << 16;

/// Counts of `child` per partition cell of `ls` over `parents`.
pub fn family_counts(
    ds: &Dataset,
    child: usize,
    parents: &[usize],
    ls: &LocalStructure,
) -> Result<FamilyCounts> {
    let vars = ds.vars();
    let space = ParentSpace::new(parents.iter().map(|&p| vars.cardinality(p)).collect())?;
    Ok(family_counts_in(ds, child, parents, &space, ls, 0..ds.len()))
}

pub(crate) fn family_counts_in(
    ds: &Dataset,
    child: usize,
    parents: &[usize],
    space: &ParentSpace,
    ls: &LocalStructure,
    rows: impl IntoIterator<Item = usize>,
) -> FamilyCounts {
    let card = ds.vars().cardinality(child);
    let cells = ls.num_partitions(space);
    let child_col = ds.column(child);
    let parent_cols: Vec<&[u16]> = parents.iter().map(|&p| ds.column(p)).collect();
    let cell_of = |r: usize| ls.partition_with(space, |j| parent_cols[j][r] as usize).0;
    let mut total = 0;
    let map = if cells <= DENSE_LIMIT {
        let mut dense = vec![0u64; cells * card];
        for r in rows {
            dense[cell_of(r) * card + child_col[r] as usize] += 1;
            total += 1;
        }
        dense
            .chunks(card)
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&x| x > 0))
            .map(|(p, c)| (p, c.to_vec()))
            .collect()
    } else {
        let mut map: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for r in rows {
            map.entry(cell_of(r)).or_insert_with(|| vec![0; card])[child_col[r] as usize] += 1;
            total += 1;
        }
        map
    };
    FamilyCounts { child_card: card, num_partitions: cells, cells: map, total }
}
