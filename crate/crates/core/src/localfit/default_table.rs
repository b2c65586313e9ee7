use std::collections::BTreeMap;

use crate::data::{Dataset, FamilyCounts};
use crate::error::Result;
use crate::localfit::{fit_params, parent_space, FittedFamily, IMPROVEMENT_EPS};
use crate::mdl::{cell_data_bits, cell_param_bits, log2_binomial, score_counts};
use crate::model::LocalStructure;

/// Greedy default-table learner.
///
/// Starts from the table holding only the default row and repeatedly promotes the observed
/// parent configuration whose explicit row lowers the family description length the most,
/// until no promotion helps. Ties go to the smallest configuration index.
pub fn learn_default_table(ds: &Dataset, child: usize, parents: &[usize]) -> Result<FittedFamily> {
    let space = parent_space(ds, parents)?;
    let card = ds.vars().cardinality(child);
    let configs = space.size();
    let n = ds.len() as u64;

    let child_col = ds.column(child);
    let parent_cols: Vec<&[u16]> = parents.iter().map(|&p| ds.column(p)).collect();
    let mut observed: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    let mut default = vec![0u64; card];
    for r in 0..ds.len() {
        let idx = space.index_with(|j| parent_cols[j][r] as usize);
        observed.entry(idx).or_insert_with(|| vec![0; card])[child_col[r] as usize] += 1;
        default[child_col[r] as usize] += 1;
    }
    let mut candidates: Vec<(usize, Vec<u64>, f64)> = observed
        .into_iter()
        .map(|(idx, c)| {
            let bits = cell_data_bits(&c);
            (idx, c, bits)
        })
        .collect();

    let row_cost = cell_param_bits(card, n);
    let mut explicit = Vec::new();
    let mut default_bits = cell_data_bits(&default);
    let mut scratch = vec![0u64; card];
    while explicit.len() + 1 < configs {
        let k = explicit.len();
        let structure_delta = log2_binomial(configs, k + 1) - log2_binomial(configs, k);
        let mut best: Option<(usize, f64)> = None;
        for (pos, (_, cell, bits)) in candidates.iter().enumerate() {
            for ((s, d), c) in scratch.iter_mut().zip(&default).zip(cell) {
                *s = d - c;
            }
            let delta = structure_delta + row_cost + bits + cell_data_bits(&scratch) - default_bits;
            if best.is_none_or(|(_, b)| delta < b) {
                best = Some((pos, delta));
            }
        }
        match best {
            Some((pos, delta)) if delta < -IMPROVEMENT_EPS => {
                let (idx, cell, _) = candidates.remove(pos);
                for (d, c) in default.iter_mut().zip(&cell) {
                    *d -= c;
                }
                default_bits = cell_data_bits(&default);
                explicit.push((idx, cell));
            }
            _ => break,
        }
    }

    explicit.sort_by_key(|(idx, _)| *idx);
    let rows: Vec<usize> = explicit.iter().map(|(idx, _)| *idx).collect();
    let k = rows.len();
    let cells = explicit.into_iter().map(|(_, c)| c).chain(std::iter::once(default)).enumerate();
    let counts = FamilyCounts::from_cells(card, k + 1, cells);
    let structure = LocalStructure::DefaultTable { rows };
    let score = score_counts(&structure, &space, &counts);
    Ok(FittedFamily { params: fit_params(&counts), structure, score })
}
