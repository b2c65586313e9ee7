use crate::error::{Error, Result};
use crate::model::VariableTable;

/// `N` complete instances over a variable table, stored column-major as value indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    vars: VariableTable,
    columns: Vec<Vec<u16>>,
    rows: usize,
}

impl Dataset {
    pub fn empty(vars: VariableTable) -> Self {
        let columns = vec![Vec::new(); vars.len()];
        Dataset { vars, columns, rows: 0 }
    }

    pub fn from_rows(vars: VariableTable, rows: &[Vec<usize>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); vars.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != vars.len() {
                return Err(Error::MalformedRow {
                    row: r + 1,
                    reason: format!("{} values for {} variables", row.len(), vars.len()),
                });
            }
            for (i, &v) in row.iter().enumerate() {
                if v >= vars.cardinality(i) {
                    return Err(Error::UnknownValue { row: r + 1, col: i + 1, value: v.to_string() });
                }
                columns[i].push(v as u16);
            }
        }
        Ok(Dataset { vars, columns, rows: rows.len() })
    }

    pub(crate) fn from_columns_unchecked(vars: VariableTable, columns: Vec<Vec<u16>>, rows: usize) -> Self {
        debug_assert!(columns.iter().all(|c| c.len() == rows));
        Dataset { vars, columns, rows }
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn column(&self, var: usize) -> &[u16] {
        &self.columns[var]
    }

    pub fn value(&self, row: usize, var: usize) -> usize {
        self.columns[var][row] as usize
    }

    pub fn row(&self, row: usize) -> Vec<usize> {
        self.columns.iter().map(|c| c[row] as usize).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.rows).map(|r| self.row(r))
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.rows);
        Dataset {
            vars: self.vars.clone(),
            columns: self.columns.iter().map(|c| c[..n].to_vec()).collect(),
            rows: n,
        }
    }

    /// Fraction of rows consistent with a partial assignment `(variable, value)`.
    pub fn empirical_prob(&self, event: &[(usize, usize)]) -> Result<f64> {
        if self.rows == 0 {
            return Err(Error::EmptyDataset);
        }
        let hits = (0..self.rows)
            .filter(|&r| event.iter().all(|&(var, val)| self.value(r, var) == val))
            .count();
        Ok(hits as f64 / self.rows as f64)
    }
}
