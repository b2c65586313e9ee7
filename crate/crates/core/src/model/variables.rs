use std::collections::HashMap;

use crate::error::{Error, Result};

/// A discrete variable with an ordered list of value names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, values: impl IntoIterator<Item = S>) -> Self {
        Variable { name: name.into(), values: values.into_iter().map(Into::into).collect() }
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Identifiers and value names are restricted so that CSV files never need quoting.
pub(crate) fn is_plain_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// The ordered variable set of a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableTable {
    vars: Vec<Variable>,
    index: HashMap<String, usize>,
}

impl VariableTable {
    pub fn new(vars: Vec<Variable>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vars.len());
        for (i, var) in vars.iter().enumerate() {
            if !is_plain_identifier(&var.name) {
                return Err(Error::InvalidVariables(format!(
                    "variable name `{}` must match [A-Za-z0-9_-]+",
                    var.name
                )));
            }
            if index.insert(var.name.clone(), i).is_some() {
                return Err(Error::InvalidVariables(format!("duplicate variable `{}`", var.name)));
            }
            if var.values.len() < 2 {
                return Err(Error::InvalidVariables(format!(
                    "variable `{}` needs at least two values",
                    var.name
                )));
            }
            if var.values.len() > u16::MAX as usize {
                return Err(Error::InvalidVariables(format!(
                    "variable `{}` has too many values",
                    var.name
                )));
            }
            for (j, value) in var.values.iter().enumerate() {
                if !is_plain_identifier(value) {
                    return Err(Error::InvalidVariables(format!(
                        "value `{value}` of `{}` must match [A-Za-z0-9_-]+",
                        var.name
                    )));
                }
                if var.values[..j].contains(value) {
                    return Err(Error::InvalidVariables(format!(
                        "duplicate value `{value}` in `{}`",
                        var.name
                    )));
                }
            }
        }
        Ok(VariableTable { vars, index })
    }

    /// Variables named `X0, X1, ...` with values `0..card`.
    pub fn with_cardinalities(cards: &[usize]) -> Result<Self> {
        let vars = cards
            .iter()
            .enumerate()
            .map(|(i, &c)| Variable {
                name: format!("X{i}"),
                values: (0..c).map(|v| v.to_string()).collect(),
            })
            .collect();
        Self::new(vars)
    }

    pub fn binary(n: usize) -> Self {
        Self::with_cardinalities(&vec![2; n]).expect("binary table is always valid")
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, i: usize) -> &Variable {
        &self.vars[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Variable> {
        self.vars.iter()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.vars[i].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.vars.iter().map(Variable::cardinality).collect()
    }

    /// log2 of the number of joint states.
    pub fn log2_state_space(&self) -> f64 {
        self.vars.iter().map(|v| (v.cardinality() as f64).log2()).sum()
    }
}

impl<'a> IntoIterator for &'a VariableTable {
    type Item = &'a Variable;
    type IntoIter = std::slice::Iter<'a, Variable>;

    fn into_iter(self) -> Self::IntoIter {
        self.vars.iter()
    }
}
