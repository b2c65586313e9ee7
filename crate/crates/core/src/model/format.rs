//! JSON network documents.
//!
//! ```json
//! {"variables": [{"name": "A", "values": ["0", "1"]}],
//!  "nodes": [{"name": "A", "parents": [], "cpt": {"type": "table", "rows": [{"config": [], "dist": [0.5, 0.5]}]}}]}
//! ```
//!
//! `cpt` is a full `table`, a `default` table (`rows` plus `default_dist`) or a `tree`
//! whose nodes are `{"leaf": [..]}` or `{"test": parent, "children": {value: node}}`.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BayesianNetwork, Cpd, Dag, LocalStructure, ParentSpace, TreeNode, Variable, VariableTable, SIMPLEX_TOLERANCE,
};

/// Largest deviation of a probability vector's sum from 1 that is silently renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    variables: Vec<VariableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<NodeDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    values: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    name: String,
    parents: Vec<String>,
    cpt: CptDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum CptDoc {
    Table { rows: Vec<RowDoc> },
    Default { rows: Vec<RowDoc>, default_dist: Vec<f64> },
    Tree { root: TreeDoc },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    config: Vec<String>,
    dist: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TreeDoc {
    Leaf { leaf: Vec<f64> },
    Test { test: String, children: IndexMap<String, TreeDoc> },
}

pub fn read_network(path: impl AsRef<Path>) -> Result<BayesianNetwork> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    network_from_str(&text)
}

pub fn write_network(net: &BayesianNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, network_to_string(net)).map_err(|e| Error::io(path, e))
}

/// Reads only the `variables` section of a network or schema document.
pub fn read_schema(path: impl AsRef<Path>) -> Result<VariableTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    schema_from_str(&text)
}

pub fn schema_from_str(text: &str) -> Result<VariableTable> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    variables_from_doc(&doc.variables)
}

fn variables_from_doc(vars: &[VariableDoc]) -> Result<VariableTable> {
    VariableTable::new(
        vars.iter().map(|v| Variable { name: v.name.clone(), values: v.values.clone() }).collect(),
    )
}

pub fn network_from_str(text: &str) -> Result<BayesianNetwork> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let vars = variables_from_doc(&doc.variables)?;
    let nodes = doc.nodes.unwrap_or_default();

    let mut slots: Vec<Option<&NodeDoc>> = vec![None; vars.len()];
    for node in &nodes {
        let i = vars
            .index_of(&node.name)
            .ok_or_else(|| Error::Format(format!("node `{}` is not a declared variable", node.name)))?;
        if slots[i].replace(node).is_some() {
            return Err(Error::Format(format!("node `{}` defined twice", node.name)));
        }
    }

    let mut parent_lists = Vec::with_capacity(vars.len());
    for (i, slot) in slots.iter().enumerate() {
        let node = slot.ok_or_else(|| Error::Format(format!("node `{}` has no CPT", vars.name(i))))?;
        let parents = node
            .parents
            .iter()
            .map(|p| {
                vars.index_of(p)
                    .ok_or_else(|| Error::Format(format!("node `{}`: unknown parent `{p}`", node.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        parent_lists.push(parents);
    }
    let dag = Dag::new(parent_lists).map_err(|e| match e {
        Error::CyclicGraph => Error::Format("parent lists contain a directed cycle".into()),
        other => Error::Format(other.to_string()),
    })?;

    let mut cpds = Vec::with_capacity(vars.len());
    for (i, slot) in slots.iter().enumerate() {
        let node = slot.expect("checked above");
        let parents = dag.parents(i);
        let space = ParentSpace::new(parents.iter().map(|&p| vars.cardinality(p)).collect())?;
        let ctx = NodeContext { vars: &vars, child: i, parents, space: &space, name: &node.name };
        cpds.push(ctx.cpd(&node.cpt)?);
    }
    BayesianNetwork::new(vars, dag, cpds)
}

struct NodeContext<'a> {
    vars: &'a VariableTable,
    child: usize,
    parents: &'a [usize],
    space: &'a ParentSpace,
    name: &'a str,
}

impl NodeContext<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Format(format!("node `{}`: {}", self.name, reason.into()))
    }

    fn dist(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let card = self.vars.cardinality(self.child);
        if raw.len() != card {
            return Err(self.err(format!("distribution has {} entries, expected {card}", raw.len())));
        }
        if raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(self.err(format!("distribution {raw:?} has a negative or non-finite entry")));
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(self.err(format!("distribution {raw:?} sums to {sum}")));
        }
        if (sum - 1.0).abs() <= SIMPLEX_TOLERANCE {
            // already a distribution up to rounding; keep the written values exactly
            return Ok(raw.to_vec());
        }
        Ok(raw.iter().map(|p| p / sum).collect())
    }

    fn config(&self, names: &[String]) -> Result<usize> {
        if names.len() != self.parents.len() {
            return Err(self.err(format!(
                "configuration {names:?} has {} values for {} parents",
                names.len(),
                self.parents.len()
            )));
        }
        let values = names
            .iter()
            .zip(self.parents)
            .map(|(name, &p)| {
                self.vars.get(p).value_index(name).ok_or_else(|| {
                    self.err(format!("unknown value `{name}` for parent `{}`", self.vars.name(p)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.space.index(&values))
    }

    fn cpd(&self, doc: &CptDoc) -> Result<Cpd> {
        match doc {
            CptDoc::Table { rows } => {
                let mut params = vec![None; self.space.size()];
                for row in rows {
                    let idx = self.config(&row.config)?;
                    if params[idx].replace(self.dist(&row.dist)?).is_some() {
                        return Err(self.err(format!("configuration {:?} listed twice", row.config)));
                    }
                }
                let params = params
                    .into_iter()
                    .enumerate()
                    .map(|(idx, p)| {
                        p.ok_or_else(|| self.err(format!("table misses configuration {}", self.describe(idx))))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Cpd::table(params))
            }
            CptDoc::Default { rows, default_dist } => {
                let mut explicit = Vec::with_capacity(rows.len());
                for row in rows {
                    explicit.push((self.config(&row.config)?, self.dist(&row.dist)?));
                }
                explicit.sort_by_key(|(idx, _)| *idx);
                if explicit.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(self.err("default table lists a configuration twice"));
                }
                if explicit.len() >= self.space.size() {
                    return Err(self.err("default table lists every configuration; use a full table"));
                }
                let structure = LocalStructure::default_table(explicit.iter().map(|(i, _)| *i).collect());
                let mut params: Vec<_> = explicit.into_iter().map(|(_, d)| d).collect();
                params.push(self.dist(default_dist)?);
                Ok(Cpd::new(structure, params))
            }
            CptDoc::Tree { root } => {
                let mut params = Vec::new();
                let root = self.tree(root, &mut params)?;
                let structure = LocalStructure::tree(root);
                structure.validate(self.space).map_err(|r| self.err(r))?;
                Ok(Cpd::new(structure, params))
            }
        }
    }

    fn tree(&self, doc: &TreeDoc, params: &mut Vec<Vec<f64>>) -> Result<TreeNode> {
        match doc {
            TreeDoc::Leaf { leaf } => {
                params.push(self.dist(leaf)?);
                Ok(TreeNode::Leaf)
            }
            TreeDoc::Test { test, children } => {
                let var = self.vars.index_of(test).ok_or_else(|| self.err(format!("unknown test `{test}`")))?;
                let pos = self
                    .parents
                    .iter()
                    .position(|&p| p == var)
                    .ok_or_else(|| self.err(format!("tree tests `{test}`, which is not a parent")))?;
                let values = &self.vars.get(var).values;
                if children.len() != values.len() || values.iter().any(|v| !children.contains_key(v)) {
                    return Err(self.err(format!("test on `{test}` must have one child per value {values:?}")));
                }
                let kids = values
                    .iter()
                    .map(|v| self.tree(&children[v], params))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TreeNode::split(pos, kids))
            }
        }
    }

    fn describe(&self, idx: usize) -> String {
        let values = self.space.decode(idx);
        let names: Vec<_> = values
            .iter()
            .zip(self.parents)
            .map(|(&v, &p)| self.vars.get(p).values[v].as_str())
            .collect();
        format!("{names:?}")
    }
}

pub fn network_to_string(net: &BayesianNetwork) -> String {
    let vars = net.vars();
    let variables =
        vars.iter().map(|v| VariableDoc { name: v.name.clone(), values: v.values.clone() }).collect();
    let nodes = (0..net.len())
        .map(|i| {
            let parents = net.dag().parents(i);
            let space = net.parent_space(i);
            let config_names = |idx: usize| -> Vec<String> {
                space
                    .decode(idx)
                    .iter()
                    .zip(parents)
                    .map(|(&v, &p)| vars.get(p).values[v].clone())
                    .collect()
            };
            let cpd = net.cpd(i);
            let cpt = match &cpd.structure {
                LocalStructure::FullTable => CptDoc::Table {
                    rows: cpd
                        .params
                        .iter()
                        .enumerate()
                        .map(|(idx, d)| RowDoc { config: config_names(idx), dist: d.clone() })
                        .collect(),
                },
                LocalStructure::DefaultTable { rows } => CptDoc::Default {
                    rows: rows
                        .iter()
                        .zip(&cpd.params)
                        .map(|(&idx, d)| RowDoc { config: config_names(idx), dist: d.clone() })
                        .collect(),
                    default_dist: cpd.params[rows.len()].clone(),
                },
                LocalStructure::DecisionTree(tree) => {
                    let mut leaves = cpd.params.iter();
                    CptDoc::Tree { root: tree_doc(tree.root(), parents, vars, &mut leaves) }
                }
            };
            NodeDoc {
                name: vars.name(i).to_string(),
                parents: parents.iter().map(|&p| vars.name(p).to_string()).collect(),
                cpt,
            }
        })
        .collect();
    let doc = NetworkDoc { variables, nodes: Some(nodes) };
    let mut text = serde_json::to_string_pretty(&doc).expect("network documents always serialize");
    text.push('\n');
    text
}

fn tree_doc<'a>(
    node: &TreeNode,
    parents: &[usize],
    vars: &VariableTable,
    leaves: &mut impl Iterator<Item = &'a Vec<f64>>,
) -> TreeDoc {
    match node {
        TreeNode::Leaf => TreeDoc::Leaf { leaf: leaves.next().expect("one vector per leaf").clone() },
        TreeNode::Split { test, children } => {
            let var = vars.get(parents[*test]);
            TreeDoc::Test {
                test: var.name.clone(),
                children: var
                    .values
                    .iter()
                    .zip(children)
                    .map(|(v, c)| (v.clone(), tree_doc(c, parents, vars, leaves)))
                    .collect(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Representation;

    #[test]
    fn round_trips_all_three_forms() {
        for rep in Representation::ALL {
            let net = fixtures::alarm_sound_network(rep);
            let text = network_to_string(&net);
            let back = network_from_str(&text).unwrap();
            assert_eq!(back, net, "{rep}");
            assert_eq!(network_to_string(&back), text);
        }
    }

    #[test]
    fn tree_document_shape() {
        let text = network_to_string(&fixtures::alarm_sound_network(Representation::Tree));
        assert!(text.contains("\"type\": \"tree\""));
        assert!(text.contains("\"test\": \"A\""));
    }

    const COIN: &str = r#"{"variables":[{"name":"C","values":["h","t"]}],
        "nodes":[{"name":"C","parents":[],"cpt":{"type":"table","rows":[{"config":[],"dist":DIST}]}}]}"#;

    #[test]
    fn renormalizes_small_deviations_only() {
        let net = network_from_str(&COIN.replace("DIST", "[0.3, 0.7000005]")).unwrap();
        let d = net.conditional_dist(0, &[]);
        assert!((d[0] + d[1] - 1.0).abs() < 1e-15);
        let err = network_from_str(&COIN.replace("DIST", "[0.3, 0.71]")).unwrap_err();
        assert!(err.to_string().contains("node `C`"), "{err}");
        assert!(network_from_str(&COIN.replace("DIST", "[-0.1, 1.1]")).is_err());
    }

    #[test]
    fn errors_name_the_offending_node() {
        let text = r#"{"variables":[{"name":"A","values":["0","1"]},{"name":"B","values":["0","1"]}],
          "nodes":[{"name":"A","parents":[],"cpt":{"type":"table","rows":[{"config":[],"dist":[0.5,0.5]}]}},
                   {"name":"B","parents":["A"],"cpt":{"type":"table","rows":[{"config":["0"],"dist":[0.5,0.5]}]}}]}"#;
        let err = network_from_str(text).unwrap_err().to_string();
        assert!(err.contains("node `B`") && err.contains("misses"), "{err}");
        let syntax = network_from_str("{\"variables\": [").unwrap_err().to_string();
        assert!(syntax.contains("line"), "{syntax}");
    }

    #[test]
    fn rejects_full_default_table() {
        let text = r#"{"variables":[{"name":"A","values":["0","1"]},{"name":"B","values":["0","1"]}],
          "nodes":[{"name":"A","parents":[],"cpt":{"type":"table","rows":[{"config":[],"dist":[0.5,0.5]}]}},
                   {"name":"B","parents":["A"],"cpt":{"type":"default","rows":[
                       {"config":["0"],"dist":[0.5,0.5]},{"config":["1"],"dist":[0.5,0.5]}],
                     "default_dist":[0.5,0.5]}}]}"#;
        assert!(network_from_str(text).is_err());
    }

    #[test]
    fn schema_only_documents() {
        let vars = schema_from_str(r#"{"variables":[{"name":"A","values":["x","y","z"]}]}"#).unwrap();
        assert_eq!(vars.cardinality(0), 3);
        assert!(network_from_str(r#"{"variables":[{"name":"A","values":["x","y"]}]}"#).is_err());
    }

    #[test]
    fn alarm_fixture_loads() {
        let net = read_network(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/alarm.json")).unwrap();
        assert_eq!(net.len(), 37);
        assert_eq!(net.dag().num_edges(), 46);
        assert_eq!(net.tabular_complexity(), 509);
    }
}
