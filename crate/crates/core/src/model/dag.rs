use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Directed acyclic graph stored as per-node ordered parent lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Dag { parents: vec![Vec::new(); n] }
    }

    pub fn new(parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        for (child, ps) in parents.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                if p >= n {
                    return Err(Error::InvalidGraph(format!("parent {p} of node {child} out of range")));
                }
                if p == child {
                    return Err(Error::InvalidGraph(format!("node {child} is its own parent")));
                }
                if ps[..j].contains(&p) {
                    return Err(Error::InvalidGraph(format!("duplicate parent {p} of node {child}")));
                }
            }
        }
        topological_order(&parents)?;
        Ok(Dag { parents })
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(&from)
    }

    pub fn num_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All edges as `(from, to)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(to, ps)| ps.iter().map(move |&from| (from, to)))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (to, ps) in self.parents.iter().enumerate() {
            for &from in ps {
                children[from].push(to);
            }
        }
        for c in &mut children {
            c.sort_unstable();
        }
        children
    }

    pub fn topological_order(&self) -> Vec<usize> {
        topological_order(&self.parents).expect("Dag is acyclic by construction")
    }

    /// `true` if a directed path `from ~> to` of length >= 1 exists.
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        let children = self.children();
        let mut seen = vec![false; self.len()];
        let mut stack = children[from].clone();
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend_from_slice(&children[v]);
            }
        }
        false
    }

    /// For each node, the set of its proper descendants as a dense bitmap.
    pub fn descendant_sets(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let children = self.children();
        let mut desc = vec![vec![false; n]; n];
        for v in self.topological_order().into_iter().rev() {
            let mut row = vec![false; n];
            for &c in &children[v] {
                row[c] = true;
                for (r, &d) in row.iter_mut().zip(&desc[c]) {
                    *r |= d;
                }
            }
            desc[v] = row;
        }
        desc
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if from == to || from >= self.len() || to >= self.len() {
            return Err(Error::InvalidGraph(format!("illegal edge {from} -> {to}")));
        }
        if self.has_edge(from, to) {
            return Err(Error::InvalidGraph(format!("edge {from} -> {to} already present")));
        }
        if self.has_path(to, from) {
            return Err(Error::CyclicGraph);
        }
        self.parents[to].push(from);
        self.parents[to].sort_unstable();
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> Result<()> {
        let pos = self.parents[to]
            .iter()
            .position(|&p| p == from)
            .ok_or_else(|| Error::InvalidGraph(format!("edge {from} -> {to} not present")))?;
        self.parents[to].remove(pos);
        Ok(())
    }

    pub fn reverse_edge(&mut self, from: usize, to: usize) -> Result<()> {
        self.remove_edge(from, to)?;
        if let Err(e) = self.add_edge(to, from) {
            self.parents[to].push(from);
            self.parents[to].sort_unstable();
            return Err(e);
        }
        Ok(())
    }
}

/// Kahn's algorithm, always releasing the lowest-indexed ready node first.
pub fn topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (to, ps) in parents.iter().enumerate() {
        for &from in ps {
            children[from].push(to);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(Error::CyclicGraph)
    }
}
