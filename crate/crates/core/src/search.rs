//! Greedy hill climbing over DAGs with edge addition, removal and reversal.
//!
//! Scores decompose over families, so a move only re-learns the local structure of the
//! one or two families it touches. Fitted families are cached by `(node, parent set)`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::localfit::{learn_local, FittedFamily, IMPROVEMENT_EPS};
use crate::mdl::{dl_graph, NetworkScore};
use crate::model::{BayesianNetwork, Dag, Representation, VariableTable};

/// Learns a family's local structure and prices it in bits; lower is better.
pub trait FamilyObjective: Sync {
    fn fit(&self, ds: &Dataset, child: usize, parents: &[usize]) -> Result<FittedFamily>;
}

/// The MDL objective with one CPT representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mdl(pub Representation);

impl FamilyObjective for Mdl {
    fn fit(&self, ds: &Dataset, child: usize, parents: &[usize]) -> Result<FittedFamily> {
        learn_local(ds, child, parents, self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveKind {
    Add,
    Remove,
    Reverse,
}

/// An edge operation on `from -> to`. Moves order by `(kind, from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub from: usize,
    pub to: usize,
}

impl Move {
    pub fn add(from: usize, to: usize) -> Self {
        Move { kind: MoveKind::Add, from, to }
    }

    pub fn remove(from: usize, to: usize) -> Self {
        Move { kind: MoveKind::Remove, from, to }
    }

    pub fn reverse(from: usize, to: usize) -> Self {
        Move { kind: MoveKind::Reverse, from, to }
    }

    pub fn apply(&self, dag: &mut Dag) -> Result<()> {
        match self.kind {
            MoveKind::Add => dag.add_edge(self.from, self.to),
            MoveKind::Remove => dag.remove_edge(self.from, self.to),
            MoveKind::Reverse => dag.reverse_edge(self.from, self.to),
        }
    }

    /// Nodes whose parent sets change, with their new parent sets (sorted).
    fn touched(&self, dag: &Dag) -> Vec<(usize, Vec<usize>)> {
        let with = |node: usize, add: Option<usize>, drop: Option<usize>| {
            let mut ps: Vec<usize> = dag.parents(node).iter().copied().filter(|&p| Some(p) != drop).collect();
            ps.extend(add);
            ps.sort_unstable();
            (node, ps)
        };
        match self.kind {
            MoveKind::Add => vec![with(self.to, Some(self.from), None)],
            MoveKind::Remove => vec![with(self.to, None, Some(self.from))],
            MoveKind::Reverse => {
                vec![with(self.to, None, Some(self.from)), with(self.from, Some(self.to), None)]
            }
        }
    }

    fn edge_delta(&self) -> isize {
        match self.kind {
            MoveKind::Add => 1,
            MoveKind::Remove => -1,
            MoveKind::Reverse => 0,
        }
    }

    pub fn describe(&self, vars: &VariableTable) -> String {
        let kind = match self.kind {
            MoveKind::Add => "add",
            MoveKind::Remove => "remove",
            MoveKind::Reverse => "reverse",
        };
        format!("{kind}({}->{})", vars.name(self.from), vars.name(self.to))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}->{})", self.kind, self.from, self.to)
    }
}

/// Every legal move on `dag` whose result is acyclic, in `(kind, from, to)` order.
///
/// `max_parents` caps the parent count a move may create.
pub fn neighbor_moves(dag: &Dag, max_parents: Option<usize>) -> Vec<Move> {
    let n = dag.len();
    let desc = dag.descendant_sets();
    let children = dag.children();
    let room = |node: usize| max_parents.is_none_or(|m| dag.parents(node).len() < m);
    let mut moves = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && !dag.has_edge(from, to) && !desc[to][from] && room(to) {
                moves.push(Move::add(from, to));
            }
        }
    }
    for (from, to) in dag.edges() {
        moves.push(Move::remove(from, to));
    }
    for (from, to) in dag.edges() {
        // reversing is acyclic unless another path from -> ... -> to exists
        let other_path = children[from].iter().any(|&w| w != to && desc[w][to]);
        if !other_path && room(from) {
            moves.push(Move::reverse(from, to));
        }
    }
    moves
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchConfig {
    pub max_parents: Option<usize>,
    /// Score uncached candidate families on the rayon pool. Decisions are unaffected.
    pub parallel: bool,
}

type FamilyKey = (usize, Vec<usize>);

/// Memoized family fits for one objective and dataset.
pub struct FamilyCache<'a, O: FamilyObjective> {
    ds: &'a Dataset,
    objective: &'a O,
    entries: HashMap<FamilyKey, Arc<FittedFamily>>,
}

impl<'a, O: FamilyObjective> FamilyCache<'a, O> {
    pub fn new(ds: &'a Dataset, objective: &'a O) -> Self {
        FamilyCache { ds, objective, entries: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn get(&mut self, node: usize, parents: &[usize]) -> Result<Arc<FittedFamily>> {
        let key = (node, parents.to_vec());
        if let Some(f) = self.entries.get(&key) {
            return Ok(Arc::clone(f));
        }
        let fitted = Arc::new(self.objective.fit(self.ds, node, parents)?);
        self.entries.insert(key, Arc::clone(&fitted));
        Ok(fitted)
    }

    /// Fits every missing key concurrently; insertion happens in key order.
    fn prefetch(&mut self, keys: Vec<FamilyKey>) -> Result<()> {
        let mut missing: Vec<FamilyKey> = keys.into_iter().filter(|k| !self.entries.contains_key(k)).collect();
        missing.sort_unstable();
        missing.dedup();
        let (ds, objective) = (self.ds, self.objective);
        let fitted: Vec<Result<FittedFamily>> =
            missing.par_iter().map(|(node, parents)| objective.fit(ds, *node, parents)).collect();
        for (key, f) in missing.into_iter().zip(fitted) {
            self.entries.insert(key, Arc::new(f?));
        }
        Ok(())
    }
}

/// Current graph with its fitted families and total score.
#[derive(Debug, Clone)]
pub struct SearchState {
    pub dag: Dag,
    pub families: Vec<Arc<FittedFamily>>,
    pub total: f64,
}

impl SearchState {
    /// Parent lists are sorted first so that families match the cache's canonical keys.
    pub fn new<O: FamilyObjective>(dag: Dag, cache: &mut FamilyCache<'_, O>) -> Result<Self> {
        let dag = canonical(dag)?;
        let families =
            (0..dag.len()).map(|i| cache.get(i, dag.parents(i))).collect::<Result<Vec<_>>>()?;
        let total = state_total(&dag, &families);
        Ok(SearchState { dag, families, total })
    }

    pub fn score(&self) -> NetworkScore {
        NetworkScore::new(dl_graph(&self.dag), self.families.iter().map(|f| f.score).collect())
    }
}

fn canonical(dag: Dag) -> Result<Dag> {
    if dag.parent_lists().iter().all(|ps| ps.windows(2).all(|w| w[0] < w[1])) {
        return Ok(dag);
    }
    let mut lists = dag.parent_lists().to_vec();
    for ps in &mut lists {
        ps.sort_unstable();
    }
    Dag::new(lists)
}

fn state_total(dag: &Dag, families: &[Arc<FittedFamily>]) -> f64 {
    dl_graph(dag) + families.iter().map(|f| f.score.total).sum::<f64>()
}

/// Score change of applying `mv` to `state`, in bits (negative is an improvement).
pub fn score_move<O: FamilyObjective>(state: &SearchState, mv: Move, cache: &mut FamilyCache<'_, O>) -> Result<f64> {
    let n = state.dag.len();
    let mut delta = mv.edge_delta() as f64 * (n as f64).log2();
    for (node, parents) in mv.touched(&state.dag) {
        delta += cache.get(node, &parents)?.score.total - state.families[node].score.total;
    }
    Ok(delta)
}

/// Applies `mv`, refreshing the touched families and recomputing the total.
pub fn apply_move<O: FamilyObjective>(
    state: &mut SearchState,
    mv: Move,
    cache: &mut FamilyCache<'_, O>,
) -> Result<()> {
    let touched = mv.touched(&state.dag);
    mv.apply(&mut state.dag)?;
    for (node, parents) in touched {
        debug_assert_eq!(state.dag.parents(node), parents.as_slice());
        state.families[node] = cache.get(node, &parents)?;
    }
    state.total = state_total(&state.dag, &state.families);
    Ok(())
}

/// One accepted move.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub iteration: usize,
    pub mv: Move,
    pub delta: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub network: BayesianNetwork,
    pub score: NetworkScore,
    pub initial_total: f64,
    pub trace: Vec<TraceStep>,
}

impl SearchResult {
    /// Trace as TSV: `iteration, move, delta-bits, total-bits`; iteration 0 is the empty graph.
    pub fn trace_tsv(&self) -> String {
        let vars = self.network.vars();
        let mut out = String::from("iteration\tmove\tdelta_bits\ttotal_bits\n");
        let _ = writeln!(out, "0\tstart\t0\t{}", self.initial_total);
        for step in &self.trace {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", step.iteration, step.mv.describe(vars), step.delta, step.total);
        }
        out
    }
}

/// The best move by delta, first in move order on ties.
pub fn best_move<O: FamilyObjective>(
    state: &SearchState,
    moves: &[Move],
    cache: &mut FamilyCache<'_, O>,
    parallel: bool,
) -> Result<Option<(Move, f64)>> {
    if parallel {
        let keys = moves.iter().flat_map(|m| m.touched(&state.dag)).collect();
        cache.prefetch(keys)?;
    }
    let mut best: Option<(Move, f64)> = None;
    for &mv in moves {
        let delta = score_move(state, mv, cache)?;
        if best.is_none_or(|(_, b)| delta < b) {
            best = Some((mv, delta));
        }
    }
    Ok(best)
}

/// Greedy search from the empty graph; stops when no move improves the score.
pub fn hill_climb<O: FamilyObjective>(ds: &Dataset, objective: &O, config: SearchConfig) -> Result<SearchResult> {
    let mut cache = FamilyCache::new(ds, objective);
    hill_climb_with(ds, &mut cache, config)
}

pub fn hill_climb_with<O: FamilyObjective>(
    ds: &Dataset,
    cache: &mut FamilyCache<'_, O>,
    config: SearchConfig,
) -> Result<SearchResult> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut state = SearchState::new(Dag::empty(ds.vars().len()), cache)?;
    let initial_total = state.total;
    let mut trace = Vec::new();
    loop {
        let moves = neighbor_moves(&state.dag, config.max_parents);
        match best_move(&state, &moves, cache, config.parallel)? {
            Some((mv, delta)) if delta < -IMPROVEMENT_EPS => {
                apply_move(&mut state, mv, cache)?;
                trace.push(TraceStep { iteration: trace.len() + 1, mv, delta, total: state.total });
            }
            _ => break,
        }
    }
    let score = state.score();
    let cpds = state.families.iter().map(|f| f.to_cpd()).collect();
    let network = BayesianNetwork::new(ds.vars().clone(), state.dag, cpds)?;
    Ok(SearchResult { network, score, initial_total, trace })
}
