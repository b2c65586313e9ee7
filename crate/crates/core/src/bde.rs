//! Bayesian scoring with Dirichlet priors over the cells of each local structure.
//!
//! A prior network and an equivalent sample size `N'` fix, for every cell `v`, a
//! Dirichlet with pseudo-count `N' P(v)` spread by the prior's conditional of the child
//! given `v`. Structure priors are `2^-DL` of the graph and of each local structure.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::data::{ancestral_sample, family_counts, Dataset, FamilyCounts};
use crate::error::{Error, Result};
use crate::localfit::{learn_local, FittedFamily};
use crate::mdl::{dl_graph, local_bits, ml_data_bits, FamilyScore};
use crate::model::{increment, BayesianNetwork, Cpd, Dag, LocalStructure, ParentSpace, PartitionId, Representation, VariableTable};
use crate::search::FamilyObjective;

/// Families whose ancestral state space exceeds `2^EXACT_LOG2_STATES` are estimated by sampling.
pub const EXACT_LOG2_STATES: f64 = 20.0;
pub const MC_SAMPLES: usize = 1_000_000;
pub const MC_SEED: u64 = 0x5eed;

/// Prior network plus equivalent sample size.
#[derive(Debug, Clone)]
pub struct PriorSpec {
    network: BayesianNetwork,
    ess: f64,
    pub exact_log2_states: f64,
    pub mc_samples: usize,
    pub mc_seed: u64,
    mc_data: OnceLock<Dataset>,
}

impl PriorSpec {
    pub fn new(network: BayesianNetwork, ess: f64) -> Result<Self> {
        if !(ess.is_finite() && ess >= 0.0) {
            return Err(Error::Config(format!("equivalent sample size must be finite and >= 0, got {ess}")));
        }
        Ok(PriorSpec {
            network,
            ess,
            exact_log2_states: EXACT_LOG2_STATES,
            mc_samples: MC_SAMPLES,
            mc_seed: MC_SEED,
            mc_data: OnceLock::new(),
        })
    }

    /// Empty prior network with uniform marginals.
    pub fn uniform(vars: VariableTable, ess: f64) -> Result<Self> {
        let cpds = (0..vars.len())
            .map(|i| {
                let c = vars.cardinality(i);
                Cpd::table(vec![vec![1.0 / c as f64; c]])
            })
            .collect();
        let net = BayesianNetwork::new(vars.clone(), Dag::empty(vars.len()), cpds)?;
        Self::new(net, ess)
    }

    pub fn network(&self) -> &BayesianNetwork {
        &self.network
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    fn check_vars(&self, vars: &VariableTable) -> Result<()> {
        if self.network.vars() != vars {
            return Err(Error::SchemaMismatch("prior network and data have different variables".into()));
        }
        Ok(())
    }

    fn mc_data(&self) -> &Dataset {
        self.mc_data.get_or_init(|| ancestral_sample(&self.network, self.mc_samples, self.mc_seed))
    }
}

/// Dirichlet parameters of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPrior {
    pub expected: Vec<f64>,
    pub pseudo_count: f64,
    /// Set when the prior masses were estimated by sampling.
    pub estimated: bool,
}

impl PartitionPrior {
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.expected.iter().map(move |e| e * self.pseudo_count)
    }
}

/// Prior joint `P(parents = c, child = x)` over the family, keyed by configuration index.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyJoint {
    pub child_card: usize,
    pub cells: BTreeMap<usize, Vec<f64>>,
    pub estimated: bool,
}

fn ancestors(dag: &Dag, seeds: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; dag.len()];
    let mut stack: Vec<usize> = seeds.to_vec();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend_from_slice(dag.parents(v));
        }
    }
    dag.topological_order().into_iter().filter(|&v| seen[v]).collect()
}

/// Marginal of the family under the prior network: exact over the ancestral set when
/// small enough, otherwise frequencies in a seeded forward sample.
pub fn family_joint(spec: &PriorSpec, child: usize, parents: &[usize]) -> Result<FamilyJoint> {
    let net = &spec.network;
    let vars = net.vars();
    let space = ParentSpace::new(parents.iter().map(|&p| vars.cardinality(p)).collect())?;
    let card = vars.cardinality(child);
    let mut seeds = parents.to_vec();
    seeds.push(child);
    let anc = ancestors(net.dag(), &seeds);
    let log2_states: f64 = anc.iter().map(|&v| (vars.cardinality(v) as f64).log2()).sum();
    let mut cells: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let estimated = log2_states > spec.exact_log2_states;
    if !estimated {
        let cards: Vec<usize> = anc.iter().map(|&v| vars.cardinality(v)).collect();
        let mut local = vec![0; anc.len()];
        let mut full = vec![0; net.len()];
        loop {
            let mut p = 1.0;
            for (&v, &x) in anc.iter().zip(&local) {
                full[v] = x;
                p *= net.conditional_in(v, &full)[x];
                if p == 0.0 {
                    break;
                }
            }
            if p > 0.0 {
                let c = space.index_with(|j| full[parents[j]]);
                cells.entry(c).or_insert_with(|| vec![0.0; card])[full[child]] += p;
            }
            if !increment(&mut local, &cards) {
                break;
            }
        }
    } else {
        let ds = spec.mc_data();
        let w = 1.0 / ds.len() as f64;
        let child_col = ds.column(child);
        let cols: Vec<&[u16]> = parents.iter().map(|&p| ds.column(p)).collect();
        for r in 0..ds.len() {
            let c = space.index_with(|j| cols[j][r] as usize);
            cells.entry(c).or_insert_with(|| vec![0.0; card])[child_col[r] as usize] += w;
        }
    }
    Ok(FamilyJoint { child_card: card, cells, estimated })
}

/// Groups a family joint into the cells of `ls`.
pub fn priors_from_joint(joint: &FamilyJoint, ess: f64, ls: &LocalStructure, space: &ParentSpace) -> Vec<PartitionPrior> {
    let card = joint.child_card;
    let mut mass = vec![vec![0.0; card]; ls.num_partitions(space)];
    for (&c, m) in &joint.cells {
        let config = space.decode(c);
        let p = ls.partition_of(space, &config).0;
        for (acc, &x) in mass[p].iter_mut().zip(m) {
            *acc += x;
        }
    }
    mass.into_iter()
        .map(|m| {
            let total: f64 = m.iter().sum();
            if total > 0.0 && ess > 0.0 {
                PartitionPrior { expected: m.iter().map(|x| x / total).collect(), pseudo_count: ess * total, estimated: joint.estimated }
            } else {
                PartitionPrior { expected: vec![1.0 / card as f64; card], pseudo_count: 0.0, estimated: joint.estimated }
            }
        })
        .collect()
}

/// Priors for every cell of `ls`, in partition order.
pub fn partition_priors(spec: &PriorSpec, child: usize, parents: &[usize], ls: &LocalStructure) -> Result<Vec<PartitionPrior>> {
    let vars = spec.network.vars();
    let space = ParentSpace::new(parents.iter().map(|&p| vars.cardinality(p)).collect())?;
    ls.validate(&space).map_err(|reason| Error::InvalidStructure { node: vars.name(child).to_string(), reason })?;
    let joint = family_joint(spec, child, parents)?;
    Ok(priors_from_joint(&joint, spec.ess, ls, &space))
}

pub fn partition_prior(
    spec: &PriorSpec,
    child: usize,
    parents: &[usize],
    ls: &LocalStructure,
    partition: PartitionId,
) -> Result<PartitionPrior> {
    let mut priors = partition_priors(spec, child, parents, ls)?;
    if partition.0 >= priors.len() {
        return Err(Error::InvalidStructure {
            node: spec.network.vars().name(child).to_string(),
            reason: format!("no partition {} (structure has {})", partition.0, priors.len()),
        });
    }
    Ok(priors.swap_remove(partition.0))
}

/// Cells with at most this many rows are evaluated as an explicit product of rising
/// factorials; larger cells use log-gamma differences.
pub const PRODUCT_LIMIT: u64 = 4096;

/// Running product kept as `mant * 2^exp` so long products neither overflow nor underflow.
struct ScaledProduct {
    mant: f64,
    exp: i32,
}

impl ScaledProduct {
    const BIG: f64 = 1.0e150;

    fn mul(&mut self, x: f64) {
        self.mant *= x;
        self.rescale();
    }

    fn div(&mut self, x: f64) {
        self.mant /= x;
        self.rescale();
    }

    fn rescale(&mut self) {
        // scaling by powers of two is exact
        if self.mant > Self::BIG {
            self.mant *= 2f64.powi(-498);
            self.exp += 498;
        } else if self.mant < 1.0 / Self::BIG {
            self.mant *= 2f64.powi(498);
            self.exp -= 498;
        }
    }

    fn log2(&self) -> f64 {
        self.mant.log2() + self.exp as f64
    }
}

/// log2 of `Gamma(A) / Gamma(A + n) * prod_x Gamma(a_x + n_x) / Gamma(a_x)` for one cell.
fn cell_log2_marginal(alphas: &[f64], cell: &[u64]) -> f64 {
    let total_alpha: f64 = alphas.iter().sum();
    let n: u64 = cell.iter().sum();
    if n <= PRODUCT_LIMIT {
        let mut p = ScaledProduct { mant: 1.0, exp: 0 };
        let mut seen = 0u64;
        for (&c, &a) in cell.iter().zip(alphas) {
            for j in 0..c {
                p.mul(a + j as f64);
                p.div(total_alpha + seen as f64);
                seen += 1;
            }
        }
        return p.log2();
    }
    let mut ln = ln_gamma(total_alpha) - ln_gamma(total_alpha + n as f64);
    for (&c, &a) in cell.iter().zip(alphas) {
        if c > 0 {
            ln += ln_gamma(a + c as f64) - ln_gamma(a);
        }
    }
    ln / std::f64::consts::LN_2
}

/// `log2` Dirichlet-multinomial probability of the counts; `-inf` when a counted value
/// has zero pseudo-count.
pub fn family_log_marginal(counts: &FamilyCounts, priors: &[PartitionPrior]) -> f64 {
    let mut bits = 0.0;
    for (p, cell) in counts.nonempty() {
        let prior = &priors[p.0];
        let alphas: Vec<f64> = prior.alphas().collect();
        if prior.pseudo_count <= 0.0 || cell.iter().zip(&alphas).any(|(&c, &a)| c > 0 && a <= 0.0) {
            return f64::NEG_INFINITY;
        }
        bits += cell_log2_marginal(&alphas, cell);
    }
    bits
}

/// Log2 evidence of the family; at `N' = 0` this is the maximum-likelihood limit `-dl_data`.
pub fn family_evidence(spec: &PriorSpec, counts: &FamilyCounts, priors: &[PartitionPrior]) -> f64 {
    if spec.ess == 0.0 {
        -ml_data_bits(counts)
    } else {
        family_log_marginal(counts, priors)
    }
}

/// Per-family terms of the log2 posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBreakdown {
    /// `-DL_graph`.
    pub graph: f64,
    /// `(dlStructure, log2 evidence)` per node.
    pub families: Vec<(f64, f64)>,
    pub total: f64,
}

impl PosteriorBreakdown {
    /// TSV: one line per family, then the graph term and the total.
    pub fn report(&self, net: &BayesianNetwork) -> String {
        let mut out = String::from("node\trepresentation\tdlStructure\tlog2Evidence\tlog2Posterior\n");
        for (i, (structure, evidence)) in self.families.iter().enumerate() {
            let rep = net.cpd(i).structure.representation();
            out.push_str(&format!("{}\t{rep}\t{structure}\t{evidence}\t{}\n", net.vars().name(i), evidence - structure));
        }
        out.push_str(&format!("_graph\t-\t{}\t0\t{}\n", -self.graph, self.graph));
        let structure: f64 = self.families.iter().map(|f| f.0).sum::<f64>() - self.graph;
        let evidence: f64 = self.families.iter().map(|f| f.1).sum();
        out.push_str(&format!("_total\t-\t{structure}\t{evidence}\t{}\n", self.total));
        out
    }
}

pub fn log_posterior_breakdown(ds: &Dataset, net: &BayesianNetwork, spec: &PriorSpec) -> Result<PosteriorBreakdown> {
    spec.check_vars(ds.vars())?;
    if net.vars() != ds.vars() {
        return Err(Error::SchemaMismatch("dataset and network have different variables".into()));
    }
    let graph = -dl_graph(net.dag());
    let families = (0..net.len())
        .map(|i| {
            let parents = net.dag().parents(i);
            let ls = &net.cpd(i).structure;
            let structure = local_bits(ls, net.parent_space(i), ds.vars().cardinality(i), ds.len() as u64).structure;
            let counts = family_counts(ds, i, parents, ls)?;
            let priors = partition_priors(spec, i, parents, ls)?;
            Ok((structure, family_evidence(spec, &counts, &priors)))
        })
        .collect::<Result<Vec<_>>>()?;
    let total = graph + families.iter().map(|(s, e)| e - s).sum::<f64>();
    Ok(PosteriorBreakdown { graph, families, total })
}

/// Unnormalized log2 posterior of `net`'s graph and local structures; higher is better.
pub fn log_posterior_score(ds: &Dataset, net: &BayesianNetwork, spec: &PriorSpec) -> Result<f64> {
    Ok(log_posterior_breakdown(ds, net, spec)?.total)
}

/// Search objective: local structure from the MDL learner of `rep`, priced by its
/// structure prior and the Dirichlet evidence. Parameters stay at maximum likelihood.
#[derive(Debug, Clone)]
pub struct Bde {
    pub spec: PriorSpec,
    pub rep: Representation,
}

impl FamilyObjective for Bde {
    fn fit(&self, ds: &Dataset, child: usize, parents: &[usize]) -> Result<FittedFamily> {
        self.spec.check_vars(ds.vars())?;
        let fitted = learn_local(ds, child, parents, self.rep)?;
        let counts = family_counts(ds, child, parents, &fitted.structure)?;
        let priors = partition_priors(&self.spec, child, parents, &fitted.structure)?;
        let evidence = family_evidence(&self.spec, &counts, &priors);
        Ok(FittedFamily { score: FamilyScore::new(fitted.score.structure, 0.0, -evidence), ..fitted })
    }
}
