//! KL divergence between networks and the learning experiments built on it.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::data::{ancestral_sample, Dataset};
use crate::error::{Error, Result};
use crate::localfit::learn_local;
use crate::model::{increment, BayesianNetwork, Cpd, Representation};
use crate::rng::derive_seed;
use crate::search::{hill_climb, Mdl, SearchConfig};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_EXACT_CAP: u64 = 1 << 22;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

const DATA_STREAM: u64 = 0;
const KL_STREAM: u64 = 1;

fn check_same_vars(p: &BayesianNetwork, q: &BayesianNetwork) -> Result<()> {
    if p.vars() != q.vars() {
        return Err(Error::SchemaMismatch("networks have different variables".into()));
    }
    Ok(())
}

/// `sum_x P(x) log2(P(x) / Q(x))` by enumerating every joint state.
pub fn kl_exact(p: &BayesianNetwork, q: &BayesianNetwork, cap: u64) -> Result<f64> {
    check_same_vars(p, q)?;
    let log2_states = p.vars().log2_state_space();
    if log2_states > (cap as f64).log2() {
        return Err(Error::StateSpaceTooLarge { log2_states, cap });
    }
    let cards = p.vars().cardinalities();
    let mut x = vec![0; cards.len()];
    let mut kl = 0.0;
    loop {
        let lp = p.joint_log_prob(&x);
        if lp > f64::NEG_INFINITY {
            let lq = q.joint_log_prob(&x);
            if lq == f64::NEG_INFINITY {
                return Ok(f64::INFINITY);
            }
            kl += lp.exp2() * (lp - lq);
        }
        if !increment(&mut x, &cards) {
            break;
        }
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEstimate {
    pub bits: f64,
    pub stderr: f64,
    pub method: KlMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlMethod {
    /// Exact when the state space fits under the cap, otherwise Monte Carlo.
    Auto,
    Exact,
    MonteCarlo,
}

impl KlMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            KlMethod::Auto => "auto",
            KlMethod::Exact => "exact",
            KlMethod::MonteCarlo => "mc",
        }
    }
}

impl std::str::FromStr for KlMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(KlMethod::Auto),
            "exact" => Ok(KlMethod::Exact),
            "mc" | "monte-carlo" => Ok(KlMethod::MonteCarlo),
            other => Err(Error::Config(format!("unknown KL method `{other}` (expected auto, exact or mc)"))),
        }
    }
}

/// Forward samples from a target with their log2 probabilities, reusable across
/// approximating networks.
#[derive(Debug, Clone)]
pub struct TargetSample {
    data: Dataset,
    log_p: Vec<f64>,
}

impl TargetSample {
    pub fn draw(p: &BayesianNetwork, samples: usize, seed: u64) -> Self {
        let data = ancestral_sample(p, samples, seed);
        let mut row = vec![0; p.len()];
        let log_p = (0..data.len())
            .map(|r| {
                fill_row(&data, r, &mut row);
                p.joint_log_prob(&row)
            })
            .collect();
        TargetSample { data, log_p }
    }

    pub fn len(&self) -> usize {
        self.log_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_p.is_empty()
    }

    /// Mean and standard error of `log2 P(u) - log2 Q(u)`.
    pub fn kl(&self, q: &BayesianNetwork) -> Result<KlEstimate> {
        if self.data.vars() != q.vars() {
            return Err(Error::SchemaMismatch("networks have different variables".into()));
        }
        let n = self.len();
        let mut row = vec![0; q.len()];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for r in 0..n {
            fill_row(&self.data, r, &mut row);
            let lq = q.joint_log_prob(&row);
            if lq == f64::NEG_INFINITY {
                return Err(Error::InfiniteSample { index: r });
            }
            let d = self.log_p[r] - lq;
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / n as f64;
        let var = if n > 1 { ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0) } else { 0.0 };
        Ok(KlEstimate { bits: mean, stderr: (var / n as f64).sqrt(), method: KlMethod::MonteCarlo })
    }
}

fn fill_row(ds: &Dataset, r: usize, row: &mut [usize]) {
    for (v, x) in row.iter_mut().enumerate() {
        *x = ds.value(r, v);
    }
}

/// Monte Carlo KL from `samples` forward draws of `p`.
pub fn kl_monte_carlo(p: &BayesianNetwork, q: &BayesianNetwork, samples: usize, seed: u64) -> Result<KlEstimate> {
    check_same_vars(p, q)?;
    if samples == 0 {
        return Err(Error::Config("Monte Carlo KL needs at least one sample".into()));
    }
    TargetSample::draw(p, samples, seed).kl(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Weight of the uniform distribution mixed into learned parameters before KL.
    pub epsilon: f64,
    pub kl_method: KlMethod,
    pub exact_cap: u64,
    pub mc_samples: usize,
    pub max_parents: Option<usize>,
    pub parallel: bool,
    /// Record wall-clock seconds per cell; off keeps outputs byte-stable.
    pub timing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            epsilon: DEFAULT_EPSILON,
            kl_method: KlMethod::Auto,
            exact_cap: DEFAULT_EXACT_CAP,
            mc_samples: DEFAULT_MC_SAMPLES,
            max_parents: None,
            parallel: false,
            timing: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Scores learned networks against a fixed target with one KL method.
#[derive(Debug)]
pub struct KlEvaluator<'a> {
    target: &'a BayesianNetwork,
    exact_cap: u64,
    sample: Option<TargetSample>,
}

impl<'a> KlEvaluator<'a> {
    pub fn new(target: &'a BayesianNetwork, config: &EvalConfig, seed: u64) -> Result<Self> {
        let fits = target.vars().log2_state_space() <= (config.exact_cap as f64).log2();
        let exact = match config.kl_method {
            KlMethod::Auto => fits,
            KlMethod::Exact => true,
            KlMethod::MonteCarlo => false,
        };
        let sample = (!exact).then(|| TargetSample::draw(target, config.mc_samples, derive_seed(seed, &[KL_STREAM])));
        Ok(KlEvaluator { target, exact_cap: config.exact_cap, sample })
    }

    pub fn method(&self) -> KlMethod {
        if self.sample.is_some() {
            KlMethod::MonteCarlo
        } else {
            KlMethod::Exact
        }
    }

    pub fn kl(&self, q: &BayesianNetwork) -> Result<KlEstimate> {
        match &self.sample {
            Some(s) => s.kl(q),
            None => Ok(KlEstimate { bits: kl_exact(self.target, q, self.exact_cap)?, stderr: 0.0, method: KlMethod::Exact }),
        }
    }
}

/// `kl * N / log2 N`.
pub fn scaled_error(kl: f64, n: usize) -> f64 {
    kl * n as f64 / (n as f64).log2()
}

/// One learned network evaluated against the target.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub size: usize,
    pub rep: usize,
    pub mode: Representation,
    /// Seed of the training sample.
    pub seed: u64,
    pub kl: f64,
    pub kl_stderr: f64,
    pub kl_method: KlMethod,
    pub scaled_error: f64,
    pub actual_params: usize,
    pub tabular_complexity: usize,
    pub edges: usize,
    pub total_bits: f64,
    pub epsilon: f64,
    pub wall_clock: Option<f64>,
}

pub const RECORD_HEADER: &str = "size\trep\tmode\tseed\tkl\tkl_stderr\tkl_method\tscaled_error\tactual_params\ttabular_complexity\tedges\ttotal_bits\tepsilon\twall_clock";

impl EvalRecord {
    pub fn tsv_line(&self) -> String {
        let clock = self.wall_clock.map_or_else(|| "NA".to_string(), |s| format!("{s:.3}"));
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.size,
            self.rep,
            self.mode.short(),
            self.seed,
            self.kl,
            self.kl_stderr,
            self.kl_method.as_str(),
            self.scaled_error,
            self.actual_params,
            self.tabular_complexity,
            self.edges,
            self.total_bits,
            self.epsilon,
            clock
        )
    }
}

/// Seed of the training sample for one (size, repetition) pair; shared by all modes.
pub fn dataset_seed(master: u64, size: usize, rep: usize) -> u64 {
    derive_seed(master, &[DATA_STREAM, size as u64, rep as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub modes: Vec<Representation>,
    pub seed: u64,
    pub eval: EvalConfig,
}

impl CurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.modes.is_empty() || self.reps == 0 {
            return Err(Error::Config("sizes, modes and reps must be nonempty".into()));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("sample sizes must be at least 2, got {n}")));
        }
        self.eval.validate()
    }

    /// Cells in output order: size, then repetition, then mode.
    pub fn cells(&self) -> Vec<(usize, usize, Representation)> {
        let mut out = Vec::new();
        for &size in &self.sizes {
            for rep in 0..self.reps {
                for &mode in &self.modes {
                    out.push((size, rep, mode));
                }
            }
        }
        out
    }
}

fn evaluate_learned(
    learned: &BayesianNetwork,
    evaluator: &KlEvaluator<'_>,
    epsilon: f64,
) -> Result<KlEstimate> {
    evaluator.kl(&learned.smoothed(epsilon))
}

fn run_cell(
    target: &BayesianNetwork,
    evaluator: &KlEvaluator<'_>,
    config: &CurveConfig,
    (size, rep, mode): (usize, usize, Representation),
) -> Result<EvalRecord> {
    let start = Instant::now();
    let seed = dataset_seed(config.seed, size, rep);
    let ds = ancestral_sample(target, size, seed);
    let search = SearchConfig { max_parents: config.eval.max_parents, parallel: false };
    let res = hill_climb(&ds, &Mdl(mode), search)?;
    let kl = evaluate_learned(&res.network, evaluator, config.eval.epsilon)?;
    Ok(EvalRecord {
        size,
        rep,
        mode,
        seed,
        kl: kl.bits,
        kl_stderr: kl.stderr,
        kl_method: kl.method,
        scaled_error: scaled_error(kl.bits, size),
        actual_params: res.network.actual_param_count(),
        tabular_complexity: res.network.tabular_complexity(),
        edges: res.network.dag().num_edges(),
        total_bits: res.score.total,
        epsilon: config.eval.epsilon,
        wall_clock: config.eval.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Runs every cell; on failure returns the records before the first failing cell
/// together with its error.
pub fn learning_curve_partial(target: &BayesianNetwork, config: &CurveConfig) -> (Vec<EvalRecord>, Option<Error>) {
    if let Err(e) = config.validate() {
        return (Vec::new(), Some(e));
    }
    let evaluator = match KlEvaluator::new(target, &config.eval, config.seed) {
        Ok(e) => e,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let cells = config.cells();
    let results: Vec<Result<EvalRecord>> = if config.eval.parallel {
        cells.par_iter().map(|&c| run_cell(target, &evaluator, config, c)).collect()
    } else {
        cells.iter().map(|&c| run_cell(target, &evaluator, config, c)).collect()
    };
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => return (records, Some(e)),
        }
    }
    (records, None)
}

/// Learns and evaluates a network for every (size, repetition, mode) cell.
pub fn learning_curve(target: &BayesianNetwork, config: &CurveConfig) -> Result<Vec<EvalRecord>> {
    match learning_curve_partial(target, config) {
        (records, None) => Ok(records),
        (_, Some(e)) => Err(e),
    }
}

pub fn records_tsv(records: &[EvalRecord]) -> String {
    let mut out = format!("{RECORD_HEADER}\n");
    for r in records {
        out.push_str(&r.tsv_line());
        out.push('\n');
    }
    out
}

/// Summary of the records of one (size, mode) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub size: usize,
    pub mode: Representation,
    pub count: usize,
    pub median_scaled: f64,
    pub q1_scaled: f64,
    pub q3_scaled: f64,
    pub mean_scaled: f64,
    pub median_kl: f64,
    pub mean_kl: f64,
    pub median_actual_params: f64,
    pub median_tabular_complexity: f64,
}

pub fn median(values: &[f64]) -> f64 {
    Data::new(values.to_vec()).median()
}

/// Groups records by (size, mode) in order of first appearance.
pub fn aggregate(records: &[EvalRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(usize, Representation)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.size, r.mode)) {
            keys.push((r.size, r.mode));
        }
    }
    keys.into_iter()
        .map(|(size, mode)| {
            let group: Vec<&EvalRecord> = records.iter().filter(|r| r.size == size && r.mode == mode).collect();
            let pick = |f: fn(&EvalRecord) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let scaled = pick(|r| r.scaled_error);
            let kl = pick(|r| r.kl);
            let mut sorted = Data::new(scaled.clone());
            Aggregate {
                size,
                mode,
                count: group.len(),
                median_scaled: median(&scaled),
                q1_scaled: sorted.lower_quartile(),
                q3_scaled: sorted.upper_quartile(),
                mean_scaled: scaled.iter().sum::<f64>() / scaled.len() as f64,
                median_kl: median(&kl),
                mean_kl: kl.iter().sum::<f64>() / kl.len() as f64,
                median_actual_params: median(&pick(|r| r.actual_params as f64)),
                median_tabular_complexity: median(&pick(|r| r.tabular_complexity as f64)),
            }
        })
        .collect()
}

pub fn aggregate_tsv(aggs: &[Aggregate]) -> String {
    let mut out = String::from(
        "size\tmode\tcount\tmedian_scaled_error\tq1_scaled_error\tq3_scaled_error\tmean_scaled_error\tmedian_kl\tmean_kl\tmedian_actual_params\tmedian_tabular_complexity\n",
    );
    for a in aggs {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            a.size,
            a.mode.short(),
            a.count,
            a.median_scaled,
            a.q1_scaled,
            a.q3_scaled,
            a.mean_scaled,
            a.median_kl,
            a.mean_kl,
            a.median_actual_params,
            a.median_tabular_complexity
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedConfig {
    pub size: usize,
    pub reps: usize,
    /// Representations used during structure search (rows).
    pub structure_modes: Vec<Representation>,
    /// Representations refit on the frozen graph (columns).
    pub param_modes: Vec<Representation>,
    pub seed: u64,
    pub eval: EvalConfig,
}

impl MixedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.structure_modes.is_empty() || self.param_modes.is_empty() || self.reps == 0 {
            return Err(Error::Config("modes and reps must be nonempty".into()));
        }
        if self.size < 2 {
            return Err(Error::Config(format!("sample size must be at least 2, got {}", self.size)));
        }
        self.eval.validate()
    }
}

/// KL of every (structure mode, parameter mode) pair for every repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedResult {
    pub structure_modes: Vec<Representation>,
    pub param_modes: Vec<Representation>,
    /// `kl[rep][row][col]`.
    pub kl: Vec<Vec<Vec<f64>>>,
}

impl MixedResult {
    /// Mean over repetitions, `[row][col]`.
    pub fn mean(&self) -> Vec<Vec<f64>> {
        let reps = self.kl.len() as f64;
        (0..self.structure_modes.len())
            .map(|i| (0..self.param_modes.len()).map(|j| self.kl.iter().map(|m| m[i][j]).sum::<f64>() / reps).collect())
            .collect()
    }

    pub fn matrix_tsv(&self) -> String {
        let mut out = String::from("structure\\params");
        for m in &self.param_modes {
            let _ = write!(out, "\t{}", m.short());
        }
        out.push('\n');
        for (row, values) in self.structure_modes.iter().zip(self.mean()) {
            out.push_str(row.short());
            for v in values {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn cells_tsv(&self) -> String {
        let mut out = String::from("rep\tstructure_mode\tparam_mode\tkl\n");
        for (rep, m) in self.kl.iter().enumerate() {
            for (i, row) in self.structure_modes.iter().enumerate() {
                for (j, col) in self.param_modes.iter().enumerate() {
                    let _ = writeln!(out, "{rep}\t{}\t{}\t{}", row.short(), col.short(), m[i][j]);
                }
            }
        }
        out
    }
}

/// Refits every family of `net`'s graph in `rep` on `ds`.
pub fn refit(ds: &Dataset, net: &BayesianNetwork, rep: Representation) -> Result<BayesianNetwork> {
    let cpds = (0..net.len())
        .map(|i| Ok(learn_local(ds, i, net.dag().parents(i), rep)?.into_cpd()))
        .collect::<Result<Vec<Cpd>>>()?;
    BayesianNetwork::new(net.vars().clone(), net.dag().clone(), cpds)
}

/// Learns a graph with each structure mode, then refits its local structures and
/// parameters with each parameter mode. Training samples match `learning_curve`'s.
pub fn mixed_experiment(target: &BayesianNetwork, config: &MixedConfig) -> Result<MixedResult> {
    config.validate()?;
    let evaluator = KlEvaluator::new(target, &config.eval, config.seed)?;
    let search = SearchConfig { max_parents: config.eval.max_parents, parallel: false };
    let run_rep = |rep: usize| -> Result<Vec<Vec<f64>>> {
        let ds = ancestral_sample(target, config.size, dataset_seed(config.seed, config.size, rep));
        config
            .structure_modes
            .iter()
            .map(|&row| {
                let learned = hill_climb(&ds, &Mdl(row), search)?.network;
                config
                    .param_modes
                    .iter()
                    .map(|&col| {
                        let net = if col == row { learned.clone() } else { refit(&ds, &learned, col)? };
                        Ok(evaluate_learned(&net, &evaluator, config.eval.epsilon)?.bits)
                    })
                    .collect()
            })
            .collect()
    };
    let kl = if config.eval.parallel {
        (0..config.reps).into_par_iter().map(run_rep).collect::<Result<Vec<_>>>()?
    } else {
        (0..config.reps).map(run_rep).collect::<Result<Vec<_>>>()?
    };
    Ok(MixedResult { structure_modes: config.structure_modes.clone(), param_modes: config.param_modes.clone(), kl })
}
