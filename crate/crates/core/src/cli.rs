//! Command-line front end: argument parsing, configuration merging and file output.
//!
//! Settings resolve as flag, then config file, then built-in default. Every TSV starts
//! with `# key=value` lines echoing the effective settings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bde::{log_posterior_breakdown, Bde, PriorSpec};
use crate::data::{ancestral_sample, load_csv, save_csv, Dataset};
use crate::error::{Error, Result};
use crate::eval::{
    aggregate, aggregate_tsv, learning_curve_partial, mixed_experiment, CurveConfig, EvalConfig, KlMethod,
    MixedConfig, RECORD_HEADER,
};
use crate::mdl::{network_score, score_report};
use crate::model::format::{read_network, read_schema, write_network};
use crate::model::{Representation, VariableTable};
use crate::search::{hill_climb, Mdl, SearchConfig, SearchResult};

#[derive(Debug, Parser)]
#[command(name = "bnls", version, about = "Learn Bayesian networks with local CPT structure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a CSV sample from a network.
    Sample(SampleArgs),
    /// Learn a network from a CSV by hill climbing.
    Learn(LearnArgs),
    /// Score a network on a CSV.
    Score(ScoreArgs),
    /// Learning-curve experiment against a target network.
    Curve(CurveArgs),
    /// Structure-mode by parameter-mode experiment.
    Mixed(MixedArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Mdl,
    Bde,
}

impl Objective {
    fn as_str(self) -> &'static str {
        match self {
            Objective::Mdl => "mdl",
            Objective::Bde => "bde",
        }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Options shared by commands that read a config file.
#[derive(Debug, Args)]
pub struct ConfigArg {
    /// TOML file with defaults for any of the command's options.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// Prior network for the bde objective; defaults to independent uniform variables.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Equivalent sample size for the bde objective.
    #[arg(long)]
    pub ess: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Schema or network file defining the variables.
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, value_parser = parse_rep)]
    pub mode: Option<Representation>,
    #[arg(long, value_enum)]
    pub objective: Option<Objective>,
    #[arg(long)]
    pub max_parents: Option<usize>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub out_network: PathBuf,
    #[arg(long)]
    pub out_trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, value_enum)]
    pub objective: Option<Objective>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub config: ConfigArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Uniform mixing weight applied to learned parameters before KL.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_parser = parse_kl_method)]
    pub kl_method: Option<KlMethod>,
    /// Largest joint state count evaluated exactly.
    #[arg(long)]
    pub exact_cap: Option<u64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record wall-clock seconds per cell.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rep)]
    pub modes: Option<Vec<Representation>>,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub config: ConfigArg,
    /// One record per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Per (size, mode) medians and quartiles.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixedArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rep)]
    pub structure_modes: Option<Vec<Representation>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rep)]
    pub param_modes: Option<Vec<Representation>>,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub config: ConfigArg,
    /// Mean KL matrix.
    #[arg(long)]
    pub out: PathBuf,
    /// KL of every repetition and cell.
    #[arg(long)]
    pub cells: Option<PathBuf>,
}

fn parse_rep(s: &str) -> std::result::Result<Representation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kl_method(s: &str) -> std::result::Result<KlMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Config file contents; every key is optional and unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub modes: Option<Vec<String>>,
    pub structure_modes: Option<Vec<String>>,
    pub param_modes: Option<Vec<String>>,
    pub objective: Option<Objective>,
    pub sizes: Option<Vec<usize>>,
    pub size: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub ess: Option<f64>,
    pub prior: Option<PathBuf>,
    pub max_parents: Option<usize>,
    pub kl_method: Option<String>,
    pub exact_cap: Option<u64>,
    pub mc_samples: Option<usize>,
    pub threads: Option<usize>,
    pub timing: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }
}

fn reps_of(strings: &[String]) -> Result<Vec<Representation>> {
    strings.iter().map(|s| s.parse()).collect()
}

fn check_range<T: PartialOrd + std::fmt::Display>(name: &str, v: T, lo: T, hi: Option<T>) -> Result<T> {
    let above = hi.as_ref().is_none_or(|h| v <= *h);
    if v < lo || !above {
        let upper = hi.map_or_else(|| "inf".to_string(), |h| h.to_string());
        return Err(Error::Config(format!("{name} = {v} outside [{lo}, {upper}]")));
    }
    Ok(v)
}

/// Effective settings echoed into output headers.
#[derive(Debug, Default)]
struct Echo(Vec<(String, String)>);

impl Echo {
    fn set(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn header(&self, command: &str) -> String {
        let mut out = format!("# bnls {command}\n");
        for (k, v) in &self.0 {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out
    }
}

fn list<T: ToString>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn load_data(path: &Path, vars: &VariableTable) -> Result<Dataset> {
    load_csv(path, vars)
}

fn prior_spec(vars: &VariableTable, prior: &PriorArgs, file: &FileConfig, echo: &mut Echo) -> Result<PriorSpec> {
    let ess = check_range("ess", prior.ess.or(file.ess).unwrap_or(1.0), 0.0, None)?;
    echo.set("ess", ess);
    match prior.prior.as_ref().or(file.prior.as_ref()) {
        Some(path) => {
            echo.set("prior", path.display());
            PriorSpec::new(read_network(path)?, ess)
        }
        None => {
            echo.set("prior", "uniform");
            PriorSpec::uniform(vars.clone(), ess)
        }
    }
}

fn format_error_line(tag: &str, e: &Error) -> String {
    let msg = e.to_string().replace(['\n', '\t'], " ");
    format!("{tag}\t{}\t{msg}", e.kind())
}

pub fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let net = read_network(&args.network)?;
    let ds = ancestral_sample(&net, args.n, args.seed);
    save_csv(&ds, &args.out)?;
    println!("N\t{}", ds.len());
    for v in net.vars().iter() {
        println!("{}\t{}", v.name, v.cardinality());
    }
    Ok(())
}

fn run_search(ds: &Dataset, objective: Objective, mode: Representation, search: SearchConfig, spec: Option<PriorSpec>) -> Result<SearchResult> {
    match objective {
        Objective::Mdl => hill_climb(ds, &Mdl(mode), search),
        Objective::Bde => {
            let spec = spec.expect("bde needs a prior");
            hill_climb(ds, &Bde { spec, rep: mode }, search)
        }
    }
}

pub fn cmd_learn(args: &LearnArgs) -> Result<()> {
    let file = FileConfig::load(args.config.config.as_deref())?;
    let vars = read_schema(&args.schema)?;
    let ds = load_data(&args.data, &vars)?;
    let mode = match args.mode {
        Some(m) => m,
        None => file.mode.as_deref().map(str::parse).transpose()?.unwrap_or(Representation::Table),
    };
    let objective = args.objective.or(file.objective).unwrap_or(Objective::Mdl);
    let max_parents = args.max_parents.or(file.max_parents);
    let mut echo = Echo::default();
    echo.set("data", args.data.display());
    echo.set("mode", mode.short());
    echo.set("objective", objective.as_str());
    echo.set("max_parents", max_parents.map_or_else(|| "none".to_string(), |m| m.to_string()));
    let spec = match objective {
        Objective::Bde => Some(prior_spec(&vars, &args.prior, &file, &mut echo)?),
        Objective::Mdl => None,
    };
    let res = run_search(&ds, objective, mode, SearchConfig { max_parents, parallel: false }, spec)?;
    write_network(&res.network, &args.out_network)?;
    write_file(&args.out_trace, &(echo.header("learn") + &res.trace_tsv()))?;
    println!("total_bits\t{}", res.score.total);
    println!("actual_params\t{}", res.network.actual_param_count());
    println!("tabular_complexity\t{}", res.network.tabular_complexity());
    Ok(())
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let file = FileConfig::load(args.config.config.as_deref())?;
    let net = read_network(&args.network)?;
    let ds = load_data(&args.data, net.vars())?;
    let objective = args.objective.or(file.objective).unwrap_or(Objective::Mdl);
    let mut echo = Echo::default();
    echo.set("data", args.data.display());
    echo.set("network", args.network.display());
    echo.set("objective", objective.as_str());
    let report = match objective {
        Objective::Mdl => score_report(&net, &network_score(&ds, &net)?),
        Objective::Bde => {
            let spec = prior_spec(net.vars(), &args.prior, &file, &mut echo)?;
            log_posterior_breakdown(&ds, &net, &spec)?.report(&net)
        }
    };
    let text = echo.header("score") + &report;
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval_config(args: &EvalArgs, file: &FileConfig, echo: &mut Echo) -> Result<(EvalConfig, u64, usize, usize)> {
    let d = EvalConfig::default();
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let reps = check_range("reps", args.reps.or(file.reps).unwrap_or(10), 1, None)?;
    let threads = check_range("threads", args.threads.or(file.threads).unwrap_or(1), 1, Some(1024))?;
    let kl_method = match args.kl_method {
        Some(m) => m,
        None => file.kl_method.as_deref().map(str::parse).transpose()?.unwrap_or(d.kl_method),
    };
    let config = EvalConfig {
        epsilon: check_range("epsilon", args.epsilon.or(file.epsilon).unwrap_or(d.epsilon), 0.0, Some(1.0))?,
        kl_method,
        exact_cap: check_range("exact_cap", args.exact_cap.or(file.exact_cap).unwrap_or(d.exact_cap), 1, None)?,
        mc_samples: check_range("mc_samples", args.mc_samples.or(file.mc_samples).unwrap_or(d.mc_samples), 1, None)?,
        max_parents: args.max_parents.or(file.max_parents),
        parallel: threads > 1,
        timing: args.timing || file.timing.unwrap_or(false),
    };
    echo.set("seed", seed);
    echo.set("reps", reps);
    echo.set("epsilon", config.epsilon);
    echo.set("kl_method", config.kl_method.as_str());
    echo.set("exact_cap", config.exact_cap);
    echo.set("mc_samples", config.mc_samples);
    echo.set("max_parents", config.max_parents.map_or_else(|| "none".to_string(), |m| m.to_string()));
    echo.set("threads", threads);
    echo.set("timing", config.timing);
    Ok((config, seed, reps, threads))
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let file = FileConfig::load(args.config.config.as_deref())?;
    let target = read_network(&args.target)?;
    let sizes = args.sizes.clone().or(file.sizes.clone()).unwrap_or_else(|| vec![500, 1000, 2000, 4000, 6000, 8000, 12000, 16000]);
    let modes = match &args.modes {
        Some(m) => m.clone(),
        None => file.modes.as_deref().map(reps_of).transpose()?.unwrap_or_else(|| Representation::ALL.to_vec()),
    };
    let mut echo = Echo::default();
    echo.set("target", args.target.display());
    echo.set("sizes", list(&sizes));
    echo.set("modes", list(&modes.iter().map(|m| m.short()).collect::<Vec<_>>()));
    let (eval, seed, reps, threads) = eval_config(&args.eval, &file, &mut echo)?;
    let config = CurveConfig { sizes, reps, modes, seed, eval };
    config.validate()?;
    let (records, failure) = with_threads(threads, || learning_curve_partial(&target, &config))?;
    let mut text = echo.header("curve") + RECORD_HEADER + "\n";
    for r in &records {
        text.push_str(&r.tsv_line());
        text.push('\n');
    }
    if let Some(e) = &failure {
        text.push_str(&format_error_line("FAILED", e));
        text.push('\n');
    }
    write_file(&args.out, &text)?;
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(path) = &args.aggregate {
        write_file(path, &(echo.header("curve") + &aggregate_tsv(&aggregate(&records))))?;
    }
    Ok(())
}

pub fn cmd_mixed(args: &MixedArgs) -> Result<()> {
    let file = FileConfig::load(args.config.config.as_deref())?;
    let target = read_network(&args.target)?;
    let size = check_range("size", args.size.or(file.size).unwrap_or(1000), 2, None)?;
    let pick = |flag: &Option<Vec<Representation>>, key: &Option<Vec<String>>| -> Result<Vec<Representation>> {
        match flag {
            Some(m) => Ok(m.clone()),
            None => Ok(key.as_deref().map(reps_of).transpose()?.unwrap_or_else(|| Representation::ALL.to_vec())),
        }
    };
    let structure_modes = pick(&args.structure_modes, &file.structure_modes)?;
    let param_modes = pick(&args.param_modes, &file.param_modes)?;
    let mut echo = Echo::default();
    echo.set("target", args.target.display());
    echo.set("size", size);
    echo.set("structure_modes", list(&structure_modes.iter().map(|m| m.short()).collect::<Vec<_>>()));
    echo.set("param_modes", list(&param_modes.iter().map(|m| m.short()).collect::<Vec<_>>()));
    let (eval, seed, reps, threads) = eval_config(&args.eval, &file, &mut echo)?;
    let config = MixedConfig { size, reps, structure_modes, param_modes, seed, eval };
    config.validate()?;
    let header = echo.header("mixed");
    match with_threads(threads, || mixed_experiment(&target, &config))? {
        Ok(result) => {
            write_file(&args.out, &(header.clone() + &result.matrix_tsv()))?;
            if let Some(path) = &args.cells {
                write_file(path, &(header + &result.cells_tsv()))?;
            }
            Ok(())
        }
        Err(e) => {
            write_file(&args.out, &(header + &format_error_line("FAILED", &e) + "\n"))?;
            Err(e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Score(a) => cmd_score(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Mixed(a) => cmd_mixed(a),
    }
}

/// Parses the process arguments and runs; errors become one `error<TAB>kind<TAB>message` line.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", format_error_line("error", &e));
            ExitCode::FAILURE
        }
    }
}
