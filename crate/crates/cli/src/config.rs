use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use kacz_core::problems::{MatrixSource, ProblemSpec};
use kacz_core::{Metric, SelectionRule, StopCriteria};

use crate::BenchError;

pub const DEFAULT_M: usize = 500;
pub const DEFAULT_N: usize = 100;
pub const DEFAULT_DENSITY: f64 = 0.2;
pub const DEFAULT_METHODS: &str = "grk,grmk";
pub const DEFAULT_TRIALS: usize = 30;
pub const SEED_ENV: &str = "KACZ_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    /// Dense, i.i.d. N(0, 1) entries
    Gaussian,
    /// Dense, i.i.d. entries uniform in (0, 1)
    Uniform,
    /// Sparse with N(0, 1) values
    SparseNormal,
    /// Sparse with values uniform in (0, 1)
    SparseUniform,
    /// n x n identity (m is ignored)
    Identity,
    /// Matrix Market file given by --mm-file
    Mm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    /// relative solution error against the minimum-norm solution
    Res,
    /// relative residual
    Rr,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Res => Metric::Res,
            MetricArg::Rr => Metric::Rr,
        }
    }
}

/// Command-line flags. Every flag may also be given as `key = value` in a
/// `--config` file; flags on the command line take precedence.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "kacz-bench", version, about = "Benchmark greedy Kaczmarz-type solvers on consistent systems")]
pub struct Args {
    /// Problem family [default: gaussian]
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// Row count [default: 500]
    #[arg(long)]
    pub m: Option<usize>,
    /// Column count [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Nonzero density for sparse problems [default: 0.2]
    #[arg(long)]
    pub density: Option<f64>,
    /// Matrix Market input; implies --problem mm
    #[arg(long)]
    pub mm_file: Option<PathBuf>,
    /// Comma-separated methods: rk,mr,md,grk,grmk,grmk-theta=<v>,gk,gbk-eta=<v>,gdbk,gmbk,gmbk-xi=<v>,avg-block [default: grk,grmk]
    #[arg(long)]
    pub methods: Option<String>,
    /// Stopping tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Stopping metric [default: res]
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Iteration cap [default: 200*m]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Independent solver runs per method [default: 30]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed [default: $KACZ_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for trials [default: 1]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-iteration convergence curves CSV
    #[arg(long)]
    pub curves_out: Option<PathBuf>,
    /// Per-method summary CSV
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    /// Empirical rates against bound factors for grk and grmk
    #[arg(long)]
    pub rates_out: Option<PathBuf>,
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Args {
    /// Fills every unset field from `other`.
    pub fn or(self, other: Args) -> Args {
        Args {
            problem: self.problem.or(other.problem),
            m: self.m.or(other.m),
            n: self.n.or(other.n),
            density: self.density.or(other.density),
            mm_file: self.mm_file.or(other.mm_file),
            methods: self.methods.or(other.methods),
            tol: self.tol.or(other.tol),
            metric: self.metric.or(other.metric),
            max_iters: self.max_iters.or(other.max_iters),
            trials: self.trials.or(other.trials),
            seed: self.seed.or(other.seed),
            threads: self.threads.or(other.threads),
            curves_out: self.curves_out.or(other.curves_out),
            summary_out: self.summary_out.or(other.summary_out),
            rates_out: self.rates_out.or(other.rates_out),
            config: self.config.or(other.config),
        }
    }
}

/// Parses `key = value` lines. `#` starts a comment; `_` and `-` are interchangeable in keys.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, BenchError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", no + 1)))?;
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(BenchError::Config(format!("line {}: nested config files are not supported", no + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(BenchError::Config(format!("line {}: duplicate key '{key}'", no + 1)));
        }
    }
    Ok(map)
}

/// Interprets a config file with the same parsers as the command line.
pub fn args_from_config(map: &BTreeMap<String, String>) -> Result<Args, BenchError> {
    let mut argv = vec!["kacz-bench".to_string()];
    for (k, v) in map {
        argv.push(format!("--{k}"));
        argv.push(v.clone());
    }
    Args::try_parse_from(argv).map_err(|e| BenchError::Config(format!("config file: {e}")))
}

pub fn load_config_file(path: &Path) -> Result<Args, BenchError> {
    let text = fs::read_to_string(path)?;
    args_from_config(&parse_config_text(&text)?)
}

/// A fully resolved benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<SelectionRule>,
    pub stop: StopCriteria,
    pub trials: usize,
    pub seed: u64,
    pub threads: usize,
    pub curves_out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub rates_out: Option<PathBuf>,
}

impl RunConfig {
    /// Resolves flags, the optional config file, and the seed fallback (`env_seed`,
    /// normally the value of `KACZ_SEED`) into a validated configuration.
    pub fn resolve(args: Args, env_seed: Option<&str>) -> Result<RunConfig, BenchError> {
        let args = match &args.config {
            Some(path) => {
                let file = load_config_file(path)?;
                args.or(file)
            }
            None => args,
        };

        let env_seed = env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| BenchError::Config(format!("{SEED_ENV}='{s}': {e}")))
            })
            .transpose()?;
        let seed = args.seed.or(env_seed).unwrap_or(0);

        let kind = match (args.problem, &args.mm_file) {
            (Some(k), _) => k,
            (None, Some(_)) => ProblemKind::Mm,
            (None, None) => ProblemKind::Gaussian,
        };
        let m = args.m.unwrap_or(DEFAULT_M);
        let n = args.n.unwrap_or(DEFAULT_N);
        let density = args.density.unwrap_or(DEFAULT_DENSITY);
        let source = match kind {
            ProblemKind::Gaussian => MatrixSource::GaussianDense { m, n },
            ProblemKind::Uniform => MatrixSource::UniformDense { m, n },
            ProblemKind::SparseNormal => MatrixSource::SparseNormal { m, n, density },
            ProblemKind::SparseUniform => MatrixSource::SparseUniform { m, n, density },
            ProblemKind::Identity => MatrixSource::Identity { n },
            ProblemKind::Mm => MatrixSource::MatrixMarketFile(
                args.mm_file
                    .clone()
                    .ok_or_else(|| BenchError::Config("--problem mm requires --mm-file".into()))?,
            ),
        };
        if kind != ProblemKind::Mm && args.mm_file.is_some() {
            return Err(BenchError::Config("--mm-file is only valid with --problem mm".into()));
        }
        let problem = ProblemSpec::new(source, seed);
        problem.validate()?;

        let methods = parse_methods(args.methods.as_deref().unwrap_or(DEFAULT_METHODS))?;
        let stop = StopCriteria::new(
            args.tol.unwrap_or(kacz_core::solvers::DEFAULT_TOL),
            args.metric.map_or(Metric::Res, Metric::from),
            args.max_iters,
        )?;

        let trials = args.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(BenchError::Config("--trials must be at least 1".into()));
        }
        let threads = args.threads.unwrap_or(1);
        if threads == 0 {
            return Err(BenchError::Config("--threads must be at least 1".into()));
        }

        Ok(RunConfig {
            problem,
            methods,
            stop,
            trials,
            seed,
            threads,
            curves_out: args.curves_out,
            summary_out: args.summary_out,
            rates_out: args.rates_out,
        })
    }
}

/// Parses a comma-separated method list; duplicates are rejected.
pub fn parse_methods(list: &str) -> Result<Vec<SelectionRule>, BenchError> {
    let mut methods: Vec<SelectionRule> = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let rule: SelectionRule = token.parse()?;
        if methods.contains(&rule) {
            return Err(BenchError::Config(format!("method '{token}' listed twice")));
        }
        methods.push(rule);
    }
    if methods.is_empty() {
        return Err(BenchError::Config("no methods given".into()));
    }
    Ok(methods)
}
