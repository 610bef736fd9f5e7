//! `uev`: reproduces the Gaussian and ball-drop experiments, discrete
//! demonstrations and consistency diagnostics, writing CSV and JSON results.

mod ball_drop;
mod consistency;
mod discrete;
mod gaussian;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use uev_core::seed::derive_seed;
use uev_core::UevError;

pub use ball_drop::run_ball_drop;
pub use consistency::run_check_consistency;
pub use discrete::run_discrete;
pub use gaussian::run_gaussian;

#[derive(Debug, Parser)]
#[command(name = "uev", version, about = "Bayesian inference with uncertain evidence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conjugate Gaussian chain: closed-form posteriors under each rule
    Gaussian(GaussianArgs),
    /// Infer g from a stopwatch reading of a 1 m ball drop
    BallDrop(BallDropArgs),
    /// Jeffrey and virtual updates on a finite joint table
    Discrete(DiscreteArgs),
    /// Necessary conditions for Jeffrey's rule to be consistent with the model
    CheckConsistency(ConsistencyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Jeffrey,
    Virtual,
    Distributional,
    All,
}

impl Method {
    pub fn expand(self) -> Vec<Method> {
        match self {
            Method::All => vec![Method::Jeffrey, Method::Virtual, Method::Distributional],
            m => vec![m],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Jeffrey => "jeffrey",
            Method::Virtual => "virtual",
            Method::Distributional => "distributional",
            Method::All => "all",
        }
    }

    /// Independent seed for this method's Monte Carlo run.
    pub fn seed(self, master: u64) -> u64 {
        derive_seed(master, (1 << 40) + self as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Panel {
    Left,
    Right,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianParamArgs {
    /// Preset parameters; explicit flags override individual values
    #[arg(long, value_enum, default_value = "left")]
    pub panel: Panel,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_yx: Option<f64>,
    /// Spread of the uncertain evidence about y
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_q: Option<f64>,
    /// Centre of the uncertain evidence about y
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    /// Noise of the virtual likelihood q(zeta | y); defaults to sigma-q
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_qzeta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianArgs {
    #[command(flatten)]
    pub params: GaussianParamArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub method: Method,
    /// Also run the sampling engines and report their moments
    #[arg(long)]
    pub mc_check: bool,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub n_e: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineArg {
    Snis,
    Mh,
}

#[derive(Debug, Clone, Args)]
pub struct BallDropParamArgs {
    /// Stopwatch reading in seconds
    #[arg(long, default_value_t = 0.43, allow_hyphen_values = true)]
    pub t_hat: f64,
    /// Stopwatch uncertainty in seconds
    #[arg(long, default_value_t = 0.03, allow_hyphen_values = true)]
    pub sigma_q: f64,
    /// Model error on the fall time in seconds
    #[arg(long, default_value_t = 0.005, allow_hyphen_values = true)]
    pub sigma_model: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub distance: f64,
    #[arg(long, default_value_t = 9.81, allow_hyphen_values = true)]
    pub prior_mean: f64,
    /// 0 makes the prior a point mass
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub prior_sd: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BallDropArgs {
    #[command(flatten)]
    pub params: BallDropParamArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "snis")]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub n_e: usize,
    /// Random-walk scale for --engine mh
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub step_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DiscreteArgs {
    /// JointTable JSON; the bundled two-state running example if omitted
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Jeffrey distribution over y_values, comma separated
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Likelihood ratios over y_values, comma separated
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Second Jeffrey distribution; the reverse of --q if omitted
    #[arg(long, value_delimiter = ',')]
    pub q_b: Option<Vec<f64>>,
    /// Second ratio vector; the reverse of --lambda if omitted
    #[arg(long, value_delimiter = ',')]
    pub lambda_b: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Gaussian,
    BallDrop,
}

#[derive(Debug, Clone, Args)]
pub struct ConsistencyArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub experiment: Experiment,
    #[command(flatten)]
    pub gaussian: GaussianParamArgs,
    #[arg(long, default_value_t = 0.43, allow_hyphen_values = true)]
    pub t_hat: f64,
    #[arg(long, default_value_t = 0.005, allow_hyphen_values = true)]
    pub sigma_model: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub distance: f64,
    #[arg(long, default_value_t = 9.81, allow_hyphen_values = true)]
    pub prior_mean: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub prior_sd: f64,
    /// Outer draws of zeta
    #[arg(long, default_value_t = 2_000)]
    pub m: usize,
    /// Inner draws of y per zeta
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exit with status 4 when any check fails
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("inference failed: {0}")]
    Inference(String),
    #[error("consistency check failed: {0}")]
    ConsistencyFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Inference(_) => 3,
            CliError::ConsistencyFailed(_) => 4,
            CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }

    fn labelled(label: &str, e: UevError) -> Self {
        match CliError::from(e) {
            CliError::Config(m) => CliError::Config(format!("{label}: {m}")),
            CliError::Inference(m) => CliError::Inference(format!("{label}: {m}")),
            other => other,
        }
    }
}

impl From<UevError> for CliError {
    fn from(e: UevError) -> Self {
        use UevError::*;
        match e {
            InvalidParameter(_) | DomainError(_) | InvalidTable(_) | DimensionMismatch { .. }
            | BudgetTooSmall(_) | TooFewDraws(_) | UnsupportedCombination(_) => CliError::Config(e.to_string()),
            _ => CliError::Inference(e.to_string()),
        }
    }
}

/// What a command produced: files written and a short human-readable summary.
#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn run(cli: Cli) -> Result<RunOutput, CliError> {
    match cli.command {
        Command::Gaussian(a) => run_gaussian(&a),
        Command::BallDrop(a) => run_ball_drop(&a),
        Command::Discrete(a) => run_discrete(&a),
        Command::CheckConsistency(a) => run_check_consistency(&a),
    }
}

/// Engine settings shared by the Monte Carlo paths. `n` is the draw budget per
/// method; Jeffrey's rule splits it evenly over its `n_e` components.
#[derive(Debug, Clone, Copy, Serialize)]
pub(crate) struct Budget {
    pub engine: EngineArg,
    pub n: usize,
    pub n_e: usize,
    pub step_scale: f64,
}

impl Budget {
    fn config(&self, method: Method, master_seed: u64) -> Result<uev_core::EngineConfig, CliError> {
        if self.n == 0 || self.n_e == 0 {
            return Err(CliError::Config("--n and --n-e must be at least 1".into()));
        }
        if self.engine == EngineArg::Mh && !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(CliError::Config("--step-scale must be positive".into()));
        }
        let n = match method {
            Method::Jeffrey => (self.n / self.n_e).max(1),
            _ => self.n,
        };
        let seed = method.seed(master_seed);
        let cfg = match self.engine {
            EngineArg::Snis => uev_core::EngineConfig::snis(n, seed),
            EngineArg::Mh => uev_core::EngineConfig::mh(n, self.step_scale, seed),
        };
        Ok(cfg.with_n_e(self.n_e))
    }
}

/// Runs one rule on `model` for evidence centred at `zeta`: `q(y) = N(zeta, sigma_q^2)`
/// for Jeffrey and distributional evidence, `q(zeta | y) = N(zeta; y, sigma_qzeta^2)`
/// for virtual evidence.
pub(crate) fn infer_method(
    model: &uev_core::BaseModel,
    method: Method,
    zeta: f64,
    sigma_q: f64,
    sigma_qzeta: f64,
    budget: &Budget,
    master_seed: u64,
) -> Result<uev_core::WeightedSamples, CliError> {
    use uev_core::density::Density;
    use uev_core::montecarlo::{distributional_infer, jeffrey_mixture_infer, virtual_infer};
    let cfg = budget.config(method, master_seed)?;
    let label = |e| CliError::labelled(method.name(), e);
    let q = uev_core::Normal::new(zeta, sigma_q).map_err(label)?;
    match method {
        Method::Jeffrey => jeffrey_mixture_infer(model, &q, &cfg),
        Method::Virtual => {
            let v = uev_core::Normal::new(zeta, sigma_qzeta).map_err(label)?;
            virtual_infer(model, &|y: &[f64]| v.log_pdf(y), &cfg)
        }
        Method::Distributional => {
            distributional_infer(model, &q, &cfg, uev_core::DistributionalMode::Pseudo, None)
        }
        Method::All => unreachable!("expanded before dispatch"),
    }
    .map_err(label)
}
