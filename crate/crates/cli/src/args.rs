use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use heavycs::simulator::{EpsGreedyParams, ParetoParams};
use heavycs::{CsConfig, EnvConfig, EnvKind, HeavyParams, Method};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "heavycs",
    version,
    about = "Anytime-valid confidence sequences for heavy-tailed streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower (or off-policy two-sided) confidence sequence over a CSV stream.
    Cs(CsArgs),
    /// Emit a simulated off-policy stream as CSV.
    Simulate(SimulateArgs),
    /// Coverage audit over many seeded simulated streams.
    Audit(AuditArgs),
    /// Time updates and boundary evaluations of both methods.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ddrm,
    Eb,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ddrm => Method::Ddrm,
            MethodArg::Eb => Method::Eb,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Pareto,
    EpsGreedy,
}

/// Boundary hyperparameters shared by every command.
#[derive(Debug, Clone, Args)]
pub struct BoundaryArgs {
    /// Crossing probability.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Largest bet in the mixture.
    #[arg(long = "lambda-max", default_value_t = 0.5)]
    pub lambda_max: f64,
    /// Geometric spacing of the bet grid.
    #[arg(long, default_value_t = 1.6)]
    pub xi: f64,
    /// Weight decay exponent over moment orders.
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    /// Base of the sufficient-statistic grid.
    #[arg(long, default_value_t = 1.5)]
    pub k: f64,
    /// Moment-order parameter.
    #[arg(long, default_value_t = 0.95)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    /// Known upper bound on the conditional means.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

impl BoundaryArgs {
    pub fn config(&self) -> CliResult<CsConfig> {
        let config = CsConfig {
            params: HeavyParams {
                lambda_max: self.lambda_max,
                xi: self.xi,
                r: self.r,
                k: self.k,
                eta: self.eta,
                alpha: self.alpha,
            },
            method: self.method.into(),
            scale: self.scale,
            ..CsConfig::default()
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CsArgs {
    /// Input CSV with rows `t,x` or `t,w,r`; stdin when omitted or `-`.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Evaluate and emit every N-th step instead of the default cadence.
    #[arg(long)]
    pub every: Option<u64>,
    /// Report running maxima of the lower bounds instead of per-time values.
    #[arg(long = "running-max")]
    pub running_max: bool,
    /// Run each side of an off-policy interval at alpha rather than alpha/2.
    #[arg(long = "per-side-alpha")]
    pub per_side_alpha: bool,
}

/// Environment selection and its knobs.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Pareto)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pareto tail index in (1, 2).
    #[arg(long, default_value_t = 1.5)]
    pub shape: f64,
    /// Pareto environment reward probability.
    #[arg(long = "reward-mean", default_value_t = 0.5)]
    pub reward_mean: f64,
    /// Number of actions of the eps-greedy environment.
    #[arg(long, default_value_t = 20)]
    pub actions: usize,
    /// Exploration rate of the eps-greedy logger.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Target agreement with the greedy action; calibrated when omitted.
    #[arg(long)]
    pub agreement: Option<f64>,
    /// E[w^2] the agreement is calibrated to.
    #[arg(long = "second-moment", default_value_t = 10.0)]
    pub second_moment: f64,
}

impl EnvArgs {
    pub fn config(&self, horizon: u64) -> CliResult<EnvConfig> {
        let kind = match self.kind {
            KindArg::Pareto => EnvKind::Pareto(ParetoParams {
                shape: self.shape,
                reward_mean: self.reward_mean,
            }),
            KindArg::EpsGreedy => EnvKind::EpsGreedy(EpsGreedyParams {
                actions: self.actions,
                epsilon: self.epsilon,
                agreement: self.agreement,
                target_second_moment: self.second_moment,
                ..EpsGreedyParams::default()
            }),
        };
        let config = EnvConfig {
            kind,
            seed: self.seed,
            horizon,
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[arg(long, default_value_t = 1_000)]
    pub horizon: u64,
    /// Number of seeded streams, starting at --seed.
    #[arg(long, default_value_t = 200)]
    pub seeds: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of updates per method.
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: u64,
    /// Evaluate the boundary every N updates.
    #[arg(long, default_value_t = 100_000)]
    pub every: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
