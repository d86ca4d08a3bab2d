use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Calibration tests for binary risk predictions based on cumulative
/// prediction errors.
#[derive(Parser, Debug)]
#[command(name = "cumcal", version, about, long_about = None)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the BM, BB, Hosmer-Lemeshow and weak-calibration tests on a CSV
    /// file and write a JSON report and plots.
    Test(TestArgs),
    /// Run a null or power simulation study.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Re-render figures from a saved report or study.
    Plot(PlotArgs),
    /// Synthetic two-model demonstration (large versus small development
    /// sample).
    Casestudy(CaseStudyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Directory for reports and figures.
    #[arg(long, env = "CUMCAL_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Skip writing SVG figures.
    #[arg(long)]
    pub no_plots: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Column holding predicted risks.
    #[arg(long, default_value = "p")]
    pub prediction_column: String,
    /// Column holding 0/1 outcomes.
    #[arg(long, default_value = "y")]
    pub outcome_column: String,
    /// Clamp predictions into [eps, 1 - eps] instead of rejecting 0 and 1.
    #[arg(long, value_name = "EPS")]
    pub clamp: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfRuleArg {
    /// G - 2 degrees of freedom.
    GMinus2,
    /// G degrees of freedom.
    G,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Input CSV with a header row.
    pub input: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Hosmer-Lemeshow groups (0 skips the test).
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    /// Hosmer-Lemeshow degrees of freedom; `g` suits predictions from a
    /// model that was not fitted to this file.
    #[arg(long, value_enum, default_value_t = DfRuleArg::GMinus2)]
    pub df_rule: DfRuleArg,
    /// Significance level for critical lines in plots.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also run the Monte Carlo tests with this many replications.
    #[arg(long, value_name = "N")]
    pub mc: Option<usize>,
    /// Seed for the Monte Carlo tests.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Run replicate loops on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug)]
pub enum SimulateCommand {
    /// Null behaviour: predictions logit(π) = β0 + X, Y ~ Bernoulli(π).
    Null(NullArgs),
    /// Power under logit-linear or logit-power miscalibration.
    Power(PowerArgs),
}

#[derive(Args, Debug, Clone)]
pub struct StudyCommon {
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    pub n: Option<Vec<usize>>,
    /// Replications per cell.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key = value` file supplying any of the grid flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct NullArgs {
    /// Intercepts, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_real)]
    pub beta0: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: StudyCommon,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyArg {
    LogitLinear,
    LogitPower,
}

#[derive(Args, Debug)]
pub struct PowerArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Calibration intercepts, comma separated; fractions like -1/8 allowed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_real)]
    pub a: Option<Vec<f64>>,
    /// Calibration slopes, comma separated; fractions like 4/3 allowed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_real)]
    pub b: Option<Vec<f64>>,
    /// Hosmer-Lemeshow groups.
    #[arg(long)]
    pub groups: Option<usize>,
    /// Hosmer-Lemeshow degrees of freedom [default: g].
    #[arg(long, value_enum)]
    pub df_rule: Option<DfRuleArg>,
    #[command(flatten)]
    pub common: StudyCommon,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Analysis report written by `cumcal test`.
    #[arg(long, requires = "data", conflicts_with = "study", required_unless_present = "study")]
    pub report: Option<PathBuf>,
    /// CSV the report was computed from.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Study JSON written by `cumcal simulate`.
    #[arg(long)]
    pub study: Option<PathBuf>,
    #[command(flatten)]
    pub columns: DataArgs,
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Directory for figures.
    #[arg(long, env = "CUMCAL_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CaseStudyArgs {
    #[arg(long, default_value_t = 2)]
    pub seed: u64,
    #[arg(long, default_value_t = 20_000)]
    pub development_size: usize,
    #[arg(long, default_value_t = 500)]
    pub small_size: usize,
    #[arg(long, default_value_t = 10_000)]
    pub holdout_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Real number or simple fraction such as `-1/8`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            if den == 0.0 {
                return Err(format!("{s:?}: zero denominator"));
            }
            num / den
        }
        None => s.parse().map_err(|e| format!("{s:?}: {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn parse_size(s: &str) -> Result<usize, String> {
    s.trim().replace('_', "").parse().map_err(|e| format!("{s:?}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
