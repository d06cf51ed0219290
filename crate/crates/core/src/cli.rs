//! Command implementations for the `minepool` binary.
//!
//! Every command returns the text it would print; [`run`] maps library errors
//! to exit codes: 2 for bad input, 3 for a rule that pays out more than it
//! earns.
//!
//! CSV schemas are fixed:
//!
//! * sweep: `alpha,scheme,param,analytic_utility,sim_utility,sim_se`
//! * per-share estimates: `k,mean,se`
//! * payoff: `offset,geometric_weight,pplns_weight`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::allocation::{truncation_depth, AllocationRule, RuleSpec};
use crate::analytic::{
    fixed_rule_steady_state_utility, geometric_optimal_rule, geometric_steady_state_utility,
    optimal_pplns_n, proportional_pay_expected_utility,
};
use crate::error::Error;
use crate::model::{PoolParams, UtilityFunction};
use crate::simulator::{convergence_report, simulate, Scheme, SimConfig, UkEstimates, WINDOW_EPS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SWEEP_HEADER: &str = "alpha,scheme,param,analytic_utility,sim_utility,sim_se";
pub const PER_K_HEADER: &str = "k,mean,se";
pub const PAYOFF_HEADER: &str = "offset,geometric_weight,pplns_weight";

/// Precision used by analytic evaluations in reports.
const REPORT_EPS: f64 = 1e-9;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Ponzi { .. } => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<String, CliError>;

#[derive(Debug, Parser)]
#[command(name = "minepool", version, about = "Optimal mining-pool reward allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal PPLNS window, optimal geometric rule and solo utility.
    Optimize(OptimizeArgs),
    /// Steady-state utility of a fixed rule.
    Evaluate(EvaluateArgs),
    /// Monte Carlo run from a config file; writes per_k.csv and report.json.
    Simulate(SimulateArgs),
    /// Utility of each scheme across risk parameters, as CSV.
    Sweep(SweepArgs),
    /// Per-offset payout fractions of the geometric and PPLNS rules, as CSV.
    Payoff(PayoffArgs),
    /// Runs the invariant checks on a rule.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Probability that a share is a block.
    #[arg(long, default_value_t = 1e-3)]
    pub p: f64,
    /// Per-share discount factor.
    #[arg(long, default_value_t = 0.999)]
    pub delta: f64,
    /// Block reward.
    #[arg(long = "reward", alias = "B", default_value_t = 1e3)]
    pub reward: f64,
}

impl EnvArgs {
    fn params(&self) -> Result<PoolParams, Error> {
        PoolParams::new(self.p, self.reward, self.delta)
    }
}

#[derive(Debug, Clone, Args)]
pub struct UtilityArgs {
    /// Exponent of the power utility x^alpha.
    #[arg(long, conflicts_with = "utility")]
    pub alpha: Option<f64>,
    /// Utility spec: `power:<alpha>` or `log1p`.
    #[arg(long)]
    pub utility: Option<String>,
}

impl UtilityArgs {
    fn resolve(&self) -> Result<UtilityFunction, Error> {
        match (&self.utility, self.alpha) {
            (Some(spec), _) => spec.parse(),
            (None, Some(alpha)) => UtilityFunction::power(alpha),
            (None, None) => UtilityFunction::power(0.5),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RuleArgs {
    /// Rule as JSON, e.g. '{"kind":"pplns","n":125}'.
    #[arg(long, conflicts_with = "rule_file")]
    pub rule: Option<String>,
    /// File holding the rule JSON.
    #[arg(long)]
    pub rule_file: Option<PathBuf>,
}

impl RuleArgs {
    fn resolve(&self) -> Result<AllocationRule, Error> {
        let text = match (&self.rule, &self.rule_file) {
            (Some(text), _) => text.clone(),
            (None, Some(path)) => fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            (None, None) => return Err(Error::Config("one of --rule, --rule-file is required".into())),
        };
        AllocationRule::from_json(&text)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub rule: RuleArgs,
    #[command(flatten)]
    pub utility: UtilityArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value_t = REPORT_EPS)]
    pub eps: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Config file: JSON, or TOML `key = value` lines.
    pub config: PathBuf,
    /// Directory receiving per_k.csv and report.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub shares: Option<usize>,
    #[arg(long)]
    pub report_k: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "reward")]
    pub reward: Option<f64>,
    #[command(flatten)]
    pub utility: UtilityArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimOptions {
    /// Skip simulation and emit analytic values only.
    #[arg(long)]
    pub no_sim: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub shares: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    )]
    pub alphas: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "solo,pplns_min,pplns_opt,geometric,proportional"
    )]
    pub schemes: Vec<String>,
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub sim: SimOptions,
}

#[derive(Debug, Clone, Args)]
pub struct PayoffArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.999)]
    pub delta: f64,
    #[arg(long = "reward", default_value_t = 1e3)]
    pub reward: f64,
    /// PPLNS window; defaults to the optimal window.
    #[arg(long)]
    pub n: Option<u64>,
    /// Last offset emitted; defaults to twice the PPLNS window.
    #[arg(long)]
    pub max_offset: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub rule: RuleArgs,
    #[command(flatten)]
    pub utility: UtilityArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 200_000)]
    pub shares: usize,
    #[arg(long, default_value_t = 4)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Payoff(a) => cmd_payoff(&a),
        Command::Check(a) => cmd_check(&a),
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn cmd_optimize(args: &OptimizeArgs) -> CmdResult {
    let params = args.env.params()?;
    let alpha = args.alpha;
    let pplns = optimal_pplns_n(alpha, params.delta())?;
    let solo_utility = params.p() * params.block_reward().powf(alpha);
    let geometric = if alpha < 1.0 {
        let rule = geometric_optimal_rule(params.block_reward(), alpha, params.delta())?;
        let AllocationRule::Geometric { c, r } = rule else {
            unreachable!("optimal rule is geometric")
        };
        json!({
            "rule": rule,
            "c": c,
            "r": r,
            "utility": geometric_steady_state_utility(&params, alpha)?,
            "degenerate_to": null,
        })
    } else {
        json!({
            "rule": AllocationRule::Solo,
            "c": 1.0,
            "r": 0.0,
            "utility": solo_utility,
            "degenerate_to": "solo",
        })
    };
    Ok(pretty(&json!({
        "version": VERSION,
        "inputs": { "alpha": alpha, "params": params },
        "results": {
            "solo": { "rule": AllocationRule::Solo, "utility": solo_utility },
            "pplns": {
                "n_real": pplns.n_real,
                "n_int": pplns.n_int,
                "utility": pplns.utility(&params, alpha),
                "rule": pplns.rule(),
            },
            "geometric": geometric,
        }
    })))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    let rule = args.rule.resolve()?;
    let u = args.utility.resolve()?;
    let params = args.env.params()?;
    let mass = rule.mass()?;
    let depth = truncation_depth(&rule, &params, &u, args.eps)?;
    let utility = fixed_rule_steady_state_utility(&rule, &params, &u, args.eps)?;
    Ok(pretty(&json!({
        "version": VERSION,
        "inputs": {
            "rule": rule,
            "utility": u.to_string(),
            "params": params,
            "eps": args.eps,
        },
        "results": {
            "utility": utility,
            "mass": mass,
            "truncation_depth": depth,
        }
    })))
}

fn default_p() -> f64 {
    1e-3
}
fn default_reward() -> f64 {
    1e3
}
fn default_delta() -> f64 {
    0.999
}
fn default_shares() -> usize {
    1_000_000
}
fn default_trials() -> usize {
    20
}
fn default_report_k() -> usize {
    100
}
fn default_steady_window() -> f64 {
    0.5
}

/// On-disk simulation configuration. Omitted fields take the desk defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_reward", alias = "B")]
    pub block_reward: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub utility: Option<String>,
    pub rule: RuleSpec,
    #[serde(default = "default_shares")]
    pub num_shares: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_report_k")]
    pub report_k: usize,
    #[serde(default = "default_steady_window")]
    pub steady_window: f64,
}

impl SimFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
        }
    }

    fn apply(&mut self, args: &SimulateArgs) {
        if let Some(v) = args.seed {
            self.seed = v;
        }
        if let Some(v) = args.trials {
            self.trials = v;
        }
        if let Some(v) = args.shares {
            self.num_shares = v;
        }
        if let Some(v) = args.report_k {
            self.report_k = v;
        }
        if let Some(v) = args.p {
            self.p = v;
        }
        if let Some(v) = args.delta {
            self.delta = v;
        }
        if let Some(v) = args.reward {
            self.block_reward = v;
        }
        if let Some(v) = &args.utility.utility {
            self.utility = Some(v.clone());
            self.alpha = None;
        } else if let Some(v) = args.utility.alpha {
            self.alpha = Some(v);
            self.utility = None;
        }
    }

    pub fn to_config(&self) -> Result<SimConfig, Error> {
        let params = PoolParams::new(self.p, self.block_reward, self.delta)?;
        let utility = match (&self.utility, self.alpha) {
            (Some(spec), _) => spec.parse()?,
            (None, Some(alpha)) => UtilityFunction::power(alpha)?,
            (None, None) => UtilityFunction::power(0.5)?,
        };
        let scheme = Scheme::try_from(self.rule.clone())?;
        let mut cfg = SimConfig::new(params, utility, scheme);
        cfg.num_shares = self.num_shares;
        cfg.trials = self.trials;
        cfg.seed = self.seed;
        cfg.report_k = self.report_k;
        cfg.steady_window = self.steady_window;
        Ok(cfg)
    }
}

/// The analytic steady-state utility the simulation should reproduce.
pub fn analytic_reference(cfg: &SimConfig) -> Result<f64, Error> {
    match &cfg.scheme {
        Scheme::Fixed(rule) => {
            fixed_rule_steady_state_utility(rule, &cfg.params, &cfg.utility, REPORT_EPS)
        }
        Scheme::ProportionalPay => {
            proportional_pay_expected_utility(&cfg.params, &cfg.utility, REPORT_EPS)
        }
    }
}

pub fn per_k_csv(est: &UkEstimates) -> String {
    let mut out = String::from(PER_K_HEADER);
    out.push('\n');
    for k in &est.per_k {
        let _ = writeln!(out, "{},{:.10e},{:.10e}", k.k, k.mean, k.se);
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let mut file = SimFile::parse(&text)?;
    file.apply(args);
    let cfg = file.to_config()?;
    let est = simulate(&cfg)?;
    let analytic = analytic_reference(&cfg)?;
    let report = convergence_report(&est, Some(analytic));

    let mut summary = serde_json::to_value(&est).expect("estimates serialize");
    if let Some(obj) = summary.as_object_mut() {
        obj.remove("per_k");
    }
    let doc = pretty(&json!({
        "version": VERSION,
        "seed": cfg.seed,
        "inputs": file,
        "results": {
            "estimates": summary,
            "convergence": report,
        }
    }));
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", args.out_dir.display())))?;
    write_file(&args.out_dir.join("per_k.csv"), &per_k_csv(&est))?;
    write_file(&args.out_dir.join("report.json"), &doc)?;
    Ok(doc)
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub scheme: String,
    pub param: String,
    pub analytic_utility: f64,
    pub simulated_utility: Option<f64>,
    pub simulated_se: Option<f64>,
}

impl SweepRow {
    fn csv_line(&self) -> String {
        let sim = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        format!(
            "{},{},{},{:.10e},{},{}",
            self.alpha,
            self.scheme,
            self.param,
            self.analytic_utility,
            sim(self.simulated_utility),
            sim(self.simulated_se)
        )
    }
}

const SWEEP_SCHEMES: [&str; 5] = ["solo", "pplns_min", "pplns_opt", "geometric", "proportional"];

fn sweep_scheme(name: &str, alpha: f64, params: &PoolParams) -> Result<(Scheme, String, f64), Error> {
    let solo = params.p() * params.block_reward().powf(alpha);
    Ok(match name {
        "solo" => (Scheme::Fixed(AllocationRule::Solo), "n=1".into(), solo),
        "pplns_min" => (Scheme::Fixed(AllocationRule::Pplns { n: 1 }), "n=1".into(), solo),
        "pplns_opt" => {
            let opt = optimal_pplns_n(alpha, params.delta())?;
            (Scheme::Fixed(opt.rule()), format!("n={}", opt.n_int), opt.utility(params, alpha))
        }
        "geometric" if alpha < 1.0 => {
            let rule = geometric_optimal_rule(params.block_reward(), alpha, params.delta())?;
            let AllocationRule::Geometric { c, r } = rule else {
                unreachable!("optimal rule is geometric")
            };
            let utility = geometric_steady_state_utility(params, alpha)?;
            (Scheme::Fixed(rule), format!("c={c:e};r={r:e}"), utility)
        }
        "geometric" => (Scheme::Fixed(AllocationRule::Solo), "solo".into(), solo),
        "proportional" => {
            let u = UtilityFunction::power(alpha)?;
            let utility = proportional_pay_expected_utility(params, &u, REPORT_EPS)?;
            (Scheme::ProportionalPay, "-".into(), utility)
        }
        other => {
            return Err(Error::domain(
                "schemes",
                format!("unknown scheme `{other}`; expected one of {}", SWEEP_SCHEMES.join(", ")),
            ))
        }
    })
}

/// Builds the sweep rows; simulations share one seed across rows.
pub fn sweep_rows(args: &SweepArgs) -> Result<Vec<SweepRow>, Error> {
    let params = args.env.params()?;
    let mut rows = Vec::new();
    for &alpha in &args.alphas {
        let u = UtilityFunction::power(alpha)?;
        for name in &args.schemes {
            let (scheme, param, analytic_utility) = sweep_scheme(name, alpha, &params)?;
            let (simulated_utility, simulated_se) = if args.sim.no_sim {
                (None, None)
            } else {
                let mut cfg = SimConfig::new(params, u.clone(), scheme);
                cfg.num_shares = args.sim.shares;
                cfg.trials = args.sim.trials;
                cfg.seed = args.sim.seed;
                let est = simulate(&cfg)?;
                (Some(est.steady_mean), Some(est.steady_se))
            };
            rows.push(SweepRow {
                alpha,
                scheme: name.clone(),
                param,
                analytic_utility,
                simulated_utility,
                simulated_se,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let rows = sweep_rows(args)?;
    let mut out = String::new();
    if !args.sim.no_sim {
        let _ = writeln!(
            out,
            "# minepool {VERSION} seed={} shares={} trials={}",
            args.sim.seed, args.sim.shares, args.sim.trials
        );
    }
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_payoff(args: &PayoffArgs) -> CmdResult {
    let params = PoolParams::new(1.0, args.reward, args.delta)?;
    let geometric = if args.alpha < 1.0 {
        geometric_optimal_rule(params.block_reward(), args.alpha, params.delta())?
    } else {
        crate::model::validate_alpha(args.alpha)?;
        AllocationRule::Solo
    };
    let n = match args.n {
        Some(n) => n,
        None => optimal_pplns_n(args.alpha, params.delta())?.n_int,
    };
    let pplns = AllocationRule::pplns(n)?;
    let max_offset = args
        .max_offset
        .unwrap_or_else(|| usize::try_from(2 * n).unwrap_or(usize::MAX));
    let mut out = String::from(PAYOFF_HEADER);
    out.push('\n');
    for i in 0..=max_offset {
        let _ = writeln!(out, "{i},{:.10e},{:.10e}", geometric.weight(i), pplns.weight(i));
    }
    Ok(out)
}

pub fn cmd_check(args: &CheckArgs) -> CmdResult {
    let rule = args.rule.resolve()?;
    let u = args.utility.resolve()?;
    let params = args.env.params()?;
    let mass = rule.mass()?;
    if !(args.eps > 0.0) {
        return Err(Error::domain("eps", format!("{} is not positive", args.eps)).into());
    }

    let depth = truncation_depth(&rule, &params, &u, args.eps)?;
    let sample = depth.max(rule.natural_window().unwrap_or(0));
    let nonnegative = (0..sample).all(|i| rule.weight(i) >= 0.0);
    let full = fixed_rule_steady_state_utility(&rule, &params, &u, args.eps * 1e-3)?;
    let truncated = fixed_rule_steady_state_utility(&rule.truncated(depth), &params, &u, args.eps)?;
    let truncation_gap = (full - truncated).abs();

    let mut cfg = SimConfig::new(params, u.clone(), Scheme::Fixed(rule.clone()));
    cfg.num_shares = args.shares;
    cfg.trials = args.trials;
    cfg.seed = args.seed;
    let est = simulate(&cfg)?;
    let report = convergence_report(&est, Some(full));

    let checks = json!([
        { "name": "weights_nonnegative", "passed": nonnegative },
        { "name": "mass_at_most_one", "passed": true, "mass": mass },
        {
            "name": "truncation_within_eps",
            "passed": truncation_gap <= args.eps,
            "depth": depth,
            "gap": truncation_gap,
        },
        {
            "name": "steady_state_converged",
            "passed": report.converged,
            "drift": report.drift,
            "drift_se": report.drift_se,
        },
        {
            "name": "balanced",
            "passed": report.balance_ok,
            "mean_reward_per_share": report.mean_reward_per_share,
            "bound": params.p() * params.block_reward(),
        },
        {
            "name": "simulation_matches_analytic",
            "passed": report.z_score.is_some_and(|z| z.abs() <= 3.0),
            "analytic": full,
            "simulated": report.steady_mean,
            "se": report.steady_se,
        },
    ]);
    let all_passed = checks
        .as_array()
        .expect("array literal")
        .iter()
        .all(|c| c["passed"] == json!(true));
    Ok(pretty(&json!({
        "version": VERSION,
        "seed": args.seed,
        "inputs": {
            "rule": rule,
            "utility": u.to_string(),
            "params": params,
            "eps": args.eps,
            "window": WINDOW_EPS,
        },
        "results": { "all_passed": all_passed, "checks": checks },
    })))
}
