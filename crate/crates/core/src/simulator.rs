//! Seeded Monte Carlo over Bernoulli share streams.
//!
//! Each trial draws `T` shares, each a block with probability `p`, pays every
//! block out under the pool's rule and records, per share, the realized
//! discounted utility `sum_i u(paid at offset i) delta^i` and the undiscounted
//! reward. Shares whose forward window runs past the end of the stream are
//! excluded from every estimate.
//!
//! Trial `j` draws from ChaCha8 seeded with `seed` on stream `j`. Trials run
//! in parallel and are reduced in trial order, so output depends only on the
//! configuration.
//!
//! When a fixed rule's window reaches back before the first share (pool
//! launch), the block's payout is spread over the shares that exist, in
//! proportion to their weights. This is what makes the first shares of a
//! PPLNS pool earn more than later ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{truncation_depth, AllocationRule, RuleSpec};
use crate::error::{Error, Result};
use crate::model::{CompensatedSum, PoolParams, UtilityFunction};

/// Geometric rules are truncated where they are this close to the full rule.
pub const WINDOW_EPS: f64 = 1e-9;
/// Contiguous batches the steady-state window is cut into for trend estimates.
pub const STEADY_BATCHES: usize = 20;

/// The payout scheme being simulated.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Fixed(AllocationRule),
    /// Each block is split evenly over the shares since the previous block.
    ProportionalPay,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Fixed(rule) => rule.name(),
            Scheme::ProportionalPay => "proportional",
        }
    }
}

impl TryFrom<RuleSpec> for Scheme {
    type Error = Error;

    fn try_from(spec: RuleSpec) -> Result<Self> {
        match spec {
            RuleSpec::Proportional => Ok(Scheme::ProportionalPay),
            other => AllocationRule::try_from(other).map(Scheme::Fixed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: PoolParams,
    pub utility: UtilityFunction,
    pub scheme: Scheme,
    pub num_shares: usize,
    pub trials: usize,
    pub seed: u64,
    /// Leading share indices reported individually.
    pub report_k: usize,
    /// Trailing fraction of counted shares averaged for the steady state.
    pub steady_window: f64,
}

impl SimConfig {
    /// A configuration with 10^6 shares, 20 trials, seed 0 and `report_k = 0`.
    pub fn new(params: PoolParams, utility: UtilityFunction, scheme: Scheme) -> Self {
        SimConfig {
            params,
            utility,
            scheme,
            num_shares: 1_000_000,
            trials: 20,
            seed: 0,
            report_k: 0,
            steady_window: 0.5,
        }
    }

    /// Forward window after which a share's payout is known.
    ///
    /// For proportional pay this is the horizon within which a round closes
    /// except with probability [`WINDOW_EPS`].
    pub fn window(&self) -> Result<usize> {
        match &self.scheme {
            Scheme::Fixed(rule) => truncation_depth(rule, &self.params, &self.utility, WINDOW_EPS),
            Scheme::ProportionalPay => {
                let h = (WINDOW_EPS.ln() / (-self.params.p()).ln_1p()).ceil();
                Ok(if h.is_finite() && h >= 1.0 { h as usize } else { 1 })
            }
        }
    }

    /// Number of shares with a complete forward window.
    pub fn counted_shares(&self) -> Result<usize> {
        let d = self.window()?;
        if self.num_shares < d {
            return Err(Error::Config(format!(
                "{} shares cannot cover a payout window of {d}",
                self.num_shares
            )));
        }
        Ok(self.num_shares - d + 1)
    }

    fn steady_start(&self, counted: usize) -> usize {
        ((1.0 - self.steady_window) * counted as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        if !(self.steady_window > 0.0 && self.steady_window < 1.0) {
            return Err(Error::Config(format!(
                "steady_window {} is not in (0, 1)",
                self.steady_window
            )));
        }
        if let Scheme::Fixed(rule) = &self.scheme {
            rule.mass()?;
        }
        let counted = self.counted_shares()?;
        if counted - self.steady_start(counted) < STEADY_BATCHES {
            return Err(Error::Config(format!(
                "steady window holds fewer than {STEADY_BATCHES} shares"
            )));
        }
        if self.report_k > counted {
            return Err(Error::Config(format!(
                "report_k {} exceeds the {counted} counted shares",
                self.report_k
            )));
        }
        Ok(())
    }
}

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().copied().collect::<CompensatedSum>().total() / n;
        if values.len() < 2 {
            return Estimate { mean, se: 0.0 };
        }
        let ss = values
            .iter()
            .map(|v| (v - mean).powi(2))
            .collect::<CompensatedSum>()
            .total();
        Estimate {
            mean,
            se: (ss / (n - 1.0) / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KEstimate {
    pub k: usize,
    pub mean: f64,
    pub se: f64,
}

/// Where each trial's block rewards went.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RewardLedger {
    pub blocks: u64,
    /// Paid to shares with complete forward windows.
    pub counted: f64,
    /// Paid to shares near the end of the stream.
    pub edge: f64,
    /// Kept by the pool (rules with mass below one, truncated tails).
    pub retained: f64,
}

impl RewardLedger {
    /// `|counted + edge + retained - B * blocks|` relative to `B * blocks`.
    pub fn relative_imbalance(&self, block_reward: f64) -> f64 {
        let minted = block_reward * self.blocks as f64;
        if minted == 0.0 {
            return (self.counted + self.edge + self.retained).abs();
        }
        ((self.counted + self.edge + self.retained) - minted).abs() / minted
    }
}

/// Trend diagnostics over the steady-state window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyTrend {
    /// OLS slope of batch-mean utility against share index.
    pub drift: f64,
    pub drift_se: f64,
    pub first_half: Estimate,
    pub second_half: Estimate,
}

/// Simulated estimates of the per-share utility sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UkEstimates {
    pub scheme: &'static str,
    pub params: PoolParams,
    pub seed: u64,
    pub trials: usize,
    pub num_shares: usize,
    pub window: usize,
    pub per_k: Vec<KEstimate>,
    pub steady_mean: f64,
    pub steady_se: f64,
    pub shares_counted: usize,
    pub trend: SteadyTrend,
    /// Undiscounted reward per counted share.
    pub reward: Estimate,
    pub ledgers: Vec<RewardLedger>,
}

struct TrialOutcome {
    head: Vec<f64>,
    steady_mean: f64,
    steady_batches: Vec<f64>,
    reward_mean: f64,
    reward_batches: Vec<f64>,
    ledger: RewardLedger,
}

fn draw_blocks(rng: &mut ChaCha8Rng, shares: usize, p: f64) -> Vec<usize> {
    (0..shares).filter(|_| rng.random_bool(p)).collect()
}

fn batch_means(values: &[f64]) -> Vec<f64> {
    let len = values.len();
    (0..STEADY_BATCHES)
        .map(|j| {
            let chunk = &values[j * len / STEADY_BATCHES..(j + 1) * len / STEADY_BATCHES];
            chunk.iter().copied().collect::<CompensatedSum>().total() / chunk.len() as f64
        })
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().total() / values.len() as f64
}

/// Pays out every block of a fixed rule; returns the amount the pool retained.
fn pay_fixed(
    rule: &AllocationRule,
    cfg: &SimConfig,
    depth: usize,
    blocks: &[usize],
    deu: &mut [f64],
    reward: &mut [f64],
) -> f64 {
    let b = cfg.params.block_reward();
    let delta = cfg.params.delta();
    let u = &cfg.utility;
    let weights: Vec<f64> = (0..depth).map(|i| rule.weight(i)).collect();
    let pay: Vec<f64> = weights.iter().map(|w| b * w).collect();
    let mut disc = 1.0;
    let gains: Vec<f64> = pay
        .iter()
        .map(|&x| {
            let g = u.value(x) * disc;
            disc *= delta;
            g
        })
        .collect();
    let window_mass = weights.iter().copied().collect::<CompensatedSum>().total();
    let paid_per_block = pay.iter().copied().collect::<CompensatedSum>().total();

    let mut retained = CompensatedSum::new();
    for &t in blocks {
        if t + 1 >= depth {
            let lo = t + 1 - depth;
            for (slot, g) in deu[lo..=t].iter_mut().rev().zip(&gains) {
                *slot += g;
            }
            for (slot, x) in reward[lo..=t].iter_mut().rev().zip(&pay) {
                *slot += x;
            }
            retained.add(b - paid_per_block);
        } else {
            // pool launch: only t + 1 shares exist
            let present: f64 = weights[..=t].iter().sum();
            if present == 0.0 {
                retained.add(b);
                continue;
            }
            let scale = window_mass / present;
            let mut paid = CompensatedSum::new();
            let mut disc = 1.0;
            for (i, w) in weights[..=t].iter().enumerate() {
                let amount = b * w * scale;
                deu[t - i] += u.value(amount) * disc;
                reward[t - i] += amount;
                paid.add(amount);
                disc *= delta;
            }
            retained.add(b - paid.total());
        }
    }
    retained.total()
}

/// Splits each block over its round; nothing is retained.
fn pay_proportional(cfg: &SimConfig, blocks: &[usize], deu: &mut [f64], reward: &mut [f64]) {
    let b = cfg.params.block_reward();
    let delta = cfg.params.delta();
    let mut start = 0;
    for &t in blocks {
        let amount = b / (t - start + 1) as f64;
        let gain = cfg.utility.value(amount);
        let mut disc = 1.0;
        for k in (start..=t).rev() {
            deu[k] += gain * disc;
            reward[k] += amount;
            disc *= delta;
        }
        start = t + 1;
    }
}

fn run_trial(cfg: &SimConfig, depth: usize, counted: usize, trial: usize) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let blocks = draw_blocks(&mut rng, cfg.num_shares, cfg.params.p());
    let mut deu = vec![0.0; cfg.num_shares];
    let mut reward = vec![0.0; cfg.num_shares];
    let retained = match &cfg.scheme {
        Scheme::Fixed(rule) => pay_fixed(rule, cfg, depth, &blocks, &mut deu, &mut reward),
        Scheme::ProportionalPay => {
            pay_proportional(cfg, &blocks, &mut deu, &mut reward);
            0.0
        }
    };

    let steady = &deu[cfg.steady_start(counted)..counted];
    let rewards = &reward[..counted];
    TrialOutcome {
        head: deu[..cfg.report_k].to_vec(),
        steady_mean: mean(steady),
        steady_batches: batch_means(steady),
        reward_mean: mean(rewards),
        reward_batches: batch_means(rewards),
        ledger: RewardLedger {
            blocks: blocks.len() as u64,
            counted: rewards.iter().copied().collect::<CompensatedSum>().total(),
            edge: reward[counted..].iter().copied().collect::<CompensatedSum>().total(),
            retained,
        },
    }
}

/// Across trials when there are several, else across batches of the single trial.
fn combine(per_trial: &[f64], batches: &[f64]) -> Estimate {
    if per_trial.len() >= 2 {
        Estimate::of(per_trial)
    } else {
        Estimate {
            mean: per_trial[0],
            se: Estimate::of(batches).se,
        }
    }
}

fn column_means(rows: &[&[f64]]) -> Vec<f64> {
    (0..rows[0].len())
        .map(|j| mean(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect()
}

/// Least-squares slope of `y` on `x` and its standard error.
fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    (slope, (ssr / (n - 2.0) / sxx).sqrt())
}

fn simulate_scheme(cfg: &SimConfig) -> Result<UkEstimates> {
    cfg.validate()?;
    let depth = cfg.window()?;
    let counted = cfg.counted_shares()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, depth, counted, trial))
        .collect();

    let r = outcomes.len() as f64;
    let per_k = (0..cfg.report_k)
        .map(|k| {
            let est = Estimate::of(&outcomes.iter().map(|o| o.head[k]).collect::<Vec<_>>());
            KEstimate {
                k,
                mean: est.mean,
                se: est.se,
            }
        })
        .collect();

    let steady_means: Vec<f64> = outcomes.iter().map(|o| o.steady_mean).collect();
    let steady_rows: Vec<&[f64]> = outcomes.iter().map(|o| o.steady_batches.as_slice()).collect();
    let profile = column_means(&steady_rows);
    let steady = combine(&steady_means, &profile);

    let start = cfg.steady_start(counted);
    let len = counted - start;
    let centers: Vec<f64> = (0..STEADY_BATCHES)
        .map(|j| {
            let lo = j * len / STEADY_BATCHES;
            let hi = (j + 1) * len / STEADY_BATCHES;
            start as f64 + 0.5 * (lo + hi - 1) as f64
        })
        .collect();
    let (drift, drift_se) = ols_slope(&centers, &profile);
    let half = STEADY_BATCHES / 2;

    let reward_means: Vec<f64> = outcomes.iter().map(|o| o.reward_mean).collect();
    let reward_rows: Vec<&[f64]> = outcomes.iter().map(|o| o.reward_batches.as_slice()).collect();
    let reward = combine(&reward_means, &column_means(&reward_rows));
    debug_assert!(r >= 1.0);

    Ok(UkEstimates {
        scheme: cfg.scheme.name(),
        params: cfg.params,
        seed: cfg.seed,
        trials: cfg.trials,
        num_shares: cfg.num_shares,
        window: depth,
        per_k,
        steady_mean: steady.mean,
        steady_se: steady.se,
        shares_counted: counted,
        trend: SteadyTrend {
            drift,
            drift_se,
            first_half: Estimate::of(&profile[..half]),
            second_half: Estimate::of(&profile[half..]),
        },
        reward,
        ledgers: outcomes.iter().map(|o| o.ledger).collect(),
    })
}

/// Simulates a fixed-rule pool.
pub fn simulate_fixed_rule(cfg: &SimConfig) -> Result<UkEstimates> {
    match cfg.scheme {
        Scheme::Fixed(_) => simulate_scheme(cfg),
        Scheme::ProportionalPay => Err(Error::Config(
            "proportional pay is simulated by simulate_proportional".into(),
        )),
    }
}

/// Simulates a round-based proportional-pay pool.
pub fn simulate_proportional(cfg: &SimConfig) -> Result<UkEstimates> {
    match cfg.scheme {
        Scheme::ProportionalPay => simulate_scheme(cfg),
        Scheme::Fixed(_) => Err(Error::Config(
            "fixed rules are simulated by simulate_fixed_rule".into(),
        )),
    }
}

/// Simulates whichever scheme the configuration names.
pub fn simulate(cfg: &SimConfig) -> Result<UkEstimates> {
    simulate_scheme(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceReport {
    pub mean_reward_per_share: f64,
    pub relative_se: f64,
    pub balance_ok: bool,
}

/// Checks that shares are not paid more than `p B` on average, up to three
/// relative standard errors.
pub fn balance_report(params: &PoolParams, reward: &Estimate) -> BalanceReport {
    let relative_se = if reward.mean > 0.0 {
        reward.se / reward.mean
    } else {
        0.0
    };
    let bound = params.p() * params.block_reward() * (1.0 + 3.0 * relative_se);
    BalanceReport {
        mean_reward_per_share: reward.mean,
        relative_se,
        balance_ok: reward.mean <= bound * (1.0 + 1e-12),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// The steady-state utility when the sequence converged, else 0.
    pub steady_state_utility: f64,
    pub steady_mean: f64,
    pub steady_se: f64,
    pub drift: f64,
    pub drift_se: f64,
    pub balance_ok: bool,
    pub mean_reward_per_share: f64,
    pub analytic: Option<f64>,
    /// `(steady_mean - analytic) / steady_se`.
    pub z_score: Option<f64>,
}

/// Converged when the late-window slope is within two standard errors of
/// zero and the two halves of the window agree within three pooled standard
/// errors.
pub fn convergence_report(est: &UkEstimates, analytic_hint: Option<f64>) -> ConvergenceReport {
    let t = &est.trend;
    let flat = t.drift.abs() <= 2.0 * t.drift_se;
    let pooled = t.first_half.se.hypot(t.second_half.se);
    let halves_agree = (t.first_half.mean - t.second_half.mean).abs() <= 3.0 * pooled;
    let converged = flat && halves_agree;
    let balance = balance_report(&est.params, &est.reward);
    let z_score = analytic_hint.map(|a| {
        let diff = est.steady_mean - a;
        if est.steady_se > 0.0 {
            diff / est.steady_se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    });
    ConvergenceReport {
        converged,
        steady_state_utility: if converged { est.steady_mean } else { 0.0 },
        steady_mean: est.steady_mean,
        steady_se: est.steady_se,
        drift: t.drift,
        drift_se: t.drift_se,
        balance_ok: balance.balance_ok,
        mean_reward_per_share: balance.mean_reward_per_share,
        analytic: analytic_hint,
        z_score,
    }
}
