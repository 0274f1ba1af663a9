//! Self-validation oracles: brute-force checks that the closed-form pieces
//! of the simulator actually optimize what they claim to, that settlement
//! follows the uniform-threshold law, and that nobody loses at the
//! break-even floor. The `validate` CLI subcommand runs these and reports a
//! margin per check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::forward::{forward_outcome, user_demand};
use crate::market::{payoff, DemandRealization, MarketConfig};
use crate::montecarlo::{step_realization, summarize_realization, Scheme};
use crate::reverse::{
    expected_bid_payoff, indifference_price, optimal_bid, settle, PminPolicy, ReverseSetup,
};
use crate::scenario::ScenarioConfig;

/// Outcome of one oracle check. `margin` is slack before failure: the
/// tolerance minus the worst error observed, so any negative margin fails.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

/// Argmax of `f` on `[lo, hi]`: a coarse grid scan followed by a ternary
/// refinement inside the bracketing cells. Only evaluates `f`, so it stays
/// independent of any closed form it is checking.
pub fn refined_argmax<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid_points: usize) -> f64 {
    debug_assert!(grid_points >= 2 && hi >= lo);
    if hi == lo {
        return lo;
    }
    let step = (hi - lo) / grid_points as f64;
    let mut best_index = 0;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..=grid_points {
        let x = lo + step * i as f64;
        let y = f(x);
        if y > best_value {
            best_value = y;
            best_index = i;
        }
    }
    let mut a = lo + step * best_index.saturating_sub(1) as f64;
    let mut b = lo + step * (best_index + 1).min(grid_points) as f64;
    while b - a > 1e-10 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    0.5 * (a + b)
}

/// Worst distance between a bid rule and the grid argmax of the expected bid
/// payoff, over randomized participant states. Parameterizing the rule keeps
/// a negative control possible: a corrupted rule must trip the check.
pub(crate) fn bid_rule_worst_error<F>(bid_rule: F, instances: usize, grid: usize, seed: u64) -> f64
where
    F: Fn(f64, f64, f64, f64, f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let theta: f64 = rng.gen_range(0.2..20.0);
        let posted = theta * rng.gen_range(0.05..0.95);
        let s = user_demand(theta, posted).unwrap();
        if s <= 1e-6 {
            continue;
        }
        let x = s * rng.gen_range(1.001..3.0);
        let v = indifference_price(theta, x, s, posted).unwrap();
        let min_price = v * rng.gen_range(0.0..1.0);
        let closed = bid_rule(theta, x, s, posted, min_price);
        let oracle = refined_argmax(
            |b| expected_bid_payoff(b, theta, x, s, posted, min_price).unwrap(),
            min_price,
            posted,
            grid,
        );
        worst = worst.max((closed - oracle).abs());
    }
    worst
}

/// Worst distance between the demand rule and the grid argmax of the payoff,
/// over randomized (theta, price) pairs.
pub(crate) fn demand_rule_worst_error<F>(
    demand_rule: F,
    instances: usize,
    grid: usize,
    seed: u64,
) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        // Prices between 8% and 130% of theta keep the payoff maximum sharp
        // enough for a value-comparison oracle to localize it; far below that
        // the log payoff is flat at the top beyond f64 resolution. Ratios
        // above one exercise the clamp-to-zero branch.
        let theta: f64 = rng.gen_range(0.05..30.0);
        let ratio: f64 = rng.gen_range(0.08..1.3);
        if (0.95..1.05).contains(&ratio) {
            continue;
        }
        let price = theta * ratio;
        let closed = demand_rule(theta, price);
        let span = 4.0 * closed + 4.0;
        let oracle = refined_argmax(|q| payoff(theta, q, price).unwrap(), 0.0, span, grid);
        worst = worst.max((closed - oracle).abs());
    }
    worst
}

fn check_bid_optimality(seed: u64) -> CheckReport {
    const TOL: f64 = 1e-6;
    let worst = bid_rule_worst_error(
        |theta, x, s, p, pmin| optimal_bid(theta, x, s, p, pmin).unwrap(),
        200,
        10_000,
        seed,
    );
    CheckReport {
        name: "bid_optimality",
        passed: worst <= TOL,
        margin: TOL - worst,
        detail: format!("max |closed-form bid - grid argmax| = {worst:.3e} over 200 instances"),
    }
}

fn check_demand_optimality(seed: u64) -> CheckReport {
    const TOL: f64 = 1e-6;
    let worst = demand_rule_worst_error(
        |theta, price| user_demand(theta, price).unwrap(),
        200,
        10_000,
        seed,
    );
    CheckReport {
        name: "demand_optimality",
        passed: worst <= TOL,
        margin: TOL - worst,
        detail: format!("max |closed-form demand - grid argmax| = {worst:.3e} over 200 instances"),
    }
}

fn check_acceptance_statistics(seed: u64) -> CheckReport {
    // Fixed single-user setup, fixed bid, many threshold draws: the
    // acceptance frequency must match (b - pmin)/(p - pmin) within 3
    // binomial standard errors.
    let config = MarketConfig::new(10.0, 1, 1).unwrap();
    let realization = DemandRealization { theta: vec![3.0] };
    let outcome = forward_outcome(&realization, 1.0, &config).unwrap();
    let setup = ReverseSetup::build(&outcome, PminPolicy::Absolute(0.4), &config).unwrap();
    let bid = 0.7;
    let expected = (bid - setup.min_price) / (setup.posted_price - setup.min_price);
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xda94_2042_e4dd_58b5);
    let mut wins = 0usize;
    for _ in 0..draws {
        let result = settle(&realization, &setup, &outcome.demands, &[bid], &mut rng).unwrap();
        if result.accepted[0] {
            wins += 1;
        }
    }
    let freq = wins as f64 / draws as f64;
    let se = (expected * (1.0 - expected) / draws as f64).sqrt();
    let err = (freq - expected).abs();
    CheckReport {
        name: "acceptance_statistics",
        passed: err <= 3.0 * se,
        margin: 3.0 * se - err,
        detail: format!(
            "|freq - prob| = {err:.3e} vs 3 SE = {:.3e} over {draws} draws",
            3.0 * se
        ),
    }
}

fn check_dominance_invariants(cfg: &ScenarioConfig) -> Result<CheckReport> {
    // At the break-even floor, every accepted trade must pay at least the
    // posted-price payment and leave the user at least as well off, capacity
    // must hold, and slot totals must dominate the forward baseline.
    let market = cfg.market()?;
    let model = cfg.demand_model()?;
    let realizations = cfg.num_realizations.min(500);
    let mut min_slack = f64::INFINITY;
    let mut trades = 0usize;
    for slot in 0..market.num_slots {
        for r in 0..realizations {
            let fwd = step_realization(
                &market,
                &model,
                slot,
                Scheme::ForwardOnly,
                PminPolicy::BreakEven,
                cfg.master_seed,
                r,
            )?;
            let rev = step_realization(
                &market,
                &model,
                slot,
                Scheme::ReverseOnForward,
                PminPolicy::BreakEven,
                cfg.master_seed,
                r,
            )?;
            let settled = rev.settlement.as_ref().expect("reverse scheme settles");
            let total: f64 = settled.allocations.iter().sum();
            if total > market.total_resource {
                return Ok(CheckReport {
                    name: "dominance_invariants",
                    passed: false,
                    margin: market.total_resource - total,
                    detail: format!("capacity exceeded at slot {slot}, realization {r}"),
                });
            }
            for i in 0..market.num_users {
                if settled.accepted[i] {
                    trades += 1;
                    let pay_slack = settled.payments[i] - fwd.forward.payments[i];
                    let payoff_slack = settled.payoffs[i] - fwd.forward.payoffs[i];
                    min_slack = min_slack.min(pay_slack).min(payoff_slack);
                }
            }
            let f = summarize_realization(&fwd);
            let v = summarize_realization(&rev);
            min_slack = min_slack
                .min(v.revenue - f.revenue)
                .min(v.payoff - f.payoff)
                .min(v.demand - f.demand);
        }
    }
    if !min_slack.is_finite() {
        min_slack = 0.0;
    }
    Ok(CheckReport {
        name: "dominance_invariants",
        passed: min_slack >= 0.0,
        margin: min_slack,
        detail: format!(
            "min slack {min_slack:.3e} over {trades} accepted trades, {} slots x {realizations} realizations",
            market.num_slots
        ),
    })
}

/// Runs the full oracle suite for a scenario. Every report carries the
/// measured margin; the suite passes only if every check does.
pub fn run_validation(cfg: &ScenarioConfig) -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_bid_optimality(cfg.master_seed),
        check_demand_optimality(cfg.master_seed),
        check_acceptance_statistics(cfg.master_seed),
        check_dominance_invariants(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ThetaHighRule;

    fn benchmark_cfg() -> ScenarioConfig {
        ScenarioConfig {
            num_users: 100,
            total_resource: 1000.0,
            num_slots: 10,
            theta_low: 1.0,
            theta_high_rule: ThetaHighRule::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            p_min_policy: PminPolicy::BreakEven,
            num_realizations: 100,
            master_seed: 42,
            sweep_slot: None,
            sweep_ratios: None,
        }
    }

    #[test]
    fn default_scenario_passes_every_check() {
        let reports = run_validation(&benchmark_cfg()).unwrap();
        assert_eq!(reports.len(), 4);
        for report in &reports {
            assert!(
                report.passed,
                "{} failed: {} (margin {:.3e})",
                report.name, report.detail, report.margin
            );
        }
    }

    #[test]
    fn corrupted_bid_rule_fails_the_oracle() {
        // Negative control: a lowballing rule must be caught by the grid search.
        let worst = bid_rule_worst_error(
            |_theta, _x, _s, _p, pmin| pmin,
            50,
            2_000,
            7,
        );
        assert!(worst > 1e-6, "corrupted rule slipped past the oracle: {worst}");

        // A slightly biased rule must be caught too.
        let worst = bid_rule_worst_error(
            |theta, x, s, p, pmin| optimal_bid(theta, x, s, p, pmin).unwrap() + 1e-4 * (p - pmin),
            50,
            2_000,
            7,
        );
        assert!(worst > 1e-6, "biased rule slipped past the oracle: {worst}");
    }

    #[test]
    fn zero_spread_scenario_still_validates() {
        let cfg = ScenarioConfig {
            theta_low: 3.0,
            theta_high_rule: ThetaHighRule::Constant(3.0),
            num_slots: 2,
            num_realizations: 20,
            ..benchmark_cfg()
        };
        let reports = run_validation(&cfg).unwrap();
        for report in &reports {
            assert!(report.passed, "{} failed: {}", report.name, report.detail);
        }
    }
}
