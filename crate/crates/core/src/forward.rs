//! Posted ("forward") pricing: the operator's ex-ante unit price under demand
//! uncertainty and the users' demand response to it.

use crate::error::{Error, Result};
use crate::market::{payoff, DemandModel, DemandRealization, MarketConfig};

/// Result of one slot under the posted price: what each user buys, pays, and earns.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutcome {
    pub posted_price: f64,
    pub demands: Vec<f64>,
    pub payments: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub total_demand: f64,
}

/// Whether the posted price admits every user at every possible realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    /// Capacity is large enough that even the weakest user always buys.
    Holds,
    /// Some realization can price the weakest user out; demand clamps to zero there.
    Violated,
    /// The weakest user's willingness floor is zero, so no positive price admits everyone.
    Choked,
}

impl Admission {
    pub fn holds(self) -> bool {
        matches!(self, Admission::Holds)
    }

    pub fn choked(self) -> bool {
        matches!(self, Admission::Choked)
    }
}

/// The revenue-maximizing posted price that keeps worst-case aggregate demand
/// within capacity:
///
/// `p* = sum_i(mean_i + spread_i) / (Q + I)`
///
/// By construction the aggregate demand at the upper willingness bounds,
/// `sum_i((mean_i + spread_i)/p* - 1)`, equals `Q` exactly.
pub fn optimal_forward_price(
    model: &DemandModel,
    slot: usize,
    config: &MarketConfig,
) -> Result<f64> {
    model.check_slot(slot)?;
    check_users(model, config)?;
    let upper_sum: f64 = (0..model.num_users())
        .map(|u| model.mean(u, slot) + model.spread(u, slot))
        .sum();
    if !(upper_sum > 0.0) {
        return Err(Error::ZeroDemandSlot { slot });
    }
    Ok(upper_sum / (config.total_resource + config.num_users as f64))
}

/// Checks whether the posted price stays below every user's willingness floor,
/// i.e. `Q > sum_i(mean_i + spread_i) / min_i(mean_i - spread_i) - I`.
///
/// When this holds, every user buys a positive amount in every realization.
/// The simulation proceeds either way; a violation only means some users can
/// be priced out at unlucky draws.
pub fn admission_condition(
    model: &DemandModel,
    slot: usize,
    config: &MarketConfig,
) -> Result<Admission> {
    model.check_slot(slot)?;
    check_users(model, config)?;
    let mut upper_sum = 0.0;
    let mut min_floor = f64::INFINITY;
    for u in 0..model.num_users() {
        upper_sum += model.mean(u, slot) + model.spread(u, slot);
        min_floor = min_floor.min(model.mean(u, slot) - model.spread(u, slot));
    }
    if min_floor <= 0.0 {
        return Ok(Admission::Choked);
    }
    let threshold = upper_sum / min_floor - config.num_users as f64;
    if config.total_resource > threshold {
        Ok(Admission::Holds)
    } else {
        Ok(Admission::Violated)
    }
}

/// A user's payoff-maximizing purchase at the posted price:
/// `max(theta / unit_price - 1, 0)`.
pub fn user_demand(theta: f64, unit_price: f64) -> Result<f64> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::NegativeInput {
            name: "theta",
            value: theta,
        });
    }
    if !(unit_price > 0.0) || !unit_price.is_finite() {
        return Err(Error::NonPositivePrice { value: unit_price });
    }
    Ok((theta / unit_price - 1.0).max(0.0))
}

/// Evaluates one slot of posted-price trading for a whole realization:
/// per-user demands, payments, payoffs, and the aggregate demand.
pub fn forward_outcome(
    realization: &DemandRealization,
    posted_price: f64,
    config: &MarketConfig,
) -> Result<ForwardOutcome> {
    if realization.theta.len() != config.num_users {
        return Err(Error::UserCountMismatch {
            expected: config.num_users,
            actual: realization.theta.len(),
        });
    }
    if !(posted_price > 0.0) || !posted_price.is_finite() {
        return Err(Error::NonPositivePrice {
            value: posted_price,
        });
    }
    let mut demands = Vec::with_capacity(config.num_users);
    let mut payments = Vec::with_capacity(config.num_users);
    let mut payoffs = Vec::with_capacity(config.num_users);
    let mut total_demand = 0.0;
    for &theta in &realization.theta {
        let s = user_demand(theta, posted_price)?;
        demands.push(s);
        payments.push(posted_price * s);
        payoffs.push(payoff(theta, s, posted_price)?);
        total_demand += s;
    }
    Ok(ForwardOutcome {
        posted_price,
        demands,
        payments,
        payoffs,
        total_demand,
    })
}

fn check_users(model: &DemandModel, config: &MarketConfig) -> Result<()> {
    if model.num_users() != config.num_users {
        return Err(Error::UserCountMismatch {
            expected: config.num_users,
            actual: model.num_users(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{sample_demand, uniform_demand_model, ThetaHighRule};
    use proptest::prelude::*;

    fn benchmark_model(num_slots: usize) -> (DemandModel, MarketConfig) {
        let model = uniform_demand_model(
            1.0,
            ThetaHighRule::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            100,
            num_slots,
        )
        .unwrap();
        let config = MarketConfig::new(1000.0, 100, num_slots).unwrap();
        (model, config)
    }

    #[test]
    fn posted_price_matches_closed_form() {
        let (model, config) = benchmark_model(10);
        // slot 1: sum of upper bounds = 100 * 2
        let p = optimal_forward_price(&model, 0, &config).unwrap();
        assert!((p - 2.0 / 11.0).abs() < 1e-15);
        // slot 10: sum = 100 * 20
        let p = optimal_forward_price(&model, 9, &config).unwrap();
        assert!((p - 20.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn zero_capacity_market_clears_at_choke_price() {
        let model = uniform_demand_model(2.0, ThetaHighRule::Constant(2.0), 1, 1).unwrap();
        let config = MarketConfig::new(f64::MIN_POSITIVE, 1, 1).unwrap();
        // Q = 0 is rejected by MarketConfig, so probe the limit directly: with
        // one certain user at theta = 2 and Q -> 0, p* -> 2 and demand -> 0.
        let p = optimal_forward_price(&model, 0, &config).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        let s = user_demand(2.0, p).unwrap();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn zero_demand_model_is_rejected() {
        let model = uniform_demand_model(0.0, ThetaHighRule::Constant(0.0), 3, 1).unwrap();
        let config = MarketConfig::new(10.0, 3, 1).unwrap();
        assert_eq!(
            optimal_forward_price(&model, 0, &config).unwrap_err(),
            Error::ZeroDemandSlot { slot: 0 }
        );
    }

    #[test]
    fn admission_holds_early_and_fails_late_in_benchmark() {
        let (model, config) = benchmark_model(10);
        // slot 1: 200/1 - 100 = 100 < 1000
        assert_eq!(
            admission_condition(&model, 0, &config).unwrap(),
            Admission::Holds
        );
        // slot 10: 2000/1 - 100 = 1900 > 1000
        assert_eq!(
            admission_condition(&model, 9, &config).unwrap(),
            Admission::Violated
        );
    }

    #[test]
    fn homogeneous_certain_demand_is_always_admitted() {
        let model = uniform_demand_model(4.0, ThetaHighRule::Constant(4.0), 5, 1).unwrap();
        let config = MarketConfig::new(0.5, 5, 1).unwrap();
        // threshold = I*theta/theta - I = 0 < Q
        assert_eq!(
            admission_condition(&model, 0, &config).unwrap(),
            Admission::Holds
        );
    }

    #[test]
    fn zero_willingness_floor_reports_choked() {
        let model = uniform_demand_model(0.0, ThetaHighRule::Constant(2.0), 2, 1).unwrap();
        let config = MarketConfig::new(10.0, 2, 1).unwrap();
        let adm = admission_condition(&model, 0, &config).unwrap();
        assert!(adm.choked());
        assert!(!adm.holds());
    }

    #[test]
    fn demand_examples() {
        // benchmark slot-1 price
        assert!((user_demand(2.0, 2.0 / 11.0).unwrap() - 10.0).abs() < 1e-12);
        // priced-out users clamp to zero
        assert_eq!(user_demand(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(user_demand(1.0, 1.0).unwrap(), 0.0);
        // inverse relation: theta = p (1 + q) demands exactly q
        let (p, q) = (0.37, 4.25);
        assert!((user_demand(p * (1.0 + q), p).unwrap() - q).abs() < 1e-12);
    }

    #[test]
    fn demand_rejects_nonpositive_price() {
        assert!(user_demand(1.0, 0.0).is_err());
        assert!(user_demand(1.0, -1.0).is_err());
        assert!(user_demand(-1.0, 1.0).is_err());
    }

    #[test]
    fn outcome_is_all_zero_when_everyone_is_priced_out() {
        let config = MarketConfig::new(10.0, 3, 1).unwrap();
        let real = DemandRealization {
            theta: vec![0.5, 0.9, 0.2],
        };
        let out = forward_outcome(&real, 1.0, &config).unwrap();
        assert!(out.demands.iter().all(|&s| s == 0.0));
        assert!(out.payments.iter().all(|&x| x == 0.0));
        assert!(out.payoffs.iter().all(|&x| x == 0.0));
        assert_eq!(out.total_demand, 0.0);
    }

    #[test]
    fn worst_case_realization_saturates_capacity() {
        let (model, config) = benchmark_model(1);
        let p = optimal_forward_price(&model, 0, &config).unwrap();
        let real = DemandRealization {
            theta: vec![2.0; 100],
        };
        let out = forward_outcome(&real, p, &config).unwrap();
        assert!((out.total_demand - 1000.0).abs() < 1e-9);
        assert!(out.total_demand <= 1000.0 + 1e-9);
    }

    #[test]
    fn single_user_outcome_matches_direct_evaluation() {
        let config = MarketConfig::new(10.0, 1, 1).unwrap();
        let real = DemandRealization { theta: vec![3.0] };
        let out = forward_outcome(&real, 1.0, &config).unwrap();
        assert!((out.demands[0] - 2.0).abs() < 1e-12);
        assert!((out.payments[0] - 2.0).abs() < 1e-12);
        assert!((out.payoffs[0] - 1.295_836_866_004_329).abs() < 1e-12);
    }

    #[test]
    fn payments_are_exactly_price_times_demand() {
        let config = MarketConfig::new(10.0, 4, 1).unwrap();
        let real = DemandRealization {
            theta: vec![1.3, 2.7, 0.4, 5.9],
        };
        let out = forward_outcome(&real, 0.7, &config).unwrap();
        for i in 0..4 {
            assert_eq!(out.payments[i], 0.7 * out.demands[i]);
        }
    }

    proptest! {
        #[test]
        fn demand_maximizes_payoff_on_a_grid(
            theta in 0.05f64..30.0,
            price in 0.01f64..5.0,
        ) {
            let s_star = user_demand(theta, price).unwrap();
            let best = payoff(theta, s_star, price).unwrap();
            let hi = 4.0 * s_star + 4.0;
            for i in 0..=400 {
                let s = hi * i as f64 / 400.0;
                let u = payoff(theta, s, price).unwrap();
                prop_assert!(best >= u - 1e-9, "payoff({theta},{s},{price}) beats the closed form");
            }
        }

        #[test]
        fn demand_monotone_in_price_and_theta(
            theta in 0.0f64..20.0,
            dtheta in 0.0f64..5.0,
            p1 in 0.01f64..5.0,
            dp in 0.0f64..5.0,
        ) {
            let base = user_demand(theta, p1).unwrap();
            prop_assert!(user_demand(theta, p1 + dp).unwrap() <= base);
            prop_assert!(user_demand(theta + dtheta, p1).unwrap() >= base);
        }

        #[test]
        fn capacity_safe_when_no_user_is_ever_priced_out(
            seed in any::<u64>(),
            users in 1usize..8,
            capacity in 1.0f64..50.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut means = Vec::new();
            let mut spreads = Vec::new();
            for _ in 0..users {
                let mean: f64 = rng.gen_range(0.5..10.0);
                let spread: f64 = rng.gen_range(0.0..mean);
                means.push(vec![mean]);
                spreads.push(vec![spread]);
            }
            let model = DemandModel::new(means, spreads).unwrap();
            let config = MarketConfig::new(capacity, users, 1).unwrap();
            let p = optimal_forward_price(&model, 0, &config).unwrap();
            // The worst-case bound needs every user's upper willingness to
            // clear the posted price; discard models where someone is choked
            // even at their most eager draw.
            let min_upper = (0..users)
                .map(|u| model.mean(u, 0) + model.spread(u, 0))
                .fold(f64::INFINITY, f64::min);
            prop_assume!(min_upper >= p);
            for _ in 0..20 {
                let real = sample_demand(&model, 0, &mut rng).unwrap();
                let out = forward_outcome(&real, p, &config).unwrap();
                prop_assert!(out.total_demand <= capacity + 1e-9);
            }
        }

        #[test]
        fn worst_case_demand_formula_recovers_capacity(
            seed in any::<u64>(),
            users in 1usize..10,
            capacity in 0.5f64..200.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut means = Vec::new();
            let mut spreads = Vec::new();
            for _ in 0..users {
                let mean: f64 = rng.gen_range(0.5..10.0);
                let spread: f64 = rng.gen_range(0.0..mean);
                means.push(vec![mean]);
                spreads.push(vec![spread]);
            }
            let model = DemandModel::new(means, spreads).unwrap();
            let config = MarketConfig::new(capacity, users, 1).unwrap();
            let p = optimal_forward_price(&model, 0, &config).unwrap();
            let worst: f64 = (0..users)
                .map(|u| (model.mean(u, 0) + model.spread(u, 0)) / p - 1.0)
                .sum();
            prop_assert!((worst - capacity).abs() < 1e-9 * capacity.max(1.0));
        }
    }
}
