//! Shared market primitives: global market parameters, per-user willingness-to-pay
//! statistics, and the payoff / demand-sampling math every pricing stage builds on.

use rand::Rng;

use crate::error::{Error, Result};

/// Global market parameters: capacity, population, and horizon length.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    /// Total resource the operator can sell per slot (bandwidth, data volume, ...).
    pub total_resource: f64,
    pub num_users: usize,
    pub num_slots: usize,
}

impl MarketConfig {
    pub fn new(total_resource: f64, num_users: usize, num_slots: usize) -> Result<Self> {
        if !(total_resource > 0.0) || !total_resource.is_finite() {
            return Err(Error::NonPositive {
                name: "total_resource",
                value: total_resource,
            });
        }
        if num_users == 0 {
            return Err(Error::ZeroCount { name: "num_users" });
        }
        if num_slots == 0 {
            return Err(Error::ZeroCount { name: "num_slots" });
        }
        Ok(Self {
            total_resource,
            num_users,
            num_slots,
        })
    }
}

/// Per-slot rule for the upper willingness-to-pay bound used by
/// [`uniform_demand_model`]. Slot numbers are one-based here, so
/// `Linear { slope: 2.0, intercept: 0.0 }` gives bounds 2, 4, 6, ...
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaHighRule {
    Constant(f64),
    Linear { slope: f64, intercept: f64 },
}

impl ThetaHighRule {
    /// Upper bound for the given one-based slot number.
    pub fn high(&self, slot_number: usize) -> f64 {
        match *self {
            ThetaHighRule::Constant(hi) => hi,
            ThetaHighRule::Linear { slope, intercept } => slope * slot_number as f64 + intercept,
        }
    }
}

/// Per-user, per-slot willingness-to-pay statistics: a mean and a nonnegative
/// spread bounding the zero-mean deviation users realize at each slot.
///
/// Grids are indexed `[user][slot]`. The floor `mean - spread` is required to
/// be nonnegative so willingness to pay can never go negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandModel {
    theta_mean: Vec<Vec<f64>>,
    theta_spread: Vec<Vec<f64>>,
}

impl DemandModel {
    pub fn new(theta_mean: Vec<Vec<f64>>, theta_spread: Vec<Vec<f64>>) -> Result<Self> {
        if theta_mean.is_empty() {
            return Err(Error::ZeroCount { name: "num_users" });
        }
        if theta_mean.len() != theta_spread.len() {
            return Err(Error::UserCountMismatch {
                expected: theta_mean.len(),
                actual: theta_spread.len(),
            });
        }
        let num_slots = theta_mean[0].len();
        if num_slots == 0 {
            return Err(Error::ZeroCount { name: "num_slots" });
        }
        for (user, (means, spreads)) in theta_mean.iter().zip(&theta_spread).enumerate() {
            if means.len() != num_slots || spreads.len() != num_slots {
                return Err(Error::SlotOutOfRange {
                    slot: means.len().max(spreads.len()),
                    num_slots,
                });
            }
            for (slot, (&mean, &spread)) in means.iter().zip(spreads).enumerate() {
                if !(spread >= 0.0) || !spread.is_finite() {
                    return Err(Error::NegativeSpread { user, slot });
                }
                if !(mean - spread >= 0.0) || !mean.is_finite() {
                    return Err(Error::NegativeWillingnessFloor { user, slot });
                }
            }
        }
        Ok(Self {
            theta_mean,
            theta_spread,
        })
    }

    pub fn num_users(&self) -> usize {
        self.theta_mean.len()
    }

    pub fn num_slots(&self) -> usize {
        self.theta_mean[0].len()
    }

    pub fn mean(&self, user: usize, slot: usize) -> f64 {
        self.theta_mean[user][slot]
    }

    pub fn spread(&self, user: usize, slot: usize) -> f64 {
        self.theta_spread[user][slot]
    }

    pub(crate) fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.num_slots() {
            return Err(Error::SlotOutOfRange {
                slot,
                num_slots: self.num_slots(),
            });
        }
        Ok(())
    }
}

/// One slot's realized willingness to pay, one entry per user.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandRealization {
    pub theta: Vec<f64>,
}

/// Payoff of buying `quantity` units at `unit_price` for a user with
/// willingness to pay `theta`:
///
/// `theta * ln(1 + quantity) - unit_price * quantity`
///
/// The logarithmic utility keeps allocations proportionally fair; buying
/// nothing is always worth exactly zero.
pub fn payoff(theta: f64, quantity: f64, unit_price: f64) -> Result<f64> {
    for (name, value) in [
        ("theta", theta),
        ("quantity", quantity),
        ("unit_price", unit_price),
    ] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeInput { name, value });
        }
    }
    Ok(theta * quantity.ln_1p() - unit_price * quantity)
}

/// Draws one slot's willingness-to-pay realization: each user's value is
/// uniform on `[mean - spread, mean + spread]`, independent across users.
///
/// A zero spread collapses to the mean exactly, and the same random stream
/// always reproduces the same realization bit for bit.
pub fn sample_demand<R: Rng + ?Sized>(
    model: &DemandModel,
    slot: usize,
    rng: &mut R,
) -> Result<DemandRealization> {
    model.check_slot(slot)?;
    let theta = (0..model.num_users())
        .map(|user| {
            let u: f64 = rng.gen();
            model.mean(user, slot) + model.spread(user, slot) * (2.0 * u - 1.0)
        })
        .collect();
    Ok(DemandRealization { theta })
}

/// Builds the demand model for users whose willingness to pay is uniform on
/// `[lo, hi(slot)]`: mean `(lo + hi) / 2` and spread `(hi - lo) / 2` per slot,
/// identical across users. `hi_rule` lets the upper bound grow with the slot.
pub fn uniform_demand_model(
    lo: f64,
    hi_rule: ThetaHighRule,
    num_users: usize,
    num_slots: usize,
) -> Result<DemandModel> {
    if !(lo >= 0.0) || !lo.is_finite() {
        return Err(Error::NegativeInput {
            name: "theta_low",
            value: lo,
        });
    }
    if num_users == 0 {
        return Err(Error::ZeroCount { name: "num_users" });
    }
    if num_slots == 0 {
        return Err(Error::ZeroCount { name: "num_slots" });
    }
    let mut means = Vec::with_capacity(num_slots);
    let mut spreads = Vec::with_capacity(num_slots);
    for slot in 0..num_slots {
        let hi = hi_rule.high(slot + 1);
        if !(hi >= lo) || !hi.is_finite() {
            return Err(Error::InvalidBounds { lo, hi });
        }
        means.push((lo + hi) / 2.0);
        spreads.push((hi - lo) / 2.0);
    }
    DemandModel::new(
        vec![means; num_users],
        vec![spreads; num_users],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn payoff_of_buying_nothing_is_zero() {
        assert_eq!(payoff(3.7, 0.0, 12.0).unwrap(), 0.0);
        assert_eq!(payoff(0.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn payoff_of_free_resource_is_log_utility() {
        let p = payoff(1.0, std::f64::consts::E - 1.0, 0.0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn payoff_matches_direct_evaluation() {
        // theta=2, q=10, p=2/11: 2 ln 11 - 20/11
        let p = payoff(2.0, 10.0, 2.0 / 11.0).unwrap();
        assert!((p - 2.977_608_727_414_923).abs() < 1e-12);
    }

    #[test]
    fn payoff_rejects_negative_inputs() {
        assert!(payoff(-1.0, 1.0, 1.0).is_err());
        assert!(payoff(1.0, -1.0, 1.0).is_err());
        assert!(payoff(1.0, 1.0, -1.0).is_err());
        assert!(payoff(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_spread_realization_is_exactly_the_mean() {
        let model = uniform_demand_model(1.5, ThetaHighRule::Constant(1.5), 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real = sample_demand(&model, 1, &mut rng).unwrap();
        assert!(real.theta.iter().all(|&t| t == 1.5));
    }

    #[test]
    fn same_seed_reproduces_identical_realizations() {
        let model = uniform_demand_model(
            1.0,
            ThetaHighRule::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            10,
            5,
        )
        .unwrap();
        let a = sample_demand(&model, 3, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = sample_demand(&model, 3, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_rule_samples_stay_in_slot_bounds() {
        // hi = 2h at h=5 puts every draw in [1, 10]
        let model = uniform_demand_model(
            1.0,
            ThetaHighRule::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            100,
            5,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let real = sample_demand(&model, 4, &mut rng).unwrap();
            assert!(real.theta.iter().all(|&t| (1.0..=10.0).contains(&t)));
        }
    }

    #[test]
    fn uniform_model_moments() {
        let m = uniform_demand_model(1.0, ThetaHighRule::Constant(2.0), 3, 1).unwrap();
        assert_eq!(m.mean(0, 0), 1.5);
        assert_eq!(m.spread(0, 0), 0.5);

        let m = uniform_demand_model(
            1.0,
            ThetaHighRule::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            3,
            10,
        )
        .unwrap();
        assert_eq!(m.mean(0, 9), 10.5);
        assert_eq!(m.spread(0, 9), 9.5);

        let point = uniform_demand_model(3.0, ThetaHighRule::Constant(3.0), 2, 2).unwrap();
        assert_eq!(point.mean(1, 1), 3.0);
        assert_eq!(point.spread(1, 1), 0.0);
    }

    #[test]
    fn uniform_model_rejects_inverted_bounds() {
        let err = uniform_demand_model(2.0, ThetaHighRule::Constant(1.0), 2, 1).unwrap_err();
        assert_eq!(err, Error::InvalidBounds { lo: 2.0, hi: 1.0 });
    }

    #[test]
    fn model_invariants_are_enforced() {
        assert!(DemandModel::new(vec![vec![1.0]], vec![vec![-0.1]]).is_err());
        assert!(DemandModel::new(vec![vec![1.0]], vec![vec![1.5]]).is_err());
        assert!(DemandModel::new(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![0.0], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn sample_mean_tracks_model_mean() {
        // Law-of-large-numbers check: 10^5 draws for one user, sample mean
        // within 3 standard errors of the model mean.
        let model = uniform_demand_model(1.0, ThetaHighRule::Constant(10.0), 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_demand(&model, 0, &mut rng).unwrap().theta[0];
        }
        let sample_mean = sum / n as f64;
        // Var of U[1,10] is 81/12; SE = sqrt(Var/n)
        let se = (81.0 / 12.0 / n as f64).sqrt();
        assert!(
            (sample_mean - 5.5).abs() < 3.0 * se,
            "sample mean {sample_mean} strays from 5.5 by more than 3 SE ({se})"
        );
    }

    proptest! {
        #[test]
        fn payoff_strictly_concave_in_quantity(
            theta in 0.1f64..10.0,
            q1 in 0.0f64..20.0,
            dq in 0.1f64..10.0,
            t in 0.2f64..0.8,
            price in 0.0f64..5.0,
        ) {
            let q2 = q1 + dq;
            let mix = t * q1 + (1.0 - t) * q2;
            let u_mix = payoff(theta, mix, price).unwrap();
            let combo = t * payoff(theta, q1, price).unwrap()
                + (1.0 - t) * payoff(theta, q2, price).unwrap();
            prop_assert!(u_mix > combo + 1e-9);
        }

        #[test]
        fn payoff_strictly_decreasing_in_price(
            theta in 0.0f64..10.0,
            q in 1e-3f64..20.0,
            p1 in 0.0f64..5.0,
            dp in 1e-6f64..5.0,
        ) {
            let lo = payoff(theta, q, p1 + dp).unwrap();
            let hi = payoff(theta, q, p1).unwrap();
            prop_assert!(lo < hi);
        }

        #[test]
        fn realizations_respect_spread_bounds(
            lo in 0.0f64..5.0,
            width in 0.0f64..10.0,
            seed in any::<u64>(),
            users in 1usize..20,
        ) {
            let model = uniform_demand_model(lo, ThetaHighRule::Constant(lo + width), users, 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let real = sample_demand(&model, 0, &mut rng).unwrap();
            for (user, &t) in real.theta.iter().enumerate() {
                let mean = model.mean(user, 0);
                let spread = model.spread(user, 0);
                prop_assert!(t >= mean - spread && t <= mean + spread);
            }
        }
    }
}
