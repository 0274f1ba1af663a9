//! Name-your-own-price ("reverse") round on top of the posted price: the
//! operator recommends bigger bundles out of leftover capacity, announces a
//! participation floor, and draws a hidden acceptance threshold; users bid
//! unit prices for their bundles and settle against the threshold.

use rand::Rng;

use crate::error::{Error, Result};
use crate::forward::ForwardOutcome;
use crate::market::{payoff, DemandRealization, MarketConfig};

/// Leftovers below this fraction of capacity count as no leftovers at all, and
/// a floor this close to the posted price counts as closing the bid interval.
/// Both guards keep floating-point dust from opening a reverse round whose
/// margins are pure rounding noise.
const DEGENERACY_EPS: f64 = 1e-9;

/// How the operator picks the minimum participation price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PminPolicy {
    /// Break-even floor `p * total_demand / Q`: the smallest floor at which
    /// every accepted bid still covers that user's posted-price payment.
    /// (Config files select this as `lemma1`.)
    BreakEven,
    /// Fixed fraction of the posted price, in `[0, 1]`.
    Ratio(f64),
    /// Absolute floor.
    Absolute(f64),
}

/// Stage-III state published before bidding: recommended bundles, the
/// participation floor, and whether the round is live at all.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseSetup {
    /// Recommended bundle per user; at least the posted-price demand.
    pub recommended: Vec<f64>,
    /// Minimum participation unit price.
    pub min_price: f64,
    /// Posted price carried over from the forward stage.
    pub posted_price: f64,
    /// Capacity left after posted-price demand.
    pub residual: f64,
    /// False when the round degenerates (no leftovers, no demand, or an empty
    /// bid interval); settlement then reduces to the forward outcome.
    pub active: bool,
}

/// Stage-IV settlement: who bid, the realized threshold, and the final
/// per-user allocations, payments, and payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct SettlementResult {
    /// Unit-price bids; zero for non-participants.
    pub bids: Vec<f64>,
    pub participants: Vec<bool>,
    /// Realized hidden threshold (the posted price when the round was inactive).
    pub threshold: f64,
    pub accepted: Vec<bool>,
    pub allocations: Vec<f64>,
    pub payments: Vec<f64>,
    pub payoffs: Vec<f64>,
}

/// Capacity left once posted-price demand is served: `max(Q - total_demand, 0)`.
pub fn residual_resource(total_demand: f64, config: &MarketConfig) -> f64 {
    (config.total_resource - total_demand).max(0.0)
}

/// Splits leftover capacity in proportion to what each user already demanded:
/// `x_i = s_i + (s_i / sum_j s_j) * residual`.
///
/// With no leftovers or no demand the demands come back unchanged. Otherwise
/// the bundles clear the market (`sum x_i = Q` up to rounding) and any
/// floating-point excess is shaved off the largest bundle so the capacity
/// bound holds exactly.
pub fn recommend_allocations(demands: &[f64], config: &MarketConfig) -> Vec<f64> {
    let total: f64 = demands.iter().sum();
    let residual = residual_resource(total, config);
    if total <= 0.0 || residual <= 0.0 {
        return demands.to_vec();
    }
    let mut recommended: Vec<f64> = demands
        .iter()
        .map(|&s| s + s / total * residual)
        .collect();
    for _ in 0..8 {
        let sum: f64 = recommended.iter().sum();
        let excess = sum - config.total_resource;
        if excess <= 0.0 {
            break;
        }
        // Shave from the bundle with the most headroom over its demand.
        let (idx, _) = recommended
            .iter()
            .zip(demands)
            .map(|(&x, &s)| x - s)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        recommended[idx] -= excess;
    }
    recommended
}

/// The smallest participation floor at which no accepted bid can pay the
/// operator less than the posted-price contract it replaces:
/// `p * total_demand / Q`.
pub fn break_even_min_price(posted_price: f64, total_demand: f64, config: &MarketConfig) -> f64 {
    posted_price * total_demand / config.total_resource
}

/// The unit price at which a user is indifferent between the recommended
/// bundle and the posted-price contract:
///
/// `v = [theta * ln((1 + x) / (1 + s)) + p * s] / x`
///
/// so `payoff(theta, x, v) = payoff(theta, s, p)` by construction. A user
/// participates exactly when the floor does not exceed this price.
pub fn indifference_price(
    theta: f64,
    recommended_x: f64,
    demand_s: f64,
    posted_price: f64,
) -> Result<f64> {
    if !(recommended_x > 0.0) {
        return Err(Error::ZeroRecommendation);
    }
    let log_gain = recommended_x.ln_1p() - demand_s.ln_1p();
    Ok((theta * log_gain + posted_price * demand_s) / recommended_x)
}

impl ReverseSetup {
    /// Builds the Stage-III state from the forward outcome under the given
    /// floor policy. The round is active only when there are leftovers, some
    /// demand to scale them by, and a genuinely open bid interval.
    pub fn build(
        outcome: &ForwardOutcome,
        policy: PminPolicy,
        config: &MarketConfig,
    ) -> Result<Self> {
        let total = outcome.total_demand;
        let residual = residual_resource(total, config);
        let recommended = recommend_allocations(&outcome.demands, config);
        let posted = outcome.posted_price;
        let min_price = match policy {
            PminPolicy::BreakEven => break_even_min_price(posted, total, config),
            PminPolicy::Ratio(r) => {
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::PolicyRatioOutOfRange { value: r });
                }
                r * posted
            }
            PminPolicy::Absolute(a) => {
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::NegativeInput {
                        name: "min_price",
                        value: a,
                    });
                }
                a
            }
        };
        let active = residual > DEGENERACY_EPS * config.total_resource
            && total > 0.0
            && posted - min_price > DEGENERACY_EPS * posted;
        Ok(Self {
            recommended,
            min_price,
            posted_price: posted,
            residual,
            active,
        })
    }
}

/// Flags the users willing to bid: those with a positive recommended bundle
/// whose indifference price weakly exceeds the floor. Everyone else stays on
/// the posted-price contract and bids zero. An inactive round has no takers.
pub fn participation_set(
    realization: &DemandRealization,
    setup: &ReverseSetup,
    demands: &[f64],
) -> Result<Vec<bool>> {
    check_lengths(realization, setup, demands)?;
    if !setup.active {
        return Ok(vec![false; demands.len()]);
    }
    let mut flags = Vec::with_capacity(demands.len());
    for (i, &s) in demands.iter().enumerate() {
        let x = setup.recommended[i];
        if x > 0.0 {
            let v = indifference_price(realization.theta[i], x, s, setup.posted_price)?;
            flags.push(setup.min_price <= v);
        } else {
            flags.push(false);
        }
    }
    Ok(flags)
}

/// The expected-payoff-maximizing bid for a participating user:
///
/// `b* = [theta * ln((1 + x) / (1 + s)) + s * p + x * p_min] / (2 x)`
///
/// which is the midpoint between the indifference price and the floor. The
/// result is clamped into `[p_min, p]` to guard against rounding drift.
pub fn optimal_bid(
    theta: f64,
    recommended_x: f64,
    demand_s: f64,
    posted_price: f64,
    min_price: f64,
) -> Result<f64> {
    if !(min_price <= posted_price) {
        return Err(Error::DegenerateBidInterval {
            min_price,
            posted_price,
        });
    }
    let v = indifference_price(theta, recommended_x, demand_s, posted_price)?;
    if min_price > v {
        return Err(Error::NotParticipant {
            min_price,
            indifference: v,
        });
    }
    let log_gain = recommended_x.ln_1p() - demand_s.ln_1p();
    let bid = (theta * log_gain + demand_s * posted_price + recommended_x * min_price)
        / (2.0 * recommended_x);
    Ok(bid.clamp(min_price, posted_price))
}

/// Computes every user's bid for the slot: the optimal bid for participants,
/// zero for everyone else.
pub fn optimal_bids(
    realization: &DemandRealization,
    setup: &ReverseSetup,
    demands: &[f64],
) -> Result<Vec<f64>> {
    let flags = participation_set(realization, setup, demands)?;
    let mut bids = Vec::with_capacity(demands.len());
    for (i, &member) in flags.iter().enumerate() {
        if member {
            bids.push(optimal_bid(
                realization.theta[i],
                setup.recommended[i],
                demands[i],
                setup.posted_price,
                setup.min_price,
            )?);
        } else {
            bids.push(0.0);
        }
    }
    Ok(bids)
}

/// Expected payoff of bidding `bid` against a threshold uniform on
/// `[min_price, posted_price]`:
///
/// `payoff(theta, x, bid) * P(accept) + payoff(theta, s, p) * P(reject)`
///
/// with `P(accept) = (bid - p_min) / (p - p_min)`. This is the objective the
/// optimal bid maximizes, and doubles as the oracle target for it.
pub fn expected_bid_payoff(
    bid: f64,
    theta: f64,
    recommended_x: f64,
    demand_s: f64,
    posted_price: f64,
    min_price: f64,
) -> Result<f64> {
    if !(min_price < posted_price) {
        return Err(Error::DegenerateBidInterval {
            min_price,
            posted_price,
        });
    }
    let span = posted_price - min_price;
    let accept = (bid - min_price) / span;
    let win = payoff(theta, recommended_x, bid)?;
    let keep = payoff(theta, demand_s, posted_price)?;
    Ok(win * accept + keep * (1.0 - accept))
}

/// Settles the slot: draws one hidden threshold uniform on
/// `[min_price, posted_price]`, shared by all users, and accepts every
/// participant whose bid reaches it. Accepted users take their recommended
/// bundle at their bid; everyone else keeps the posted-price contract.
///
/// An inactive round consumes no randomness and settles identically to the
/// forward outcome.
pub fn settle<R: Rng + ?Sized>(
    realization: &DemandRealization,
    setup: &ReverseSetup,
    demands: &[f64],
    bids: &[f64],
    rng: &mut R,
) -> Result<SettlementResult> {
    check_lengths(realization, setup, demands)?;
    if bids.len() != demands.len() {
        return Err(Error::UserCountMismatch {
            expected: demands.len(),
            actual: bids.len(),
        });
    }
    let n = demands.len();
    let posted = setup.posted_price;
    if !setup.active {
        let mut result = SettlementResult {
            bids: vec![0.0; n],
            participants: vec![false; n],
            threshold: posted,
            accepted: vec![false; n],
            allocations: demands.to_vec(),
            payments: Vec::with_capacity(n),
            payoffs: Vec::with_capacity(n),
        };
        for (i, &s) in demands.iter().enumerate() {
            result.payments.push(posted * s);
            result.payoffs.push(payoff(realization.theta[i], s, posted)?);
        }
        return Ok(result);
    }

    let u: f64 = rng.gen();
    let threshold = setup.min_price + u * (posted - setup.min_price);

    let mut participants = Vec::with_capacity(n);
    let mut accepted = Vec::with_capacity(n);
    let mut allocations = Vec::with_capacity(n);
    let mut payments = Vec::with_capacity(n);
    let mut payoffs = Vec::with_capacity(n);
    for i in 0..n {
        let member = bids[i] > 0.0;
        let wins = member && bids[i] >= threshold;
        let (quantity, unit) = if wins {
            (setup.recommended[i], bids[i])
        } else {
            (demands[i], posted)
        };
        participants.push(member);
        accepted.push(wins);
        allocations.push(quantity);
        payments.push(unit * quantity);
        payoffs.push(payoff(realization.theta[i], quantity, unit)?);
    }
    Ok(SettlementResult {
        bids: bids.to_vec(),
        participants,
        threshold,
        accepted,
        allocations,
        payments,
        payoffs,
    })
}

fn check_lengths(
    realization: &DemandRealization,
    setup: &ReverseSetup,
    demands: &[f64],
) -> Result<()> {
    if realization.theta.len() != demands.len() || setup.recommended.len() != demands.len() {
        return Err(Error::UserCountMismatch {
            expected: demands.len(),
            actual: realization.theta.len().min(setup.recommended.len()),
        });
    }
    Ok(())
}
