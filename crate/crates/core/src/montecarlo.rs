//! Monte Carlo harness: steps the full four-stage game over seeded
//! independent realizations, aggregates per-slot averages, and sweeps the
//! participation-floor level.
//!
//! Randomness is derived as a pure function of (master seed, slot,
//! realization index, stream), so results do not depend on evaluation order
//! and the two schemes face identical demand draws (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward::{
    admission_condition, forward_outcome, optimal_forward_price, ForwardOutcome,
};
use crate::market::{sample_demand, DemandModel, DemandRealization, MarketConfig};
use crate::reverse::{optimal_bids, settle, PminPolicy, ReverseSetup, SettlementResult};

/// Which game is being simulated: the posted price alone, or the
/// name-your-own-price round layered on top of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ForwardOnly,
    ReverseOnForward,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ForwardOnly => "forward_only",
            Scheme::ReverseOnForward => "reverse_on_forward",
        }
    }
}

/// Per-slot Monte Carlo averages for one scheme. Sums run over users first,
/// then average over realizations. `slot` is the zero-based slot index.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: usize,
    pub scheme: Scheme,
    pub avg_demand: f64,
    pub avg_revenue: f64,
    pub avg_payoff: f64,
    pub avg_utilization: f64,
    pub num_realizations: usize,
    pub admission_warning: bool,
}

/// One point of the participation-floor sweep: both schemes at a fixed slot,
/// sharing demand realizations. Forward metrics do not depend on the ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub ratio: f64,
    pub forward: SlotMetrics,
    pub reverse: SlotMetrics,
}

/// Everything one realization of one slot produced, stage by stage.
#[derive(Debug, Clone)]
pub struct StageOutcomes {
    pub realization: DemandRealization,
    pub forward: ForwardOutcome,
    /// Present only under [`Scheme::ReverseOnForward`].
    pub setup: Option<ReverseSetup>,
    pub settlement: Option<SettlementResult>,
}

/// Slot-level totals of one realization: what actually got allocated, paid,
/// and earned, plus how many users bid and won.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationSummary {
    pub demand: f64,
    pub revenue: f64,
    pub payoff: f64,
    pub participants: usize,
    pub accepted: usize,
}

enum StreamKind {
    Demand = 0,
    Threshold = 1,
}

/// Independent generator for one (slot, realization, stream) cell. Keeping
/// the demand and threshold streams separate means the forward-only scheme
/// and every floor level see the same willingness draws.
fn stream_rng(master_seed: u64, slot: usize, realization: usize, stream: StreamKind) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(slot as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&(realization as u64).to_le_bytes());
    seed[24..32].copy_from_slice(&(stream as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Plays the four stages once for the given realization index.
///
/// Stage I posts the worst-case-safe price, Stage II realizes demand, and —
/// for the reverse scheme — Stage III builds the recommendation and floor
/// while Stage IV bids and settles against the hidden threshold.
pub fn step_realization(
    config: &MarketConfig,
    model: &DemandModel,
    slot: usize,
    scheme: Scheme,
    policy: PminPolicy,
    master_seed: u64,
    realization_index: usize,
) -> Result<StageOutcomes> {
    let posted = optimal_forward_price(model, slot, config)?;
    let mut demand_rng = stream_rng(master_seed, slot, realization_index, StreamKind::Demand);
    let realization = sample_demand(model, slot, &mut demand_rng)?;
    let forward = forward_outcome(&realization, posted, config)?;
    let (setup, settlement) = match scheme {
        Scheme::ForwardOnly => (None, None),
        Scheme::ReverseOnForward => {
            let setup = ReverseSetup::build(&forward, policy, config)?;
            let bids = optimal_bids(&realization, &setup, &forward.demands)?;
            let mut threshold_rng =
                stream_rng(master_seed, slot, realization_index, StreamKind::Threshold);
            let settlement = settle(
                &realization,
                &setup,
                &forward.demands,
                &bids,
                &mut threshold_rng,
            )?;
            (Some(setup), Some(settlement))
        }
    };
    Ok(StageOutcomes {
        realization,
        forward,
        setup,
        settlement,
    })
}

/// Collapses a stepped realization to slot totals.
pub fn summarize_realization(outcomes: &StageOutcomes) -> RealizationSummary {
    match &outcomes.settlement {
        Some(result) => RealizationSummary {
            demand: result.allocations.iter().sum(),
            revenue: result.payments.iter().sum(),
            payoff: result.payoffs.iter().sum(),
            participants: result.participants.iter().filter(|&&m| m).count(),
            accepted: result.accepted.iter().filter(|&&a| a).count(),
        },
        None => RealizationSummary {
            demand: outcomes.forward.total_demand,
            revenue: outcomes.forward.payments.iter().sum(),
            payoff: outcomes.forward.payoffs.iter().sum(),
            participants: 0,
            accepted: 0,
        },
    }
}

/// Runs one slot for one scheme over seeded independent realizations and
/// averages the totals. The same inputs always produce bit-identical metrics.
pub fn run_slot(
    config: &MarketConfig,
    model: &DemandModel,
    slot: usize,
    scheme: Scheme,
    policy: PminPolicy,
    num_realizations: usize,
    master_seed: u64,
) -> Result<SlotMetrics> {
    if num_realizations == 0 {
        return Err(Error::ZeroCount {
            name: "num_realizations",
        });
    }
    let mut demand_sum = 0.0;
    let mut revenue_sum = 0.0;
    let mut payoff_sum = 0.0;
    for r in 0..num_realizations {
        let outcomes = step_realization(config, model, slot, scheme, policy, master_seed, r)?;
        let summary = summarize_realization(&outcomes);
        demand_sum += summary.demand;
        revenue_sum += summary.revenue;
        payoff_sum += summary.payoff;
    }
    let n = num_realizations as f64;
    let avg_demand = demand_sum / n;
    Ok(SlotMetrics {
        slot,
        scheme,
        avg_demand,
        avg_revenue: revenue_sum / n,
        avg_payoff: payoff_sum / n,
        avg_utilization: avg_demand / config.total_resource,
        num_realizations,
        admission_warning: !admission_condition(model, slot, config)?.holds(),
    })
}

/// Runs every slot of the horizon for each requested scheme. Per-slot seeds
/// derive from the master seed, so the schemes are compared on identical
/// demand realizations.
pub fn run_horizon(
    config: &MarketConfig,
    model: &DemandModel,
    schemes: &[Scheme],
    policy: PminPolicy,
    num_realizations: usize,
    master_seed: u64,
) -> Result<Vec<SlotMetrics>> {
    let mut rows = Vec::with_capacity(config.num_slots * schemes.len());
    for slot in 0..config.num_slots {
        for &scheme in schemes {
            rows.push(run_slot(
                config,
                model,
                slot,
                scheme,
                policy,
                num_realizations,
                master_seed,
            )?);
        }
    }
    Ok(rows)
}

/// Sweeps the participation-floor level `ratio * p*` at one slot, running
/// both schemes with paired seeds for every ratio. The forward baseline is
/// computed once and repeated, since it does not depend on the floor.
pub fn run_pmin_sweep(
    config: &MarketConfig,
    model: &DemandModel,
    slot: usize,
    ratios: &[f64],
    num_realizations: usize,
    master_seed: u64,
) -> Result<Vec<SweepPoint>> {
    for &r in ratios {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::RatioOutOfRange { value: r });
        }
    }
    let forward = run_slot(
        config,
        model,
        slot,
        Scheme::ForwardOnly,
        PminPolicy::BreakEven,
        num_realizations,
        master_seed,
    )?;
    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let reverse = run_slot(
            config,
            model,
            slot,
            Scheme::ReverseOnForward,
            PminPolicy::Ratio(ratio),
            num_realizations,
            master_seed,
        )?;
        points.push(SweepPoint {
            ratio,
            forward: forward.clone(),
            reverse,
        });
    }
    Ok(points)
}

/// Probability that a bid beats a threshold uniform on
/// `[min_price, posted_price]`, clamped into `[0, 1]`.
pub fn acceptance_probability(bid: f64, min_price: f64, posted_price: f64) -> Result<f64> {
    if !(min_price < posted_price) {
        return Err(Error::DegenerateBidInterval {
            min_price,
            posted_price,
        });
    }
    Ok(((bid - min_price) / (posted_price - min_price)).clamp(0.0, 1.0))
}
