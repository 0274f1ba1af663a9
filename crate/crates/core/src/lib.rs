//! Deterministic, seedable simulator of a four-stage pricing game between a
//! network operator and its users.
//!
//! The operator posts a per-slot unit price chosen so that even worst-case
//! demand fits capacity ([`forward`]), users respond with their
//! payoff-maximizing purchases, and a name-your-own-price round ([`reverse`])
//! can then sell the leftover capacity: bigger bundles are recommended in
//! proportion to demand, a participation floor is announced, and bids settle
//! against a hidden uniform threshold. The [`montecarlo`] harness averages
//! seeded realizations per slot and sweeps the floor level; [`scenario`]
//! turns flat config files into byte-stable CSV tables; [`validate`] holds
//! the brute-force oracles behind the `validate` subcommand.

pub mod error;
pub mod forward;
pub mod market;
pub mod montecarlo;
pub mod reverse;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
pub use forward::{
    admission_condition, forward_outcome, optimal_forward_price, user_demand, Admission,
    ForwardOutcome,
};
pub use market::{
    payoff, sample_demand, uniform_demand_model, DemandModel, DemandRealization, MarketConfig,
    ThetaHighRule,
};
pub use montecarlo::{
    acceptance_probability, run_horizon, run_pmin_sweep, run_slot, step_realization,
    summarize_realization, RealizationSummary, Scheme, SlotMetrics, StageOutcomes, SweepPoint,
};
pub use reverse::{
    break_even_min_price, expected_bid_payoff, indifference_price, optimal_bid, optimal_bids,
    participation_set, recommend_allocations, residual_resource, settle, PminPolicy, ReverseSetup,
    SettlementResult,
};
pub use scenario::{simulate_csv, sweep_csv, ScenarioConfig};
pub use validate::{run_validation, CheckReport};
