//! Browser bindings for the pricing simulator. Three operations back the
//! demo page: the per-slot horizon comparison, the participation-floor
//! sweep, and a single-realization microscope. Each returns JSON; errors
//! come back as `{"error": "..."}` so the page can surface them.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use revprice_core::{
    step_realization, summarize_realization, DemandModel, MarketConfig, PminPolicy, Result,
    Scheme, ThetaHighRule,
};

#[derive(Serialize)]
struct SchemeCurves {
    demand: Vec<f64>,
    revenue: Vec<f64>,
    payoff: Vec<f64>,
    utilization: Vec<f64>,
}

#[derive(Serialize)]
struct HorizonResponse {
    slots: Vec<usize>,
    posted_price: Vec<f64>,
    admission_warning: Vec<bool>,
    capacity: f64,
    forward: SchemeCurves,
    reverse: SchemeCurves,
}

#[derive(Serialize)]
struct SweepResponse {
    ratios: Vec<f64>,
    slot: usize,
    forward: SchemeCurves,
    reverse: SchemeCurves,
    participant_fraction: Vec<f64>,
    accepted_fraction: Vec<f64>,
}

#[derive(Serialize)]
struct TraceResponse {
    slot: usize,
    posted_price: f64,
    min_price: f64,
    threshold: f64,
    residual: f64,
    active: bool,
    theta: Vec<f64>,
    demand: Vec<f64>,
    recommended: Vec<f64>,
    bid: Vec<f64>,
    participant: Vec<bool>,
    accepted: Vec<bool>,
    allocation: Vec<f64>,
    payment: Vec<f64>,
    payoff: Vec<f64>,
    forward_payment: Vec<f64>,
    forward_payoff: Vec<f64>,
}

struct DemoParams {
    market: MarketConfig,
    model: DemandModel,
    realizations: usize,
    seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn build_params(
    users: u32,
    capacity: f64,
    slots: u32,
    theta_low: f64,
    theta_slope: f64,
    theta_intercept: f64,
    realizations: u32,
    seed: u32,
) -> Result<DemoParams> {
    let market = MarketConfig::new(capacity, users as usize, slots as usize)?;
    let model = revprice_core::uniform_demand_model(
        theta_low,
        ThetaHighRule::Linear {
            slope: theta_slope,
            intercept: theta_intercept,
        },
        users as usize,
        slots as usize,
    )?;
    Ok(DemoParams {
        market,
        model,
        realizations: realizations.max(1) as usize,
        seed: seed as u64,
    })
}

fn scheme_averages(
    params: &DemoParams,
    slot: usize,
    scheme: Scheme,
    policy: PminPolicy,
) -> Result<(f64, f64, f64, f64, f64)> {
    let mut demand = 0.0;
    let mut revenue = 0.0;
    let mut payoff = 0.0;
    let mut participants = 0usize;
    let mut accepted = 0usize;
    for r in 0..params.realizations {
        let outcome = step_realization(
            &params.market,
            &params.model,
            slot,
            scheme,
            policy,
            params.seed,
            r,
        )?;
        let summary = summarize_realization(&outcome);
        demand += summary.demand;
        revenue += summary.revenue;
        payoff += summary.payoff;
        participants += summary.participants;
        accepted += summary.accepted;
    }
    let n = params.realizations as f64;
    let scale = n * params.market.num_users as f64;
    Ok((
        demand / n,
        revenue / n,
        payoff / n,
        participants as f64 / scale,
        accepted as f64 / scale,
    ))
}

fn horizon_impl(params: &DemoParams) -> Result<HorizonResponse> {
    let slots = params.market.num_slots;
    let mut response = HorizonResponse {
        slots: (1..=slots).collect(),
        posted_price: Vec::with_capacity(slots),
        admission_warning: Vec::with_capacity(slots),
        capacity: params.market.total_resource,
        forward: SchemeCurves {
            demand: vec![],
            revenue: vec![],
            payoff: vec![],
            utilization: vec![],
        },
        reverse: SchemeCurves {
            demand: vec![],
            revenue: vec![],
            payoff: vec![],
            utilization: vec![],
        },
    };
    for slot in 0..slots {
        response.posted_price.push(revprice_core::optimal_forward_price(
            &params.model,
            slot,
            &params.market,
        )?);
        response.admission_warning.push(
            !revprice_core::admission_condition(&params.model, slot, &params.market)?.holds(),
        );
        for (scheme, curves) in [
            (Scheme::ForwardOnly, &mut response.forward),
            (Scheme::ReverseOnForward, &mut response.reverse),
        ] {
            let (demand, revenue, payoff, _, _) =
                scheme_averages(params, slot, scheme, PminPolicy::BreakEven)?;
            curves.demand.push(demand);
            curves.revenue.push(revenue);
            curves.payoff.push(payoff);
            curves.utilization.push(demand / params.market.total_resource);
        }
    }
    Ok(response)
}

fn sweep_impl(params: &DemoParams, slot_number: u32, steps: u32) -> Result<SweepResponse> {
    let slot = (slot_number.max(1) as usize - 1).min(params.market.num_slots - 1);
    let steps = steps.clamp(2, 50) as usize;
    let ratios: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let (f_demand, f_revenue, f_payoff, _, _) =
        scheme_averages(params, slot, Scheme::ForwardOnly, PminPolicy::BreakEven)?;
    let mut response = SweepResponse {
        ratios: ratios.clone(),
        slot: slot + 1,
        forward: SchemeCurves {
            demand: vec![f_demand; ratios.len()],
            revenue: vec![f_revenue; ratios.len()],
            payoff: vec![f_payoff; ratios.len()],
            utilization: vec![f_demand / params.market.total_resource; ratios.len()],
        },
        reverse: SchemeCurves {
            demand: vec![],
            revenue: vec![],
            payoff: vec![],
            utilization: vec![],
        },
        participant_fraction: vec![],
        accepted_fraction: vec![],
    };
    for &ratio in &ratios {
        let (demand, revenue, payoff, participants, accepted) = scheme_averages(
            params,
            slot,
            Scheme::ReverseOnForward,
            PminPolicy::Ratio(ratio),
        )?;
        response.reverse.demand.push(demand);
        response.reverse.revenue.push(revenue);
        response.reverse.payoff.push(payoff);
        response
            .reverse
            .utilization
            .push(demand / params.market.total_resource);
        response.participant_fraction.push(participants);
        response.accepted_fraction.push(accepted);
    }
    Ok(response)
}

fn trace_impl(
    params: &DemoParams,
    slot_number: u32,
    realization: u32,
    floor_ratio: f64,
) -> Result<TraceResponse> {
    let slot = (slot_number.max(1) as usize - 1).min(params.market.num_slots - 1);
    let policy = if (0.0..=1.0).contains(&floor_ratio) {
        PminPolicy::Ratio(floor_ratio)
    } else {
        PminPolicy::BreakEven
    };
    let outcome = step_realization(
        &params.market,
        &params.model,
        slot,
        Scheme::ReverseOnForward,
        policy,
        params.seed,
        realization as usize,
    )?;
    let setup = outcome.setup.expect("reverse scheme builds a setup");
    let settled = outcome.settlement.expect("reverse scheme settles");
    Ok(TraceResponse {
        slot: slot + 1,
        posted_price: outcome.forward.posted_price,
        min_price: setup.min_price,
        threshold: settled.threshold,
        residual: setup.residual,
        active: setup.active,
        theta: outcome.realization.theta,
        demand: outcome.forward.demands,
        recommended: setup.recommended,
        bid: settled.bids,
        participant: settled.participants,
        accepted: settled.accepted,
        allocation: settled.allocations,
        payment: settled.payments,
        payoff: settled.payoffs,
        forward_payment: outcome.forward.payments,
        forward_payoff: outcome.forward.payoffs,
    })
}

fn to_json<T: Serialize>(result: Result<T>) -> String {
    match result {
        Ok(value) => serde_json::to_string(&value).unwrap_or_else(|err| error_json(&err.to_string())),
        Err(err) => error_json(&err.to_string()),
    }
}

fn error_json(message: &str) -> String {
    serde_json::to_string(&serde_json::json!({ "error": message })).unwrap()
}

/// Per-slot averages for both schemes over the whole horizon.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn horizon_json(
    users: u32,
    capacity: f64,
    slots: u32,
    theta_low: f64,
    theta_slope: f64,
    theta_intercept: f64,
    realizations: u32,
    seed: u32,
) -> String {
    to_json(
        build_params(
            users,
            capacity,
            slots,
            theta_low,
            theta_slope,
            theta_intercept,
            realizations,
            seed,
        )
        .and_then(|params| horizon_impl(&params)),
    )
}

/// Participation-floor sweep at one slot.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sweep_json(
    users: u32,
    capacity: f64,
    slots: u32,
    theta_low: f64,
    theta_slope: f64,
    theta_intercept: f64,
    realizations: u32,
    seed: u32,
    sweep_slot: u32,
    steps: u32,
) -> String {
    to_json(
        build_params(
            users,
            capacity,
            slots,
            theta_low,
            theta_slope,
            theta_intercept,
            realizations,
            seed,
        )
        .and_then(|params| sweep_impl(&params, sweep_slot, steps)),
    )
}

/// One realization under the reverse scheme, user by user.
/// `floor_ratio` outside [0, 1] selects the break-even floor.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn trace_json(
    users: u32,
    capacity: f64,
    slots: u32,
    theta_low: f64,
    theta_slope: f64,
    theta_intercept: f64,
    seed: u32,
    slot: u32,
    realization: u32,
    floor_ratio: f64,
) -> String {
    to_json(
        build_params(
            users,
            capacity,
            slots,
            theta_low,
            theta_slope,
            theta_intercept,
            1,
            seed,
        )
        .and_then(|params| trace_impl(&params, slot, realization, floor_ratio)),
    )
}
