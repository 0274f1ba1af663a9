//! Scenario configs and the CSV tables built from them.
//!
//! Configs are flat `key = value` text with `#` comments, so they stay
//! trivially parseable from any language. CSV output is byte-stable: fixed
//! column order, fixed row order, and floats rendered with 12 significant
//! digits.

use crate::error::{Error, Result};
use crate::market::{uniform_demand_model, DemandModel, MarketConfig, ThetaHighRule};
use crate::montecarlo::{run_horizon, run_pmin_sweep, Scheme, SlotMetrics};
use crate::reverse::PminPolicy;

/// Everything a batch run needs: market shape, demand statistics, floor
/// policy, and Monte Carlo controls. `sweep_slot` / `sweep_ratios` are only
/// required for sweep runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub total_resource: f64,
    pub num_slots: usize,
    pub theta_low: f64,
    pub theta_high_rule: ThetaHighRule,
    pub p_min_policy: PminPolicy,
    pub num_realizations: usize,
    pub master_seed: u64,
    /// One-based slot number, as in the config file.
    pub sweep_slot: Option<usize>,
    pub sweep_ratios: Option<Vec<f64>>,
}

const REQUIRED_KEYS: [&str; 8] = [
    "num_users",
    "total_resource",
    "num_slots",
    "theta_low",
    "theta_high_rule",
    "p_min_policy",
    "num_realizations",
    "master_seed",
];

impl ScenarioConfig {
    /// Parses the flat `key = value` format. Unknown, duplicate, or missing
    /// keys are reported by name.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: Vec<(String, String)> = Vec::new();
        for raw_line in text.lines() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::InvalidValue {
                key: line.to_string(),
                value: String::new(),
                reason: "expected `key = value`".to_string(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if seen.iter().any(|(k, _)| *k == key) {
                return Err(Error::DuplicateKey(key));
            }
            seen.push((key, value));
        }

        let lookup = |key: &str| seen.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        for (key, _) in &seen {
            let known = REQUIRED_KEYS.contains(&key.as_str())
                || key == "sweep_slot"
                || key == "sweep_ratios";
            if !known {
                return Err(Error::UnknownKey(key.clone()));
            }
        }
        for key in REQUIRED_KEYS {
            if lookup(key).is_none() {
                return Err(Error::MissingKey(key.to_string()));
            }
        }

        let config = ScenarioConfig {
            num_users: parse_num(lookup("num_users").unwrap(), "num_users")?,
            total_resource: parse_num(lookup("total_resource").unwrap(), "total_resource")?,
            num_slots: parse_num(lookup("num_slots").unwrap(), "num_slots")?,
            theta_low: parse_num(lookup("theta_low").unwrap(), "theta_low")?,
            theta_high_rule: parse_high_rule(lookup("theta_high_rule").unwrap())?,
            p_min_policy: parse_policy(lookup("p_min_policy").unwrap())?,
            num_realizations: parse_num(lookup("num_realizations").unwrap(), "num_realizations")?,
            master_seed: parse_num(lookup("master_seed").unwrap(), "master_seed")?,
            sweep_slot: lookup("sweep_slot")
                .map(|v| parse_num(v, "sweep_slot"))
                .transpose()?,
            sweep_ratios: lookup("sweep_ratios").map(parse_ratios).transpose()?,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(invalid("num_users", "0", "must be at least 1"));
        }
        if self.num_slots == 0 {
            return Err(invalid("num_slots", "0", "must be at least 1"));
        }
        if self.num_realizations == 0 {
            return Err(invalid("num_realizations", "0", "must be at least 1"));
        }
        if !(self.total_resource > 0.0) {
            return Err(invalid(
                "total_resource",
                &self.total_resource.to_string(),
                "must be positive",
            ));
        }
        if !(self.theta_low >= 0.0) {
            return Err(invalid(
                "theta_low",
                &self.theta_low.to_string(),
                "must be nonnegative",
            ));
        }
        if let Some(slot) = self.sweep_slot {
            if slot == 0 || slot > self.num_slots {
                return Err(invalid(
                    "sweep_slot",
                    &slot.to_string(),
                    "must be between 1 and num_slots",
                ));
            }
        }
        if let Some(ratios) = &self.sweep_ratios {
            for &r in ratios {
                if !(0.0..=1.0).contains(&r) {
                    return Err(invalid(
                        "sweep_ratios",
                        &r.to_string(),
                        "every ratio must lie in [0, 1]",
                    ));
                }
            }
        }
        if let PminPolicy::Ratio(r) = self.p_min_policy {
            if !(0.0..=1.0).contains(&r) {
                return Err(invalid(
                    "p_min_policy",
                    &format!("ratio:{r}"),
                    "ratio must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parsing it back yields an equal config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("num_users = {}\n", self.num_users));
        out.push_str(&format!("total_resource = {}\n", self.total_resource));
        out.push_str(&format!("num_slots = {}\n", self.num_slots));
        out.push_str(&format!("theta_low = {}\n", self.theta_low));
        let rule = match self.theta_high_rule {
            ThetaHighRule::Constant(hi) => format!("constant:{hi}"),
            ThetaHighRule::Linear { slope, intercept } => format!("linear:{slope},{intercept}"),
        };
        out.push_str(&format!("theta_high_rule = {rule}\n"));
        let policy = match self.p_min_policy {
            PminPolicy::BreakEven => "lemma1".to_string(),
            PminPolicy::Ratio(r) => format!("ratio:{r}"),
            PminPolicy::Absolute(a) => format!("absolute:{a}"),
        };
        out.push_str(&format!("p_min_policy = {policy}\n"));
        out.push_str(&format!("num_realizations = {}\n", self.num_realizations));
        out.push_str(&format!("master_seed = {}\n", self.master_seed));
        if let Some(slot) = self.sweep_slot {
            out.push_str(&format!("sweep_slot = {slot}\n"));
        }
        if let Some(ratios) = &self.sweep_ratios {
            let joined: Vec<String> = ratios.iter().map(|r| r.to_string()).collect();
            out.push_str(&format!("sweep_ratios = {}\n", joined.join(",")));
        }
        out
    }

    pub fn market(&self) -> Result<MarketConfig> {
        MarketConfig::new(self.total_resource, self.num_users, self.num_slots)
    }

    pub fn demand_model(&self) -> Result<DemandModel> {
        uniform_demand_model(
            self.theta_low,
            self.theta_high_rule,
            self.num_users,
            self.num_slots,
        )
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(key, value, "not a valid number"))
}

fn parse_high_rule(value: &str) -> Result<ThetaHighRule> {
    if let Some(rest) = value.strip_prefix("constant:") {
        return Ok(ThetaHighRule::Constant(parse_num(
            rest.trim(),
            "theta_high_rule",
        )?));
    }
    if let Some(rest) = value.strip_prefix("linear:") {
        let (a, b) = rest.split_once(',').ok_or_else(|| {
            invalid("theta_high_rule", value, "expected `linear:slope,intercept`")
        })?;
        return Ok(ThetaHighRule::Linear {
            slope: parse_num(a.trim(), "theta_high_rule")?,
            intercept: parse_num(b.trim(), "theta_high_rule")?,
        });
    }
    Err(invalid(
        "theta_high_rule",
        value,
        "expected `constant:hi` or `linear:slope,intercept`",
    ))
}

fn parse_policy(value: &str) -> Result<PminPolicy> {
    if value == "lemma1" {
        return Ok(PminPolicy::BreakEven);
    }
    if let Some(rest) = value.strip_prefix("ratio:") {
        return Ok(PminPolicy::Ratio(parse_num(rest.trim(), "p_min_policy")?));
    }
    if let Some(rest) = value.strip_prefix("absolute:") {
        return Ok(PminPolicy::Absolute(parse_num(
            rest.trim(),
            "p_min_policy",
        )?));
    }
    Err(invalid(
        "p_min_policy",
        value,
        "expected `lemma1`, `ratio:r`, or `absolute:a`",
    ))
}

fn parse_ratios(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_num(part.trim(), "sweep_ratios"))
        .collect()
}

/// Renders a float with 12 significant digits in plain positional notation.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (11 - exponent).clamp(0, 32) as usize;
    format!("{x:.decimals$}")
}

pub const SIMULATE_HEADER: &str =
    "slot,scheme,avg_demand,avg_revenue,avg_payoff,avg_utilization,admission_warning";
pub const SWEEP_HEADER: &str = "ratio,scheme,avg_demand,avg_revenue,avg_payoff,avg_utilization";

fn metric_fields(m: &SlotMetrics) -> String {
    format!(
        "{},{},{},{}",
        fmt_sig12(m.avg_demand),
        fmt_sig12(m.avg_revenue),
        fmt_sig12(m.avg_payoff),
        fmt_sig12(m.avg_utilization),
    )
}

/// Runs the full horizon under both schemes and renders the per-slot table.
/// Rows are ordered slot then scheme; the slot column is one-based.
pub fn simulate_csv(cfg: &ScenarioConfig) -> Result<String> {
    let market = cfg.market()?;
    let model = cfg.demand_model()?;
    let rows = run_horizon(
        &market,
        &model,
        &[Scheme::ForwardOnly, Scheme::ReverseOnForward],
        cfg.p_min_policy,
        cfg.num_realizations,
        cfg.master_seed,
    )?;
    let mut out = String::from(SIMULATE_HEADER);
    out.push('\n');
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            m.slot + 1,
            m.scheme.name(),
            metric_fields(&m),
            m.admission_warning,
        ));
    }
    Ok(out)
}

/// Runs the participation-floor sweep at the configured slot and renders the
/// per-ratio table. Rows are ordered ratio then scheme; forward rows repeat
/// the ratio-independent baseline.
pub fn sweep_csv(cfg: &ScenarioConfig) -> Result<String> {
    let slot = cfg.sweep_slot.ok_or(Error::MissingSweepKey("sweep_slot"))?;
    let ratios = cfg
        .sweep_ratios
        .as_ref()
        .ok_or(Error::MissingSweepKey("sweep_ratios"))?;
    let market = cfg.market()?;
    let model = cfg.demand_model()?;
    let points = run_pmin_sweep(
        &market,
        &model,
        slot - 1,
        ratios,
        cfg.num_realizations,
        cfg.master_seed,
    )?;
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for point in points {
        for m in [&point.forward, &point.reverse] {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_sig12(point.ratio),
                m.scheme.name(),
                metric_fields(m),
            ));
        }
    }
    Ok(out)
}
