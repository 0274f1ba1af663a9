use thiserror::Error;

/// Errors produced by the market, pricing, and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite and nonnegative, got {value}")]
    NegativeInput { name: &'static str, value: f64 },
    #[error("{name} must be finite and positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be at least 1")]
    ZeroCount { name: &'static str },
    #[error("slot index {slot} out of range for a horizon of {num_slots} slots")]
    SlotOutOfRange { slot: usize, num_slots: usize },
    #[error("expected data for {expected} users, got {actual}")]
    UserCountMismatch { expected: usize, actual: usize },
    #[error("demand spread at user {user}, slot {slot} is negative")]
    NegativeSpread { user: usize, slot: usize },
    #[error("willingness floor at user {user}, slot {slot} is negative (spread exceeds mean)")]
    NegativeWillingnessFloor { user: usize, slot: usize },
    #[error("upper willingness bound {hi} is below lower bound {lo}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("demand model has no positive willingness to pay at slot {slot}; the posted price would be zero")]
    ZeroDemandSlot { slot: usize },
    #[error("unit price must be positive, got {value}")]
    NonPositivePrice { value: f64 },
    #[error("recommended bundle must be positive to price it against the posted contract")]
    ZeroRecommendation,
    #[error("bid interval is empty: min price {min_price} is not below posted price {posted_price}")]
    DegenerateBidInterval { min_price: f64, posted_price: f64 },
    #[error("user is outside the participation set: min price {min_price} exceeds indifference price {indifference}")]
    NotParticipant { min_price: f64, indifference: f64 },
    #[error("sweep ratio {value} is outside [0, 1]")]
    RatioOutOfRange { value: f64 },
    #[error("policy ratio {value} is outside [0, 1]")]
    PolicyRatioOutOfRange { value: f64 },

    // Scenario-config errors; the CLI maps these onto its config exit code.
    #[error("config: missing required key `{0}`")]
    MissingKey(String),
    #[error("config: unknown key `{0}`")]
    UnknownKey(String),
    #[error("config: duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("config: invalid value `{value}` for key `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("config: key `{0}` is required to run a sweep")]
    MissingSweepKey(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
