//! Length-scale schedules and the admissible decay regimes.

/// `eps = n^{-beta}`.
pub fn eps_schedule(n: usize, beta: f64) -> f64 {
    (n as f64).powf(-beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    I1,
    I2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RateCheck {
    Valid,
    Invalid(String),
}

/// Strict upper bound on `beta` for `n^{-beta}` to satisfy `condition`.
pub fn rate_threshold(alpha: f64, d: usize, condition: Condition) -> f64 {
    let d = d as f64;
    let classical = alpha == 0.0 || alpha == 1.0;
    match (condition, classical) {
        (Condition::I1, true) => 2.0 / (d + 1.0),
        (Condition::I2, true) => (1.0 / d).min(0.5),
        (_, false) => 1.0 / (d + 1.0),
    }
}

/// Checks `beta` against the threshold. Experiments may violate it on
/// purpose, so callers only warn.
pub fn validate_rate(alpha: f64, d: usize, beta: f64, condition: Condition) -> RateCheck {
    let t = rate_threshold(alpha, d, condition);
    if beta < t {
        RateCheck::Valid
    } else {
        RateCheck::Invalid(format!("{condition:?}: beta = {beta} is not below {t} for alpha = {alpha}, d = {d}"))
    }
}
