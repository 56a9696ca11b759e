//! Named parameter sets used by the CLI, the examples and the tests.

use crate::model::ModelParams;

/// Baseline (no cost reductions) with all three full-cooperation conditions
/// met and every `C_i > 0`: both the origin and full cooperation attract.
pub fn bistable() -> ModelParams {
    ModelParams {
        base_sme: 10.0,
        base_core: 10.0,
        base_fi: 10.0,
        cost_sme: 2.0,
        cost_core: 3.0,
        cost_fi: 0.35,
        reduction_sme: 0.0,
        reduction_core: 0.0,
        reduction_fi: 0.0,
        financing_gain: 5.0,
        burden_share: 0.5,
        principal: 4.0,
        loan_interest: 1.0,
        repayment_interest: 0.5,
        guarantee_income: 6.0,
    }
}

/// Baseline fails the SME and financial-institution conditions (margins
/// −0.5 and −0.1); the cost reductions `m = (1, 0.5, 0.2)` lift both above zero.
pub fn blockchain() -> ModelParams {
    ModelParams {
        cost_sme: 3.0,
        cost_fi: 0.6,
        reduction_sme: 1.0,
        reduction_core: 0.5,
        reduction_fi: 0.2,
        ..bistable()
    }
}

/// Financing never pays for the SME (`r + m1 < C1`), so every interior
/// trajectory collapses to the origin.
pub fn no_financing() -> ModelParams {
    ModelParams {
        cost_sme: 6.0,
        ..bistable()
    }
}

pub const NAMES: [&str; 3] = ["bistable", "blockchain", "no_financing"];

pub fn by_name(name: &str) -> Option<ModelParams> {
    match name {
        "bistable" => Some(bistable()),
        "blockchain" => Some(blockchain()),
        "no_financing" => Some(no_financing()),
        _ => None,
    }
}
