//! Benchmark loan rates by term, turned into interest amounts for `I1` / `I2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use scfgame_core::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoanTerm {
    WithinOneYear,
    OneToFiveYears,
    AboveFiveYears,
}

impl LoanTerm {
    pub const ALL: [LoanTerm; 3] = [
        LoanTerm::WithinOneYear,
        LoanTerm::OneToFiveYears,
        LoanTerm::AboveFiveYears,
    ];

    /// Benchmark annual rate for the term class.
    pub fn annual_rate(self) -> f64 {
        match self {
            LoanTerm::WithinOneYear => 0.0435,
            LoanTerm::OneToFiveYears => 0.0475,
            LoanTerm::AboveFiveYears => 0.049,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePreset {
    pub term: LoanTerm,
    pub principal: f64,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("rate preset principal must be finite and non-negative, got {0}")]
pub struct InvalidPrincipal(pub f64);

impl RatePreset {
    pub fn new(term: LoanTerm, principal: f64) -> Result<Self, InvalidPrincipal> {
        if principal.is_finite() && principal >= 0.0 {
            Ok(Self { term, principal })
        } else {
            Err(InvalidPrincipal(principal))
        }
    }

    pub fn validate(self) -> Result<Self, InvalidPrincipal> {
        Self::new(self.term, self.principal)
    }

    pub fn interest(&self) -> f64 {
        self.principal * self.term.annual_rate()
    }
}

/// Sets the SME-facing loan interest `I1` from a rate preset.
pub fn apply_rate_preset(preset: RatePreset, params: ModelParams) -> ModelParams {
    ModelParams {
        loan_interest: preset.interest(),
        ..params
    }
}

/// Sets the repayment interest `I2` received by the financial institution.
pub fn apply_repayment_rate_preset(preset: RatePreset, params: ModelParams) -> ModelParams {
    ModelParams {
        repayment_interest: preset.interest(),
        ..params
    }
}
