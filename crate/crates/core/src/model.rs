//! Game parameters, payoff matrix, expected payoffs and the replicator field.
//!
//! Three populations play simultaneously:
//!
//! * the SME (α) either accepts financing (share `x`) or forgoes it,
//! * the core enterprise (β) either provides a guarantee (share `y`) or refuses,
//! * the financial institution (γ) either cooperates (share `z`) or does not.
//!
//! Blockchain adoption enters only through the cost reductions `m1..m3`; with
//! all three at zero the model is the pre-blockchain baseline.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All scalar parameters of the game, in consistent currency units.
///
/// Serialized field names follow the conventional symbols (`R1`, `C2`, `m3`,
/// `theta`, `I1`, ...) so parameter files stay readable next to the equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Baseline payoff per round of the SME.
    #[serde(rename = "R1")]
    pub base_sme: f64,
    /// Baseline payoff per round of the core enterprise.
    #[serde(rename = "R2")]
    pub base_core: f64,
    /// Baseline payoff per round of the financial institution.
    #[serde(rename = "R3")]
    pub base_fi: f64,
    /// SME search and collateral cost.
    #[serde(rename = "C1")]
    pub cost_sme: f64,
    /// Core-enterprise assessment cost.
    #[serde(rename = "C2")]
    pub cost_core: f64,
    /// Financial-institution assessment and supervision cost.
    #[serde(rename = "C3")]
    pub cost_fi: f64,
    #[serde(rename = "m1", default)]
    pub reduction_sme: f64,
    #[serde(rename = "m2", default)]
    pub reduction_core: f64,
    #[serde(rename = "m3", default)]
    pub reduction_fi: f64,
    /// SME gross gain from a completed financing round.
    #[serde(rename = "r")]
    pub financing_gain: f64,
    /// Share of the repayment burden `K + I1` carried by the SME, in `[0, 1]`.
    #[serde(rename = "theta")]
    pub burden_share: f64,
    /// Principal / collateral component of the repayment.
    #[serde(rename = "K")]
    pub principal: f64,
    /// Interest on the SME-facing loan.
    #[serde(rename = "I1")]
    pub loan_interest: f64,
    /// Interest-bearing repayment the financial institution receives from the core enterprise.
    #[serde(rename = "I2")]
    pub repayment_interest: f64,
    /// Guarantee-service income of the core enterprise.
    #[serde(rename = "S")]
    pub guarantee_income: f64,
}

/// Canonical parameter names, in declaration order.
pub const PARAM_NAMES: [&str; 15] = [
    "R1", "R2", "R3", "C1", "C2", "C3", "m1", "m2", "m3", "r", "theta", "K", "I1", "I2", "S",
];

impl ModelParams {
    /// Checks every invariant and returns the parameters unchanged, or the
    /// full list of violations.
    pub fn validate(self) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();

        for (name, value) in self.named_values() {
            if !value.is_finite() {
                errors.push(ParamError::NonFinite { field: name, value });
            }
        }

        if !(0.0..=1.0).contains(&self.burden_share) && self.burden_share.is_finite() {
            errors.push(ParamError::ThetaOutOfRange {
                value: self.burden_share,
            });
        }

        let non_negative = [
            ("C1", self.cost_sme),
            ("C2", self.cost_core),
            ("C3", self.cost_fi),
            ("m1", self.reduction_sme),
            ("m2", self.reduction_core),
            ("m3", self.reduction_fi),
            ("K", self.principal),
            ("I1", self.loan_interest),
            ("I2", self.repayment_interest),
        ];
        for (field, value) in non_negative {
            if value < 0.0 {
                errors.push(ParamError::NegativeCost { field, value });
            }
        }

        let pairs = [
            ("m1", self.reduction_sme, "C1", self.cost_sme),
            ("m2", self.reduction_core, "C2", self.cost_core),
            ("m3", self.reduction_fi, "C3", self.cost_fi),
        ];
        for (field, reduction, cost_field, cost) in pairs {
            if reduction > cost {
                errors.push(ParamError::ReductionExceedsCost {
                    field,
                    reduction,
                    cost_field,
                    cost,
                });
            }
        }

        if errors.is_empty() {
            Ok(self)
        } else {
            Err(ValidationErrors(errors))
        }
    }

    /// The same parameters with all blockchain cost reductions removed.
    pub fn baseline(&self) -> Self {
        Self {
            reduction_sme: 0.0,
            reduction_core: 0.0,
            reduction_fi: 0.0,
            ..*self
        }
    }

    /// True when at least one cost reduction is strictly positive.
    pub fn has_reductions(&self) -> bool {
        self.reductions().iter().any(|&m| m > 0.0)
    }

    pub fn reductions(&self) -> [f64; 3] {
        [self.reduction_sme, self.reduction_core, self.reduction_fi]
    }

    /// The repayment burden `K + I1`.
    pub fn repayment_burden(&self) -> f64 {
        self.principal + self.loan_interest
    }

    /// SME net gain of a completed round, `r − θ(K + I1)`.
    pub fn sme_net_gain(&self) -> f64 {
        self.financing_gain - self.burden_share * self.repayment_burden()
    }

    /// Core-enterprise net gain of a completed round, `I1 − I2 + S − (1 − θ)(K + I1)`.
    pub fn core_net_gain(&self) -> f64 {
        self.loan_interest - self.repayment_interest + self.guarantee_income
            - (1.0 - self.burden_share) * self.repayment_burden()
    }

    /// Net participation costs `C_i − m_i` for (α, β, γ).
    pub fn net_costs(&self) -> [f64; 3] {
        [
            self.cost_sme - self.reduction_sme,
            self.cost_core - self.reduction_core,
            self.cost_fi - self.reduction_fi,
        ]
    }

    /// `(name, value)` pairs in [`PARAM_NAMES`] order.
    pub fn named_values(&self) -> [(&'static str, f64); 15] {
        [
            ("R1", self.base_sme),
            ("R2", self.base_core),
            ("R3", self.base_fi),
            ("C1", self.cost_sme),
            ("C2", self.cost_core),
            ("C3", self.cost_fi),
            ("m1", self.reduction_sme),
            ("m2", self.reduction_core),
            ("m3", self.reduction_fi),
            ("r", self.financing_gain),
            ("theta", self.burden_share),
            ("K", self.principal),
            ("I1", self.loan_interest),
            ("I2", self.repayment_interest),
            ("S", self.guarantee_income),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.named_values()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v)
    }

    /// Sets a parameter by its canonical name. Returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "R1" => &mut self.base_sme,
            "R2" => &mut self.base_core,
            "R3" => &mut self.base_fi,
            "C1" => &mut self.cost_sme,
            "C2" => &mut self.cost_core,
            "C3" => &mut self.cost_fi,
            "m1" => &mut self.reduction_sme,
            "m2" => &mut self.reduction_core,
            "m3" => &mut self.reduction_fi,
            "r" => &mut self.financing_gain,
            "theta" => &mut self.burden_share,
            "K" => &mut self.principal,
            "I1" => &mut self.loan_interest,
            "I2" => &mut self.repayment_interest,
            "S" => &mut self.guarantee_income,
            _ => return false,
        };
        *slot = value;
        true
    }

    /// Stable 64-bit fingerprint of the exact parameter bits (FNV-1a).
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, value) in self.named_values() {
            for byte in value.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}

/// A single violated parameter invariant.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParamError {
    #[error("theta = {value} is outside [0, 1]")]
    ThetaOutOfRange { value: f64 },
    #[error("{field} = {value} must be non-negative")]
    NegativeCost { field: &'static str, value: f64 },
    #[error("{field} = {reduction} exceeds the cost it reduces ({cost_field} = {cost})")]
    ReductionExceedsCost {
        field: &'static str,
        reduction: f64,
        cost_field: &'static str,
        cost: f64,
    },
    #[error("{field} = {value} is not finite")]
    NonFinite { field: &'static str, value: f64 },
}

impl ParamError {
    /// Name of the offending parameter.
    pub fn field(&self) -> &'static str {
        match self {
            ParamError::ThetaOutOfRange { .. } => "theta",
            ParamError::NegativeCost { field, .. }
            | ParamError::ReductionExceedsCost { field, .. }
            | ParamError::NonFinite { field, .. } => field,
        }
    }
}

/// Every invariant violation found in one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationErrors(pub Vec<ParamError>);

impl ValidationErrors {
    pub fn errors(&self) -> &[ParamError] {
        &self.0
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, err) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{err}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// Mixed-strategy point in the unit cube.
///
/// `x`: share of SMEs accepting financing, `y`: share of core enterprises
/// providing guarantees, `z`: share of financial institutions cooperating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
#[error("strategy state ({x}, {y}, {z}) is outside the unit cube")]
pub struct OutsideCube {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Cube vertices in the conventional E1..E8 order.
pub const VERTICES: [StrategyState; 8] = [
    StrategyState::raw(0.0, 0.0, 0.0),
    StrategyState::raw(1.0, 0.0, 0.0),
    StrategyState::raw(0.0, 1.0, 0.0),
    StrategyState::raw(0.0, 0.0, 1.0),
    StrategyState::raw(0.0, 1.0, 1.0),
    StrategyState::raw(1.0, 0.0, 1.0),
    StrategyState::raw(1.0, 1.0, 0.0),
    StrategyState::raw(1.0, 1.0, 1.0),
];

impl StrategyState {
    /// Builds a state, rejecting coordinates outside `[0, 1]` (NaN included).
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, OutsideCube> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if inside(x) && inside(y) && inside(z) {
            Ok(Self { x, y, z })
        } else {
            Err(OutsideCube { x, y, z })
        }
    }

    const fn raw(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Clamps each coordinate into `[0, 1]`.
    pub fn clamped(x: f64, y: f64, z: f64) -> Self {
        Self {
            x: x.clamp(0.0, 1.0),
            y: y.clamp(0.0, 1.0),
            z: z.clamp(0.0, 1.0),
        }
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self, OutsideCube> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance(&self, other: &StrategyState) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// 1-based E-index if this state is exactly a cube vertex.
    pub fn vertex_index(&self) -> Option<usize> {
        VERTICES.iter().position(|v| v == self).map(|i| i + 1)
    }

    /// The closest vertex and its E-index.
    pub fn nearest_vertex(&self) -> (usize, StrategyState) {
        let snapped = Self::raw(self.x.round(), self.y.round(), self.z.round());
        let index = snapped.vertex_index().unwrap_or(1);
        (index, snapped)
    }
}

/// Pure strategy profile: one action per population.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PureProfile {
    pub sme_finances: bool,
    pub core_guarantees: bool,
    pub fi_cooperates: bool,
}

impl PureProfile {
    pub const fn new(sme_finances: bool, core_guarantees: bool, fi_cooperates: bool) -> Self {
        Self {
            sme_finances,
            core_guarantees,
            fi_cooperates,
        }
    }

    /// All eight profiles.
    pub fn all() -> [PureProfile; 8] {
        let mut out = [PureProfile::new(false, false, false); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = PureProfile::new(i & 4 != 0, i & 2 != 0, i & 1 != 0);
        }
        out
    }

    /// Probability of this profile when populations play `state` independently.
    pub fn probability(&self, state: &StrategyState) -> f64 {
        let pick = |chosen: bool, p: f64| if chosen { p } else { 1.0 - p };
        pick(self.sme_finances, state.x)
            * pick(self.core_guarantees, state.y)
            * pick(self.fi_cooperates, state.z)
    }
}

/// Per-player payoffs of one pure profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffTriple {
    pub u_alpha: f64,
    pub u_beta: f64,
    pub u_gamma: f64,
}

/// Payoff-matrix cell for a pure profile.
///
/// Each player pays its net cost whenever it participates; the completed
/// round (all three participate) adds the financing transfers on top. The
/// core enterprise's completed-round term is `I1 − I2 + S − (1 − θ)(K + I1)`,
/// the same bracket that drives its replicator equation.
pub fn pure_payoffs(params: &ModelParams, profile: PureProfile) -> PayoffTriple {
    let [net_sme, net_core, net_fi] = params.net_costs();
    let complete = profile.sme_finances && profile.core_guarantees && profile.fi_cooperates;

    let mut u_alpha = params.base_sme;
    let mut u_beta = params.base_core;
    let mut u_gamma = params.base_fi;

    if profile.sme_finances {
        u_alpha -= net_sme;
    }
    if profile.core_guarantees {
        u_beta -= net_core;
    }
    if profile.fi_cooperates {
        u_gamma -= net_fi;
    }
    if complete {
        u_alpha += params.sme_net_gain();
        u_beta += params.core_net_gain();
        u_gamma += params.repayment_interest;
    }

    PayoffTriple {
        u_alpha,
        u_beta,
        u_gamma,
    }
}

/// Expected payoffs of each strategy and each population's average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPayoffs {
    /// `E_x`: SME accepting financing.
    pub sme_finance: f64,
    /// `E_{1−x}`: SME forgoing financing.
    pub sme_refuse: f64,
    /// `E_s`: SME population average.
    pub sme_mean: f64,
    /// `E_y`: core enterprise guaranteeing.
    pub core_guarantee: f64,
    /// `E_{1−y}`
    pub core_refuse: f64,
    /// `E_c`
    pub core_mean: f64,
    /// `E_z`: financial institution cooperating.
    pub fi_cooperate: f64,
    /// `E_{1−z}`
    pub fi_refuse: f64,
    /// `E_d`
    pub fi_mean: f64,
}

pub fn expected_payoffs(params: &ModelParams, state: &StrategyState) -> ExpectedPayoffs {
    let StrategyState { x, y, z } = *state;
    let [net_sme, net_core, net_fi] = params.net_costs();

    let sme_finance = params.base_sme - net_sme + y * z * params.sme_net_gain();
    let sme_refuse = params.base_sme;
    let core_guarantee = params.base_core - net_core + x * z * params.core_net_gain();
    let core_refuse = params.base_core;
    let fi_cooperate = params.base_fi - net_fi + x * y * params.repayment_interest;
    let fi_refuse = params.base_fi;

    ExpectedPayoffs {
        sme_finance,
        sme_refuse,
        sme_mean: x * sme_finance + (1.0 - x) * sme_refuse,
        core_guarantee,
        core_refuse,
        core_mean: y * core_guarantee + (1.0 - y) * core_refuse,
        fi_cooperate,
        fi_refuse,
        fi_mean: z * fi_cooperate + (1.0 - z) * fi_refuse,
    }
}

/// Time derivative `(dx/dt, dy/dt, dz/dt)` of the replicator system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Velocity {
    pub fn norm(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy + self.dz * self.dz).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }
}

/// The replicator vector field in factored form.
pub fn replicator_field(params: &ModelParams, state: &StrategyState) -> Velocity {
    let StrategyState { x, y, z } = *state;
    let burden = params.repayment_burden();
    let theta = params.burden_share;

    let sme_bracket = y * z * params.financing_gain - y * z * theta * burden - params.cost_sme
        + params.reduction_sme;
    let core_bracket =
        x * z * (params.loan_interest - params.repayment_interest + params.guarantee_income)
            - x * z * (1.0 - theta) * burden
            - params.cost_core
            + params.reduction_core;
    let fi_bracket = x * y * params.repayment_interest - params.cost_fi + params.reduction_fi;

    Velocity {
        dx: x * (1.0 - x) * sme_bracket,
        dy: y * (1.0 - y) * core_bracket,
        dz: z * (1.0 - z) * fi_bracket,
    }
}

/// The same field computed as `x(E_x − E_s)`, `y(E_y − E_c)`, `z(E_z − E_d)`.
pub fn replicator_field_from_payoffs(params: &ModelParams, state: &StrategyState) -> Velocity {
    let e = expected_payoffs(params, state);
    Velocity {
        dx: state.x * (e.sme_finance - e.sme_mean),
        dy: state.y * (e.core_guarantee - e.core_mean),
        dz: state.z * (e.fi_cooperate - e.fi_mean),
    }
}
