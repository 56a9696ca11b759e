//! Equilibria, the analytical Jacobian, local stability and the closed-form
//! conditions for full cooperation `E8 = (1, 1, 1)` to be evolutionarily stable.

mod eigen;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{replicator_field, ModelParams, StrategyState, VERTICES};

pub use eigen::{characteristic_cubic, eigenvalues, shifted_determinant};

/// Field-norm bound every reported equilibrium must satisfy.
pub const CERTIFY_TOL: f64 = 1e-9;

/// Default tolerance on eigenvalue real parts for hyperbolicity.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("all cost reductions are zero; baseline and blockchain models coincide")]
    ComparisonDegenerate,
}

/// ∂(F, G, H)/∂(x, y, z), row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianMatrix(pub [[f64; 3]; 3]);

impl JacobianMatrix {
    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.0[0][0], self.0[1][1], self.0[2][2]]
    }

    pub fn is_diagonal(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.0[i][j] == 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn eigenvalues(&self) -> [Complex64; 3] {
        eigenvalues(&self.0)
    }
}

/// Analytical Jacobian of the replicator field at `state`.
pub fn jacobian(params: &ModelParams, state: &StrategyState) -> JacobianMatrix {
    let StrategyState { x, y, z } = *state;
    let sme_gain = params.sme_net_gain();
    let core_gain = params.core_net_gain();
    let transfer = params.repayment_interest;
    let [net_sme, net_core, net_fi] = params.net_costs();

    let vx = x * (1.0 - x);
    let vy = y * (1.0 - y);
    let vz = z * (1.0 - z);

    JacobianMatrix([
        [
            (1.0 - 2.0 * x) * (y * z * sme_gain - net_sme),
            vx * z * sme_gain,
            vx * y * sme_gain,
        ],
        [
            vy * z * core_gain,
            (1.0 - 2.0 * y) * (x * z * core_gain - net_core),
            vy * x * core_gain,
        ],
        [
            vz * y * transfer,
            vz * x * transfer,
            (1.0 - 2.0 * z) * (x * y * transfer - net_fi),
        ],
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "index")]
pub enum EquilibriumKind {
    /// Cube vertex `E1`..`E8`.
    Vertex(u8),
    Interior,
    FaceOrEdge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub point: StrategyState,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    pub fn label(&self) -> String {
        match self.kind {
            EquilibriumKind::Vertex(i) => format!("E{i}"),
            EquilibriumKind::Interior => "interior".into(),
            EquilibriumKind::FaceOrEdge => "face".into(),
        }
    }
}

fn positive_ratio(num: f64, den: f64) -> Option<f64> {
    let v = num / den;
    (v.is_finite() && v > 0.0).then_some(v)
}

fn open_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn certified(params: &ModelParams, point: StrategyState) -> bool {
    replicator_field(params, &point).norm() < CERTIFY_TOL
}

/// Products `(yz, xz, xy)` at which the three brackets vanish.
fn bracket_roots(params: &ModelParams) -> (Option<f64>, Option<f64>, Option<f64>) {
    let [net_sme, net_core, net_fi] = params.net_costs();
    (
        positive_ratio(net_sme, params.sme_net_gain()),
        positive_ratio(net_core, params.core_net_gain()),
        positive_ratio(net_fi, params.repayment_interest),
    )
}

/// The interior fixed point where all three brackets vanish, if it lies in `(0, 1)³`.
pub fn interior_equilibrium(params: &ModelParams) -> Option<StrategyState> {
    let (Some(a), Some(b), Some(c)) = bracket_roots(params) else {
        return None;
    };
    let x = (b * c / a).sqrt();
    let y = (a * c / b).sqrt();
    let z = (a * b / c).sqrt();
    if !(open_unit(x) && open_unit(y) && open_unit(z)) {
        return None;
    }
    let point = StrategyState { x, y, z };
    certified(params, point).then_some(point)
}

/// The eight vertices `E1`..`E8`, plus the interior fixed point when it exists.
pub fn enumerate_equilibria(params: &ModelParams) -> Vec<Equilibrium> {
    let mut out: Vec<Equilibrium> = VERTICES
        .iter()
        .enumerate()
        .map(|(i, v)| Equilibrium {
            point: *v,
            kind: EquilibriumKind::Vertex(i as u8 + 1),
        })
        .collect();
    if let Some(point) = interior_equilibrium(params) {
        out.push(Equilibrium {
            point,
            kind: EquilibriumKind::Interior,
        });
    }
    out
}

/// Isolated fixed points inside the faces `x = 1`, `y = 1` and `z = 1`.
///
/// On the faces where a coordinate is 0 the field reduces to pure cost decay,
/// so no isolated face points exist there. Continua of equilibria (a bracket
/// vanishing identically) are not enumerated.
pub fn boundary_equilibria(params: &ModelParams) -> Vec<Equilibrium> {
    let (a, b, c) = bracket_roots(params);
    let candidates = [
        // x = 1: xz = b, xy = c
        c.zip(b).map(|(c, b)| StrategyState { x: 1.0, y: c, z: b }),
        // y = 1: yz = a, xy = c
        c.zip(a).map(|(c, a)| StrategyState { x: c, y: 1.0, z: a }),
        // z = 1: yz = a, xz = b
        b.zip(a).map(|(b, a)| StrategyState { x: b, y: a, z: 1.0 }),
    ];
    candidates
        .into_iter()
        .flatten()
        .filter(|p| {
            let free: Vec<f64> = p.to_array().into_iter().filter(|&v| v != 1.0).collect();
            free.len() == 2 && free.iter().all(|&v| open_unit(v))
        })
        .filter(|p| certified(params, *p))
        .map(|point| Equilibrium {
            point,
            kind: EquilibriumKind::FaceOrEdge,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityClass {
    /// Every eigenvalue has negative real part.
    #[serde(rename = "ESS")]
    Ess,
    Unstable,
    Saddle,
    NonHyperbolic,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StabilityClass::Ess => "ESS",
            StabilityClass::Unstable => "Unstable",
            StabilityClass::Saddle => "Saddle",
            StabilityClass::NonHyperbolic => "NonHyperbolic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: StabilityClass,
    pub eigenvalues: [Complex64; 3],
    pub tol: f64,
}

/// Sign pattern of the eigenvalue real parts.
pub fn classify_eigenvalues(eigenvalues: &[Complex64; 3], tol: f64) -> StabilityClass {
    if eigenvalues.iter().any(|l| l.re.abs() <= tol) {
        StabilityClass::NonHyperbolic
    } else if eigenvalues.iter().all(|l| l.re < 0.0) {
        StabilityClass::Ess
    } else if eigenvalues.iter().all(|l| l.re > 0.0) {
        StabilityClass::Unstable
    } else {
        StabilityClass::Saddle
    }
}

pub fn classify(params: &ModelParams, eq: &Equilibrium, tol: f64) -> Classification {
    let eigenvalues = jacobian(params, &eq.point).eigenvalues();
    Classification {
        class: classify_eigenvalues(&eigenvalues, tol),
        eigenvalues,
        tol,
    }
}

/// Classification of full cooperation `E8`.
pub fn classify_full_cooperation(params: &ModelParams, tol: f64) -> Classification {
    let e8 = Equilibrium {
        point: VERTICES[7],
        kind: EquilibriumKind::Vertex(8),
    };
    classify(params, &e8, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Baseline,
    Blockchain,
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelTag::Baseline => "baseline",
            ModelTag::Blockchain => "blockchain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssCondition {
    /// `A1`, `A2` or `A3`.
    pub label: String,
    /// The inequality in symbols, e.g. `I2 > C3`.
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl EssCondition {
    fn new(label: &str, inequality: String, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            label: label.into(),
            inequality,
            lhs,
            rhs,
            satisfied: margin > 0.0,
            margin,
            note: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssConditionReport {
    pub model_tag: ModelTag,
    pub conditions: [EssCondition; 3],
}

impl EssConditionReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn margins(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.conditions[i].margin)
    }
}

/// The three conditions under which `E8` is an ESS, evaluated with the
/// present cost reductions.
///
/// Condition `k` is the negated `k`-th diagonal entry of the Jacobian at `E8`:
///
/// * A1: `r + m1 > C1 + θ(I1 + K)`
/// * A2: `S + θ(I1 + K) + m2 > I2 + K + C2`
/// * A3: `I2 + m3 > C3`
///
/// With all `m_i = 0` the reduction terms are dropped from the printed form.
pub fn ess_conditions(params: &ModelParams) -> EssConditionReport {
    let tag = if params.has_reductions() {
        ModelTag::Blockchain
    } else {
        ModelTag::Baseline
    };
    let with_m = |base: &str, m: &str| match tag {
        ModelTag::Baseline => base.to_string(),
        ModelTag::Blockchain => format!("{base} + {m}"),
    };
    let theta_burden = params.burden_share * params.repayment_burden();

    let mut a1 = EssCondition::new(
        "A1",
        format!("{} > C1 + θ(I1 + K)", with_m("r", "m1")),
        params.financing_gain + params.reduction_sme,
        params.cost_sme + theta_burden,
    );
    a1.note = Some(
        "cost form: the constant 1 of the form r > 1 + θ(I1 + K) is read as the SME cost C1".into(),
    );
    let a2 = EssCondition::new(
        "A2",
        format!("{} > I2 + K + C2", with_m("S + θ(I1 + K)", "m2")),
        params.guarantee_income + theta_burden + params.reduction_core,
        params.repayment_interest + params.principal + params.cost_core,
    );
    let a3 = EssCondition::new(
        "A3",
        format!("{} > C3", with_m("I2", "m3")),
        params.repayment_interest + params.reduction_fi,
        params.cost_fi,
    );

    EssConditionReport {
        model_tag: tag,
        conditions: [a1, a2, a3],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub baseline: EssConditionReport,
    pub blockchain: EssConditionReport,
    pub baseline_e8: StabilityClass,
    pub blockchain_e8: StabilityClass,
    /// Blockchain margin minus baseline margin, per condition.
    pub margin_shift: [f64; 3],
    pub pareto_flag: bool,
}

impl ModelComparison {
    /// `E8` is an ESS with the reductions and was not without them.
    pub fn stability_flip(&self) -> bool {
        self.blockchain_e8 == StabilityClass::Ess && self.baseline_e8 != StabilityClass::Ess
    }
}

/// Baseline (`m = 0`) against the given cost reductions.
pub fn compare_models(params: &ModelParams) -> Result<ModelComparison, StabilityError> {
    if !params.has_reductions() {
        return Err(StabilityError::ComparisonDegenerate);
    }
    let base_params = params.baseline();
    let baseline = ess_conditions(&base_params);
    let blockchain = ess_conditions(params);
    let base_margins = baseline.margins();
    let chain_margins = blockchain.margins();
    let reductions = params.reductions();

    let margin_shift = [0, 1, 2].map(|i| chain_margins[i] - base_margins[i]);
    let pareto_flag = (0..3).all(|i| {
        if reductions[i] > 0.0 {
            chain_margins[i] > base_margins[i]
        } else {
            chain_margins[i] >= base_margins[i]
        }
    });

    Ok(ModelComparison {
        baseline,
        blockchain,
        baseline_e8: classify_full_cooperation(&base_params, DEFAULT_TOL).class,
        blockchain_e8: classify_full_cooperation(params, DEFAULT_TOL).class,
        margin_shift,
        pareto_flag,
    })
}
