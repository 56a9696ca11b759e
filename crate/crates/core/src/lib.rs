//! Numerical engine for a three-population evolutionary game of supply chain
//! finance with and without blockchain cost reductions.
//!
//! * [`model`]: parameters, payoff matrix, expected payoffs, replicator field
//! * [`dynamics`]: RK4 trajectories and Monte-Carlo basins of attraction
//! * [`stability`]: equilibria, Jacobian, eigenvalue classification, ESS conditions
//! * [`presets`]: named parameter sets

pub mod dynamics;
pub mod model;
pub mod presets;
pub mod stability;

pub use dynamics::{
    integrate, sample_basins, step, BasinReport, IntegratorConfig, Terminal, Trajectory,
};
pub use model::{
    expected_payoffs, pure_payoffs, replicator_field, ModelParams, PayoffTriple, PureProfile,
    StrategyState, Velocity,
};
pub use stability::{
    classify, compare_models, enumerate_equilibria, ess_conditions, jacobian, Classification,
    Equilibrium, EquilibriumKind, EssConditionReport, JacobianMatrix, StabilityClass,
};
