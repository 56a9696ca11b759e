//! Fixed-step integration of the replicator system and Monte-Carlo basin estimates.

use std::collections::BTreeMap;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{replicator_field, ModelParams, StrategyState};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DynamicsError {
    #[error("state became non-finite at t = {t} ({x}, {y}, {z})")]
    NonFiniteState { t: f64, x: f64, y: f64, z: f64 },
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("basin sampling needs at least one sample")]
    NoSamples,
}

/// Integrator settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub step_size: f64,
    pub t_max: f64,
    /// Integration stops once the field norm drops below this.
    pub convergence_eps: f64,
    /// Terminal states within this distance of a vertex are attributed to it.
    pub vertex_snap_eps: f64,
    /// Record every n-th step (the initial and final states are always kept).
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            t_max: 500.0,
            convergence_eps: 1e-8,
            vertex_snap_eps: 1e-3,
            record_every: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [
            ("step_size", self.step_size),
            ("t_max", self.t_max),
            ("convergence_eps", self.convergence_eps),
            ("vertex_snap_eps", self.vertex_snap_eps),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn max_steps(&self) -> u64 {
        (self.t_max / self.step_size).ceil() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: StrategyState,
}

/// How an integration run ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "point")]
pub enum Terminal {
    /// Field norm fell below `convergence_eps`; the point is the snapped
    /// vertex when one is close enough, otherwise the raw final state.
    ConvergedTo(StrategyState),
    MaxTimeReached,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// [`ModelParams::fingerprint`] of the parameters used.
    pub params_id: u64,
    pub samples: Vec<Sample>,
    pub terminal: Terminal,
    /// Largest distance any pre-clamp RK4 result fell outside the cube.
    pub max_excursion: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> StrategyState {
        self.samples
            .last()
            .map(|s| s.state)
            .expect("trajectory always holds its initial state")
    }

    /// E-index of the vertex the run converged to, if any.
    pub fn attractor_vertex(&self) -> Option<usize> {
        match self.terminal {
            Terminal::ConvergedTo(p) => p.vertex_index(),
            Terminal::MaxTimeReached => None,
        }
    }
}

fn offset(s: &StrategyState, k: [f64; 3], scale: f64) -> StrategyState {
    StrategyState {
        x: s.x + scale * k[0],
        y: s.y + scale * k[1],
        z: s.z + scale * k[2],
    }
}

/// One classical RK4 step without clamping.
fn rk4_raw(params: &ModelParams, state: &StrategyState, h: f64) -> [f64; 3] {
    let k1 = replicator_field(params, state).to_array();
    let k2 = replicator_field(params, &offset(state, k1, 0.5 * h)).to_array();
    let k3 = replicator_field(params, &offset(state, k2, 0.5 * h)).to_array();
    let k4 = replicator_field(params, &offset(state, k3, h)).to_array();
    let s = state.to_array();
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn excursion(raw: &[f64; 3]) -> f64 {
    raw.iter()
        .map(|&v| (-v).max(v - 1.0).max(0.0))
        .fold(0.0, f64::max)
}

fn checked(raw: [f64; 3], t: f64) -> Result<[f64; 3], DynamicsError> {
    if raw.iter().all(|v| v.is_finite()) {
        Ok(raw)
    } else {
        Err(DynamicsError::NonFiniteState {
            t,
            x: raw[0],
            y: raw[1],
            z: raw[2],
        })
    }
}

/// One RK4 step of length `h`, clamped back into the unit cube.
pub fn step(
    params: &ModelParams,
    state: &StrategyState,
    h: f64,
) -> Result<StrategyState, DynamicsError> {
    let raw = checked(rk4_raw(params, state, h), h)?;
    Ok(StrategyState::clamped(raw[0], raw[1], raw[2]))
}

/// Integrates from `initial` until the field norm is below
/// `convergence_eps` or `t_max` is reached.
pub fn integrate(
    params: &ModelParams,
    initial: StrategyState,
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    config.validate()?;
    let h = config.step_size;
    let max_steps = config.max_steps();

    let mut samples = vec![Sample {
        t: 0.0,
        state: initial,
    }];
    let mut state = initial;
    let mut steps: u64 = 0;
    let mut max_excursion: f64 = 0.0;

    let converged = loop {
        if replicator_field(params, &state).norm() < config.convergence_eps {
            break true;
        }
        if steps >= max_steps {
            break false;
        }
        let t_next = (steps + 1) as f64 * h;
        let raw = checked(rk4_raw(params, &state, h), t_next)?;
        max_excursion = max_excursion.max(excursion(&raw));
        state = StrategyState::clamped(raw[0], raw[1], raw[2]);
        steps += 1;
        if steps.is_multiple_of(config.record_every as u64) {
            samples.push(Sample { t: t_next, state });
        }
    };

    let t_final = steps as f64 * h;
    if samples.last().map(|s| s.t) != Some(t_final) {
        samples.push(Sample { t: t_final, state });
    }

    let terminal = if converged {
        let (_, vertex) = state.nearest_vertex();
        if state.distance(&vertex) <= config.vertex_snap_eps {
            Terminal::ConvergedTo(vertex)
        } else {
            Terminal::ConvergedTo(state)
        }
    } else {
        Terminal::MaxTimeReached
    };

    Ok(Trajectory {
        params_id: params.fingerprint(),
        samples,
        terminal,
        max_excursion,
    })
}

/// Attractor identity, quantized to a 1e-6 grid so near-identical
/// non-vertex end points aggregate together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttractorKey([i64; 3]);

const KEY_QUANTUM: f64 = 1e-6;

impl AttractorKey {
    pub fn of(state: &StrategyState) -> Self {
        let q = |v: f64| (v / KEY_QUANTUM).round() as i64;
        Self([q(state.x), q(state.y), q(state.z)])
    }

    pub fn point(&self) -> StrategyState {
        let c = |v: i64| v as f64 * KEY_QUANTUM;
        StrategyState::clamped(c(self.0[0]), c(self.0[1]), c(self.0[2]))
    }

    /// `"E1"`..`"E8"` for vertices, coordinates otherwise.
    pub fn label(&self) -> String {
        let p = self.point();
        match p.vertex_index() {
            Some(i) => format!("E{i}"),
            None => format!("({:.6}, {:.6}, {:.6})", p.x, p.y, p.z),
        }
    }
}

impl Serialize for AttractorKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasinReport {
    pub attractor_counts: BTreeMap<AttractorKey, usize>,
    pub total_samples: usize,
    pub unresolved: usize,
    pub seed: u64,
}

impl BasinReport {
    pub fn count_at_vertex(&self, index: usize) -> usize {
        crate::model::VERTICES
            .get(index.wrapping_sub(1))
            .and_then(|v| self.attractor_counts.get(&AttractorKey::of(v)))
            .copied()
            .unwrap_or(0)
    }

    /// Fraction of all samples attributed to vertex `E{index}`.
    pub fn vertex_share(&self, index: usize) -> f64 {
        self.count_at_vertex(index) as f64 / self.total_samples as f64
    }

    pub fn resolved(&self) -> usize {
        self.total_samples - self.unresolved
    }
}

/// Initial states drawn uniformly from the open cube `(0, 1)³`.
pub fn random_initial_states(n: usize, seed: u64) -> Vec<StrategyState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| StrategyState {
            x: rng.sample(Open01),
            y: rng.sample(Open01),
            z: rng.sample(Open01),
        })
        .collect()
}

/// Integrates `n_samples` seeded random initial states and tallies where they end.
///
/// Trajectories run in parallel; the report is identical to a sequential run.
pub fn sample_basins(
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
    config: &IntegratorConfig,
) -> Result<BasinReport, DynamicsError> {
    if n_samples == 0 {
        return Err(DynamicsError::NoSamples);
    }
    config.validate()?;
    let starts = random_initial_states(n_samples, seed);
    let terminals: Vec<Terminal> = starts
        .par_iter()
        .map(|s| integrate(params, *s, config).map(|t| t.terminal))
        .collect::<Result<_, _>>()?;

    let mut attractor_counts = BTreeMap::new();
    let mut unresolved = 0;
    for terminal in terminals {
        match terminal {
            Terminal::ConvergedTo(p) => {
                *attractor_counts.entry(AttractorKey::of(&p)).or_insert(0) += 1
            }
            Terminal::MaxTimeReached => unresolved += 1,
        }
    }
    Ok(BasinReport {
        attractor_counts,
        total_samples: n_samples,
        unresolved,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VERTICES;
    use crate::presets;

    #[test]
    fn vertices_do_not_move() {
        let p = presets::bistable();
        for v in VERTICES {
            assert_eq!(step(&p, &v, 0.01).unwrap(), v);
        }
    }

    #[test]
    fn step_is_consistent_to_first_order() {
        let p = presets::bistable();
        let s = StrategyState::new(0.4, 0.7, 0.6).unwrap();
        let v = replicator_field(&p, &s).to_array();
        let defect = |h: f64| {
            let n = step(&p, &s, h).unwrap().to_array();
            let a = s.to_array();
            (0..3)
                .map(|i| (n[i] - a[i] - h * v[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let ratio = defect(1e-2) / defect(5e-3);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn cooperation_decays_on_the_xy_edge_when_supervision_is_too_costly() {
        let p = ModelParams {
            cost_fi: 0.9,
            ..presets::bistable()
        };
        let mut s = StrategyState::new(1.0, 1.0, 0.6).unwrap();
        for _ in 0..100 {
            let n = step(&p, &s, 0.01).unwrap();
            assert!(n.z < s.z);
            assert_eq!((n.x, n.y), (1.0, 1.0));
            s = n;
        }
    }

    #[test]
    fn start_at_vertex_gives_single_sample() {
        let p = presets::bistable();
        let t = integrate(&p, VERTICES[4], &IntegratorConfig::default()).unwrap();
        assert_eq!(t.samples.len(), 1);
        assert_eq!(t.terminal, Terminal::ConvergedTo(VERTICES[4]));
    }

    #[test]
    fn bistable_preset_has_two_attractors() {
        let p = presets::bistable();
        let cfg = IntegratorConfig::default();
        let high = integrate(&p, StrategyState::new(0.9, 0.9, 0.9).unwrap(), &cfg).unwrap();
        assert_eq!(high.attractor_vertex(), Some(8));
        let low = integrate(&p, StrategyState::new(0.05, 0.05, 0.05).unwrap(), &cfg).unwrap();
        assert_eq!(low.attractor_vertex(), Some(1));
    }

    #[test]
    fn times_strictly_increase_and_stride_is_honoured() {
        let p = presets::bistable();
        let cfg = IntegratorConfig {
            record_every: 7,
            ..Default::default()
        };
        let t = integrate(&p, StrategyState::new(0.6, 0.5, 0.8).unwrap(), &cfg).unwrap();
        assert!(t.samples.windows(2).all(|w| w[0].t < w[1].t));
        let n = t.samples.len();
        for s in &t.samples[1..n - 1] {
            let k = (s.t / cfg.step_size).round() as u64;
            assert_eq!(k % 7, 0);
        }
    }

    #[test]
    fn unconverged_run_reports_max_time() {
        let p = presets::bistable();
        let cfg = IntegratorConfig {
            t_max: 0.5,
            ..Default::default()
        };
        let t = integrate(&p, StrategyState::new(0.6, 0.5, 0.8).unwrap(), &cfg).unwrap();
        assert_eq!(t.terminal, Terminal::MaxTimeReached);
        assert!((t.samples.last().unwrap().t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let p = presets::bistable();
        let s = StrategyState::new(0.5, 0.5, 0.5).unwrap();
        for cfg in [
            IntegratorConfig {
                step_size: 0.0,
                ..Default::default()
            },
            IntegratorConfig {
                t_max: -1.0,
                ..Default::default()
            },
            IntegratorConfig {
                convergence_eps: f64::NAN,
                ..Default::default()
            },
            IntegratorConfig {
                record_every: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                integrate(&p, s, &cfg),
                Err(DynamicsError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn non_finite_parameters_surface_as_errors() {
        let p = ModelParams {
            financing_gain: f64::INFINITY,
            ..presets::bistable()
        };
        let s = StrategyState::new(0.5, 0.5, 0.5).unwrap();
        assert!(matches!(
            step(&p, &s, 0.01),
            Err(DynamicsError::NonFiniteState { .. })
        ));
    }

    #[test]
    fn single_sample_report() {
        let p = presets::bistable();
        let r = sample_basins(&p, 1, 11, &IntegratorConfig::default()).unwrap();
        assert_eq!(r.total_samples, 1);
        assert_eq!(r.attractor_counts.values().sum::<usize>() + r.unresolved, 1);
        assert_eq!(r.seed, 11);
    }

    #[test]
    fn zero_samples_is_an_error() {
        let p = presets::bistable();
        assert_eq!(
            sample_basins(&p, 0, 1, &IntegratorConfig::default()),
            Err(DynamicsError::NoSamples)
        );
    }

    #[test]
    fn attractor_keys_label_vertices() {
        assert_eq!(AttractorKey::of(&VERTICES[7]).label(), "E8");
        let p = StrategyState::new(0.25, 0.5, 1.0).unwrap();
        assert_eq!(
            AttractorKey::of(&p).label(),
            "(0.250000, 0.500000, 1.000000)"
        );
    }
}
