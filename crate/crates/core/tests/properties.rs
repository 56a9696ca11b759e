use nalgebra::Matrix3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scfgame_core::dynamics::{integrate, random_initial_states, IntegratorConfig};
use scfgame_core::model::{
    expected_payoffs, pure_payoffs, replicator_field, replicator_field_from_payoffs, ModelParams,
    PureProfile, StrategyState, VERTICES,
};
use scfgame_core::presets;
use scfgame_core::stability::{
    classify_full_cooperation, eigenvalues, enumerate_equilibria, ess_conditions, jacobian,
    shifted_determinant, StabilityClass, CERTIFY_TOL, DEFAULT_TOL,
};

fn random_params(rng: &mut impl Rng) -> ModelParams {
    let c1 = rng.gen_range(0.0..5.0);
    let c2 = rng.gen_range(0.0..5.0);
    let c3 = rng.gen_range(0.0..3.0);
    ModelParams {
        base_sme: rng.gen_range(0.0..20.0),
        base_core: rng.gen_range(0.0..20.0),
        base_fi: rng.gen_range(0.0..20.0),
        cost_sme: c1,
        cost_core: c2,
        cost_fi: c3,
        reduction_sme: rng.gen_range(0.0..=c1),
        reduction_core: rng.gen_range(0.0..=c2),
        reduction_fi: rng.gen_range(0.0..=c3),
        financing_gain: rng.gen_range(0.0..10.0),
        burden_share: rng.gen_range(0.0..=1.0),
        principal: rng.gen_range(0.0..5.0),
        loan_interest: rng.gen_range(0.0..3.0),
        repayment_interest: rng.gen_range(0.0..3.0),
        guarantee_income: rng.gen_range(0.0..10.0),
    }
    .validate()
    .unwrap()
}

fn random_state(rng: &mut impl Rng) -> StrategyState {
    StrategyState::new(rng.gen(), rng.gen(), rng.gen()).unwrap()
}

prop_compose! {
    fn arb_params()(seed in any::<u64>()) -> ModelParams {
        random_params(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

prop_compose! {
    fn arb_state()(x in 0.0..=1.0f64, y in 0.0..=1.0f64, z in 0.0..=1.0f64) -> StrategyState {
        StrategyState::new(x, y, z).unwrap()
    }
}

fn payoff_scale(p: &ModelParams) -> f64 {
    p.named_values()
        .iter()
        .map(|(_, v)| v.abs())
        .fold(1.0, f64::max)
}

proptest! {
    #[test]
    fn factored_field_matches_payoff_route(p in arb_params(), s in arb_state()) {
        let a = replicator_field(&p, &s).to_array();
        let b = replicator_field_from_payoffs(&p, &s).to_array();
        let scale = payoff_scale(&p);
        for i in 0..3 {
            prop_assert!((a[i] - b[i]).abs() <= 1e-12 * scale.max(a[i].abs()));
        }
    }

    #[test]
    fn faces_have_zero_normal_velocity(p in arb_params(), s in arb_state(), face in 0usize..6) {
        let mut c = s.to_array();
        c[face / 2] = (face % 2) as f64;
        let s = StrategyState::from_array(c).unwrap();
        let v = replicator_field(&p, &s).to_array();
        prop_assert_eq!(v[face / 2], 0.0);
    }

    #[test]
    fn vertices_are_fixed_points(p in arb_params()) {
        for v in VERTICES {
            prop_assert_eq!(replicator_field(&p, &v).to_array(), [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn mean_payoffs_are_profile_weighted_sums(p in arb_params(), s in arb_state()) {
        let e = expected_payoffs(&p, &s);
        let (mut a, mut b, mut g) = (0.0, 0.0, 0.0);
        for profile in PureProfile::all() {
            let w = profile.probability(&s);
            let u = pure_payoffs(&p, profile);
            a += w * u.u_alpha;
            b += w * u.u_beta;
            g += w * u.u_gamma;
        }
        let tol = 1e-12 * payoff_scale(&p) * 8.0;
        prop_assert!((e.sme_mean - a).abs() <= tol);
        prop_assert!((e.core_mean - b).abs() <= tol);
        prop_assert!((e.fi_mean - g).abs() <= tol);
    }

    #[test]
    fn zero_reductions_are_the_baseline(p in arb_params(), s in arb_state()) {
        let base = p.baseline();
        prop_assert_eq!(base.baseline(), base);
        prop_assert_eq!(replicator_field(&base, &s), replicator_field(&base.baseline(), &s));
        prop_assert_eq!(ess_conditions(&base).model_tag, scfgame_core::stability::ModelTag::Baseline);
    }

    #[test]
    fn margins_affine_in_own_reduction(p in arb_params(), k in 0usize..3, dm in 0.01..2.0f64) {
        let names = ["m1", "m2", "m3"];
        let mut q = p;
        q.set(names[k], p.reductions()[k] + dm);
        let before = ess_conditions(&p).margins();
        let after = ess_conditions(&q).margins();
        for i in 0..3 {
            if i == k {
                prop_assert!(after[i] > before[i]);
                prop_assert!((after[i] - before[i] - dm).abs() < 1e-12 * payoff_scale(&q));
            } else {
                prop_assert_eq!(after[i], before[i]);
            }
        }
    }

    #[test]
    fn vertex_jacobians_are_diagonal(p in arb_params()) {
        for v in VERTICES {
            let j = jacobian(&p, &v);
            prop_assert!(j.is_diagonal());
            let eig = j.eigenvalues();
            prop_assert_eq!(eig.map(|c| c.re), j.diagonal());
        }
    }
}

fn central_differences(p: &ModelParams, s: &StrategyState, h: f64) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut plus = s.to_array();
        let mut minus = s.to_array();
        plus[j] += h;
        minus[j] -= h;
        let at = |c: [f64; 3]| StrategyState {
            x: c[0],
            y: c[1],
            z: c[2],
        };
        let fp = replicator_field(p, &at(plus)).to_array();
        let fm = replicator_field(p, &at(minus)).to_array();
        for i in 0..3 {
            out[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ab);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let s = random_state(&mut rng);
        let analytic = jacobian(&p, &s);
        let fd = central_differences(&p, &s, 1e-6);
        let scale = analytic.frobenius_norm().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((analytic.0[i][j] - fd[i][j]).abs() / scale);
            }
        }
    }
    assert!(worst < 1e-6, "worst relative error {worst}");
}

fn match_error(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    PERMS
        .iter()
        .map(|p| (0..3).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn eigenvalues_match_schur_oracle_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let m: [[f64; 3]; 3] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-5.0..5.0)));
        let ours = eigenvalues(&m);
        let oracle_m = Matrix3::from_fn(|i, j| m[i][j]);
        let oracle = oracle_m.complex_eigenvalues();
        let oracle = [oracle[0], oracle[1], oracle[2]];
        let err = match_error(&ours, &oracle);
        assert!(
            err < 1e-7,
            "eigenvalue mismatch {err} for {m:?}: {ours:?} vs {oracle:?}"
        );
        let norm = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        for l in ours {
            assert!(shifted_determinant(&m, l).norm() < 1e-7 * (1.0 + norm));
        }
    }
}

#[test]
fn eigenvalues_of_interior_jacobians_are_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for _ in 0..500 {
        let p = random_params(&mut rng);
        let j = jacobian(&p, &random_state(&mut rng));
        for l in j.eigenvalues() {
            let r = shifted_determinant(&j.0, l).norm();
            assert!(r < 1e-7 * (1.0 + j.frobenius_norm()), "residual {r}");
        }
    }
}

#[test]
fn e8_classification_agrees_with_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut ess, mut excluded) = (0, 0, 0);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let margins = ess_conditions(&p).margins();
        let class = classify_full_cooperation(&p, DEFAULT_TOL).class;
        if margins.iter().any(|m| m.abs() < 1e-9) {
            excluded += 1;
            continue;
        }
        let predicted = margins.iter().all(|&m| m > 0.0);
        assert_eq!(
            predicted,
            class == StabilityClass::Ess,
            "margins {margins:?}, class {class}"
        );
        agree += 1;
        ess += usize::from(predicted);
    }
    assert_eq!(agree + excluded, 1000);
    assert!(ess > 0, "sample never hit the ESS region");
}

#[test]
fn every_enumerated_equilibrium_is_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut interiors = 0;
    for _ in 0..500 {
        let p = random_params(&mut rng);
        for eq in enumerate_equilibria(&p) {
            assert!(replicator_field(&p, &eq.point).norm() < CERTIFY_TOL);
            interiors += usize::from(eq.kind == scfgame_core::EquilibriumKind::Interior);
        }
    }
    assert!(interiors > 0);
}

#[test]
fn vertex_set_is_the_same_with_and_without_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let vertices = |q: &ModelParams| -> Vec<StrategyState> {
            enumerate_equilibria(q)
                .into_iter()
                .filter(|e| matches!(e.kind, scfgame_core::EquilibriumKind::Vertex(_)))
                .map(|e| e.point)
                .collect()
        };
        assert_eq!(vertices(&p), vertices(&p.baseline()));
    }
}

const STANDARD: [fn() -> ModelParams; 3] = [
    presets::bistable,
    presets::blockchain,
    presets::no_financing,
];

#[test]
fn trajectories_stay_in_the_cube() {
    let cfg = IntegratorConfig {
        record_every: 1,
        ..Default::default()
    };
    for preset in STANDARD {
        let p = preset();
        for s in random_initial_states(40, 9) {
            let t = integrate(&p, s, &cfg).unwrap();
            assert!(t.max_excursion <= 1e-9, "excursion {}", t.max_excursion);
            for sample in &t.samples {
                assert!(StrategyState::from_array(sample.state.to_array()).is_ok());
            }
        }
    }
}

#[test]
fn halving_the_step_keeps_attributions() {
    let coarse = IntegratorConfig::default();
    let fine = IntegratorConfig {
        step_size: coarse.step_size / 2.0,
        ..coarse
    };
    for preset in STANDARD {
        let p = preset();
        for s in random_initial_states(100, 5150) {
            let a = integrate(&p, s, &coarse).unwrap();
            let b = integrate(&p, s, &fine).unwrap();
            assert_eq!(a.terminal, b.terminal, "start {s:?}");
        }
    }
}

#[test]
fn integration_is_bit_reproducible() {
    let p = presets::blockchain();
    let s = StrategyState::new(0.31, 0.77, 0.52).unwrap();
    let cfg = IntegratorConfig::default();
    assert_eq!(
        integrate(&p, s, &cfg).unwrap(),
        integrate(&p, s, &cfg).unwrap()
    );
}

#[test]
fn cooperation_share_is_monotone_on_the_full_edge() {
    for preset in STANDARD {
        let p = preset();
        let sign = (p.repayment_interest - p.net_costs()[2]).signum();
        let t = integrate(
            &p,
            StrategyState::new(1.0, 1.0, 0.5).unwrap(),
            &IntegratorConfig {
                record_every: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for w in t.samples.windows(2) {
            assert_eq!((w[0].state.x, w[0].state.y), (1.0, 1.0));
            let dz = w[1].state.z - w[0].state.z;
            assert!(dz * sign >= 0.0, "z moved against the bracket sign");
        }
    }
}
