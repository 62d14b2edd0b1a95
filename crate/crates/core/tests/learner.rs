use std::sync::Arc;

use mosp::linalg::Matrix;
use mosp::metrics::{drift_check, dynamic_fit};
use mosp::netalloc::{gen_case1, gen_network, network_problems};
use mosp::oco::{mosp_dual_step, mosp_primal_step, run_mosp, LearnerState};
use mosp::oracle::{Constraint, FnConstraint, FnLoss, SeparableQuadratic, SlotProblem};
use mosp::solvers::ProxSettings;
use mosp::{DecisionVector, FeasibleBox, MultiplierVector, StepsizePair};
use proptest::prelude::*;

fn linear_problem() -> SlotProblem<f64> {
    SlotProblem::new(
        FnLoss::new(1, |x: &[f64]| x[0], |_x: &[f64]| vec![1.0]),
        Constraint::affine(Arc::new(Matrix::from_rows(&[vec![1.0]])), vec![-1.0]).unwrap(),
    )
}

/// f(x) = x, g(x) = x − 1 on [0, 2], α = μ = 0.1, x_1 = 2, replayed with a
/// scalar loop.
#[test]
fn constant_affine_problem_matches_scalar_replay() {
    let t_max = 60;
    let problems = vec![linear_problem(); t_max];
    let bx = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
    let steps = StepsizePair::new(0.1, 0.1).unwrap();
    let trace = run_mosp(&problems, &bx, steps, DecisionVector::new(vec![2.0]), None).unwrap();

    let (mut x, mut lam) = (2.0f64, 0.0f64);
    // λ only grows while x > 1, by at most μ(x − 1) ≤ 0.1 per slot.
    let mut excess = 0.0;
    for (i, r) in trace.iter().enumerate() {
        if i > 0 {
            x = (x - 0.1 * (1.0 + lam)).clamp(0.0, 2.0);
        }
        assert!((r.x[0] - x).abs() < 1e-14, "slot {}", i + 1);
        assert!((r.lambda[0] - lam).abs() < 1e-14);
        lam = (lam + 0.1 * (x - 1.0)).max(0.0);
        excess += 0.1 * (x - 1.0).max(0.0);
        assert!((r.lambda_next[0] - lam).abs() < 1e-14);
    }
    for w in trace.windows(2) {
        assert!(w[1].x[0] <= w[0].x[0]);
    }
    assert!(excess < 1.0);
    assert!(trace.iter().all(|r| r.lambda_next[0] <= excess + 1e-12));
    assert_eq!(trace.last().unwrap().x[0], 0.0);
    assert_eq!(trace.last().unwrap().lambda_next[0], 0.0);
}

fn case1_problems(t: usize, seed: u64) -> (Vec<SlotProblem<f64>>, FeasibleBox<f64>) {
    let net = gen_network::<f64>(2, 3, seed).unwrap();
    let stream = gen_case1::<f64>(2, 3, t, seed).unwrap();
    (network_problems(&net, &stream, t).unwrap(), net.feasible_box())
}

#[test]
fn restart_with_period_horizon_changes_nothing() {
    let (problems, bx) = case1_problems(40, 3);
    let steps = StepsizePair::new(0.01, 2.0).unwrap();
    let plain = run_mosp(&problems, &bx, steps, bx.lower_corner(), None).unwrap();
    let restarted = run_mosp(&problems, &bx, steps, bx.lower_corner(), Some(40)).unwrap();
    assert_eq!(plain, restarted);
}

#[test]
fn restart_zeroes_the_multiplier_on_schedule() {
    let (problems, bx) = case1_problems(35, 4);
    let steps = StepsizePair::new(0.01, 2.0).unwrap();
    let trace = run_mosp(&problems, &bx, steps, bx.lower_corner(), Some(10)).unwrap();
    for r in &trace {
        if r.t > 1 && (r.t - 1) % 10 == 0 {
            assert!(r.lambda.iter().all(|&l| l == 0.0), "slot {}", r.t);
        }
    }
    assert!(trace[9].lambda_next.iter().any(|&l| l > 0.0));
    assert!(drift_check(&trace, 2.0).iter().all(|ok| *ok));
}

/// Prox of the general constraint x² − 1 on [0, 2] with λ = 1, α = 1,
/// x_prev = 1 and zero loss gradient: minimise (x − 1)²/2 + x² − 1.
#[test]
fn general_constraint_prox_matches_fine_grid() {
    let p = SlotProblem::new(
        FnLoss::new(1, |_x: &[f64]| 0.0, |_x: &[f64]| vec![0.0]),
        Constraint::general(FnConstraint::new(
            1,
            |x: &[f64]| vec![x[0] * x[0] - 1.0],
            |x: &[f64], w: &[f64]| vec![2.0 * x[0] * w[0]],
        )),
    );
    let state = LearnerState {
        x_prev: DecisionVector::new(vec![1.0]),
        lambda: MultiplierVector::new(vec![1.0]).unwrap(),
        t: 2,
        steps: StepsizePair::new(1.0, 1.0).unwrap(),
        restart_period: None,
    };
    let bx = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
    let x = mosp_primal_step(&state, &p, &bx, &ProxSettings::default()).unwrap();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=2_000_000 {
        let v = i as f64 * 1e-6;
        let obj = 0.5 * (v - 1.0) * (v - 1.0) + v * v - 1.0;
        if obj < best.0 {
            best = (obj, v);
        }
    }
    assert!((x[0] - best.1).abs() < 1e-5, "{} vs {}", x[0], best.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn primal_step_stays_in_the_box(
        x in prop::collection::vec(-50.0f64..150.0, 9),
        lam in prop::collection::vec(0.0f64..500.0, 5),
        alpha in 1e-4f64..1.0,
        seed in 0u64..50,
    ) {
        let (problems, bx) = case1_problems(1, seed);
        let state = LearnerState {
            x_prev: DecisionVector::new(bx.project(&x)),
            lambda: MultiplierVector::new(lam).unwrap(),
            t: 2,
            steps: StepsizePair::new(alpha, 1.0).unwrap(),
            restart_period: None,
        };
        let next = mosp_primal_step(&state, &problems[0], &bx, &ProxSettings::default()).unwrap();
        prop_assert!(bx.contains(&next));
    }

    #[test]
    fn dual_step_is_non_negative(
        lam in prop::collection::vec(0.0f64..10.0, 4),
        g in prop::collection::vec(-100.0f64..100.0, 4),
        mu in 1e-3f64..10.0,
    ) {
        let next = mosp_dual_step(&MultiplierVector::new(lam.clone()).unwrap(), &g, mu).unwrap();
        for i in 0..4 {
            prop_assert!(next[i] >= 0.0);
            prop_assert_eq!(next[i], (lam[i] + mu * g[i]).max(0.0));
        }
    }

    #[test]
    fn fit_is_non_negative(g in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..30)) {
        let fit = dynamic_fit(&g).unwrap();
        prop_assert!(fit.iter().all(|&f| f >= 0.0));
        let mut sums = [0.0f64; 3];
        for row in &g {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        let direct = sums.iter().map(|s| s.max(0.0).powi(2)).sum::<f64>().sqrt();
        prop_assert!((fit.last().unwrap() - direct).abs() <= 1e-12 * (1.0 + direct));
    }

    #[test]
    fn quadratic_losses_run_in_box(seed in 0u64..30, x0 in 0.0f64..1.0) {
        let (problems, bx) = case1_problems(15, seed);
        let start = DecisionVector::new(bx.upper().iter().map(|u| u * x0).collect());
        let trace = run_mosp(&problems, &bx, StepsizePair::new(0.02, 3.0).unwrap(), start, None).unwrap();
        prop_assert!(trace.iter().all(|r| bx.contains(&r.x)));
        prop_assert!(drift_check(&trace, 3.0).iter().all(|ok| *ok));
    }
}

#[test]
fn f32_learner_tracks_f64() {
    let net64 = gen_network::<f64>(2, 2, 9).unwrap();
    let net32 = gen_network::<f32>(2, 2, 9).unwrap();
    let s64 = gen_case1::<f64>(2, 2, 20, 9).unwrap();
    let s32 = gen_case1::<f32>(2, 2, 20, 9).unwrap();
    let p64 = network_problems(&net64, &s64, 20).unwrap();
    let p32 = network_problems(&net32, &s32, 20).unwrap();
    let b64 = net64.feasible_box();
    let b32 = net32.feasible_box();
    let t64 = run_mosp(&p64, &b64, StepsizePair::new(0.01, 1.0).unwrap(), b64.lower_corner(), None).unwrap();
    let t32 = run_mosp(&p32, &b32, StepsizePair::new(0.01f32, 1.0).unwrap(), b32.lower_corner(), None).unwrap();
    for (a, b) in t64.iter().zip(&t32) {
        for (x, y) in a.x.iter().zip(b.x.iter()) {
            assert!((x - *y as f64).abs() < 1e-2 * (1.0 + x.abs()));
        }
    }
    let _ = SeparableQuadratic::<f32>::diagonal(vec![1.0]).unwrap();
}
