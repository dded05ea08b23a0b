mod common;

use common::{err_sq, gaussian, norm};
use kacz_core::linalg::min_norm_solution;
use kacz_core::selection::{argmax_distance, argmax_residual, grmk_set, grmk_threshold};
use kacz_core::solvers::{
    gbk_step, gdbk_step, gmbk_step, greedy_kaczmarz_choose, grk_choose, grmk_choose, kaczmarz_step,
};
use kacz_core::{solve, IterState, RowMatrix, SelectionRule, SolveStatus, StopCriteria};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
enum Single {
    Rk,
    Mr,
    Md,
    Grk,
    Grmk,
    Gk,
}

const SINGLES: [Single; 6] = [Single::Rk, Single::Mr, Single::Md, Single::Grk, Single::Grmk, Single::Gk];

fn choose(rule: Single, s: &IterState, a: &RowMatrix, rng: &mut ChaCha8Rng) -> Option<usize> {
    if s.r.iter().all(|&v| v == 0.0) {
        return None;
    }
    match rule {
        Single::Rk => Some(rng.random_range(0..a.nrows())),
        Single::Mr => Some(argmax_residual(&s.r)),
        Single::Md => Some(argmax_distance(&s.r, a)),
        Single::Grk => grk_choose(&s.r, a, rng).map(|c| c.1),
        Single::Grmk => grmk_choose(&s.r, a, 0.5, rng).map(|c| c.1),
        Single::Gk => greedy_kaczmarz_choose(&s.r, a).map(|c| c.1),
    }
}

fn instance(seed: u64, wide: bool) -> (RowMatrix, Vec<f64>, Vec<f64>) {
    let (m, n) = if wide { (12, 30) } else { (40, 12) };
    let p = gaussian(m, n, seed);
    let xs = min_norm_solution(&p.a, &p.b).unwrap();
    (p.a, p.b, xs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_row_steps_are_orthogonal_projections(seed in any::<u64>(), wide in any::<bool>()) {
        let (a, b, xs) = instance(seed, wide);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for rule in SINGLES {
            let mut s = IterState::new(&a, &b, &vec![0.0; a.ncols()]).unwrap();
            for _ in 0..40 {
                let Some(i) = choose(rule, &s, &a, &mut rng) else { break };
                let before = s.x.clone();
                let e0 = err_sq(&before, &xs);
                kaczmarz_step(&mut s, &a, i);
                let e1 = err_sq(&s.x, &xs);
                let step = err_sq(&s.x, &before);
                // Pythagorean identity and monotone error
                prop_assert!((e1 - (e0 - step)).abs() <= 1e-8 * e0, "{:?}", rule);
                prop_assert!(e1 <= e0 * (1.0 + 1e-12));
                // orthogonality of the new error to the projected row
                let diff: Vec<f64> = s.x.iter().zip(&xs).map(|(u, v)| u - v).collect();
                let row_dot = a.row_dot(i, &diff).unwrap();
                prop_assert!(row_dot.abs() <= 1e-8 * a.row_sq_norm(i).sqrt() * norm(&diff) + 1e-14);
                // zeroed residual at the projected row
                prop_assert!(s.r[i].abs() <= 1e-10 * (1.0 + b[i].abs()));
            }
        }
    }

    #[test]
    fn exact_block_steps_are_orthogonal_projections(seed in any::<u64>(), wide in any::<bool>()) {
        let (a, b, xs) = instance(seed, wide);
        for variant in 0..3 {
            let mut s = IterState::new(&a, &b, &vec![0.0; a.ncols()]).unwrap();
            for _ in 0..15 {
                let before = s.x.clone();
                let e0 = err_sq(&before, &xs);
                let set = match variant {
                    0 => gmbk_step(&mut s, &a).unwrap(),
                    1 => gbk_step(&mut s, &a, 0.5).unwrap(),
                    _ => gdbk_step(&mut s, &a).unwrap(),
                };
                let Some(set) = set else { break };
                let e1 = err_sq(&s.x, &xs);
                prop_assert!((e1 - (e0 - err_sq(&s.x, &before))).abs() <= 1e-8 * e0);
                prop_assert!(e1 <= e0 * (1.0 + 1e-12));
                // the block's equations hold at the new iterate
                for &i in set.indices() {
                    let ri = b[i] - a.row_dot(i, &s.x).unwrap();
                    prop_assert!(ri.abs() <= 1e-9 * (1.0 + b[i].abs()));
                }
            }
        }
    }

    #[test]
    fn block_step_dominates_its_single_row_choices(seed in any::<u64>()) {
        let p = gaussian(30, 10, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let state = IterState::new(&p.a, &p.b, &x).unwrap();
        let set = grmk_set(&state.r, grmk_threshold(&state.r, &p.a, 0.5).unwrap());

        let mut block = state.clone();
        gmbk_step(&mut block, &p.a).unwrap();
        let e_block = err_sq(&block.x, &p.x_star);
        for &i in set.indices().iter().chain([argmax_residual(&state.r)].iter()) {
            let mut single = state.clone();
            kaczmarz_step(&mut single, &p.a, i);
            prop_assert!(e_block <= err_sq(&single.x, &p.x_star) + 1e-10);
        }
    }
}

#[test]
fn runs_from_zero_reach_the_minimum_norm_solution() {
    let rules = [
        SelectionRule::Randomized,
        SelectionRule::MaxResidual,
        SelectionRule::MaxDistance,
        SelectionRule::Grk,
        SelectionRule::Grmk,
        SelectionRule::GreedyKaczmarz,
        SelectionRule::Gbk { eta: 0.5 },
        SelectionRule::Gdbk,
        SelectionRule::Gmbk,
        SelectionRule::AveragedBlock,
        SelectionRule::GrmkRelaxed { theta: 0.2 },
        SelectionRule::GmbkXi { xi: 0.3 },
    ];
    let p = gaussian(15, 40, 77);
    let xs = min_norm_solution(&p.a, &p.b).unwrap();
    // RES is a squared ratio: 1e-18 puts the unsquared relative error near 1e-9
    let stop = StopCriteria::new(1e-18, kacz_core::Metric::Res, Some(100_000)).unwrap();
    for rule in rules {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = solve(rule, &p.a, &p.b, &[0.0; 40], &stop, &mut rng, None).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged, "{rule}");
        let rel = err_sq(&rep.final_x, &xs).sqrt() / norm(&xs);
        assert!(rel <= 1e-8, "{rule}: {rel}");
    }
}

#[test]
fn error_history_never_increases() {
    let p = common::sparse_normal(80, 20, 0.2, 5);
    for rule in [SelectionRule::Grmk, SelectionRule::Grk, SelectionRule::Gmbk, SelectionRule::Gdbk] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rep = solve(rule, &p.a, &p.b, &[0.0; 20], &StopCriteria::default(), &mut rng, Some(&p.x_star)).unwrap();
        let res = rep.res_history().unwrap();
        assert!(res.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-15), "{rule}");
    }
}

#[test]
fn grmk_never_repeats_the_previous_row() {
    for seed in 0..10 {
        let p = gaussian(60, 15, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = solve(SelectionRule::Grmk, &p.a, &p.b, &[0.0; 15], &StopCriteria::default(), &mut rng, None).unwrap();
        let rows: Vec<usize> = rep.history[1..].iter().map(|h| h.row.unwrap()).collect();
        for w in rep.history[1..].windows(2) {
            assert!(!w[1].set.as_ref().unwrap().contains(w[0].row.unwrap()));
        }
        assert!(rows.windows(2).all(|w| w[0] != w[1]));
    }
}

#[test]
fn residual_refresh_keeps_long_runs_accurate() {
    // long enough to cross several refresh points
    let p = gaussian(300, 60, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let stop = StopCriteria::new(1e-12, kacz_core::Metric::Rr, Some(5000)).unwrap();
    let rep = solve(SelectionRule::Randomized, &p.a, &p.b, &[0.0; 60], &stop, &mut rng, Some(&p.x_star)).unwrap();
    assert!(rep.iterations > 2000);
    let r = p.a.residual(&p.b, &rep.final_x);
    let rr = norm(&r) / norm(&p.b);
    let recorded = rep.history.last().unwrap().rr.sqrt();
    assert!((rr - recorded).abs() <= 1e-8 * rr.max(1e-12) + 1e-13, "{rr} vs {recorded}");
}
