mod common;

use common::{projected_gradient_oracle, random_instance};
use proptest::prelude::*;
use quadsim::qp::{achieved_wrench, build_constraints, build_wrench_matrix, objective, solve_balance_qp, BalanceQp, FrictionParams, QpWeights};
use quadsim::so3::{Vec12, Vec3, Vec6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_projected_gradient_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..200 {
        let inst = random_instance(&mut rng);
        let cons = build_constraints(&inst.contacts, &inst.fp);
        let sol = solve_balance_qp(&inst.a, &inst.b, &inst.w, &inst.f_prev, &cons).unwrap();
        let oracle = projected_gradient_oracle(&inst, 1_000_000);
        let ours = objective(&inst.a, &inst.b, &inst.w, &inst.f_prev, &sol.f);
        let theirs = objective(&inst.a, &inst.b, &inst.w, &inst.f_prev, &oracle);
        assert!((ours - theirs).abs() <= 1e-6 * theirs.abs().max(1.0), "instance {k}: {ours} vs {theirs}");
        assert!(cons.violation(&sol.f) <= 1e-8, "instance {k}");
        assert!(sol.kkt.max() <= 1e-7, "instance {k}: {:?}", sol.kkt);
    }
}

#[test]
fn solution_invariants_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let inst = random_instance(&mut rng);
        let cons = build_constraints(&inst.contacts, &inst.fp);
        let sol = solve_balance_qp(&inst.a, &inst.b, &inst.w, &inst.f_prev, &cons).unwrap();
        for leg in 0..4 {
            let f = sol.foot(leg);
            if inst.contacts[leg] {
                assert!(f.x.abs() <= inst.fp.mu * f.z + 1e-8);
                assert!(f.y.abs() <= inst.fp.mu * f.z + 1e-8);
                assert!(f.z >= inst.fp.fz_min - 1e-8 && f.z <= inst.fp.fz_max + 1e-8);
            } else {
                assert!(f.norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn warm_start_never_costs_iterations_on_repeat() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        let cons = build_constraints(&inst.contacts, &inst.fp);
        let mut qp = BalanceQp::new();
        let cold = qp.solve(&inst.a, &inst.b, &inst.w, &inst.f_prev, &cons).unwrap();
        let warm = qp.solve(&inst.a, &inst.b, &inst.w, &inst.f_prev, &cons).unwrap();
        assert!(warm.iterations <= cold.iterations);
        assert!((warm.f - cold.f).amax() <= 1e-8);
    }
}

#[test]
fn exact_attainment_without_regularization() {
    // Interior demand on four feet: the wrench is met exactly and the weighted
    // least-squares residual vanishes.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let w = QpWeights { gamma1: 0.0, gamma2: 0.0, ..QpWeights::default() };
    let mut checked = 0;
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let b = Vec6::new(inst.b[0] * 0.1, inst.b[1] * 0.1, 150.0, inst.b[3] * 0.1, inst.b[4] * 0.1, inst.b[5] * 0.1);
        let cons = build_constraints(&[true; 4], &FrictionParams::default());
        let sol = solve_balance_qp(&inst.a, &b, &w, &Vec12::zeros(), &cons).unwrap();
        if !sol.active_set.is_empty() {
            continue;
        }
        checked += 1;
        assert!((achieved_wrench(&inst.a, &sol.f) - b).amax() <= 1e-6);
        let s = nalgebra::SMatrix::<f64, 6, 6>::from_diagonal(&w.s);
        assert!((inst.a.transpose() * s * (inst.a * sol.f - b)).norm() <= 1e-7);
    }
    assert!(checked > 50);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn larger_gamma2_keeps_forces_closer_to_previous(seed in any::<u64>(), g2a in 0.0f64..0.5, g2b in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let cons = build_constraints(&inst.contacts, &inst.fp);
        let (lo, hi) = if g2a <= g2b { (g2a, g2b) } else { (g2b, g2a) };
        let w_lo = QpWeights { gamma2: lo, ..inst.w };
        let w_hi = QpWeights { gamma2: hi, ..inst.w };
        let f_lo = solve_balance_qp(&inst.a, &inst.b, &w_lo, &inst.f_prev, &cons).unwrap().f;
        let f_hi = solve_balance_qp(&inst.a, &inst.b, &w_hi, &inst.f_prev, &cons).unwrap().f;
        // Distances only count stance variables; swing forces are pinned.
        let dist = |f: &Vec12| (0..4).filter(|&l| inst.contacts[l]).map(|l| (f - inst.f_prev).fixed_rows::<3>(3 * l).norm_squared()).sum::<f64>().sqrt();
        prop_assert!(dist(&f_hi) <= dist(&f_lo) + 1e-7);
    }

    #[test]
    fn deterministic_replay(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let cons = build_constraints(&inst.contacts, &inst.fp);
        let a = solve_balance_qp(&inst.a, &inst.b, &inst.w, &inst.f_prev, &cons).unwrap();
        let b = solve_balance_qp(&inst.a, &inst.b, &inst.w, &inst.f_prev, &cons).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn symmetric_stance_shares_weight_equally() {
    let feet = common::HIPS.map(|h| Vec3::new(h[0], h[1], 0.0));
    let a = build_wrench_matrix(&feet, &Vec3::new(0.0, 0.0, 0.3));
    let b = Vec6::new(0.0, 0.0, 12.0 * 9.81, 0.0, 0.0, 0.0);
    let w = QpWeights { gamma1: 0.0, gamma2: 0.0, ..QpWeights::default() };
    let sol = solve_balance_qp(&a, &b, &w, &Vec12::zeros(), &build_constraints(&[true; 4], &FrictionParams::default())).unwrap();
    for leg in 0..4 {
        assert!((sol.foot(leg).z - 29.43).abs() <= 1e-6);
    }
}
