use proptest::prelude::*;
use quadsim::controller::GainMatrices;
use quadsim::so3::{Mat12, MatNM, Vec12, Vec6};
use quadsim::stability::{build_am, solve_lyapunov, LyapunovData};

/// 2×2 Lyapunov solution for `[0 1; −k −c]` with `Q = diag(q1, q2)`, from
/// expanding the matrix equation entry by entry.
fn channel_closed_form(k: f64, c: f64, q1: f64, q2: f64) -> (f64, f64, f64) {
    let p12 = q1 / (2.0 * k);
    let p22 = (q2 + 2.0 * p12) / (2.0 * c);
    let p11 = k * p22 + c * p12;
    (p11, p12, p22)
}

#[test]
fn matches_per_channel_closed_form() {
    let g = GainMatrices::default();
    let q = Vec12::from_fn(|i, _| 1.0 + 0.25 * i as f64);
    let l = LyapunovData::new(&g, &Mat12::from_diagonal(&q)).unwrap();
    for ch in 0..6 {
        let (p11, p12, p22) = channel_closed_form(g.kp[ch], g.kd[ch], q[ch], q[6 + ch]);
        let scale = p11.abs().max(p22.abs());
        assert!((l.p[(ch, ch)] - p11).abs() <= 1e-10 * scale, "channel {ch} p11");
        assert!((l.p[(ch, 6 + ch)] - p12).abs() <= 1e-10 * scale, "channel {ch} p12");
        assert!((l.p[(6 + ch, ch)] - p12).abs() <= 1e-10 * scale, "channel {ch} p21");
        assert!((l.p[(6 + ch, 6 + ch)] - p22).abs() <= 1e-10 * scale, "channel {ch} p22");
        for other in 0..12 {
            if other != ch && other != 6 + ch {
                assert!(l.p[(ch, other)].abs() <= 1e-10 * scale, "cross-channel coupling at ({ch}, {other})");
            }
        }
    }
}

#[test]
fn table_gains_with_identity_q() {
    let l = LyapunovData::with_identity_q(&GainMatrices::default()).unwrap();
    assert!(l.residual <= 1e-8, "residual {}", l.residual);
    assert!(l.p_min > 0.0);
    assert!(l.lambda > 0.0);
    let am = build_am(&GainMatrices::default()).unwrap();
    for ev in am.complex_eigenvalues().iter() {
        assert!(ev.re < 0.0);
    }
}

#[test]
fn linear_loop_satisfies_decay_inequality() {
    let l = LyapunovData::with_identity_q(&GainMatrices::default()).unwrap();
    let dt = 1e-4;
    let mut eta = Vec12::from_fn(|i, _| 0.05 * ((i as f64) * 1.3).sin());
    let f = |e: &Vec12| l.am * e;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..(5.0 / dt) as usize {
        // V̇ along the exact flow at the current point.
        let check = l.v_dot_linear(&eta) + l.lambda * l.v(&eta);
        worst = worst.max(check);
        let k1 = f(&eta);
        let k2 = f(&(eta + k1 * (dt / 2.0)));
        let k3 = f(&(eta + k2 * (dt / 2.0)));
        let k4 = f(&(eta + k3 * dt));
        eta += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    assert!(worst <= 1e-9, "max V̇ + λV = {worst}");
}

#[test]
fn marginal_spectrum_makes_the_system_singular() {
    let a = MatNM::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let q = MatNM::identity(2, 2);
    // An unstable but non-singular system still solves; only eigenvalue pairs
    // summing to zero make the Kronecker system singular.
    assert!(solve_lyapunov(&a, &q).is_ok());
    let a = MatNM::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    assert!(solve_lyapunov(&a, &q).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_gains_give_spd_solutions(kp in proptest::collection::vec(0.5..200.0f64, 6), kd in proptest::collection::vec(0.5..80.0f64, 6)) {
        let g = GainMatrices { kp: Vec6::from_column_slice(&kp), kd: Vec6::from_column_slice(&kd) };
        let l = LyapunovData::with_identity_q(&g).unwrap();
        prop_assert!(l.residual <= 1e-8 * l.p_max.max(1.0));
        prop_assert!(l.p_min > 0.0);
        prop_assert_eq!(l.p, l.p.transpose());
    }
}
