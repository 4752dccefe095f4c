mod common;

use std::f64::consts::PI;

use common::{c, kron, ops, propagator};
use num_complex::Complex64 as C64;
use spin_rsp::squeezing::{
    apply_frame_rotation, build_2a2s_tridiagonal, epr_minus, evolve_2a2s, fidelity,
    find_optimal_time, pair_energy, pair_hamiltonian, pair_variances, short_time_variance,
    PairFrame, PairPropagator, SqueezingRun,
};

fn joint_evolution(na: usize, nb: usize, tau: f64) -> Vec<C64> {
    let (oa, ob) = (ops(na), ops(nb));
    let h = kron(&oa.sp, &ob.sp) + kron(&oa.sm, &ob.sm);
    let dim = (na + 1) * (nb + 1);
    let mut start = nalgebra::DVector::from_element(dim, c(0.0));
    start[na * (nb + 1) + nb] = c(1.0);
    (propagator(&h, tau) * start).iter().copied().collect()
}

#[test]
fn ladder_evolution_matches_joint_space() {
    for (na, nb) in [(1, 1), (2, 2), (4, 4), (6, 6), (5, 3), (2, 6)] {
        for tau in [0.0, 0.07, 0.3, 1.1] {
            let joint = joint_evolution(na, nb, tau);
            let ladder = PairPropagator::new(na, nb).unwrap().state(tau);
            let mut covered = 0.0;
            for (i, a) in ladder.psi().iter().enumerate() {
                let (ka, kb) = ladder.labels(i);
                let b = joint[ka * (nb + 1) + kb];
                assert!((a - b).norm() < 1e-10, "({na},{nb}) tau={tau} rung {i}");
                covered += b.norm_sqr();
            }
            // closure: nothing leaks off the ladder
            assert!((covered - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn frame_rotation_matches_exponential() {
    let n = 4;
    let o = ops(n);
    let id = nalgebra::DMatrix::<C64>::identity(n + 1, n + 1);
    let frame = propagator(&(kron(&o.sz, &id) + kron(&id, &o.sz)), -PI / 8.0);
    let raw = evolve_2a2s(n, 0.2).unwrap();
    let rotated = apply_frame_rotation(&raw);
    assert_eq!(rotated.frame(), PairFrame::Aligned);
    let joint = joint_evolution(n, n, 0.2);
    let expected = frame * nalgebra::DVector::from_vec(joint);
    for (k, a) in rotated.psi().iter().enumerate() {
        assert!((a - expected[k * (n + 1) + k]).norm() < 1e-10);
    }
}

#[test]
fn tridiagonal_entries() {
    let h = build_2a2s_tridiagonal(5).unwrap();
    assert!(h.diag.iter().all(|&d| d == 0.0));
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-13);
    assert!(close(&h.off, &[5.0, 8.0, 9.0, 8.0, 5.0]));
    // rungs |2,0>, |3,1>, |4,2>: sqrt((4-kA)(kA+1)) sqrt((2-kB)(kB+1))
    let g = pair_hamiltonian(4, 2);
    assert!(close(&g.off, &[6f64.sqrt() * 2f64.sqrt(), 4f64.sqrt() * 2f64.sqrt()]));
    assert!(build_2a2s_tridiagonal(0).is_err());
}

#[test]
fn energy_conserved() {
    for n in [3usize, 20, 60] {
        let e0 = pair_energy(&evolve_2a2s(n, 0.0).unwrap());
        for tau in [0.01, 0.1, 0.5, 2.0] {
            let e = pair_energy(&evolve_2a2s(n, tau).unwrap());
            assert!((e - e0).abs() < 1e-9 * (1.0 + e0.abs()), "N={n} tau={tau}");
        }
    }
}

#[test]
fn norm_preserved_for_large_n() {
    for n in [100usize, 400] {
        let st = evolve_2a2s(n, 0.03).unwrap();
        let norm: f64 = st.psi().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn optimal_times_match_reference_values() {
    let (t20, f20) = find_optimal_time(20).unwrap();
    let (t50, f50) = find_optimal_time(50).unwrap();
    assert!((t20 - 0.1214).abs() < 5e-4, "{t20}");
    assert!((t50 - 0.0586).abs() < 5e-4, "{t50}");
    assert!(f20 > 0.9 && f50 > 0.9);
    assert!(find_optimal_time(1).is_err());
}

#[test]
fn optimal_time_decreases_with_n() {
    let mut last = f64::INFINITY;
    for n in [2usize, 5, 10, 20, 40, 80] {
        let (t, _) = find_optimal_time(n).unwrap();
        assert!(t < last, "N={n}");
        last = t;
    }
}

#[test]
fn fidelity_bounds() {
    let n = 8;
    let epr = epr_minus(n).unwrap();
    assert!((fidelity(&epr, &epr).unwrap() - 1.0).abs() < 1e-14);
    let start = apply_frame_rotation(&evolve_2a2s(n, 0.0).unwrap());
    assert!((fidelity(&start, &epr).unwrap() - 1.0 / 9.0).abs() < 1e-14);
    assert!(fidelity(&epr, &epr_minus(9).unwrap()).is_err());
}

#[test]
fn variances_match_dense_operators() {
    let n = 5;
    let o = ops(n);
    let id = nalgebra::DMatrix::<C64>::identity(n + 1, n + 1);
    let xp = kron(&o.sx, &id) + kron(&id, &o.sx);
    let ym = kron(&o.sy, &id) - kron(&id, &o.sy);
    let zm = kron(&o.sz, &id) - kron(&id, &o.sz);
    for tau in [0.0, 0.05, 0.2] {
        let run = SqueezingRun::new(n, tau, true).unwrap();
        let v = pair_variances(&run).unwrap();
        let mut joint = vec![c(0.0); (n + 1) * (n + 1)];
        for (k, a) in run.state.psi().iter().enumerate() {
            joint[k * (n + 1) + k] = *a;
        }
        let var = |op: &common::M| {
            let m = common::expectation(op, &joint).re;
            common::expectation(&(op * op), &joint).re - m * m
        };
        assert!((v.var_xp - var(&xp)).abs() < 1e-10, "tau={tau}");
        assert!((v.var_ym - var(&ym)).abs() < 1e-10);
        assert!((v.var_zm - var(&zm)).abs() < 1e-10);
    }
    assert!(pair_variances(&SqueezingRun::new(n, 0.1, false).unwrap()).is_err());
}

#[test]
fn short_time_law() {
    let run = SqueezingRun::new(50, 0.01, true).unwrap();
    let v = pair_variances(&run).unwrap();
    let ratio = v.var_xp / short_time_variance(50, 0.01);
    assert!((0.85..=1.15).contains(&ratio), "{ratio}");
    assert!(v.var_zm.abs() < 1e-10);
}
