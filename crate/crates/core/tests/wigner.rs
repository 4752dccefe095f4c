mod common;

use std::f64::consts::PI;

use common::ClebschGordan;
use num_complex::Complex64 as C64;
use spin_rsp::collective_spin::{rotated_fock_state, CMatrix};
use spin_rsp::rsp_protocol::run_outcome;
use spin_rsp::squeezing::{apply_frame_rotation, evolve_2a2s, find_optimal_time};
use spin_rsp::wigner::{
    multipole_decomposition, spherical_harmonic, wigner_3j, wigner_map, wigner_norm,
    AngularState, SphereGrid, SphereMap,
};
use spin_rsp::{EnsembleState, RotationSpec};

#[test]
fn three_j_matches_clebsch_gordan_oracle() {
    let mut checked = 0;
    for tj1 in 0..=8i64 {
        for tj2 in 0..=8i64 {
            let cg = ClebschGordan::new(tj1, tj2);
            let mut tj3 = (tj1 - tj2).abs();
            while tj3 <= (tj1 + tj2).min(8) {
                for tm1 in (-tj1..=tj1).step_by(2) {
                    for tm2 in (-tj2..=tj2).step_by(2) {
                        let tm3 = -tm1 - tm2;
                        if tm3.abs() > tj3 {
                            continue;
                        }
                        let ours = wigner_3j(tj1, tj2, tj3, tm1, tm2, tm3);
                        let oracle = cg.three_j(tj3, tm1, tm2, tm3);
                        assert!(
                            (ours - oracle).abs() < 1e-12,
                            "({tj1} {tj2} {tj3}; {tm1} {tm2} {tm3})/2: {ours} vs {oracle}"
                        );
                        checked += 1;
                    }
                }
                tj3 += 2;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn three_j_reference_values() {
    assert!((wigner_3j(2, 2, 0, 0, 0, 0) + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    assert_eq!(wigner_3j(2, 2, 2, 2, 0, 0), 0.0);
    for tj in 0..=10 {
        for tm in (-tj..=tj).step_by(2) {
            let sign = if ((tj - tm) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((wigner_3j(tj, 0, tj, -tm, 0, tm) - sign / ((tj + 1) as f64).sqrt()).abs() < 1e-14);
        }
    }
}

#[test]
fn harmonics_orthonormal_under_quadrature() {
    let n = 4;
    let grid = SphereGrid::exact_for(n);
    for (k1, q1, k2, q2) in [(0, 0, 0, 0), (3, 1, 3, 1), (8, -5, 8, -5), (8, 2, 6, 2), (5, 3, 5, -3), (2, 0, 4, 0)] {
        let re = SphereMap::from_fn(grid, |t, p| {
            (spherical_harmonic(k1, q1, t, p).conj() * spherical_harmonic(k2, q2, t, p)).re
        })
        .unwrap()
        .integrate();
        let expected = if (k1, q1) == (k2, q2) { 1.0 } else { 0.0 };
        assert!((re - expected).abs() < 1e-8, "({k1},{q1})x({k2},{q2})");
    }
    assert!((SphereMap::from_fn(grid, |_, _| 1.0).unwrap().total_weight() - 4.0 * PI).abs() < 1e-10);
}

fn random_density(n: usize, seed: u64) -> CMatrix {
    // deterministic mixed state: normalized sum of a few rotated Fock projectors
    let mut rho = CMatrix::zeros(n + 1, n + 1);
    let mut x = seed;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut total = 0.0;
    for k in 0..=n {
        let w = next();
        let st = rotated_fock_state(n, k, RotationSpec::new(PI * next(), 2.0 * PI * next())).unwrap();
        let v = st.to_vector();
        rho += &v * v.adjoint() * C64::new(w, 0.0);
        total += w;
    }
    rho / C64::new(total, 0.0)
}

#[test]
fn multipole_identities() {
    for n in 1..=10 {
        let state = AngularState::from_density(n, random_density(n, n as u64)).unwrap();
        let m = multipole_decomposition(&state);
        assert!((m.get(0, 0) - C64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0)).norm() < 1e-12);
        for k in 0..=n {
            for q in 1..=k as i64 {
                let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
                assert!((m.get(k, -q) - m.get(k, q).conj() * sign).norm() < 1e-10, "N={n} k={k} q={q}");
            }
        }
    }
    let fock = AngularState::from_ensemble(&EnsembleState::fock(6, 6).unwrap()).unwrap();
    let m = multipole_decomposition(&fock);
    for k in 0..=6 {
        for q in -(k as i64)..=(k as i64) {
            if q != 0 {
                assert!(m.get(k, q).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn wigner_is_real() {
    let n = 7;
    let state = AngularState::from_density(n, random_density(n, 99)).unwrap();
    let m = multipole_decomposition(&state);
    for &(t, p) in &[(0.3, 0.2), (1.7, 4.0), (2.9, 1.1)] {
        let mut w = C64::new(0.0, 0.0);
        for k in 0..=n {
            for q in -(k as i64)..=(k as i64) {
                w += m.get(k, q) * spherical_harmonic(k, q, t, p);
            }
        }
        assert!(w.im.abs() < 1e-8);
        assert!((w.re - m.evaluate(t, p)).abs() < 1e-12);
    }
}

#[test]
fn coherent_state_peaks_at_north_pole() {
    let n = 10;
    let st = rotated_fock_state(n, n, RotationSpec::new(0.0, 0.0)).unwrap();
    let map = wigner_map(&AngularState::from_ensemble(&st).unwrap(), SphereGrid::plot_default()).unwrap();
    assert_eq!(map.argmax().0, 0);
}

#[test]
fn z_rotation_shifts_azimuth() {
    let n = 6;
    let shift = 2.0 * PI * 5.0 / 36.0;
    let base = rotated_fock_state(n, 4, RotationSpec::new(1.0, 0.5)).unwrap();
    let moved = rotated_fock_state(n, 4, RotationSpec::new(1.0, 0.5 + shift)).unwrap();
    let grid = SphereGrid::Uniform { n_theta: 19, n_phi: 36 };
    let a = wigner_map(&AngularState::from_ensemble(&base).unwrap(), grid).unwrap();
    let b = wigner_map(&AngularState::from_ensemble(&moved).unwrap(), grid).unwrap();
    for i in 0..19 {
        for j in 0..36 {
            assert!((b.values[i][(j + 5) % 36] - a.values[i][j]).abs() < 1e-8);
        }
    }
}

#[test]
fn normalization_and_negativity_for_conditional_states() {
    let n = 20;
    let (tau, _) = find_optimal_time(n).unwrap();
    let res = apply_frame_rotation(&evolve_2a2s(n, tau).unwrap());
    let spec = RotationSpec::new(0.5, 0.0);
    let mut minima = Vec::new();
    for k in [n, n - 1, n / 2, 3] {
        let st = run_outcome(&res, spec, k).unwrap().bob_state.unwrap();
        let state = AngularState::from_ensemble(&st).unwrap();
        let exact = wigner_map(&state, SphereGrid::exact_for(n)).unwrap();
        assert!((exact.integrate() - wigner_norm(n)).abs() < 1e-6, "k={k}");
        minima.push(wigner_map(&state, SphereGrid::plot_default()).unwrap().min());
    }
    assert!(minima[1] < 0.0);
    assert!(minima[0] > minima[1]);
}

#[test]
fn density_validation() {
    assert!(AngularState::from_density(2, CMatrix::identity(3, 3)).is_err());
    assert!(AngularState::from_density(2, CMatrix::identity(2, 2)).is_err());
    let ok = CMatrix::identity(3, 3) / C64::new(3.0, 0.0);
    assert!(AngularState::from_density(2, ok).is_ok());
}
