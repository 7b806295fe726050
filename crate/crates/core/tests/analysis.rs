use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use noisesync::analysis::{
    concurrence, edge_reduced_state, fidelity, fit_cosine, metric_header, pearson, purity, MagnetizationSeries,
    TwoQubitState, Window,
};
use noisesync::chain::build_sector_basis;
use noisesync::evolve::DensityMatrix;
use noisesync::mems::mems_reference;

type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Cyclic Jacobi rotations on a real symmetric matrix; returns eigenvalues.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let (cs, sn) = (1.0 / (t * t + 1.0).sqrt(), t / (t * t + 1.0).sqrt());
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[test]
fn fidelity_of_reference_with_maximally_mixed() {
    let r = mems_reference(5).unwrap();
    let got = fidelity(&r.matrix, &TwoQubitState::maximally_mixed()).unwrap();
    // With B = I/4, √A B √A = A/4, so F = Σ √(λ/4) over the eigenvalues of A.
    let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| r.matrix.matrix()[(i, j)].re).collect()).collect();
    let oracle: f64 = jacobi_eigenvalues(rows).iter().map(|l| (l.max(0.0) / 4.0).sqrt()).sum();
    assert!((oracle - FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
}

#[test]
fn werner_and_pure_concurrence() {
    for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
        let s = 0.5 * p;
        let q = (1.0 - p) / 4.0;
        let w = TwoQubitState::from_real([
            [q, 0.0, 0.0, 0.0],
            [0.0, q + s, -s, 0.0],
            [0.0, -s, q + s, 0.0],
            [0.0, 0.0, 0.0, q],
        ])
        .unwrap();
        let want = ((3.0 * p - 1.0) / 2.0).max(0.0);
        assert!((concurrence(&w).unwrap() - want).abs() < 1e-9, "p = {p}");
    }
    let theta: f64 = 0.3;
    let psi = TwoQubitState::pure([c(theta.cos(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, theta.sin())]);
    assert!((concurrence(&psi).unwrap() - (2.0 * theta).sin()).abs() < 1e-9);
    assert!((purity(&psi) - 1.0).abs() < 1e-12);
    assert!(concurrence(&TwoQubitState::maximally_mixed()).unwrap().abs() < 1e-12);
}

#[test]
fn invalid_two_qubit_states_rejected() {
    assert!(TwoQubitState::new(M::identity(3, 3)).is_err());
    assert!(TwoQubitState::new(M::identity(4, 4)).is_err());
    let mut bad = M::identity(4, 4) * c(0.25, 0.0);
    bad[(0, 1)] = c(0.1, 0.0);
    assert!(TwoQubitState::new(bad).is_err());
    assert!(TwoQubitState::from_real([[0.5, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, -0.5]]).is_err());
}

#[test]
fn pearson_edge_cases() {
    assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);

    let times: Vec<f64> = (0..=200).map(|i| i as f64 * PI / 100.0).collect();
    let a: Vec<f64> = times.iter().map(|t| t.sin()).collect();
    let b: Vec<f64> = times.iter().map(|t| 2.0 * t.sin() + if *t < PI { 5.0 } else { 0.5 }).collect();
    let series = MagnetizationSeries { times, values: vec![a, b] };
    let cumulative = series.pearson(1, 2, 2.0 * PI, Window::Cumulative { start: 0.0 }).unwrap();
    let trailing = series.pearson(1, 2, 2.0 * PI, Window::Trailing { width: PI * 0.9 }).unwrap();
    assert!(trailing > 0.99 && cumulative < trailing);
}

#[test]
fn metric_header_layout() {
    assert_eq!(metric_header(5), "jt,sz_1,sz_2,sz_3,sz_4,sz_5,c15,c24,concurrence,fidelity_mems,purity");
}

fn local_unitary(a: f64, b: f64, z: f64) -> M {
    let norm = (a * a + b * b + z * z).sqrt().max(1e-12);
    let (cs, sn) = (norm.cos(), norm.sin() / norm);
    M::from_row_slice(
        2,
        2,
        &[c(cs, -sn * z), c(-sn * b, -sn * a), c(sn * b, -sn * a), c(cs, sn * z)],
    )
}

fn random_state(re: &[f64], im: &[f64]) -> TwoQubitState {
    let g = M::from_fn(4, 4, |i, j| c(re[4 * i + j], im[4 * i + j]));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    TwoQubitState::new(rho / c(tr, 0.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pearson_is_affine_invariant(
        x in prop::collection::vec(-5.0f64..5.0, 6..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
        flip in any::<bool>(),
    ) {
        let y: Vec<f64> = x.iter().zip(&noise).map(|(v, n)| v * 0.5 + n).collect();
        let base = pearson(&x, &y);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let s = if flip { -a } else { a };
        let xt: Vec<f64> = x.iter().map(|v| s * v + b).collect();
        let got = pearson(&xt, &y).unwrap();
        let want = if flip { -base } else { base };
        prop_assert!((got - want).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&got));
    }

    #[test]
    fn concurrence_ignores_local_unitaries(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        angles in prop::collection::vec(-PI..PI, 6),
    ) {
        let rho = random_state(&re, &im);
        let ua = local_unitary(angles[0], angles[1], angles[2]);
        let ub = local_unitary(angles[3], angles[4], angles[5]);
        let c0 = concurrence(&rho).unwrap();
        let c1 = concurrence(&rho.conjugate_local(&ua, &ub)).unwrap();
        prop_assert!((c0 - c1).abs() < 1e-7, "{c0} vs {c1}");
        prop_assert!((0.0..=1.0).contains(&c0));
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        re in prop::collection::vec(-1.0f64..1.0, 32),
        im in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let a = random_state(&re[..16], &im[..16]);
        let b = random_state(&re[16..], &im[16..]);
        let fab = fidelity(&a, &b).unwrap();
        let fba = fidelity(&b, &a).unwrap();
        prop_assert!((fab - fba).abs() < 1e-7);
        prop_assert!((0.0..=1.0).contains(&fab));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn cosine_fit_recovers_parameters(
        omega in 1.2f64..2.8,
        amplitude in 0.1f64..2.0,
        phase in -PI..PI,
        offset in -1.0f64..1.0,
    ) {
        let times: Vec<f64> = (0..=800).map(|i| i as f64 * PI / 100.0).collect();
        let values: Vec<f64> = times.iter().map(|t| amplitude * (omega * t + phase).cos() + offset).collect();
        let fit = fit_cosine(&times, &values, 3.0 * PI, 8.0 * PI).unwrap();
        prop_assert!((fit.angular_frequency - omega).abs() < 1e-6, "{} vs {omega}", fit.angular_frequency);
        prop_assert!((fit.amplitude - amplitude).abs() < 1e-6);
        prop_assert!((fit.offset - offset).abs() < 1e-6);
        let dphi = (fit.phase - phase).rem_euclid(2.0 * PI);
        prop_assert!(dphi.min(2.0 * PI - dphi) < 1e-5);
        prop_assert!(fit.rms_residual < 1e-8);
    }

    #[test]
    fn edge_state_matches_brute_force_partial_trace(
        re in prop::collection::vec(-1.0f64..1.0, 6),
        im in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let n = 4;
        let basis = build_sector_basis(n, 2).unwrap();
        let norm = re.iter().chain(&im).map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let amps: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| c(a / norm, b / norm)).collect();
        let mut full = vec![c(0.0, 0.0); 1 << n];
        for (k, &cfg) in basis.configs().iter().enumerate() {
            full[cfg as usize] = amps[k];
        }
        let state = DensityMatrix::from_pure(basis, &amps).unwrap();
        let edge = edge_reduced_state(&state, (1, n)).unwrap();
        // Index 2a + b with a the occupation of site 1 and b that of site N.
        let mut oracle = M::zeros(4, 4);
        for x in 0..(1usize << n) {
            for y in 0..(1usize << n) {
                let inner = 0b0110;
                if x & inner != y & inner {
                    continue;
                }
                let ix = 2 * (x & 1) + (x >> (n - 1) & 1);
                let iy = 2 * (y & 1) + (y >> (n - 1) & 1);
                oracle[(ix, iy)] += full[x] * full[y].conj();
            }
        }
        let diff = (edge.matrix() - oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }
}
