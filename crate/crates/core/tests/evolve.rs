use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use noisesync::chain::{build_sector_basis, eigenmodes, ChainSpec};
use noisesync::error::Error;
use noisesync::evolve::{
    lindblad_evolve, liouvillian_spectrum, trajectory_evolve, trajectory_evolve_with, DensityMatrix,
    LindbladGenerator, TrajectoryOptions,
};
use noisesync::linalg::max_abs;
use noisesync::mems::dfs_vectors_fullspace;
use noisesync::noise::{synthesize_ensemble, NoiseSpec, NoiseTrajectory};

const DT: f64 = PI / 100.0;

fn real(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn five_site(u: usize, gamma: f64) -> ChainSpec {
    ChainSpec::new(5).unwrap().with_noise(&[u], gamma).unwrap()
}

#[test]
fn unitary_limit_conserves_purity() {
    let spec = five_site(3, 0.0);
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let result = lindblad_evolve(&spec, &initial, 10.0 * PI, DT).unwrap();
    for s in &result.states {
        assert!((s.purity() - 1.0).abs() < 1e-8);
    }
    assert_eq!(result.times.len(), result.states.len());
    assert!(result.times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn dfs_populations_are_frozen() {
    let spec = five_site(3, 1.3);
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let result = lindblad_evolve(&spec, &initial, 10.0 * PI, DT).unwrap();
    let (v1, v2) = dfs_vectors_fullspace(5).unwrap();
    for v in [real(&v1), real(&v2)] {
        let p0 = result.states[0].expectation_in(&v).re;
        assert!((p0 - 0.25).abs() < 1e-12);
        for s in &result.states {
            assert!((s.expectation_in(&v).re - p0).abs() < 1e-6);
        }
    }
}

/// `|φ1⟩⟨φ3|` shares its Bohr frequency `√3 J` with `|φ3⟩⟨φ5|`; dephasing mixes
/// the two into a slow mode at `Re λ ≈ −0.433`, which sets the decay envelope.
#[test]
fn damped_mode_coherence_decays() {
    let spec = five_site(3, 1.3);
    let modes = eigenmodes(&spec).unwrap();
    let (phi1, phi3) = (real(&modes[0].profile), real(&modes[2].profile));
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let result = lindblad_evolve(&spec, &initial, 6.0 * PI, DT).unwrap();
    let coherence = |t: f64| result.state_near(t).matrix_element(&phi1, &phi3).norm();
    let start = coherence(0.0);
    assert!(start > 0.1);

    let spectrum = liouvillian_spectrum(&spec, &build_sector_basis(5, 1).unwrap()).unwrap();
    let rate = spectrum.eigenvalues.iter().map(|z| -z.re).filter(|&r| r > 1e-8).fold(f64::INFINITY, f64::min);
    assert!((rate - 0.4327).abs() < 1e-3, "{rate}");
    let envelope = (-rate * 3.0 * PI).exp();
    let ratio = coherence(3.0 * PI) / start;
    assert!(ratio < 3.0 * envelope && ratio > envelope / 3.0, "{ratio} vs {envelope}");
    assert!(coherence(6.0 * PI) < 1e-3 * start);
}

#[test]
fn liouvillian_kernel_and_frequencies() {
    let basis = build_sector_basis(5, 1).unwrap();
    let synced = liouvillian_spectrum(&five_site(3, 1.3), &basis).unwrap();
    // Both DFS populations and the flat mixture over the damped modes survive.
    assert_eq!(synced.kernel_dim(1e-8), 3);
    assert_eq!(synced.undamped_frequencies(1e-8).len(), 1);
    assert!((synced.undamped_frequencies(1e-8)[0] - 2.0).abs() < 1e-8);
    for u in [1, 2] {
        assert!(liouvillian_spectrum(&five_site(u, 1.3), &basis).unwrap().undamped_frequencies(1e-8).is_empty());
    }
    let free = liouvillian_spectrum(&five_site(3, 0.0), &basis).unwrap();
    assert!(free.eigenvalues.iter().all(|z| z.re.abs() < 1e-9));
    assert_eq!(free.eigenvalues.len(), 25);
}

#[test]
fn liouvillian_dimension_cap() {
    let spec = ChainSpec::new(11).unwrap().with_noise(&[3, 6, 9], 0.3).unwrap();
    let err = liouvillian_spectrum(&spec, &build_sector_basis(11, 3).unwrap()).unwrap_err();
    assert!(!matches!(err, Error::NonConvergence { .. }));
}

#[test]
fn generator_annihilates_dfs_projectors() {
    for (n, sites) in [(5, vec![3]), (8, vec![3, 6]), (11, vec![3, 6, 9])] {
        let spec = ChainSpec::new(n).unwrap().with_noise(&sites, 2.0).unwrap();
        let basis = build_sector_basis(n, 1).unwrap();
        let generator = LindbladGenerator::new(&spec, &basis).unwrap();
        let (v1, v2) = dfs_vectors_fullspace(n).unwrap();
        for v in [v1, v2] {
            let rho = DensityMatrix::from_pure(basis.clone(), &real(&v)).unwrap();
            assert!(max_abs(&generator.apply(rho.entries())) < 1e-10);
        }
    }
}

#[test]
fn silent_trajectory_matches_unitary_lindblad() {
    let spec = five_site(3, 1.3);
    let free = five_site(3, 0.0);
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let t = 2.0 * PI;
    let pulses = (t / 0.25).ceil() as usize + 1;
    let ensemble = vec![vec![NoiseTrajectory::zeros(pulses, 0.25)]];
    let traj = trajectory_evolve(&spec, &initial, &ensemble, t, DT).unwrap();
    let lind = lindblad_evolve(&free, &initial, t, DT).unwrap();
    assert_eq!(traj.trajectories, Some(1));
    for (a, b) in traj.states.iter().zip(&lind.states) {
        assert!(a.trace_distance(b) < 1e-7);
        assert!((a.purity() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn ensemble_average_approaches_master_equation() {
    let spec = five_site(3, 1.3);
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let t = 3.0 * PI;
    let noise = NoiseSpec::white(1000, (t / 0.25).ceil() as usize + 1, 0.25, 1.3, 42);
    let ensemble = vec![synthesize_ensemble(&noise).unwrap()];
    let traj = trajectory_evolve(&spec, &initial, &ensemble, t, DT).unwrap();
    let lind = lindblad_evolve(&spec, &initial, t, DT).unwrap();
    let d = traj.state_near(t).trace_distance(lind.state_near(t));
    assert!(d <= 0.05, "{d}");
    for s in &traj.states {
        assert!((s.trace() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn trajectory_average_ignores_worker_count() {
    let spec = five_site(3, 1.3);
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let t = PI;
    let noise = NoiseSpec::white(300, (t / 0.25).ceil() as usize + 1, 0.25, 1.3, 9);
    let ensemble = vec![synthesize_ensemble(&noise).unwrap()];
    let opts = TrajectoryOptions { chunk: 16, wave: 3, ..Default::default() };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| trajectory_evolve_with(&spec, &initial, &ensemble, t, DT, &opts).unwrap())
    };
    let (a, b) = (run(1), run(3));
    for (x, y) in a.states.iter().zip(&b.states) {
        assert_eq!(x.entries(), y.entries());
    }
}

#[test]
fn trajectory_errors() {
    let spec = five_site(3, 1.3);
    let initial = DensityMatrix::from_excitations(5, &[1]).unwrap();
    let short = vec![vec![NoiseTrajectory::zeros(4, 0.25)]];
    assert!(matches!(trajectory_evolve(&spec, &initial, &short, PI, DT), Err(Error::EnsembleExhausted(_))));
    let missing: Vec<Vec<NoiseTrajectory>> = Vec::new();
    assert!(matches!(trajectory_evolve(&spec, &initial, &missing, PI, DT), Err(Error::EnsembleExhausted(_))));
    let mixed = DensityMatrix::from_excitations(5, &[1]).unwrap().mix(&DensityMatrix::from_excitations(5, &[2]).unwrap(), 0.5).unwrap();
    let ok = vec![vec![NoiseTrajectory::zeros(100, 0.25)]];
    assert!(trajectory_evolve(&spec, &mixed, &ok, PI, DT).is_err());
}

#[test]
fn invalid_states_rejected() {
    let basis = build_sector_basis(3, 1).unwrap();
    assert!(DensityMatrix::from_pure(basis.clone(), &real(&[1.0, 1.0, 0.0])).is_err());
    assert!(DensityMatrix::from_pure(basis, &real(&[1.0, 0.0])).is_err());
    assert!(DensityMatrix::from_excitations(5, &[6]).is_err());
    assert!(lindblad_evolve(&five_site(3, 1.0), &DensityMatrix::from_excitations(4, &[1]).unwrap(), 1.0, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lindblad_invariants_hold(
        n in 3usize..=6,
        gamma in 0.0f64..2.5,
        delta in -1.5f64..1.5,
        site in 1usize..=3,
        first in 1usize..=2,
    ) {
        let spec = ChainSpec::new(n).unwrap().with_detuning(delta).unwrap().with_noise(&[site], gamma).unwrap();
        let initial = DensityMatrix::from_excitations(n, &[first, n]).unwrap();
        let result = lindblad_evolve(&spec, &initial, 2.0, 0.1).unwrap();
        let mut last = 1.0;
        for s in &result.states {
            prop_assert!((s.trace() - 1.0).abs() < 1e-8);
            prop_assert!(s.hermiticity_error() < 1e-10);
            prop_assert!(s.min_eigenvalue() > -1e-8);
            prop_assert!(s.purity() <= last + 1e-9);
            last = s.purity();
        }
    }
}
