//! Ensemble of pure-state evolutions under `H + Σ_u ξ_u(t) σ^z_u`.
//!
//! `ξ_u` is piecewise constant, so each pulse is propagated with a
//! second-order Strang split `e^{-iξV h/2} e^{-iHh} e^{-iξV h/2}` using
//! substeps `h ≤ τ0 / substeps_per_pulse`. `e^{-iHh}` comes from one cached
//! eigendecomposition of `H`. For `ξ ≡ 0` the split is exact.
//!
//! Trajectories are grouped in fixed-size chunks. Chunks run in parallel, and
//! their partial sums are added in chunk order, so the averaged state does not
//! depend on the worker count.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{sample_times, DensityMatrix, EvolutionResult, Method};
use crate::chain::{build_hamiltonian, ChainSpec, SectorBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::noise::NoiseTrajectory;

#[derive(Debug, Clone)]
pub struct TrajectoryOptions {
    pub substeps_per_pulse: usize,
    /// Trajectories per reduction chunk.
    pub chunk: usize,
    /// Chunks evaluated between two reductions.
    pub wave: usize,
    pub norm_tol: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { substeps_per_pulse: 4, chunk: 32, wave: 8, norm_tol: 1e-8 }
    }
}

struct Segment {
    pulse: usize,
    substeps: usize,
    propagator: usize,
    /// Sample index reached at the end of the segment.
    sample: Option<usize>,
    half_step: f64,
}

pub fn trajectory_evolve(
    spec: &ChainSpec,
    initial: &DensityMatrix,
    ensemble: &[Vec<NoiseTrajectory>],
    t_final: f64,
    dt_sample: f64,
) -> Result<EvolutionResult> {
    trajectory_evolve_with(spec, initial, ensemble, t_final, dt_sample, &TrajectoryOptions::default())
}

/// `ensemble[i]` holds the trajectories driving `spec.noise_sites()[i]`.
pub fn trajectory_evolve_with(
    spec: &ChainSpec,
    initial: &DensityMatrix,
    ensemble: &[Vec<NoiseTrajectory>],
    t_final: f64,
    dt_sample: f64,
    opts: &TrajectoryOptions,
) -> Result<EvolutionResult> {
    let basis = initial.shared_basis().clone();
    if basis.n_sites() != spec.n_sites() {
        return Err(Error::BasisMismatch { basis: basis.n_sites(), chain: spec.n_sites() });
    }
    if ensemble.len() != spec.noise_sites().len() {
        return Err(Error::EnsembleExhausted(format!(
            "{} noise sites but {} trajectory sets",
            spec.noise_sites().len(),
            ensemble.len()
        )));
    }
    let psi0 = pure_vector(initial)?;
    let times = sample_times(t_final, dt_sample)?;
    let t_end = *times.last().expect("at least one sample");

    let n_traj = ensemble.first().map_or(1, Vec::len);
    if n_traj == 0 || ensemble.iter().any(|set| set.len() != n_traj) {
        return Err(Error::EnsembleExhausted("trajectory sets must be non-empty and equally sized".into()));
    }
    let pulse_width = ensemble
        .first()
        .and_then(|s| s.first())
        .map_or(t_end.max(dt_sample), |t| t.pulse_width);
    for set in ensemble {
        for tr in set {
            if tr.pulse_width != pulse_width {
                return Err(Error::InvalidNoise("trajectories use different pulse widths".into()));
            }
            if tr.duration() < t_end * (1.0 - 1e-12) {
                return Err(Error::EnsembleExhausted(format!(
                    "trajectory covers Jt = {} < {t_end}",
                    tr.duration()
                )));
            }
        }
    }

    // Spectral decomposition of the static Hamiltonian.
    let h = build_hamiltonian(spec, &basis)?;
    let (energies, vectors) = linalg::eigh(&h.entries);
    let (segments, steps) = plan_segments(&times, pulse_width, opts.substeps_per_pulse.max(1));
    let propagators: Vec<CMatrix> = steps
        .iter()
        .map(|&step| {
            let phases = DVector::from_iterator(
                energies.len(),
                energies.iter().map(|&e| Complex64::from_polar(1.0, -e * step)),
            );
            &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint()
        })
        .collect();
    let spins: Vec<Vec<f64>> = spec
        .noise_sites()
        .iter()
        .map(|&u| basis.configs().iter().map(|&c| SectorBasis::spin(c, u)).collect())
        .collect();

    let ctx = Context {
        psi0: &psi0,
        segments: &segments,
        propagators: &propagators,
        spins: &spins,
        ensemble,
        n_samples: times.len(),
        times: &times,
        norm_tol: opts.norm_tol,
    };

    let d = basis.dim();
    let chunk = opts.chunk.max(1);
    let n_chunks = n_traj.div_ceil(chunk);
    let mut total: Vec<CMatrix> = vec![CMatrix::zeros(d, d); times.len()];
    let wave = opts.wave.max(1);
    for wave_start in (0..n_chunks).step_by(wave) {
        let wave_end = (wave_start + wave).min(n_chunks);
        let partial: Vec<Result<Vec<CMatrix>>> = (wave_start..wave_end)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * chunk;
                let hi = (lo + chunk).min(n_traj);
                ctx.run_chunk(lo..hi)
            })
            .collect();
        for chunk_sum in partial {
            for (acc, m) in total.iter_mut().zip(chunk_sum?) {
                *acc += m;
            }
        }
    }

    let scale = Complex64::new(1.0 / n_traj as f64, 0.0);
    let states = total
        .into_iter()
        .map(|m| DensityMatrix::from_matrix_unchecked(Arc::clone(&basis), m * scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionResult {
        times,
        states,
        method: Method::TrajectoryEnsemble,
        trajectories: Some(n_traj),
    })
}

struct Context<'a> {
    psi0: &'a DVector<Complex64>,
    segments: &'a [Segment],
    propagators: &'a [CMatrix],
    spins: &'a [Vec<f64>],
    ensemble: &'a [Vec<NoiseTrajectory>],
    n_samples: usize,
    times: &'a [f64],
    norm_tol: f64,
}

impl Context<'_> {
    fn run_chunk(&self, range: std::ops::Range<usize>) -> Result<Vec<CMatrix>> {
        let d = self.psi0.len();
        let mut sums = vec![CMatrix::zeros(d, d); self.n_samples];
        for traj in range {
            let mut psi = self.psi0.clone();
            accumulate(&mut sums[0], &psi);
            let mut field = vec![0.0; d];
            let mut half = vec![Complex64::new(1.0, 0.0); d];
            let mut last_pulse = usize::MAX;
            for seg in self.segments {
                if seg.pulse != last_pulse {
                    field.iter_mut().for_each(|f| *f = 0.0);
                    for (site_idx, set) in self.ensemble.iter().enumerate() {
                        let xi = set[traj].amplitudes[seg.pulse];
                        for (f, s) in field.iter_mut().zip(&self.spins[site_idx]) {
                            *f += xi * s;
                        }
                    }
                    last_pulse = seg.pulse;
                }
                for (p, f) in half.iter_mut().zip(&field) {
                    *p = Complex64::from_polar(1.0, -f * seg.half_step);
                }
                let u = &self.propagators[seg.propagator];
                for _ in 0..seg.substeps {
                    psi.iter_mut().zip(&half).for_each(|(a, p)| *a *= p);
                    psi = u * &psi;
                    psi.iter_mut().zip(&half).for_each(|(a, p)| *a *= p);
                }
                if let Some(i) = seg.sample {
                    let norm = psi.norm_squared();
                    if (norm - 1.0).abs() > self.norm_tol {
                        return Err(Error::InvariantViolation {
                            time: self.times[i],
                            what: format!("trajectory {traj} norm² drifted to {norm}"),
                        });
                    }
                    accumulate(&mut sums[i], &psi);
                }
            }
        }
        Ok(sums)
    }
}

fn accumulate(acc: &mut CMatrix, psi: &DVector<Complex64>) {
    let d = psi.len();
    for c in 0..d {
        let pc = psi[c].conj();
        for r in 0..d {
            acc[(r, c)] += psi[r] * pc;
        }
    }
}

/// Splits `[0, t_end]` at every pulse boundary and sample time.
fn plan_segments(times: &[f64], pulse_width: f64, substeps_per_pulse: usize) -> (Vec<Segment>, Vec<f64>) {
    let t_end = *times.last().expect("non-empty grid");
    let max_step = pulse_width / substeps_per_pulse as f64;
    let eps = 1e-12 * t_end.max(1.0);

    let mut events: Vec<(f64, Option<usize>)> = times.iter().enumerate().skip(1).map(|(i, &t)| (t, Some(i))).collect();
    let mut p = 1usize;
    while (p as f64) * pulse_width < t_end - eps {
        events.push((p as f64 * pulse_width, None));
        p += 1;
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, Option<usize>)> = Vec::with_capacity(events.len());
    for (t, s) in events {
        match merged.last_mut() {
            Some(last) if (t - last.0).abs() <= eps => {
                if s.is_some() {
                    *last = (last.0, s);
                }
            }
            _ => merged.push((t, s)),
        }
    }

    let mut step_ids: HashMap<u64, usize> = HashMap::new();
    let mut steps = Vec::new();
    let mut segments = Vec::with_capacity(merged.len());
    let mut start = 0.0;
    for (end, sample) in merged {
        let length = end - start;
        if length <= eps {
            start = end;
            continue;
        }
        let substeps = (length / max_step - 1e-9).ceil().max(1.0) as usize;
        let h = length / substeps as f64;
        let id = *step_ids.entry(h.to_bits()).or_insert_with(|| {
            steps.push(h);
            steps.len() - 1
        });
        let pulse = ((start + eps) / pulse_width).floor() as usize;
        segments.push(Segment { pulse, substeps, propagator: id, sample, half_step: 0.5 * h });
        start = end;
    }
    (segments, steps)
}

/// State vector of a pure density matrix (purity within 1e-10).
fn pure_vector(rho: &DensityMatrix) -> Result<DVector<Complex64>> {
    let purity = rho.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!(
            "trajectory evolution needs a pure initial state (purity {purity})"
        )));
    }
    let (vals, vecs) = linalg::eigh(rho.entries());
    let top = vals.len() - 1;
    Ok(vecs.column(top).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_cover_grid() {
        let times = sample_times(1.0, 0.3).unwrap();
        let (segs, steps) = plan_segments(&times, 0.25, 4);
        let covered: f64 = segs.iter().map(|s| s.substeps as f64 * steps[s.propagator]).sum();
        assert!((covered - 0.9).abs() < 1e-12);
        let samples: Vec<usize> = segs.iter().filter_map(|s| s.sample).collect();
        assert_eq!(samples, vec![1, 2, 3]);
        assert!(steps.iter().all(|&h| h <= 0.0625 + 1e-15));
        // Segment starting at 0.75 belongs to pulse 3.
        assert!(segs.iter().any(|s| s.pulse == 3));
    }

    #[test]
    fn mixed_initial_rejected() {
        let spec = ChainSpec::new(3).unwrap();
        let a = DensityMatrix::from_excitations(3, &[1]).unwrap();
        let b = DensityMatrix::from_excitations(3, &[2]).unwrap();
        let mixed = a.mix(&b, 0.5).unwrap();
        assert!(trajectory_evolve(&spec, &mixed, &[], 1.0, 0.1).is_err());
    }

    #[test]
    fn short_ensemble_rejected() {
        let spec = ChainSpec::new(3).unwrap().with_noise(&[2], 1.0).unwrap();
        let rho = DensityMatrix::from_excitations(3, &[1]).unwrap();
        let ens = vec![vec![NoiseTrajectory::zeros(3, 0.1)]];
        assert!(matches!(
            trajectory_evolve(&spec, &rho, &ens, 1.0, 0.1),
            Err(Error::EnsembleExhausted(_))
        ));
    }
}
