//! Density-matrix time evolution inside one excitation sector.
//!
//! Two routes produce an [`EvolutionResult`]: the exact master equation
//! ([`lindblad_evolve`]) and the average over classical noise realizations
//! ([`trajectory_evolve`]). They describe the same dynamics when the pulses
//! are short compared to `1/J`.

mod lindblad;
mod liouvillian;
mod trajectory;

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::chain::{build_sector_basis, SectorBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

pub use lindblad::{default_step, lindblad_evolve, lindblad_evolve_with, LindbladGenerator, LindbladOptions};
pub use liouvillian::{liouvillian_matrix, liouvillian_spectrum, LiouvillianSpectrum, LIOUVILLIAN_DIM_CAP};
pub use trajectory::{trajectory_evolve, trajectory_evolve_with, TrajectoryOptions};

/// Hermitian, unit-trace state on one sector.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    basis: Arc<SectorBasis>,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Product state with excitations on the given 1-based sites, all others empty.
    pub fn from_excitations(n_sites: usize, sites: &[usize]) -> Result<Self> {
        let mut config = 0u64;
        for &s in sites {
            if s == 0 || s > n_sites {
                return Err(Error::SiteOutOfRange { site: s, n_sites });
            }
            if config >> (s - 1) & 1 == 1 {
                return Err(Error::InvalidState(format!("site {s} excited twice")));
            }
            config |= 1 << (s - 1);
        }
        let basis = build_sector_basis(n_sites, sites.len())?;
        let idx = basis.index_of(config).expect("config lies in its own sector");
        let d = basis.dim();
        let mut entries = CMatrix::zeros(d, d);
        entries[(idx, idx)] = Complex64::new(1.0, 0.0);
        Ok(Self { basis: Arc::new(basis), entries })
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ` (norm checked to 1e-10).
    pub fn from_pure(basis: SectorBasis, amplitudes: &[Complex64]) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for a sector of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let psi = DVector::from_column_slice(amplitudes);
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state norm² is {norm}, expected 1")));
        }
        let entries = &psi * psi.adjoint();
        Ok(Self { basis: Arc::new(basis), entries })
    }

    /// Validates Hermiticity (1e-10), unit trace (1e-10) and eigenvalues `>= -1e-8`.
    pub fn from_matrix(basis: SectorBasis, entries: CMatrix) -> Result<Self> {
        let dm = Self::from_matrix_unchecked(Arc::new(basis), entries)?;
        dm.validate(1e-10, 1e-8)?;
        Ok(dm)
    }

    pub(crate) fn from_matrix_unchecked(basis: Arc<SectorBasis>, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != basis.dim() || entries.ncols() != basis.dim() {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{} but the sector has dimension {}",
                entries.nrows(),
                entries.ncols(),
                basis.dim()
            )));
        }
        Ok(Self { basis, entries })
    }

    pub fn validate(&self, tol: f64, psd_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lo = self.min_eigenvalue();
        if lo < -psd_tol {
            return Err(Error::NotPositive(lo));
        }
        Ok(())
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub(crate) fn shared_basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.entries, &self.entries).re
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigvalsh(&self.entries).first().copied().unwrap_or(0.0)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.entries[(index, index)].re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation_in(&self, psi: &[Complex64]) -> Complex64 {
        let v = DVector::from_column_slice(psi);
        (v.adjoint() * &self.entries * &v)[(0, 0)]
    }

    /// `⟨a|ρ|b⟩`.
    pub fn matrix_element(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let va = DVector::from_column_slice(a);
        let vb = DVector::from_column_slice(b);
        (va.adjoint() * &self.entries * &vb)[(0, 0)]
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        linalg::trace_distance(&self.entries, &other.entries)
    }

    /// Convex combination `w·self + (1 − w)·other` on the same sector.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.basis != other.basis {
            return Err(Error::InvalidState("mixing states from different sectors".into()));
        }
        let entries = &self.entries * Complex64::new(w, 0.0) + &other.entries * Complex64::new(1.0 - w, 0.0);
        Ok(Self { basis: self.basis.clone(), entries })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lindblad,
    TrajectoryEnsemble,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// Sample times in units of `1/J`, strictly increasing, starting at 0.
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub method: Method,
    pub trajectories: Option<usize>,
}

impl EvolutionResult {
    /// Index of the snapshot nearest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn state_near(&self, t: f64) -> &DensityMatrix {
        &self.states[self.index_near(t)]
    }
}

/// Sample times `0, dt, 2dt, ...` up to `t_final` (inclusive within 1e-9 relative).
pub(crate) fn sample_times(t_final: f64, dt_sample: f64) -> Result<Vec<f64>> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidState(format!("t_final must be > 0, got {t_final}")));
    }
    if !(dt_sample.is_finite() && dt_sample > 0.0) {
        return Err(Error::InvalidState(format!("dt_sample must be > 0, got {dt_sample}")));
    }
    let n = (t_final / dt_sample * (1.0 + 1e-9)).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * dt_sample).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_is_valid() {
        let rho = DensityMatrix::from_excitations(5, &[1, 5]).unwrap();
        assert_eq!(rho.dim(), 10);
        rho.validate(1e-12, 1e-12).unwrap();
        assert_eq!(rho.purity(), 1.0);
        assert!(DensityMatrix::from_excitations(5, &[6]).is_err());
        assert!(DensityMatrix::from_excitations(5, &[2, 2]).is_err());
    }

    #[test]
    fn unnormalized_pure_state_rejected() {
        let b = build_sector_basis(3, 1).unwrap();
        let amps = vec![Complex64::new(1.0, 0.0); 3];
        assert!(DensityMatrix::from_pure(b, &amps).is_err());
    }

    #[test]
    fn sample_grid() {
        let t = sample_times(1.0, 0.25).unwrap();
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let t = sample_times(3.0 * std::f64::consts::PI, std::f64::consts::PI / 100.0).unwrap();
        assert_eq!(t.len(), 301);
        assert!(sample_times(0.0, 0.1).is_err());
    }
}
