//! Dense vectorized Liouvillian and its spectrum.

use num_complex::Complex64;

use super::lindblad::LindbladGenerator;
use crate::chain::{build_dephasing_operator, build_hamiltonian, ChainSpec, SectorBasis};
use crate::error::{Error, Result};
use crate::linalg::{eigh, kron, CMatrix};

/// Largest superoperator dimension `d²` handled densely.
pub const LIOUVILLIAN_DIM_CAP: usize = 4096;

/// Superoperator acting on row-major `vec(ρ)`:
/// `−i(H ⊗ 1 − 1 ⊗ Hᵀ) + diag(rates)`.
pub fn liouvillian_matrix(spec: &ChainSpec, basis: &SectorBasis) -> Result<CMatrix> {
    let d = basis.dim();
    if d * d > LIOUVILLIAN_DIM_CAP {
        return Err(Error::DimensionCap { dim: d * d, cap: LIOUVILLIAN_DIM_CAP });
    }
    let generator = LindbladGenerator::new(spec, basis)?;
    let h = generator.hamiltonian();
    let id = CMatrix::identity(d, d);
    let mut l = (kron(h, &id) - kron(&id, &h.transpose())) * Complex64::new(0.0, -1.0);
    for r in 0..d {
        for c in 0..d {
            l[(r * d + c, r * d + c)] += generator.decay_rate(r, c);
        }
    }
    Ok(l)
}

#[derive(Debug, Clone)]
pub struct LiouvillianSpectrum {
    /// Sorted by decreasing real part, then by imaginary part.
    pub eigenvalues: Vec<Complex64>,
}

impl LiouvillianSpectrum {
    /// Eigenvalues with `|λ| ≤ tol`.
    pub fn kernel_dim(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|z| z.norm() <= tol).count()
    }

    /// Positive frequencies `Im λ > tol` of undamped modes (`Re λ ≥ −tol`),
    /// each listed once per `±` pair.
    pub fn undamped_frequencies(&self, tol: f64) -> Vec<f64> {
        let mut freqs: Vec<f64> = self
            .eigenvalues
            .iter()
            .filter(|z| z.re >= -tol && z.im > tol)
            .map(|z| z.im)
            .collect();
        freqs.sort_by(f64::total_cmp);
        freqs
    }

    /// Eigenvalues with `|λ| > tol` (outside the kernel).
    pub fn nonzero(&self, tol: f64) -> impl Iterator<Item = &Complex64> {
        self.eigenvalues.iter().filter(move |z| z.norm() > tol)
    }

    /// Largest real part among eigenvalues outside the kernel.
    pub fn slowest_decay(&self, tol: f64) -> Option<f64> {
        self.nonzero(tol).map(|z| z.re).max_by(f64::total_cmp)
    }
}

/// Sweep budget of the Schur iteration per superoperator row.
const SCHUR_SWEEPS_PER_ROW: usize = 200;

/// Eigenvalues of [`liouvillian_matrix`].
///
/// The superoperator is first rotated into the eigenbasis of `H`, a unitary
/// similarity that makes the coherent part diagonal. Without noise the
/// matrix is then already triangular; with noise the Schur iteration starts
/// close to its fixed point and avoids stalling on the degenerate spectrum.
pub fn liouvillian_spectrum(spec: &ChainSpec, basis: &SectorBasis) -> Result<LiouvillianSpectrum> {
    let d = basis.dim();
    if d * d > LIOUVILLIAN_DIM_CAP {
        return Err(Error::DimensionCap { dim: d * d, cap: LIOUVILLIAN_DIM_CAP });
    }
    let h = build_hamiltonian(spec, basis)?;
    let (energies, u) = eigh(&h.entries);
    let id = CMatrix::identity(d, d);
    let mut l = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            l[(a * d + b, a * d + b)] = Complex64::new(0.0, energies[b] - energies[a]);
        }
    }
    let gamma = Complex64::new(spec.noise_strength(), 0.0);
    for &site in spec.noise_sites() {
        let v = build_dephasing_operator(site, basis)?.entries;
        let rotated = u.adjoint() * v * &u;
        // Row-major vec: `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
        l += (kron(&rotated, &rotated.transpose()) - kron(&id, &id)) * gamma;
    }
    let n = d * d;
    let schur = nalgebra::linalg::Schur::try_new(l, f64::EPSILON, SCHUR_SWEEPS_PER_ROW * n.max(1))
        .ok_or_else(|| Error::EigenSolver(format!("Schur iteration on a {n}x{n} Liouvillian")))?;
    let mut eigenvalues: Vec<Complex64> = schur
        .eigenvalues()
        .expect("complex Schur form is triangular")
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(LiouvillianSpectrum { eigenvalues })
}
