//! Master equation `dρ/dt = −i[H, ρ] + Γ Σ_u (V_u ρ V_u − ρ)` with `V_u = σ^z_u`.
//!
//! Both `H` and the `V_u` conserve the excitation number, and the `V_u` are
//! diagonal in the configuration basis, so the dissipator acts element-wise:
//! `ρ_rc ↦ Γ Σ_u (s_u(r) s_u(c) − 1) ρ_rc`. The Hamiltonian is stored sparse.

use std::sync::Arc;

use num_complex::Complex64;

use super::{sample_times, DensityMatrix, EvolutionResult, Method};
use crate::chain::{build_hamiltonian, ChainSpec, SectorBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// The generator `L` on one sector.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    dim: usize,
    /// Off-diagonal part of `H` (real hops) in CSR form.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Column-major `d×d` element-wise dissipation rates.
    decay: Vec<f64>,
    /// Column-major `Γ-rate − i(H_rr − H_cc)`: diagonal energies and
    /// dissipation both act element-wise.
    elementwise: Vec<Complex64>,
    hamiltonian: CMatrix,
}

impl LindbladGenerator {
    pub fn new(spec: &ChainSpec, basis: &SectorBasis) -> Result<Self> {
        let h = build_hamiltonian(spec, basis)?;
        let d = basis.dim();
        let mut row_ptr = Vec::with_capacity(d + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..d {
            for c in 0..d {
                let v = h.entries[(r, c)];
                debug_assert!(v.im == 0.0, "chain Hamiltonian is real");
                if r != c && v.re != 0.0 {
                    cols.push(c);
                    vals.push(v.re);
                }
            }
            row_ptr.push(cols.len());
        }
        let energies: Vec<f64> = (0..d).map(|r| h.entries[(r, r)].re).collect();

        let gamma = spec.noise_strength();
        let signs: Vec<Vec<f64>> = spec
            .noise_sites()
            .iter()
            .map(|&u| basis.configs().iter().map(|&cfg| SectorBasis::spin(cfg, u)).collect())
            .collect();
        let mut decay = vec![0.0; d * d];
        for c in 0..d {
            for r in 0..d {
                decay[c * d + r] = signs.iter().map(|s| gamma * (s[r] * s[c] - 1.0)).sum();
            }
        }
        let mut elementwise = vec![Complex64::new(0.0, 0.0); d * d];
        for c in 0..d {
            for r in 0..d {
                elementwise[c * d + r] = Complex64::new(decay[c * d + r], energies[c] - energies[r]);
            }
        }
        Ok(Self { dim: d, row_ptr, cols, vals, decay, elementwise, hamiltonian: h.entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    /// Element-wise dissipation rate for `ρ_rc`.
    pub fn decay_rate(&self, r: usize, c: usize) -> f64 {
        self.decay[c * self.dim + r]
    }

    /// `L(ρ)` for an arbitrary (not necessarily Hermitian) operator.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d, d);
        self.apply_slice(rho.as_slice(), out.as_mut_slice());
        out
    }

    /// `L(ρ)` on column-major slices. `(Kρ)` gathers along each column;
    /// `(ρK)` column `c` is a sum of columns of `ρ`, since the hop matrix
    /// `K` is real symmetric. Both stay contiguous.
    fn apply_slice(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        for c in 0..d {
            let col = &rho[c * d..(c + 1) * d];
            let ew = &self.elementwise[c * d..(c + 1) * d];
            let dst = &mut out[c * d..(c + 1) * d];
            for r in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += col[self.cols[idx]] * self.vals[idx];
                }
                // −i·acc
                dst[r] = Complex64::new(acc.im, -acc.re) + col[r] * ew[r];
            }
            for idx in self.row_ptr[c]..self.row_ptr[c + 1] {
                let v = self.vals[idx];
                let src = &rho[self.cols[idx] * d..(self.cols[idx] + 1) * d];
                for (o, x) in dst.iter_mut().zip(src) {
                    // +i·v·x
                    *o += Complex64::new(-x.im * v, x.re * v);
                }
            }
        }
    }

    /// `out = base + s·L(v)` for Hermitian `v`. `P = vK` is built from
    /// contiguous column sums, `Kv = P†`, and only the lower triangle is
    /// combined, in tiles to keep the transposed reads in cache, before
    /// mirroring.
    #[inline(always)]
    fn affine_hermitian(&self, v: &[Complex64], base: &[Complex64], s: f64, scratch: &mut [Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        for c in 0..d {
            let dst = &mut scratch[c * d..(c + 1) * d];
            dst.fill(Complex64::new(0.0, 0.0));
            for idx in self.row_ptr[c]..self.row_ptr[c + 1] {
                let w = self.vals[idx];
                let src = &v[self.cols[idx] * d..(self.cols[idx] + 1) * d];
                for (o, x) in dst.iter_mut().zip(src) {
                    *o += x * w;
                }
            }
        }
        for cb in (0..d).step_by(TILE) {
            for rb in (cb..d).step_by(TILE) {
                for c in cb..(cb + TILE).min(d) {
                    let (lo, hi) = (rb.max(c), (rb + TILE).min(d));
                    let col = c * d;
                    // P_cr for r in lo..hi, one element per column of P.
                    let row = scratch[lo * d + c..].iter().step_by(d);
                    let cells = out[col + lo..col + hi]
                        .iter_mut()
                        .zip(&scratch[col + lo..col + hi])
                        .zip(&v[col + lo..col + hi])
                        .zip(&self.elementwise[col + lo..col + hi])
                        .zip(&base[col + lo..col + hi]);
                    for (((((o, p), x), e), b), pt) in cells.zip(row) {
                        // −i(Kv − vK) with (Kv)_rc = conj(P_cr).
                        let comm = pt.conj() - p;
                        *o = b + (Complex64::new(comm.im, -comm.re) + x * e) * s;
                    }
                }
            }
        }
        for c in 0..d {
            out[c * d + c].im = 0.0;
            for r in c + 1..d {
                out[r * d + c] = out[c * d + r].conj();
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LindbladOptions {
    /// Base RK4 step; `None` uses [`default_step`].
    pub step: Option<f64>,
    /// Repeat with a doubled step and compare snapshots.
    pub check_convergence: bool,
    pub convergence_tol: f64,
    pub max_halvings: u32,
    /// Abort when an eigenvalue drops below `-psd_abort`.
    pub psd_abort: f64,
    pub trace_tol: f64,
    pub hermiticity_tol: f64,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            step: None,
            check_convergence: true,
            convergence_tol: 1e-7,
            max_halvings: 4,
            psd_abort: 1e-6,
            trace_tol: 1e-8,
            hermiticity_tol: 1e-10,
        }
    }
}

/// `min(0.002/J, 0.1/Γ)`.
pub fn default_step(spec: &ChainSpec) -> f64 {
    let by_coupling = 0.002 / spec.coupling();
    let gamma = spec.noise_strength();
    if gamma > 0.0 {
        by_coupling.min(0.1 / gamma)
    } else {
        by_coupling
    }
}

pub fn lindblad_evolve(
    spec: &ChainSpec,
    initial: &DensityMatrix,
    t_final: f64,
    dt_sample: f64,
) -> Result<EvolutionResult> {
    lindblad_evolve_with(spec, initial, t_final, dt_sample, &LindbladOptions::default())
}

pub fn lindblad_evolve_with(
    spec: &ChainSpec,
    initial: &DensityMatrix,
    t_final: f64,
    dt_sample: f64,
    opts: &LindbladOptions,
) -> Result<EvolutionResult> {
    if initial.basis().n_sites() != spec.n_sites() {
        return Err(Error::BasisMismatch { basis: initial.basis().n_sites(), chain: spec.n_sites() });
    }
    initial.validate(1e-10, 1e-8)?;
    let times = sample_times(t_final, dt_sample)?;
    let generator = LindbladGenerator::new(spec, initial.basis())?;
    let base = opts.step.unwrap_or_else(|| default_step(spec));
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::InvalidState(format!("integrator step must be > 0, got {base}")));
    }
    let mut steps = (dt_sample / base - 1e-9).ceil().max(1.0) as usize;
    // Even, so the doubled-step reference lands on the same sample grid.
    steps += steps % 2;

    let mut snapshots = integrate(&generator, initial.entries(), times.len(), dt_sample, steps);
    if opts.check_convergence {
        let mut reference =
            integrate(&generator, initial.entries(), times.len(), dt_sample, steps / 2);
        let mut halvings = 0;
        loop {
            let change = max_snapshot_change(&snapshots, &reference);
            if change <= opts.convergence_tol {
                break;
            }
            if halvings == opts.max_halvings {
                return Err(Error::NonConvergence {
                    change,
                    tolerance: opts.convergence_tol,
                    halvings,
                });
            }
            halvings += 1;
            steps *= 2;
            reference = snapshots;
            snapshots = integrate(&generator, initial.entries(), times.len(), dt_sample, steps);
        }
    }

    let basis = initial.shared_basis().clone();
    let mut states = Vec::with_capacity(times.len());
    for (t, m) in times.iter().zip(snapshots) {
        check_snapshot(*t, &m, opts)?;
        states.push(DensityMatrix::from_matrix_unchecked(Arc::clone(&basis), m)?);
    }
    Ok(EvolutionResult { times, states, method: Method::Lindblad, trajectories: None })
}

fn check_snapshot(t: f64, m: &CMatrix, opts: &LindbladOptions) -> Result<()> {
    let tr = linalg::trace(m);
    if (tr.re - 1.0).abs() > opts.trace_tol || tr.im.abs() > opts.trace_tol {
        return Err(Error::InvariantViolation { time: t, what: format!("trace drifted to {tr}") });
    }
    let herm = linalg::hermiticity_error(m);
    if herm > opts.hermiticity_tol {
        return Err(Error::InvariantViolation { time: t, what: format!("Hermiticity error {herm:e}") });
    }
    if !linalg::is_psd_within(m, opts.psd_abort) {
        let lo = linalg::eigvalsh(m)[0];
        return Err(Error::InvariantViolation {
            time: t,
            what: format!("eigenvalue {lo:e} below -{:e}", opts.psd_abort),
        });
    }
    Ok(())
}

fn max_snapshot_change(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| linalg::max_abs(&(x - y)))
        .fold(0.0, f64::max)
}

/// Tile edge of the transposed reads in [`LindbladGenerator::affine_hermitian`].
const TILE: usize = 16;

/// Fixed-step RK4 with `steps` steps per sample interval.
///
/// For the linear, time-independent `L` one RK4 step is exactly
/// `ρ + hLρ + (hL)²ρ/2 + (hL)³ρ/6 + (hL)⁴ρ/24`; it is evaluated in Horner
/// form, still four applications of `L`, without the stage buffers.
fn integrate(
    generator: &LindbladGenerator,
    initial: &CMatrix,
    n_samples: usize,
    dt_sample: f64,
    steps: usize,
) -> Vec<CMatrix> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were detected at runtime.
        return unsafe { integrate_avx2(generator, initial, n_samples, dt_sample, steps) };
    }
    integrate_generic(generator, initial, n_samples, dt_sample, steps)
}

/// [`integrate_generic`] compiled for AVX2. Rust never contracts `a·b + c`
/// into a fused multiply-add, so results match the generic path bit for bit.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn integrate_avx2(
    generator: &LindbladGenerator,
    initial: &CMatrix,
    n_samples: usize,
    dt_sample: f64,
    steps: usize,
) -> Vec<CMatrix> {
    integrate_generic(generator, initial, n_samples, dt_sample, steps)
}

#[inline(always)]
fn integrate_generic(
    generator: &LindbladGenerator,
    initial: &CMatrix,
    n_samples: usize,
    dt_sample: f64,
    steps: usize,
) -> Vec<CMatrix> {
    let d = generator.dim;
    let n = d * d;
    let h = dt_sample / steps as f64;
    let zero = Complex64::new(0.0, 0.0);
    let mut rho: Vec<Complex64> = initial.as_slice().to_vec();
    let (mut a, mut b, mut scratch) = (vec![zero; n], vec![zero; n], vec![zero; n]);

    let mut out = Vec::with_capacity(n_samples);
    out.push(initial.clone());
    for _ in 1..n_samples {
        for _ in 0..steps {
            generator.affine_hermitian(&rho, &rho, h / 4.0, &mut scratch, &mut a);
            generator.affine_hermitian(&a, &rho, h / 3.0, &mut scratch, &mut b);
            generator.affine_hermitian(&b, &rho, h / 2.0, &mut scratch, &mut a);
            generator.affine_hermitian(&a, &rho, h, &mut scratch, &mut b);
            std::mem::swap(&mut rho, &mut b);
        }
        out.push(CMatrix::from_column_slice(d, d, &rho));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_sector_basis;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    #[test]
    fn matches_dense_commutator() {
        let spec = ChainSpec::new(5).unwrap().with_detuning(0.3).unwrap().with_noise(&[2, 3], 0.7).unwrap();
        let basis = build_sector_basis(5, 2).unwrap();
        let g = LindbladGenerator::new(&spec, &basis).unwrap();
        let d = basis.dim();
        let rho = CMatrix::from_fn(d, d, |r, c| Complex64::new((r * 7 + c * 3) as f64 % 5.0, r as f64 - c as f64 * 0.5));
        let h = g.hamiltonian();
        let mut dense = (h * &rho - &rho * h) * -I;
        for c in 0..d {
            for r in 0..d {
                dense[(r, c)] += rho[(r, c)] * g.decay_rate(r, c);
            }
        }
        assert!(linalg::max_abs(&(g.apply(&rho) - dense)) < 1e-12);
    }

    #[test]
    fn hermitian_path_agrees() {
        let spec = ChainSpec::new(6).unwrap().with_detuning(-0.4).unwrap().with_noise(&[3], 1.1).unwrap();
        let basis = build_sector_basis(6, 3).unwrap();
        let g = LindbladGenerator::new(&spec, &basis).unwrap();
        let d = basis.dim();
        let a = CMatrix::from_fn(d, d, |r, c| Complex64::new((r * 5 + c * 3) as f64 % 7.0, r as f64 - 2.0 * c as f64));
        let rho = linalg::hermitian_part(&a);
        let mut fast = vec![Complex64::new(0.0, 0.0); d * d];
        let mut scratch = fast.clone();
        let base = fast.clone();
        g.affine_hermitian(rho.as_slice(), &base, 1.0, &mut scratch, &mut fast);
        let fast = CMatrix::from_column_slice(d, d, &fast);
        assert!(linalg::max_abs(&(g.apply(&rho) - fast)) < 1e-12);
    }

    #[test]
    fn horner_step_is_classic_rk4() {
        let spec = ChainSpec::new(6).unwrap().with_detuning(0.3).unwrap().with_noise(&[3], 0.8).unwrap();
        let basis = build_sector_basis(6, 2).unwrap();
        let g = LindbladGenerator::new(&spec, &basis).unwrap();
        let rho0 = DensityMatrix::from_excitations(6, &[1, 4]).unwrap();
        let (h, steps) = (0.05, 3);
        let mut rho = rho0.entries().clone();
        for _ in 0..steps {
            let k1 = g.apply(&rho);
            let k2 = g.apply(&(&rho + &k1 * Complex64::new(0.5 * h, 0.0)));
            let k3 = g.apply(&(&rho + &k2 * Complex64::new(0.5 * h, 0.0)));
            let k4 = g.apply(&(&rho + &k3 * Complex64::new(h, 0.0)));
            rho += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        }
        let fast = integrate(&g, rho0.entries(), 2, h * steps as f64, steps);
        assert!(linalg::max_abs(&(&fast[1] - rho)) < 1e-14);
        let generic = integrate_generic(&g, rho0.entries(), 2, h * steps as f64, steps);
        assert_eq!(fast[1], generic[1]);
    }

    #[test]
    fn default_step_rule() {
        let spec = ChainSpec::new(5).unwrap();
        assert_eq!(default_step(&spec), 0.002);
        let spec = spec.with_noise(&[3], 100.0).unwrap();
        assert!((default_step(&spec) - 0.001).abs() < 1e-15);
    }

    #[test]
    fn wrong_sector_rejected() {
        let spec = ChainSpec::new(4).unwrap();
        let rho = DensityMatrix::from_excitations(5, &[1]).unwrap();
        assert!(matches!(lindblad_evolve(&spec, &rho, 1.0, 0.1), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn nonconvergence_reported() {
        let spec = ChainSpec::new(5).unwrap().with_noise(&[3], 1.3).unwrap();
        let rho = DensityMatrix::from_excitations(5, &[1]).unwrap();
        let opts = LindbladOptions { step: Some(0.5), max_halvings: 0, ..Default::default() };
        assert!(matches!(
            lindblad_evolve_with(&spec, &rho, 2.0, 1.0, &opts),
            Err(Error::NonConvergence { .. })
        ));
    }
}
