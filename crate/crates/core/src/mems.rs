//! Closed-form edge state of the decoherence-free chain.
//!
//! When `3 | (N + 1)` the two DFS modes of the single-excitation sector
//! leave the edge pair `(1, N)` in a mixture of `|Ψ⁻⟩` and `|00⟩`, the
//! maximally entangled mixed state family at that purity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analysis::TwoQubitState;
use crate::chain::build_sector_basis;
use crate::error::{Error, Result};
use crate::evolve::DensityMatrix;
use crate::linalg::CMatrix;

/// Weights of `|Ψ⁻⟩⟨Ψ⁻|`, `|00⟩⟨00|`, `|Ψ⁺⟩⟨Ψ⁺|`, `|11⟩⟨11|`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BellMixtureParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl BellMixtureParams {
    pub fn new(p1: f64, p2: f64, p3: f64, p4: f64) -> Result<Self> {
        let p = [p1, p2, p3, p4];
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidState(format!("mixture weights must be >= 0, got {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("mixture weights sum to {sum}, expected 1")));
        }
        Ok(Self { p1, p2, p3, p4 })
    }

    /// The mixture as a matrix in the order `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn assemble(&self) -> TwoQubitState {
        let half = |v: f64| Complex64::new(v / 2.0, 0.0);
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::new(self.p2, 0.0);
        m[(3, 3)] = Complex64::new(self.p4, 0.0);
        m[(1, 1)] = half(self.p1 + self.p3);
        m[(2, 2)] = half(self.p1 + self.p3);
        m[(1, 2)] = half(self.p3 - self.p1);
        m[(2, 1)] = half(self.p3 - self.p1);
        TwoQubitState::unchecked(m).expect("4x4 by construction")
    }
}

/// Analytic edge state for a chain of `N` sites with `3 | (N + 1)`.
#[derive(Debug, Clone)]
pub struct MemsReference {
    pub n_sites: usize,
    pub matrix: TwoQubitState,
    pub params: BellMixtureParams,
    pub concurrence: f64,
    pub purity: f64,
    /// `|⟨v^DFS|1⟩₁⟩|²`, the same for both DFS vectors.
    pub initial_overlap: f64,
}

fn check_length(n: usize) -> Result<()> {
    if n < 2 || (n + 1) % 3 != 0 {
        return Err(Error::NoDecoherenceFreePair(n));
    }
    Ok(())
}

/// Amplitudes `√(2/(N+1))·sin(nπ/3)` and `√(2/(N+1))·sin(2nπ/3)` over the
/// single-excitation configurations, site `n` at index `n − 1`.
pub fn dfs_vectors_fullspace(n_sites: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_length(n_sites)?;
    let norm = (2.0 / (n_sites + 1) as f64).sqrt();
    let mode = |q: f64| -> Vec<f64> {
        (1..=n_sites)
            .map(|n| {
                // Exact zeros where `n q / 3` is an integer.
                if (n as f64 * q) as usize % 3 == 0 {
                    0.0
                } else {
                    norm * (n as f64 * q * PI / 3.0).sin()
                }
            })
            .collect()
    };
    Ok((mode(1.0), mode(2.0)))
}

/// `|v⟩⟨v|` on the single-excitation sector for real amplitudes `v`.
pub fn dfs_projector(n_sites: usize, amplitudes: &[f64]) -> Result<DensityMatrix> {
    let basis = build_sector_basis(n_sites, 1)?;
    let amps: Vec<Complex64> = amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    DensityMatrix::from_pure(basis, &amps)
}

pub fn mems_reference(n_sites: usize) -> Result<MemsReference> {
    check_length(n_sites)?;
    let n = n_sites as f64;
    let p1 = 3.0 / (n + 1.0);
    let params = BellMixtureParams { p1, p2: 1.0 - p1, p3: 0.0, p4: 0.0 };
    let w = 3.0 / (2.0 * n + 2.0);
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = Complex64::new(w * (2.0 * n - 4.0) / 3.0, 0.0);
    m[(1, 1)] = Complex64::new(w, 0.0);
    m[(2, 2)] = Complex64::new(w, 0.0);
    m[(1, 2)] = Complex64::new(-w, 0.0);
    m[(2, 1)] = Complex64::new(-w, 0.0);
    Ok(MemsReference {
        n_sites,
        matrix: TwoQubitState::unchecked(m)?,
        params,
        concurrence: p1,
        purity: (9.0 + (n - 2.0).powi(2)) / (n + 1.0).powi(2),
        initial_overlap: w,
    })
}

/// `max(0, p1 − p3 − 2√(p2 p4))`. Assumes `p1 ≥ p3`; the reverse ordering
/// clamps at zero.
pub fn mixture_concurrence(params: &BellMixtureParams) -> f64 {
    (params.p1 - params.p3 - 2.0 * (params.p2 * params.p4).sqrt()).max(0.0)
}

/// `|⟨v₁|ψ⟩|²` and `|⟨v₂|ψ⟩|²` for the product state exciting `sites`.
/// DFS vectors live in the single-excitation sector, so any other
/// excitation count gives zero.
pub fn overlap_with_initial(n_sites: usize, sites: &[usize]) -> Result<(f64, f64)> {
    let (v1, v2) = dfs_vectors_fullspace(n_sites)?;
    for &s in sites {
        if s == 0 || s > n_sites {
            return Err(Error::SiteOutOfRange { site: s, n_sites });
        }
    }
    match sites {
        [s] => Ok((v1[s - 1].powi(2), v2[s - 1].powi(2))),
        _ => Ok((0.0, 0.0)),
    }
}

/// The main-text five-qubit matrix, entries `1/3` and `−1/6`, with its
/// `1/3` weight placed on `|00⟩`.
pub fn main_text_reference() -> TwoQubitState {
    let sixth = 1.0 / 6.0;
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = Complex64::new(1.0 / 3.0, 0.0);
    m[(1, 1)] = Complex64::new(1.0 / 3.0, 0.0);
    m[(2, 2)] = Complex64::new(1.0 / 3.0, 0.0);
    m[(1, 2)] = Complex64::new(-sixth, 0.0);
    m[(2, 1)] = Complex64::new(-sixth, 0.0);
    TwoQubitState::unchecked(m).expect("4x4 by construction")
}

/// The reference table as aligned text.
pub fn render_table(r: &MemsReference) -> String {
    let m = r.matrix.matrix();
    let mut s = format!("N = {}\n", r.n_sites);
    s.push_str("edge state (|00>, |01>, |10>, |11>):\n");
    for row in 0..4 {
        let cells: Vec<String> = (0..4).map(|c| format!("{:>12.9}", m[(row, c)].re)).collect();
        s.push_str(&format!("  {}\n", cells.join(" ")));
    }
    s.push_str(&format!("p1 (singlet)      {:>12.9}\n", r.params.p1));
    s.push_str(&format!("p2 (|00>)         {:>12.9}\n", r.params.p2));
    s.push_str(&format!("concurrence       {:>12.9}\n", r.concurrence));
    s.push_str(&format!("purity            {:>12.9}\n", r.purity));
    s.push_str(&format!("initial overlap   {:>12.9}\n", r.initial_overlap));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{concurrence, edge_reduced_state, purity};

    #[test]
    fn five_site_values() {
        let r = mems_reference(5).unwrap();
        assert!((r.concurrence - 0.5).abs() < 1e-15);
        assert!((r.purity - 0.5).abs() < 1e-15);
        assert!((r.initial_overlap - 0.25).abs() < 1e-15);
        assert!((concurrence(&r.matrix).unwrap() - 0.5).abs() < 1e-10);
        assert!((purity(&r.matrix) - 0.5).abs() < 1e-12);
        assert!(mems_reference(6).is_err());
    }

    #[test]
    fn params_reassemble_matrix() {
        for n in (2..=50).filter(|n| (n + 1) % 3 == 0) {
            let r = mems_reference(n).unwrap();
            let diff = r.params.assemble().matrix() - r.matrix.matrix();
            assert!(diff.iter().all(|z| z.norm() < 1e-12), "N={n}");
        }
    }

    #[test]
    fn second_dfs_vector_reproduces_reference() {
        for n in [5, 8, 11, 14] {
            let (_, v2) = dfs_vectors_fullspace(n).unwrap();
            let rho = dfs_projector(n, &v2).unwrap();
            let edge = edge_reduced_state(&rho, (1, n)).unwrap();
            let diff = edge.matrix() - mems_reference(n).unwrap().matrix.matrix();
            assert!(diff.iter().all(|z| z.norm() < 1e-12), "N={n}");
        }
    }

    #[test]
    fn mixture_formula() {
        let p = BellMixtureParams::new(0.5, 0.5, 0.0, 0.0).unwrap();
        assert!((mixture_concurrence(&p) - 0.5).abs() < 1e-15);
        assert!((concurrence(&p.assemble()).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(mixture_concurrence(&BellMixtureParams::new(0.0, 1.0, 0.0, 0.0).unwrap()), 0.0);
        assert!(BellMixtureParams::new(0.5, 0.6, 0.0, 0.0).is_err());
    }

    #[test]
    fn overlaps() {
        assert_eq!(overlap_with_initial(5, &[3]).unwrap(), (0.0, 0.0));
        let (a, b) = overlap_with_initial(8, &[1]).unwrap();
        assert!((a - 1.0 / 6.0).abs() < 1e-12 && (b - 1.0 / 6.0).abs() < 1e-12);
    }
}
