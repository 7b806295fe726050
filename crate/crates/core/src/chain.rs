//! Open XY chain model restricted to fixed-excitation sectors.
//!
//! Sites are 1-based throughout the public API. Inside a [`SectorBasis`] a
//! configuration is a bitmask where bit `j` is set when site `j + 1` holds an
//! excitation (`σ^z = +1`). The XY flip-flop term conserves the number of
//! excitations, and so does `σ^z` dephasing, so every evolution in this crate
//! runs inside the single sector its initial state lives in.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest chain the bitmask basis supports.
pub const MAX_SITES: usize = 30;

/// Physical description of one experiment, in units where `ħ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    coupling: f64,
    base_frequency: f64,
    site_frequencies: Vec<f64>,
    edge_detuning: f64,
    noise_sites: Vec<usize>,
    reduced_noise: f64,
}

impl ChainSpec {
    /// Uniform chain with `J = 1`, `ω = 0`, no detuning and no noise.
    pub fn new(n_sites: usize) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n_sites) {
            return Err(Error::InvalidChain(format!(
                "n_sites must be in 2..={MAX_SITES}, got {n_sites}"
            )));
        }
        Ok(Self {
            n_sites,
            coupling: 1.0,
            base_frequency: 0.0,
            site_frequencies: vec![0.0; n_sites],
            edge_detuning: 0.0,
            noise_sites: Vec::new(),
            reduced_noise: 0.0,
        })
    }

    pub fn with_coupling(mut self, coupling: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::InvalidChain(format!("coupling must be > 0, got {coupling}")));
        }
        self.coupling = coupling;
        Ok(self)
    }

    /// Sets a uniform level spacing, overwriting any per-site frequencies.
    pub fn with_base_frequency(mut self, omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidChain("base frequency must be finite".into()));
        }
        self.base_frequency = omega;
        self.site_frequencies = vec![omega; self.n_sites];
        Ok(self)
    }

    pub fn with_site_frequencies(mut self, freqs: Vec<f64>) -> Result<Self> {
        if freqs.len() != self.n_sites {
            return Err(Error::InvalidChain(format!(
                "expected {} site frequencies, got {}",
                self.n_sites,
                freqs.len()
            )));
        }
        if freqs.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidChain("site frequencies must be finite".into()));
        }
        self.site_frequencies = freqs;
        Ok(self)
    }

    /// Edge detuning `Δ`, applied as `+Δ/2 σ^z_1 − Δ/2 σ^z_N`.
    pub fn with_detuning(mut self, delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidChain("detuning must be finite".into()));
        }
        self.edge_detuning = delta;
        Ok(self)
    }

    /// Dephasing noise on `sites` with reduced strength `γ = Γ/J`.
    pub fn with_noise(mut self, sites: &[usize], reduced_noise: f64) -> Result<Self> {
        if !(reduced_noise.is_finite() && reduced_noise >= 0.0) {
            return Err(Error::InvalidChain(format!(
                "reduced noise must be >= 0, got {reduced_noise}"
            )));
        }
        let mut seen = vec![false; self.n_sites + 1];
        for &u in sites {
            if u == 0 || u > self.n_sites {
                return Err(Error::SiteOutOfRange { site: u, n_sites: self.n_sites });
            }
            if seen[u] {
                return Err(Error::InvalidChain(format!("noise site {u} listed twice")));
            }
            seen[u] = true;
        }
        self.noise_sites = sites.to_vec();
        self.reduced_noise = reduced_noise;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn base_frequency(&self) -> f64 {
        self.base_frequency
    }

    pub fn site_frequencies(&self) -> &[f64] {
        &self.site_frequencies
    }

    pub fn edge_detuning(&self) -> f64 {
        self.edge_detuning
    }

    pub fn noise_sites(&self) -> &[usize] {
        &self.noise_sites
    }

    /// `γ = Γ/J`.
    pub fn reduced_noise(&self) -> f64 {
        self.reduced_noise
    }

    /// `Γ = γ·J`.
    pub fn noise_strength(&self) -> f64 {
        self.reduced_noise * self.coupling
    }

    /// Homogeneous frequencies and zero detuning.
    pub fn is_uniform(&self) -> bool {
        self.edge_detuning == 0.0
            && self.site_frequencies.iter().all(|&w| w == self.site_frequencies[0])
    }
}

/// Sorted configurations of the sector with a fixed excitation count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_excitations: usize,
    configs: Vec<u64>,
}

impl SectorBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn index_of(&self, config: u64) -> Option<usize> {
        self.configs.binary_search(&config).ok()
    }

    /// `σ^z` eigenvalue of 1-based `site` in configuration `config`.
    #[inline]
    pub fn spin(config: u64, site: usize) -> f64 {
        if config >> (site - 1) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            Err(Error::SiteOutOfRange { site, n_sites: self.n_sites })
        } else {
            Ok(())
        }
    }
}

/// Enumerates all `C(N, n)` configurations in ascending bitmask order.
pub fn build_sector_basis(n_sites: usize, n_excitations: usize) -> Result<SectorBasis> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::InvalidChain(format!(
            "n_sites must be in 1..={MAX_SITES}, got {n_sites}"
        )));
    }
    if n_excitations > n_sites {
        return Err(Error::ExcitationOutOfRange { n_sites, n_excitations });
    }
    let mut configs = Vec::new();
    if n_excitations == 0 {
        configs.push(0);
    } else {
        // Gosper's hack walks same-popcount integers in increasing order.
        let limit = 1u64 << n_sites;
        let mut c: u64 = (1u64 << n_excitations) - 1;
        while c < limit {
            configs.push(c);
            let lowest = c & c.wrapping_neg();
            let ripple = c + lowest;
            c = (((ripple ^ c) >> 2) / lowest) | ripple;
        }
    }
    Ok(SectorBasis { n_sites, n_excitations, configs })
}

/// A dense operator on one sector.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub basis: SectorBasis,
    pub entries: DMatrix<Complex64>,
    pub hermitian: bool,
}

impl SectorOperator {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::hermiticity_error(&self.entries)
    }

    /// Real diagonal, for operators known to be diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }
}

/// Sector Hamiltonian `H0 + H1`.
///
/// Off-diagonal entries are `J` between configurations related by moving one
/// excitation across a bond. The diagonal is `Σ_j ω_j s_j + Δ/2 (s_1 − s_N)`
/// including the constant part coming from empty sites.
pub fn build_hamiltonian(spec: &ChainSpec, basis: &SectorBasis) -> Result<SectorOperator> {
    if basis.n_sites != spec.n_sites {
        return Err(Error::BasisMismatch { basis: basis.n_sites, chain: spec.n_sites });
    }
    let n = spec.n_sites;
    let d = basis.dim();
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for (i, &c) in basis.configs.iter().enumerate() {
        let mut diag = 0.0;
        for site in 1..=n {
            diag += spec.site_frequencies[site - 1] * SectorBasis::spin(c, site);
        }
        diag += 0.5 * spec.edge_detuning * (SectorBasis::spin(c, 1) - SectorBasis::spin(c, n));
        h[(i, i)] = Complex64::new(diag, 0.0);

        for bond in 0..n - 1 {
            let pair = 0b11u64 << bond;
            let occ = c & pair;
            if occ != 0 && occ != pair {
                let j = basis
                    .index_of(c ^ pair)
                    .expect("hop stays inside the sector");
                h[(i, j)] = Complex64::new(spec.coupling, 0.0);
            }
        }
    }
    Ok(SectorOperator { basis: basis.clone(), entries: h, hermitian: true })
}

/// Dephasing operator `σ^z_u` on the sector (diagonal, ±1).
pub fn build_dephasing_operator(site: usize, basis: &SectorBasis) -> Result<SectorOperator> {
    basis.check_site(site)?;
    let diag: Vec<Complex64> = basis
        .configs
        .iter()
        .map(|&c| Complex64::new(SectorBasis::spin(c, site), 0.0))
        .collect();
    Ok(SectorOperator {
        basis: basis.clone(),
        entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)),
        hermitian: true,
    })
}

/// Single-excitation eigenmode of the uniform chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    /// 1-based mode index.
    pub index: usize,
    pub profile: Vec<f64>,
    pub eigenvalue: f64,
}

fn closed_form_mode(spec: &ChainSpec, k: usize) -> EigenMode {
    let n = spec.n_sites;
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    let arg = PI * k as f64 / (n as f64 + 1.0);
    let profile = (1..=n).map(|site| norm * (arg * site as f64).sin()).collect();
    // Diagonal constant ω (1 − (N − 1)) plus the tridiagonal band 2J cos(kπ/(N+1)).
    let offset = spec.base_frequency * (2.0 - n as f64);
    EigenMode { index: k, profile, eigenvalue: offset + 2.0 * spec.coupling * arg.cos() }
}

/// Closed-form sine eigenmodes `k = 1..N` of the homogeneous chain.
pub fn eigenmodes(spec: &ChainSpec) -> Result<Vec<EigenMode>> {
    if !spec.is_uniform() {
        return Err(Error::NonUniformChain(format!(
            "detuning {} with site frequencies {:?}",
            spec.edge_detuning, spec.site_frequencies
        )));
    }
    Ok((1..=spec.n_sites).map(|k| closed_form_mode(spec, k)).collect())
}

/// The modes `k = (N+1)/3` and `l = 2(N+1)/3`, when `3 | N+1`.
pub fn dfs_states(spec: &ChainSpec) -> Option<(EigenMode, EigenMode)> {
    let np1 = spec.n_sites + 1;
    if np1 % 3 != 0 {
        return None;
    }
    Some((closed_form_mode(spec, np1 / 3), closed_form_mode(spec, 2 * np1 / 3)))
}

/// Outcome of [`check_sync_conditions`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyncVerdict {
    pub satisfied: bool,
    pub diagnostics: Vec<String>,
    /// `(site, |φ_k(site)|, |φ_l(site)|)` for each noise site, when the pair exists.
    pub dfs_amplitudes: Vec<(usize, f64, f64)>,
}

/// Checks `N = 5 + 3m` and `u = 3n` for every noise site, and that both
/// decoherence-free profiles vanish on the noisy sites.
pub fn check_sync_conditions(spec: &ChainSpec) -> SyncVerdict {
    let n = spec.n_sites;
    let mut diagnostics = Vec::new();
    let mut satisfied = true;

    if n < 5 || n % 3 != 2 {
        satisfied = false;
        diagnostics.push(format!("chain length N = {n} is not of the form 5 + 3m"));
    }
    if spec.noise_sites.is_empty() {
        satisfied = false;
        diagnostics.push("no noise site is configured".to_string());
    }
    for &u in &spec.noise_sites {
        if u % 3 != 0 {
            satisfied = false;
            diagnostics.push(format!("noise site u = {u} is not a multiple of 3"));
        }
    }

    let mut dfs_amplitudes = Vec::new();
    match dfs_states(spec) {
        Some((k, l)) => {
            for &u in &spec.noise_sites {
                let (a, b) = (k.profile[u - 1].abs(), l.profile[u - 1].abs());
                dfs_amplitudes.push((u, a, b));
                if a > 1e-12 || b > 1e-12 {
                    satisfied = false;
                    diagnostics.push(format!(
                        "decoherence-free modes k = {}, l = {} do not vanish at noise site {u} ({a:.3e}, {b:.3e})",
                        k.index, l.index
                    ));
                }
            }
        }
        None => {
            satisfied = false;
            diagnostics.push(format!("N + 1 = {} is not divisible by 3: no decoherence-free pair", n + 1));
        }
    }
    if !spec.is_uniform() {
        diagnostics.push("note: chain is not homogeneous; the closed-form modes are approximate".into());
    }
    if satisfied {
        diagnostics.insert(0, "synchronization conditions satisfied".into());
    }
    SyncVerdict { satisfied, diagnostics, dfs_amplitudes }
}
