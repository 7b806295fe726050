//! Diagnostics on evolved states: local polarizations, Pearson correlation,
//! the two-qubit edge state and its entanglement, and frequency fits.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

use crate::chain::SectorBasis;
use crate::error::{Error, Result};
use crate::evolve::{DensityMatrix, EvolutionResult};
use crate::format::sig9;
use crate::linalg::{self, CMatrix};

/// Width of one period `π/J` of the `2J` oscillation, the natural trailing window.
pub const SYNC_PERIOD_WIDTH: f64 = PI;

/// `⟨σ^z_j⟩(t)` for every site.
#[derive(Debug, Clone)]
pub struct MagnetizationSeries {
    pub times: Vec<f64>,
    /// `values[j - 1][i]` is site `j` at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl MagnetizationSeries {
    pub fn n_sites(&self) -> usize {
        self.values.len()
    }

    pub fn site(&self, site: usize) -> &[f64] {
        &self.values[site - 1]
    }

    pub fn total(&self, index: usize) -> f64 {
        self.values.iter().map(|s| s[index]).sum()
    }

    /// Sample indices inside `window` ending at `end`.
    pub fn window_indices(&self, end: f64, window: Window) -> std::ops::Range<usize> {
        window_range(&self.times, end, window)
    }

    /// Pearson coefficient of sites `i`, `j` over `window` ending at `end`.
    pub fn pearson(&self, i: usize, j: usize, end: f64, window: Window) -> Result<f64> {
        for s in [i, j] {
            if s == 0 || s > self.n_sites() {
                return Err(Error::SiteOutOfRange { site: s, n_sites: self.n_sites() });
            }
        }
        let r = self.window_indices(end, window);
        pearson(&self.site(i)[r.clone()], &self.site(j)[r])
    }
}

pub fn magnetizations(result: &EvolutionResult) -> MagnetizationSeries {
    let basis = result.states[0].basis();
    let n = basis.n_sites();
    let mut values = vec![Vec::with_capacity(result.times.len()); n];
    for state in &result.states {
        for (site, series) in values.iter_mut().enumerate() {
            series.push(site_polarization(state, site + 1));
        }
    }
    MagnetizationSeries { times: result.times.clone(), values }
}

/// `Tr(ρ σ^z_site)`.
pub fn site_polarization(state: &DensityMatrix, site: usize) -> f64 {
    state
        .basis()
        .configs()
        .iter()
        .enumerate()
        .map(|(i, &c)| SectorBasis::spin(c, site) * state.population(i))
        .sum()
}

/// Time window over which a correlation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// `[start, end]`.
    Cumulative { start: f64 },
    /// `[end − width, end]`, clipped at the first sample.
    Trailing { width: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Cumulative { start: 0.0 }
    }
}

fn window_range(times: &[f64], end: f64, window: Window) -> std::ops::Range<usize> {
    let start = match window {
        Window::Cumulative { start } => start,
        Window::Trailing { width } => end - width,
    };
    let eps = 1e-9 * end.abs().max(1.0);
    let lo = times.partition_point(|&t| t < start - eps);
    let hi = times.partition_point(|&t| t <= end + eps);
    lo..hi.max(lo)
}

/// `cov(x, y) / √(var x · var y)`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Degenerate(format!("series lengths differ ({} vs {})", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Degenerate(format!("window holds {} samples, need >= 3", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let scale_x = x.iter().map(|v| v * v).sum::<f64>();
    let scale_y = y.iter().map(|v| v * v).sum::<f64>();
    if sxx <= 1e-24 * scale_x || sxx == 0.0 || syy <= 1e-24 * scale_y || syy == 0.0 {
        return Err(Error::Degenerate("zero variance on the window".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-qubit state in the order `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState(CMatrix);

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity within 1e-8.
    pub fn new(m: CMatrix) -> Result<Self> {
        let s = Self::unchecked(m)?;
        let herm = linalg::hermiticity_error(&s.0);
        if herm > 1e-8 {
            return Err(Error::InvalidState(format!("two-qubit state not Hermitian ({herm:e})")));
        }
        let tr = linalg::trace(&s.0).re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("two-qubit trace {tr}")));
        }
        let lo = linalg::eigvalsh(&s.0)[0];
        if lo < -1e-8 {
            return Err(Error::NotPositive(lo));
        }
        Ok(s)
    }

    pub(crate) fn unchecked(m: CMatrix) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(Error::InvalidState(format!("two-qubit state must be 4x4, got {:?}", m.shape())));
        }
        Ok(Self(m))
    }

    pub fn from_real(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(CMatrix::from_fn(4, 4, |r, c| Complex64::new(rows[r][c], 0.0)))
    }

    pub fn maximally_mixed() -> Self {
        Self(CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0))
    }

    /// `|ψ⟩⟨ψ|` from four amplitudes (normalized here).
    pub fn pure(amplitudes: [Complex64; 4]) -> Self {
        let v = DVector::from_column_slice(&amplitudes);
        let v = &v / Complex64::new(v.norm(), 0.0);
        Self(&v * v.adjoint())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.0).re
    }

    /// `(U_a ⊗ U_b) ρ (U_a ⊗ U_b)†`.
    pub fn conjugate_local(&self, ua: &CMatrix, ub: &CMatrix) -> Self {
        let u = linalg::kron(ua, ub);
        Self(&u * &self.0 * u.adjoint())
    }
}

/// Reduced state of `sites = (a, b)`, with `a` as the left tensor factor.
pub fn edge_reduced_state(state: &DensityMatrix, sites: (usize, usize)) -> Result<TwoQubitState> {
    let basis = state.basis();
    let n = basis.n_sites();
    let (a, b) = sites;
    for s in [a, b] {
        if s == 0 || s > n {
            return Err(Error::SiteOutOfRange { site: s, n_sites: n });
        }
    }
    if a == b {
        return Err(Error::InvalidState(format!("edge sites must differ (got {a} twice)")));
    }
    let mask = (1u64 << (a - 1)) | (1u64 << (b - 1));
    let mut groups: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &c) in basis.configs().iter().enumerate() {
        let local = 2 * ((c >> (a - 1)) & 1) as usize + ((c >> (b - 1)) & 1) as usize;
        groups.entry(c & !mask).or_default().push((i, local));
    }
    let rho = state.entries();
    let mut out = CMatrix::zeros(4, 4);
    for members in groups.values() {
        for &(i, x) in members {
            for &(j, y) in members {
                out[(x, y)] += rho[(i, j)];
            }
        }
    }
    TwoQubitState::unchecked(out)
}

fn spin_flip() -> CMatrix {
    // σ^y ⊗ σ^y is real: anti-diagonal (-1, 1, 1, -1).
    let mut yy = CMatrix::zeros(4, 4);
    yy[(0, 3)] = Complex64::new(-1.0, 0.0);
    yy[(1, 2)] = Complex64::new(1.0, 0.0);
    yy[(2, 1)] = Complex64::new(1.0, 0.0);
    yy[(3, 0)] = Complex64::new(-1.0, 0.0);
    yy
}

/// Wootters concurrence `max(0, √κ1 − √κ2 − √κ3 − √κ4)`, with `κ` the
/// eigenvalues of `ρ ρ̃` obtained from the Hermitian `√ρ ρ̃ √ρ`.
pub fn concurrence(state: &TwoQubitState) -> Result<f64> {
    let rho = state.matrix();
    let sqrt_rho = linalg::sqrtm_psd(rho, 1e-8).map_err(Error::NotPositive)?;
    let yy = spin_flip();
    let flipped = &yy * rho.conjugate() * &yy;
    let r = &sqrt_rho * flipped * &sqrt_rho;
    let mut kappa = linalg::eigvalsh(&r);
    // Eigenvalues within round-off of zero would otherwise enter as their
    // square roots, turning 1e-17 noise into 3e-9 concurrence error.
    let floor = 64.0 * f64::EPSILON * kappa.iter().fold(1.0f64, |m, k| m.max(k.abs()));
    for k in kappa.iter_mut() {
        if *k < -1e-10 {
            return Err(Error::NotPositive(*k));
        }
        if *k < floor {
            *k = 0.0;
        }
    }
    kappa.sort_by(|a, b| b.total_cmp(a));
    let s: Vec<f64> = kappa.iter().map(|k| k.sqrt()).collect();
    Ok((s[0] - s[1] - s[2] - s[3]).max(0.0))
}

/// Uhlmann fidelity `Tr √(√A B √A)`.
pub fn fidelity(a: &TwoQubitState, b: &TwoQubitState) -> Result<f64> {
    matrix_fidelity(a.matrix(), b.matrix())
}

pub(crate) fn matrix_fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if linalg::eigvalsh(b)[0] < -1e-8 {
        return Err(Error::NotPositive(linalg::eigvalsh(b)[0]));
    }
    let sa = linalg::sqrtm_psd(a, 1e-8).map_err(Error::NotPositive)?;
    let inner = &sa * b * &sa;
    let f: f64 = linalg::eigvalsh(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `Tr ρ²`.
pub fn purity(state: &TwoQubitState) -> f64 {
    linalg::trace_of_product(state.matrix(), state.matrix()).re
}

/// Least-squares fit of `c1 cos(Ω t + φ) + c2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CosineFit {
    /// `c1 ≥ 0`.
    pub amplitude: f64,
    pub offset: f64,
    pub angular_frequency: f64,
    pub phase: f64,
    pub rms_residual: f64,
    /// `c1`, `c2` of `c1 cos(Ω t) + c2` at the fitted `Ω`.
    pub zero_phase_amplitude: f64,
    pub zero_phase_offset: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub omega_min: f64,
    pub omega_max: f64,
    pub scan_points: usize,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { omega_min: 1.0, omega_max: 3.0, scan_points: 401, max_iterations: 100 }
    }
}

/// Fits one series on the samples with `start <= t <= end`.
pub fn fit_cosine(times: &[f64], values: &[f64], start: f64, end: f64) -> Result<CosineFit> {
    fit_cosine_with(times, values, start, end, &FitOptions::default())
}

pub fn fit_cosine_with(
    times: &[f64],
    values: &[f64],
    start: f64,
    end: f64,
    opts: &FitOptions,
) -> Result<CosineFit> {
    let r = window_range(times, end, Window::Cumulative { start });
    let (t, y) = (&times[r.clone()], &values[r]);
    if t.len() < 10 {
        return Err(Error::SingularFit(format!("{} samples in the window, need >= 10", t.len())));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = y.iter().map(|v| v * v).sum::<f64>() / n;
    if var <= 1e-24 * scale.max(1e-300) {
        return Err(Error::SingularFit("flat series".into()));
    }

    // Coarse scan over Ω with the linear parameters solved exactly.
    let mut best: Option<(f64, f64, Vector3<f64>)> = None;
    let points = opts.scan_points.max(2);
    for i in 0..points {
        let omega = opts.omega_min + (opts.omega_max - opts.omega_min) * i as f64 / (points - 1) as f64;
        if let Ok((coef, rss)) = linear_fit(t, y, omega) {
            if best.as_ref().map_or(true, |b| rss < b.0) {
                best = Some((rss, omega, coef));
            }
        }
    }
    let (mut rss, mut omega, coef) = best.ok_or_else(|| Error::SingularFit("normal equations singular".into()))?;
    let (mut a, mut b, mut c) = (coef[0], coef[1], coef[2]);

    // Gauss-Newton on (a, b, c, Ω) with step halving.
    for _ in 0..opts.max_iterations {
        let mut jtj = DMatrix::<f64>::zeros(4, 4);
        let mut jtr = DVector::<f64>::zeros(4);
        for (&ti, &yi) in t.iter().zip(y) {
            let (s, co) = (omega * ti).sin_cos();
            let resid = yi - (a * co + b * s + c);
            let g = [co, s, 1.0, (-a * s + b * co) * ti];
            for p in 0..4 {
                jtr[p] += g[p] * resid;
                for q in 0..4 {
                    jtj[(p, q)] += g[p] * g[q];
                }
            }
        }
        let delta = jtj
            .lu()
            .solve(&jtr)
            .ok_or_else(|| Error::SingularFit("Gauss-Newton normal equations singular".into()))?;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let (na, nb, nc, nw) =
                (a + step * delta[0], b + step * delta[1], c + step * delta[2], omega + step * delta[3]);
            let nrss = rss_of(t, y, na, nb, nc, nw);
            if nrss <= rss {
                improved = nrss < rss;
                a = na;
                b = nb;
                c = nc;
                omega = nw;
                rss = nrss;
                break;
            }
            step *= 0.5;
        }
        if !improved || delta.norm() <= 1e-15 * (1.0 + omega.abs()) {
            break;
        }
    }

    let (za, zc) = zero_phase_fit(t, y, omega)?;
    Ok(CosineFit {
        amplitude: a.hypot(b),
        offset: c,
        angular_frequency: omega,
        phase: (-b).atan2(a),
        rms_residual: (rss / n).sqrt(),
        zero_phase_amplitude: za,
        zero_phase_offset: zc,
    })
}

fn rss_of(t: &[f64], y: &[f64], a: f64, b: f64, c: f64, omega: f64) -> f64 {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let (s, co) = (omega * ti).sin_cos();
            (yi - (a * co + b * s + c)).powi(2)
        })
        .sum()
}

fn linear_fit(t: &[f64], y: &[f64], omega: f64) -> Result<(Vector3<f64>, f64)> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, co) = (omega * ti).sin_cos();
        let g = Vector3::new(co, s, 1.0);
        ata += g * g.transpose();
        aty += g * yi;
    }
    let coef = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::SingularFit("normal equations singular".into()))?;
    Ok((coef, rss_of(t, y, coef[0], coef[1], coef[2], omega)))
}

fn zero_phase_fit(t: &[f64], y: &[f64], omega: f64) -> Result<(f64, f64)> {
    let (mut scc, mut sc, mut s1, mut scy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let co = (omega * ti).cos();
        scc += co * co;
        sc += co;
        s1 += 1.0;
        scy += co * yi;
        sy += yi;
    }
    let det = scc * s1 - sc * sc;
    if det.abs() <= 1e-12 * scc * s1 {
        return Err(Error::SingularFit("zero-phase normal equations singular".into()));
    }
    Ok(((scy * s1 - sc * sy) / det, (scc * sy - sc * scy) / det))
}

/// One row of the per-run metric table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub jt: f64,
    pub magnetizations: Vec<f64>,
    pub pearson: [f64; 2],
    pub concurrence: f64,
    pub fidelity_mems: f64,
    pub purity: f64,
}

/// Per-sample diagnostics. `pairs` fill the `c15` and `c24` columns;
/// Pearson cells that are undefined on their window are NaN, as is the
/// fidelity when no reference is given. The edge state uses sites `1, N`.
pub fn metric_table(
    result: &EvolutionResult,
    pairs: [(usize, usize); 2],
    window: Window,
    reference: Option<&TwoQubitState>,
) -> Result<Vec<MetricRow>> {
    let mags = magnetizations(result);
    let n = mags.n_sites();
    let mut rows = Vec::with_capacity(result.times.len());
    for (i, (&t, state)) in result.times.iter().zip(&result.states).enumerate() {
        let pearson = pairs.map(|(a, b)| match mags.pearson(a, b, t, window) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        });
        let edge = edge_reduced_state(state, (1, n))?;
        let fidelity_mems = match reference {
            Some(m) => matrix_fidelity(m.matrix(), edge.matrix())?,
            None => f64::NAN,
        };
        rows.push(MetricRow {
            jt: t,
            magnetizations: mags.values.iter().map(|s| s[i]).collect(),
            pearson,
            concurrence: concurrence(&edge)?,
            fidelity_mems,
            purity: purity(&edge),
        });
    }
    Ok(rows)
}

pub fn metric_header(n_sites: usize) -> String {
    let mut h = String::from("jt");
    for j in 1..=n_sites {
        h.push_str(&format!(",sz_{j}"));
    }
    h.push_str(",c15,c24,concurrence,fidelity_mems,purity");
    h
}

pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricRow]) -> std::io::Result<()> {
    let n = rows.first().map_or(0, |r| r.magnetizations.len());
    writeln!(out, "{}", metric_header(n))?;
    for r in rows {
        let mut line = sig9(r.jt);
        for &v in r.magnetizations.iter().chain(&r.pearson) {
            line.push(',');
            line.push_str(&sig9(v));
        }
        for v in [r.concurrence, r.fidelity_mems, r.purity] {
            line.push(',');
            line.push_str(&sig9(v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
