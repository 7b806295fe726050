//! End-to-end runs behind the command-line tool: single simulations,
//! `(γ, Δ)` sweeps, the decoherence-free check and noise export.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    self, concurrence, edge_reduced_state, fidelity, fit_cosine, magnetizations, metric_table, purity, CosineFit,
    MetricRow, TwoQubitState, Window, SYNC_PERIOD_WIDTH,
};
use crate::chain::{build_sector_basis, check_sync_conditions, dfs_states, ChainSpec};
use crate::config::{ExperimentConfig, NoiseMethod};
use crate::error::{Error, Result};
use crate::evolve::{
    lindblad_evolve_with, liouvillian_spectrum, trajectory_evolve, EvolutionResult, LIOUVILLIAN_DIM_CAP,
};
use crate::format::{round9, sig9};
use crate::mems::{main_text_reference, mems_reference};
use crate::noise::{autocovariance, gaussianity_check, synthesize_ensemble, write_csv, NoiseStats};

pub const SWEEP_HEADER: &str = "gamma,delta_over_j,pearson_c15,concurrence,fidelity_mems";

fn opt9(x: Option<f64>) -> Option<f64> {
    x.map(round9)
}

#[derive(Debug, Clone, Serialize)]
pub struct PearsonReport {
    pub sites: [usize; 2],
    /// On the configured window ending at the probe time.
    pub value: Option<f64>,
    /// On the trailing window of one `π/J` period ending at the probe time.
    pub trailing_period: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub jt: f64,
    pub concurrence: f64,
    pub purity: f64,
    /// Against the closed-form edge state, when `3 | N + 1`.
    pub fidelity_mems: Option<f64>,
    /// Against the five-qubit main-text matrix, when `N = 5`.
    pub fidelity_main_text: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub site: usize,
    pub window: [f64; 2],
    pub fit: Option<CosineFit>,
    pub error: Option<String>,
    /// A single-frequency oscillation explains the series: residual below amplitude.
    pub oscillating: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SyncReport {
    pub satisfied: bool,
    pub diagnostics: Vec<String>,
}

/// Largest deviations over all snapshots.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConservationReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub max_total_magnetization_drift: f64,
    /// `max_t |Tr ρ(t)² − Tr ρ(0)²|`.
    pub max_purity_drift: f64,
    /// Largest increase of `Tr ρ²` between consecutive snapshots.
    pub max_purity_increase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryReport {
    pub trajectories: usize,
    pub pulse_width: f64,
    pub trace_distance_at_probe: f64,
    pub conservation: ConservationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub n_sites: usize,
    pub excitations: Vec<usize>,
    pub sector_dim: usize,
    pub gamma: f64,
    pub delta_over_j: f64,
    pub noise_sites: Vec<usize>,
    pub sync: SyncReport,
    pub pearson_window: String,
    pub pearson: Vec<PearsonReport>,
    pub fit: FitReport,
    pub probe: ProbeReport,
    pub steady_probe: ProbeReport,
    pub conservation: ConservationReport,
    pub trajectory: Option<TrajectoryReport>,
}

pub struct SingleRun {
    pub lindblad: EvolutionResult,
    pub metrics: Vec<MetricRow>,
    pub trajectory: Option<(EvolutionResult, Vec<MetricRow>)>,
    pub summary: RunSummary,
}

/// The closed-form edge state when the chain length admits one.
fn reference_state(n_sites: usize) -> Option<TwoQubitState> {
    mems_reference(n_sites).ok().map(|r| r.matrix)
}

pub fn conservation(result: &EvolutionResult) -> ConservationReport {
    let mags = magnetizations(result);
    let m0 = mags.total(0);
    let p0 = result.states[0].purity();
    let mut r = ConservationReport {
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        max_total_magnetization_drift: 0.0,
        max_purity_drift: 0.0,
        max_purity_increase: 0.0,
    };
    let mut prev = p0;
    for (i, s) in result.states.iter().enumerate() {
        let p = s.purity();
        r.max_trace_error = r.max_trace_error.max((s.trace() - 1.0).abs());
        r.max_hermiticity_error = r.max_hermiticity_error.max(s.hermiticity_error());
        r.max_total_magnetization_drift = r.max_total_magnetization_drift.max((mags.total(i) - m0).abs());
        r.max_purity_drift = r.max_purity_drift.max((p - p0).abs());
        r.max_purity_increase = r.max_purity_increase.max(p - prev);
        prev = p;
    }
    r
}

fn rounded(c: ConservationReport) -> ConservationReport {
    ConservationReport {
        max_trace_error: round9(c.max_trace_error),
        max_hermiticity_error: round9(c.max_hermiticity_error),
        max_total_magnetization_drift: round9(c.max_total_magnetization_drift),
        max_purity_drift: round9(c.max_purity_drift),
        max_purity_increase: round9(c.max_purity_increase),
    }
}

fn probe_report(result: &EvolutionResult, jt: f64, n: usize) -> Result<ProbeReport> {
    let edge = edge_reduced_state(result.state_near(jt), (1, n))?;
    let mems = match reference_state(n) {
        Some(m) => Some(fidelity(&m, &edge)?),
        None => None,
    };
    let main = if n == 5 { Some(fidelity(&main_text_reference(), &edge)?) } else { None };
    Ok(ProbeReport {
        jt: round9(result.times[result.index_near(jt)]),
        concurrence: round9(concurrence(&edge)?),
        purity: round9(purity(&edge)),
        fidelity_mems: opt9(mems),
        fidelity_main_text: opt9(main),
    })
}

/// Runs the master equation (and the trajectory ensemble when configured)
/// and collects the per-sample metrics and the summary.
pub fn run_single(cfg: &ExperimentConfig) -> Result<SingleRun> {
    cfg.validate()?;
    let spec = cfg.chain_spec()?;
    let initial = cfg.initial_state()?;
    let n = cfg.chain.n_sites;
    let j = cfg.chain.coupling;
    let t_final = cfg.sim_time(cfg.time.t_final);
    let dt = cfg.sim_time(cfg.time.dt_sample);
    let reference = reference_state(n);

    let mut lindblad = lindblad_evolve_with(&spec, &initial, t_final, dt, &cfg.lindblad_options())?;
    to_jt(&mut lindblad, j);
    let metrics = metric_table(&lindblad, cfg.pearson_pairs(), cfg.window(), reference.as_ref())?;

    let trajectory = if cfg.noise.method == NoiseMethod::Trajectories {
        let ensemble = cfg
            .noise_specs(t_final)
            .iter()
            .map(synthesize_ensemble)
            .collect::<Result<Vec<_>>>()?;
        let mut result = trajectory_evolve(&spec, &initial, &ensemble, t_final, dt)?;
        to_jt(&mut result, j);
        let rows = metric_table(&result, cfg.pearson_pairs(), cfg.window(), reference.as_ref())?;
        Some((result, rows))
    } else {
        None
    };

    let summary = summarize(cfg, &spec, &lindblad, trajectory.as_ref().map(|t| &t.0))?;
    Ok(SingleRun { lindblad, metrics, trajectory, summary })
}

fn to_jt(result: &mut EvolutionResult, coupling: f64) {
    if coupling != 1.0 {
        result.times.iter_mut().for_each(|t| *t *= coupling);
    }
}

fn summarize(
    cfg: &ExperimentConfig,
    spec: &ChainSpec,
    lindblad: &EvolutionResult,
    trajectory: Option<&EvolutionResult>,
) -> Result<RunSummary> {
    let n = cfg.chain.n_sites;
    let probe = cfg.time.probe_time;
    let mags = magnetizations(lindblad);
    let window = cfg.window();
    let pearson = cfg
        .analysis
        .pearson_pairs
        .iter()
        .map(|&[a, b]| PearsonReport {
            sites: [a, b],
            value: opt9(mags.pearson(a, b, probe, window).ok()),
            trailing_period: opt9(mags.pearson(a, b, probe, Window::Trailing { width: SYNC_PERIOD_WIDTH }).ok()),
        })
        .collect();

    let a = &cfg.analysis;
    let (fit, error) = match fit_cosine(&mags.times, mags.site(a.fit_site), a.fit_start, a.fit_end) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let oscillating = fit.map_or(false, |f| f.rms_residual < f.amplitude);
    let fit = fit.map(|f| CosineFit {
        amplitude: round9(f.amplitude),
        offset: round9(f.offset),
        angular_frequency: round9(f.angular_frequency),
        phase: round9(f.phase),
        rms_residual: round9(f.rms_residual),
        zero_phase_amplitude: round9(f.zero_phase_amplitude),
        zero_phase_offset: round9(f.zero_phase_offset),
    });

    let verdict = check_sync_conditions(spec);
    let trajectory = match trajectory {
        Some(t) => {
            let i = t.index_near(probe);
            Some(TrajectoryReport {
                trajectories: t.trajectories.unwrap_or(0),
                pulse_width: round9(cfg.noise.pulse_width),
                trace_distance_at_probe: round9(t.states[i].trace_distance(lindblad.state_near(probe))),
                conservation: rounded(conservation(t)),
            })
        }
        None => None,
    };
    Ok(RunSummary {
        name: cfg.name.clone(),
        n_sites: n,
        excitations: cfg.initial.excitations.clone(),
        sector_dim: lindblad.states[0].dim(),
        gamma: round9(cfg.chain.gamma),
        delta_over_j: round9(cfg.chain.detuning),
        noise_sites: cfg.chain.noise_sites.clone(),
        sync: SyncReport { satisfied: verdict.satisfied, diagnostics: verdict.diagnostics },
        pearson_window: match window {
            Window::Cumulative { start } => format!("cumulative from Jt = {}", sig9(start)),
            Window::Trailing { width } => format!("trailing, width {}", sig9(width)),
        },
        pearson,
        fit: FitReport { site: a.fit_site, window: [round9(a.fit_start), round9(a.fit_end)], fit, error, oscillating },
        probe: probe_report(lindblad, probe, n)?,
        steady_probe: probe_report(lindblad, cfg.time.steady_probe_time, n)?,
        conservation: rounded(conservation(lindblad)),
        trajectory,
    })
}

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out_dir)?;
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

fn write_json<T: Serialize>(out_dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(out_dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `metrics.csv`, `summary.json` and, with trajectories,
/// `metrics_trajectories.csv`.
pub fn write_single(run: &SingleRun, out_dir: &Path) -> Result<()> {
    let mut w = create(out_dir, "metrics.csv")?;
    analysis::write_metrics_csv(&mut w, &run.metrics)?;
    w.flush()?;
    if let Some((_, rows)) = &run.trajectory {
        let mut w = create(out_dir, "metrics_trajectories.csv")?;
        analysis::write_metrics_csv(&mut w, rows)?;
        w.flush()?;
    }
    write_json(out_dir, "summary.json", &run.summary)
}

/// One `(γ, Δ/J)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub gamma: f64,
    pub delta_over_j: f64,
    pub pearson_c15: f64,
    pub concurrence: f64,
    pub fidelity_mems: f64,
    /// `None` on success, otherwise the failure message.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Row-major: `cells[i * deltas.len() + j]` is `(gammas[i], deltas[j])`.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, gamma_index: usize, delta_index: usize) -> &SweepCell {
        &self.cells[gamma_index * self.deltas.len() + delta_index]
    }

    /// CSV with a trailing `status` column only when some cell failed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let failed = self.cells.iter().any(|c| c.error.is_some());
        if failed {
            writeln!(out, "{SWEEP_HEADER},status")?;
        } else {
            writeln!(out, "{SWEEP_HEADER}")?;
        }
        for c in &self.cells {
            let mut row = format!(
                "{},{},{},{},{}",
                sig9(c.gamma),
                sig9(c.delta_over_j),
                sig9(c.pearson_c15),
                sig9(c.concurrence),
                sig9(c.fidelity_mems)
            );
            if failed {
                let status = match &c.error {
                    None => "ok".to_string(),
                    Some(e) => format!("error: {}", e.replace([',', '\n', '\r'], ";")),
                };
                row.push(',');
                row.push_str(&status);
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

/// Evolves one cell to the probe time. Failures land in [`SweepCell::error`].
pub fn sweep_cell(cfg: &ExperimentConfig, gamma: f64, delta_over_j: f64) -> SweepCell {
    let mut cell = SweepCell {
        gamma,
        delta_over_j,
        pearson_c15: f64::NAN,
        concurrence: f64::NAN,
        fidelity_mems: f64::NAN,
        error: None,
    };
    if let Err(e) = fill_cell(cfg, &mut cell) {
        cell.error = Some(e.to_string());
    }
    cell
}

fn fill_cell(cfg: &ExperimentConfig, cell: &mut SweepCell) -> Result<()> {
    let n = cfg.chain.n_sites;
    let spec = cfg.chain_spec_with(cell.gamma, cell.delta_over_j)?;
    let probe = cfg.time.probe_time;
    let mut result = lindblad_evolve_with(
        &spec,
        &cfg.initial_state()?,
        cfg.sim_time(probe),
        cfg.sim_time(cfg.time.dt_sample),
        &cfg.lindblad_options(),
    )?;
    to_jt(&mut result, cfg.chain.coupling);
    let edge = edge_reduced_state(result.state_near(probe), (1, n))?;
    cell.concurrence = concurrence(&edge)?;
    if let Some(m) = reference_state(n) {
        cell.fidelity_mems = fidelity(&m, &edge)?;
    }
    let [a, b] = cfg.analysis.pearson_pairs[0];
    cell.pearson_c15 = magnetizations(&result).pearson(a, b, probe, cfg.window())?;
    Ok(())
}

/// Sweeps the configured axes with up to `workers` threads (0 = all cores).
/// Output depends only on the configuration, not on scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<SweepGrid> {
    run_sweep_axes(cfg, &cfg.gamma_axis(), &cfg.delta_axis(), workers)
}

pub fn run_sweep_axes(cfg: &ExperimentConfig, gammas: &[f64], deltas: &[f64], workers: usize) -> Result<SweepGrid> {
    cfg.validate()?;
    if gammas.is_empty() || deltas.is_empty() {
        return Err(Error::Config("sweep axes must be non-empty".into()));
    }
    for axis in [gammas, deltas] {
        if axis.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep axes must be strictly ascending".into()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let nd = deltas.len();
    let cells = pool.install(|| {
        (0..gammas.len() * nd)
            .into_par_iter()
            .map(|k| sweep_cell(cfg, gammas[k / nd], deltas[k % nd]))
            .collect()
    });
    Ok(SweepGrid { gammas: gammas.to_vec(), deltas: deltas.to_vec(), cells })
}

pub fn write_sweep(grid: &SweepGrid, out_dir: &Path) -> Result<()> {
    let mut w = create(out_dir, "sweep.csv")?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct DfsAmplitude {
    pub site: usize,
    pub mode_k: f64,
    pub mode_l: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DfsReport {
    pub n_sites: usize,
    pub noise_sites: Vec<usize>,
    pub gamma: f64,
    pub satisfied: bool,
    pub diagnostics: Vec<String>,
    /// Mode indices `(k, l) = ((N+1)/3, 2(N+1)/3)`.
    pub dfs_modes: Option<[usize; 2]>,
    pub amplitudes: Vec<DfsAmplitude>,
    /// Positive frequencies of undamped single-excitation Liouvillian modes.
    pub undamped_frequencies: Option<Vec<f64>>,
    pub kernel_dim: Option<usize>,
}

/// The synchronization conditions for `spec`, and the surviving oscillation
/// frequency from the single-excitation Liouvillian.
pub fn dfs_report(spec: &ChainSpec) -> Result<DfsReport> {
    let verdict = check_sync_conditions(spec);
    let basis = build_sector_basis(spec.n_sites(), 1)?;
    let (undamped, kernel) = if basis.dim() * basis.dim() <= LIOUVILLIAN_DIM_CAP {
        let s = liouvillian_spectrum(spec, &basis)?;
        let tol = 1e-8 * spec.coupling().max(spec.noise_strength());
        (Some(s.undamped_frequencies(tol).into_iter().map(round9).collect()), Some(s.kernel_dim(tol)))
    } else {
        (None, None)
    };
    Ok(DfsReport {
        n_sites: spec.n_sites(),
        noise_sites: spec.noise_sites().to_vec(),
        gamma: round9(spec.reduced_noise()),
        satisfied: verdict.satisfied,
        diagnostics: verdict.diagnostics,
        dfs_modes: dfs_states(spec).map(|(k, l)| [k.index, l.index]),
        amplitudes: verdict
            .dfs_amplitudes
            .iter()
            .map(|&(site, k, l)| DfsAmplitude { site, mode_k: round9(k), mode_l: round9(l) })
            .collect(),
        undamped_frequencies: undamped,
        kernel_dim: kernel,
    })
}

pub fn render_dfs_report(r: &DfsReport) -> String {
    let mut s = format!(
        "N = {}, noise sites {:?}, gamma = {}\nsynchronization conditions: {}\n",
        r.n_sites,
        r.noise_sites,
        sig9(r.gamma),
        if r.satisfied { "satisfied" } else { "violated" }
    );
    for d in &r.diagnostics {
        s.push_str(&format!("  {d}\n"));
    }
    if let Some([k, l]) = r.dfs_modes {
        s.push_str(&format!("decoherence-free modes: k = {k}, l = {l}\n"));
        for a in &r.amplitudes {
            s.push_str(&format!("  site {:>2}: |phi_k| = {}, |phi_l| = {}\n", a.site, sig9(a.mode_k), sig9(a.mode_l)));
        }
    }
    if let (Some(f), Some(k)) = (&r.undamped_frequencies, r.kernel_dim) {
        let list: Vec<String> = f.iter().map(|v| sig9(*v)).collect();
        s.push_str(&format!("Liouvillian kernel dimension: {k}\nundamped frequencies: [{}]\n", list.join(", ")));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseExport {
    pub site: usize,
    pub target_variance: f64,
    pub stats: NoiseStats,
    /// Autocorrelation `C(k)/C(0)` at lags `k = 1..=5` pulses.
    pub autocorrelation: Vec<f64>,
}

/// Synthesizes the configured ensemble for every noise site and writes
/// `noise_u{site}.csv` plus a `noise_u{site}.stats.json` sidecar.
pub fn noise_gen(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<NoiseExport>> {
    cfg.validate()?;
    if cfg.chain.noise_sites.is_empty() {
        return Err(Error::Config("chain.noise_sites: noise export needs at least one noise site".into()));
    }
    let mut exports = Vec::new();
    for (spec, &site) in cfg.noise_specs(cfg.sim_time(cfg.time.t_final)).iter().zip(&cfg.chain.noise_sites) {
        let ensemble = synthesize_ensemble(spec)?;
        let mut w = create(out_dir, &format!("noise_u{site}.csv"))?;
        write_csv(&mut w, &ensemble)?;
        w.flush()?;
        let stats = gaussianity_check(&ensemble)?;
        let c0 = autocovariance(&ensemble, 0);
        let autocorrelation =
            (1..=5).map(|k| if c0 > 0.0 { round9(autocovariance(&ensemble, k) / c0) } else { 0.0 }).collect();
        let export = NoiseExport {
            site,
            target_variance: round9(spec.target_gamma / spec.pulse_width),
            stats: NoiseStats {
                samples: stats.samples,
                mean: round9(stats.mean),
                variance: round9(stats.variance),
                skewness: round9(stats.skewness),
                excess_kurtosis: round9(stats.excess_kurtosis),
                mean_standard_error: round9(stats.mean_standard_error),
            },
            autocorrelation,
        };
        write_json(out_dir, &format!("noise_u{site}.stats.json"), &export)?;
        exports.push(export);
    }
    Ok(exports)
}
