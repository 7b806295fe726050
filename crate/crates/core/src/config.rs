//! Experiment files and the built-in presets.
//!
//! Files are TOML restricted to dotted keys, one setting per line:
//!
//! ```text
//! # five-qubit chain, noise on the central site
//! chain.n_sites = 5
//! chain.noise_sites = [3]
//! chain.gamma = 1.3
//! initial.excitations = [1]
//! ```
//!
//! Times are in units of `1/J` (the `Jt` axis of the plots).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::Window;
use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::evolve::{DensityMatrix, LindbladOptions};
use crate::noise::{NoiseSpec, SpectralDensity, DEFAULT_PULSE_WIDTH};

pub const PRESET_NAMES: [&str; 7] = [
    "paper-5q",
    "paper-5q-violation-u1",
    "paper-5q-violation-u2",
    "paper-5q-trajectories",
    "paper-8q",
    "paper-11q-1ex",
    "paper-11q-3ex",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub chain: ChainConfig,
    pub initial: InitialConfig,
    pub noise: NoiseConfig,
    pub time: TimeConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_sites: usize,
    pub coupling: f64,
    pub base_frequency: f64,
    /// `Δ/J`.
    pub detuning: f64,
    pub noise_sites: Vec<usize>,
    /// Reduced noise amplitude `γ = Γ/J`.
    pub gamma: f64,
    /// Overrides `base_frequency` site by site when non-empty.
    pub site_frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub excitations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMethod {
    /// Master equation only.
    ExactLindblad,
    /// Master equation plus a synthesized trajectory ensemble.
    Trajectories,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    White,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub method: NoiseMethod,
    pub trajectories: usize,
    /// `J·τ0`.
    pub pulse_width: f64,
    pub spectrum: SpectrumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt_sample: f64,
    pub probe_time: f64,
    /// Start of the steady entanglement regime, reported next to the probe.
    pub steady_probe_time: f64,
    /// Overrides the RK4 step of the master equation, in units of `1/J`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Cumulative,
    Trailing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// The first two pairs fill the `c15` and `c24` columns.
    pub pearson_pairs: Vec<[usize; 2]>,
    pub pearson_window: WindowKind,
    pub window_start: f64,
    pub window_width: f64,
    pub fit_site: usize,
    pub fit_start: f64,
    pub fit_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
    /// In units of `J`.
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            seed: 0,
            chain: ChainConfig::default(),
            initial: InitialConfig::default(),
            noise: NoiseConfig::default(),
            time: TimeConfig::default(),
            analysis: AnalysisConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_sites: 5,
            coupling: 1.0,
            base_frequency: 0.0,
            detuning: 0.0,
            noise_sites: vec![3],
            gamma: 1.3,
            site_frequencies: Vec::new(),
        }
    }
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { excitations: vec![1] }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            method: NoiseMethod::ExactLindblad,
            trajectories: 1000,
            pulse_width: DEFAULT_PULSE_WIDTH,
            spectrum: SpectrumKind::White,
        }
    }
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_final: 10.0 * PI, dt_sample: PI / 100.0, probe_time: 3.0 * PI, steady_probe_time: 2.0 * PI, integrator_step: None }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pearson_pairs: vec![[1, 5], [2, 4]],
            pearson_window: WindowKind::Cumulative,
            window_start: 0.0,
            window_width: PI,
            fit_site: 2,
            fit_start: 3.0 * PI,
            fit_end: 8.0 * PI,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { gamma_min: 0.1, gamma_max: 3.0, gamma_points: 21, delta_min: -2.0, delta_max: 2.0, delta_points: 21 }
    }
}

fn chain_preset(name: &str, n: usize, noise_sites: Vec<usize>, gamma: f64, excitations: Vec<usize>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { name: name.into(), ..Default::default() };
    cfg.chain.n_sites = n;
    cfg.chain.noise_sites = noise_sites;
    cfg.chain.gamma = gamma;
    cfg.initial.excitations = excitations;
    cfg.analysis.pearson_pairs = vec![[1, n], [2, n - 1]];
    cfg
}

/// A named preset for one of the reference runs.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "paper-5q" => chain_preset(name, 5, vec![3], 1.3, vec![1]),
        "paper-5q-violation-u1" => chain_preset(name, 5, vec![1], 1.3, vec![1]),
        "paper-5q-violation-u2" => chain_preset(name, 5, vec![2], 1.3, vec![1]),
        "paper-5q-trajectories" => {
            let mut cfg = chain_preset(name, 5, vec![3], 1.3, vec![1]);
            cfg.noise.method = NoiseMethod::Trajectories;
            cfg
        }
        "paper-8q" => chain_preset(name, 8, vec![3, 6], 0.5, vec![1]),
        "paper-11q-1ex" => chain_preset(name, 11, vec![3, 6, 9], 0.3, vec![1]),
        "paper-11q-3ex" => chain_preset(name, 11, vec![3, 6, 9], 0.3, vec![1, 5, 7]),
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{name}: {msg}"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("must be > 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be finite, got {v}")))
    }
}

fn sites_in_range(name: &str, sites: &[usize], n: usize) -> Result<()> {
    for (i, &s) in sites.iter().enumerate() {
        if s == 0 || s > n {
            return Err(field(name, format!("site {s} outside 1..={n}")));
        }
        if sites[..i].contains(&s) {
            return Err(field(name, format!("site {s} listed twice")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &span_note(text, e.span())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Dotted-key lines, parseable by [`Self::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config is representable in TOML");
        let mut out = String::new();
        flatten("", &value, &mut out);
        out
    }

    /// Field-level checks; messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(field("seed", format!("must be <= {} to fit in the file format", i64::MAX)));
        }
        let c = &self.chain;
        let n = c.n_sites;
        if !(2..=30).contains(&n) {
            return Err(field("chain.n_sites", format!("must be in 2..=30, got {n}")));
        }
        positive("chain.coupling", c.coupling)?;
        finite("chain.base_frequency", c.base_frequency)?;
        finite("chain.detuning", c.detuning)?;
        if !(c.gamma.is_finite() && c.gamma >= 0.0) {
            return Err(field("chain.gamma", format!("must be >= 0, got {}", c.gamma)));
        }
        sites_in_range("chain.noise_sites", &c.noise_sites, n)?;
        if !c.site_frequencies.is_empty() && c.site_frequencies.len() != n {
            return Err(field(
                "chain.site_frequencies",
                format!("needs {n} values, got {}", c.site_frequencies.len()),
            ));
        }
        sites_in_range("initial.excitations", &self.initial.excitations, n)?;
        if self.initial.excitations.is_empty() {
            return Err(field("initial.excitations", "at least one excited site is required"));
        }

        let t = &self.time;
        positive("time.t_final", t.t_final)?;
        positive("time.dt_sample", t.dt_sample)?;
        for (name, v) in [("time.probe_time", t.probe_time), ("time.steady_probe_time", t.steady_probe_time)] {
            if !(v.is_finite() && v >= 0.0 && v <= t.t_final) {
                return Err(field(name, format!("must lie in [0, t_final = {}], got {v}", t.t_final)));
            }
        }

        if self.noise.trajectories == 0 {
            return Err(field("noise.trajectories", "must be >= 1"));
        }
        positive("noise.pulse_width", self.noise.pulse_width)?;

        let a = &self.analysis;
        if a.pearson_pairs.len() < 2 {
            return Err(field("analysis.pearson_pairs", "needs two pairs (the c15 and c24 columns)"));
        }
        for pair in &a.pearson_pairs {
            if pair[0] == pair[1] {
                return Err(field("analysis.pearson_pairs", format!("pair {pair:?} repeats a site")));
            }
            sites_in_range("analysis.pearson_pairs", pair, n)?;
        }
        if let Some(step) = self.time.integrator_step {
            positive("time.integrator_step", step)?;
        }
        finite("analysis.window_start", a.window_start)?;
        positive("analysis.window_width", a.window_width)?;
        if a.fit_site == 0 || a.fit_site > n {
            return Err(field("analysis.fit_site", format!("site {} outside 1..={n}", a.fit_site)));
        }
        if !(a.fit_start.is_finite() && a.fit_end.is_finite() && a.fit_start < a.fit_end) {
            return Err(field("analysis.fit_end", "fit window must satisfy fit_start < fit_end"));
        }

        let s = &self.sweep;
        for (name, lo, hi, points) in [
            ("sweep.gamma", s.gamma_min, s.gamma_max, s.gamma_points),
            ("sweep.delta", s.delta_min, s.delta_max, s.delta_points),
        ] {
            if points == 0 {
                return Err(field(&format!("{name}_points"), "axis must be non-empty"));
            }
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) || (points > 1 && lo == hi) {
                return Err(field(&format!("{name}_max"), format!("need {name}_min < {name}_max, got [{lo}, {hi}]")));
            }
        }
        if s.gamma_min < 0.0 {
            return Err(field("sweep.gamma_min", "noise amplitude must be >= 0"));
        }
        Ok(())
    }

    pub fn chain_spec(&self) -> Result<ChainSpec> {
        self.chain_spec_with(self.chain.gamma, self.chain.detuning)
    }

    /// The chain with `γ` and `Δ/J` replaced, as used by sweep cells.
    pub fn chain_spec_with(&self, gamma: f64, detuning: f64) -> Result<ChainSpec> {
        let c = &self.chain;
        let mut spec = ChainSpec::new(c.n_sites)?
            .with_coupling(c.coupling)?
            .with_base_frequency(c.base_frequency)?;
        if !c.site_frequencies.is_empty() {
            spec = spec.with_site_frequencies(c.site_frequencies.clone())?;
        }
        spec.with_detuning(detuning * c.coupling)?.with_noise(&c.noise_sites, gamma)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_excitations(self.chain.n_sites, &self.initial.excitations)
    }

    /// Pearson window in `Jt` units.
    pub fn window(&self) -> Window {
        match self.analysis.pearson_window {
            WindowKind::Cumulative => Window::Cumulative { start: self.analysis.window_start },
            WindowKind::Trailing => Window::Trailing { width: self.analysis.window_width },
        }
    }

    pub fn pearson_pairs(&self) -> [(usize, usize); 2] {
        let p = &self.analysis.pearson_pairs;
        [(p[0][0], p[0][1]), (p[1][0], p[1][1])]
    }

    /// Simulation time `t = Jt / J`.
    pub fn sim_time(&self, jt: f64) -> f64 {
        jt / self.chain.coupling
    }

    /// Master-equation options honoring `time.integrator_step`.
    pub fn lindblad_options(&self) -> LindbladOptions {
        LindbladOptions { step: self.time.integrator_step.map(|s| self.sim_time(s)), ..Default::default() }
    }

    /// One noise spec per noise site, each on its own generator stream.
    pub fn noise_specs(&self, t_final: f64) -> Vec<NoiseSpec> {
        let tau = self.sim_time(self.noise.pulse_width);
        let pulses = (t_final / tau - 1e-9).ceil().max(1.0) as usize;
        let gamma = self.chain.gamma * self.chain.coupling;
        (0..self.chain.noise_sites.len())
            .map(|i| {
                let mut spec = NoiseSpec::white(self.noise.trajectories, pulses, tau, gamma, self.seed);
                spec.stream = i as u64;
                if self.noise.spectrum == SpectrumKind::Zero {
                    spec.spectral_density = SpectralDensity::White(0.0);
                }
                spec
            })
            .collect()
    }

    /// Ascending `γ` axis.
    pub fn gamma_axis(&self) -> Vec<f64> {
        linspace(self.sweep.gamma_min, self.sweep.gamma_max, self.sweep.gamma_points)
    }

    /// Ascending `Δ/J` axis.
    pub fn delta_axis(&self) -> Vec<f64> {
        linspace(self.sweep.delta_min, self.sweep.delta_max, self.sweep.delta_points)
    }
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| if i == points - 1 { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 })
            .collect(),
    }
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut String) {
    match value {
        toml::Value::Table(t) => {
            // Scalars first so each section reads top to bottom.
            let (tables, leaves): (Vec<_>, Vec<_>) = t.iter().partition(|(_, v)| v.is_table());
            for (k, v) in leaves.into_iter().chain(tables) {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        leaf => {
            out.push_str(&format!("{prefix} = {leaf}\n"));
        }
    }
}
