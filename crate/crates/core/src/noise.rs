//! Gaussian noise pulse trains by spectral synthesis.
//!
//! A one-sided spectrum `√S(ω_m)·e^{iθ_m}` on the grid
//! `ω_m = 2πm/(L τ0)`, `m = 0..L/2` with `L = trajectories × pulses`, is
//! completed to a conjugate-symmetric spectrum, inverse transformed into a
//! real series of length `L`, rescaled to variance `Γ/τ0` and cut into
//! contiguous trajectories. Piecewise-constant pulses of width `τ0` and
//! variance `Γ/τ0` approach white noise `⟨ξ(t)ξ(t')⟩ = Γ δ(t − t')`.
//!
//! Phases come from ChaCha8 seeded with [`NoiseSpec::seed`]; distinct noise
//! sites use distinct ChaCha streams of the same seed.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::format::sig9;

/// Noise power spectral density `S(ω)`.
#[derive(Clone)]
pub enum SpectralDensity {
    White(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SpectralDensity {
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            SpectralDensity::White(level) => *level,
            SpectralDensity::Custom(f) => f(omega),
        }
    }
}

impl fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralDensity::White(level) => write!(f, "White({level})"),
            SpectralDensity::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub n_trajectories: usize,
    pub pulses_per_trajectory: usize,
    /// `τ0` in units of `1/J`.
    pub pulse_width: f64,
    pub spectral_density: SpectralDensity,
    /// `Γ` reproduced by the ensemble.
    pub target_gamma: f64,
    pub seed: u64,
    /// ChaCha stream index; one per noise site.
    pub stream: u64,
}

/// Default dimensionless pulse width `J·τ0`.
pub const DEFAULT_PULSE_WIDTH: f64 = 0.25;

impl NoiseSpec {
    pub fn white(
        n_trajectories: usize,
        pulses_per_trajectory: usize,
        pulse_width: f64,
        target_gamma: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_trajectories,
            pulses_per_trajectory,
            pulse_width,
            spectral_density: SpectralDensity::White(1.0),
            target_gamma,
            seed,
            stream: 0,
        }
    }

    /// Total series length `L`.
    pub fn series_len(&self) -> usize {
        self.n_trajectories * self.pulses_per_trajectory
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 || self.pulses_per_trajectory == 0 {
            return Err(Error::InvalidNoise("zero-length frequency grid".into()));
        }
        if self.series_len() % 2 != 0 {
            return Err(Error::InvalidNoise(format!(
                "trajectories x pulses = {} must be even",
                self.series_len()
            )));
        }
        if !(self.pulse_width.is_finite() && self.pulse_width > 0.0) {
            return Err(Error::InvalidNoise(format!(
                "pulse width must be > 0, got {}",
                self.pulse_width
            )));
        }
        if !(self.target_gamma.is_finite() && self.target_gamma >= 0.0) {
            return Err(Error::InvalidNoise(format!(
                "target gamma must be >= 0, got {}",
                self.target_gamma
            )));
        }
        Ok(())
    }
}

/// Piecewise-constant pulse heights `ξ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    pub amplitudes: Vec<f64>,
    pub pulse_width: f64,
}

impl NoiseTrajectory {
    pub fn zeros(pulses: usize, pulse_width: f64) -> Self {
        Self { amplitudes: vec![0.0; pulses], pulse_width }
    }

    /// Time covered by the pulse train.
    pub fn duration(&self) -> f64 {
        self.amplitudes.len() as f64 * self.pulse_width
    }
}

/// Full synthesized series before slicing.
#[derive(Debug, Clone)]
pub struct SynthesizedSeries {
    pub samples: Vec<f64>,
    /// Largest `|Im|` of the inverse transform relative to the largest `|Re|`.
    pub imag_residual: f64,
}

pub fn synthesize_series(spec: &NoiseSpec) -> Result<SynthesizedSeries> {
    spec.validate()?;
    let len = spec.series_len();
    let half = len / 2;
    let d_omega = 2.0 * PI / (len as f64 * spec.pulse_width);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);

    let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
    for m in 0..=half {
        let omega = m as f64 * d_omega;
        let s = spec.spectral_density.eval(omega);
        if !(s >= 0.0) {
            return Err(Error::NegativeSpectralDensity { omega, value: s });
        }
        let theta = rng.gen::<f64>() * 2.0 * PI;
        if m == 0 {
            // DC removed: exact zero mean.
            continue;
        }
        let amp = s.sqrt();
        if m == half {
            spectrum[m] = Complex64::new(amp * theta.cos(), 0.0);
        } else {
            let z = Complex64::from_polar(amp, theta);
            spectrum[m] = z;
            spectrum[len - m] = z.conj();
        }
    }

    FftPlanner::<f64>::new().plan_fft_inverse(len).process(&mut spectrum);

    let max_re = spectrum.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
    let max_im = spectrum.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    let imag_residual = if max_re > 0.0 { max_im / max_re } else { max_im };

    let mut samples: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
    let n = len as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let target = spec.target_gamma / spec.pulse_width;
    if var > 0.0 && target > 0.0 {
        let scale = (target / var).sqrt();
        samples.iter_mut().for_each(|x| *x *= scale);
    } else {
        samples.iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(SynthesizedSeries { samples, imag_residual })
}

/// Synthesizes the ensemble and slices it into trajectories.
pub fn synthesize_ensemble(spec: &NoiseSpec) -> Result<Vec<NoiseTrajectory>> {
    let series = synthesize_series(spec)?;
    if series.imag_residual > 1e-10 {
        return Err(Error::InvalidNoise(format!(
            "inverse transform left an imaginary residual of {:e}",
            series.imag_residual
        )));
    }
    Ok(slice_series(&series.samples, spec.pulses_per_trajectory, spec.pulse_width))
}

pub fn slice_series(samples: &[f64], pulses: usize, pulse_width: f64) -> Vec<NoiseTrajectory> {
    samples
        .chunks_exact(pulses)
        .map(|c| NoiseTrajectory { amplitudes: c.to_vec(), pulse_width })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoiseStats {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Standard error of the mean, `√(var/n)`.
    pub mean_standard_error: f64,
}

/// Pooled moments of every amplitude in the ensemble.
pub fn gaussianity_check(ensemble: &[NoiseTrajectory]) -> Result<NoiseStats> {
    let n: usize = ensemble.iter().map(|t| t.amplitudes.len()).sum();
    if n == 0 {
        return Err(Error::InvalidNoise("empty ensemble".into()));
    }
    let values = || ensemble.iter().flat_map(|t| t.amplitudes.iter().copied());
    let nf = n as f64;
    let mean = values().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in values() {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(NoiseStats {
        samples: n,
        mean,
        variance: m2,
        skewness,
        excess_kurtosis,
        mean_standard_error: (m2 / nf).sqrt(),
    })
}

/// Autocovariance at `lag` pulses, pooled over pairs inside each trajectory.
pub fn autocovariance(ensemble: &[NoiseTrajectory], lag: usize) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for t in ensemble {
        let a = &t.amplitudes;
        if a.len() > lag {
            acc += a.iter().zip(&a[lag..]).map(|(x, y)| x * y).sum::<f64>();
            count += a.len() - lag;
        }
    }
    if count == 0 {
        0.0
    } else {
        acc / count as f64
    }
}

/// Writes `traj_id,a0,a1,...` followed by one row per trajectory.
pub fn write_csv<W: Write>(mut out: W, ensemble: &[NoiseTrajectory]) -> std::io::Result<()> {
    let k = ensemble.iter().map(|t| t.amplitudes.len()).max().unwrap_or(0);
    let mut header = String::from("traj_id");
    for i in 0..k {
        header.push_str(&format!(",a{i}"));
    }
    writeln!(out, "{header}")?;
    for (id, t) in ensemble.iter().enumerate() {
        let mut row = id.to_string();
        for &a in &t.amplitudes {
            row.push(',');
            row.push_str(&sig9(a));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}
