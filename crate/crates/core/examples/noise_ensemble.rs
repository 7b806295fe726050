//! Synthesize white dephasing noise and check its moments and correlations.

use noisesync::noise::{autocovariance, gaussianity_check, synthesize_ensemble, synthesize_series, NoiseSpec};

fn main() -> noisesync::Result<()> {
    let spec = NoiseSpec::white(1000, 200, 0.25, 1.3, 7);
    let series = synthesize_series(&spec)?;
    println!("series length {} imaginary residual {:.2e}", series.samples.len(), series.imag_residual);
    let ensemble = synthesize_ensemble(&spec)?;
    let stats = gaussianity_check(&ensemble)?;
    println!("target variance Γ/τ0 = {:.6}", 1.3 / 0.25);
    println!("{stats:#?}");
    for lag in 0..=4 {
        println!("lag {lag}: autocovariance {:+.5}", autocovariance(&ensemble, lag));
    }
    Ok(())
}
