//! Dephase the middle of a five-site chain and watch the edges synchronize.

use std::f64::consts::PI;

use noisesync::analysis::{concurrence, edge_reduced_state, magnetizations, Window};
use noisesync::chain::ChainSpec;
use noisesync::evolve::{lindblad_evolve, DensityMatrix};

fn main() -> noisesync::Result<()> {
    let spec = ChainSpec::new(5)?.with_noise(&[3], 1.3)?;
    let initial = DensityMatrix::from_excitations(5, &[1])?;
    let result = lindblad_evolve(&spec, &initial, 20.0 * PI, PI / 50.0)?;
    let mags = magnetizations(&result);
    println!("Jt/pi  sz_1  sz_5  C15(trailing pi)  concurrence(1,5)");
    for period in (2..=20).step_by(2) {
        let t = period as f64 * PI;
        let i = result.index_near(t);
        let c = mags.pearson(1, 5, t, Window::Trailing { width: PI })?;
        let conc = concurrence(&edge_reduced_state(&result.states[i], (1, 5))?)?;
        println!("{period:>5}  {:+.4}  {:+.4}  {:+.4}  {:.4}", mags.site(1)[i], mags.site(5)[i], c, conc);
    }
    Ok(())
}
