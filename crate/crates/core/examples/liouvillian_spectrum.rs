//! Stationary and oscillating modes of the dephased single-excitation sector.

use noisesync::chain::{build_sector_basis, ChainSpec};
use noisesync::evolve::liouvillian_spectrum;

fn main() -> noisesync::Result<()> {
    let basis = build_sector_basis(5, 1)?;
    for u in 1..=3 {
        let spec = ChainSpec::new(5)?.with_noise(&[u], 1.3)?;
        let s = liouvillian_spectrum(&spec, &basis)?;
        println!(
            "noise on site {u}: kernel {} undamped {:?} largest nonzero Re {:?}",
            s.kernel_dim(1e-8),
            s.undamped_frequencies(1e-8),
            s.slowest_decay(1e-8)
        );
    }
    Ok(())
}
