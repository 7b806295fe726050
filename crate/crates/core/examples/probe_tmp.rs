use noisesync::chain::ChainSpec;
use noisesync::evolve::{lindblad_evolve, DensityMatrix};
fn main() {
    for (n, g, d, site, first) in [(3usize, 0.0, 0.0, 1usize, 1usize), (6, 1.0, 0.5, 2, 2), (3, 0.5, 0.0, 3, 2)] {
        let t0 = std::time::Instant::now();
        let spec = ChainSpec::new(n).unwrap().with_detuning(d).unwrap().with_noise(&[site], g).unwrap();
        let initial = DensityMatrix::from_excitations(n, &[first, n]).unwrap();
        let r = lindblad_evolve(&spec, &initial, 2.0, 0.1);
        println!("{n} {g} {:?} {:?}", r.map(|r| r.states.len()).map_err(|e| e.to_string()), t0.elapsed());
    }
}
