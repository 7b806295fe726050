//! Average stochastic trajectories and compare with the master equation.

use std::f64::consts::PI;

use noisesync::chain::ChainSpec;
use noisesync::evolve::{lindblad_evolve, trajectory_evolve, DensityMatrix};
use noisesync::noise::{synthesize_ensemble, NoiseSpec};

fn main() -> noisesync::Result<()> {
    let spec = ChainSpec::new(5)?.with_noise(&[3], 1.3)?;
    let initial = DensityMatrix::from_excitations(5, &[1])?;
    let t = 3.0 * PI;
    let dt = PI / 50.0;
    let lind = lindblad_evolve(&spec, &initial, t, dt)?;
    println!("M      trace distance at Jt = 3pi");
    for m in [100, 400, 1600] {
        let noise = NoiseSpec::white(m, (t / 0.25).ceil() as usize + 1, 0.25, 1.3, 2024);
        let ensemble = vec![synthesize_ensemble(&noise)?];
        let traj = trajectory_evolve(&spec, &initial, &ensemble, t, dt)?;
        println!("{m:<6} {:.4}", traj.state_near(t).trace_distance(lind.state_near(t)));
    }
    Ok(())
}
