//! Coarse sweep over noise strength and edge detuning on all cores.

use noisesync::config::preset;
use noisesync::experiment::run_sweep_axes;

fn main() -> noisesync::Result<()> {
    let cfg = preset("paper-5q")?;
    let gammas = [0.3, 1.3, 3.0];
    let deltas = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let grid = run_sweep_axes(&cfg, &gammas, &deltas, workers)?;
    grid.write_csv(std::io::stdout().lock())?;
    Ok(())
}
