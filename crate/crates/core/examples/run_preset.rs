//! Run a named preset end to end and print its summary.

use noisesync::config::{preset, PRESET_NAMES};
use noisesync::experiment::run_single;

fn main() -> noisesync::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "paper-5q".into());
    if !PRESET_NAMES.contains(&name.as_str()) {
        eprintln!("presets: {}", PRESET_NAMES.join(", "));
        std::process::exit(2);
    }
    let run = run_single(&preset(&name)?)?;
    println!("{}", serde_json::to_string_pretty(&run.summary)?);
    Ok(())
}
