//! Closed-form edge states reached from a single edge excitation.

use noisesync::analysis::fidelity;
use noisesync::mems::{main_text_reference, mems_reference, render_table};

fn main() -> noisesync::Result<()> {
    for n in [5, 8, 11, 29] {
        println!("{}", render_table(&mems_reference(n)?));
    }
    let f = fidelity(&main_text_reference(), &mems_reference(5)?.matrix)?;
    println!("fidelity of the rounded five-site matrix: {f:.6}");
    Ok(())
}
