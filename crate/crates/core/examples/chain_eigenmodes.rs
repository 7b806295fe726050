//! Sector Hamiltonian of a five-site chain against its closed-form sine modes.

use noisesync::chain::{build_hamiltonian, build_sector_basis, check_sync_conditions, eigenmodes, ChainSpec};
use noisesync::linalg::eigvalsh;

fn main() -> noisesync::Result<()> {
    let spec = ChainSpec::new(5)?;
    let basis = build_sector_basis(5, 1)?;
    let h = build_hamiltonian(&spec, &basis)?;
    let numeric = eigvalsh(&h.entries);
    println!("k  closed-form  numeric  profile");
    for (mode, e) in eigenmodes(&spec)?.iter().zip(numeric.iter().rev()) {
        let profile: Vec<String> = mode.profile.iter().map(|a| format!("{a:+.3}")).collect();
        println!("{}  {:+.9}  {:+.9}  [{}]", mode.index, mode.eigenvalue, e, profile.join(" "));
    }
    for sites in [vec![3], vec![2]] {
        let verdict = check_sync_conditions(&ChainSpec::new(5)?.with_noise(&sites, 1.3)?);
        println!("noise on {sites:?}: satisfied = {}", verdict.satisfied);
        for line in verdict.diagnostics {
            println!("  {line}");
        }
    }
    Ok(())
}
