//! Which emitter platforms reach 2g > ξ, and the bowtie-cavity coupling
//! recomputed from its mode volume.

use phonon_cqed::rates::coupling_from_mode_volume;
use phonon_cqed::run::{bowtie_mode_volume, list_presets};

fn main() -> phonon_cqed::Result<()> {
    for p in list_presets() {
        println!(
            "{:<22} 2g/ξ = {:>8.4}  {}",
            p.name,
            p.splitting_over_cutoff(),
            if p.decoupled() { "decoupled" } else { "phonon-limited" }
        );
    }
    let g = coupling_from_mode_volume(&bowtie_mode_volume())?;
    println!("\nbowtie cavity from mode volume: g = {:.3} meV ({:.3} ps⁻¹)", g.mev, g.ps_inv);
    Ok(())
}
