//! Builds a process tensor, stores it on disk and reuses it for a second
//! parameter set with the same bath and timestep.

use phonon_cqed::bath::BathSpec;
use phonon_cqed::simulate::{simulate, EngineSettings};
use phonon_cqed::system::SystemParams;

fn main() -> phonon_cqed::Result<()> {
    let dir = std::env::temp_dir().join("phonon-cqed-example-cache");
    let spec = BathSpec::new(0.025, 2.23, 4.0);
    let settings = EngineSettings {
        dt: Some(0.05),
        steps: Some(400),
        cache_dir: Some(dir.clone()),
        ..EngineSettings::default()
    };
    for g in [0.5, 1.0] {
        let run = simulate(&spec, &SystemParams::new(g, 0.5, 0.01), &settings, false)?;
        let d = &run.diagnostics;
        println!(
            "g = {g}: K = {}, bond dimension {}, from cache: {}, build {:.3} s, final exciton population {:.5}",
            d.k_mem,
            d.bond_dim,
            d.from_cache,
            d.build_seconds,
            run.populations.exciton_population().last().unwrap()
        );
    }
    println!("cache directory: {}", dir.display());
    Ok(())
}
