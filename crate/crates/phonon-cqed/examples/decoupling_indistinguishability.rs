//! Indistinguishability and efficiency against g at 4 K, with the cavity
//! decay either fixed at 0.5 ps⁻¹ or pinned to κ = 4g. Pass `--quick` for a
//! coarse timestep.

use phonon_cqed::bath::{pure_dephasing_rate, BathSpec};
use phonon_cqed::observables::{indistinguishability, quantum_efficiency};
use phonon_cqed::simulate::{simulate, EngineSettings};
use phonon_cqed::system::SystemParams;
use phonon_cqed::varpol::solve_variational_displacement;

fn main() -> phonon_cqed::Result<()> {
    let quick = std::env::args().any(|a| a == "--quick");
    let spec = BathSpec::new(0.025, 2.23, 4.0);
    let gamma_star = pure_dephasing_rate(&spec)?;
    println!("{:>6} {:>10} {:>8} {:>8}", "g", "κ", "I", "η");
    for pinned in [false, true] {
        for g in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let kappa = if pinned { 4.0 * g } else { 0.5 };
            let p = SystemParams::new(g, kappa, 0.01).with_gamma_star(gamma_star);
            let sol = solve_variational_displacement(&spec, &p, true)?;
            let p = p.with_delta(sol.resonant_detuning());
            let fastest = g.max(kappa);
            let settings = EngineSettings {
                dt: Some(if quick { 0.2 } else { 0.1 } / fastest),
                max_steps: 8000,
                ..EngineSettings::default()
            };
            let run = simulate(&spec, &p, &settings, true)?;
            let i = indistinguishability(run.grid.as_ref().unwrap(), kappa)?;
            let eta = quantum_efficiency(&run.populations, kappa)?;
            println!("{g:>6} {kappa:>10} {i:>8.4} {eta:>8.4}");
        }
    }
    Ok(())
}
