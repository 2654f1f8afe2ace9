//! Vacuum Rabi doublet at g = 1.1 ps⁻¹: phonon relaxation from the upper to
//! the lower polariton makes the red peak taller at low temperature.

use phonon_cqed::bath::{pure_dephasing_rate, BathSpec};
use phonon_cqed::observables::{emission_spectrum, find_peaks, polariton_asymmetry, PEAK_PROMINENCE};
use phonon_cqed::simulate::{simulate, EngineSettings};
use phonon_cqed::system::SystemParams;
use phonon_cqed::varpol::solve_variational_displacement;

fn main() -> phonon_cqed::Result<()> {
    for t in [4.0, 150.0] {
        let spec = BathSpec::new(0.025, 2.23, t);
        let p = SystemParams::new(1.1, 0.5, 0.01).with_gamma_star(pure_dephasing_rate(&spec)?);
        let sol = solve_variational_displacement(&spec, &p, true)?;
        let p = p.with_delta(sol.resonant_detuning());
        let settings = EngineSettings {
            dt: Some(0.02),
            max_steps: 4000,
            ..EngineSettings::default()
        };
        let run = simulate(&spec, &p, &settings, true)?;
        let s = emission_spectrum(run.grid.as_ref().unwrap(), p.kappa, 4)?;
        println!("T = {t} K, expected polaritons at {:.3} ± {:.3} ps⁻¹", sol.r_v, 0.5 * sol.eta_v);
        for pk in find_peaks(&s, PEAK_PROMINENCE) {
            println!("  peak at {:.3} ps⁻¹, height {:.3}", pk.omega, pk.height);
        }
        match polariton_asymmetry(&s, &sol).value() {
            Some(a) => println!("  A = {a:.3}"),
            None => println!("  polaritons not resolved"),
        }
    }
    Ok(())
}
