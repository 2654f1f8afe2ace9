//! Low-Q Purcell regime (4g < κ, κ ≫ ξ): a zero-phonon line carrying a
//! fraction B_v² of the emission and a red phonon sideband. Writes the
//! spectrum to `purcell_spectrum.csv`.

use std::io::Write;

use phonon_cqed::bath::{pure_dephasing_rate, BathSpec};
use phonon_cqed::observables::{
    default_line_window, emission_spectrum, quantum_efficiency, sideband_fraction, spectral_features,
    SIDEBAND_MIN_FRACTION,
};
use phonon_cqed::simulate::{simulate, EngineSettings};
use phonon_cqed::system::SystemParams;
use phonon_cqed::varpol::solve_variational_displacement;

fn main() -> phonon_cqed::Result<()> {
    let spec = BathSpec::new(0.025, 2.23, 4.0);
    let p = SystemParams::new(2.0, 20.0, 0.01).with_gamma_star(pure_dephasing_rate(&spec)?);
    let sol = solve_variational_displacement(&spec, &p, true)?;
    let p = p.with_delta(sol.resonant_detuning());
    let settings = EngineSettings {
        dt: Some(0.005),
        max_steps: 8000,
        ..EngineSettings::default()
    };
    let run = simulate(&spec, &p, &settings, true)?;
    let s = emission_spectrum(run.grid.as_ref().unwrap(), p.kappa, 4)?;

    let eta = quantum_efficiency(&run.populations, p.kappa)?;
    let sb = sideband_fraction(&s, default_line_window(&p)?)?;
    println!("η = {eta:.4}, spectral weight/2π = {:.4}", s.norm / (2.0 * std::f64::consts::PI));
    println!(
        "sideband fraction {:.4} ({:.0}% red), 1 − B_v² = {:.4}",
        sb.fraction,
        100.0 * sb.red_fraction,
        1.0 - sol.b_v * sol.b_v
    );
    for f in spectral_features(&s, 2.0 * spec.xi, SIDEBAND_MIN_FRACTION) {
        println!("{:?} at ω = {:.3} ps⁻¹, weight {:.4}", f.kind, f.omega, f.weight);
    }

    let mut out = std::io::BufWriter::new(std::fs::File::create("purcell_spectrum.csv")?);
    writeln!(out, "omega_ps_inv,S")?;
    for (w, v) in s.omega.iter().zip(&s.values) {
        if w.abs() < 4.0 * spec.xi {
            writeln!(out, "{w:.6e},{v:.6e}")?;
        }
    }
    Ok(())
}
