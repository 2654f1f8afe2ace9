//! Halves the timestep and tightens the SVD cutoff until the
//! indistinguishability at g = 1.1 ps⁻¹ stops moving.

use phonon_cqed::bath::{pure_dephasing_rate, BathSpec};
use phonon_cqed::observables::indistinguishability;
use phonon_cqed::simulate::{converge, EngineSettings, LadderOptions};
use phonon_cqed::system::SystemParams;
use phonon_cqed::varpol::solve_variational_displacement;

fn main() -> phonon_cqed::Result<()> {
    let spec = BathSpec::new(0.025, 2.23, 4.0);
    let p = SystemParams::new(1.1, 0.5, 0.01).with_gamma_star(pure_dephasing_rate(&spec)?);
    let p = p.with_delta(solve_variational_displacement(&spec, &p, true)?.resonant_detuning());
    let settings = EngineSettings {
        dt: Some(0.08),
        max_steps: 4000,
        ..EngineSettings::default()
    };
    let opts = LadderOptions {
        relative_tolerance: 1e-3,
        max_rungs: 3,
        ..LadderOptions::default()
    };
    let (_, ladder) = converge(&spec, &p, &settings, true, &opts, |run| {
        indistinguishability(run.grid.as_ref().unwrap(), run.params.kappa)
    })?;
    for r in &ladder.rungs {
        println!(
            "dt {:<7} cutoff {:.0e}  steps {:>5}  D {:>3}  I = {:.6}  ({:.1} s)",
            r.dt, r.svd_cutoff, r.steps, r.bond_dim, r.value, r.seconds
        );
    }
    println!("converged: {}, last change {:.2e}", ladder.converged, ladder.last_change().unwrap_or(f64::NAN));
    Ok(())
}
