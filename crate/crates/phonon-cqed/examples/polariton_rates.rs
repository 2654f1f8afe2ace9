//! Phonon-induced polariton relaxation rate Γ_A and its three contributions
//! as a function of g at 4 K.

use phonon_cqed::bath::{spectral_density, BathSpec};
use phonon_cqed::rates::epsilon_contributions;
use phonon_cqed::system::SystemParams;
use phonon_cqed::varpol::solve_variational_displacement;

fn main() -> phonon_cqed::Result<()> {
    let spec = BathSpec::new(0.025, 2.23, 4.0);
    println!("{:>6} {:>11} {:>11} {:>11} {:>11} {:>11}", "g", "ε_ZZ", "ε_YY", "ε_ZY", "Γ_A", "J(2g_v)");
    for k in 0..=24 {
        let g = 0.25 + 0.5 * k as f64;
        let p = SystemParams::new(g, 0.5, 0.0);
        let sol = solve_variational_displacement(&spec, &p, true)?;
        let r = epsilon_contributions(&sol, &spec, &p)?;
        println!(
            "{g:>6.2} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            r.eps_zz,
            r.eps_yy,
            r.eps_zy,
            r.gamma_a,
            spectral_density(2.0 * sol.g_v, &spec)?
        );
    }
    Ok(())
}
