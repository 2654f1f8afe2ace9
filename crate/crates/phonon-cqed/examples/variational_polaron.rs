//! Variational displacement, renormalised coupling and polaron shift as the
//! light-matter coupling grows past the phonon cutoff.

use phonon_cqed::bath::BathSpec;
use phonon_cqed::system::SystemParams;
use phonon_cqed::varpol::solve_variational_displacement;

fn main() -> phonon_cqed::Result<()> {
    let spec = BathSpec::new(0.025, 2.23, 4.0);
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}  seed", "g", "B_v", "g_v", "R_v", "2g_v/ξ");
    for g in [0.05, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
        let sol = solve_variational_displacement(&spec, &SystemParams::new(g, 0.5, 0.01), true)?;
        println!(
            "{g:>6} {:>9.5} {:>9.5} {:>9.5} {:>9.3}  {:?}",
            sol.b_v,
            sol.g_v,
            sol.r_v,
            2.0 * sol.g_v / spec.xi,
            sol.seed
        );
    }

    // slow modes stay undisplaced once the polaritons split beyond them
    let sol = solve_variational_displacement(&spec, &SystemParams::new(1.1, 0.5, 0.01), true)?;
    println!("\nF(ν) at g = 1.1 ps⁻¹");
    for nu in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        println!("{nu:>6} {:>9.5}", sol.displacement_at(nu, &spec));
    }
    Ok(())
}
