//! Markovian pure-dephasing rate γ* of the exciton against temperature.

use phonon_cqed::bath::{pure_dephasing_rate, BathSpec};

fn main() -> phonon_cqed::Result<()> {
    println!("{:>8} {:>14}", "T (K)", "γ* (ps⁻¹)");
    for t in [0.0, 4.0, 10.0, 20.0, 50.0, 77.0, 150.0, 300.0] {
        let rate = pure_dephasing_rate(&BathSpec::new(0.025, 2.2, t))?;
        println!("{t:>8} {rate:>14.4e}");
    }
    Ok(())
}
