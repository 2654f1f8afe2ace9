//! Drives a declarative run file from code: a small pinned-κ efficiency
//! sweep written to a temporary directory.

use phonon_cqed::run::{execute, RunConfig, RunOptions};

const RUN: &str = r#"
[task]
kind = "sweep"

[bath]
alpha = 0.025
xi = 2.23
temperature = 4

[system]
g = 1.0
kappa = 0.5
gamma = 0.01

[sweep]
variable = "g"
values = [0.5, 1.0, 2.0]
pin_kappa_to_4g = true
observables = ["efficiency"]
"#;

fn main() -> phonon_cqed::Result<()> {
    let cfg = RunConfig::parse(RUN)?;
    print!("{}", cfg.echo());
    let opts = RunOptions {
        out: Some(std::env::temp_dir().join("phonon-cqed-example-run")),
        ..RunOptions::default()
    };
    let report = execute(&cfg, &opts)?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    print!("{}", std::fs::read_to_string(report.directory.join("sweep.csv"))?);
    Ok(())
}
