use phonon_cqed::bath::{memory_kernel, BathSpec};
use phonon_cqed::ptensor::{build_process_tensor, propagate_populations, propagate_with, SystemPropagator};
use phonon_cqed::simulate::{Engine, EngineSettings};
use phonon_cqed::system::{initial_state, Basis, SystemParams};
use phonon_cqed::varpol::solve_variational_displacement;
use phonon_cqed::Error;

fn gaas(t: f64) -> BathSpec {
    BathSpec::new(0.025, 2.23, t)
}

fn engine(spec: &BathSpec, p: &SystemParams, dt: f64, cutoff: f64) -> Engine {
    let settings = EngineSettings {
        svd_cutoff: cutoff,
        ..EngineSettings::default()
    };
    Engine::new(spec, p, dt, &settings).unwrap()
}

#[test]
fn uncoupled_exciton_decays_at_gamma() {
    let spec = gaas(4.0);
    let p = SystemParams::new(0.0, 0.5, 0.1).with_gamma_star(0.05);
    let dt = 0.05;
    let pops = engine(&spec, &p, dt, 1e-8).populations(200).unwrap();
    for (i, x) in pops.exciton_population().iter().enumerate() {
        let exact = (-0.1 * dt * i as f64).exp();
        assert!((x - exact).abs() < 1e-6, "step {i}: {x} vs {exact}");
    }
}

#[test]
fn rabi_frequency_is_renormalised() {
    let spec = gaas(4.0);
    let base = SystemParams::new(1.1, 0.0, 0.0);
    let sol = solve_variational_displacement(&spec, &base, true).unwrap();
    let p = base.with_delta(sol.resonant_detuning());
    let dt = 0.02;
    let px = engine(&spec, &p, dt, 1e-8).populations(1000).unwrap().exciton_population();
    let maxima: Vec<f64> = (1..px.len() - 1)
        .filter(|&i| px[i] > px[i - 1] && px[i] >= px[i + 1])
        .map(|i| {
            // parabolic refinement of the maximum position
            let (a, b, c) = (px[i - 1], px[i], px[i + 1]);
            (i as f64 + 0.5 * (a - c) / (a - 2.0 * b + c)) * dt
        })
        .collect();
    assert!(maxima.len() >= 4, "{maxima:?}");
    let period = (maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64;
    let g_eff = std::f64::consts::PI / period;
    assert!(g_eff < p.g, "g_eff = {g_eff}");
    assert!((g_eff - sol.g_v).abs() < 0.1 * sol.g_v, "g_eff = {g_eff}, g_v = {}", sol.g_v);
}

#[test]
fn grid_consistency_and_decay() {
    let spec = gaas(4.0);
    let p = SystemParams::new(0.5, 1.0, 0.01);
    let e = engine(&spec, &p, 0.05, 1e-8);
    let steps = 800;
    let pops = e.populations(steps).unwrap();
    let grid = e.correlation_grid(steps).unwrap();
    let n = pops.photon_number();
    let mut max_g: f64 = 0.0;
    for i in 0..=steps {
        assert!((grid.g[(i, i)].re - n[i]).abs() < 1e-10);
        assert!(grid.g[(i, i)].im.abs() < 1e-8 && grid.g[(i, i)].re > -1e-8);
        for j in 0..=steps {
            assert!((grid.g[(i, j)] - grid.g[(j, i)].conj()).norm() < 1e-14);
            max_g = max_g.max(grid.g[(i, j)].norm());
        }
    }
    let tail = grid.g[(steps, 20)].norm() / max_g;
    assert!(tail < 1e-3, "tail {tail:e}");
}

#[test]
fn truncation_converges() {
    let spec = gaas(4.0);
    let p = SystemParams::new(1.0, 0.5, 0.0);
    let value = |cutoff: f64| {
        let px = engine(&spec, &p, 0.05, cutoff).populations(100).unwrap().exciton_population();
        px[100]
    };
    let xs: Vec<f64> = [1e-6, 1e-7, 1e-8, 1e-9, 1e-10].into_iter().map(value).collect();
    let diffs: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs[1..].iter().all(|&d| d < 0.25 * diffs[0]), "{xs:?} {diffs:?}");
}

#[test]
fn trotter_error_is_second_order() {
    let spec = gaas(4.0);
    let p = SystemParams::new(1.0, 0.5, 0.0);
    let t = 2.0;
    let final_px = |dt: f64| {
        let steps = (t / dt).round() as usize;
        *engine(&spec, &p, dt, 1e-11).populations(steps).unwrap().exciton_population().last().unwrap()
    };
    let reference = final_px(0.0125);
    let e1 = (final_px(0.1) - reference).abs();
    let e2 = (final_px(0.05) - reference).abs();
    let ratio = e1 / e2;
    assert!((3.0..=5.0).contains(&ratio), "errors {e1:e} {e2:e}, ratio {ratio}");
}

#[test]
fn physical_states_at_default_cutoff() {
    let spec = gaas(4.0);
    let p = SystemParams::new(1.1, 0.5, 0.01);
    let pops = engine(&spec, &p, 0.05, EngineSettings::default().svd_cutoff).populations(600).unwrap();
    assert!(pops.max_trace_error() < 1e-8);
    assert!(pops.max_hermiticity_error() < 1e-8);
    assert!(pops.min_eigenvalue() > -1e-6);
}

#[test]
fn timestep_mismatch_is_usage_error() {
    let kernel = memory_kernel(0.1, 3, &gaas(4.0)).unwrap();
    let pt = build_process_tensor(&kernel, &Basis::default(), 5, 1e-8).unwrap();
    let p = SystemParams::new(1.0, 0.5, 0.0);
    let prop = SystemPropagator::new(&p, 0.05).unwrap();
    assert!(matches!(propagate_with(&pt, &prop, &initial_state()), Err(Error::Usage(_))));
    assert!(propagate_populations(&pt, &p, &initial_state()).is_ok());
}
