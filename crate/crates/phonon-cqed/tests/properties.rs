use num_complex::Complex64;
use phonon_cqed::bath::{BathSpec, MemoryKernel};
use phonon_cqed::ptensor::{build_process_tensor, influence_functional, influence_tensors, propagate_populations};
use phonon_cqed::run::RunConfig;
use phonon_cqed::system::{
    build_system_hamiltonian, initial_state, lindblad_trajectory, propagator, unvectorize, vectorize, Basis,
    SystemParams,
};
use phonon_cqed::varpol::solve_variational_displacement;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SystemParams> {
    (0.0..5.0f64, 0.01..5.0f64, 0.0..0.5f64, 0.0..0.5f64, -3.0..3.0f64)
        .prop_map(|(g, kappa, gamma, gs, delta)| SystemParams::new(g, kappa, gamma).with_gamma_star(gs).with_delta(delta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_hermitian(p in params()) {
        let h = build_system_hamiltonian(&p);
        prop_assert!((h - h.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn evolution_keeps_trace_and_hermiticity(p in params(), t in 0.0..5.0f64) {
        let rho = unvectorize(&(propagator(&p, t) * vectorize(&initial_state())));
        prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!((rho - rho.adjoint()).norm() < 1e-12);
        prop_assert!((0..3).all(|i| rho[(i, i)].re > -1e-12));
    }

    #[test]
    fn influence_entries(re in -1.0..1.0f64, im in -1.0..1.0f64, a in 0usize..9, b in 0usize..9) {
        let eta = Complex64::new(re, im);
        let kernel = MemoryKernel { dt: 0.1, eta: vec![eta, 0.5 * eta] };
        let tensors = influence_tensors(&kernel, &Basis::default());
        // λ = 1 on |0,X⟩ only
        let lam = |i: usize| if i == 2 { 1.0 } else { 0.0 };
        let (si, ri, sj, rj) = (lam(a / 3), lam(a % 3), lam(b / 3), lam(b % 3));
        let expected = (-(si - ri) * (eta * sj - eta.conj() * rj)).exp();
        prop_assert!((tensors[0].values[(a, b)] - expected).norm() < 1e-14);
        let f = influence_functional(&tensors, &[b, a]);
        let direct = tensors[0].values[(b, b)] * tensors[0].values[(a, a)] * tensors[1].values[(a, b)];
        prop_assert!((f - direct).norm() < 1e-14);
    }

    #[test]
    fn displacement_in_unit_interval(g in 0.0..12.0f64, t in 0.0..200.0f64, delta in -1.0..1.0f64, resonant: bool) {
        let spec = BathSpec::new(0.025, 2.23, t);
        let p = SystemParams::new(g, 0.5, 0.0).with_delta(delta);
        let sol = solve_variational_displacement(&spec, &p, resonant).unwrap();
        prop_assert!(sol.f.iter().all(|f| (0.0..=1.0).contains(f)));
        prop_assert!(sol.b_v > 0.0 && sol.b_v <= 1.0);
        prop_assert!(sol.r_v <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn markov_tensor_matches_lindblad(p in params(), k in 1usize..6, steps in 1usize..80) {
        let dt = 0.05;
        let pt = build_process_tensor(&MemoryKernel::zero(dt, k), &Basis::default(), steps, 1e-8).unwrap();
        let series = propagate_populations(&pt, &p, &initial_state()).unwrap();
        let exact = lindblad_trajectory(&p, &initial_state(), dt, steps);
        prop_assert_eq!(series.states.len(), exact.len());
        for (a, b) in series.states.iter().zip(&exact) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn config_echo_round_trips(
        g in 0.0..20.0f64,
        kappa in 0.01..20.0f64,
        t in 0.0..300.0f64,
        dt in proptest::option::of(0.001..0.1f64),
        values in proptest::collection::vec(0.1..10.0f64, 2..6),
    ) {
        let mut text = format!(
            "[task]\nkind = \"sweep\"\n[bath]\nalpha = 0.025\nxi = 2.23\ntemperature = {t}\n\
             [system]\ng = {g}\nkappa = {kappa}\ngamma = 0.01\n[sweep]\nvariable = \"g\"\nvalues = {values:?}\n"
        );
        if let Some(dt) = dt {
            text.push_str(&format!("[engine]\ndt = {dt}\n"));
        }
        let cfg = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&cfg.echo()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.hash(), again.hash());
    }
}
