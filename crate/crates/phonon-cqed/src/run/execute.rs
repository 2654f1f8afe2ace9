//! Running a resolved configuration and writing its outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Detuning, GammaStar, Observable, RunConfig, SweepVariable, SystemTemplate, Task};
use super::presets::{bowtie_mode_volume, find_preset, list_presets, MaterialPreset};
use crate::bath::{pure_dephasing_rate, spectral_density, BathSpec};
use crate::error::{Error, Result};
use crate::observables::{
    default_line_window, emission_spectrum, find_peaks, indistinguishability, polariton_asymmetry,
    quantum_efficiency, sideband_fraction, spectral_features, Asymmetry, FeatureKind, Spectrum, PEAK_PROMINENCE,
    SIDEBAND_MIN_FRACTION,
};
use crate::rates::{
    approximate_polariton_rate, coupling_from_mode_volume, epsilon_contributions, purcell_quantities,
};
use crate::simulate::{converge, simulate, EmissionRun, Ladder, RunDiagnostics};
use crate::system::SystemParams;
use crate::units::ps_inv_to_mev;
use crate::varpol::{solve_variational_displacement, VariationalSolution};

/// Environment variable that sets the worker count when `--workers` is
/// not given.
pub const WORKERS_ENV: &str = "PHONON_CQED_WORKERS";

/// Command-line overrides applied on top of a run file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub converge: bool,
    /// Accepted for interface stability; nothing in a run is random.
    pub seedless: bool,
}

/// `--workers`, else the environment variable, else the number of logical
/// cores.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(Error::Validation(vec!["--workers must be at least 1".into()]))
        } else {
            Ok(n)
        };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Validation(vec![format!(
                "{WORKERS_ENV} must be a positive integer, got \"{v}\""
            )])),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Bath and system template of one sweep point before `γ*` and `δ` are
/// resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointInput {
    pub index: usize,
    pub value: Option<f64>,
    pub bath: BathSpec,
    pub system: SystemTemplate,
}

/// Every point of the run in output order; a single point without a sweep.
pub fn sweep_inputs(cfg: &RunConfig) -> Vec<PointInput> {
    let Some(sw) = &cfg.sweep else {
        return vec![PointInput {
            index: 0,
            value: None,
            bath: cfg.bath,
            system: cfg.system,
        }];
    };
    sw.values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            let (mut bath, mut system) = (cfg.bath, cfg.system);
            match sw.variable {
                SweepVariable::G => system.g = v,
                SweepVariable::Kappa => system.kappa = v,
                SweepVariable::Gamma => system.gamma = v,
                SweepVariable::GammaStar => system.gamma_star = GammaStar::Value(v),
                SweepVariable::Delta => system.delta = Detuning::Value(v),
                SweepVariable::Temperature => bath.temperature = v,
                SweepVariable::Alpha => bath.alpha = v,
                SweepVariable::Mu => bath.mu = v,
                SweepVariable::Xi => {
                    bath.nu_max *= v / bath.xi;
                    bath.xi = v;
                }
            }
            if sw.pin_kappa_to_4g {
                system.kappa = 4.0 * system.g;
            }
            PointInput {
                index,
                value: Some(v),
                bath,
                system,
            }
        })
        .collect()
}

/// Resolves `γ*` and `δ`. With a resonant detuning the variational solution
/// that fixed it is returned too.
pub fn resolve_params(bath: &BathSpec, t: &SystemTemplate) -> Result<(SystemParams, Option<VariationalSolution>)> {
    let gamma_star = match t.gamma_star {
        GammaStar::Auto => pure_dephasing_rate(bath)?,
        GammaStar::Value(v) => v,
    };
    let p = SystemParams::new(t.g, t.kappa, t.gamma).with_gamma_star(gamma_star);
    match t.delta {
        Detuning::Value(d) => Ok((p.with_delta(d), None)),
        Detuning::Resonant => {
            let sol = solve_variational_displacement(bath, &p, true)?;
            Ok((p.with_delta(sol.resonant_detuning()), Some(sol)))
        }
    }
}

/// Result of one sweep point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub index: usize,
    pub value: Option<f64>,
    pub params: Option<SystemParams>,
    /// Named scalar results in CSV column order.
    pub columns: Vec<(&'static str, f64)>,
    pub error: Option<String>,
    pub diagnostics: Option<RunDiagnostics>,
    pub ladder: Option<Ladder>,
    pub seconds: f64,
}

impl PointOutcome {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Files written by a run together with its manifest.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    pub points: Vec<PointOutcome>,
    pub manifest: Value,
}

impl RunReport {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| !p.ok()).count()
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<(String, String, u64)>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Writer> {
        std::fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        let digest = hex::encode(Sha256::digest(contents.as_bytes()));
        self.files.push((name.to_string(), digest, contents.len() as u64));
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write(name, &out)
    }
}

/// Fixed-width scientific notation used in every CSV.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn params_json(p: &SystemParams) -> Value {
    json!({"g": p.g, "kappa": p.kappa, "gamma": p.gamma, "gamma_star": p.gamma_star, "delta": p.delta})
}

fn diagnostics_json(d: &RunDiagnostics) -> Value {
    json!({
        "dt": d.dt,
        "steps": d.steps,
        "k_mem": d.k_mem,
        "bond_dim": d.bond_dim,
        "max_layer_bond": d.max_layer_bond,
        "discarded_weight": d.discarded_weight,
        "trace_correction": d.trace_correction,
        "max_trace_error": d.max_trace_error,
        "min_eigenvalue": d.min_eigenvalue,
        "decayed": d.decayed,
        "from_cache": d.from_cache,
        "build_seconds": d.build_seconds,
        "propagate_seconds": d.propagate_seconds,
        "grid_seconds": d.grid_seconds,
    })
}

fn ladder_json(l: &Ladder) -> Value {
    json!({
        "converged": l.converged,
        "last_change": l.last_change(),
        "rungs": l.rungs.iter().map(|r| json!({
            "dt": r.dt, "svd_cutoff": r.svd_cutoff, "steps": r.steps, "bond_dim": r.bond_dim,
            "k_mem": r.k_mem, "value": r.value, "seconds": r.seconds,
        })).collect::<Vec<_>>(),
    })
}

fn observable_value(run: &EmissionRun, o: Observable) -> Result<f64> {
    match o {
        Observable::Indistinguishability => {
            let grid = run
                .grid
                .as_ref()
                .ok_or_else(|| Error::Usage("indistinguishability needs the correlation grid".into()))?;
            indistinguishability(grid, run.params.kappa)
        }
        Observable::Efficiency => quantum_efficiency(&run.populations, run.params.kappa),
    }
}

/// One engine run, refined through the convergence ladder when asked.
fn engine_run(
    cfg: &RunConfig,
    refine: bool,
    bath: &BathSpec,
    p: &SystemParams,
    with_grid: bool,
    target: Observable,
) -> Result<(EmissionRun, Option<Ladder>)> {
    if refine {
        let (run, ladder) = converge(bath, p, &cfg.engine, with_grid, &cfg.ladder, |r| observable_value(r, target))?;
        if !ladder.converged {
            log::warn!(
                "convergence ladder stopped after {} rungs, last change {:.2e}",
                ladder.rungs.len(),
                ladder.last_change().unwrap_or(f64::NAN)
            );
        }
        Ok((run, Some(ladder)))
    } else {
        Ok((simulate(bath, p, &cfg.engine, with_grid)?, None))
    }
}

fn varpol_columns(sol: &VariationalSolution, p: &SystemParams) -> Vec<(&'static str, f64)> {
    vec![
        ("g", p.g),
        ("delta", sol.delta),
        ("b_v", sol.b_v),
        ("r_v", sol.r_v),
        ("g_v", sol.g_v),
        ("delta_v", sol.delta_v),
        ("eta_v", sol.eta_v),
        ("free_energy", sol.free_energy),
        ("iterations", sol.iterations as f64),
        ("residual", sol.residual),
    ]
}

fn compute_point(cfg: &RunConfig, refine: bool, input: &PointInput) -> PointOutcome {
    let start = Instant::now();
    let mut out = PointOutcome {
        index: input.index,
        value: input.value,
        params: None,
        columns: Vec::new(),
        error: None,
        diagnostics: None,
        ladder: None,
        seconds: 0.0,
    };
    let result = (|| -> Result<()> {
        let (p, resonant) = resolve_params(&input.bath, &input.system)?;
        out.params = Some(p);
        match cfg.task {
            Task::Varpol => {
                let sol = match resonant {
                    Some(sol) => sol,
                    None => solve_variational_displacement(&input.bath, &p, false)?,
                };
                out.columns = varpol_columns(&sol, &p);
            }
            Task::Rates => {
                let sol = resonant.expect("rates run in the resonant frame");
                let b = epsilon_contributions(&sol, &input.bath, &p)?;
                let j = spectral_density(2.0 * sol.g_v, &input.bath.with_temperature(sol.temperature()))?;
                out.columns = vec![
                    ("g", p.g),
                    ("b_v", sol.b_v),
                    ("g_v", sol.g_v),
                    ("j_2g_v", j),
                    ("eps_zz", b.eps_zz),
                    ("eps_yy", b.eps_yy),
                    ("eps_zy", b.eps_zy),
                    ("gamma_a", b.gamma_a),
                    ("gamma_a_approx", approximate_polariton_rate(&sol, &input.bath)?),
                ];
            }
            Task::Sweep => {
                let sw = cfg.sweep.as_ref().expect("sweep task has a sweep");
                let with_grid = sw.observables.contains(&Observable::Indistinguishability);
                let (run, ladder) = engine_run(cfg, refine, &input.bath, &p, with_grid, sw.observables[0])?;
                out.columns = vec![
                    ("g", p.g),
                    ("kappa", p.kappa),
                    ("delta", p.delta),
                    ("gamma_star", p.gamma_star),
                ];
                for &o in &sw.observables {
                    out.columns.push((o.name(), observable_value(&run, o)?));
                }
                out.columns.push(("purcell_efficiency", purcell_quantities(&p)?.efficiency));
                if let Some(sol) = &resonant {
                    out.columns.push(("b_v", sol.b_v));
                }
                out.diagnostics = Some(run.diagnostics);
                out.ladder = ladder;
            }
            _ => unreachable!("single-point tasks are run separately"),
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::error!("point {} failed: {e}", input.index);
        out.error = Some(e.to_string());
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

/// Runs the configured task and writes its outputs plus `manifest.json`.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let workers = resolve_workers(opts.workers)?;
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let refine = cfg.converge || opts.converge;
    let mut w = Writer::new(&dir)?;
    w.write("resolved_config.toml", &cfg.echo())?;
    let start = Instant::now();
    log::info!("task {} with {workers} worker(s), output in {}", cfg.task.name(), dir.display());

    let (points, summary) = match cfg.task {
        Task::RegimeMap => (Vec::new(), regime_map(cfg, &mut w)?),
        Task::Spectrum | Task::Indistinguishability | Task::Efficiency => {
            let (point, summary) = single_engine_task(cfg, refine, &mut w)?;
            (vec![point], summary)
        }
        Task::Varpol | Task::Rates | Task::Sweep => {
            let inputs = sweep_inputs(cfg);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
            let points: Vec<PointOutcome> =
                pool.install(|| inputs.par_iter().map(|i| compute_point(cfg, refine, i)).collect());
            let summary = write_points(cfg, &points, &mut w)?;
            if cfg.task == Task::Varpol && cfg.sweep.is_none() && points[0].ok() {
                write_displacement(cfg, &mut w)?;
            }
            (points, summary)
        }
    };
    if cfg.output.json() {
        w.write("summary.json", &(serde_json::to_string_pretty(&summary).expect("valid JSON") + "\n"))?;
    }

    let bonds: Vec<usize> = points.iter().filter_map(|p| p.diagnostics.as_ref().map(|d| d.bond_dim)).collect();
    let failed = points.iter().filter(|p| !p.ok()).count();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "git": env!("PHONON_CQED_GIT_DESCRIBE"),
        "task": cfg.task.name(),
        "config_hash": cfg.hash(),
        "workers": workers,
        "converge": refine,
        "seedless": opts.seedless,
        "seconds": start.elapsed().as_secs_f64(),
        "bond_dimension": {
            "max": bonds.iter().max(),
            "mean": if bonds.is_empty() { None } else { Some(bonds.iter().sum::<usize>() as f64 / bonds.len() as f64) },
        },
        "failed_points": failed,
        "points": points.iter().map(|p| json!({
            "index": p.index,
            "value": p.value,
            "status": if p.ok() { "ok" } else { "failed" },
            "error": p.error,
            "params": p.params.as_ref().map(params_json),
            "diagnostics": p.diagnostics.as_ref().map(diagnostics_json),
            "ladder": p.ladder.as_ref().map(ladder_json),
            "seconds": p.seconds,
        })).collect::<Vec<_>>(),
        "outputs": w.files.iter().map(|(f, h, n)| json!({"file": f, "sha256": h, "bytes": n})).collect::<Vec<_>>(),
    });
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("valid JSON") + "\n",
    )?;
    let files = w.files.iter().map(|(f, _, _)| dir.join(f)).chain([dir.join("manifest.json")]).collect();
    Ok(RunReport {
        directory: dir,
        files,
        points,
        manifest,
    })
}

fn write_points(cfg: &RunConfig, points: &[PointOutcome], w: &mut Writer) -> Result<Value> {
    let name = format!("{}.csv", cfg.task.name());
    let variable = cfg.sweep.as_ref().map(|s| s.variable.name());
    // failed points have no columns; take the header from any success
    let names: Vec<&str> = points
        .iter()
        .find(|p| p.ok())
        .map(|p| p.columns.iter().map(|c| c.0).collect())
        .unwrap_or_default();
    if cfg.output.csv() {
        let mut header = vec!["sweep_value"];
        header.extend(&names);
        header.push("status");
        let rows = points.iter().map(|p| {
            let mut row = vec![p.value.map_or("nan".to_string(), num)];
            for (k, _) in names.iter().enumerate() {
                row.push(p.columns.get(k).map_or("nan".to_string(), |c| num(c.1)));
            }
            row.push(if p.ok() { "ok" } else { "failed" }.to_string());
            row
        });
        w.csv(&name, &header, rows)?;
    }
    Ok(json!({
        "task": cfg.task.name(),
        "sweep_variable": variable,
        "points": points.iter().map(|p| {
            let mut m = serde_json::Map::new();
            m.insert("sweep_value".into(), json!(p.value));
            for (k, v) in &p.columns {
                m.insert((*k).into(), json!(v));
            }
            m.insert("status".into(), json!(if p.ok() { "ok" } else { "failed" }));
            Value::Object(m)
        }).collect::<Vec<_>>(),
    }))
}

fn write_displacement(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let (p, resonant) = resolve_params(&cfg.bath, &cfg.system)?;
    let sol = match resonant {
        Some(s) => s,
        None => solve_variational_displacement(&cfg.bath, &p, false)?,
    };
    if cfg.output.csv() {
        let rows = sol.nu_grid.iter().zip(&sol.f).map(|(&nu, &f)| vec![num(nu), num(f)]);
        w.csv("displacement.csv", &["nu_ps_inv", "f"], rows)?;
    }
    Ok(())
}

fn single_engine_task(cfg: &RunConfig, refine: bool, w: &mut Writer) -> Result<(PointOutcome, Value)> {
    let start = Instant::now();
    let bath = &cfg.bath;
    let (p, resonant) = resolve_params(bath, &cfg.system)?;
    let target = match cfg.task {
        Task::Efficiency => Observable::Efficiency,
        _ => Observable::Indistinguishability,
    };
    let with_grid = cfg.task != Task::Efficiency || cfg.output.correlation_grid;
    let (run, ladder) = engine_run(cfg, refine, bath, &p, with_grid, target)?;
    let kappa = p.kappa;
    let mut summary = serde_json::Map::new();
    summary.insert("task".into(), json!(cfg.task.name()));
    summary.insert("params".into(), params_json(&p));
    let eta = quantum_efficiency(&run.populations, kappa);
    summary.insert("efficiency".into(), json!(eta.as_ref().ok()));
    let mut columns = vec![("efficiency", *eta.as_ref().unwrap_or(&f64::NAN))];
    if let Ok(q) = purcell_quantities(&p) {
        summary.insert("purcell_rate".into(), json!(q.gamma));
        summary.insert("purcell_efficiency".into(), json!(q.efficiency));
    }
    if let Some(sol) = &resonant {
        summary.insert(
            "variational".into(),
            json!({"b_v": sol.b_v, "r_v": sol.r_v, "g_v": sol.g_v, "eta_v": sol.eta_v}),
        );
    }
    if cfg.output.csv() {
        let pops = &run.populations;
        let rows = pops
            .times()
            .into_iter()
            .zip(pops.exciton_population())
            .zip(pops.photon_number())
            .map(|((t, x), n)| vec![num(t), num(x), num(n)]);
        w.csv("populations.csv", &["t_ps", "exciton", "photon"], rows)?;
    }
    if let Some(grid) = &run.grid {
        let indist = indistinguishability(grid, kappa)?;
        summary.insert("indistinguishability".into(), json!(indist));
        columns.push(("indistinguishability", indist));
        if cfg.output.correlation_grid && cfg.output.csv() {
            let n = grid.len();
            let rows = (0..n).flat_map(|i| {
                (0..n).map(move |j| {
                    let v = grid.g[(i, j)];
                    vec![num(i as f64 * grid.dt), num(j as f64 * grid.dt), num(v.re), num(v.im)]
                })
            });
            w.csv("correlation_grid.csv", &["t1_ps", "t2_ps", "re", "im"], rows)?;
        }
        if cfg.task == Task::Spectrum {
            let s = emission_spectrum(grid, kappa, cfg.padding)?;
            summary.insert("spectrum".into(), spectrum_summary(&s, bath, &p, resonant.as_ref()));
            if cfg.output.csv() {
                let rows = s.omega.iter().zip(&s.values).map(|(&o, &v)| vec![num(o), num(v)]);
                w.csv("spectrum.csv", &["omega_ps_inv", "S"], rows)?;
            }
        }
    }
    if let Some(l) = &ladder {
        summary.insert("ladder".into(), ladder_json(l));
        if cfg.output.csv() {
            let rows = l.rungs.iter().enumerate().map(|(k, r)| {
                vec![
                    k.to_string(),
                    num(r.dt),
                    num(r.svd_cutoff),
                    r.steps.to_string(),
                    r.bond_dim.to_string(),
                    r.k_mem.to_string(),
                    num(r.value),
                ]
            });
            w.csv(
                "ladder.csv",
                &["rung", "dt", "svd_cutoff", "steps", "bond_dim", "k_mem", "value"],
                rows,
            )?;
        }
    }
    summary.insert("diagnostics".into(), diagnostics_json(&run.diagnostics));
    let point = PointOutcome {
        index: 0,
        value: None,
        params: Some(p),
        columns,
        error: None,
        diagnostics: Some(run.diagnostics),
        ladder,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((point, Value::Object(summary)))
}

fn spectrum_summary(s: &Spectrum, bath: &BathSpec, p: &SystemParams, sol: Option<&VariationalSolution>) -> Value {
    let peaks = find_peaks(s, PEAK_PROMINENCE);
    let features = spectral_features(s, 2.0 * bath.xi, SIDEBAND_MIN_FRACTION);
    let asymmetry = match sol {
        Some(sol) => polariton_asymmetry(s, sol),
        None => Asymmetry::NotApplicable("detuning is not resonant".into()),
    };
    let sideband = if peaks.len() == 1 {
        default_line_window(p).and_then(|win| sideband_fraction(s, win))
    } else {
        Err(Error::Usage(format!("{} peaks; sideband split needs one line", peaks.len())))
    };
    json!({
        "weight_over_2pi": s.norm / (2.0 * std::f64::consts::PI),
        "clipped": s.clipped,
        "peaks": peaks.iter().map(|p| json!({"omega": p.omega, "height": p.height})).collect::<Vec<_>>(),
        "features": features.iter().map(|f| json!({
            "kind": match f.kind { FeatureKind::Line => "line", FeatureKind::Sideband => "sideband" },
            "omega": f.omega,
            "height": f.height,
            "weight": f.weight,
        })).collect::<Vec<_>>(),
        "asymmetry": match &asymmetry {
            Asymmetry::Resolved { value, .. } => json!(value),
            Asymmetry::NotApplicable(why) => json!({"not_applicable": why}),
        },
        "sideband": match sideband {
            Ok(sb) => json!({"fraction": sb.fraction, "red_fraction": sb.red_fraction, "line_fwhm": sb.line.fwhm}),
            Err(e) => json!({"not_applicable": e.to_string()}),
        },
    })
}

fn regime_map(cfg: &RunConfig, w: &mut Writer) -> Result<Value> {
    let selected: Vec<&MaterialPreset> = if cfg.presets.is_empty() {
        list_presets().iter().collect()
    } else {
        cfg.presets.iter().filter_map(|n| find_preset(n)).collect()
    };
    if cfg.output.csv() {
        let rows = selected.iter().map(|p| {
            vec![
                field(p.name),
                num(p.hbar_g_mev),
                num(p.hbar_xi_mev),
                num(p.g()),
                num(p.xi()),
                num(p.splitting_over_cutoff()),
                u8::from(p.decoupled()).to_string(),
                field(p.source),
            ]
        });
        w.csv(
            "regime-map.csv",
            &[
                "name",
                "g_mev",
                "xi_mev",
                "g_ps_inv",
                "xi_ps_inv",
                "two_g_over_xi",
                "decoupled",
                "source",
            ],
            rows,
        )?;
    }
    let bowtie = coupling_from_mode_volume(&bowtie_mode_volume())?;
    Ok(json!({
        "task": "regime-map",
        "presets": selected.iter().map(|p| json!({
            "name": p.name, "g_mev": p.hbar_g_mev, "xi_mev": p.hbar_xi_mev,
            "two_g_over_xi": p.splitting_over_cutoff(), "decoupled": p.decoupled(),
        })).collect::<Vec<_>>(),
        "bowtie_mode_volume_g_mev": ps_inv_to_mev(bowtie.ps_inv),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> RunConfig {
        let base = "[bath]\nalpha = 0.025\nxi = 2.23\ntemperature = 4\n\n[system]\ng = 1.0\nkappa = 0.5\ngamma = 0.01\n";
        RunConfig::parse(&format!("{base}{extra}")).unwrap()
    }

    #[test]
    fn pinned_kappa() {
        let c = config("[task]\nkind = \"sweep\"\n[sweep]\nvariable = \"g\"\nvalues = [0.1, 0.37, 2.5]\npin_kappa_to_4g = true\n");
        let pts = sweep_inputs(&c);
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert_eq!(p.system.kappa, 4.0 * p.system.g);
        }
        assert_eq!(pts[1].value, Some(0.37));
    }

    #[test]
    fn auto_and_resonant_resolution() {
        let c = config("[task]\nkind = \"varpol\"\n");
        let (p, sol) = resolve_params(&c.bath, &c.system).unwrap();
        let sol = sol.unwrap();
        assert_eq!(p.delta, -sol.r_v);
        assert_eq!(p.gamma_star, pure_dephasing_rate(&c.bath).unwrap());
        let fixed = SystemTemplate {
            gamma_star: GammaStar::Value(0.0),
            delta: Detuning::Value(0.3),
            ..c.system
        };
        let (p, sol) = resolve_params(&c.bath, &fixed).unwrap();
        assert!(sol.is_none());
        assert_eq!((p.gamma_star, p.delta), (0.0, 0.3));
    }

    #[test]
    fn xi_sweep_rescales_frequency_range() {
        let c = config("[task]\nkind = \"varpol\"\n[sweep]\nvariable = \"xi\"\nvalues = [1.0, 4.0]\n");
        for p in sweep_inputs(&c) {
            assert!((p.bath.nu_max - 8.0 * p.bath.xi).abs() < 1e-12);
        }
    }

    #[test]
    fn worker_resolution() {
        assert_eq!(resolve_workers(Some(3)).unwrap(), 3);
        assert!(resolve_workers(Some(0)).is_err());
    }

    #[test]
    fn csv_fields() {
        assert_eq!(num(0.5), "5.000000000000e-1");
        assert_eq!(field("a, b"), "\"a, b\"");
        assert_eq!(field("plain"), "plain");
    }
}
