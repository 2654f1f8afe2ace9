//! End-to-end emission runs: memory kernel, tensor train, populations and
//! the two-time photon correlation grid, plus automatic refinement.

use std::path::PathBuf;
use std::time::Instant;

use crate::bath::{memory_kernel_for_tolerance, BathSpec, MemoryKernel};
use crate::error::{Error, Result};
use crate::ptensor::{
    build_process_tensor_with, cache, propagate_with, two_time_correlation_grid_with, BuildOptions, CorrelationGrid,
    PopulationSeries, ProcessTensor, SystemPropagator,
};
use crate::system::{initial_state, Basis, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineSettings {
    /// Timestep in ps; derived from the fastest rate when absent.
    pub dt: Option<f64>,
    /// Window length in ps; `steps` takes precedence.
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub svd_cutoff: f64,
    /// Memory lags are kept while `|η_k|/|η_0|` exceeds this.
    pub memory_tolerance: f64,
    pub max_bond: usize,
    /// Cap on automatically chosen window lengths.
    pub max_steps: usize,
    /// The automatic window ends once the remaining excitation drops below
    /// this fraction of the peak photon number.
    pub decay_threshold: f64,
    /// Hard limit on memory lags.
    pub max_memory_steps: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            dt: None,
            t_max: None,
            steps: None,
            svd_cutoff: 1e-8,
            memory_tolerance: 1e-7,
            max_bond: 512,
            max_steps: 2000,
            decay_threshold: 1e-4,
            max_memory_steps: 20_000,
            cache_dir: None,
        }
    }
}

impl EngineSettings {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                errs.push(format!("engine.dt must be positive, got {dt}"));
            }
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) {
                errs.push(format!("engine.t_max must be positive, got {t}"));
            }
        }
        if self.steps == Some(0) {
            errs.push("engine.steps must be at least 1".into());
        }
        if !(self.svd_cutoff >= 0.0 && self.svd_cutoff < 1.0) {
            errs.push(format!("engine.svd_cutoff must lie in [0, 1), got {}", self.svd_cutoff));
        }
        if !(self.memory_tolerance > 0.0 && self.memory_tolerance < 1.0) {
            errs.push(format!(
                "engine.memory_tolerance must lie in (0, 1), got {}",
                self.memory_tolerance
            ));
        }
        if self.max_bond == 0 {
            errs.push("engine.max_bond must be at least 1".into());
        }
        if self.max_steps == 0 {
            errs.push("engine.max_steps must be at least 1".into());
        }
        if !(self.decay_threshold > 0.0 && self.decay_threshold < 1.0) {
            errs.push(format!(
                "engine.decay_threshold must lie in (0, 1), got {}",
                self.decay_threshold
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// `0.1 / max(g, κ, ξ, |δ|)`, with `ξ` only counted when the bath couples.
pub fn default_dt(spec: &BathSpec, p: &SystemParams) -> f64 {
    let xi = if spec.alpha > 0.0 { spec.xi } else { 0.0 };
    let fastest = [p.g, p.kappa, xi, p.delta.abs(), p.gamma].into_iter().fold(0.0, f64::max);
    if fastest > 0.0 {
        0.1 / fastest
    } else {
        0.1
    }
}

/// Tensor train and free propagator for one parameter set.
#[derive(Debug, Clone)]
pub struct Engine {
    pub pt: ProcessTensor,
    pub propagator: SystemPropagator,
    pub k_mem: usize,
    pub from_cache: bool,
    pub build_seconds: f64,
}

impl Engine {
    pub fn new(spec: &BathSpec, p: &SystemParams, dt: f64, settings: &EngineSettings) -> Result<Self> {
        spec.validate()?;
        p.validate()?;
        settings.validate()?;
        let start = Instant::now();
        let kernel = if spec.alpha == 0.0 {
            MemoryKernel::zero(dt, 1)
        } else {
            memory_kernel_for_tolerance(dt, settings.memory_tolerance, spec, settings.max_memory_steps)?
        };
        let k_mem = kernel.k_mem();
        let key = cache::cache_key(spec, dt, k_mem, settings.svd_cutoff, settings.memory_tolerance);
        let cached = settings
            .cache_dir
            .as_ref()
            .map(|d| cache::cache_path(d, &key))
            .filter(|path| path.exists())
            .and_then(|path| match cache::load(&path) {
                Ok(pt) => Some(pt),
                Err(e) => {
                    log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                    None
                }
            });
        let from_cache = cached.is_some();
        let pt = match cached {
            Some(pt) => pt,
            None => {
                let opts = BuildOptions {
                    svd_cutoff: settings.svd_cutoff,
                    max_bond: settings.max_bond,
                };
                let pt = build_process_tensor_with(&kernel, &Basis::default(), k_mem.max(1), &opts)?;
                if let Some(dir) = &settings.cache_dir {
                    cache::save(&pt, &cache::cache_path(dir, &key))?;
                }
                pt
            }
        };
        Ok(Engine {
            pt,
            propagator: SystemPropagator::new(p, dt)?,
            k_mem,
            from_cache,
            build_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.pt.dt
    }

    pub fn populations(&self, steps: usize) -> Result<PopulationSeries> {
        propagate_with(&self.pt.with_steps(steps), &self.propagator, &initial_state())
    }

    pub fn correlation_grid(&self, steps: usize) -> Result<CorrelationGrid> {
        two_time_correlation_grid_with(&self.pt.with_steps(steps), &self.propagator, &initial_state())
    }
}

/// First step at which `ρ₁₁ + ρ_XX` has fallen below `threshold·max ρ₁₁`.
pub fn decay_step(series: &PopulationSeries, threshold: f64) -> Option<usize> {
    let photons = series.photon_number();
    let excitons = series.exciton_population();
    let mut peak = 0.0f64;
    for i in 0..photons.len() {
        peak = peak.max(photons[i]);
        if peak > 0.0 && photons[i] + excitons[i] < threshold * peak {
            return Some(i);
        }
    }
    None
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    pub dt: f64,
    pub steps: usize,
    pub k_mem: usize,
    pub bond_dim: usize,
    pub max_layer_bond: usize,
    pub discarded_weight: f64,
    pub trace_correction: f64,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    /// Whether the window reached the decay threshold.
    pub decayed: bool,
    pub from_cache: bool,
    pub build_seconds: f64,
    pub propagate_seconds: f64,
    pub grid_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EmissionRun {
    pub spec: BathSpec,
    pub params: SystemParams,
    pub populations: PopulationSeries,
    pub grid: Option<CorrelationGrid>,
    pub diagnostics: RunDiagnostics,
}

/// Populations and, with `with_grid`, the correlation grid for one
/// parameter set starting from `|0,X⟩`.
pub fn simulate(spec: &BathSpec, p: &SystemParams, settings: &EngineSettings, with_grid: bool) -> Result<EmissionRun> {
    let dt = settings.dt.unwrap_or_else(|| default_dt(spec, p));
    let engine = Engine::new(spec, p, dt, settings)?;
    simulate_with(&engine, spec, p, settings, with_grid)
}

pub fn simulate_with(
    engine: &Engine,
    spec: &BathSpec,
    p: &SystemParams,
    settings: &EngineSettings,
    with_grid: bool,
) -> Result<EmissionRun> {
    let dt = engine.dt();
    let start = Instant::now();
    let explicit = settings
        .steps
        .or_else(|| settings.t_max.map(|t| (t / dt).round().max(1.0) as usize));
    let (populations, steps, decayed) = match explicit {
        Some(steps) => {
            let series = engine.populations(steps)?;
            let decayed = decay_step(&series, settings.decay_threshold).is_some();
            (series, steps, decayed)
        }
        None => {
            let mut series = engine.populations(settings.max_steps)?;
            match decay_step(&series, settings.decay_threshold) {
                Some(i) => {
                    let steps = i.max(1);
                    series.states.truncate(steps + 1);
                    (series, steps, true)
                }
                None => {
                    log::warn!(
                        "excitation not decayed after {} steps ({:.2} ps); raise engine.max_steps",
                        settings.max_steps,
                        settings.max_steps as f64 * dt
                    );
                    (series, settings.max_steps, false)
                }
            }
        }
    };
    let propagate_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let grid = if with_grid {
        Some(engine.correlation_grid(steps)?)
    } else {
        None
    };
    let diagnostics = RunDiagnostics {
        dt,
        steps,
        k_mem: engine.k_mem,
        bond_dim: engine.pt.bond_dim(),
        max_layer_bond: engine.pt.max_layer_bond(),
        discarded_weight: engine.pt.stats.discarded_weight,
        trace_correction: engine.pt.stats.trace_correction,
        max_trace_error: populations.max_trace_error(),
        min_eigenvalue: populations.min_eigenvalue(),
        decayed,
        from_cache: engine.from_cache,
        build_seconds: engine.build_seconds,
        propagate_seconds,
        grid_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(EmissionRun {
        spec: spec.clone(),
        params: *p,
        populations,
        grid,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRung {
    pub dt: f64,
    pub svd_cutoff: f64,
    pub steps: usize,
    pub bond_dim: usize,
    pub k_mem: usize,
    pub value: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub rungs: Vec<LadderRung>,
    pub converged: bool,
}

impl Ladder {
    /// Relative change between the last two rungs.
    pub fn last_change(&self) -> Option<f64> {
        let n = self.rungs.len();
        if n < 2 {
            return None;
        }
        let (a, b) = (self.rungs[n - 2].value, self.rungs[n - 1].value);
        Some((b - a).abs() / b.abs().max(f64::MIN_POSITIVE))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOptions {
    pub relative_tolerance: f64,
    pub max_rungs: usize,
    /// Factor applied to the SVD cutoff at each rung.
    pub cutoff_factor: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions {
            relative_tolerance: 1e-3,
            max_rungs: 4,
            cutoff_factor: 0.1,
        }
    }
}

/// Repeats a run with `dt` halved and the SVD cutoff tightened until the
/// observable changes by less than the tolerance. The time window of the
/// first rung is kept fixed. Returns the finest run and the ladder.
pub fn converge<F>(
    spec: &BathSpec,
    p: &SystemParams,
    settings: &EngineSettings,
    with_grid: bool,
    opts: &LadderOptions,
    observable: F,
) -> Result<(EmissionRun, Ladder)>
where
    F: Fn(&EmissionRun) -> Result<f64>,
{
    let mut s = settings.clone();
    s.dt = Some(settings.dt.unwrap_or_else(|| default_dt(spec, p)));
    let mut rungs = Vec::new();
    let mut last: Option<EmissionRun> = None;
    for level in 0..opts.max_rungs.max(1) {
        let start = Instant::now();
        let run = simulate(spec, p, &s, with_grid)?;
        let value = observable(&run)?;
        let d = &run.diagnostics;
        rungs.push(LadderRung {
            dt: d.dt,
            svd_cutoff: s.svd_cutoff,
            steps: d.steps,
            bond_dim: d.bond_dim,
            k_mem: d.k_mem,
            value,
            seconds: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "rung {level}: dt = {:.4e}, cutoff = {:.1e}, D = {}, value = {value:.8}",
            d.dt,
            s.svd_cutoff,
            d.bond_dim
        );
        if level == 0 {
            s.t_max = Some(d.dt * d.steps as f64);
            s.steps = None;
        }
        last = Some(run);
        let ladder = Ladder {
            rungs: rungs.clone(),
            converged: false,
        };
        if ladder.last_change().is_some_and(|c| c < opts.relative_tolerance) {
            return Ok((
                last.expect("at least one rung"),
                Ladder {
                    converged: true,
                    ..ladder
                },
            ));
        }
        s.dt = s.dt.map(|dt| 0.5 * dt);
        s.svd_cutoff *= opts.cutoff_factor;
    }
    Ok((
        last.expect("at least one rung"),
        Ladder {
            rungs,
            converged: false,
        },
    ))
}
