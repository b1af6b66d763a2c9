//! Scenario runner: builds the input pulse for a configured target, drives
//! the emitters with it and writes CSV, JSON and SVG results.

pub mod builtin;
pub mod config;
pub mod export;
pub mod plot;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::Serialize;

pub use builtin::{builtin, builtin_names, builtins};
pub use config::{Check, Metric, Sampling, ScenarioConfig, TargetSpec};

use crate::dynamics::{evolve, output_spectrum, DriveSchedule, IntegratorConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    concurrence_curve, fidelity_curve, peak, perturb_positions, perturb_spectrum, storage_fidelity_curve, trial_rng,
    NoiseSpec,
};
use crate::model::{
    DirectionalSpectrum, EmitterArray, EmitterState, Quadrature, SpectralGrid, TargetState, Trajectory,
};
use crate::spectrum::{coarse_sample, time_reversed_input};
use export::{pair, round12, write_json, write_spectrum_csv, write_table_csv, write_trajectory_csv};

/// Command-line level overrides and output settings.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Replaces the noise seed of the scenario.
    pub seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials; `None` uses every core.
    pub jobs: Option<usize>,
    pub dt: Option<f64>,
    pub grid_points: Option<usize>,
    pub plots: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), seed: None, jobs: None, dt: None, grid_points: None, plots: true }
    }

    /// `config` with the overrides of these options applied.
    pub fn apply(&self, config: &ScenarioConfig) -> Result<ScenarioConfig> {
        let mut c = config.clone();
        if let Some(dt) = self.dt {
            c.integrator.dt = dt;
        }
        if let Some(n) = self.grid_points {
            c.grid.n_points = n;
        }
        if let (Some(seed), Some(noise)) = (self.seed, c.noise.as_mut()) {
            noise.seed = seed;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn scenario_dir(&self, config: &ScenarioConfig) -> PathBuf {
        self.out_dir.join(config.output.dir.as_deref().unwrap_or(&config.name))
    }
}

/// Everything computed for one nominal run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: ScenarioConfig,
    pub array: EmitterArray,
    pub target: TargetState,
    pub input: DirectionalSpectrum,
    pub trajectory: Trajectory,
    pub fidelity: Vec<f64>,
    /// Only for two emitters.
    pub concurrence: Option<Vec<f64>>,
    /// Fidelity of the metastable amplitudes; only with a Raman pulse.
    pub storage: Option<Vec<f64>>,
    /// Outgoing photon; absent for comb inputs.
    pub output: Option<DirectionalSpectrum>,
}

pub fn integrator(config: &ScenarioConfig) -> IntegratorConfig {
    IntegratorConfig {
        dt: config.integrator.dt,
        t_end: config.t_end,
        history: config.integrator.history,
        retardation: config.integrator.retardation,
        record_drive: false,
    }
}

/// Input photon for `config`, optionally reduced to a few components.
pub fn design_input(
    config: &ScenarioConfig,
    array: &EmitterArray,
    target: &TargetState,
) -> Result<DirectionalSpectrum> {
    let input = time_reversed_input(array, target, &config.spectral_grid()?, config.t0)?;
    match config.sampling {
        Sampling::None => Ok(input),
        Sampling::Coarse { n, extent } => coarse_sample(&input, n, (extent[0], extent[1])),
    }
}

fn drive(config: &ScenarioConfig, input: DirectionalSpectrum) -> DriveSchedule {
    let schedule = DriveSchedule::photon(input);
    match config.raman {
        Some(r) => schedule.with_raman(r),
        None => schedule,
    }
}

/// Symmetric grid of half-width about `half_width` sharing the spacing and
/// points of `input`.
fn output_grid(input: &SpectralGrid, half_width: f64) -> Result<SpectralGrid> {
    let step = input.step();
    let inner = 0.5 * (input.hi() - input.lo());
    let extra = ((half_width - inner) / step).round().max(0.0);
    let w = inner + extra * step;
    SpectralGrid::symmetric(w, input.len() + 2 * extra as usize)
}

pub fn simulate(config: &ScenarioConfig) -> Result<Simulation> {
    config.validate()?;
    let array = config.array()?;
    let target = config.target_state(&array)?;
    let input = design_input(config, &array, &target)?;
    let trajectory =
        evolve(&array, &drive(config, input.clone()), &EmitterState::ground(array.len()), &integrator(config))?;
    let fidelity = fidelity_curve(&trajectory, &target)?;
    let concurrence = if array.len() == 2 { Some(concurrence_curve(&trajectory)?) } else { None };
    let storage = match config.raman {
        Some(_) => Some(storage_fidelity_curve(&trajectory, &target)?),
        None => None,
    };
    let output = match input.quadrature {
        Quadrature::Trapezoid => {
            let grid = output_grid(&input.grid, config.output.spectrum_half_width)?;
            Some(output_spectrum(&trajectory, &array, Some(&input), &grid)?)
        }
        Quadrature::Comb => None,
    };
    Ok(Simulation { config: config.clone(), array, target, input, trajectory, fidelity, concurrence, storage, output })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub metric: String,
    /// `None` when the run does not produce this metric.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub passed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub emitters: usize,
    pub positions: Vec<f64>,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub peak_fidelity: f64,
    pub peak_time: f64,
    pub fidelity_at_t0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence_at_t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence_at_peak: Option<f64>,
    pub target_amplitudes: Vec<[f64; 2]>,
    pub amplitudes_at_t0: Vec<[f64; 2]>,
    pub final_population: f64,
    pub input_branch_norms: [f64; 2],
    /// Photon number left in the waveguide at the end of the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_photon_norm: Option<f64>,
    /// Output photon number plus final emitter population.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excitation_balance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_storage_fidelity: Option<f64>,
    pub checks: Vec<CheckOutcome>,
}

impl Summary {
    /// False when any evaluated check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }
}

impl Simulation {
    fn index_at(&self, t: f64) -> usize {
        self.trajectory.nearest_index(t).expect("non-empty trajectory")
    }

    pub fn peak(&self) -> (usize, f64) {
        peak(&self.fidelity).expect("non-empty trajectory")
    }

    pub fn amplitudes_at_t0(&self) -> &[C64] {
        &self.trajectory.states[self.index_at(self.config.t0)].a
    }

    pub fn branch_ratio(&self) -> f64 {
        let (r, l) = self.input.branch_norms();
        r.max(l) / r.min(l)
    }

    fn after<'a>(&'a self, values: &'a [f64], t: f64) -> impl Iterator<Item = f64> + 'a {
        values.iter().zip(&self.trajectory.times).filter(move |(_, s)| **s >= t).map(|(v, _)| *v)
    }

    /// Value of `metric` for this run; `mc_mean` supplies the Monte-Carlo mean.
    pub fn metric(&self, metric: &Metric, mc_mean: Option<f64>) -> Option<f64> {
        let i0 = self.index_at(self.config.t0);
        match *metric {
            Metric::PeakFidelity => Some(self.peak().1),
            Metric::FidelityAtT0 => Some(self.fidelity[i0]),
            Metric::ConcurrenceAtT0 => self.concurrence.as_ref().map(|c| c[i0]),
            Metric::ReAmplitudeAtT0 { emitter } => self.amplitudes_at_t0().get(emitter.checked_sub(1)?).map(|a| a.re),
            Metric::ImAmplitudeAtT0 { emitter } => self.amplitudes_at_t0().get(emitter.checked_sub(1)?).map(|a| a.im),
            Metric::MinStorageFidelityAfter { after } => self
                .after(self.storage.as_ref()?, after)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v)))),
            Metric::MaxFidelityAfter { after } => {
                self.after(&self.fidelity, after).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            }
            Metric::BranchRatio => Some(self.branch_ratio()),
            Metric::McMeanPeakFidelity => mc_mean,
        }
    }

    pub fn evaluate_checks(&self, mc_mean: Option<f64>) -> Vec<CheckOutcome> {
        self.config
            .checks
            .iter()
            .map(|c| {
                let value = self.metric(&c.metric, mc_mean);
                CheckOutcome {
                    metric: c.metric.label(),
                    value: value.map(round12),
                    min: c.min,
                    max: c.max,
                    passed: value.map(|v| c.accepts(v)),
                }
            })
            .collect()
    }

    pub fn summary(&self, mc_mean: Option<f64>) -> Summary {
        let i0 = self.index_at(self.config.t0);
        let (ip, peak) = self.peak();
        let last = self.trajectory.last().expect("non-empty trajectory");
        let population = last.population();
        let (r, l) = self.input.branch_norms();
        let out_norm = self.output.as_ref().map(|o| o.norm());
        Summary {
            name: self.config.name.clone(),
            emitters: self.array.len(),
            positions: self.config.geometry.positions.clone(),
            t0: self.config.t0,
            t_end: self.config.t_end,
            dt: self.config.integrator.dt,
            peak_fidelity: round12(peak),
            peak_time: round12(self.trajectory.times[ip]),
            fidelity_at_t0: round12(self.fidelity[i0]),
            concurrence_at_t0: self.concurrence.as_ref().map(|c| round12(c[i0])),
            concurrence_at_peak: self.concurrence.as_ref().map(|c| round12(c[ip])),
            target_amplitudes: self.target.amps().iter().map(|z| pair(*z)).collect(),
            amplitudes_at_t0: self.amplitudes_at_t0().iter().map(|z| pair(*z)).collect(),
            final_population: round12(population),
            input_branch_norms: [round12(r), round12(l)],
            output_photon_norm: out_norm.map(round12),
            excitation_balance: out_norm.map(|n| round12(n + population)),
            final_storage_fidelity: self.storage.as_ref().and_then(|s| s.last().copied()).map(round12),
            checks: self.evaluate_checks(mc_mean),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_amplitudes(sim: &Simulation, noisy: Option<&[C64]>, path: &Path) -> Result<()> {
    let mut header = vec!["emitter", "re_target", "im_target", "re_computed", "im_computed"];
    if noisy.is_some() {
        header.extend(["re_noisy", "im_noisy"]);
    }
    let rows: Vec<Vec<f64>> = (0..sim.array.len())
        .map(|j| {
            let (t, a) = (sim.target.amps()[j], sim.amplitudes_at_t0()[j]);
            let mut row = vec![(j + 1) as f64, t.re, t.im, a.re, a.im];
            if let Some(z) = noisy {
                row.extend([z[j].re, z[j].im]);
            }
            row
        })
        .collect();
    write_table_csv(&header, &rows, create(path)?)
}

fn write_nominal(sim: &Simulation, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_spectrum_csv(&sim.input, create(&dir.join("input_spectrum.csv"))?)?;
    if let Some(out) = &sim.output {
        write_spectrum_csv(out, create(&dir.join("output_spectrum.csv"))?)?;
    }
    let mut extra: Vec<(&str, &[f64])> = vec![("fidelity", &sim.fidelity)];
    if let Some(c) = &sim.concurrence {
        extra.push(("concurrence", c));
    }
    if let Some(s) = &sim.storage {
        extra.push(("storage_fidelity", s));
    }
    write_trajectory_csv(&sim.trajectory, &extra, create(&dir.join("trajectory.csv"))?)?;
    std::fs::write(dir.join("scenario.toml"), sim.config.to_toml_string()?)?;
    Ok(())
}

/// Result of `run_scenario`.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub summary: Summary,
}

/// Runs one scenario and writes its files into `<out_dir>/<name>/`.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let config = opts.apply(config)?;
    let sim = simulate(&config)?;
    let dir = opts.scenario_dir(&config);
    write_nominal(&sim, &dir)?;
    write_amplitudes(&sim, None, &dir.join("amplitudes.csv"))?;
    let summary = sim.summary(None);
    write_json(&summary, &dir.join("summary.json"))?;
    if opts.plots {
        plot::emit_plots(&dir)?;
    }
    Ok(RunReport { dir, summary })
}

/// Outcome of one noisy trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub peak_fidelity: f64,
    pub peak_time: f64,
    pub amplitudes_at_t0: Vec<C64>,
}

/// Runs trial number `trial` of the Monte-Carlo ensemble for `config`
/// around the nominal `input`.
pub fn run_trial(
    config: &ScenarioConfig,
    array: &EmitterArray,
    target: &TargetState,
    input: &DirectionalSpectrum,
    noise: &NoiseSpec,
    trial: usize,
) -> Result<Trial> {
    let mut rng = trial_rng(noise.seed, trial as u64);
    let spectrum = perturb_spectrum(input, noise, &mut rng)?;
    let moved = perturb_positions(array, noise, &mut rng)?;
    let traj = evolve(&moved, &drive(config, spectrum), &EmitterState::ground(array.len()), &integrator(config))?;
    let f = fidelity_curve(&traj, target)?;
    let (i, peak_fidelity) = peak(&f).expect("non-empty trajectory");
    let i0 = traj.nearest_index(config.t0).expect("non-empty trajectory");
    Ok(Trial { peak_fidelity, peak_time: traj.times[i], amplitudes_at_t0: traj.states[i0].a.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub spectrum_rel: f64,
    pub position_rel: f64,
    pub law: crate::metrics::NoiseLaw,
    pub nominal_peak_fidelity: f64,
    pub peak_fidelity: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub checks: Vec<CheckOutcome>,
}

impl McSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }
}

#[derive(Clone, Debug)]
pub struct McReport {
    pub dir: PathBuf,
    pub summary: Summary,
    pub mc: McSummary,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(n: usize, jobs: Option<usize>, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T>(n: usize, _jobs: Option<usize>, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}

/// Nominal run plus the noisy ensemble described by the scenario's `noise`.
/// Results do not depend on the number of worker threads.
pub fn run_monte_carlo(config: &ScenarioConfig, opts: &RunOptions) -> Result<McReport> {
    let config = opts.apply(config)?;
    let noise =
        config.noise.ok_or_else(|| Error::Config(format!("scenario {} has no [noise] section", config.name)))?;
    let sim = simulate(&config)?;
    let trials =
        map_trials(noise.trials, opts.jobs, |k| run_trial(&config, &sim.array, &sim.target, &sim.input, &noise, k))?;

    let peaks: Vec<f64> = trials.iter().map(|t| t.peak_fidelity).collect();
    let (mean, std) = mean_std(&peaks);
    let summary = sim.summary(Some(mean));
    let mc = McSummary {
        name: config.name.clone(),
        seed: noise.seed,
        trials: noise.trials,
        spectrum_rel: noise.spectrum_rel,
        position_rel: noise.position_rel,
        law: noise.law,
        nominal_peak_fidelity: summary.peak_fidelity,
        peak_fidelity: peaks.iter().map(|v| round12(*v)).collect(),
        mean: round12(mean),
        std: round12(std),
        min: round12(peaks.iter().copied().fold(f64::INFINITY, f64::min)),
        max: round12(peaks.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        checks: summary.checks.clone(),
    };

    let dir = opts.scenario_dir(&config);
    write_nominal(&sim, &dir)?;
    write_amplitudes(&sim, Some(&trials[0].amplitudes_at_t0), &dir.join("amplitudes.csv"))?;
    let rows: Vec<Vec<f64>> =
        trials.iter().enumerate().map(|(k, t)| vec![k as f64, t.peak_fidelity, t.peak_time]).collect();
    write_table_csv(&["trial", "peak_fidelity", "peak_time"], &rows, create(&dir.join("mc_fidelity.csv"))?)?;
    write_json(&summary, &dir.join("summary.json"))?;
    write_json(&mc, &dir.join("mc_summary.json"))?;
    if opts.plots {
        plot::emit_plots(&dir)?;
    }
    Ok(McReport { dir, summary, mc })
}
