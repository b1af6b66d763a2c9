//! Browser demo. Each exported function takes a JSON request and returns a
//! JSON reply; the plain Rust versions are usable (and tested) natively.

use pulseprep::dynamics::{evolve, DriveSchedule, IntegratorConfig, RamanPulse};
use pulseprep::metrics::{fidelity_curve, peak, storage_fidelity_curve};
use pulseprep::model::{EmitterState, Trajectory};
use pulseprep::scenario::{design_input, ScenarioConfig};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Longest curve handed to the page.
const MAX_POINTS: usize = 600;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    /// Emitter positions in wavelengths.
    pub positions: Vec<f64>,
    /// symmetric, antisymmetric or timed_dicke.
    pub target: String,
    pub t0: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub gamma_free: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_t_end() -> f64 {
    30.0
}

fn default_points() -> usize {
    1001
}

fn default_dt() -> f64 {
    2e-3
}

impl Request {
    fn config(&self) -> Result<ScenarioConfig, String> {
        let text = format!(
            "name = \"web\"\nt0 = {}\nt_end = {}\ngamma_free = {}\n[geometry]\npositions = {:?}\n[target]\nkind = {:?}\n[grid]\nhalf_width = 10.0\nn_points = {}\n[integrator]\ndt = {}\n",
            self.t0, self.t_end, self.gamma_free, self.positions, self.target, self.grid_points, self.dt
        );
        ScenarioConfig::from_toml_str(&text).map_err(|e| e.to_string())
    }
}

#[derive(Serialize)]
pub struct Pulse {
    pub omega: Vec<f64>,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub branch_norms: [f64; 2],
}

#[derive(Serialize)]
pub struct Preparation {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// |a_j(t)|² per emitter.
    pub populations: Vec<Vec<f64>>,
    pub peak_fidelity: f64,
    pub peak_time: f64,
}

#[derive(Serialize)]
pub struct Transfer {
    pub times: Vec<f64>,
    pub excited: Vec<f64>,
    pub stored: Vec<f64>,
    pub raman: Vec<f64>,
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

fn thin(values: &[f64], step: usize) -> Vec<f64> {
    values.iter().step_by(step).copied().collect()
}

/// Input photon spectrum |β̃(δω)|² in both directions.
pub fn design(req: &Request) -> Result<Pulse, String> {
    let c = req.config()?;
    let array = c.array().map_err(|e| e.to_string())?;
    let target = c.target_state(&array).map_err(|e| e.to_string())?;
    let input = design_input(&c, &array, &target).map_err(|e| e.to_string())?;
    let s = stride(input.grid.len());
    let (r, l) = input.branch_norms();
    Ok(Pulse {
        omega: thin(&input.grid.points(), s),
        right: input.right.iter().step_by(s).map(|z| z.norm_sqr()).collect(),
        left: input.left.iter().step_by(s).map(|z| z.norm_sqr()).collect(),
        branch_norms: [r, l],
    })
}

fn run(c: &ScenarioConfig, raman: Option<RamanPulse>) -> Result<(Trajectory, pulseprep::model::TargetState), String> {
    let array = c.array().map_err(|e| e.to_string())?;
    let target = c.target_state(&array).map_err(|e| e.to_string())?;
    let input = design_input(c, &array, &target).map_err(|e| e.to_string())?;
    let mut schedule = DriveSchedule::photon(input);
    if let Some(r) = raman {
        schedule = schedule.with_raman(r);
    }
    let traj =
        evolve(&array, &schedule, &EmitterState::ground(array.len()), &IntegratorConfig::new(c.integrator.dt, c.t_end))
            .map_err(|e| e.to_string())?;
    Ok((traj, target))
}

/// Drives the emitters with the designed pulse and tracks the fidelity.
pub fn prepare(req: &Request) -> Result<Preparation, String> {
    let c = req.config()?;
    let (traj, target) = run(&c, None)?;
    let f = fidelity_curve(&traj, &target).map_err(|e| e.to_string())?;
    let (i, peak_fidelity) = peak(&f).ok_or("empty trajectory")?;
    let s = stride(traj.len());
    let populations =
        (0..target.len()).map(|j| traj.states.iter().step_by(s).map(|st| st.a[j].norm_sqr()).collect()).collect();
    Ok(Preparation {
        times: thin(&traj.times, s),
        fidelity: thin(&f, s),
        populations,
        peak_fidelity,
        peak_time: traj.times[i],
    })
}

/// Prepares the target and maps it onto the metastable level with a
/// Gaussian π pulse centred at `t_pi`.
pub fn transfer(req: &Request, t_pi: f64, delta: f64) -> Result<Transfer, String> {
    let c = req.config()?;
    let pulse = RamanPulse::new(t_pi, delta).map_err(|e| e.to_string())?;
    let (traj, target) = run(&c, Some(pulse))?;
    let fa = fidelity_curve(&traj, &target).map_err(|e| e.to_string())?;
    let fc = storage_fidelity_curve(&traj, &target).map_err(|e| e.to_string())?;
    let s = stride(traj.len());
    let peak = pulse.peak();
    Ok(Transfer {
        times: thin(&traj.times, s),
        excited: thin(&fa, s),
        stored: thin(&fc, s),
        raman: traj.times.iter().step_by(s).map(|t| pulse.at(*t) / peak).collect(),
    })
}

fn respond<T: Serialize>(out: Result<T, String>) -> Result<String, JsError> {
    let value = out.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

fn parse(json: &str) -> Result<Request, JsError> {
    serde_json::from_str(json).map_err(|e| JsError::new(&format!("bad request: {e}")))
}

#[wasm_bindgen]
pub fn design_pulse(request: &str) -> Result<String, JsError> {
    respond(design(&parse(request)?))
}

#[wasm_bindgen]
pub fn simulate_preparation(request: &str) -> Result<String, JsError> {
    respond(prepare(&parse(request)?))
}

#[wasm_bindgen]
pub fn raman_transfer(request: &str, t_pi: f64, delta: f64) -> Result<String, JsError> {
    respond(transfer(&parse(request)?, t_pi, delta))
}
