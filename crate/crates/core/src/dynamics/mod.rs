//! Driven emitter dynamics as a delay differential equation.
//!
//! ```text
//! ȧ_j = b_j(t) − Σ_l (Γ/2) e^{i k_a r_jl} a_l(t − τ_jl) − (γ/2) a_j − iΩ(t) c_j
//! ċ_j = −iΩ(t) a_j
//! ```
//!
//! with the photon drive
//! b_j(t) = −i √(Γ/4π) ∫ dδω e^{−iδω t} [β̃_R e^{i k r_j} + β̃_L e^{−i k r_j}],
//! k = k_a + δω/v_g.

mod drive;

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DirectionalSpectrum, EmitterArray, EmitterState, SpectralGrid, Trajectory};

use drive::DriveTable;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Minimum number of stored samples per trajectory.
pub const MIN_SAMPLES: usize = 2000;

/// Gaussian Raman pulse Ω(t) = √π/(2δ) e^{−(t−t_pi)²/δ²}, with area π/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanPulse {
    pub t_pi: f64,
    pub delta: f64,
}

impl RamanPulse {
    pub fn new(t_pi: f64, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) || !t_pi.is_finite() {
            return Err(Error::InvalidParameter(format!("Raman pulse needs finite t_pi and δ > 0, got δ = {delta}")));
        }
        Ok(Self { t_pi, delta })
    }

    pub fn peak(&self) -> f64 {
        PI.sqrt() / (2.0 * self.delta)
    }

    pub fn at(&self, t: f64) -> f64 {
        let x = (t - self.t_pi) / self.delta;
        self.peak() * (-x * x).exp()
    }
}

/// The injected photon and the optional classical control pulse.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DriveSchedule {
    pub spectrum: Option<DirectionalSpectrum>,
    pub raman: Option<RamanPulse>,
}

impl DriveSchedule {
    pub fn photon(spectrum: DirectionalSpectrum) -> Self {
        Self { spectrum: Some(spectrum), raman: None }
    }

    pub fn with_raman(mut self, raman: RamanPulse) -> Self {
        self.raman = Some(raman);
        self
    }
}

/// Value of delayed amplitudes before t = 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryPolicy {
    /// Emitters were in the ground state (preparation runs).
    #[default]
    Zero,
    /// The initial amplitudes extend backwards in time.
    HoldInitial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub history: HistoryPolicy,
    /// When false all delays τ_jl are set to zero.
    pub retardation: bool,
    /// Keep the drive b_j(t) alongside the stored samples.
    pub record_drive: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, history: HistoryPolicy::Zero, retardation: true, record_drive: false }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, array: &EmitterArray) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!("t_end = {} must be at least dt", self.t_end)));
        }
        if self.retardation {
            if let Some(min_delay) = array.min_delay() {
                if min_delay < self.dt {
                    return Err(Error::StepSize { dt: self.dt, min_delay });
                }
            }
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::new(1e-3, 30.0)
    }
}

/// b_j(t) by direct quadrature over the spectrum grid.
pub fn drive_field(schedule: &DriveSchedule, array: &EmitterArray, t: f64) -> Vec<C64> {
    let n = array.len();
    let Some(spec) = &schedule.spectrum else {
        return vec![C64::default(); n];
    };
    let p = array.params();
    let pre = -I * (p.gamma_wg / (4.0 * PI)).sqrt();
    array
        .positions()
        .iter()
        .map(|&r| {
            let mut acc = C64::default();
            for m in 0..spec.grid.len() {
                let dw = spec.grid.point(m);
                let k = p.k_a() + dw / p.v_g;
                let right = spec.right[m] * C64::from_polar(1.0, k * r);
                let left = spec.left[m] * C64::from_polar(1.0, -k * r);
                acc += spec.weight(m) * C64::from_polar(1.0, -dw * t) * (right + left);
            }
            pre * acc
        })
        .collect()
}

/// Ω(t), zero without a Raman pulse.
pub fn raman_amplitude(schedule: &DriveSchedule, t: f64) -> f64 {
    schedule.raman.map_or(0.0, |r| r.at(t))
}

/// b_j at the half-step times k·dt/2, k = 0..=2·steps.
fn tabulate_drive(schedule: &DriveSchedule, array: &EmitterArray, dt: f64, steps: usize) -> Vec<Vec<C64>> {
    let n = array.len();
    let count = 2 * steps + 1;
    let Some(spec) = &schedule.spectrum else {
        return vec![vec![C64::default(); n]; count];
    };
    let table = DriveTable::new(spec);
    let p = array.params();
    let pre = -I * (p.gamma_wg / (4.0 * PI)).sqrt();
    let phases: Vec<(C64, C64, f64)> = array
        .positions()
        .iter()
        .map(|&r| (C64::from_polar(1.0, p.k_a() * r), C64::from_polar(1.0, -p.k_a() * r), r / p.v_g))
        .collect();
    (0..count)
        .map(|k| {
            let t = 0.5 * dt * k as f64;
            phases
                .iter()
                .map(|&(pr, pl, delay)| pre * (pr * table.right.eval(t - delay) + pl * table.left.eval(t + delay)))
                .collect()
        })
        .collect()
}

struct Coupling {
    /// (Γ/2) e^{i k_a r_jl}, row-major.
    coef: Vec<C64>,
    /// τ_jl / dt, row-major.
    lag: Vec<f64>,
}

/// Integrates the emitter amplitudes from `init` (taken at t = 0) to
/// `config.t_end` with fixed-step RK4.
pub fn evolve(
    array: &EmitterArray,
    schedule: &DriveSchedule,
    init: &EmitterState,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate(array)?;
    let n = array.len();
    if init.a.len() != n || init.c.len() != n {
        return Err(Error::Length { expected: n, got: init.a.len().min(init.c.len()) });
    }
    let p = *array.params();
    let dt = config.dt;
    let steps = config.steps();
    let drive = tabulate_drive(schedule, array, dt, steps);

    let mut coupling = Coupling { coef: Vec::with_capacity(n * n), lag: Vec::with_capacity(n * n) };
    for j in 0..n {
        for l in 0..n {
            coupling.coef.push(C64::from_polar(0.5 * p.gamma_wg, p.k_a() * array.distance(j, l)));
            coupling.lag.push(if config.retardation { array.delay(j, l) / dt } else { 0.0 });
        }
    }
    let before = match config.history {
        HistoryPolicy::Zero => vec![C64::default(); n],
        HistoryPolicy::HoldInitial => init.a.clone(),
    };

    let stride = (steps / MIN_SAMPLES).max(1);
    let mut out = Trajectory {
        times: Vec::with_capacity(steps / stride + 2),
        states: Vec::with_capacity(steps / stride + 2),
        drive: config.record_drive.then(Vec::new),
    };
    let record = |step: usize, a: &[C64], c: &[C64], out: &mut Trajectory| {
        let t = step as f64 * dt;
        out.times.push(t);
        out.states.push(EmitterState { t, a: a.to_vec(), c: c.to_vec() });
        if let Some(d) = out.drive.as_mut() {
            d.push(drive[2 * step].clone());
        }
    };

    // a at every step, flattened, for delayed lookups
    let mut history: Vec<C64> = Vec::with_capacity((steps + 1) * n);
    history.extend_from_slice(&init.a);
    let mut a = init.a.clone();
    let mut c = init.c.clone();
    record(0, &a, &c, &mut out);

    let delayed = |history: &[C64], x: f64, l: usize| -> C64 {
        if x <= -1.0 {
            return before[l];
        }
        let i = x.floor();
        let th = x - i;
        let lo = if i < 0.0 { before[l] } else { history[i as usize * n + l] };
        if th == 0.0 {
            return lo;
        }
        let hi = history[(i as usize + 1) * n + l];
        lo + (hi - lo) * th
    };

    let rhs = |step: usize,
               theta: f64,
               half: usize,
               a: &[C64],
               c: &[C64],
               history: &[C64],
               da: &mut [C64],
               dc: &mut [C64]| {
        let t = (step as f64 + theta) * dt;
        let omega = raman_amplitude(schedule, t);
        let b = &drive[2 * step + half];
        for j in 0..n {
            let mut acc = b[j] - 0.5 * p.gamma_free * a[j] - I * omega * c[j];
            for l in 0..n {
                let lag = coupling.lag[j * n + l];
                let al = if lag == 0.0 { a[l] } else { delayed(history, step as f64 + theta - lag, l) };
                acc -= coupling.coef[j * n + l] * al;
            }
            da[j] = acc;
            dc[j] = -I * omega * a[j];
        }
    };

    let mut k = [vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]];
    let mut kc = k.clone();
    let mut ya = vec![C64::default(); n];
    let mut yc = vec![C64::default(); n];

    for step in 0..steps {
        let [k1, k2, k3, k4] = &mut k;
        let [c1, c2, c3, c4] = &mut kc;
        rhs(step, 0.0, 0, &a, &c, &history, k1, c1);
        for j in 0..n {
            ya[j] = a[j] + 0.5 * dt * k1[j];
            yc[j] = c[j] + 0.5 * dt * c1[j];
        }
        rhs(step, 0.5, 1, &ya, &yc, &history, k2, c2);
        for j in 0..n {
            ya[j] = a[j] + 0.5 * dt * k2[j];
            yc[j] = c[j] + 0.5 * dt * c2[j];
        }
        rhs(step, 0.5, 1, &ya, &yc, &history, k3, c3);
        for j in 0..n {
            ya[j] = a[j] + dt * k3[j];
            yc[j] = c[j] + dt * c3[j];
        }
        rhs(step, 1.0, 2, &ya, &yc, &history, k4, c4);
        for j in 0..n {
            a[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            c[j] += dt / 6.0 * (c1[j] + 2.0 * c2[j] + 2.0 * c3[j] + c4[j]);
            if !(a[j].re.is_finite() && a[j].im.is_finite() && c[j].re.is_finite() && c[j].im.is_finite()) {
                return Err(Error::NonFinite { t: (step + 1) as f64 * dt, emitter: j });
            }
        }
        history.extend_from_slice(&a);
        if (step + 1) % stride == 0 || step + 1 == steps {
            record(step + 1, &a, &c, &mut out);
        }
    }
    Ok(out)
}

/// Outgoing photon spectrum after the run, sampled on `grid`:
/// β̃_dir(δω, t_end) = β̃_dir(δω, 0) − i√(Γ/4π) Σ_j e^{−i k_dir r_j} ∫ e^{iδω t} a_j(t) dt.
///
/// The time integral treats a_j as piecewise linear between stored samples
/// and integrates the exponential exactly on each interval. `initial` must
/// share the spacing of `grid` and lie on it; the rest of `grid` starts empty.
pub fn output_spectrum(
    traj: &Trajectory,
    array: &EmitterArray,
    initial: Option<&DirectionalSpectrum>,
    grid: &SpectralGrid,
) -> Result<DirectionalSpectrum> {
    if traj.len() < 2 {
        return Err(Error::Empty("trajectory needs at least two samples".into()));
    }
    let n = array.len();
    let mut out = DirectionalSpectrum::zeros(*grid);
    if let Some(init) = initial {
        if (init.grid.step() - grid.step()).abs() > 1e-9 * grid.step() {
            return Err(Error::GridMismatch(format!(
                "input spacing {} differs from output spacing {}",
                init.grid.step(),
                grid.step()
            )));
        }
        for i in 0..init.grid.len() {
            let x = init.grid.point(i);
            let idx = grid
                .index_of(x)
                .ok_or_else(|| Error::GridMismatch(format!("input point {x} is not on the output grid")))?;
            out.right[idx] = init.right[i];
            out.left[idx] = init.left[i];
        }
    }
    let p = *array.params();
    let pre = -I * (p.gamma_wg / (4.0 * PI)).sqrt();

    let point = |idx: usize| -> (C64, C64) {
        let dw = grid.point(idx);
        let mut integral = vec![C64::default(); n];
        for s in 0..traj.len() - 1 {
            let t0 = traj.times[s];
            let h = traj.times[s + 1] - t0;
            let (f0, f1) = filon_weights(dw * h);
            let base = C64::from_polar(h, dw * t0);
            let (a0, a1) = (&traj.states[s].a, &traj.states[s + 1].a);
            for j in 0..n {
                integral[j] += base * (f0 * a0[j] + f1 * a1[j]);
            }
        }
        let k = p.k_a() + dw / p.v_g;
        let mut right = C64::default();
        let mut left = C64::default();
        for (r, x) in array.positions().iter().zip(&integral) {
            right += C64::from_polar(1.0, -k * r) * x;
            left += C64::from_polar(1.0, k * r) * x;
        }
        (pre * right, pre * left)
    };

    #[cfg(feature = "parallel")]
    let values: Vec<(C64, C64)> = {
        use rayon::prelude::*;
        (0..grid.len()).into_par_iter().map(point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<(C64, C64)> = (0..grid.len()).map(point).collect();

    for (i, (r, l)) in values.into_iter().enumerate() {
        out.right[i] += r;
        out.left[i] += l;
    }
    Ok(out)
}

/// (∫₀¹ (1−s) e^{ius} ds, ∫₀¹ s e^{ius} ds).
fn filon_weights(u: f64) -> (C64, C64) {
    if u.abs() < 1e-3 {
        let u2 = u * u;
        let f1 = C64::new(0.5 - u2 / 8.0, u / 3.0 - u2 * u / 30.0);
        let f0 = C64::new(0.5 - u2 / 24.0, u / 6.0 - u2 * u / 120.0);
        return (f0, f1);
    }
    let e = C64::from_polar(1.0, u);
    let iu = I * u;
    let f1 = e / iu + (e - 1.0) / (u * u);
    let f0 = (e - 1.0) / iu - f1;
    (f0, f1)
}
