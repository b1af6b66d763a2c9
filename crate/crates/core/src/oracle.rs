//! Brute-force reference: emitters coupled to an explicit, finite set of
//! waveguide modes, integrated without eliminating the field.
//!
//! Each mode ω_m exists in both propagation directions and couples to
//! emitter j with g_m e^{±i k_m r_j}, g_m = √(Γ w_m / 4π), where w_m is the
//! frequency interval the mode stands for. The modes are uniform with the
//! spacing of the input spectrum near resonance, grow geometrically in the
//! wings and are rolled off with a Gaussian form factor e^{−(ω/W_c)²}.
//!
//! The Schrödinger equation is split into the free evolution, the Raman
//! coupling and the emitter-field coupling. Each part is applied exactly
//! (the last one through a thin SVD of the coupling matrix), so the
//! scheme is unitary up to round-off whenever γ = 0.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dynamics::RamanPulse;
use crate::error::{Error, Result};
use crate::model::{DirectionalSpectrum, EmitterArray, EmitterState, Quadrature, Trajectory};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Growth rate of the mode spacing outside the core.
pub const WING_GROWTH: f64 = 0.02;
/// The outermost mode sits at this multiple of the cutoff.
pub const WING_EXTENT: f64 = 3.0;
/// Smallest core half-width accepted by [`oracle_evolve`].
pub const MIN_CORE_HALF_WIDTH: f64 = 10.0;
/// Default ceiling on the core spacing.
pub const MAX_CORE_STEP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    freqs: Vec<f64>,
    weights: Vec<f64>,
    origin: f64,
    core_step: f64,
    core_first: usize,
    core_len: usize,
    cutoff: f64,
}

impl ModeGrid {
    /// Core modes at `origin + i·core_step` covering [−half_width, half_width],
    /// wings out to `WING_EXTENT · cutoff`.
    pub fn new(origin: f64, core_step: f64, half_width: f64, cutoff: f64) -> Result<Self> {
        if !(core_step > 0.0 && half_width > 0.0 && cutoff > half_width) {
            return Err(Error::InvalidParameter(format!(
                "mode grid needs step > 0 and cutoff {cutoff} above the core half-width {half_width}"
            )));
        }
        let i_lo = ((-half_width - origin) / core_step - 1e-9).ceil() as i64;
        let i_hi = ((half_width - origin) / core_step + 1e-9).floor() as i64;
        let core: Vec<f64> = (i_lo..=i_hi).map(|i| origin + i as f64 * core_step).collect();
        let edge = WING_EXTENT * cutoff;
        let wing = |start: f64| {
            let mut out = Vec::new();
            let mut w = start;
            loop {
                w += (WING_GROWTH * w).max(core_step);
                if w > edge {
                    break;
                }
                out.push(w);
            }
            out
        };
        let upper = wing(*core.last().expect("non-empty core"));
        let lower: Vec<f64> = wing(-core[0]).into_iter().rev().map(|w| -w).collect();
        let core_first = lower.len();
        let core_len = core.len();
        let freqs: Vec<f64> = lower.into_iter().chain(core).chain(upper).collect();

        let m = freqs.len();
        let weights = (0..m)
            .map(|i| {
                let w = if i > core_first && i + 1 < core_first + core_len {
                    core_step
                } else {
                    let left = if i > 0 { freqs[i] - freqs[i - 1] } else { freqs[1] - freqs[0] };
                    let right = if i + 1 < m { freqs[i + 1] - freqs[i] } else { left };
                    0.5 * (left + right)
                };
                let x = freqs[i] / cutoff;
                w * (-x * x).exp()
            })
            .collect();
        Ok(Self { freqs, weights, origin, core_step, core_first, core_len, cutoff })
    }

    /// Cutoff large enough to resolve the shortest emitter spacing.
    pub fn auto_cutoff(array: &EmitterArray) -> f64 {
        let p = array.params();
        array.min_delay().map_or(1000.0, |tau| (8.0 / tau).max(1000.0 * p.gamma_wg))
    }

    /// Mode set for propagating `spectrum` up to `t_end`.
    ///
    /// Continuous spectra are thinned to a core spacing of at most
    /// `min(MAX_CORE_STEP, π/t_end)`; discrete combs are refined to it, so
    /// every input sample lands on a mode.
    pub fn for_spectrum(spectrum: &DirectionalSpectrum, t_end: f64, cutoff: f64) -> Result<Self> {
        let target = MAX_CORE_STEP.min(PI / t_end);
        let grid = spectrum.grid;
        let step = grid.step();
        let core_step = match spectrum.quadrature {
            Quadrature::Trapezoid => {
                let intervals = grid.len() - 1;
                let k = (1..=intervals)
                    .rev()
                    .find(|k| intervals.is_multiple_of(*k) && *k as f64 * step <= target * (1.0 + 1e-12))
                    .unwrap_or(1);
                k as f64 * step
            }
            Quadrature::Comb => step / (step / target).ceil(),
        };
        let half = grid.max_abs().max(2.0 * MIN_CORE_HALF_WIDTH);
        Self::new(grid.lo(), core_step, half, cutoff)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn core_step(&self) -> f64 {
        self.core_step
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Index range of the uniform core.
    pub fn core(&self) -> std::ops::Range<usize> {
        self.core_first..self.core_first + self.core_len
    }

    /// Largest |ω| in the set.
    pub fn max_abs(&self) -> f64 {
        self.freqs[0].abs().max(self.freqs[self.len() - 1].abs())
    }

    fn core_index(&self, x: f64) -> Option<usize> {
        let f = (x - self.origin) / self.core_step;
        let i = f.round();
        if (f - i).abs() > 1e-6 {
            return None;
        }
        let first = ((self.freqs[self.core_first] - self.origin) / self.core_step).round();
        let idx = i - first;
        (idx >= 0.0 && (idx as usize) < self.core_len).then(|| self.core_first + idx as usize)
    }

    /// Field whose free drive on the emitters reproduces the quadrature sum
    /// of `spectrum`.
    pub fn embed(&self, spectrum: &DirectionalSpectrum) -> Result<ModeField> {
        let grid = spectrum.grid;
        let n = grid.len();
        let stride = match spectrum.quadrature {
            Quadrature::Trapezoid => (self.core_step / grid.step()).round().max(1.0) as usize,
            Quadrature::Comb => 1,
        };
        if !(n - 1).is_multiple_of(stride) {
            return Err(Error::GridMismatch("core spacing does not divide the spectrum grid".into()));
        }
        let m = self.len();
        let mut field = ModeField { t: 0.0, right: vec![C64::default(); m], left: vec![C64::default(); m] };
        for s in (0..n).step_by(stride) {
            let x = grid.point(s);
            let idx = self
                .core_index(x)
                .ok_or_else(|| Error::GridMismatch(format!("spectrum point {x} is not a core mode")))?;
            let w = match spectrum.quadrature {
                Quadrature::Comb => grid.step(),
                Quadrature::Trapezoid if s == 0 || s + 1 == n => 0.5 * stride as f64 * grid.step(),
                Quadrature::Trapezoid => stride as f64 * grid.step(),
            };
            let scale = w / self.weights[idx].sqrt();
            field.right[idx] = spectrum.right[s] * scale;
            field.left[idx] = spectrum.left[s] * scale;
        }
        Ok(field)
    }

    /// Spectral densities β̃ = β/√w_m on the core modes, (freqs, right, left).
    pub fn core_density(&self, field: &ModeField) -> (Vec<f64>, Vec<C64>, Vec<C64>) {
        let r = self.core();
        let scale: Vec<f64> = r.clone().map(|i| 1.0 / self.weights[i].sqrt()).collect();
        (
            self.freqs[r.clone()].to_vec(),
            r.clone().zip(&scale).map(|(i, s)| field.right[i] * s).collect(),
            r.zip(&scale).map(|(i, s)| field.left[i] * s).collect(),
        )
    }
}

/// Discrete mode amplitudes in the interaction picture, Σ|β|² photons.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeField {
    pub t: f64,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
}

impl ModeField {
    pub fn empty(modes: &ModeGrid) -> Self {
        Self { t: 0.0, right: vec![C64::default(); modes.len()], left: vec![C64::default(); modes.len()] }
    }

    pub fn norm(&self) -> f64 {
        self.right.iter().chain(&self.left).map(|x| x.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    pub emitters: EmitterState,
    pub field: ModeField,
}

/// Σ|a|² + Σ|c|² + photon number.
pub fn total_norm(state: &FullState) -> f64 {
    state.emitters.population() + state.field.norm()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub t_end: f64,
    /// Spacing of the stored emitter samples.
    pub dt_out: f64,
    /// Largest substep; defaults to 0.3 / max|ω|.
    pub max_step: Option<f64>,
    /// Times (rounded to multiples of `dt_out`) at which the full state is kept.
    pub checkpoints: Vec<f64>,
}

impl OracleConfig {
    pub fn new(t_end: f64, dt_out: f64) -> Self {
        Self { t_end, dt_out, max_step: None, checkpoints: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub trajectory: Trajectory,
    pub checkpoints: Vec<FullState>,
}

/// Thin SVD of the emitter-field coupling G (N × 2M), G = U S W†.
struct Coupling {
    u: DMatrix<C64>,
    s: Vec<f64>,
    /// Columns of W, each of length 2M.
    w: Vec<Vec<C64>>,
}

fn coupling(array: &EmitterArray, modes: &ModeGrid) -> Coupling {
    let p = array.params();
    let m = modes.len();
    let n = array.len();
    // G† laid out as a tall matrix: rows are modes (right branch then left)
    let adj = DMatrix::from_fn(2 * m, n, |row, j| {
        let (idx, sign) = if row < m { (row, -1.0) } else { (row - m, 1.0) };
        let g = (p.gamma_wg * modes.weights[idx] / (4.0 * PI)).sqrt();
        let k = p.k_a() + modes.freqs[idx] / p.v_g;
        C64::from_polar(g, sign * k * array.positions()[j])
    });
    let svd = adj.svd(true, true);
    let wmat = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    Coupling {
        u: v_t.adjoint(),
        s: svd.singular_values.iter().copied().collect(),
        w: (0..wmat.ncols()).map(|c| wmat.column(c).iter().copied().collect()).collect(),
    }
}

/// Integrates the full emitter-field state from t = 0.
pub fn oracle_evolve(
    array: &EmitterArray,
    modes: &ModeGrid,
    init: &FullState,
    raman: Option<RamanPulse>,
    config: &OracleConfig,
) -> Result<OracleRun> {
    let n = array.len();
    let m = modes.len();
    if init.emitters.a.len() != n || init.emitters.c.len() != n {
        return Err(Error::Length { expected: n, got: init.emitters.a.len() });
    }
    if init.field.right.len() != m || init.field.left.len() != m {
        return Err(Error::Length { expected: m, got: init.field.right.len() });
    }
    if !(config.t_end > 0.0 && config.dt_out > 0.0 && config.dt_out <= config.t_end) {
        return Err(Error::InvalidParameter("oracle needs 0 < dt_out ≤ t_end".into()));
    }
    let core_lo = modes.freqs[modes.core_first];
    let core_hi = modes.freqs[modes.core_first + modes.core_len - 1];
    if core_lo > -MIN_CORE_HALF_WIDTH + 1e-9 || core_hi < MIN_CORE_HALF_WIDTH - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "uniform mode core [{core_lo}, {core_hi}] must cover ±{MIN_CORE_HALF_WIDTH}"
        )));
    }
    let required = TAU / config.t_end;
    if modes.core_step > required {
        return Err(Error::Recurrence { spacing: modes.core_step, required });
    }

    let gamma = array.params().gamma_free;
    let h_max = config.max_step.unwrap_or(0.3 / modes.max_abs());
    let outputs = (config.t_end / config.dt_out).round() as usize;
    let sub = (config.dt_out / h_max).ceil().max(1.0) as usize;
    let h = config.dt_out / sub as f64;
    let keep: Vec<usize> = config.checkpoints.iter().map(|t| (t / config.dt_out).round() as usize).collect();

    let cpl = coupling(array, modes);
    let rank = cpl.s.len();
    let cos_sh: Vec<f64> = cpl.s.iter().map(|s| (s * h).cos()).collect();
    let sin_sh: Vec<f64> = cpl.s.iter().map(|s| (s * h).sin()).collect();
    let half: Vec<C64> = modes.freqs.iter().map(|w| C64::from_polar(1.0, -0.5 * w * h)).collect();
    let damp = (-0.25 * gamma * h).exp();

    // Schrödinger picture; β starts equal to the interaction-picture field at t = 0
    let mut beta: Vec<C64> = init.field.right.iter().chain(&init.field.left).copied().collect();
    let mut a = init.emitters.a.clone();
    let mut c = init.emitters.c.clone();

    let snapshot = |k: usize, beta: &[C64], a: &[C64], c: &[C64]| -> FullState {
        let t = k as f64 * config.dt_out;
        let rot: Vec<C64> = modes.freqs.iter().map(|w| C64::from_polar(1.0, w * t)).collect();
        FullState {
            emitters: EmitterState { t, a: a.to_vec(), c: c.to_vec() },
            field: ModeField {
                t,
                right: beta[..m].iter().zip(&rot).map(|(b, r)| b * r).collect(),
                left: beta[m..].iter().zip(&rot).map(|(b, r)| b * r).collect(),
            },
        }
    };

    let mut traj = Trajectory::default();
    let mut checkpoints = Vec::new();
    let push = |traj: &mut Trajectory, k: usize, a: &[C64], c: &[C64]| {
        let t = k as f64 * config.dt_out;
        traj.times.push(t);
        traj.states.push(EmitterState { t, a: a.to_vec(), c: c.to_vec() });
    };
    push(&mut traj, 0, &a, &c);
    for _ in keep.iter().filter(|&&k| k == 0) {
        checkpoints.push(snapshot(0, &beta, &a, &c));
    }

    let apply_phase = |beta: &mut [C64], times: i32| {
        for (i, b) in beta.iter_mut().enumerate() {
            let p = half[i % m];
            *b *= if times == 1 { p } else { p * p };
        }
    };
    let raman_half = |t_mid: f64, a: &mut [C64], c: &mut [C64]| {
        if let Some(r) = raman {
            let theta = r.at(t_mid) * 0.5 * h;
            let (s, co) = theta.sin_cos();
            for j in 0..n {
                let (x, y) = (a[j], c[j]);
                a[j] = co * x - I * s * y;
                c[j] = -I * s * x + co * y;
            }
        }
    };

    let mut x = vec![C64::default(); rank];
    let mut y = vec![C64::default(); rank];
    apply_phase(&mut beta, 1);
    for k in 1..=outputs {
        for step in 0..sub {
            let t = ((k - 1) * sub + step) as f64 * h;
            a.iter_mut().for_each(|v| *v *= damp);
            raman_half(t + 0.5 * h, &mut a, &mut c);

            // x = W†β, y = U†a
            for r in 0..rank {
                x[r] = cpl.w[r].iter().zip(&beta).map(|(w, b)| w.conj() * b).sum();
                y[r] = (0..n).map(|j| cpl.u[(j, r)].conj() * a[j]).sum();
            }
            let mut a_new: Vec<C64> = a.clone();
            for j in 0..n {
                let mut proj = C64::default();
                let mut acc = C64::default();
                for r in 0..rank {
                    proj += cpl.u[(j, r)] * y[r];
                    acc += cpl.u[(j, r)] * (cos_sh[r] * y[r] - I * sin_sh[r] * x[r]);
                }
                a_new[j] = a[j] - proj + acc;
            }
            for r in 0..rank {
                let coef = (cos_sh[r] - 1.0) * x[r] - I * sin_sh[r] * y[r];
                for (b, w) in beta.iter_mut().zip(&cpl.w[r]) {
                    *b += w * coef;
                }
            }
            a = a_new;

            raman_half(t + 0.5 * h, &mut a, &mut c);
            a.iter_mut().for_each(|v| *v *= damp);

            let last = step + 1 == sub;
            let wanted = last && (k == outputs || keep.contains(&k));
            if wanted {
                apply_phase(&mut beta, 1);
                for _ in keep.iter().filter(|&&q| q == k) {
                    checkpoints.push(snapshot(k, &beta, &a, &c));
                }
                if k < outputs {
                    apply_phase(&mut beta, 1);
                }
            } else {
                apply_phase(&mut beta, 2);
            }
        }
        if let Some(j) = a.iter().chain(&c).position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { t: k as f64 * config.dt_out, emitter: j % n });
        }
        push(&mut traj, k, &a, &c);
    }
    Ok(OracleRun { trajectory: traj, checkpoints })
}
