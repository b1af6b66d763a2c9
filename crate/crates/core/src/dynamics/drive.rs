//! Tabulated branch envelopes B(s) = Σ_m w_m β̃_m e^{−iδω_m s}.
//!
//! The sum over a uniform grid is quasi-periodic in s with period 2π/Δ, so
//! one period is filled with a single FFT and evaluated anywhere with
//! six-point Lagrange interpolation.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::model::DirectionalSpectrum;

/// Samples per unit of the fastest oscillation, as spacing ≤ this / max|δω|.
const SPACING_FACTOR: f64 = 0.05;

#[derive(Clone, Debug)]
pub(crate) struct BranchTable {
    h: f64,
    /// e^{−i lo T}: phase picked up per period.
    wrap: C64,
    values: Vec<C64>,
}

impl BranchTable {
    pub(crate) fn new(spectrum: &DirectionalSpectrum, amps: &[C64]) -> Self {
        let grid = spectrum.grid;
        let n = grid.len();
        let step = grid.step();
        let period = TAU / step;
        let fastest = grid.max_abs().max(step);
        let needed = (period * fastest / SPACING_FACTOR).ceil() as usize;
        let size = needed.max(2 * n).next_power_of_two();
        let h = period / size as f64;
        let lo = grid.lo();

        let mut buf = vec![C64::default(); size];
        for (m, x) in amps.iter().enumerate() {
            buf[m] = spectrum.weight(m) * x;
        }
        FftPlanner::new().plan_fft_forward(size).process(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            *v *= C64::from_polar(1.0, -lo * k as f64 * h);
        }
        Self { h, wrap: C64::from_polar(1.0, -lo * period), values: buf }
    }

    fn sample(&self, k: i64) -> C64 {
        let p = self.values.len() as i64;
        let q = k.div_euclid(p);
        let v = self.values[k.rem_euclid(p) as usize];
        if q == 0 {
            v
        } else {
            v * self.wrap.powi(q as i32)
        }
    }

    pub(crate) fn eval(&self, s: f64) -> C64 {
        let x = s / self.h;
        let k0 = x.floor();
        let u = x - k0;
        let k0 = k0 as i64;
        let mut acc = C64::default();
        for (i, off) in (-2i64..=3).enumerate() {
            let mut w = 1.0;
            for (l, other) in (-2i64..=3).enumerate() {
                if l != i {
                    w *= (u - other as f64) / (off - other) as f64;
                }
            }
            acc += self.sample(k0 + off) * w;
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DriveTable {
    pub(crate) right: BranchTable,
    pub(crate) left: BranchTable,
}

impl DriveTable {
    pub(crate) fn new(spectrum: &DirectionalSpectrum) -> Self {
        Self { right: BranchTable::new(spectrum, &spectrum.right), left: BranchTable::new(spectrum, &spectrum.left) }
    }
}
