//! Physical parameters, emitter geometry, state containers and spectral grids.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates, group velocity and transition wavelength, in units where Γ = v_g = 1
/// by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Decay rate into the waveguide, Γ.
    pub gamma_wg: f64,
    /// Decay rate into free space, γ.
    pub gamma_free: f64,
    /// Group velocity.
    pub v_g: f64,
    /// Transition wavelength in units of v_g/Γ.
    pub lambda: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { gamma_wg: 1.0, gamma_free: 0.0, v_g: 1.0, lambda: 0.05 }
    }
}

impl PhysicalParams {
    pub fn new(gamma_wg: f64, gamma_free: f64, v_g: f64, lambda: f64) -> Result<Self> {
        let p = Self { gamma_wg, gamma_free, v_g, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.gamma_wg.is_finite() && self.gamma_wg > 0.0) {
            return bad("Γ must be positive");
        }
        if !(self.gamma_free.is_finite() && self.gamma_free >= 0.0) {
            return bad("γ must be non-negative");
        }
        if !(self.v_g.is_finite() && self.v_g > 0.0) {
            return bad("group velocity must be positive");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad("wavelength must be positive");
        }
        Ok(())
    }

    /// Resonant wavenumber k_a = 2π/λ.
    pub fn k_a(&self) -> f64 {
        TAU / self.lambda
    }

    pub fn with_gamma_free(mut self, gamma_free: f64) -> Self {
        self.gamma_free = gamma_free;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// A chain of identical emitters at fixed positions along the waveguide.
#[derive(Clone, Debug, PartialEq)]
pub struct EmitterArray {
    positions: Vec<f64>,
    params: PhysicalParams,
    distances: Vec<f64>,
}

impl EmitterArray {
    /// Builds an array from positions given in units of the wavelength.
    pub fn from_wavelengths(positions_in_lambda: &[f64], params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let positions: Vec<f64> = positions_in_lambda.iter().map(|x| x * params.lambda).collect();
        Self::from_positions(positions, params)
    }

    /// Builds an array from positions already in length units.
    pub fn from_positions(positions: Vec<f64>, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        if positions.is_empty() {
            return Err(Error::Geometry("at least one emitter is required".into()));
        }
        if let Some(x) = positions.iter().find(|x| !x.is_finite()) {
            return Err(Error::Geometry(format!("non-finite position {x}")));
        }
        if let Some(w) = positions.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Geometry(format!("positions must be strictly increasing ({} then {})", w[0], w[1])));
        }
        let n = positions.len();
        let mut distances = vec![0.0; n * n];
        for j in 0..n {
            for l in 0..n {
                distances[j * n + l] = (positions[j] - positions[l]).abs();
            }
        }
        Ok(Self { positions, params, distances })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Positions in length units.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn distance(&self, j: usize, l: usize) -> f64 {
        self.distances[j * self.len() + l]
    }

    /// Propagation delay r_jl / v_g.
    pub fn delay(&self, j: usize, l: usize) -> f64 {
        self.distance(j, l) / self.params.v_g
    }

    /// Shortest non-zero delay, or `None` for a single emitter.
    pub fn min_delay(&self) -> Option<f64> {
        self.positions.windows(2).map(|w| (w[1] - w[0]) / self.params.v_g).reduce(f64::min)
    }

    pub fn with_params(&self, params: PhysicalParams) -> Result<Self> {
        Self::from_positions(self.positions.clone(), params)
    }

    /// Same array with every position shifted by `offset` (length units).
    pub fn translated(&self, offset: f64) -> Result<Self> {
        Self::from_positions(self.positions.iter().map(|x| x + offset).collect(), self.params)
    }
}

/// Convenience wrapper matching the operation name used throughout the docs.
pub fn build_emitter_array(positions_in_lambda: &[f64], params: PhysicalParams) -> Result<EmitterArray> {
    EmitterArray::from_wavelengths(positions_in_lambda, params)
}

/// Normalized single-excitation target amplitudes a_j(0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    amps: Vec<C64>,
}

impl TargetState {
    /// Normalizes `amps` to unit norm.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("target needs at least one amplitude".into()));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("target amplitudes have zero or non-finite norm".into()));
        }
        Ok(Self { amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn conj(&self) -> Self {
        Self { amps: self.amps.iter().map(|a| a.conj()).collect() }
    }
}

/// Equal-weight Dicke-type state with per-emitter signs.
pub fn dicke_target(n: usize, signs: &[f64]) -> Result<TargetState> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if signs.len() != n {
        return Err(Error::Length { expected: n, got: signs.len() });
    }
    let scale = 1.0 / (n as f64).sqrt();
    TargetState::new(signs.iter().map(|s| C64::new(s.signum() * scale, 0.0)).collect())
}

/// Timed-Dicke state a_j = e^{i k_a r_j}/√N.
pub fn timed_dicke_target(array: &EmitterArray) -> Result<TargetState> {
    let k_a = array.params().k_a();
    let scale = 1.0 / (array.len() as f64).sqrt();
    TargetState::new(array.positions().iter().map(|r| C64::from_polar(scale, k_a * r)).collect())
}

/// Emitter amplitudes at one instant: `a` in the excited level, `c` in the
/// metastable level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterState {
    pub t: f64,
    pub a: Vec<C64>,
    pub c: Vec<C64>,
}

impl EmitterState {
    pub fn ground(n: usize) -> Self {
        Self { t: 0.0, a: vec![C64::default(); n], c: vec![C64::default(); n] }
    }

    pub fn excited(target: &TargetState) -> Self {
        Self { t: 0.0, a: target.amps().to_vec(), c: vec![C64::default(); target.len()] }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn population(&self) -> f64 {
        self.a.iter().chain(&self.c).map(|x| x.norm_sqr()).sum()
    }
}

/// Uniform frequency grid of detunings δω (units of Γ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl SpectralGrid {
    /// Grid on [-W, W] with `n` points.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!("grid half-width {half_width} must be positive")));
        }
        Self::uniform(-half_width, half_width, n)
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("a grid needs at least two points".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter(format!("bad grid extent [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Largest |δω| on the grid.
    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Index of `x` if it lies on the grid (to a relative tolerance of 1e-9
    /// of the step).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let f = (x - self.lo) / self.step();
        let i = f.round();
        if i < 0.0 || i as usize >= self.n || (f - i).abs() > 1e-9 {
            None
        } else {
            Some(i as usize)
        }
    }
}

/// How a spectrum's samples are summed into integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Samples of a continuous spectrum, trapezoidal rule.
    Trapezoid,
    /// Discrete frequency components, each carrying the grid spacing as its
    /// weight.
    Comb,
}

/// Spectral amplitudes of the right- and left-propagating branches,
/// β̃_R(δω) and β̃_L(δω), normalized so that the photon number is
/// ∫(|β̃_R|² + |β̃_L|²) dδω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSpectrum {
    pub grid: SpectralGrid,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    pub quadrature: Quadrature,
}

impl DirectionalSpectrum {
    pub fn new(grid: SpectralGrid, right: Vec<C64>, left: Vec<C64>, quadrature: Quadrature) -> Result<Self> {
        if right.len() != grid.len() {
            return Err(Error::Length { expected: grid.len(), got: right.len() });
        }
        if left.len() != grid.len() {
            return Err(Error::Length { expected: grid.len(), got: left.len() });
        }
        Ok(Self { grid, right, left, quadrature })
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        let zero = vec![C64::default(); grid.len()];
        Self { grid, right: zero.clone(), left: zero, quadrature: Quadrature::Trapezoid }
    }

    /// Integration weight of sample `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.grid.step();
        match self.quadrature {
            Quadrature::Comb => h,
            Quadrature::Trapezoid if i == 0 || i + 1 == self.grid.len() => 0.5 * h,
            Quadrature::Trapezoid => h,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.weight(i)).collect()
    }

    /// Photon number carried by each branch, (right, left).
    pub fn branch_norms(&self) -> (f64, f64) {
        let mut r = 0.0;
        let mut l = 0.0;
        for i in 0..self.grid.len() {
            let w = self.weight(i);
            r += w * self.right[i].norm_sqr();
            l += w * self.left[i].norm_sqr();
        }
        (r, l)
    }

    pub fn norm(&self) -> f64 {
        let (r, l) = self.branch_norms();
        r + l
    }

    pub fn scaled(&self, z: C64) -> Self {
        Self {
            grid: self.grid,
            right: self.right.iter().map(|x| x * z).collect(),
            left: self.left.iter().map(|x| x * z).collect(),
            quadrature: self.quadrature,
        }
    }

    /// Rescaled to unit photon number.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("cannot normalize a spectrum with zero norm".into()));
        }
        Ok(self.scaled(C64::new(1.0 / norm.sqrt(), 0.0)))
    }

    /// Complex conjugate with the two branches exchanged.
    pub fn conj_swapped(&self) -> Self {
        Self {
            grid: self.grid,
            right: self.left.iter().map(|x| x.conj()).collect(),
            left: self.right.iter().map(|x| x.conj()).collect(),
            quadrature: self.quadrature,
        }
    }

    /// ⟨self|other⟩ over both branches. Both spectra must share a grid.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product needs identical grids".into()));
        }
        let mut acc = C64::default();
        for i in 0..self.grid.len() {
            let w = self.weight(i);
            acc += w * (self.right[i].conj() * other.right[i] + self.left[i].conj() * other.left[i]);
        }
        Ok(acc)
    }

    /// |⟨self|other⟩| / (‖self‖‖other‖).
    pub fn overlap(&self, other: &Self) -> Result<f64> {
        let denom = (self.norm() * other.norm()).sqrt();
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(self.inner(other)?.norm() / denom)
    }

    pub fn is_finite(&self) -> bool {
        self.right.iter().chain(&self.left).all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

/// Emitter amplitudes sampled in time, with the optional photon drive b_j(t)
/// at the same instants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EmitterState>,
    pub drive: Option<Vec<Vec<C64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample closest to `t`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        if self.times.is_empty() {
            return None;
        }
        let i = self.times.partition_point(|&x| x < t);
        if i == 0 {
            Some(0)
        } else if i == self.times.len() {
            Some(i - 1)
        } else if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
            Some(i)
        } else {
            Some(i - 1)
        }
    }

    pub fn state_near(&self, t: f64) -> Option<&EmitterState> {
        self.nearest_index(t).map(|i| &self.states[i])
    }

    pub fn last(&self) -> Option<&EmitterState> {
        self.states.last()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn quarter_wavelength_pair() {
        let array = build_emitter_array(&[-0.125, 0.125], PhysicalParams::default()).unwrap();
        let d = array.distance(0, 1);
        assert!((d - 0.25 * 0.05).abs() < TOL);
        assert!((array.params().k_a() * d - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(array.distance(1, 0), d);
        assert_eq!(array.delay(0, 0), 0.0);
    }

    #[test]
    fn single_emitter_has_no_delays() {
        let array = build_emitter_array(&[0.0], PhysicalParams::default()).unwrap();
        assert_eq!(array.len(), 1);
        assert_eq!(array.min_delay(), None);
    }

    #[test]
    fn degenerate_or_unsorted_positions_rejected() {
        let p = PhysicalParams::default();
        assert!(matches!(build_emitter_array(&[0.0, 0.0], p), Err(Error::Geometry(_))));
        assert!(matches!(build_emitter_array(&[0.5, 0.0], p), Err(Error::Geometry(_))));
        assert!(matches!(build_emitter_array(&[], p), Err(Error::Geometry(_))));
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::new(0.0, 0.0, 1.0, 0.05).is_err());
        assert!(PhysicalParams::new(1.0, -0.1, 1.0, 0.05).is_err());
        assert!(PhysicalParams::new(1.0, 0.0, 0.0, 0.05).is_err());
        assert!(PhysicalParams::new(1.0, 0.0, 1.0, 0.0).is_err());
        let p = PhysicalParams::new(1.0, 0.2, 1.0, 0.3).unwrap();
        assert!((p.k_a() * p.lambda - TAU).abs() < 1e-15);
    }

    #[test]
    fn dicke_targets() {
        let s = dicke_target(2, &[1.0, 1.0]).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s.amps()[0] - C64::new(h, 0.0)).norm() < TOL);
        assert!((s.amps()[1] - C64::new(h, 0.0)).norm() < TOL);
        let a = dicke_target(2, &[1.0, -1.0]).unwrap();
        assert!((a.amps()[1] - C64::new(-h, 0.0)).norm() < TOL);
        let one = dicke_target(1, &[1.0]).unwrap();
        assert!((one.amps()[0] - C64::new(1.0, 0.0)).norm() < TOL);
        assert!(dicke_target(0, &[]).is_err());
        assert!(matches!(dicke_target(2, &[1.0]), Err(Error::Length { .. })));
    }

    #[test]
    fn timed_dicke_two_emitters() {
        let array = build_emitter_array(&[-0.125, 0.125], PhysicalParams::default()).unwrap();
        let t = timed_dicke_target(&array).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((t.amps()[0] - C64::from_polar(h, -FRAC_PI_4)).norm() < TOL);
        assert!((t.amps()[1] - C64::from_polar(h, FRAC_PI_4)).norm() < TOL);
    }

    #[test]
    fn timed_dicke_ten_emitters_phases() {
        let positions: Vec<f64> = (1..=10).map(|j| -1.125 + 0.25 * j as f64).collect();
        let array = build_emitter_array(&positions, PhysicalParams::default()).unwrap();
        let t = timed_dicke_target(&array).unwrap();
        let scale = 1.0 / 10f64.sqrt();
        for (idx, a) in t.amps().iter().enumerate() {
            let j = (idx + 1) as f64;
            let expected = C64::from_polar(scale, (2.0 * j - 1.0) * FRAC_PI_4);
            assert!((a - expected).norm() < 1e-12, "emitter {j}: {a} vs {expected}");
        }
    }

    #[test]
    fn timed_dicke_single_emitter_at_origin() {
        let array = build_emitter_array(&[0.0], PhysicalParams::default()).unwrap();
        let t = timed_dicke_target(&array).unwrap();
        assert!((t.amps()[0] - C64::new(1.0, 0.0)).norm() < TOL);
    }

    #[test]
    fn translation_leaves_distances_unchanged() {
        let array = build_emitter_array(&[-0.3, 0.1, 0.45], PhysicalParams::default()).unwrap();
        let moved = array.translated(1.7).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                assert!((array.distance(j, l) - moved.distance(j, l)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_basics() {
        let g = SpectralGrid::symmetric(10.0, 2001).unwrap();
        assert_eq!(g.point(0), -10.0);
        assert_eq!(g.point(2000), 10.0);
        assert_eq!(g.point(1000), 0.0);
        assert!((g.step() - 0.01).abs() < 1e-15);
        assert_eq!(g.index_of(-9.99), Some(1));
        assert_eq!(g.index_of(-9.995), None);
        assert!(SpectralGrid::symmetric(10.0, 1).is_err());
        assert!(SpectralGrid::symmetric(-1.0, 5).is_err());
    }

    #[test]
    fn spectrum_norms_and_weights() {
        let g = SpectralGrid::symmetric(1.0, 3).unwrap();
        let one = vec![C64::new(1.0, 0.0); 3];
        let s = DirectionalSpectrum::new(g, one.clone(), vec![C64::default(); 3], Quadrature::Trapezoid).unwrap();
        assert!((s.norm() - 2.0).abs() < TOL);
        let comb = DirectionalSpectrum { quadrature: Quadrature::Comb, ..s.clone() };
        assert!((comb.norm() - 3.0).abs() < TOL);
        assert_eq!(DirectionalSpectrum::zeros(g).norm(), 0.0);
        assert!(DirectionalSpectrum::zeros(g).normalized().is_err());
        let n = s.normalized().unwrap();
        assert!((n.norm() - 1.0).abs() < TOL);
        let sw = s.conj_swapped();
        assert_eq!(sw.branch_norms(), (0.0, 2.0));
    }

    #[test]
    fn trajectory_nearest() {
        let traj = Trajectory { times: vec![0.0, 1.0, 2.0], states: vec![EmitterState::ground(1); 3], drive: None };
        assert_eq!(traj.nearest_index(1.4), Some(1));
        assert_eq!(traj.nearest_index(1.6), Some(2));
        assert_eq!(traj.nearest_index(-5.0), Some(0));
        assert_eq!(traj.nearest_index(9.0), Some(2));
    }
}
