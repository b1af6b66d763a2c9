//! Collective spectral matrix, emission spectra, and the time-reversed input
//! pulse that prepares a target state.
//!
//! For a single-excitation state with amplitudes a(0) and no incident photon,
//! the Fourier transform χ_j(δω) of a_j(t)Θ(t) satisfies M(δω) χ = a(0) with
//!
//! ```text
//! [M(δω)]_jl = (Γ/2) e^{i(k_a + δω/v_g) r_jl} − iδω δ_jl
//! ```
//!
//! and the emitted field in each direction is
//! β̃_dir(δω) = −i √(Γ/4π) Σ_j e^{−i k_dir r_j} χ_j(δω), with
//! k_R = k_a + δω/v_g and k_L = −k_R.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{DirectionalSpectrum, EmitterArray, Quadrature, SpectralGrid, TargetState};

/// Condition number beyond which the collective matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// M(δω) at one detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveMatrix {
    pub delta_omega: f64,
    pub entries: DMatrix<C64>,
}

impl CollectiveMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// ‖M x − b‖₂.
    pub fn residual(&self, x: &[C64], b: &[C64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let b = DVector::from_column_slice(b);
        (&self.entries * x - b).norm()
    }
}

/// χ_j at one detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiVector(pub Vec<C64>);

pub fn build_collective_matrix(array: &EmitterArray, delta_omega: f64) -> CollectiveMatrix {
    let p = array.params();
    let n = array.len();
    let k = p.k_a() + delta_omega / p.v_g;
    let half = 0.5 * p.gamma_wg;
    let entries = DMatrix::from_fn(n, n, |j, l| {
        let mut m = C64::from_polar(half, k * array.distance(j, l));
        if j == l {
            m -= I * delta_omega;
        }
        m
    });
    CollectiveMatrix { delta_omega, entries }
}

/// Solves M χ = rhs by LU factorization after checking the condition number.
pub fn solve_collective(m: &CollectiveMatrix, rhs: &[C64]) -> Result<ChiVector> {
    let n = m.dim();
    if rhs.len() != n {
        return Err(Error::Length { expected: n, got: rhs.len() });
    }
    if n == 1 {
        let m00 = m.entries[(0, 0)];
        if m00.norm() == 0.0 {
            return Err(Error::SingularMatrix {
                delta_omega: m.delta_omega,
                condition: f64::INFINITY,
                mode: vec![C64::new(1.0, 0.0)],
            });
        }
        return Ok(ChiVector(vec![rhs[0] / m00]));
    }

    let svd = m.entries.clone().svd(false, true);
    let (imin, smin) =
        svd.singular_values.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty matrix");
    let smax = svd.singular_values.max();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        let mode = svd.v_t.map(|vt| vt.row(imin).iter().map(|x| x.conj()).collect()).unwrap_or_default();
        return Err(Error::SingularMatrix { delta_omega: m.delta_omega, condition, mode });
    }

    let b = DVector::from_column_slice(rhs);
    let x = m.entries.clone().lu().solve(&b).ok_or(Error::SingularMatrix {
        delta_omega: m.delta_omega,
        condition,
        mode: Vec::new(),
    })?;
    Ok(ChiVector(x.iter().copied().collect()))
}

pub fn solve_chi(array: &EmitterArray, target: &TargetState, delta_omega: f64) -> Result<ChiVector> {
    if target.len() != array.len() {
        return Err(Error::Length { expected: array.len(), got: target.len() });
    }
    solve_collective(&build_collective_matrix(array, delta_omega), target.amps())
}

/// Far-field emission of `initial` with no incident photon, sampled on `grid`.
pub fn emission_spectrum(
    array: &EmitterArray,
    initial: &TargetState,
    grid: &SpectralGrid,
) -> Result<DirectionalSpectrum> {
    if initial.len() != array.len() {
        return Err(Error::Length { expected: array.len(), got: initial.len() });
    }
    let p = *array.params();
    let prefactor = -I * (p.gamma_wg / (4.0 * PI)).sqrt();
    let point = |i: usize| -> Result<(C64, C64)> {
        let dw = grid.point(i);
        let chi = solve_chi(array, initial, dw)?;
        let k = p.k_a() + dw / p.v_g;
        let mut right = C64::default();
        let mut left = C64::default();
        for (r, x) in array.positions().iter().zip(&chi.0) {
            right += C64::from_polar(1.0, -k * r) * x;
            left += C64::from_polar(1.0, k * r) * x;
        }
        Ok((prefactor * right, prefactor * left))
    };
    let pairs = map_indices(grid.len(), point)?;
    let (right, left) = pairs.into_iter().unzip();
    DirectionalSpectrum::new(*grid, right, left, Quadrature::Trapezoid)
}

/// Input photon that drives the emitters into `target` at time `t0`.
///
/// This is the complex conjugate of the emission of the conjugate state with
/// the propagation directions exchanged, times e^{iδω t0}, normalized to one
/// photon.
pub fn time_reversed_input(
    array: &EmitterArray,
    target: &TargetState,
    grid: &SpectralGrid,
    t0: f64,
) -> Result<DirectionalSpectrum> {
    let emitted = emission_spectrum(array, &target.conj(), grid)?;
    let mut input = emitted.conj_swapped();
    for i in 0..grid.len() {
        let phase = C64::from_polar(1.0, grid.point(i) * t0);
        input.right[i] *= phase;
        input.left[i] *= phase;
    }
    input.normalized()
}

/// Resamples `spectrum` onto `n` discrete components evenly spaced over
/// `extent`, renormalized to one photon.
pub fn coarse_sample(spectrum: &DirectionalSpectrum, n: usize, extent: (f64, f64)) -> Result<DirectionalSpectrum> {
    if n < 2 {
        return Err(Error::InvalidParameter("coarse sampling needs at least two components".into()));
    }
    let src = &spectrum.grid;
    let slack = 1e-9 * src.step();
    if extent.0 < src.lo() - slack || extent.1 > src.hi() + slack {
        return Err(Error::GridMismatch(format!(
            "extent [{}, {}] outside spectrum grid [{}, {}]",
            extent.0,
            extent.1,
            src.lo(),
            src.hi()
        )));
    }
    let grid = SpectralGrid::uniform(extent.0, extent.1, n)?;
    let right = grid.points().iter().map(|&x| sample_at(&spectrum.right, src, x)).collect();
    let left = grid.points().iter().map(|&x| sample_at(&spectrum.left, src, x)).collect();
    DirectionalSpectrum::new(grid, right, left, Quadrature::Comb)?.normalized()
}

/// Photon number ∫(|β̃_R|² + |β̃_L|²) dδω.
pub fn spectral_norm(spectrum: &DirectionalSpectrum) -> f64 {
    spectrum.norm()
}

/// Cubic Lagrange interpolation of grid samples; exact on grid points.
fn sample_at(values: &[C64], grid: &SpectralGrid, x: f64) -> C64 {
    if let Some(i) = grid.index_of(x) {
        return values[i];
    }
    let n = grid.len();
    let f = ((x - grid.lo()) / grid.step()).clamp(0.0, (n - 1) as f64);
    if n < 4 {
        let i = (f.floor() as usize).min(n - 2);
        let u = f - i as f64;
        return values[i] * (1.0 - u) + values[i + 1] * u;
    }
    let base = (f.floor() as usize).saturating_sub(1).min(n - 4);
    let u = f - base as f64;
    let mut acc = C64::default();
    for k in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != k {
                w *= (u - m as f64) / (k as f64 - m as f64);
            }
        }
        acc += values[base + k] * w;
    }
    acc
}

#[cfg(feature = "parallel")]
fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::model::{build_emitter_array, dicke_target, timed_dicke_target, PhysicalParams};

    fn pair() -> EmitterArray {
        build_emitter_array(&[-0.125, 0.125], PhysicalParams::default()).unwrap()
    }

    fn single() -> EmitterArray {
        build_emitter_array(&[0.0], PhysicalParams::default()).unwrap()
    }

    #[test]
    fn single_emitter_matrix_at_resonance() {
        let m = build_collective_matrix(&single(), 0.0);
        assert_eq!(m.dim(), 1);
        assert!((m.entries[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn quarter_wave_pair_matrix_at_resonance() {
        let m = build_collective_matrix(&pair(), 0.0);
        let off = C64::from_polar(0.5, FRAC_PI_2);
        assert!((m.entries[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((m.entries[(0, 1)] - off).norm() < 1e-12);
        assert!((m.entries[(1, 0)] - off).norm() < 1e-12);
    }

    #[test]
    fn quarter_wave_pair_matrix_detuned_elementwise() {
        let array = pair();
        let dw = 1.0;
        let m = build_collective_matrix(&array, dw);
        let d = 0.25 * 0.05;
        // independent element-by-element evaluation
        let diag = C64::new(0.5, -dw);
        let off = C64::new(0.5 * (FRAC_PI_2 + dw * d).cos(), 0.5 * (FRAC_PI_2 + dw * d).sin());
        assert!((m.entries[(0, 0)] - diag).norm() < 1e-14);
        assert!((m.entries[(1, 1)] - diag).norm() < 1e-14);
        assert!((m.entries[(0, 1)] - off).norm() < 1e-12);
        assert_eq!(m.entries[(0, 1)], m.entries[(1, 0)]);
    }

    #[test]
    fn scalar_chi() {
        let target = TargetState::new(vec![C64::new(1.0, 0.0)]).unwrap();
        for dw in [-3.0, 0.0, 0.7] {
            let chi = solve_chi(&single(), &target, dw).unwrap();
            let expected = C64::new(1.0, 0.0) / C64::new(0.5, -dw);
            assert!((chi.0[0] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn symmetric_pair_residual() {
        let array = pair();
        let target = dicke_target(2, &[1.0, 1.0]).unwrap();
        let m = build_collective_matrix(&array, 0.0);
        let chi = solve_collective(&m, target.amps()).unwrap();
        assert!(m.residual(&chi.0, target.amps()) <= 1e-12);
        assert!((chi.0[0] - chi.0[1]).norm() < 1e-12);
    }

    #[test]
    fn antisymmetric_chi_is_odd() {
        let array = pair();
        let target = dicke_target(2, &[1.0, -1.0]).unwrap();
        for dw in [-4.0, -0.5, 0.0, 0.5, 2.0] {
            let chi = solve_chi(&array, &target, dw).unwrap();
            assert!((chi.0[0] + chi.0[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn half_wave_pair_is_singular_on_resonance() {
        let array = build_emitter_array(&[0.0, 0.5], PhysicalParams::default()).unwrap();
        let target = dicke_target(2, &[1.0, 1.0]).unwrap();
        match solve_chi(&array, &target, 0.0) {
            Err(Error::SingularMatrix { condition, mode, .. }) => {
                assert!(condition > MAX_CONDITION);
                assert_eq!(mode.len(), 2);
                // e^{ik_a d} = −1 makes the symmetric combination dark
                assert!((mode[0] - mode[1]).norm() < 1e-8);
            }
            other => panic!("expected a singular-matrix error, got {other:?}"),
        }
        let grid = SpectralGrid::symmetric(5.0, 11).unwrap();
        assert!(emission_spectrum(&array, &target, &grid).is_err());
    }

    #[test]
    fn single_emitter_emission_is_lorentzian() {
        let grid = SpectralGrid::symmetric(10.0, 201).unwrap();
        let target = TargetState::new(vec![C64::new(1.0, 0.0)]).unwrap();
        let s = emission_spectrum(&single(), &target, &grid).unwrap();
        for (i, dw) in grid.points().into_iter().enumerate() {
            let expected = (1.0 / (4.0 * PI)) / (dw * dw + 0.25);
            assert!((s.right[i].norm_sqr() - expected).abs() < 1e-14);
            assert!((s.left[i].norm_sqr() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn single_emitter_norm_matches_arctan_tail() {
        let grid = SpectralGrid::symmetric(20.0, 4001).unwrap();
        let target = TargetState::new(vec![C64::new(1.0, 0.0)]).unwrap();
        let s = emission_spectrum(&single(), &target, &grid).unwrap();
        let expected = (2.0 / PI) * (40.0f64).atan();
        assert!((spectral_norm(&s) - expected).abs() < 1e-5, "{} vs {expected}", spectral_norm(&s));
        let (r, l) = s.branch_norms();
        assert!((r - l).abs() < 1e-14);
    }

    #[test]
    fn mirror_symmetry_of_pair_emission() {
        let grid = SpectralGrid::symmetric(10.0, 401).unwrap();
        let sym = emission_spectrum(&pair(), &dicke_target(2, &[1.0, 1.0]).unwrap(), &grid).unwrap();
        let anti = emission_spectrum(&pair(), &dicke_target(2, &[1.0, -1.0]).unwrap(), &grid).unwrap();
        for i in 0..grid.len() {
            assert!((sym.left[i] - sym.right[i]).norm() < 1e-10);
            assert!((anti.left[i] + anti.right[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn time_reversed_symmetric_input_has_equal_branches() {
        let grid = SpectralGrid::symmetric(10.0, 2001).unwrap();
        let input = time_reversed_input(&pair(), &dicke_target(2, &[1.0, 1.0]).unwrap(), &grid, 15.0).unwrap();
        assert!((spectral_norm(&input) - 1.0).abs() < 1e-12);
        for i in 0..grid.len() {
            assert!((input.left[i] - input.right[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn ten_emitter_timed_dicke_input_is_directional() {
        let positions: Vec<f64> = (1..=10).map(|j| -1.125 + 0.25 * j as f64).collect();
        let array = build_emitter_array(&positions, PhysicalParams::default()).unwrap();
        let target = timed_dicke_target(&array).unwrap();
        let grid = SpectralGrid::symmetric(10.0, 801).unwrap();
        let input = time_reversed_input(&array, &target, &grid, 20.0).unwrap();
        let (r, l) = input.branch_norms();
        assert!(r.max(l) >= 5.0 * r.min(l), "right {r}, left {l}");
    }

    #[test]
    fn single_emitter_input_is_conjugate_lorentzian_with_delay_phase() {
        let grid = SpectralGrid::symmetric(10.0, 201).unwrap();
        let target = TargetState::new(vec![C64::new(1.0, 0.0)]).unwrap();
        let t0 = 3.0;
        let input = time_reversed_input(&single(), &target, &grid, t0).unwrap();
        let emitted = emission_spectrum(&single(), &target, &grid).unwrap();
        let scale = emitted.norm().sqrt();
        for (i, dw) in grid.points().into_iter().enumerate() {
            let expected = emitted.left[i].conj() * C64::from_polar(1.0 / scale, dw * t0);
            assert!((input.right[i] - expected).norm() < 1e-12);
        }
        let at_rest = time_reversed_input(&single(), &target, &grid, 0.0).unwrap();
        let n = grid.len();
        for i in 0..n {
            assert!((at_rest.right[i].norm() - at_rest.right[n - 1 - i].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_sampling_identity_and_pairs() {
        let grid = SpectralGrid::symmetric(5.0, 101).unwrap();
        let target = TargetState::new(vec![C64::new(1.0, 0.0)]).unwrap();
        let input = time_reversed_input(&single(), &target, &grid, 0.0).unwrap();

        let same = coarse_sample(&input, 101, (-5.0, 5.0)).unwrap();
        let ratio = same.right[50] / input.right[50];
        for i in 0..101 {
            assert!((same.right[i] - input.right[i] * ratio).norm() < 1e-12);
            assert!((same.left[i] - input.left[i] * ratio).norm() < 1e-12);
        }
        assert!((spectral_norm(&same) - 1.0).abs() < 1e-12);

        let two = coarse_sample(&input, 2, (-2.5, 2.5)).unwrap();
        assert!((two.right[0].norm() - two.right[1].norm()).abs() < 1e-6);
        assert_eq!(two.quadrature, Quadrature::Comb);

        assert!(coarse_sample(&input, 20, (-6.0, 2.5)).is_err());
        assert!(coarse_sample(&input, 1, (-2.5, 2.5)).is_err());
    }

    #[test]
    fn coarse_values_track_smooth_spectrum() {
        let grid = SpectralGrid::symmetric(10.0, 2001).unwrap();
        let target = TargetState::new(vec![C64::new(1.0, 0.0)]).unwrap();
        let input = time_reversed_input(&single(), &target, &grid, 15.0).unwrap();
        let coarse = coarse_sample(&input, 20, (-2.5, 2.5)).unwrap();
        let emitted = emission_spectrum(&single(), &target, &coarse.grid).unwrap();
        // compare shapes after removing the common normalization
        let exact: Vec<C64> = coarse
            .grid
            .points()
            .iter()
            .zip(&emitted.left)
            .map(|(&dw, e)| e.conj() * C64::from_polar(1.0, dw * 15.0))
            .collect();
        let ratio = coarse.right[10] / exact[10];
        for i in 0..20 {
            assert!((coarse.right[i] - exact[i] * ratio).norm() < 1e-5 * coarse.right[10].norm());
        }
    }
}
