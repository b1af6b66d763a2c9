//! Fidelity and concurrence, and the noise models used for robustness runs.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DirectionalSpectrum, EmitterArray, TargetState, Trajectory};

/// Attempts at drawing an ordered set of perturbed positions.
pub const MAX_RESAMPLE: usize = 100;

/// |Σ_j conj(target_j) a_j|, without renormalizing `amps`.
pub fn fidelity(amps: &[C64], target: &TargetState) -> Result<f64> {
    if amps.len() != target.len() {
        return Err(Error::Length { expected: target.len(), got: amps.len() });
    }
    Ok(target.amps().iter().zip(amps).map(|(t, a)| t.conj() * a).sum::<C64>().norm())
}

/// 2|a₁||a₂|.
pub fn concurrence_two(amps: &[C64]) -> Result<f64> {
    if amps.len() != 2 {
        return Err(Error::Length { expected: 2, got: amps.len() });
    }
    Ok(2.0 * amps[0].norm() * amps[1].norm())
}

/// Fidelity of the excited-state amplitudes at every sample.
pub fn fidelity_curve(traj: &Trajectory, target: &TargetState) -> Result<Vec<f64>> {
    traj.states.iter().map(|s| fidelity(&s.a, target)).collect()
}

/// Fidelity of the metastable amplitudes c_j at every sample.
pub fn storage_fidelity_curve(traj: &Trajectory, target: &TargetState) -> Result<Vec<f64>> {
    traj.states.iter().map(|s| fidelity(&s.c, target)).collect()
}

pub fn concurrence_curve(traj: &Trajectory) -> Result<Vec<f64>> {
    traj.states.iter().map(|s| concurrence_two(&s.a)).collect()
}

/// (index, value) of the largest entry; the first one wins ties.
pub fn peak(values: &[f64]) -> Option<(usize, f64)> {
    values.iter().copied().enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if b >= v => best,
        _ => Some((i, v)),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    /// Uniform on [−ε, ε].
    #[default]
    Uniform,
    /// Normal with standard deviation ε.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub spectrum_rel: f64,
    pub position_rel: f64,
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub law: NoiseLaw,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, eps) in [("spectrum_rel", self.spectrum_rel), ("position_rel", self.position_rel)] {
            if !(0.0..1.0).contains(&eps) {
                return Err(Error::InvalidParameter(format!("{name} = {eps} must lie in [0, 1)")));
            }
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("at least one trial is needed".into()));
        }
        Ok(())
    }

    fn draw(&self, eps: f64, rng: &mut ChaCha8Rng) -> f64 {
        if eps == 0.0 {
            return 0.0;
        }
        match self.law {
            NoiseLaw::Uniform => rng.gen_range(-eps..=eps),
            NoiseLaw::Gaussian => Normal::new(0.0, eps).expect("finite sigma").sample(rng),
        }
    }
}

/// Independent random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Multiplies every sample of both branches by (1+u) e^{iφ} and renormalizes.
pub fn perturb_spectrum(
    spec: &DirectionalSpectrum,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Result<DirectionalSpectrum> {
    noise.validate()?;
    let eps = noise.spectrum_rel;
    if eps == 0.0 {
        return Ok(spec.clone());
    }
    let mut out = spec.clone();
    for x in out.right.iter_mut().chain(out.left.iter_mut()) {
        let u = noise.draw(eps, rng);
        let phi = noise.draw(eps, rng);
        *x *= C64::from_polar(1.0 + u, phi);
    }
    out.normalized()
}

/// Shifts each emitter by a random fraction of its nearest-neighbour spacing
/// (the wavelength for a single emitter), redrawing until the order is kept.
pub fn perturb_positions(array: &EmitterArray, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Result<EmitterArray> {
    noise.validate()?;
    let eps = noise.position_rel;
    if eps == 0.0 {
        return Ok(array.clone());
    }
    let r = array.positions();
    let n = r.len();
    let spacing: Vec<f64> = (0..n)
        .map(|j| {
            let left = if j > 0 { r[j] - r[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < n { r[j + 1] - r[j] } else { f64::INFINITY };
            let s = left.min(right);
            if s.is_finite() {
                s
            } else {
                array.params().lambda
            }
        })
        .collect();
    for _ in 0..MAX_RESAMPLE {
        let moved: Vec<f64> = r.iter().zip(&spacing).map(|(x, s)| x + noise.draw(eps, rng) * s).collect();
        if moved.windows(2).all(|w| w[1] > w[0]) {
            return EmitterArray::from_positions(moved, *array.params());
        }
    }
    Err(Error::Resample(MAX_RESAMPLE))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::model::{build_emitter_array, dicke_target, PhysicalParams, Quadrature, SpectralGrid};

    fn noise(eps: f64) -> NoiseSpec {
        NoiseSpec { spectrum_rel: eps, position_rel: eps, seed: 1, trials: 4, law: NoiseLaw::Uniform }
    }

    #[test]
    fn printed_timed_dicke_amplitudes_give_printed_fidelity() {
        let target = TargetState::new(vec![C64::from_polar(1.0, -FRAC_PI_4), C64::from_polar(1.0, FRAC_PI_4)]).unwrap();
        let amps = [C64::new(0.492, -0.492), C64::new(0.492, 0.492)];
        assert!((fidelity(&amps, &target).unwrap() - 0.984).abs() < 5e-4);
        assert!((fidelity(target.amps(), &target).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_states_have_zero_fidelity() {
        let target = TargetState::new(vec![C64::new(1.0, 0.0), C64::default()]).unwrap();
        assert_eq!(fidelity(&[C64::default(), C64::new(1.0, 0.0)], &target).unwrap(), 0.0);
        assert!(fidelity(&[C64::default()], &target).is_err());
    }

    #[test]
    fn concurrence_values() {
        let x = 0.686;
        assert!((concurrence_two(&[C64::new(x, 0.0), C64::new(0.0, x)]).unwrap() - 0.94).abs() < 2e-3);
        assert_eq!(concurrence_two(&[C64::new(1.0, 0.0), C64::default()]).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((concurrence_two(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert!(concurrence_two(&[C64::default(); 3]).is_err());
    }

    #[test]
    fn peak_picks_first_maximum() {
        assert_eq!(peak(&[0.1, 0.5, 0.5, 0.2]), Some((1, 0.5)));
        assert_eq!(peak(&[]), None);
    }

    #[test]
    fn zero_noise_is_identity() {
        let grid = SpectralGrid::symmetric(2.0, 41).unwrap();
        let spec = DirectionalSpectrum::new(
            grid,
            vec![C64::new(0.3, 0.1); 41],
            vec![C64::new(0.0, 0.2); 41],
            Quadrature::Trapezoid,
        )
        .unwrap();
        let mut rng = trial_rng(1, 0);
        assert_eq!(perturb_spectrum(&spec, &noise(0.0), &mut rng).unwrap(), spec);
        let array = build_emitter_array(&[0.0, 0.25, 0.5], PhysicalParams::default()).unwrap();
        assert_eq!(perturb_positions(&array, &noise(0.0), &mut rng).unwrap(), array);
    }

    #[test]
    fn spectrum_noise_is_seeded_and_normalized() {
        let grid = SpectralGrid::symmetric(2.0, 41).unwrap();
        let spec = DirectionalSpectrum::new(
            grid,
            vec![C64::new(0.3, 0.1); 41],
            vec![C64::new(0.0, 0.2); 41],
            Quadrature::Trapezoid,
        )
        .unwrap()
        .normalized()
        .unwrap();
        let a = perturb_spectrum(&spec, &noise(0.1), &mut trial_rng(7, 3)).unwrap();
        let b = perturb_spectrum(&spec, &noise(0.1), &mut trial_rng(7, 3)).unwrap();
        let c = perturb_spectrum(&spec, &noise(0.1), &mut trial_rng(7, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        for (x, y) in a.right.iter().zip(&spec.right) {
            let ratio = x / y;
            assert!((ratio.norm() - 1.0).abs() < 0.25);
            assert!(ratio.arg().abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn position_noise_is_bounded() {
        let positions: Vec<f64> = (1..=10).map(|j| -1.125 + 0.25 * j as f64).collect();
        let array = build_emitter_array(&positions, PhysicalParams::default()).unwrap();
        let lambda = array.params().lambda;
        for trial in 0..20 {
            let moved = perturb_positions(&array, &noise(0.1), &mut trial_rng(1, trial)).unwrap();
            for (x, y) in moved.positions().iter().zip(array.positions()) {
                assert!((x - y).abs() <= 0.025 * lambda + 1e-15);
            }
        }
        let single = build_emitter_array(&[0.0], PhysicalParams::default()).unwrap();
        let moved = perturb_positions(&single, &noise(0.1), &mut trial_rng(1, 0)).unwrap();
        assert!(moved.positions()[0].abs() <= 0.1 * lambda);
    }

    #[test]
    fn gaussian_law_and_validation() {
        let mut spec = noise(0.1);
        spec.law = NoiseLaw::Gaussian;
        let array = build_emitter_array(&[0.0, 0.25], PhysicalParams::default()).unwrap();
        assert!(perturb_positions(&array, &spec, &mut trial_rng(2, 0)).is_ok());
        assert!(noise(1.0).validate().is_err());
        assert!(NoiseSpec { trials: 0, ..noise(0.1) }.validate().is_err());
        let target = dicke_target(2, &[1.0, 1.0]).unwrap();
        assert!(fidelity(target.amps(), &target).unwrap() <= 1.0 + 1e-12);
    }
}
