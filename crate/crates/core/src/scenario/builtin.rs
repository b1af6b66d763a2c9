//! Built-in scenarios: two emitters a quarter wavelength apart prepared in
//! symmetric, antisymmetric and timed-Dicke states (each ideal, lossy and
//! coarsely sampled), a ten-emitter timed-Dicke chain with and without
//! noise, and storage of an antisymmetric state with a Raman π pulse.

use crate::dynamics::RamanPulse;
use crate::metrics::{NoiseLaw, NoiseSpec};

use super::config::{
    Check, Geometry, GridSpec, IntegratorSpec, Metric, OutputSpec, Sampling, ScenarioConfig, TargetSpec,
};

const NAMES: [&str; 12] = [
    "fig2-symmetric",
    "fig2-symmetric-lossy",
    "fig2-symmetric-coarse",
    "fig2-antisymmetric",
    "fig2-antisymmetric-lossy",
    "fig2-antisymmetric-coarse",
    "fig2-timed-dicke",
    "fig2-timed-dicke-lossy",
    "fig2-timed-dicke-coarse",
    "fig3-timed-dicke-10",
    "fig3-timed-dicke-10-noisy",
    "fig4-raman",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let config = match name {
        "fig3-timed-dicke-10" | "fig3-timed-dicke-10-noisy" => chain(name.ends_with("noisy")),
        "fig4-raman" => raman(),
        _ => {
            let rest = name.strip_prefix("fig2-")?;
            let (state, variant) = match rest.rsplit_once('-') {
                Some((s, v @ ("lossy" | "coarse"))) => (s, v),
                _ => (rest, "ideal"),
            };
            pair(state, variant)?
        }
    };
    Some(config)
}

pub fn builtins() -> Vec<ScenarioConfig> {
    NAMES.iter().filter_map(|n| builtin(n)).collect()
}

fn base(name: String, positions: Vec<f64>, target: TargetSpec, t0: f64, t_end: f64) -> ScenarioConfig {
    ScenarioConfig {
        name,
        description: None,
        geometry: Geometry { positions, lambda: 0.05 },
        target,
        t0,
        t_end,
        gamma_free: 0.0,
        grid: GridSpec::default(),
        sampling: Sampling::None,
        noise: None,
        raman: None,
        integrator: IntegratorSpec::default(),
        output: OutputSpec::default(),
        checks: Vec::new(),
    }
}

fn pair(state: &str, variant: &str) -> Option<ScenarioConfig> {
    let target = match state {
        "symmetric" => TargetSpec::Symmetric,
        "antisymmetric" => TargetSpec::Antisymmetric,
        "timed-dicke" => TargetSpec::TimedDicke,
        _ => return None,
    };
    let name = if variant == "ideal" { format!("fig2-{state}") } else { format!("fig2-{state}-{variant}") };
    let mut c = base(name, vec![-0.125, 0.125], target, 15.0, 30.0);
    let label = match variant {
        "lossy" => {
            c.gamma_free = 0.2;
            "with free-space loss γ = Γ/5"
        }
        "coarse" => {
            c.sampling = Sampling::Coarse { n: 20, extent: [-2.5, 2.5] };
            "with the input reduced to 20 frequency components on [−2.5Γ, 2.5Γ]"
        }
        _ => "with an ideal pulse",
    };
    c.description =
        Some(format!("two emitters λ/4 apart driven into the {} state at t = 15/Γ, {label}", state.replace('-', " ")));

    use Metric::*;
    c.checks = match (state, variant) {
        ("symmetric", "ideal") => vec![
            Check::at_least(PeakFidelity, 0.98),
            Check::range(ReAmplitudeAtT0 { emitter: 1 }, 0.68, 0.72),
            Check::range(ReAmplitudeAtT0 { emitter: 2 }, 0.68, 0.72),
            Check::range(ImAmplitudeAtT0 { emitter: 1 }, -0.02, 0.02),
            Check::range(ImAmplitudeAtT0 { emitter: 2 }, -0.02, 0.02),
            Check::range(ConcurrenceAtT0, 0.91, 0.97),
        ],
        ("antisymmetric", "ideal") => vec![
            Check::range(PeakFidelity, 0.97, 0.99),
            Check::range(ReAmplitudeAtT0 { emitter: 1 }, 0.68, 0.72),
            Check::range(ReAmplitudeAtT0 { emitter: 2 }, -0.72, -0.68),
        ],
        ("timed-dicke", "ideal") => vec![
            Check::range(FidelityAtT0, 0.975, 0.995),
            Check::range(ReAmplitudeAtT0 { emitter: 1 }, 0.482, 0.502),
            Check::range(ImAmplitudeAtT0 { emitter: 1 }, -0.502, -0.482),
            Check::range(ReAmplitudeAtT0 { emitter: 2 }, 0.482, 0.502),
            Check::range(ImAmplitudeAtT0 { emitter: 2 }, 0.482, 0.502),
        ],
        ("symmetric", "lossy") => {
            vec![Check::range(PeakFidelity, 0.87, 0.93), Check::range(ConcurrenceAtT0, 0.72, 0.80)]
        }
        ("symmetric", "coarse") => {
            vec![Check::range(PeakFidelity, 0.87, 0.93), Check::range(ConcurrenceAtT0, 0.71, 0.79)]
        }
        ("timed-dicke", "coarse") => vec![Check::range(PeakFidelity, 0.84, 0.90)],
        _ => vec![Check::range(PeakFidelity, 0.87, 0.93)],
    };
    Some(c)
}

fn chain(noisy: bool) -> ScenarioConfig {
    let positions = (1..=10).map(|j| -1.125 + 0.25 * j as f64).collect();
    let name = if noisy { "fig3-timed-dicke-10-noisy" } else { "fig3-timed-dicke-10" };
    let mut c = base(name.into(), positions, TargetSpec::TimedDicke, 20.0, 30.0);
    c.description = Some(format!(
        "ten emitters λ/4 apart driven into the timed-Dicke state at t = 20/Γ{}",
        if noisy { ", with 10% spectrum and position noise" } else { "" }
    ));
    if noisy {
        c.noise = Some(NoiseSpec { spectrum_rel: 0.1, position_rel: 0.1, seed: 1, trials: 32, law: NoiseLaw::Uniform });
        c.checks = vec![Check::range(Metric::McMeanPeakFidelity, 0.93, 0.99)];
    } else {
        c.checks = vec![Check::range(Metric::PeakFidelity, 0.94, 0.98), Check::at_least(Metric::BranchRatio, 5.0)];
    }
    c
}

fn raman() -> ScenarioConfig {
    let mut c = base("fig4-raman".into(), vec![-0.125, 0.125], TargetSpec::Antisymmetric, 10.0, 20.0);
    c.description =
        Some("antisymmetric excitation at t = 10/Γ moved to the metastable level by a Gaussian π pulse".into());
    c.raman = Some(RamanPulse { t_pi: 10.0, delta: 0.1 });
    c.checks = vec![
        Check::at_least(Metric::MinStorageFidelityAfter { after: 11.0 }, 0.95),
        Check::at_most(Metric::MaxFidelityAfter { after: 11.0 }, 0.1),
    ];
    c
}
