//! Shipped experiment presets.

use std::f64::consts::{PI, SQRT_2};

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "homogeneous",
        description: "homogeneous medium a = 1, q = 0, c = 1; speed 2",
    },
    Preset {
        name: "periodic",
        description: "periodic medium c = 1 + 0.5 cos(2 pi x), period 1",
    },
    Preset {
        name: "compact_perturbation",
        description: "compactly perturbed homogeneous medium: c = 0.25 plus a bump of height -0.2, radius 5; speed 1",
    },
    Preset {
        name: "almost_periodic",
        description: "almost periodic medium c = 1 + 0.3 cos x + 0.3 cos(sqrt 2 x)",
    },
    Preset {
        name: "asymptotic_ap",
        description: "asymptotically almost periodic medium: the almost periodic c plus 0.5 exp(-0.05|x|)",
    },
    Preset {
        name: "random_ergodic",
        description: "random stationary ergodic medium, c in (0.5, 1.5), a in (0.95, 1.05), unit correlation length",
    },
    Preset {
        name: "slow_oscillation_fast",
        description: "slowly oscillating medium with alpha = 3, mu0 in [0.5, 1.5]",
    },
    Preset {
        name: "slow_oscillation_slow",
        description: "slowly oscillating medium with alpha = 0.5, mu0 in [0.5, 1.5]; lower and upper speeds differ",
    },
];

const ALIASES: &[(&str, &str)] = &[("slow_oscillation_alpha_0.5", "slow_oscillation_slow")];

pub fn list_presets() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|p| (p.name, p.description)).collect()
}

pub fn resolve(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(|p| p.name)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == name).map(|(_, t)| *t))
}

fn ap_limit() -> Value {
    json!({
        "class": "almost_periodic",
        "c_modes": [
            {"amplitude": 0.3, "harmonic": 1.0},
            {"amplitude": 0.3, "harmonic": SQRT_2}
        ]
    })
}

/// Profile with extremes 0.5 and 1.5 and flattened crests.
fn slow_profile(alpha: f64) -> Value {
    json!({
        "class": "slowly_oscillating",
        "mu0_baseline": 1.0,
        "mu0_modes": [
            {"amplitude": 0.5763, "harmonic": 1.0, "phase": PI},
            {"amplitude": -0.08645, "harmonic": 3.0, "phase": 3.0 * PI}
        ],
        "mu0_period": 0.8,
        "alpha": alpha
    })
}

/// The full config document of a preset.
pub fn preset_value(name: &str) -> Result<Value> {
    let canonical = resolve(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!("unknown preset '{name}'; known: {}", names.join(", ")))
    })?;
    let description = PRESETS.iter().find(|p| p.name == canonical).unwrap().description;
    let pde = |t: f64| json!({"t_final": t});
    let (medium, pde, eigen, speed) = match canonical {
        "homogeneous" => (
            json!({"class": "homogeneous", "a0": 1.0, "q0": 0.0, "c0": 1.0}),
            pde(200.0),
            json!({"engine": {"kind": "periodic", "nodes": 64}}),
            json!({}),
        ),
        "periodic" => (
            json!({"class": "periodic", "period": 1.0, "c_modes": [{"amplitude": 0.5, "harmonic": 1.0}]}),
            pde(200.0),
            json!({"engine": {"kind": "periodic", "nodes": 256}}),
            json!({}),
        ),
        "compact_perturbation" => (
            json!({"class": "compact_perturbation", "b0": 0.25, "bump_amplitude": -0.2, "bump_radius": 5.0}),
            pde(1000.0),
            json!({"engine": {"kind": "const_testfn"}, "r_sequence": [10.0, 20.0, 40.0], "width": 100.0}),
            json!({}),
        ),
        "almost_periodic" => (
            ap_limit(),
            pde(200.0),
            json!({
                "engine": {"kind": "corrector", "epsilons": [0.2, 0.1, 0.05], "dx": 0.05},
                "r_sequence": [0.0],
                "width": 140.0 * PI
            }),
            json!({}),
        ),
        "asymptotic_ap" => (
            json!({"class": "asymptotic", "limit": ap_limit(), "transient_amplitude": 0.5, "decay_rate": 0.05}),
            pde(300.0),
            json!({
                "engine": {"kind": "corrector", "epsilons": [0.2, 0.1, 0.05], "dx": 0.05},
                "r_sequence": [200.0, 400.0],
                "width": 140.0 * PI
            }),
            json!({}),
        ),
        "random_ergodic" => (
            json!({
                "class": "random_ergodic",
                "seed": 42,
                "correlation_length": 1.0,
                "c_range": [0.5, 1.5],
                "a_range": [0.95, 1.05]
            }),
            pde(300.0),
            json!({"engine": {"kind": "riccati", "step": 0.01}, "r_sequence": [0.0], "width": 2000.0}),
            json!({}),
        ),
        "slow_oscillation_fast" => (
            slow_profile(3.0),
            pde(300.0),
            json!({"engine": {"kind": "const_testfn"}, "r_sequence": [10.0, 100.0], "width": 10000.0}),
            json!({}),
        ),
        "slow_oscillation_slow" => (
            slow_profile(0.5),
            pde(1500.0),
            json!({"engine": {"kind": "const_testfn"}, "r_sequence": [10.0, 100.0], "width": 100000.0}),
            json!({"window_start": 0.3, "snapshot_count": 101, "expect_gap": true}),
        ),
        _ => unreachable!("resolve returns shipped names"),
    };
    Ok(json!({
        "preset": canonical,
        "description": description,
        "medium": medium,
        "pde": pde,
        "eigen": eigen,
        "speed": speed,
        "seed": null
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::RunConfig;

    #[test]
    fn every_preset_parses_and_builds() {
        assert!(list_presets().len() >= 8);
        for (name, desc) in list_presets() {
            let cfg = RunConfig::from_preset(name).unwrap();
            assert!(!desc.is_empty());
            cfg.effective_medium().build().unwrap();
        }
        assert_eq!(RunConfig::from_preset("slow_oscillation_alpha_0.5").unwrap().preset.as_deref(), Some("slow_oscillation_slow"));
    }
}
