//! Built-in scenarios for the two-state, two-actuator example systems.

use super::scenario::{
    DesignMode, InputPolicy, Params, PlantSpec, Scenario, StopRule, TrueModeSpec, ZonotopeSpec,
};

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &[
    "pfd-g1",
    "pfd-g2",
    "pfd-g1-constrained",
    "pfd-g2-constrained",
    "afd-g1",
    "afd-g2",
    "detection-grid",
];

/// The 14 grid values `-0.26, -0.22, ..., 0.26` of the detection-time grid.
pub fn detection_grid_values() -> Vec<f64> {
    (0..14).map(|i| round4(-0.26 + 0.04 * i as f64)).collect()
}

/// PFD inputs of the AFD-vs-PFD comparison: the detection grid scaled by 10,
/// so every cell respects the joint design's bound `|u| <= 4`.
pub fn comparison_grid_values() -> Vec<f64> {
    detection_grid_values().into_iter().map(|v| round4(10.0 * v)).collect()
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn diag2(a: f64, b: f64) -> Vec<Vec<f64>> {
    vec![vec![a, 0.0], vec![0.0, b]]
}

/// Plant with `A = [0.5 0.3; 0.2 0.6]` and fault intervals `[0, 0.8]`.
pub fn isolation_plant() -> PlantSpec {
    PlantSpec {
        a: vec![vec![0.5, 0.3], vec![0.2, 0.6]],
        b: vec![vec![0.05, 0.08], vec![0.07, 0.05]],
        c: diag2(1.0, 1.0),
        e: vec![vec![0.05, 0.03], vec![0.04, 0.05]],
        f: diag2(0.1, 0.1),
        fault_intervals: vec![[0.0, 0.8], [0.0, 0.8]],
        disturbance: ZonotopeSpec::cube(&[0.0, 0.0], 0.5),
        noise: ZonotopeSpec::cube(&[0.0, 0.0], 0.1),
    }
}

/// Plant with `A = [0.7 0.5; 0 0.7]` and fault intervals `[0, 0.9]`.
pub fn detection_plant() -> PlantSpec {
    PlantSpec {
        a: vec![vec![0.7, 0.5], vec![0.0, 0.7]],
        b: diag2(1.0, 1.0),
        c: vec![vec![0.5, 0.5], vec![0.0, 1.0]],
        e: diag2(0.5, 0.5),
        f: diag2(0.1, 0.1),
        fault_intervals: vec![[0.0, 0.9], [0.0, 0.9]],
        disturbance: ZonotopeSpec::cube(&[0.0, 0.0], 0.1),
        noise: ZonotopeSpec::cube(&[0.0, 0.0], 0.1),
    }
}

fn fault(actuator: usize) -> TrueModeSpec {
    let mut g = vec![1.0, 1.0];
    g[actuator] = 0.55;
    TrueModeSpec {
        index: Some(actuator + 1),
        g,
        inject_at: 0,
    }
}

/// Passive diagnosis of the fault in `actuator` (0 or 1) under the input
/// that excites it: `[-0.7, 3]` for the first, `[3, -0.7]` for the second.
pub fn pfd_isolation(actuator: usize, constrained: bool) -> Scenario {
    let u = if actuator == 0 { vec![-0.7, 3.0] } else { vec![3.0, -0.7] };
    Scenario {
        name: format!(
            "pfd-g{}{}",
            actuator + 1,
            if constrained { "-constrained" } else { "" }
        ),
        plant: isolation_plant(),
        observer_init: ZonotopeSpec::cube(&[0.55, 0.55], 0.5),
        aux_init: None,
        x0: vec![0.6, 0.6],
        true_mode: fault(actuator),
        input: InputPolicy::Constant { u },
        design: if constrained {
            DesignMode::PfdConstrained
        } else {
            DesignMode::PfdUnconstrained
        },
        modes: None,
        fixed_gain: None,
        stop: StopRule::Isolation,
        params: Params {
            horizon: 30,
            ..Params::default()
        },
    }
}

/// Joint gain and input design for the fault in `actuator`, with
/// `|u| <= 4` and auxiliary sets `<[0.6, 0.6], 0.1 I>`.
pub fn afd_isolation(actuator: usize) -> Scenario {
    Scenario {
        name: format!("afd-g{}", actuator + 1),
        aux_init: Some(ZonotopeSpec::cube(&[0.6, 0.6], 0.1)),
        input: InputPolicy::Designed {
            center: vec![0.0, 0.0],
            radius: 4.0,
        },
        design: DesignMode::AfdJoint,
        params: Params {
            horizon: 20,
            ..Params::default()
        },
        ..pfd_isolation(actuator, true)
    }
}

/// Detection of `G = diag(0.45, 0.45)` injected at step 29 with only the
/// healthy observer; the input is set per grid cell.
pub fn detection_grid_base() -> Scenario {
    Scenario {
        name: "detection-grid".into(),
        plant: detection_plant(),
        observer_init: ZonotopeSpec::cube(&[0.0, 0.0], 0.2),
        aux_init: None,
        x0: vec![0.0, 0.0],
        true_mode: TrueModeSpec {
            index: None,
            g: vec![0.45, 0.45],
            inject_at: 29,
        },
        input: InputPolicy::Constant { u: vec![0.26, 0.26] },
        design: DesignMode::PfdConstrained,
        modes: Some(vec![0]),
        fixed_gain: None,
        stop: StopRule::Detection,
        params: Params {
            horizon: 71,
            ..Params::default()
        },
    }
}

pub fn by_name(name: &str) -> Option<Scenario> {
    Some(match name {
        "pfd-g1" => pfd_isolation(0, false),
        "pfd-g2" => pfd_isolation(1, false),
        "pfd-g1-constrained" => pfd_isolation(0, true),
        "pfd-g2-constrained" => pfd_isolation(1, true),
        "afd-g1" => afd_isolation(0),
        "afd-g2" => afd_isolation(1),
        "detection-grid" => detection_grid_base(),
        _ => return None,
    })
}
