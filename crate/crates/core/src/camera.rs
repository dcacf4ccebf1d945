//! Smart-camera network simulator.
//!
//! Cameras hang above a rectangular ground plane and observe a disc whose
//! position and size follow from pan, tilt and zoom. Point targets arrive
//! at random and stay until some camera sees them. A camera earns credit
//! for every undetected target in its footprint, split evenly between all
//! cameras that see the same target in that step.

use std::f64::consts::{FRAC_PI_2, TAU};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentSchema, ConfigPartSchema, ConfigValue, PartKind, SampleLog, SampleRecord};

pub const PAN: &str = "pan";
pub const TILT: &str = "tilt";
pub const ZOOM: &str = "zoom";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtzConfig {
    /// Radians in `[0, 2π)`, measured from the +x axis.
    pub pan: f64,
    /// Radians away from straight down.
    pub tilt: f64,
    pub zoom: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub id: String,
    pub pose: CameraPose,
    /// Half opening angle of the view cone at zoom 1.
    pub base_half_angle: f64,
    pub tilt_max: f64,
    pub zoom_max: f64,
}

impl CameraSpec {
    pub fn contains(&self, ptz: &PtzConfig) -> bool {
        (0.0..TAU).contains(&ptz.pan)
            && (0.0..=self.tilt_max).contains(&ptz.tilt)
            && (1.0..=self.zoom_max).contains(&ptz.zoom)
    }

    fn schema(&self) -> AgentSchema {
        let real = |name: &str, lower, upper| ConfigPartSchema {
            name: name.into(),
            kind: PartKind::RealInterval { lower, upper },
        };
        AgentSchema {
            agent_id: self.id.clone(),
            parts: vec![
                real(PAN, 0.0, TAU),
                real(TILT, 0.0, self.tilt_max),
                real(ZOOM, 1.0, self.zoom_max),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub x: f64,
    pub y: f64,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub targets: Vec<Target>,
    pub arrival_rate: f64,
    /// Target extent: a target counts as observed when its centre lies within
    /// this distance of a footprint.
    pub detection_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Footprint {
    pub fn covers(&self, x: f64, y: f64, margin: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        dx.hypot(dy) <= self.radius + margin
    }
}

/// Ground disc seen by a camera: the view axis hits the plane at distance
/// `z·tan(tilt)` in the pan direction; the disc radius grows with height
/// and slant and shrinks with zoom.
pub fn fov_footprint(pose: &CameraPose, ptz: &PtzConfig, base_half_angle: f64) -> Footprint {
    let reach = pose.z * ptz.tilt.tan();
    Footprint {
        center: (pose.x + reach * ptz.pan.cos(), pose.y + reach * ptz.pan.sin()),
        radius: pose.z * (base_half_angle / ptz.zoom).tan() / ptz.tilt.cos(),
    }
}

/// Indices of the footprints covering each undetected target, in target order.
fn observers(scene: &Scene, footprints: &[Footprint]) -> Vec<(usize, Vec<usize>)> {
    scene
        .targets
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.detected)
        .filter_map(|(i, t)| {
            let seen: Vec<usize> = footprints
                .iter()
                .enumerate()
                .filter(|(_, f)| f.covers(t.x, t.y, scene.detection_radius))
                .map(|(c, _)| c)
                .collect();
            (!seen.is_empty()).then_some((i, seen))
        })
        .collect()
}

/// Credit of camera `c`: for every undetected target it covers, one over
/// the number of cameras covering that target.
pub fn camera_performance(scene: &Scene, footprints: &[Footprint], c: usize) -> f64 {
    observers(scene, footprints)
        .iter()
        .filter(|(_, seen)| seen.contains(&c))
        .map(|(_, seen)| 1.0 / seen.len() as f64)
        .sum()
}

pub fn system_performance(per_camera: &[f64]) -> f64 {
    per_camera.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    pub scene: Scene,
    pub cameras: Vec<CameraSpec>,
    /// Index of the next step.
    pub t: u64,
}

/// An undetected target seen during a step and the cameras that saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub target: usize,
    pub observers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub performances: Vec<f64>,
    pub observations: Vec<Observation>,
    pub record: SampleRecord,
}

/// Advances one step: new arrivals, footprints, credit on undetected
/// targets, then every observed target is marked detected.
///
/// # Panics
/// If `configs` does not hold one in-bounds configuration per camera.
pub fn step(state: &mut SceneState, configs: &[PtzConfig], rng: &mut impl Rng) -> StepOutcome {
    assert_eq!(configs.len(), state.cameras.len(), "one configuration per camera");
    let scene = &mut state.scene;
    if scene.arrival_rate > 0.0 {
        let arrivals = Poisson::new(scene.arrival_rate)
            .expect("arrival rate is positive and finite")
            .sample(rng) as u64;
        for _ in 0..arrivals {
            scene.targets.push(Target {
                x: rng.gen_range(0.0..=scene.width),
                y: rng.gen_range(0.0..=scene.height),
                detected: false,
            });
        }
    }

    let footprints: Vec<Footprint> = state
        .cameras
        .iter()
        .zip(configs)
        .map(|(cam, ptz)| {
            assert!(cam.contains(ptz), "{} configuration out of bounds: {ptz:?}", cam.id);
            fov_footprint(&cam.pose, ptz, cam.base_half_angle)
        })
        .collect();

    let seen = observers(scene, &footprints);
    let mut performances = vec![0.0; state.cameras.len()];
    for (_, cams) in &seen {
        let share = 1.0 / cams.len() as f64;
        for &c in cams {
            performances[c] += share;
        }
    }
    for (i, _) in &seen {
        scene.targets[*i].detected = true;
    }

    let mut config = IndexMap::new();
    let mut performance = IndexMap::new();
    for ((cam, ptz), perf) in state.cameras.iter().zip(configs).zip(&performances) {
        config.insert(
            cam.id.clone(),
            IndexMap::from([
                (PAN.to_string(), ConfigValue::Real(ptz.pan)),
                (TILT.to_string(), ConfigValue::Real(ptz.tilt)),
                (ZOOM.to_string(), ConfigValue::Real(ptz.zoom)),
            ]),
        );
        performance.insert(cam.id.clone(), *perf);
    }
    let record = SampleRecord {
        t: state.t,
        config,
        performance,
    };
    state.t += 1;
    StepOutcome {
        performances,
        observations: seen
            .into_iter()
            .map(|(target, observers)| Observation { target, observers })
            .collect(),
        record,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Every camera draws pan, tilt and zoom uniformly and independently each step.
    UniformRandomPtz,
    /// Constant configuration per camera.
    FixedPtz { configs: Vec<PtzConfig> },
}

fn default_policy() -> Policy {
    Policy::UniformRandomPtz
}

fn default_steps() -> usize {
    1000
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub arrival_rate: f64,
    pub detection_radius: f64,
    /// Targets present before the first step, as (x, y).
    #[serde(default)]
    pub initial_targets: Vec<(f64, f64)>,
    pub cameras: Vec<CameraSpec>,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown built-in scenario `{0}`")]
    UnknownScenario(String),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

const OVERLAP_PAIR: &str = include_str!("../scenarios/overlap-pair.json");

pub const BUILTIN_SCENARIOS: &[&str] = &["overlap-pair"];

pub fn builtin_scenario(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let text = match name {
        "overlap-pair" => OVERLAP_PAIR,
        other => return Err(ScenarioError::UnknownScenario(other.to_string())),
    };
    Ok(ScenarioSpec::from_json(text).expect("built-in scenarios are valid"))
}

impl ScenarioSpec {
    /// Parses and validates; errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(path, format!("must be positive and finite, got {v}")))
            }
        };
        positive("width", self.width)?;
        positive("height", self.height)?;
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return Err(invalid("arrival_rate", format!("must be non-negative, got {}", self.arrival_rate)));
        }
        if !(self.detection_radius.is_finite() && self.detection_radius >= 0.0) {
            return Err(invalid(
                "detection_radius",
                format!("must be non-negative, got {}", self.detection_radius),
            ));
        }
        for (i, &(x, y)) in self.initial_targets.iter().enumerate() {
            if !((0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)) {
                return Err(invalid(format!("initial_targets[{i}]"), "outside the scene"));
            }
        }
        if self.cameras.is_empty() {
            return Err(invalid("cameras", "at least one camera is required"));
        }
        let mut ids = std::collections::HashSet::new();
        for (i, cam) in self.cameras.iter().enumerate() {
            let at = |field: &str| format!("cameras[{i}].{field}");
            if !crate::model::is_valid_name(&cam.id) {
                return Err(invalid(at("id"), format!("`{}` is not [A-Za-z0-9_]+", cam.id)));
            }
            if !ids.insert(cam.id.as_str()) {
                return Err(invalid(at("id"), format!("duplicate camera id `{}`", cam.id)));
            }
            if !cam.pose.x.is_finite() || !cam.pose.y.is_finite() {
                return Err(invalid(at("pose"), "coordinates must be finite"));
            }
            positive(&at("pose.z"), cam.pose.z)?;
            if !(cam.base_half_angle > 0.0 && cam.base_half_angle < FRAC_PI_2) {
                return Err(invalid(at("base_half_angle"), "must lie in (0, π/2)"));
            }
            if !(cam.tilt_max > 0.0 && cam.tilt_max < FRAC_PI_2) {
                return Err(invalid(at("tilt_max"), "must lie in (0, π/2)"));
            }
            if !(cam.zoom_max.is_finite() && cam.zoom_max >= 1.0) {
                return Err(invalid(at("zoom_max"), "must be at least 1"));
            }
        }
        if let Policy::FixedPtz { configs } = &self.policy {
            check_fixed(&self.cameras, configs)?;
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> SceneState {
        SceneState {
            scene: Scene {
                width: self.width,
                height: self.height,
                targets: self
                    .initial_targets
                    .iter()
                    .map(|&(x, y)| Target { x, y, detected: false })
                    .collect(),
                arrival_rate: self.arrival_rate,
                detection_radius: self.detection_radius,
            },
            cameras: self.cameras.clone(),
            t: 0,
        }
    }

    pub fn schemas(&self) -> Vec<AgentSchema> {
        self.cameras.iter().map(CameraSpec::schema).collect()
    }
}

fn check_fixed(cameras: &[CameraSpec], configs: &[PtzConfig]) -> Result<(), ScenarioError> {
    if configs.len() != cameras.len() {
        return Err(invalid(
            "policy.configs",
            format!("expected {} configurations, got {}", cameras.len(), configs.len()),
        ));
    }
    for (i, (cam, ptz)) in cameras.iter().zip(configs).enumerate() {
        if !cam.contains(ptz) {
            return Err(invalid(format!("policy.configs[{i}]"), format!("out of bounds for {}", cam.id)));
        }
    }
    Ok(())
}

fn draw(cam: &CameraSpec, rng: &mut impl Rng) -> PtzConfig {
    PtzConfig {
        pan: rng.gen_range(0.0..TAU),
        tilt: rng.gen_range(0.0..=cam.tilt_max),
        zoom: rng.gen_range(1.0..=cam.zoom_max),
    }
}

/// Runs a scenario for `steps` steps under `policy`. The scenario's own
/// `steps`, `seed` and `policy` fields are ignored in favour of the
/// arguments.
pub fn run_scenario(spec: &ScenarioSpec, steps: usize, policy: &Policy, seed: u64) -> Result<SampleLog, ScenarioError> {
    run_scenario_with(spec, steps, policy, seed, |_, _| {})
}

/// [`run_scenario`] with a callback receiving the state after each step
/// and that step's outcome.
pub fn run_scenario_with(
    spec: &ScenarioSpec,
    steps: usize,
    policy: &Policy,
    seed: u64,
    mut inspect: impl FnMut(&SceneState, &StepOutcome),
) -> Result<SampleLog, ScenarioError> {
    spec.validate()?;
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if let Policy::FixedPtz { configs } = policy {
        check_fixed(&spec.cameras, configs)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = spec.initial_state();
    let mut log = SampleLog::new(spec.schemas());
    log.records.reserve(steps);
    for _ in 0..steps {
        let configs: Vec<PtzConfig> = match policy {
            Policy::UniformRandomPtz => state.cameras.iter().map(|c| draw(c, &mut rng)).collect(),
            Policy::FixedPtz { configs } => configs.clone(),
        };
        let outcome = step(&mut state, &configs, &mut rng);
        inspect(&state, &outcome);
        log.records.push(outcome.record);
    }
    Ok(log)
}
