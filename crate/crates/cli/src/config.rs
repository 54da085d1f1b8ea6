//! Run configuration: TOML file with flat dotted keys, overridden by CLI
//! flags. Unknown keys are rejected. The effective config is written next to
//! every artifact so a run can be reproduced from its output directory alone.

use serde::{Deserialize, Serialize};

use nsopt_core::noise::NoiseModel;
use nsopt_core::schedule::StepSchedule;
use nsopt_core::solver::{DEFAULT_GUARD_RADIUS, DEFAULT_LOG_STRIDE};

pub const DEFAULT_OUTPUT_DIR: &str = "nsopt-out";
/// The only environment override: output directory.
pub const OUTPUT_DIR_ENV: &str = "NSOPT_OUTPUT_DIR";

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum X0Spec {
    /// "default" uses the problem's default start.
    Named(String),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub form: Option<String>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub switch_k: Option<usize>,
    pub steps: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub tag: Option<String>,
    pub sigma: Option<f64>,
    pub radius: Option<f64>,
}

/// The on-disk config. Every field optional; flags override file values and
/// defaults fill the rest.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    #[serde(rename = "K")]
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub x0: Option<X0Spec>,
    pub output_dir: Option<String>,
    pub guard_radius: Option<f64>,
    pub log_stride: Option<usize>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub noise: NoiseSection,
    /// Optional campaign file path consumed by `verify`.
    pub campaign: Option<String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {}", e))
    }
}

/// Fully resolved configuration, serialized as the effective config artifact.
#[derive(Clone, Debug, Serialize)]
pub struct EffectiveConfig {
    pub problem: String,
    #[serde(rename = "K")]
    pub budget: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub output_dir: String,
    pub guard_radius: f64,
    pub log_stride: usize,
    pub schedule: StepSchedule,
    pub noise: NoiseModel,
}

pub struct Overrides {
    pub problem: Option<String>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub x0: Option<String>,
    pub out: Option<String>,
    pub guard: Option<f64>,
    pub stride: Option<usize>,
    pub form: Option<String>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub noise: Option<String>,
    pub sigma: Option<f64>,
    pub radius: Option<f64>,
}

pub fn build_schedule(section: &ScheduleSection) -> Result<StepSchedule, String> {
    let form = section.form.as_deref().unwrap_or("polynomial");
    match form {
        "polynomial" => StepSchedule::polynomial(
            section.c.unwrap_or(0.5),
            section.gamma.unwrap_or(0.75),
        )
        .map_err(|e| e.to_string()),
        "constant-then-decay" => StepSchedule::constant_then_decay(
            section.c.unwrap_or(0.5),
            section.switch_k.unwrap_or(100),
            section.gamma.unwrap_or(0.75),
        )
        .map_err(|e| e.to_string()),
        "table" => {
            let steps = section
                .steps
                .clone()
                .ok_or_else(|| "table schedule requires `schedule.steps`".to_string())?;
            StepSchedule::table(steps).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown schedule form `{}`", other)),
    }
}

pub fn build_noise(section: &NoiseSection) -> Result<NoiseModel, String> {
    let tag = section.tag.as_deref().unwrap_or("zero");
    match tag {
        "zero" => Ok(NoiseModel::Zero),
        "gaussian" | "gaussian-isotropic" => Ok(NoiseModel::GaussianIsotropic {
            sigma: section.sigma.unwrap_or(0.1),
        }),
        "bounded-uniform" => Ok(NoiseModel::BoundedUniform {
            radius: section.radius.unwrap_or(0.1),
        }),
        "state-scaled" | "state-scaled-gaussian" => Ok(NoiseModel::StateScaledGaussian {
            sigma: section.sigma.unwrap_or(0.1),
        }),
        other => Err(format!("unknown noise tag `{}`", other)),
    }
}

pub fn parse_x0(text: &str) -> Result<X0Spec, String> {
    if text == "default" {
        return Ok(X0Spec::Named("default".into()));
    }
    let coords: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    coords
        .map(X0Spec::Vector)
        .map_err(|e| format!("x0 parse error: {}", e))
}

/// Merge precedence: environment (output dir only) > flags > file > defaults.
pub fn resolve(file: FileConfig, ov: &Overrides) -> Result<EffectiveConfig, String> {
    let mut schedule = file.schedule.clone();
    if ov.form.is_some() {
        schedule.form = ov.form.clone();
    }
    if ov.c.is_some() {
        schedule.c = ov.c;
    }
    if ov.gamma.is_some() {
        schedule.gamma = ov.gamma;
    }
    let mut noise = file.noise.clone();
    if ov.noise.is_some() {
        noise.tag = ov.noise.clone();
    }
    if ov.sigma.is_some() {
        noise.sigma = ov.sigma;
    }
    if ov.radius.is_some() {
        noise.radius = ov.radius;
    }

    let problem = ov
        .problem
        .clone()
        .or(file.problem)
        .ok_or_else(|| "no problem selected (set `problem` or pass --problem)".to_string())?;
    let testbed = nsopt_core::testbed::by_name(&problem).map_err(|e| e.to_string())?;

    let x0_spec = match &ov.x0 {
        Some(text) => parse_x0(text)?,
        None => file.x0.unwrap_or(X0Spec::Named("default".into())),
    };
    let x0 = match x0_spec {
        X0Spec::Named(name) if name == "default" => testbed.default_x0.coords().to_vec(),
        X0Spec::Named(other) => return Err(format!("unknown x0 preset `{}`", other)),
        X0Spec::Vector(v) => v,
    };
    if x0.len() != testbed.dim() {
        return Err(format!(
            "x0 has dimension {} but `{}` has dimension {}",
            x0.len(),
            problem,
            testbed.dim()
        ));
    }

    let output_dir = std::env::var(OUTPUT_DIR_ENV)
        .ok()
        .or_else(|| ov.out.clone())
        .or(file.output_dir)
        .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string());

    Ok(EffectiveConfig {
        problem,
        budget: ov.budget.or(file.budget).unwrap_or(100_000),
        seed: ov.seed.or(file.seed).unwrap_or(42),
        x0,
        output_dir,
        guard_radius: ov.guard.or(file.guard_radius).unwrap_or(DEFAULT_GUARD_RADIUS),
        log_stride: ov.stride.or(file.log_stride).unwrap_or(DEFAULT_LOG_STRIDE),
        schedule: build_schedule(&schedule)?,
        noise: build_noise(&noise)?,
    })
}
