//! Scenario configuration: a strict TOML schema (unknown keys rejected) that
//! builds chains, bodies, scenarios and scan grids. Key names carry units
//! where a unit is fixed; joint coordinates are radians or meters depending
//! on the joint kind.

use crate::algebra::rotation;
use crate::inertial::{InertialParams, ParamTrajectory};
use crate::kinematics::{Chain, GridAxis, Joint, JointKind, QGrid};
use crate::linalg::{Matrix3, Vector3};
use crate::particles::{MassLaw, MotionLaw, Particle, ParticleCloud};
use crate::simulator::{ForceSource, Scenario};
use crate::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Seed for every random choice (scan restarts, verify tuples).
    #[serde(default)]
    pub seed: u64,
    pub chain: ChainConfig,
    pub bodies: Vec<BodyConfig>,
    pub scenario: Option<ScenarioConfig>,
    pub grids: Option<GridConfig>,
    #[serde(default)]
    pub consistency: ConsistencyConfig,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub gravity_mps2: [f64; 3],
    pub joints: Vec<JointConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub kind: JointKindConfig,
    pub axis: [f64; 3],
    #[serde(default)]
    pub offset_translation_m: [f64; 3],
    /// Fixed offset rotation as zyx angles, same convention as body
    /// orientations.
    #[serde(default)]
    pub offset_rotation_zyx_rad: [f64; 3],
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKindConfig {
    Revolute,
    Prismatic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub particles: Option<Vec<ParticleConfig>>,
    pub param_table: Option<ParamTableConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub position_m: [f64; 3],
    pub mass: MassLaw,
    #[serde(default)]
    pub mobility: f64,
    #[serde(default = "default_motion")]
    pub motion: MotionLaw,
}

fn default_motion() -> MotionLaw {
    MotionLaw::Static
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamTableConfig {
    pub times_s: Vec<f64>,
    pub samples: Vec<ParamSample>,
    pub rates: Option<Vec<ParamSample>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSample {
    pub mass_kg: f64,
    #[serde(default)]
    pub first_moment_kgm: [f64; 3],
    #[serde(default)]
    pub inertia_kgm2: [[f64; 3]; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub dt_s: f64,
    pub q0: Vec<f64>,
    pub qd0: Vec<f64>,
    #[serde(default = "default_force")]
    pub torque: ForceConfig,
    #[serde(default = "default_force")]
    pub disturbance: ForceConfig,
}

fn default_force() -> ForceConfig {
    ForceConfig::Zero
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceConfig {
    Zero,
    /// Constant joint force/torque, N or N m per joint kind.
    Constant {
        value: Vec<f64>,
    },
    Pd {
        target: Vec<f64>,
        kp: Vec<f64>,
        kd: Vec<f64>,
    },
    Table {
        times_s: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub q_min: Vec<f64>,
    pub q_max: Vec<f64>,
    pub q_count: Vec<usize>,
    /// Explicit sampling times for parameter trajectories built from clouds.
    pub times_s: Option<Vec<f64>>,
    /// Alternatively, sample the scenario span uniformly with this count.
    pub time_count: Option<usize>,
    #[serde(default = "default_restarts")]
    pub random_restarts: usize,
}

fn default_restarts() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyConfig {
    #[serde(default)]
    pub margin: f64,
    #[serde(default = "default_uniform_margin")]
    pub uniform_margin: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            margin: 0.0,
            uniform_margin: default_uniform_margin(),
        }
    }
}

fn default_uniform_margin() -> f64 {
    crate::inertial::DEFAULT_UNIFORM_MARGIN
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_tuples")]
    pub tuples: usize,
    /// Self-test hook: deliberately corrupt one invariant so the suite's
    /// failure path can be exercised.
    #[serde(default)]
    pub inject_fault: FaultInjection,
    pub oracle_times_s: Option<Vec<f64>>,
}

fn default_tuples() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FaultInjection {
    #[default]
    None,
    FlipHSign,
}

/// A body is either a particle cloud or a sampled parameter table.
#[derive(Clone, Debug)]
pub enum BodyModel {
    Cloud(ParticleCloud),
    Table {
        times: Vec<f64>,
        samples: Vec<InertialParams>,
        rates: Option<Vec<InertialParams>>,
    },
}

/// Parsed and validated configuration.
#[derive(Debug)]
pub struct Config {
    pub seed: u64,
    pub chain: Chain,
    pub bodies: Vec<BodyModel>,
    pub scenario: Option<ScenarioConfig>,
    pub grids: Option<GridConfig>,
    pub consistency: ConsistencyConfig,
    pub verify: VerifySection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| {
            let pointer = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "document".into());
            Error::config(pointer, e.message().to_string())
        })?;
        Self::build(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        Self::parse(&text)
    }

    fn build(file: ConfigFile) -> Result<Config> {
        let chain = build_chain(&file.chain)?;
        if file.bodies.len() != chain.body_count() {
            return Err(Error::config(
                "bodies",
                format!(
                    "{} bodies configured for {} joints",
                    file.bodies.len(),
                    chain.body_count()
                ),
            ));
        }
        let bodies = file
            .bodies
            .iter()
            .enumerate()
            .map(|(l, b)| build_body(l, b))
            .collect::<Result<Vec<_>>>()?;
        if let Some(s) = &file.scenario {
            let n = chain.dof();
            if s.q0.len() != n || s.qd0.len() != n {
                return Err(Error::config(
                    "scenario.q0",
                    format!("initial state must have {n} entries"),
                ));
            }
            let span_ok = s.dt_s.is_finite()
                && s.dt_s > 0.0
                && [s.t_start_s, s.t_end_s].iter().all(|t| t.is_finite())
                && s.t_end_s > s.t_start_s;
            if !span_ok {
                return Err(Error::config(
                    "scenario.dt_s",
                    "need dt_s > 0 and t_end_s > t_start_s",
                ));
            }
        }
        if let Some(g) = &file.grids {
            let n = chain.dof();
            if g.q_min.len() != n || g.q_max.len() != n || g.q_count.len() != n {
                return Err(Error::config(
                    "grids.q_min",
                    format!("grid axes must have {n} entries"),
                ));
            }
        }
        Ok(Config {
            seed: file.seed,
            chain,
            bodies,
            scenario: file.scenario,
            grids: file.grids,
            consistency: file.consistency,
            verify: file.verify,
        })
    }

    pub fn q_grid(&self) -> Result<QGrid> {
        let g = self
            .grids
            .as_ref()
            .ok_or_else(|| Error::config("grids", "section required for scans"))?;
        Ok(QGrid {
            axes: (0..self.chain.dof())
                .map(|k| GridAxis {
                    min: g.q_min[k],
                    max: g.q_max[k],
                    count: g.q_count[k],
                })
                .collect(),
        })
    }

    /// Sampling times for parameter trajectories: explicit grid times win,
    /// then shared table times, then a uniform sampling of the scenario span.
    pub fn sample_times(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.grids {
            if let Some(times) = &g.times_s {
                return Ok(times.clone());
            }
        }
        let table_times: Vec<&Vec<f64>> = self
            .bodies
            .iter()
            .filter_map(|b| match b {
                BodyModel::Table { times, .. } => Some(times),
                BodyModel::Cloud(_) => None,
            })
            .collect();
        if let Some(first) = table_times.first() {
            if table_times.iter().any(|t| t != first) {
                return Err(Error::config(
                    "bodies.param_table.times_s",
                    "all parameter tables must share the same sampling times",
                ));
            }
            return Ok((*first).clone());
        }
        if let Some(s) = &self.scenario {
            let count = self
                .grids
                .as_ref()
                .and_then(|g| g.time_count)
                .unwrap_or(21)
                .max(2);
            let (t0, t1) = (s.t_start_s, s.t_end_s);
            return Ok((0..count)
                .map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64)
                .collect());
        }
        Err(Error::config(
            "grids.times_s",
            "no sampling times: give grids.times_s, parameter tables, or a scenario span",
        ))
    }

    /// Parameter trajectory of all bodies at the resolved sample times.
    /// Rates are attached when every body provides them.
    pub fn param_trajectory(&self) -> Result<ParamTrajectory> {
        let times = self.sample_times()?;
        let mut params: Vec<Vec<InertialParams>> = Vec::with_capacity(self.bodies.len());
        let mut rates: Vec<Vec<InertialParams>> = Vec::with_capacity(self.bodies.len());
        let mut all_rates = true;
        for (l, body) in self.bodies.iter().enumerate() {
            match body {
                BodyModel::Cloud(cloud) => {
                    let p = times
                        .iter()
                        .map(|&t| cloud.inertial_params(t))
                        .collect::<Result<Vec<_>>>()?;
                    let r = times
                        .iter()
                        .map(|&t| cloud.param_rate(t))
                        .collect::<Result<Vec<_>>>()?;
                    params.push(p);
                    rates.push(r);
                }
                BodyModel::Table {
                    times: tt,
                    samples,
                    rates: rr,
                } => {
                    if *tt != times {
                        return Err(Error::config(
                            format!("bodies[{l}].param_table.times_s"),
                            "table times must equal the resolved sampling times",
                        ));
                    }
                    params.push(samples.clone());
                    match rr {
                        Some(r) => rates.push(r.clone()),
                        None => all_rates = false,
                    }
                }
            }
        }
        ParamTrajectory::new(times, params, if all_rates { Some(rates) } else { None })
    }

    pub fn clouds(&self) -> Result<Vec<ParticleCloud>> {
        self.bodies
            .iter()
            .enumerate()
            .map(|(l, b)| match b {
                BodyModel::Cloud(c) => Ok(c.clone()),
                BodyModel::Table { .. } => Err(Error::config(
                    format!("bodies[{l}]"),
                    "this command needs particle clouds, not parameter tables",
                )),
            })
            .collect()
    }

    pub fn build_scenario(&self) -> Result<Scenario> {
        let s = self
            .scenario
            .as_ref()
            .ok_or_else(|| Error::config("scenario", "section required to simulate"))?;
        Ok(Scenario {
            chain: self.chain.clone(),
            clouds: self.clouds()?,
            torque: build_force(&s.torque),
            disturbance: build_force(&s.disturbance),
            q0: s.q0.clone(),
            qd0: s.qd0.clone(),
            t_start: s.t_start_s,
            t_end: s.t_end_s,
            dt: s.dt_s,
        })
    }
}

fn build_chain(cfg: &ChainConfig) -> Result<Chain> {
    let joints = cfg
        .joints
        .iter()
        .map(|j| Joint {
            kind: match j.kind {
                JointKindConfig::Revolute => JointKind::Revolute,
                JointKindConfig::Prismatic => JointKind::Prismatic,
            },
            axis: Vector3(j.axis),
            offset_translation: Vector3(j.offset_translation_m),
            offset_rotation: rotation(&Vector3(j.offset_rotation_zyx_rad)),
        })
        .collect();
    Chain::new(joints, Vector3(cfg.gravity_mps2)).map_err(|e| match e {
        Error::UnsupportedChain(m) => Error::config("chain.joints", m),
        Error::InvalidInput(m) => Error::config("chain.joints", m),
        other => other,
    })
}

fn build_body(l: usize, cfg: &BodyConfig) -> Result<BodyModel> {
    match (&cfg.particles, &cfg.param_table) {
        (Some(_), Some(_)) | (None, None) => Err(Error::config(
            format!("bodies[{l}]"),
            "exactly one of `particles` or `param_table` must be given",
        )),
        (Some(particles), None) => {
            let cloud = ParticleCloud::new(
                particles
                    .iter()
                    .map(|p| Particle {
                        position: Vector3(p.position_m),
                        mass: p.mass,
                        mobility: p.mobility,
                        motion: p.motion,
                    })
                    .collect(),
            )
            .map_err(|e| Error::config(format!("bodies[{l}].particles"), e.to_string()))?;
            Ok(BodyModel::Cloud(cloud))
        }
        (None, Some(table)) => {
            let build_samples =
                |samples: &[ParamSample], field: &str| -> Result<Vec<InertialParams>> {
                    samples
                        .iter()
                        .map(|s| {
                            InertialParams::new(
                                s.mass_kg,
                                Vector3(s.first_moment_kgm),
                                Matrix3(s.inertia_kgm2),
                            )
                        })
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| {
                            Error::config(format!("bodies[{l}].param_table.{field}"), e.to_string())
                        })
                };
            let samples = build_samples(&table.samples, "samples")?;
            if samples.len() != table.times_s.len() {
                return Err(Error::config(
                    format!("bodies[{l}].param_table.samples"),
                    "one sample per time required",
                ));
            }
            let rates = match &table.rates {
                Some(r) => {
                    let rr = build_samples(r, "rates")?;
                    if rr.len() != table.times_s.len() {
                        return Err(Error::config(
                            format!("bodies[{l}].param_table.rates"),
                            "one rate per time required",
                        ));
                    }
                    Some(rr)
                }
                None => None,
            };
            Ok(BodyModel::Table {
                times: table.times_s.clone(),
                samples,
                rates,
            })
        }
    }
}

fn build_force(cfg: &ForceConfig) -> ForceSource {
    match cfg {
        ForceConfig::Zero => ForceSource::Zero,
        ForceConfig::Constant { value } => ForceSource::Constant(value.clone()),
        ForceConfig::Pd { target, kp, kd } => ForceSource::Pd {
            target: target.clone(),
            kp: kp.clone(),
            kd: kd.clone(),
        },
        ForceConfig::Table { times_s, values } => ForceSource::Table {
            times: times_s.clone(),
            values: values.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENDULUM: &str = r#"
seed = 7

[chain]
gravity_mps2 = [0.0, 9.81, 0.0]

[[chain.joints]]
kind = "revolute"
axis = [0.0, 0.0, 1.0]

[[chain.joints]]
kind = "revolute"
axis = [0.0, 0.0, 1.0]
offset_translation_m = [0.8, 0.0, 0.0]

[[bodies]]
name = "link1"
[[bodies.particles]]
position_m = [0.4, 0.0, 0.0]
mass = { kind = "constant", value_kg = 1.2 }

[[bodies]]
name = "link2"
[[bodies.particles]]
position_m = [0.3, 0.0, 0.0]
mass = { kind = "constant", value_kg = 0.7 }

[scenario]
t_end_s = 1.0
dt_s = 0.001
q0 = [0.9, -0.4]
qd0 = [0.0, 0.0]

[grids]
q_min = [-3.14, -3.14]
q_max = [3.14, 3.14]
q_count = [11, 11]
"#;

    #[test]
    fn parses_full_scenario() {
        let cfg = Config::parse(PENDULUM).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.chain.dof(), 2);
        let scenario = cfg.build_scenario().unwrap();
        assert_eq!(scenario.q0, vec![0.9, -0.4]);
        let grid = cfg.q_grid().unwrap();
        assert_eq!(grid.point_count(), 121);
        let tr = cfg.param_trajectory().unwrap();
        assert_eq!(tr.body_count(), 2);
        assert!(tr.has_rates());
        assert_eq!(tr.times().len(), 21);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = PENDULUM.replace("seed = 7", "seed = 7\nbogus_key = 1");
        let err = Config::parse(&bad).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
    }

    #[test]
    fn body_needs_exactly_one_source() {
        let bad = PENDULUM.replace(
            "[[bodies]]\nname = \"link2\"\n[[bodies.particles]]",
            "[[bodies]]\nname = \"link2\"\n[bodies.param_table]\ntimes_s = [0.0]\n[[bodies.param_table.samples]]\nmass_kg = 1.0\n\n[[bodies.particles]]",
        );
        assert!(Config::parse(&bad).is_err());
    }

    #[test]
    fn param_table_body_and_times() {
        let text = r#"
[chain]
gravity_mps2 = [0.0, 0.0, 0.0]
[[chain.joints]]
kind = "prismatic"
axis = [1.0, 0.0, 0.0]

[[bodies]]
[bodies.param_table]
times_s = [0.0, 1.0, 2.0]
[[bodies.param_table.samples]]
mass_kg = 1.0
inertia_kgm2 = [[0.4, 0.0, 0.0], [0.0, 0.4, 0.0], [0.0, 0.0, 0.4]]
[[bodies.param_table.samples]]
mass_kg = 0.5
inertia_kgm2 = [[0.2, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, 0.2]]
[[bodies.param_table.samples]]
mass_kg = 0.25
inertia_kgm2 = [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]]
"#;
        let cfg = Config::parse(text).unwrap();
        let tr = cfg.param_trajectory().unwrap();
        assert_eq!(tr.times(), &[0.0, 1.0, 2.0]);
        assert!(!tr.has_rates());
        assert!(cfg.clouds().is_err(), "tables cannot simulate");
    }

    #[test]
    fn table_and_pd_forces_parse() {
        let text = PENDULUM.replace(
            "[grids]",
            r#"[scenario.torque]
kind = "table"
times_s = [0.0, 1.0]
values = [[0.0, 0.0], [1.0, -1.0]]

[scenario.disturbance]
kind = "pd"
target = [0.0, 0.0]
kp = [1.0, 1.0]
kd = [0.5, 0.5]

[grids]"#,
        );
        let cfg = Config::parse(&text).unwrap();
        let scenario = cfg.build_scenario().unwrap();
        assert!(matches!(scenario.torque, crate::simulator::ForceSource::Table { .. }));
        assert!(matches!(
            scenario.disturbance,
            crate::simulator::ForceSource::Pd { .. }
        ));
        scenario.validate().unwrap();
    }

    #[test]
    fn wrong_dimension_pointered() {
        let bad = PENDULUM.replace("q0 = [0.9, -0.4]", "q0 = [0.9]");
        let err = Config::parse(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scenario.q0"), "{msg}");
    }

    #[test]
    fn unsupported_chain_is_config_error() {
        let bad = PENDULUM.replace(
            "axis = [0.0, 0.0, 1.0]\noffset",
            "axis = [1.0, 0.0, 0.0]\noffset",
        );
        let err = Config::parse(&bad).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}
