//! Fixed-step time integration of the equation of motion with time-varying
//! particle clouds, plus the per-sample energy audit.

use crate::dynamics::{assemble, forward_dynamics, mass_matrix, potential_energy};
use crate::kinematics::Chain;
use crate::particles::{cloud_params, cloud_rates, flow_state, ParticleCloud};
use crate::{Error, Result, VecN};

/// Torque / disturbance sources available to a scenario.
#[derive(Clone, Debug)]
pub enum ForceSource {
    Zero,
    Constant(Vec<f64>),
    /// `kp (target - q) - kd qd`, a convenience stimulus.
    Pd {
        target: Vec<f64>,
        kp: Vec<f64>,
        kd: Vec<f64>,
    },
    /// Piecewise-linear interpolation, clamped at the ends.
    Table {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl ForceSource {
    pub fn eval(&self, t: f64, q: &[f64], qd: &[f64]) -> VecN {
        let n = q.len();
        match self {
            ForceSource::Zero => VecN::zeros(n),
            ForceSource::Constant(v) => VecN::from_slice(v),
            ForceSource::Pd { target, kp, kd } => {
                let mut out = VecN::zeros(n);
                for k in 0..n {
                    out[k] = kp[k] * (target[k] - q[k]) - kd[k] * qd[k];
                }
                out
            }
            ForceSource::Table { times, values } => {
                if t <= times[0] {
                    return VecN::from_slice(&values[0]);
                }
                if t >= *times.last().unwrap() {
                    return VecN::from_slice(values.last().unwrap());
                }
                let idx = times.partition_point(|&x| x <= t).min(times.len() - 1);
                let (t0, t1) = (times[idx - 1], times[idx]);
                let s = (t - t0) / (t1 - t0);
                let mut out = VecN::zeros(n);
                for k in 0..n {
                    out[k] = values[idx - 1][k] * (1.0 - s) + values[idx][k] * s;
                }
                out
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let dim_ok = match self {
            ForceSource::Zero => true,
            ForceSource::Constant(v) => v.len() == n,
            ForceSource::Pd { target, kp, kd } => {
                target.len() == n && kp.len() == n && kd.len() == n
            }
            ForceSource::Table { times, values } => {
                !times.is_empty()
                    && times.windows(2).all(|w| w[1] > w[0])
                    && values.len() == times.len()
                    && values.iter().all(|v| v.len() == n)
            }
        };
        if dim_ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "force source dimensions do not match the chain".into(),
            ))
        }
    }
}

/// One executable simulation setup.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub chain: Chain,
    pub clouds: Vec<ParticleCloud>,
    pub torque: ForceSource,
    pub disturbance: ForceSource,
    pub q0: Vec<f64>,
    pub qd0: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.chain.dof();
        if self.clouds.len() != self.chain.body_count() {
            return Err(Error::InvalidInput(format!(
                "{} clouds for {} bodies",
                self.clouds.len(),
                self.chain.body_count()
            )));
        }
        if self.q0.len() != n || self.qd0.len() != n {
            return Err(Error::InvalidInput(
                "initial state dimension mismatch".into(),
            ));
        }
        let span_ok = self.dt.is_finite()
            && self.dt > 0.0
            && [self.t_start, self.t_end].iter().all(|t| t.is_finite())
            && self.t_end > self.t_start;
        if !span_ok {
            return Err(Error::InvalidInput("time span or step not positive".into()));
        }
        self.torque.validate(n)?;
        self.disturbance.validate(n)?;
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round().max(1.0) as usize
    }
}

/// Kinetic decomposition and potential at one state.
#[derive(Clone, Copy, Debug)]
pub struct EnergyBreakdown {
    /// `qd^T M qd / 2`.
    pub quadratic: f64,
    /// `nu / 2`.
    pub offset: f64,
    /// `qd^T J^T Q Psi`.
    pub cross: f64,
    pub potential: f64,
}

impl EnergyBreakdown {
    pub fn kinetic(&self) -> f64 {
        self.quadratic + self.offset + self.cross
    }

    pub fn total(&self) -> f64 {
        self.kinetic() + self.potential
    }
}

/// Assembled three-term kinetic energy plus potential at `(q, qd, t)`.
pub fn energy(
    chain: &Chain,
    clouds: &[ParticleCloud],
    q: &[f64],
    qd: &[f64],
    t: f64,
) -> Result<EnergyBreakdown> {
    let theta = cloud_params(clouds, t)?;
    let flow = flow_state(clouds, t);
    let qd_v = VecN::from_slice(qd);
    let m = mass_matrix(chain, q, &theta);
    let quadratic = 0.5 * qd_v.dot(&m.mul_vec(&qd_v));
    let b = crate::dynamics::jq_flow_in::<f64>(chain, q, &flow.psi);
    Ok(EnergyBreakdown {
        quadratic,
        offset: 0.5 * flow.nu,
        cross: qd_v.dot(&b),
        potential: potential_energy(chain, q, &theta),
    })
}

/// One recorded trajectory sample.
#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub nu: f64,
    /// Accumulated `integral qd . (J^T Q Psid) dt`, a diagnostic only (not a
    /// model quantity).
    pub flow_work: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy.total();
        self.samples
            .iter()
            .map(|s| (s.energy.total() - e0).abs())
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().unwrap()
    }
}

fn eval_accel(scenario: &Scenario, t: f64, q: &[f64], qd: &[f64]) -> Result<VecN> {
    let theta = cloud_params(&scenario.clouds, t)?;
    let rates = cloud_rates(&scenario.clouds, t)?;
    let flow = flow_state(&scenario.clouds, t);
    let terms = assemble(&scenario.chain, q, qd, &theta, &rates, &flow)?;
    let tau = scenario.torque.eval(t, q, qd);
    let w = scenario.disturbance.eval(t, q, qd);
    let qdd = forward_dynamics(&terms, &tau, &w).map_err(|e| match e {
        Error::SingularMassMatrix { lambda_min, q } => Error::NumericFailure(format!(
            "singular mass matrix during integration: lambda_min = {lambda_min:.3e} \
             at t = {t:.6}, q = {q:?}, qd = {qd:?}"
        )),
        other => other,
    })?;
    Ok(qdd)
}

/// One classical fourth-order step from `(t, q, qd)`.
///
/// Position slopes are the stage velocities, velocity slopes the stage
/// accelerations; each stage advances the position with the previous stage's
/// velocity.
pub fn step(
    scenario: &Scenario,
    t: f64,
    q: &[f64],
    qd: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = q.len();
    let h = dt;
    let stage = |kv: &[f64], ka: &VecN, w: f64| -> (Vec<f64>, Vec<f64>) {
        let qs = (0..n).map(|i| q[i] + w * kv[i]).collect::<Vec<_>>();
        let vs = (0..n).map(|i| qd[i] + w * ka[i]).collect::<Vec<_>>();
        (qs, vs)
    };

    let k1a = eval_accel(scenario, t, q, qd)?;
    let (q2, v2) = stage(qd, &k1a, 0.5 * h);
    let k2a = eval_accel(scenario, t + 0.5 * h, &q2, &v2)?;
    let (q3, v3) = stage(&v2, &k2a, 0.5 * h);
    let k3a = eval_accel(scenario, t + 0.5 * h, &q3, &v3)?;
    let (q4, v4) = stage(&v3, &k3a, h);
    let k4a = eval_accel(scenario, t + h, &q4, &v4)?;

    let mut q_next = vec![0.0; n];
    let mut qd_next = vec![0.0; n];
    for i in 0..n {
        let dq = qd[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i];
        let dv = k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i];
        q_next[i] = q[i] + h * dq / 6.0;
        qd_next[i] = qd[i] + h * dv / 6.0;
    }
    Ok((q_next, qd_next))
}

fn record(scenario: &Scenario, t: f64, q: &[f64], qd: &[f64], flow_work: f64) -> Result<Sample> {
    let qdd = eval_accel(scenario, t, q, qd)?;
    let e = energy(&scenario.chain, &scenario.clouds, q, qd, t)?;
    let flow = flow_state(&scenario.clouds, t);
    Ok(Sample {
        t,
        q: q.to_vec(),
        qd: qd.to_vec(),
        qdd: (0..q.len()).map(|i| qdd[i]).collect(),
        energy: e,
        nu: flow.nu,
        flow_work,
    })
}

/// Power fed through the flow-acceleration forcing, `qd . (J^T Q Psid)`.
fn flow_power(scenario: &Scenario, t: f64, q: &[f64], qd: &[f64]) -> f64 {
    let flow = flow_state(&scenario.clouds, t);
    let b = crate::dynamics::jq_flow_in::<f64>(&scenario.chain, q, &flow.psi_dot);
    VecN::from_slice(qd).dot(&b)
}

/// Integrate the scenario over its whole span, recording every step.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let steps = scenario.step_count();
    let dt = (scenario.t_end - scenario.t_start) / steps as f64;
    let mut t = scenario.t_start;
    let mut q = scenario.q0.clone();
    let mut qd = scenario.qd0.clone();
    let mut flow_work = 0.0;
    let mut power_prev = flow_power(scenario, t, &q, &qd);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(record(scenario, t, &q, &qd, flow_work)?);
    for k in 0..steps {
        let (qn, qdn) = step(scenario, t, &q, &qd, dt)?;
        q = qn;
        qd = qdn;
        t = scenario.t_start + (k + 1) as f64 * dt;
        let power = flow_power(scenario, t, &q, &qd);
        flow_work += 0.5 * (power_prev + power) * dt;
        power_prev = power;
        samples.push(record(scenario, t, &q, &qd, flow_work)?);
    }
    Ok(Trajectory { samples })
}

/// Rigid cloud from weighted points, a convenience for tests and scenarios.
pub fn static_cloud_from_points(points: &[(f64, crate::Vec3)]) -> Result<ParticleCloud> {
    use crate::particles::{MassLaw, MotionLaw, Particle};
    ParticleCloud::new(
        points
            .iter()
            .map(|&(w, x)| Particle {
                position: x,
                mass: MassLaw::Constant { value_kg: w },
                mobility: 0.0,
                motion: MotionLaw::Static,
            })
            .collect(),
    )
}
