//! Independent checks of the assembled equation of motion.
//!
//! The oracle never touches the Jacobian, the mass matrix or any assembled
//! term. It builds the Lagrangian from per-particle kinetic energies (the
//! un-collapsed form of the model) plus the potential, evaluates the
//! Euler-Lagrange expression by finite differences along a smooth joint path,
//! and returns the generalized force the assembled equation must reproduce.

use crate::dual::Dual;
use crate::kinematics::Chain;
use crate::linalg::Matrix3;
use crate::particles::ParticleCloud;
use crate::{Result, Vec3, VecN};

/// Time step for the outer d/dt difference.
pub const ORACLE_DT: f64 = 1e-5;
/// Step for the dL/dq difference.
pub const ORACLE_DQ: f64 = 1e-6;
/// Step for the dL/dqd difference. The Lagrangian is exactly quadratic in the
/// joint rates, so the central difference has no truncation error and the
/// step can be chosen large to suppress roundoff.
pub const ORACLE_DQD: f64 = 1e-3;

/// A smooth joint-space sample path with analytic derivatives.
pub trait QPath {
    fn q(&self, t: f64) -> Vec<f64>;
    fn qd(&self, t: f64) -> Vec<f64>;
    fn qdd(&self, t: f64) -> Vec<f64>;
}

/// `q_k(t) = offset_k + amp_k sin(omega_k t + phase_k)`.
#[derive(Clone, Debug)]
pub struct SinePath {
    pub offset: Vec<f64>,
    pub amp: Vec<f64>,
    pub omega: Vec<f64>,
    pub phase: Vec<f64>,
}

impl QPath for SinePath {
    fn q(&self, t: f64) -> Vec<f64> {
        (0..self.offset.len())
            .map(|k| self.offset[k] + self.amp[k] * (self.omega[k] * t + self.phase[k]).sin())
            .collect()
    }

    fn qd(&self, t: f64) -> Vec<f64> {
        (0..self.offset.len())
            .map(|k| self.amp[k] * self.omega[k] * (self.omega[k] * t + self.phase[k]).cos())
            .collect()
    }

    fn qdd(&self, t: f64) -> Vec<f64> {
        (0..self.offset.len())
            .map(|k| {
                -self.amp[k]
                    * self.omega[k]
                    * self.omega[k]
                    * (self.omega[k] * t + self.phase[k]).sin()
            })
            .collect()
    }
}

/// Kinetic energy as a direct sum of per-particle energies.
///
/// Body velocities come from dual time-propagation of the forward map, not
/// from the Jacobian, so the only shared primitive with the assembly path is
/// the forward map itself.
pub fn particle_kinetic_energy(
    chain: &Chain,
    clouds: &[ParticleCloud],
    q: &[f64],
    qd: &[f64],
    t: f64,
) -> f64 {
    let seeded: Vec<Dual<f64>> = q.iter().zip(qd).map(|(&x, &v)| Dual::new(x, v)).collect();
    let pose = chain.forward_map(&seeded);
    let mut energy = 0.0;
    for (l, cloud) in clouds.iter().enumerate() {
        let v_l = Vec3::new(pose.z[l][0].eps, pose.z[l][1].eps, pose.z[l][2].eps);
        let omega_l = Vec3::new(pose.phi[l][0].eps, pose.phi[l][1].eps, pose.phi[l][2].eps);
        let rot = Matrix3(pose.rot[l].0.map(|row| row.map(|d| d.re)));
        for p in cloud.particles() {
            let w = p.mass.weight(t);
            let sigma = p.mobility;
            let x = p.position_at(t);
            let rigid = v_l + omega_l.cross(&x);
            let mut e = (1.0 - sigma) * rigid.norm_sq();
            if sigma > 0.0 {
                let moving = rigid + rot.mul_vec(&p.motion.velocity(t));
                e += sigma * moving.norm_sq();
            }
            energy += 0.5 * w * e;
        }
    }
    energy
}

/// Potential energy evaluated from the cloud parameters at `t`.
fn potential_from_clouds(
    chain: &Chain,
    clouds: &[ParticleCloud],
    q: &[f64],
    t: f64,
) -> Result<f64> {
    let theta = crate::particles::cloud_params(clouds, t)?;
    Ok(crate::dynamics::potential_energy(chain, q, &theta))
}

fn lagrangian(
    chain: &Chain,
    clouds: &[ParticleCloud],
    q: &[f64],
    qd: &[f64],
    t: f64,
) -> Result<f64> {
    Ok(particle_kinetic_energy(chain, clouds, q, qd, t)
        - potential_from_clouds(chain, clouds, q, t)?)
}

/// dL/dqd at one state, by central differences in each rate.
fn dl_dqd(
    chain: &Chain,
    clouds: &[ParticleCloud],
    q: &[f64],
    qd: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let n = q.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut plus = qd.to_vec();
        let mut minus = qd.to_vec();
        plus[k] += ORACLE_DQD;
        minus[k] -= ORACLE_DQD;
        let lp = lagrangian(chain, clouds, q, &plus, t)?;
        let lm = lagrangian(chain, clouds, q, &minus, t)?;
        out.push((lp - lm) / (2.0 * ORACLE_DQD));
    }
    Ok(out)
}

/// Euler-Lagrange evaluation `d/dt (dL/dqd) - dL/dq` along a path: the
/// generalized force (applied torque plus disturbance) acting at time `t`.
pub fn lagrangian_oracle(
    chain: &Chain,
    clouds: &[ParticleCloud],
    path: &dyn QPath,
    t: f64,
) -> Result<VecN> {
    let n = chain.dof();
    assert_eq!(clouds.len(), chain.body_count());

    // outer time derivative of the conjugate momenta
    let (tp, tm) = (t + ORACLE_DT, t - ORACLE_DT);
    let p_plus = dl_dqd(chain, clouds, &path.q(tp), &path.qd(tp), tp)?;
    let p_minus = dl_dqd(chain, clouds, &path.q(tm), &path.qd(tm), tm)?;

    // configuration gradient at t
    let q = path.q(t);
    let qd = path.qd(t);
    let mut force = VecN::zeros(n);
    for k in 0..n {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[k] += ORACLE_DQ;
        qm[k] -= ORACLE_DQ;
        let lp = lagrangian(chain, clouds, &qp, &qd, t)?;
        let lm = lagrangian(chain, clouds, &qm, &qd, t)?;
        let dl_dq = (lp - lm) / (2.0 * ORACLE_DQ);
        force[k] = (p_plus[k] - p_minus[k]) / (2.0 * ORACLE_DT) - dl_dq;
    }
    Ok(force)
}
