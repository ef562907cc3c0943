//! Discrete particle clouds realizing a time-dependent mass distribution.
//!
//! The model's distributed fields (density, mobile fraction, relative
//! velocity) are replaced by weighted particles whose weights and body-frame
//! motions follow closed-form laws of time. Integrals over the distribution
//! become sums, and every rate needed by the dynamics is available
//! analytically. The laws are functions of time only, which keeps the
//! equations of motion an ODE by construction.

use crate::algebra::skew;
use crate::inertial::InertialParams;
use crate::linalg::Vector3;
use crate::{Error, Result, Vec3, VecN};
use serde::{Deserialize, Serialize};

/// Body-frame motion of the mobile portion of a particle.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionLaw {
    Static,
    /// Constant relative velocity.
    ConstVel {
        vel_mps: [f64; 3],
    },
    /// Harmonic displacement `amp * sin(omega t + phase)` along `amp`.
    Oscillation {
        amp_m: [f64; 3],
        omega_radps: f64,
        phase_rad: f64,
    },
}

impl MotionLaw {
    /// Displacement of the mobile portion since `t = 0`.
    pub fn displacement(&self, t: f64) -> Vec3 {
        match *self {
            MotionLaw::Static => Vec3::zeros(),
            MotionLaw::ConstVel { vel_mps } => Vector3(vel_mps).scale(t),
            MotionLaw::Oscillation {
                amp_m,
                omega_radps,
                phase_rad,
            } => {
                let s = (omega_radps * t + phase_rad).sin() - phase_rad.sin();
                Vector3(amp_m).scale(s)
            }
        }
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        match *self {
            MotionLaw::Static => Vec3::zeros(),
            MotionLaw::ConstVel { vel_mps } => Vector3(vel_mps),
            MotionLaw::Oscillation {
                amp_m,
                omega_radps,
                phase_rad,
            } => Vector3(amp_m).scale(omega_radps * (omega_radps * t + phase_rad).cos()),
        }
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        match *self {
            MotionLaw::Static | MotionLaw::ConstVel { .. } => Vec3::zeros(),
            MotionLaw::Oscillation {
                amp_m,
                omega_radps,
                phase_rad,
            } => Vector3(amp_m)
                .scale(-omega_radps * omega_radps * (omega_radps * t + phase_rad).sin()),
        }
    }
}

/// Mass-weight law of one particle, modelling density change in place.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassLaw {
    Constant {
        value_kg: f64,
    },
    /// `base + rate * t`, e.g. a loading ramp.
    Linear {
        base_kg: f64,
        rate_kgps: f64,
    },
    /// `mean + amp * sin(omega t + phase)`.
    Sinusoid {
        mean_kg: f64,
        amp_kg: f64,
        omega_radps: f64,
        phase_rad: f64,
    },
    /// `base * exp(rate * t)`, the unbounded-growth counterexample.
    Exponential {
        base_kg: f64,
        rate_ps: f64,
    },
}

impl MassLaw {
    pub fn weight(&self, t: f64) -> f64 {
        match *self {
            MassLaw::Constant { value_kg } => value_kg,
            MassLaw::Linear { base_kg, rate_kgps } => base_kg + rate_kgps * t,
            MassLaw::Sinusoid {
                mean_kg,
                amp_kg,
                omega_radps,
                phase_rad,
            } => mean_kg + amp_kg * (omega_radps * t + phase_rad).sin(),
            MassLaw::Exponential { base_kg, rate_ps } => base_kg * (rate_ps * t).exp(),
        }
    }

    pub fn weight_rate(&self, t: f64) -> f64 {
        match *self {
            MassLaw::Constant { .. } => 0.0,
            MassLaw::Linear { rate_kgps, .. } => rate_kgps,
            MassLaw::Sinusoid {
                amp_kg,
                omega_radps,
                phase_rad,
                ..
            } => amp_kg * omega_radps * (omega_radps * t + phase_rad).cos(),
            MassLaw::Exponential { base_kg, rate_ps } => base_kg * rate_ps * (rate_ps * t).exp(),
        }
    }
}

/// One weighted particle of a body's mass distribution.
#[derive(Clone, Copy, Debug)]
pub struct Particle {
    /// Body-frame position at `t = 0`, in meters.
    pub position: Vec3,
    pub mass: MassLaw,
    /// Mobile fraction in `[0, 1]`.
    pub mobility: f64,
    pub motion: MotionLaw,
}

impl Particle {
    /// Position under transport of the mobile portion: `xdot = sigma * v`.
    pub fn position_at(&self, t: f64) -> Vec3 {
        self.position + self.motion.displacement(t).scale(self.mobility)
    }
}

/// All particles of one body.
#[derive(Clone, Debug, Default)]
pub struct ParticleCloud {
    particles: Vec<Particle>,
}

/// Lumped flow quantities of the whole chain at one instant.
#[derive(Clone, Debug)]
pub struct FlowState {
    /// Stacked 12-per-body flow vector.
    pub psi: VecN,
    pub psi_dot: VecN,
    /// Pose-independent kinetic offset in joules.
    pub nu: f64,
}

impl FlowState {
    pub fn zeros(body_count: usize) -> Self {
        FlowState {
            psi: VecN::zeros(12 * body_count),
            psi_dot: VecN::zeros(12 * body_count),
            nu: 0.0,
        }
    }
}

/// `replicate_vec3(x) * v`, the 9-vector with block `j` equal to `x * v_j`.
fn rep_mul(x: &Vec3, v: &Vec3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for j in 0..3 {
        for i in 0..3 {
            out[3 * j + i] = x[i] * v[j];
        }
    }
    out
}

impl ParticleCloud {
    pub fn new(particles: Vec<Particle>) -> Result<Self> {
        for (k, p) in particles.iter().enumerate() {
            if !p.position.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "particle {k}: non-finite position"
                )));
            }
            if !(0.0..=1.0).contains(&p.mobility) {
                return Err(Error::InvalidInput(format!(
                    "particle {k}: mobility {} outside [0, 1]",
                    p.mobility
                )));
            }
        }
        Ok(ParticleCloud { particles })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    fn weights_at(&self, t: f64) -> Result<Vec<f64>> {
        let mut w = Vec::with_capacity(self.particles.len());
        for (k, p) in self.particles.iter().enumerate() {
            let wk = p.mass.weight(t);
            if !wk.is_finite() || wk < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "particle {k}: weight {wk} at t = {t}"
                )));
            }
            w.push(wk);
        }
        Ok(w)
    }

    /// Inertial parameters by summation over the cloud.
    pub fn inertial_params(&self, t: f64) -> Result<InertialParams> {
        let w = self.weights_at(t)?;
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "cloud has nonpositive total mass {total} at t = {t}"
            )));
        }
        let mut h = Vec3::zeros();
        let mut inertia = crate::Mat3::zeros();
        for (p, &wk) in self.particles.iter().zip(&w) {
            let x = p.position_at(t);
            h = h + x.scale(wk);
            let sk = skew(&x);
            inertia = inertia + (sk.transpose() * sk).scale(wk);
        }
        InertialParams::new(total, h, inertia)
    }

    /// Analytic time derivative of the inertial parameters, consistent with
    /// weight change and transport of the mobile portions.
    pub fn param_rate(&self, t: f64) -> Result<InertialParams> {
        let mut mdot = 0.0;
        let mut hdot = Vec3::zeros();
        let mut idot = crate::Mat3::zeros();
        for p in &self.particles {
            let w = p.mass.weight(t);
            let wdot = p.mass.weight_rate(t);
            let x = p.position_at(t);
            let v = p.motion.velocity(t);
            let sx = skew(&x);
            let sv = skew(&v);
            mdot += wdot;
            hdot = hdot + x.scale(wdot) + v.scale(w * p.mobility);
            idot = idot
                + (sx.transpose() * sx).scale(wdot)
                + ((sv.transpose() * sx) + (sx.transpose() * sv)).scale(w * p.mobility);
        }
        InertialParams::new(mdot, hdot, idot)
    }

    /// The 12-vector of lumped relative-motion moments.
    pub fn flow_vector(&self, t: f64) -> VecN {
        let mut psi = VecN::zeros(12);
        for p in &self.particles {
            let ws = p.mass.weight(t) * p.mobility;
            if ws == 0.0 {
                continue;
            }
            let x = p.position_at(t);
            let v = p.motion.velocity(t);
            for i in 0..3 {
                psi[i] += ws * v[i];
            }
            let lower = rep_mul(&x, &v);
            for i in 0..9 {
                psi[3 + i] += ws * lower[i];
            }
        }
        psi
    }

    /// Analytic rate of [`Self::flow_vector`], with the transport term
    /// `xdot = sigma * v`.
    pub fn flow_rate(&self, t: f64) -> VecN {
        let mut out = VecN::zeros(12);
        for p in &self.particles {
            let sigma = p.mobility;
            let w = p.mass.weight(t);
            let wdot = p.mass.weight_rate(t);
            let x = p.position_at(t);
            let v = p.motion.velocity(t);
            let a = p.motion.acceleration(t);
            for i in 0..3 {
                out[i] += wdot * sigma * v[i] + w * sigma * a[i];
            }
            let ax_v = rep_mul(&x, &v);
            let ax_a = rep_mul(&x, &a);
            let av_v = rep_mul(&v, &v);
            for i in 0..9 {
                out[3 + i] += wdot * sigma * ax_v[i] + w * sigma * (ax_a[i] + sigma * av_v[i]);
            }
        }
        out
    }

    /// Kinetic energy offset carried by relative motion, `sum w sigma |v|^2`.
    pub fn kinetic_offset(&self, t: f64) -> f64 {
        self.particles
            .iter()
            .map(|p| p.mass.weight(t) * p.mobility * p.motion.velocity(t).norm_sq())
            .sum()
    }

    pub fn is_static(&self) -> bool {
        self.particles.iter().all(|p| {
            matches!(p.mass, MassLaw::Constant { .. })
                && (p.mobility == 0.0 || matches!(p.motion, MotionLaw::Static))
        })
    }
}

/// Assemble the stacked flow state for a list of per-body clouds.
pub fn flow_state(clouds: &[ParticleCloud], t: f64) -> FlowState {
    let n = clouds.len();
    let mut state = FlowState::zeros(n);
    for (l, cloud) in clouds.iter().enumerate() {
        let psi = cloud.flow_vector(t);
        let psi_dot = cloud.flow_rate(t);
        for i in 0..12 {
            state.psi[12 * l + i] = psi[i];
            state.psi_dot[12 * l + i] = psi_dot[i];
        }
        state.nu += cloud.kinetic_offset(t);
    }
    state
}

/// Inertial parameters of every body at `t`.
pub fn cloud_params(clouds: &[ParticleCloud], t: f64) -> Result<Vec<InertialParams>> {
    clouds.iter().map(|c| c.inertial_params(t)).collect()
}

/// Parameter rates of every body at `t`.
pub fn cloud_rates(clouds: &[ParticleCloud], t: f64) -> Result<Vec<InertialParams>> {
    clouds.iter().map(|c| c.param_rate(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inertial::check_consistency;
    use crate::Mat3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn still(position: Vec3, w: f64) -> Particle {
        Particle {
            position,
            mass: MassLaw::Constant { value_kg: w },
            mobility: 0.0,
            motion: MotionLaw::Static,
        }
    }

    fn random_cloud(rng: &mut ChaCha8Rng, mobile: bool) -> ParticleCloud {
        let n = rng.gen_range(4..12);
        let particles = (0..n)
            .map(|_| Particle {
                position: Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
                mass: MassLaw::Constant {
                    value_kg: rng.gen_range(0.05..1.5),
                },
                mobility: if mobile { rng.gen_range(0.0..1.0) } else { 0.0 },
                motion: if mobile {
                    MotionLaw::Oscillation {
                        amp_m: [
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(-0.5..0.5),
                        ],
                        omega_radps: rng.gen_range(0.5..3.0),
                        phase_rad: rng.gen_range(0.0..6.28),
                    }
                } else {
                    MotionLaw::Static
                },
            })
            .collect();
        ParticleCloud::new(particles).unwrap()
    }

    #[test]
    fn single_particle_at_origin() {
        let c = ParticleCloud::new(vec![still(Vec3::zeros(), 1.0)]).unwrap();
        let p = c.inertial_params(0.0).unwrap();
        assert_eq!(p.mass, 1.0);
        assert_eq!(p.first_moment.norm(), 0.0);
        assert_eq!(p.inertia.max_abs(), 0.0);
    }

    #[test]
    fn symmetric_pair_inertia() {
        let c = ParticleCloud::new(vec![
            still(Vec3::new(1.0, 0.0, 0.0), 0.5),
            still(Vec3::new(-1.0, 0.0, 0.0), 0.5),
        ])
        .unwrap();
        let p = c.inertial_params(0.0).unwrap();
        assert_eq!(p.mass, 1.0);
        assert!(p.first_moment.norm() < 1e-15);
        let expected = Mat3::from_rows([0., 0., 0.], [0., 1., 0.], [0., 0., 1.]);
        assert!((p.inertia - expected).max_abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_sphere_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (m, r) = (2.0, 1.3);
        let n = 100_000;
        let particles: Vec<Particle> = (0..n)
            .map(|_| {
                // uniform in the ball: random direction, radius ~ u^(1/3)
                let mut dir;
                loop {
                    dir = Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    if dir.norm_sq() <= 1.0 && dir.norm_sq() > 1e-12 {
                        break;
                    }
                }
                let scale = r * rng.gen_range(0.0f64..1.0).powf(1.0 / 3.0) / dir.norm();
                still(dir.scale(scale), m / n as f64)
            })
            .collect();
        let c = ParticleCloud::new(particles).unwrap();
        let p = c.inertial_params(0.0).unwrap();
        let expected = 0.4 * m * r * r;
        for i in 0..3 {
            let rel = (p.inertia[(i, i)] - expected).abs() / expected;
            assert!(rel < 0.01, "diagonal {i}: rel err {rel}");
        }
        assert!((p.mass - m).abs() < 1e-9);
    }

    #[test]
    fn rigid_cloud_has_zero_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_cloud(&mut rng, false);
        let rate = c.param_rate(0.7).unwrap();
        assert_eq!(rate.mass, 0.0);
        assert_eq!(rate.first_moment.norm(), 0.0);
        assert_eq!(rate.inertia.max_abs(), 0.0);
    }

    #[test]
    fn moving_point_first_moment_rate() {
        let c = ParticleCloud::new(vec![Particle {
            position: Vec3::zeros(),
            mass: MassLaw::Constant { value_kg: 1.0 },
            mobility: 1.0,
            motion: MotionLaw::ConstVel {
                vel_mps: [1.0, 0.0, 0.0],
            },
        }])
        .unwrap();
        let rate = c.param_rate(0.0).unwrap();
        assert_eq!(rate.mass, 0.0);
        assert!((rate.first_moment - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(rate.inertia.max_abs(), 0.0);
    }

    fn param_diff(a: &InertialParams, b: &InertialParams) -> f64 {
        let (pa, pb) = (a.to_phi(), b.to_phi());
        pa.iter()
            .zip(&pb)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn param_rate_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_cloud(&mut rng, true);
        let t = 0.4;
        let rate = c.param_rate(t).unwrap();
        let mut errs = Vec::new();
        for &delta in &[1e-4, 1e-5, 1e-6] {
            let plus = c.inertial_params(t + delta).unwrap();
            let minus = c.inertial_params(t - delta).unwrap();
            let fd = plus.scaled_add(1.0 / (2.0 * delta), &minus, -1.0 / (2.0 * delta));
            errs.push(param_diff(&rate, &fd));
        }
        // second-order between the first two steps; at 1e-6 cancellation
        // noise reaches the truncation level, so only an absolute floor
        assert!(errs[1] < 1e-8, "fd error at 1e-5: {}", errs[1]);
        assert!(errs[2] < 1e-8, "fd error at 1e-6: {}", errs[2]);
        let order = (errs[0] / errs[1]).log10();
        assert!(order > 1.6, "observed order {order:.2}, errs {errs:?}");
    }

    #[test]
    fn flow_vector_examples() {
        let c = ParticleCloud::new(vec![Particle {
            position: Vec3::zeros(),
            mass: MassLaw::Constant { value_kg: 1.0 },
            mobility: 1.0,
            motion: MotionLaw::ConstVel {
                vel_mps: [1.0, 0.0, 0.0],
            },
        }])
        .unwrap();
        let psi = c.flow_vector(0.0);
        assert_eq!(psi[0], 1.0);
        for i in 1..12 {
            assert_eq!(psi[i], 0.0);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut immobile = random_cloud(&mut rng, true);
        for p in &mut immobile.particles {
            p.mobility = 0.0;
        }
        assert_eq!(immobile.flow_vector(1.0).norm_inf(), 0.0);
    }

    #[test]
    fn opposite_particles_cancel_upper_block() {
        let mk = |x: f64, v: f64| Particle {
            position: Vec3::new(x, 0.0, 0.0),
            mass: MassLaw::Constant { value_kg: 1.0 },
            mobility: 1.0,
            motion: MotionLaw::ConstVel {
                vel_mps: [v, 0.0, 0.0],
            },
        };
        let c = ParticleCloud::new(vec![mk(1.0, 1.0), mk(-1.0, -1.0)]).unwrap();
        let psi = c.flow_vector(0.0);
        for i in 0..3 {
            assert_eq!(psi[i], 0.0, "upper block must cancel");
        }
        // lower blocks add: each contributes x*v_x = 1 in the first slot
        assert_eq!(psi[3], 2.0);
    }

    #[test]
    fn flow_rate_examples_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let static_cloud = random_cloud(&mut rng, false);
        assert_eq!(static_cloud.flow_rate(0.3).norm_inf(), 0.0);

        // constant velocity from the origin: transport term only
        let c = ParticleCloud::new(vec![Particle {
            position: Vec3::zeros(),
            mass: MassLaw::Constant { value_kg: 1.0 },
            mobility: 1.0,
            motion: MotionLaw::ConstVel {
                vel_mps: [0.5, -1.0, 2.0],
            },
        }])
        .unwrap();
        let rate = c.flow_rate(0.0);
        let v = Vec3::new(0.5, -1.0, 2.0);
        let expected = rep_mul(&v, &v);
        for i in 0..3 {
            assert_eq!(rate[i], 0.0);
        }
        for i in 0..9 {
            assert!((rate[3 + i] - expected[i]).abs() < 1e-15);
        }

        // central-difference oracle on a fully dynamic cloud
        let c = random_cloud(&mut rng, true);
        let t = 0.8;
        let analytic = c.flow_rate(t);
        let mut errs = Vec::new();
        for &delta in &[1e-4, 1e-5, 1e-6] {
            let fd = c
                .flow_vector(t + delta)
                .sub(&c.flow_vector(t - delta))
                .scale(1.0 / (2.0 * delta));
            errs.push(analytic.sub(&fd).norm_inf());
        }
        assert!(errs[1] < 1e-8);
        assert!(errs[2] < 1e-8);
        assert!((errs[0] / errs[1]).log10() > 1.6, "errs {errs:?}");
    }

    #[test]
    fn kinetic_offset_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(random_cloud(&mut rng, false).kinetic_offset(0.0), 0.0);

        let c = ParticleCloud::new(vec![Particle {
            position: Vec3::zeros(),
            mass: MassLaw::Constant { value_kg: 2.0 },
            mobility: 0.5,
            motion: MotionLaw::ConstVel {
                vel_mps: [3.0, 0.0, 0.0],
            },
        }])
        .unwrap();
        assert!((c.kinetic_offset(0.0) - 9.0).abs() < 1e-15);

        for _ in 0..1000 {
            let c = random_cloud(&mut rng, true);
            assert!(c.kinetic_offset(rng.gen_range(0.0..5.0)) >= 0.0);
        }
    }

    #[test]
    fn clouds_yield_consistent_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let c = random_cloud(&mut rng, true);
            let p = c.inertial_params(0.0).unwrap();
            let check = check_consistency(&p, 0.0).unwrap();
            assert!(check.lambda_min >= 0.0 || check.lambda_min > -1e-12);
        }
    }

    #[test]
    fn mobility_out_of_range_rejected() {
        let p = Particle {
            position: Vec3::zeros(),
            mass: MassLaw::Constant { value_kg: 1.0 },
            mobility: 1.5,
            motion: MotionLaw::Static,
        };
        assert!(ParticleCloud::new(vec![p]).is_err());
    }

    #[test]
    fn nonpositive_total_mass_rejected() {
        let c = ParticleCloud::new(vec![still(Vec3::zeros(), 0.0)]).unwrap();
        assert!(c.inertial_params(0.0).is_err());
    }
}
