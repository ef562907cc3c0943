//! Sampled certificates for uniform mass-matrix bounds.
//!
//! The lower bound couples the worst consistency margin of the parameter
//! trajectory with the smallest Gram eigenvalue of the Jacobian; the upper
//! bound couples the largest pseudo-inertia eigenvalue with the largest
//! squared singular value (factor two). Both are verified against the sampled
//! mass-matrix spectrum on the same grids, so a certificate is always
//! reproducible from the grid it carries.

use crate::dynamics::q_block;
use crate::eigen;
use crate::inertial::{block_spatial_inertia, trajectory_margins, InertialParams, ParamTrajectory};
use crate::kinematics::{spectral_scan, Chain, JacobianScan, QGrid};
use crate::{Error, Result};
use rand::Rng;

/// Slack allowed when checking the bound inequalities on samples.
pub const SOUNDNESS_TOL: f64 = 1e-9;
/// Strictness gap for the lower bound (the bound inequality is strict).
pub const ALPHA1_GAP: f64 = 1e-6;

/// Sampled extrema of the mass-matrix spectrum over a q-grid and the
/// trajectory samples.
#[derive(Clone, Debug)]
pub struct MassSweep {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub argmin: (Vec<f64>, f64),
    pub argmax: (Vec<f64>, f64),
    pub points: usize,
}

/// Spectrum of `M(q, Theta(t_k))` over every grid point and sample time.
pub fn mass_spectrum_sweep(chain: &Chain, tr: &ParamTrajectory, grid: &QGrid) -> Result<MassSweep> {
    grid.validate(chain.dof())?;
    let blocks: Vec<crate::MatN> = (0..tr.times().len())
        .map(|k| block_spatial_inertia(&tr.sample(k)))
        .collect();
    let mut sweep = MassSweep {
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        argmin: (vec![], 0.0),
        argmax: (vec![], 0.0),
        points: 0,
    };
    let mut failure: Option<Error> = None;
    grid.for_each(|q| {
        if failure.is_some() {
            return;
        }
        let j = chain.jacobian(q);
        let jt = j.transpose();
        for (k, z) in blocks.iter().enumerate() {
            let m = jt.matmul(&z.matmul(&j));
            let m = m.add(&m.transpose()).scale(0.5);
            match eigen::sym_eigenvalues(&m) {
                Ok(w) => {
                    sweep.points += 1;
                    if w[0] < sweep.lambda_min {
                        sweep.lambda_min = w[0];
                        sweep.argmin = (q.to_vec(), tr.times()[k]);
                    }
                    let top = *w.last().unwrap();
                    if top > sweep.lambda_max {
                        sweep.lambda_max = top;
                        sweep.argmax = (q.to_vec(), tr.times()[k]);
                    }
                }
                Err(e) => failure = Some(e),
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(sweep),
    }
}

/// Lower uniform bound certificate.
#[derive(Clone, Debug)]
pub struct LowerBound {
    pub alpha1: f64,
    pub jac_inf: f64,
    pub consistency_inf: f64,
    pub normal: bool,
    pub uniformly_consistent: bool,
    /// Sampled `lambda_min(M) >= alpha1 - tol` everywhere.
    pub sound: bool,
    pub sampled_lambda_min: f64,
}

/// Upper uniform bound certificate.
#[derive(Clone, Debug)]
pub struct UpperBound {
    pub alpha2: f64,
    pub jac_sup: f64,
    pub consistency_sup: f64,
    pub jac_upper_bounded: bool,
    pub params_upper_bounded: bool,
    pub sound: bool,
    pub sampled_lambda_max: f64,
}

/// `alpha1 = (1 - gap) * min_l inf_t lambda_min(f) * inf_q lambda_min(J^T J)`.
///
/// A failed hypothesis (non-normal Jacobian, non-uniform consistency) yields
/// `alpha1 = 0` with the failing verdict, not an error.
pub fn lower_bound(
    tr: &ParamTrajectory,
    scan: &JacobianScan,
    sweep: &MassSweep,
    uniform_margin: f64,
) -> Result<LowerBound> {
    let margins = trajectory_margins(tr, 0.0, uniform_margin)?;
    let consistency_inf = margins
        .iter()
        .map(|m| m.inf_lambda_min)
        .fold(f64::INFINITY, f64::min);
    let uniformly_consistent = margins.iter().all(|m| m.uniformly_consistent);
    let alpha1 = if scan.normal && uniformly_consistent {
        (1.0 - ALPHA1_GAP) * consistency_inf * scan.inf_lambda_min
    } else {
        0.0
    };
    Ok(LowerBound {
        alpha1,
        jac_inf: scan.inf_lambda_min,
        consistency_inf,
        normal: scan.normal,
        uniformly_consistent,
        sound: sweep.lambda_min >= alpha1 - SOUNDNESS_TOL,
        sampled_lambda_min: sweep.lambda_min,
    })
}

/// `alpha2 = 2 * max_l sup_t lambda_max(f) * sup_q sigma_max(J)^2`.
pub fn upper_bound(
    tr: &ParamTrajectory,
    scan: &JacobianScan,
    sweep: &MassSweep,
    uniform_margin: f64,
) -> Result<UpperBound> {
    let margins = trajectory_margins(tr, 0.0, uniform_margin)?;
    let consistency_sup = margins
        .iter()
        .map(|m| m.sup_lambda_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let params_upper_bounded = margins.iter().all(|m| m.upper_bounded);
    let alpha2 = 2.0 * consistency_sup * scan.sup_lambda_max;
    Ok(UpperBound {
        alpha2,
        jac_sup: scan.sup_lambda_max,
        consistency_sup,
        jac_upper_bounded: scan.upper_bounded,
        params_upper_bounded,
        sound: sweep.lambda_max <= alpha2 + SOUNDNESS_TOL,
        sampled_lambda_max: sweep.lambda_max,
    })
}

/// Sampled `sup_q sigma_max(Q(q))`; exceeding `sqrt(2)` indicates a bug in
/// the flow projection and is reported as an internal failure.
pub fn q_norm_check(chain: &Chain, grid: &QGrid) -> Result<f64> {
    grid.validate(chain.dof())?;
    let mut sup = f64::NEG_INFINITY;
    let mut failure: Option<Error> = None;
    grid.for_each(|q| {
        if failure.is_some() {
            return;
        }
        match eigen::sigma_max(&q_block(chain, q)) {
            Ok(s) => sup = sup.max(s),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if sup > 2f64.sqrt() + SOUNDNESS_TOL {
        return Err(Error::InternalInvariant(format!(
            "sigma_max(Q) = {sup} exceeds sqrt(2)"
        )));
    }
    Ok(sup)
}

/// Rate-of-change certificate for the parameter-rate matrix.
#[derive(Clone, Debug)]
pub struct RateBound {
    /// Sampled `sup sigma_max(M(q, Thetad(t)))`.
    pub sup_sigma: f64,
    /// Analytic envelope `sup_t sigma_max(Z(Thetad)) * sup_q sigma_max(J)^2`.
    pub envelope: f64,
    /// Pointwise `sigma_max(M(q, Thd)) <= sigma_max(Z(Thd)) sigma_max(J)^2`.
    pub pointwise_sound: bool,
}

pub fn rate_bound(
    chain: &Chain,
    tr: &ParamTrajectory,
    grid: &QGrid,
    scan: &JacobianScan,
) -> Result<RateBound> {
    grid.validate(chain.dof())?;
    if !tr.has_rates() {
        return Err(Error::InvalidInput(
            "rate bound needs sampled parameter rates".into(),
        ));
    }
    let rate_blocks: Vec<crate::MatN> = (0..tr.times().len())
        .map(|k| block_spatial_inertia(&tr.rate_sample(k).unwrap()))
        .collect();
    let chi_per_sample: Vec<f64> = rate_blocks
        .iter()
        .map(eigen::sigma_max)
        .collect::<Result<_>>()?;
    let chi = chi_per_sample.iter().cloned().fold(0.0, f64::max);

    let mut sup = 0.0f64;
    let mut pointwise = true;
    let mut failure: Option<Error> = None;
    grid.for_each(|q| {
        if failure.is_some() {
            return;
        }
        let j = chain.jacobian(q);
        let js = match eigen::sigma_max(&j) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let jt = j.transpose();
        for (k, z) in rate_blocks.iter().enumerate() {
            match eigen::sigma_max(&jt.matmul(&z.matmul(&j))) {
                Ok(s) => {
                    sup = sup.max(s);
                    if s > chi_per_sample[k] * js * js + SOUNDNESS_TOL {
                        pointwise = false;
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RateBound {
        sup_sigma: sup,
        envelope: chi * scan.sup_lambda_max,
        pointwise_sound: pointwise,
    })
}

/// Complete certificate for one chain and parameter trajectory.
#[derive(Clone, Debug)]
pub struct BoundCertificate {
    pub lower: LowerBound,
    pub upper: UpperBound,
    pub jac_argmin: Vec<f64>,
    pub jac_argmax: Vec<f64>,
    pub q_norm_sup: f64,
    pub rate: Option<RateBound>,
    pub checked_points: usize,
    pub time_samples: usize,
    pub per_sample_consistent: bool,
    pub growth_trend: bool,
    pub params_constant: bool,
    /// Gram bounds of the Jacobian alone, the constant-parameter equivalence
    /// constants.
    pub beta1: f64,
    pub beta2: f64,
}

impl BoundCertificate {
    /// All four hypotheses sampled true.
    pub fn hypotheses_hold(&self) -> bool {
        self.lower.normal
            && self.upper.jac_upper_bounded
            && self.lower.uniformly_consistent
            && self.upper.params_upper_bounded
    }

    /// `0 < alpha1 <= alpha2 < inf` follows on the sampled certificate.
    pub fn bounds_chain_holds(&self) -> bool {
        self.hypotheses_hold()
            && self.lower.alpha1 > 0.0
            && self.lower.alpha1 <= self.upper.alpha2
            && self.upper.alpha2.is_finite()
            && self.lower.sound
            && self.upper.sound
    }
}

/// Which hypotheses the samples witness, and what follows from them.
#[derive(Clone, Debug)]
pub struct BoundsSummary {
    pub normal: bool,
    pub jac_upper_bounded: bool,
    pub uniformly_consistent: bool,
    pub params_upper_bounded: bool,
    pub bounds_hold: bool,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Jacobian Gram bounds, present when the parameters are constant over
    /// the samples (the equivalence constants of the constant case).
    pub constant_equivalence: Option<(f64, f64)>,
}

pub fn summarize_bounds(cert: &BoundCertificate) -> BoundsSummary {
    BoundsSummary {
        normal: cert.lower.normal,
        jac_upper_bounded: cert.upper.jac_upper_bounded,
        uniformly_consistent: cert.lower.uniformly_consistent,
        params_upper_bounded: cert.upper.params_upper_bounded,
        bounds_hold: cert.bounds_chain_holds(),
        alpha1: cert.lower.alpha1,
        alpha2: cert.upper.alpha2,
        constant_equivalence: if cert.params_constant {
            Some((cert.beta1, cert.beta2))
        } else {
            None
        },
    }
}

fn params_equal(a: &InertialParams, b: &InertialParams) -> bool {
    let (pa, pb) = (a.to_phi(), b.to_phi());
    pa.iter().zip(&pb).all(|(x, y)| (x - y).abs() < 1e-15)
}

/// Run every scan and assemble the certificate.
pub fn certify(
    chain: &Chain,
    tr: &ParamTrajectory,
    grid: &QGrid,
    restarts: usize,
    uniform_margin: f64,
    rng: &mut impl Rng,
) -> Result<BoundCertificate> {
    let scan = spectral_scan(chain, grid, restarts, rng)?;
    let sweep = mass_spectrum_sweep(chain, tr, grid)?;
    let lower = lower_bound(tr, &scan, &sweep, uniform_margin)?;
    let upper = upper_bound(tr, &scan, &sweep, uniform_margin)?;
    let q_norm_sup = q_norm_check(chain, grid)?;
    let rate = if tr.has_rates() {
        Some(rate_bound(chain, tr, grid, &scan)?)
    } else {
        None
    };
    let margins = trajectory_margins(tr, 0.0, uniform_margin)?;
    let params_constant = (0..tr.body_count()).all(|l| {
        let body = tr.body(l);
        body.iter().all(|p| params_equal(p, &body[0]))
    });
    Ok(BoundCertificate {
        jac_argmin: scan.argmin_q.clone(),
        jac_argmax: scan.argmax_q.clone(),
        lower,
        upper,
        q_norm_sup,
        rate,
        checked_points: sweep.points,
        time_samples: tr.times().len(),
        per_sample_consistent: margins.iter().all(|m| m.consistent_per_sample),
        growth_trend: margins.iter().any(|m| m.growth_trend),
        params_constant,
        beta1: scan.inf_lambda_min,
        beta2: scan.sup_lambda_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inertial::pseudo_inertia;
    use crate::kinematics::{planar_arm, Joint};
    use crate::{Mat3, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prismatic_x() -> Chain {
        Chain::new(
            vec![Joint::prismatic(Vec3::new(1.0, 0.0, 0.0))],
            Vec3::zeros(),
        )
        .unwrap()
    }

    fn constant_tr(params: Vec<InertialParams>, samples: usize) -> ParamTrajectory {
        let times: Vec<f64> = (0..samples).map(|k| k as f64 * 0.5).collect();
        let bodies = params
            .into_iter()
            .map(|p| vec![p; samples])
            .collect::<Vec<_>>();
        ParamTrajectory::new(times, bodies, None).unwrap()
    }

    #[test]
    fn prismatic_sphere_bounds_match_hand_values() {
        let chain = prismatic_x();
        let tr = constant_tr(vec![InertialParams::solid_sphere(1.0, 5f64.sqrt())], 5);
        let grid = QGrid::uniform(1, -1.0, 1.0, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cert = certify(&chain, &tr, &grid, 3, 1e-6, &mut rng).unwrap();
        // f = I4, J^T J = 1: alpha1 just below 1, alpha2 exactly 2
        assert!((cert.lower.alpha1 - (1.0 - ALPHA1_GAP)).abs() < 1e-9);
        assert!((cert.upper.alpha2 - 2.0).abs() < 1e-9);
        assert!(cert.lower.sound && cert.upper.sound);
        assert!((cert.lower.sampled_lambda_min - 1.0).abs() < 1e-12);
        assert!(cert.bounds_chain_holds());
        let report = summarize_bounds(&cert);
        assert!(report.bounds_hold);
        assert_eq!(report.constant_equivalence, Some((cert.beta1, cert.beta2)));
    }

    #[test]
    fn unit_ball_reproduces_jacobian_spectrum() {
        // Z = I makes the mass spectrum the Jacobian Gram spectrum exactly
        let chain = planar_arm(&[0.8], Vec3::zeros()).unwrap();
        let ball = InertialParams::new(1.0, Vec3::zeros(), Mat3::identity()).unwrap();
        let tr = constant_tr(vec![ball, ball], 3);
        let grid = QGrid::uniform(2, -3.1, 3.1, 25);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cert = certify(&chain, &tr, &grid, 5, 1e-6, &mut rng).unwrap();
        assert!((cert.lower.sampled_lambda_min - cert.lower.jac_inf).abs() < 1e-9);
        assert!((cert.upper.sampled_lambda_max - cert.upper.jac_sup).abs() < 1e-9);
        assert!((cert.lower.alpha1 - (1.0 - ALPHA1_GAP) * 0.5 * cert.lower.jac_inf).abs() < 1e-12);
        assert!((cert.upper.alpha2 - 2.0 * cert.upper.jac_sup).abs() < 1e-12);
    }

    #[test]
    fn vanishing_mass_fails_uniform_consistency() {
        let chain = prismatic_x();
        let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let body: Vec<_> = times
            .iter()
            .map(|&t| InertialParams::solid_sphere(10f64.powf(-0.7 * t), 1.0))
            .collect();
        let tr = ParamTrajectory::new(times, vec![body], None).unwrap();
        let grid = QGrid::uniform(1, -1.0, 1.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cert = certify(&chain, &tr, &grid, 2, 1e-6, &mut rng).unwrap();
        assert!(cert.per_sample_consistent);
        assert!(!cert.lower.uniformly_consistent);
        assert_eq!(cert.lower.alpha1, 0.0);
        assert!(cert.lower.sound, "alpha1 = 0 is trivially sound");
        assert!(!cert.bounds_chain_holds());
    }

    #[test]
    fn growing_mass_flags_upper_verdict() {
        let chain = prismatic_x();
        let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let body: Vec<_> = times
            .iter()
            .map(|&t| InertialParams::solid_sphere((0.5 * t).exp(), 1.0))
            .collect();
        let tr = ParamTrajectory::new(times, vec![body], None).unwrap();
        let grid = QGrid::uniform(1, -1.0, 1.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cert = certify(&chain, &tr, &grid, 2, 1e-6, &mut rng).unwrap();
        assert!(cert.growth_trend);
        assert!(!cert.upper.params_upper_bounded);
        assert!(!cert.hypotheses_hold());
    }

    #[test]
    fn q_norm_bounded_by_sqrt_two_with_unit_witness() {
        let chain = planar_arm(&[0.8], Vec3::zeros()).unwrap();
        let grid = QGrid::uniform(2, -3.1, 3.1, 9);
        let sup = q_norm_check(&chain, &grid).unwrap();
        assert!(sup <= 2f64.sqrt() + SOUNDNESS_TOL);
        assert!(sup >= 1.0);
    }

    #[test]
    fn rate_bound_examples() {
        let chain = prismatic_x();
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let sphere = InertialParams::solid_sphere(1.0, 0.5);

        // zero rates
        let tr = ParamTrajectory::new(
            times.clone(),
            vec![vec![sphere; 5]],
            Some(vec![vec![InertialParams::zero(); 5]]),
        )
        .unwrap();
        let grid = QGrid::uniform(1, -1.0, 1.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let scan = spectral_scan(&chain, &grid, 2, &mut rng).unwrap();
        let rb = rate_bound(&chain, &tr, &grid, &scan).unwrap();
        assert_eq!(rb.sup_sigma, 0.0);
        assert!(rb.pointwise_sound);

        // mdot = 0.1 makes the 1x1 rate matrix exactly 0.1
        let mut rate = InertialParams::zero();
        rate.mass = 0.1;
        let tr =
            ParamTrajectory::new(times, vec![vec![sphere; 5]], Some(vec![vec![rate; 5]])).unwrap();
        let rb = rate_bound(&chain, &tr, &grid, &scan).unwrap();
        assert!((rb.sup_sigma - 0.1).abs() < 1e-12);
        assert!(rb.sup_sigma <= rb.envelope + SOUNDNESS_TOL);
        assert!(rb.pointwise_sound);
    }

    #[test]
    fn rate_entries_bounded_by_pseudo_inertia_rate() {
        // entrywise chain from the rate-bound proof: with
        // sigma_max(f(Phid)) <= mu, mass, first-moment and off-diagonal
        // inertia rates stay within mu and diagonal inertia rates within 4 mu
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let phi: [f64; 10] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let rate = InertialParams::from_phi(&phi);
            let mu = eigen::sigma_max(&pseudo_inertia(&rate).0).unwrap();
            assert!(rate.mass.abs() <= mu + 1e-12);
            for i in 0..3 {
                assert!(rate.first_moment[i].abs() <= mu + 1e-12);
                assert!(rate.inertia[(i, i)].abs() <= 4.0 * mu + 1e-12);
                for j in 0..3 {
                    if i != j {
                        assert!(rate.inertia[(i, j)].abs() <= mu + 1e-12);
                    }
                }
            }
            // and therefore every entry of Z(Phid) is within 4 mu
            let z = crate::inertial::spatial_inertia(&rate).0;
            assert!(z.norm_inf() <= 4.0 * mu + 1e-12);
        }
    }

    #[test]
    fn rate_bound_requires_rates() {
        let chain = prismatic_x();
        let tr = constant_tr(vec![InertialParams::solid_sphere(1.0, 1.0)], 3);
        let grid = QGrid::uniform(1, 0.0, 1.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let scan = spectral_scan(&chain, &grid, 0, &mut rng).unwrap();
        assert!(rate_bound(&chain, &tr, &grid, &scan).is_err());
    }
}
