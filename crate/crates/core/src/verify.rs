//! Property suite run by the `verify` subcommand: structural identities of
//! the assembled equation checked on the configured system with seeded
//! randomness.

use crate::algebra::{rotation, skew, swap_factorization};
use crate::config::FaultInjection;
use crate::dual::Dual;
use crate::dynamics;
use crate::eigen;
use crate::inertial::InertialParams;
use crate::kinematics::Chain;
use crate::oracle::{lagrangian_oracle, QPath, SinePath};
use crate::particles::{flow_state, ParticleCloud};
use crate::{MatN, Result, Vec3, VecN};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    /// Worst residual observed, for the report.
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, residual: f64, tolerance: f64, detail: String) -> Self {
        CheckResult {
            name,
            pass: residual <= tolerance,
            residual,
            tolerance,
            detail,
        }
    }
}

pub struct SuiteOutcome {
    pub checks: Vec<CheckResult>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn random_q(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-3.1..3.1)).collect()
}

fn random_params(rng: &mut ChaCha8Rng, bodies: usize) -> Vec<InertialParams> {
    (0..bodies)
        .map(|_| {
            let phi: [f64; 10] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            InertialParams::from_phi(&phi)
        })
        .collect()
}

/// Skew symmetry of `Mdot - 2C - M(q, Thd)` and of `H`.
pub fn check_skew_symmetry(
    chain: &Chain,
    tuples: usize,
    rng: &mut ChaCha8Rng,
    fault: FaultInjection,
) -> (CheckResult, CheckResult) {
    let n = chain.dof();
    let mut worst_n = 0.0f64;
    let mut worst_h = 0.0f64;
    for _ in 0..tuples {
        let q = random_q(rng, n);
        let qd: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let theta = random_params(rng, chain.body_count());
        let rates = random_params(rng, chain.body_count());
        let mdot = dynamics::mass_matrix_time_derivative(chain, &q, &qd, &theta, &rates);
        let c = dynamics::coriolis(chain, &q, &qd, &theta);
        let frate = dynamics::param_rate_matrix(chain, &q, &rates);
        let nmat = mdot.sub(&c.scale(2.0)).sub(&frate);
        worst_n = worst_n.max(nmat.add(&nmat.transpose()).norm_inf());

        let psi = VecN::from_vec(
            (0..12 * chain.body_count())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
        let h = match fault {
            FaultInjection::None => dynamics::h_matrix(chain, &q, &psi),
            // corrupted variant: drop the antisymmetrization minus sign
            FaultInjection::FlipHSign => {
                let mut d = MatN::zeros(n, n);
                for i in 0..n {
                    let qdual: Vec<Dual<f64>> = q
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| {
                            if k == i {
                                Dual::variable(v)
                            } else {
                                Dual::constant(v)
                            }
                        })
                        .collect();
                    let b = dynamics::jq_flow_in(chain, &qdual, &psi);
                    for k in 0..n {
                        d[(k, i)] = b[k].eps;
                    }
                }
                d.add(&d.transpose())
            }
        };
        worst_h = worst_h.max(h.add(&h.transpose()).norm_inf());
    }
    (
        CheckResult::new(
            "passivity_skew",
            worst_n,
            1e-9,
            format!("{tuples} random states"),
        ),
        CheckResult::new(
            "h_skew",
            worst_h,
            1e-12,
            format!("{tuples} random flow states"),
        ),
    )
}

/// Regressor identity `M a + C v + G = R Theta`.
pub fn check_regressor(chain: &Chain, tuples: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let n = chain.dof();
    let mut worst = 0.0f64;
    for _ in 0..tuples {
        let q = random_q(rng, n);
        let qd: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let theta = random_params(rng, chain.body_count());
        let r = dynamics::regressor(chain, &q, &qd, &v, &a);
        let lhs = dynamics::mass_matrix(chain, &q, &theta)
            .mul_vec(&VecN::from_slice(&a))
            .add(&dynamics::coriolis(chain, &q, &qd, &theta).mul_vec(&VecN::from_slice(&v)))
            .add(&dynamics::gravity_vector(chain, &q, &theta));
        worst = worst.max(lhs.sub(&r.apply(&theta)).norm_inf());
    }
    CheckResult::new("regressor", worst, 1e-9, format!("{tuples} random tuples"))
}

/// Sampled flow-projection norm bound.
pub fn check_flow_projection_norm(
    chain: &Chain,
    tuples: usize,
    rng: &mut ChaCha8Rng,
) -> CheckResult {
    let n = chain.dof();
    let mut sup = 0.0f64;
    let mut status = String::new();
    for _ in 0..tuples {
        let q = random_q(rng, n);
        match eigen::sigma_max(&dynamics::q_block(chain, &q)) {
            Ok(s) => sup = sup.max(s),
            Err(e) => {
                status = e.to_string();
                break;
            }
        }
    }
    let excess = (sup - 2f64.sqrt()).max(0.0);
    CheckResult::new(
        "flow_projection_norm",
        excess,
        1e-9,
        if status.is_empty() {
            format!("sup sigma_max = {sup:.15} over {tuples} random q")
        } else {
            status
        },
    )
}

/// The S/T cross-product factorization.
pub fn check_swap_factorization(tuples: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..tuples {
        let x = Vec3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let phi = Vec3::new(
            rng.gen_range(-3.1..3.1),
            rng.gen_range(-3.1..3.1),
            rng.gen_range(-3.1..3.1),
        );
        let r = rotation(&phi);
        let diff = swap_factorization(&x, &r) - (skew(&x) * r);
        worst = worst.max(diff.max_abs());
    }
    CheckResult::new(
        "swap_factorization",
        worst,
        1e-12,
        format!("{tuples} random pairs"),
    )
}

/// Assembled equation against the finite-difference Euler-Lagrange oracle.
pub fn check_lagrangian_oracle(
    chain: &Chain,
    clouds: &[ParticleCloud],
    times: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let n = chain.dof();
    let path = SinePath {
        offset: (0..n).map(|_| rng.gen_range(-0.6..0.6)).collect(),
        amp: (0..n).map(|_| rng.gen_range(0.3..0.9)).collect(),
        omega: (0..n).map(|_| rng.gen_range(0.8..2.4)).collect(),
        phase: (0..n).map(|_| rng.gen_range(0.0..6.2)).collect(),
    };
    let mut worst = 0.0f64;
    for &t in times {
        let q = path.q(t);
        let qd = path.qd(t);
        let theta = crate::particles::cloud_params(clouds, t)?;
        let rates = crate::particles::cloud_rates(clouds, t)?;
        let flow = flow_state(clouds, t);
        let terms = dynamics::assemble(chain, &q, &qd, &theta, &rates, &flow)?;
        let implied = terms.generalized_force(&VecN::from_slice(&path.qdd(t)));
        let oracle = lagrangian_oracle(chain, clouds, &path, t)?;
        let rel = implied.sub(&oracle).norm_inf() / oracle.norm_inf().max(1.0);
        worst = worst.max(rel);
    }
    Ok(CheckResult::new(
        "lagrangian_oracle",
        worst,
        1e-5,
        format!("{} sample times on a seeded path", times.len()),
    ))
}

/// Run the whole suite on a configured system.
pub fn run_suite(
    chain: &Chain,
    clouds: Option<&[ParticleCloud]>,
    tuples: usize,
    oracle_times: &[f64],
    fault: FaultInjection,
    rng: &mut ChaCha8Rng,
) -> Result<SuiteOutcome> {
    let mut checks = Vec::new();
    let (skew_check, h_check) = check_skew_symmetry(chain, tuples, rng, fault);
    checks.push(skew_check);
    checks.push(h_check);
    checks.push(check_regressor(chain, tuples.min(200), rng));
    checks.push(check_flow_projection_norm(chain, tuples, rng));
    checks.push(check_swap_factorization(tuples, rng));
    if let Some(clouds) = clouds {
        checks.push(check_lagrangian_oracle(chain, clouds, oracle_times, rng)?);
    }
    Ok(SuiteOutcome { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::planar_arm;
    use crate::particles::{MassLaw, MotionLaw, Particle};
    use rand::SeedableRng;

    fn cloud() -> ParticleCloud {
        ParticleCloud::new(vec![
            Particle {
                position: Vec3::new(0.3, 0.05, 0.0),
                mass: MassLaw::Constant { value_kg: 0.8 },
                mobility: 0.0,
                motion: MotionLaw::Static,
            },
            Particle {
                position: Vec3::new(0.5, -0.05, 0.02),
                mass: MassLaw::Linear {
                    base_kg: 0.4,
                    rate_kgps: 0.1,
                },
                mobility: 0.5,
                motion: MotionLaw::Oscillation {
                    amp_m: [0.05, 0.02, 0.0],
                    omega_radps: 1.8,
                    phase_rad: 0.4,
                },
            },
        ])
        .unwrap()
    }

    #[test]
    fn suite_passes_on_two_link() {
        let chain = planar_arm(&[0.8], Vec3::new(0.0, 9.81, 0.0)).unwrap();
        let clouds = vec![cloud(), cloud()];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let outcome = run_suite(
            &chain,
            Some(&clouds),
            50,
            &[0.2, 0.9],
            FaultInjection::None,
            &mut rng,
        )
        .unwrap();
        for c in &outcome.checks {
            assert!(c.pass, "{}: residual {:.2e}", c.name, c.residual);
        }
        assert!(outcome.all_pass());
    }

    #[test]
    fn injected_fault_fails_named_check() {
        let chain = planar_arm(&[0.8], Vec3::new(0.0, 9.81, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let outcome =
            run_suite(&chain, None, 20, &[], FaultInjection::FlipHSign, &mut rng).unwrap();
        assert!(!outcome.all_pass());
        let h = outcome.checks.iter().find(|c| c.name == "h_skew").unwrap();
        assert!(!h.pass);
        // everything else still passes
        for c in &outcome.checks {
            if c.name != "h_skew" {
                assert!(c.pass, "{} unexpectedly failed", c.name);
            }
        }
    }
}
