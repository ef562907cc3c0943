//! Assembly of every term in the generalized equation of motion
//!
//! ```text
//! M(q, Th) qdd + (C(q, qd, Th) + M(q, Thd) + H(q, Psi)) qd + G(q, Th)
//!     = tau + w - J(q)^T Q(q) Psid
//! ```
//!
//! together with forward dynamics, the regressor decomposition and the
//! parameter-rate matrix. All q-derivatives (Christoffel symbols, gravity,
//! flow coupling) come from dual-number evaluation, so the structural
//! identities (Coriolis symmetry, exact skewness of `H`) hold to machine
//! precision rather than finite-difference precision.

use crate::algebra::{block_replicate, s_matrix, t_matrix};
use crate::dual::Dual;
use crate::eigen;
use crate::inertial::{block_spatial_inertia, spatial_inertia, InertialParams};
use crate::kinematics::Chain;
use crate::linalg::{cholesky_solve, DMatrix, DVector, Matrix3, Vector3};
use crate::particles::FlowState;
use crate::{Error, MatN, Result, Scalar, VecN};

/// Below this smallest eigenvalue the mass matrix is treated as singular.
pub const MASS_DEFINITENESS_FLOOR: f64 = 1e-10;

/// Mass matrix `J^T Z(Th) J`, generic over the scalar for dual evaluation.
pub fn mass_matrix_in<T: Scalar>(chain: &Chain, q: &[T], theta: &[InertialParams]) -> DMatrix<T> {
    assert_eq!(
        theta.len(),
        chain.body_count(),
        "one parameter set per body"
    );
    let j = chain.jacobian_in(q);
    let z = DMatrix::<T>::lift(&block_spatial_inertia(theta));
    let m = j.transpose().matmul(&z).matmul(&j);
    // force exact symmetry; the product is symmetric up to summation order
    let half = T::from_f64(0.5).unwrap();
    m.add(&m.transpose()).scale(half)
}

pub fn mass_matrix(chain: &Chain, q: &[f64], theta: &[InertialParams]) -> MatN {
    mass_matrix_in(chain, q, theta)
}

/// Same evaluation path with parameter rates in place of parameters.
pub fn param_rate_matrix(chain: &Chain, q: &[f64], theta_dot: &[InertialParams]) -> MatN {
    mass_matrix_in(chain, q, theta_dot)
}

/// Mass matrix and its exact partials `dM/dq_i` in one pass.
pub fn mass_matrix_with_partials(
    chain: &Chain,
    q: &[f64],
    theta: &[InertialParams],
) -> (MatN, Vec<MatN>) {
    let (j, partials) = chain.jacobian_with_partials(q);
    let z = block_spatial_inertia(theta);
    let zj = z.matmul(&j);
    let m = j.transpose().matmul(&zj);
    let m = m.add(&m.transpose()).scale(0.5);
    let dm = partials
        .iter()
        .map(|p| {
            let a = p.transpose().matmul(&zj);
            a.add(&a.transpose())
        })
        .collect();
    (m, dm)
}

/// Christoffel symbols of the first kind, dense `n^3` storage.
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn dof(&self) -> usize {
        self.n
    }
}

/// Exact partials `dM/dq_i` alone.
pub fn mass_partials(chain: &Chain, q: &[f64], theta: &[InertialParams]) -> Vec<MatN> {
    mass_matrix_with_partials(chain, q, theta).1
}

/// Christoffel symbols from the exact mass-matrix partials.
pub fn christoffel(chain: &Chain, q: &[f64], theta: &[InertialParams]) -> Christoffel {
    let dm = mass_partials(chain, q, theta);
    let n = chain.dof();
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                data[(i * n + j) * n + k] = 0.5 * (dm[i][(k, j)] + dm[j][(k, i)] - dm[k][(i, j)]);
            }
        }
    }
    Christoffel { n, data }
}

pub fn coriolis_from(gamma: &Christoffel, qd: &[f64]) -> MatN {
    let n = gamma.dof();
    MatN::from_fn(n, n, |k, j| {
        (0..n).map(|i| gamma.gamma(i, j, k) * qd[i]).sum()
    })
}

/// Coriolis matrix `C(q, qd, Th)` built from the Christoffel symbols.
pub fn coriolis(chain: &Chain, q: &[f64], qd: &[f64], theta: &[InertialParams]) -> MatN {
    coriolis_from(&christoffel(chain, q, theta), qd)
}

/// Potential energy `g . sum_l (m_l z_l + R(phi_l) h_l)`.
pub fn potential_energy_in<T: Scalar>(chain: &Chain, q: &[T], theta: &[InertialParams]) -> T {
    assert_eq!(theta.len(), chain.body_count());
    let pose = chain.forward_map(q);
    let g = Vector3::<T>::lift(&chain.gravity());
    let mut u = T::zero();
    for (l, p) in theta.iter().enumerate() {
        let m = T::from_f64(p.mass).unwrap();
        let h = Vector3::<T>::lift(&p.first_moment);
        u = u + g.dot(&(pose.z[l].scale(m) + pose.rot[l].mul_vec(&h)));
    }
    u
}

pub fn potential_energy(chain: &Chain, q: &[f64], theta: &[InertialParams]) -> f64 {
    potential_energy_in(chain, q, theta)
}

/// Gravity vector `(dU/dq)^T`, by dual evaluation of the potential.
pub fn gravity_vector(chain: &Chain, q: &[f64], theta: &[InertialParams]) -> VecN {
    let n = chain.dof();
    let mut g = VecN::zeros(n);
    for i in 0..n {
        let qd: Vec<Dual<f64>> = q
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
        g[i] = potential_energy_in(chain, &qd, theta).eps;
    }
    g
}

/// Per-body 6x12 flow projection `Q(phi) = diag(R(phi), -S A(R(phi)) T)`.
///
/// The upper block rotates the lumped relative velocity into the world frame;
/// the lower block reproduces `skew(x) R` through the S/T factorization once
/// applied to the replicated-position moments.
pub fn body_q_block<T: Scalar>(rot: &Matrix3<T>) -> DMatrix<T> {
    let mut q = DMatrix::zeros(6, 12);
    q.set_mat3(0, 0, rot);
    let rep = block_replicate(&DMatrix::from_fn(3, 3, |i, j| rot[(i, j)]));
    let lower = s_matrix::<T>().matmul(&rep).matmul(&t_matrix::<T>());
    for i in 0..3 {
        for j in 0..9 {
            q[(3 + i, 3 + j)] = -lower[(i, j)];
        }
    }
    q
}

/// Block-diagonal stacked flow projection, 6N x 12N.
pub fn q_block_in<T: Scalar>(chain: &Chain, q: &[T]) -> DMatrix<T> {
    let pose = chain.forward_map(q);
    let n = chain.body_count();
    let mut out = DMatrix::zeros(6 * n, 12 * n);
    for l in 0..n {
        out.set_block(6 * l, 12 * l, &body_q_block(&pose.rot[l]));
    }
    out
}

pub fn q_block(chain: &Chain, q: &[f64]) -> MatN {
    q_block_in(chain, q)
}

/// `J(q)^T Q(q) Psi`, the flow momentum term of the kinetic energy.
pub fn jq_flow_in<T: Scalar>(chain: &Chain, q: &[T], psi: &VecN) -> DVector<T> {
    let j = chain.jacobian_in(q);
    let qb = q_block_in(chain, q);
    let psi_t = DVector::<T>::lift(psi);
    j.transpose().mul_vec(&qb.mul_vec(&psi_t))
}

/// Flow coupling matrix `H = d(J^T Q Psi)/dq - (d(J^T Q Psi)/dq)^T`,
/// skew-symmetric by construction.
pub fn h_matrix(chain: &Chain, q: &[f64], psi: &VecN) -> MatN {
    let n = chain.dof();
    let mut d = MatN::zeros(n, n);
    for i in 0..n {
        let qd: Vec<Dual<f64>> = q
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
        let b = jq_flow_in(chain, &qd, psi);
        for k in 0..n {
            d[(k, i)] = b[k].eps;
        }
    }
    d.sub(&d.transpose())
}

/// Total time derivative of the mass matrix by the chain rule,
/// `sum_i dM/dq_i qd_i + M(q, Thd)`.
pub fn mass_matrix_time_derivative(
    chain: &Chain,
    q: &[f64],
    qd: &[f64],
    theta: &[InertialParams],
    theta_dot: &[InertialParams],
) -> MatN {
    let dm = mass_partials(chain, q, theta);
    let n = chain.dof();
    let mut out = param_rate_matrix(chain, q, theta_dot);
    for i in 0..n {
        out = out.add(&dm[i].scale(qd[i]));
    }
    out
}

/// Every term of the equation of motion at one state.
#[derive(Clone, Debug)]
pub struct DynamicsTerms {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    /// `M(q, Th)`, symmetric.
    pub mass: MatN,
    /// `C(q, qd, Th)`.
    pub coriolis: MatN,
    /// `G(q, Th)`.
    pub gravity: VecN,
    /// `H(q, Psi)`, skew-symmetric.
    pub flow_coupling: MatN,
    /// `M(q, Thd)`.
    pub param_rate: MatN,
    /// Stacked `Q(q)`, 6N x 12N.
    pub q_block: MatN,
    /// `J(q)^T Q(q)`, n x 12N.
    pub jq: MatN,
    pub psi: VecN,
    pub psi_dot: VecN,
    pub nu: f64,
}

impl DynamicsTerms {
    /// Generalized force demanded by the left-hand side at acceleration
    /// `qdd`, including the flow forcing moved over:
    /// `M qdd + (C + M(.,Thd) + H) qd + G + J^T Q Psid`.
    pub fn generalized_force(&self, qdd: &VecN) -> VecN {
        let qd = VecN::from_slice(&self.qd);
        let velocity_terms = self
            .coriolis
            .add(&self.param_rate)
            .add(&self.flow_coupling)
            .mul_vec(&qd);
        self.mass
            .mul_vec(qdd)
            .add(&velocity_terms)
            .add(&self.gravity)
            .add(&self.jq.mul_vec(&self.psi_dot))
    }
}

/// Assemble all terms of the equation of motion.
pub fn assemble(
    chain: &Chain,
    q: &[f64],
    qd: &[f64],
    theta: &[InertialParams],
    theta_dot: &[InertialParams],
    flow: &FlowState,
) -> Result<DynamicsTerms> {
    let n = chain.dof();
    let bodies = chain.body_count();
    if q.len() != n || qd.len() != n {
        return Err(Error::InvalidInput(format!(
            "state dimension {}/{} does not match {n} dof",
            q.len(),
            qd.len()
        )));
    }
    if theta.len() != bodies || theta_dot.len() != bodies {
        return Err(Error::InvalidInput(format!(
            "parameter count {}/{} does not match {bodies} bodies",
            theta.len(),
            theta_dot.len()
        )));
    }
    if flow.psi.len() != 12 * bodies || flow.psi_dot.len() != 12 * bodies {
        return Err(Error::InvalidInput(
            "flow state dimension does not match body count".into(),
        ));
    }
    if !q.iter().chain(qd.iter()).all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("non-finite state".into()));
    }

    let (j, partials) = chain.jacobian_with_partials(q);
    let z = block_spatial_inertia(theta);
    let zj = z.matmul(&j);
    let mass = {
        let m = j.transpose().matmul(&zj);
        m.add(&m.transpose()).scale(0.5)
    };
    // Christoffel symbols from dM/dq_i = P_i^T Z J + (P_i^T Z J)^T
    let dm: Vec<MatN> = partials
        .iter()
        .map(|p| {
            let a = p.transpose().matmul(&zj);
            a.add(&a.transpose())
        })
        .collect();
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                gamma[(i * n + jj) * n + k] =
                    0.5 * (dm[i][(k, jj)] + dm[jj][(k, i)] - dm[k][(i, jj)]);
            }
        }
    }
    let coriolis = MatN::from_fn(n, n, |k, jj| {
        (0..n).map(|i| gamma[(i * n + jj) * n + k] * qd[i]).sum()
    });

    let gravity = gravity_vector(chain, q, theta);
    let flow_coupling = h_matrix(chain, q, &flow.psi);
    let param_rate = param_rate_matrix(chain, q, theta_dot);
    let qb = q_block(chain, q);
    let jq = j.transpose().matmul(&qb);

    Ok(DynamicsTerms {
        q: q.to_vec(),
        qd: qd.to_vec(),
        mass,
        coriolis,
        gravity,
        flow_coupling,
        param_rate,
        q_block: qb,
        jq,
        psi: flow.psi.clone(),
        psi_dot: flow.psi_dot.clone(),
        nu: flow.nu,
    })
}

/// Solve the equation of motion for the acceleration.
pub fn forward_dynamics(terms: &DynamicsTerms, tau: &VecN, w: &VecN) -> Result<VecN> {
    let lam = eigen::lambda_min(&terms.mass)?;
    if lam <= MASS_DEFINITENESS_FLOOR {
        return Err(Error::SingularMassMatrix {
            lambda_min: lam,
            q: terms.q.clone(),
        });
    }
    let qd = VecN::from_slice(&terms.qd);
    let velocity_terms = terms
        .coriolis
        .add(&terms.param_rate)
        .add(&terms.flow_coupling)
        .mul_vec(&qd);
    let rhs = tau
        .add(w)
        .sub(&terms.jq.mul_vec(&terms.psi_dot))
        .sub(&velocity_terms)
        .sub(&terms.gravity);
    cholesky_solve(&terms.mass, &rhs)
}

/// Regressor `R(q, qd, v, a)` with `M a + C v + G = R Theta` for all
/// parameter vectors.
#[derive(Clone, Debug)]
pub struct Regressor {
    /// n x 10N.
    pub matrix: MatN,
}

impl Regressor {
    /// Per-body n x 10 slice.
    pub fn body_slice(&self, l: usize) -> MatN {
        self.matrix.block(0, 10 * l, self.matrix.nrows(), 10)
    }

    /// Apply to a stacked parameter vector given per body.
    pub fn apply(&self, theta: &[InertialParams]) -> VecN {
        let mut stacked = VecN::zeros(10 * theta.len());
        for (l, p) in theta.iter().enumerate() {
            stacked.set_segment(10 * l, &p.to_phi());
        }
        self.matrix.mul_vec(&stacked)
    }
}

/// Build the regressor from unit-basis evaluations, exploiting linearity of
/// `M`, `C` and `G` in the parameters.
pub fn regressor(chain: &Chain, q: &[f64], qd: &[f64], v: &[f64], a: &[f64]) -> Regressor {
    let n = chain.dof();
    let bodies = chain.body_count();
    let (j, partials) = chain.jacobian_with_partials(q);

    // dual poses per direction, for the gravity columns
    let g = chain.gravity();
    let mut dz: Vec<Vec<crate::Vec3>> = vec![Vec::with_capacity(n); bodies];
    let mut drot: Vec<Vec<crate::Mat3>> = vec![Vec::with_capacity(n); bodies];
    for i in 0..n {
        let qdual: Vec<Dual<f64>> = q
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if k == i {
                    Dual::variable(x)
                } else {
                    Dual::constant(x)
                }
            })
            .collect();
        let pose = chain.forward_map(&qdual);
        for l in 0..bodies {
            dz[l].push(Vector3([
                pose.z[l][0].eps,
                pose.z[l][1].eps,
                pose.z[l][2].eps,
            ]));
            drot[l].push(Matrix3(pose.rot[l].0.map(|row| row.map(|d| d.eps))));
        }
    }

    let av = VecN::from_slice(a);
    let vv = VecN::from_slice(v);
    let mut r = MatN::zeros(n, 10 * bodies);
    for l in 0..bodies {
        let jl = j.block(6 * l, 0, 6, n);
        let pl: Vec<MatN> = partials.iter().map(|p| p.block(6 * l, 0, 6, n)).collect();
        for h in 0..10 {
            let basis = InertialParams::basis(h);
            let zsmall = spatial_inertia(&basis).0;
            let zjl = zsmall.matmul(&jl);
            let m_h = {
                let m = jl.transpose().matmul(&zjl);
                m.add(&m.transpose()).scale(0.5)
            };
            let dm_h: Vec<MatN> = pl
                .iter()
                .map(|p| {
                    let a = p.transpose().matmul(&zjl);
                    a.add(&a.transpose())
                })
                .collect();
            let c_h = MatN::from_fn(n, n, |k, jj| {
                (0..n)
                    .map(|i| 0.5 * (dm_h[i][(k, jj)] + dm_h[jj][(k, i)] - dm_h[k][(i, jj)]) * qd[i])
                    .sum()
            });
            let mut col = m_h.mul_vec(&av).add(&c_h.mul_vec(&vv));
            for i in 0..n {
                col[i] +=
                    g.dot(&(dz[l][i].scale(basis.mass) + drot[l][i].mul_vec(&basis.first_moment)));
            }
            for k in 0..n {
                r[(k, 10 * l + h)] = col[k];
            }
        }
    }
    Regressor { matrix: r }
}
