//! Serial chain description, forward kinematic map, stacked Jacobian and its
//! exact partials, plus sampled spectral scans of the Jacobian Gram matrix.
//!
//! Orientation is carried as a 3-angle vector whose rate equals the body
//! angular velocity. That identity only holds for certain chain classes, so
//! construction rejects anything else: prismatic joints are unrestricted,
//! revolute joints must have their axes parallel to the world third axis.
//! Within this class the accumulated angle enters the zyx convention linearly
//! and the usual discrepancy between Euler-angle rates and angular velocity
//! vanishes identically.

use crate::algebra::{axis_angle, euler_zyx};
use crate::dual::Dual;
use crate::eigen;
use crate::linalg::{DMatrix, Matrix3, Vector3};
use crate::{Error, Mat3, MatN, Result, Scalar, Vec3};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One joint: a fixed offset from the parent joint frame followed by the
/// joint motion about/along `axis` (unit, expressed after the offset).
#[derive(Clone, Debug)]
pub struct Joint {
    pub kind: JointKind,
    pub axis: Vec3,
    pub offset_translation: Vec3,
    pub offset_rotation: Mat3,
}

impl Joint {
    pub fn revolute_z() -> Self {
        Joint {
            kind: JointKind::Revolute,
            axis: Vec3::new(0.0, 0.0, 1.0),
            offset_translation: Vec3::zeros(),
            offset_rotation: Mat3::identity(),
        }
    }

    pub fn prismatic(axis: Vec3) -> Self {
        Joint {
            kind: JointKind::Prismatic,
            axis,
            offset_translation: Vec3::zeros(),
            offset_rotation: Mat3::identity(),
        }
    }

    pub fn with_offset(mut self, translation: Vec3) -> Self {
        self.offset_translation = translation;
        self
    }

    pub fn with_offset_rotation(mut self, rotation: Mat3) -> Self {
        self.offset_rotation = rotation;
        self
    }
}

/// Validated serial chain. One body per joint, body frame at the joint.
#[derive(Clone, Debug)]
pub struct Chain {
    joints: Vec<Joint>,
    gravity: Vec3,
    /// zyx angles of the composed fixed offset rotation per body.
    base_angles: Vec<Vec3>,
    /// +-1 for revolute joints (axis along +-world z), 0 for prismatic.
    rev_sign: Vec<f64>,
}

/// Poses of all body frames: position, orientation angles, and the
/// orientation matrix (always equal to `rotation(phi)`).
#[derive(Clone, Debug)]
pub struct Pose<T> {
    pub z: Vec<Vector3<T>>,
    pub phi: Vec<Vector3<T>>,
    pub rot: Vec<Matrix3<T>>,
}

impl Chain {
    pub fn new(joints: Vec<Joint>, gravity: Vec3) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidInput("chain needs at least one joint".into()));
        }
        if !gravity.is_finite() {
            return Err(Error::InvalidInput("gravity vector must be finite".into()));
        }
        let mut base_angles = Vec::with_capacity(joints.len());
        let mut rev_sign = Vec::with_capacity(joints.len());
        let mut composed = Mat3::identity();
        for (i, joint) in joints.iter().enumerate() {
            if !joint.axis.is_finite()
                || !joint.offset_translation.is_finite()
                || !joint.offset_rotation.is_finite()
            {
                return Err(Error::InvalidInput(format!("joint {i}: non-finite field")));
            }
            if (joint.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "joint {i}: axis norm {} is not 1",
                    joint.axis.norm()
                )));
            }
            let defect = joint.offset_rotation.orthonormality_defect();
            if defect > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "joint {i}: offset rotation not orthonormal (defect {defect:.2e})"
                )));
            }
            composed = composed * joint.offset_rotation;
            match joint.kind {
                JointKind::Prismatic => rev_sign.push(0.0),
                JointKind::Revolute => {
                    let world_axis = composed.mul_vec(&joint.axis);
                    let s = world_axis[2];
                    if (s.abs() - 1.0).abs() > 1e-9
                        || world_axis[0].abs() > 1e-6
                        || world_axis[1].abs() > 1e-6
                    {
                        return Err(Error::UnsupportedChain(format!(
                            "joint {i}: revolute axis {:?} is not parallel to the world \
                             third axis; only prismatic joints and revolute joints with \
                             world-z-parallel axes keep the orientation rate equal to the \
                             angular velocity",
                            world_axis.0
                        )));
                    }
                    rev_sign.push(s.signum());
                }
            }
            base_angles.push(euler_zyx(&composed)?);
        }
        Ok(Chain {
            joints,
            gravity,
            base_angles,
            rev_sign,
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Number of bodies; one per joint.
    pub fn body_count(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn gravity(&self) -> Vec3 {
        self.gravity
    }

    /// Forward kinematic map, generic over the scalar so dual evaluation
    /// yields exact derivatives.
    pub fn forward_map<T: Scalar>(&self, q: &[T]) -> Pose<T> {
        assert_eq!(q.len(), self.dof(), "q has wrong dimension");
        let n = self.dof();
        let mut z = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        let mut rot = Vec::with_capacity(n);
        let mut r = Matrix3::<T>::identity();
        let mut p = Vector3::<T>::zeros();
        let mut theta = T::zero();
        for (i, joint) in self.joints.iter().enumerate() {
            p = p + r.mul_vec(&Vector3::lift(&joint.offset_translation));
            r = r * Matrix3::lift(&joint.offset_rotation);
            let axis = Vector3::lift(&joint.axis);
            match joint.kind {
                JointKind::Prismatic => {
                    p = p + r.mul_vec(&axis).scale(q[i]);
                }
                JointKind::Revolute => {
                    r = r * axis_angle(&axis, q[i]);
                    theta = theta + T::from_f64(self.rev_sign[i]).unwrap() * q[i];
                }
            }
            let base = Vector3::lift(&self.base_angles[i]);
            z.push(p);
            phi.push(Vector3::new(base[0], base[1], base[2] + theta));
            rot.push(r);
        }
        Pose { z, phi, rot }
    }

    /// Stacked Jacobian of the forward map, one `(v_l; omega_l)` block row
    /// per body, by dual-number evaluation.
    pub fn jacobian_in<T: Scalar>(&self, q: &[T]) -> DMatrix<T> {
        let n = self.dof();
        let mut j = DMatrix::zeros(6 * n, n);
        for i in 0..n {
            let qd: Vec<Dual<T>> = q
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
            let pose = self.forward_map(&qd);
            for l in 0..self.body_count() {
                for c in 0..3 {
                    j[(6 * l + c, i)] = pose.z[l][c].eps;
                    j[(6 * l + 3 + c, i)] = pose.phi[l][c].eps;
                }
            }
        }
        j
    }

    pub fn jacobian(&self, q: &[f64]) -> MatN {
        self.jacobian_in(q)
    }

    /// Jacobian together with its exact partials `dJ/dq_i`, from nested dual
    /// evaluation.
    pub fn jacobian_with_partials(&self, q: &[f64]) -> (MatN, Vec<MatN>) {
        let n = self.dof();
        let mut partials = Vec::with_capacity(n);
        let mut value: Option<MatN> = None;
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
            let jd = self.jacobian_in(&qd);
            partials.push(jd.map(|d| d.eps));
            if value.is_none() {
                value = Some(jd.map(|d| d.re));
            }
        }
        (value.unwrap(), partials)
    }

    pub fn jacobian_partials(&self, q: &[f64]) -> Vec<MatN> {
        self.jacobian_with_partials(q).1
    }

    /// Stacked body velocities by dual time-propagation of the forward map.
    pub fn body_velocities(&self, q: &[f64], qd: &[f64]) -> crate::VecN {
        let seeded: Vec<Dual<f64>> = q.iter().zip(qd).map(|(&x, &v)| Dual::new(x, v)).collect();
        let pose = self.forward_map(&seeded);
        let mut out = crate::VecN::zeros(6 * self.body_count());
        for l in 0..self.body_count() {
            for c in 0..3 {
                out[6 * l + c] = pose.z[l][c].eps;
                out[6 * l + 3 + c] = pose.phi[l][c].eps;
            }
        }
        out
    }
}

/// Uniform sampling grid over joint space.
#[derive(Clone, Debug)]
pub struct QGrid {
    pub axes: Vec<GridAxis>,
}

#[derive(Clone, Copy, Debug)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl QGrid {
    pub fn uniform(n: usize, min: f64, max: f64, count: usize) -> Self {
        QGrid {
            axes: vec![GridAxis { min, max, count }; n],
        }
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.count.max(1)).product()
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        if self.axes.len() != dof {
            return Err(Error::InvalidInput(format!(
                "grid has {} axes for a {}-dof chain",
                self.axes.len(),
                dof
            )));
        }
        if self.axes.iter().any(|a| a.count == 0) {
            return Err(Error::InvalidInput("grid axis with zero points".into()));
        }
        if self
            .axes
            .iter()
            .any(|a| !a.min.is_finite() || !a.max.is_finite() || a.max < a.min)
        {
            return Err(Error::InvalidInput("grid axis with bad range".into()));
        }
        Ok(())
    }

    /// Visit every grid point.
    pub fn for_each(&self, mut f: impl FnMut(&[f64])) {
        let n = self.axes.len();
        let mut idx = vec![0usize; n];
        let mut q = vec![0.0; n];
        loop {
            for (k, axis) in self.axes.iter().enumerate() {
                q[k] = if axis.count == 1 {
                    axis.min
                } else {
                    axis.min + (axis.max - axis.min) * idx[k] as f64 / (axis.count - 1) as f64
                };
            }
            f(&q);
            // odometer increment
            let mut k = 0;
            loop {
                if k == n {
                    return;
                }
                idx[k] += 1;
                if idx[k] < self.axes[k].count.max(1) {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn random_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| {
                if a.max > a.min {
                    rng.gen_range(a.min..a.max)
                } else {
                    a.min
                }
            })
            .collect()
    }

    fn typical_step(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| (a.max - a.min) / a.count.max(2) as f64)
            .fold(0.0, f64::max)
            .max(1e-3)
    }
}

/// Sampled spectral extrema of `J(q)^T J(q)`.
#[derive(Clone, Debug)]
pub struct JacobianScan {
    pub inf_lambda_min: f64,
    pub argmin_q: Vec<f64>,
    /// Also the squared largest singular value of `J`.
    pub sup_lambda_max: f64,
    pub argmax_q: Vec<f64>,
    pub grid_points: usize,
    /// Sampled normality: the infimum stayed clearly positive.
    pub normal: bool,
    /// Sampled upper bound exists (always finite on a finite scan).
    pub upper_bounded: bool,
}

pub const NORMALITY_TOL: f64 = 1e-9;

/// Scan the grid, then refine both extrema with a few seeded compass
/// searches. The result is a sampled certificate; the grid travels with it.
pub fn spectral_scan(
    chain: &Chain,
    grid: &QGrid,
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<JacobianScan> {
    grid.validate(chain.dof())?;
    let gram_extrema = |q: &[f64]| -> Result<(f64, f64)> {
        let j = chain.jacobian(q);
        let w = eigen::sym_eigenvalues(&j.transpose().matmul(&j))?;
        Ok((w[0], *w.last().unwrap()))
    };

    let mut inf = f64::INFINITY;
    let mut sup = f64::NEG_INFINITY;
    let mut argmin = vec![0.0; chain.dof()];
    let mut argmax = vec![0.0; chain.dof()];
    let mut failure: Option<Error> = None;
    grid.for_each(|q| {
        if failure.is_some() {
            return;
        }
        match gram_extrema(q) {
            Ok((lo, hi)) => {
                if lo < inf {
                    inf = lo;
                    argmin.copy_from_slice(q);
                }
                if hi > sup {
                    sup = hi;
                    argmax.copy_from_slice(q);
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    // local refinement: compass search from the incumbent and random restarts
    let step0 = grid.typical_step();
    let descend = |start: Vec<f64>, maximize: bool| -> Result<(f64, Vec<f64>)> {
        let mut q = start;
        let sign = if maximize { -1.0 } else { 1.0 };
        let mut best = sign
            * (if maximize {
                gram_extrema(&q)?.1
            } else {
                gram_extrema(&q)?.0
            });
        let mut step = step0;
        // a sweep budget bounds the search even when the objective is
        // genuinely unbounded (a prismatic offset under a revolute joint
        // makes the top Gram eigenvalue grow without limit)
        let mut sweeps = 0;
        while step > 1e-7 && sweeps < 200 {
            sweeps += 1;
            let mut improved = false;
            for k in 0..q.len() {
                for dir in [-1.0, 1.0] {
                    let mut cand = q.clone();
                    cand[k] += dir * step;
                    let (lo, hi) = gram_extrema(&cand)?;
                    let val = sign * (if maximize { hi } else { lo });
                    if val < best {
                        best = val;
                        q = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((sign * best, q))
    };

    let mut starts_min = vec![argmin.clone()];
    let mut starts_max = vec![argmax.clone()];
    for _ in 0..restarts {
        starts_min.push(grid.random_point(rng));
        starts_max.push(grid.random_point(rng));
    }
    for s in starts_min {
        let (val, q) = descend(s, false)?;
        if val < inf {
            inf = val;
            argmin = q;
        }
    }
    for s in starts_max {
        let (val, q) = descend(s, true)?;
        if val > sup {
            sup = val;
            argmax = q;
        }
    }

    Ok(JacobianScan {
        inf_lambda_min: inf,
        argmin_q: argmin,
        sup_lambda_max: sup,
        argmax_q: argmax,
        grid_points: grid.point_count(),
        normal: inf > NORMALITY_TOL,
        upper_bounded: sup.is_finite(),
    })
}

/// Planar arm with revolute world-z joints: the first joint sits at the
/// origin and joint `k + 1` is offset from joint `k` by `link_offsets[k]`
/// along the local first axis. `link_offsets` is empty for a single joint.
pub fn planar_arm(link_offsets: &[f64], gravity: Vec3) -> Result<Chain> {
    let mut joints = vec![Joint::revolute_z()];
    for &l in link_offsets {
        joints.push(Joint::revolute_z().with_offset(Vec3::new(l, 0.0, 0.0)));
    }
    Chain::new(joints, gravity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rot_z, rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_link(l1: f64) -> Chain {
        Chain::new(
            vec![
                Joint::revolute_z(),
                Joint::revolute_z().with_offset(Vec3::new(l1, 0.0, 0.0)),
            ],
            Vec3::zeros(),
        )
        .unwrap()
    }

    fn prismatic_x() -> Chain {
        Chain::new(
            vec![Joint::prismatic(Vec3::new(1.0, 0.0, 0.0))],
            Vec3::zeros(),
        )
        .unwrap()
    }

    /// A richer supported chain: offset rotations about z, out-of-plane
    /// offsets, one prismatic joint.
    fn mixed_chain() -> Chain {
        Chain::new(
            vec![
                Joint::revolute_z().with_offset_rotation(rot_z(0.4)),
                Joint {
                    kind: JointKind::Prismatic,
                    axis: Vec3::new(0.0, 1.0, 0.0),
                    offset_translation: Vec3::new(0.6, 0.0, 0.2),
                    offset_rotation: rot_z(-0.7),
                },
                Joint::revolute_z().with_offset(Vec3::new(0.3, 0.1, -0.4)),
            ],
            Vec3::new(0.0, 9.81, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn home_configuration_is_offsets_only() {
        let chain = two_link(0.8);
        let pose = chain.forward_map(&[0.0, 0.0]);
        assert!(pose.z[0].norm() < 1e-15);
        assert!((pose.z[1] - Vec3::new(0.8, 0.0, 0.0)).norm() < 1e-15);
        assert!(pose.phi[1].norm() < 1e-15);
    }

    #[test]
    fn prismatic_pose() {
        let chain = prismatic_x();
        let pose = chain.forward_map(&[1.7]);
        assert!((pose.z[0] - Vec3::new(1.7, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(pose.phi[0].norm(), 0.0);
    }

    #[test]
    fn elbow_up_pose() {
        let chain = two_link(1.0);
        let pose = chain.forward_map(&[std::f64::consts::FRAC_PI_2, 0.0]);
        assert!((pose.z[1] - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-14);
        assert!((pose.phi[1][2] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn orientation_matrix_matches_angles() {
        let chain = mixed_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let pose = chain.forward_map(&q);
            for l in 0..3 {
                let from_angles = rotation(&pose.phi[l]);
                assert!(
                    (from_angles - pose.rot[l]).max_abs() < 1e-12,
                    "body {l} at q {q:?}"
                );
            }
        }
    }

    #[test]
    fn single_revolute_jacobian() {
        // body frame sits at the joint: translational rows vanish and the
        // angular row is the joint axis
        let chain = planar_arm(&[], Vec3::zeros()).unwrap();
        let j = chain.jacobian(&[0.7]);
        for r in 0..5 {
            assert_eq!(j[(r, 0)], 0.0);
        }
        assert_eq!(j[(5, 0)], 1.0);
    }

    #[test]
    fn prismatic_jacobian_is_unit_column() {
        let j = prismatic_x().jacobian(&[0.3]);
        assert_eq!(j.nrows(), 6);
        assert!((j[(0, 0)] - 1.0).abs() < 1e-15);
        for r in 1..6 {
            assert_eq!(j[(r, 0)], 0.0);
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let chain = mixed_chain();
        let q = vec![0.4, -0.2, 1.1];
        let j = chain.jacobian(&q);
        let mut errs = Vec::new();
        for &delta in &[1e-4, 1e-5] {
            let mut err = 0.0f64;
            for i in 0..3 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i] += delta;
                qm[i] -= delta;
                let (pp, pm) = (chain.forward_map(&qp), chain.forward_map(&qm));
                for l in 0..3 {
                    for c in 0..3 {
                        let fd_z = (pp.z[l][c] - pm.z[l][c]) / (2.0 * delta);
                        let fd_phi = (pp.phi[l][c] - pm.phi[l][c]) / (2.0 * delta);
                        err = err.max((fd_z - j[(6 * l + c, i)]).abs());
                        err = err.max((fd_phi - j[(6 * l + 3 + c, i)]).abs());
                    }
                }
            }
            errs.push(err);
        }
        assert!(errs[1] < 1e-8);
        assert!((errs[0] / errs[1]).log10() > 1.6, "errs {errs:?}");
    }

    #[test]
    fn velocity_identity_dual_vs_jacobian() {
        let chain = mixed_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let qd: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let direct = chain.body_velocities(&q, &qd);
            let via_j = chain.jacobian(&q).mul_vec(&crate::VecN::from_slice(&qd));
            assert!(direct.sub(&via_j).norm_inf() < 1e-10);
        }
    }

    #[test]
    fn partials_of_prismatic_chain_vanish() {
        let chain = Chain::new(
            vec![
                Joint::prismatic(Vec3::new(1.0, 0.0, 0.0)),
                Joint::prismatic(Vec3::new(0.0, 0.0, 1.0)).with_offset(Vec3::new(0.1, 0.2, 0.0)),
            ],
            Vec3::zeros(),
        )
        .unwrap();
        for p in chain.jacobian_partials(&[0.5, -0.3]) {
            assert_eq!(p.norm_inf(), 0.0);
        }
    }

    #[test]
    fn partials_match_central_differences_and_commute() {
        let chain = two_link(0.9);
        let q = vec![0.7, -1.2];
        let (j0, partials) = chain.jacobian_with_partials(&q);
        assert!(j0.sub(&chain.jacobian(&q)).norm_inf() < 1e-15);
        let delta = 1e-5;
        for i in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += delta;
            qm[i] -= delta;
            let fd = chain
                .jacobian(&qp)
                .sub(&chain.jacobian(&qm))
                .scale(1.0 / (2.0 * delta));
            assert!(fd.sub(&partials[i]).norm_inf() < 1e-9);
        }
        // mixed partials: column j of dJ/dq_i equals column i of dJ/dq_j
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..j0.nrows() {
                    assert!((partials[i][(r, j)] - partials[j][(r, i)]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn rejects_general_revolute_axis() {
        let err = Chain::new(
            vec![Joint {
                kind: JointKind::Revolute,
                axis: Vec3::new(1.0, 0.0, 0.0),
                offset_translation: Vec3::zeros(),
                offset_rotation: Mat3::identity(),
            }],
            Vec3::zeros(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedChain(_)));
    }

    #[test]
    fn accepts_flipped_revolute_axis() {
        let chain = Chain::new(
            vec![Joint {
                kind: JointKind::Revolute,
                axis: Vec3::new(0.0, 0.0, -1.0),
                offset_translation: Vec3::zeros(),
                offset_rotation: Mat3::identity(),
            }],
            Vec3::zeros(),
        )
        .unwrap();
        let pose = chain.forward_map(&[0.25f64]);
        assert!((pose.phi[0][2] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_gimbal_offset() {
        let err = Chain::new(
            vec![Joint::prismatic(Vec3::new(1.0, 0.0, 0.0))
                .with_offset_rotation(crate::algebra::rot_y(std::f64::consts::FRAC_PI_2))],
            Vec3::zeros(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedChain(_)));
    }

    #[test]
    fn scan_of_prismatic_is_flat() {
        let chain = prismatic_x();
        let grid = QGrid::uniform(1, -1.0, 1.0, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = spectral_scan(&chain, &grid, 3, &mut rng).unwrap();
        assert!((scan.inf_lambda_min - 1.0).abs() < 1e-12);
        assert!((scan.sup_lambda_max - 1.0).abs() < 1e-12);
        assert!(scan.normal && scan.upper_bounded);
    }

    #[test]
    fn scan_of_two_link_matches_symbolic_gram() {
        // with body frames at the joints the stacked Gram matrix is the
        // constant [[2 + l1^2, 1], [1, 1]]
        let l1 = 0.8;
        let chain = two_link(l1);
        let grid = QGrid::uniform(2, -3.1, 3.1, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scan = spectral_scan(&chain, &grid, 5, &mut rng).unwrap();
        let (a, b) = (2.0 + l1 * l1, 1.0);
        let tr = a + b;
        let disc = ((a - b) * (a - b) + 4.0).sqrt();
        let (lo, hi) = (0.5 * (tr - disc), 0.5 * (tr + disc));
        assert!((scan.inf_lambda_min - lo).abs() < 1e-10);
        assert!((scan.sup_lambda_max - hi).abs() < 1e-10);
        assert!(scan.normal);
    }

    #[test]
    fn scan_terminates_on_unbounded_gram() {
        // revolute base followed by a prismatic joint: the top Gram
        // eigenvalue grows with the prismatic extension, so the refinement
        // must stop at its sweep budget rather than chase the supremum
        let chain = Chain::new(
            vec![
                Joint::revolute_z(),
                Joint::prismatic(Vec3::new(1.0, 0.0, 0.0)).with_offset(Vec3::new(0.5, 0.0, 0.0)),
            ],
            Vec3::zeros(),
        )
        .unwrap();
        let grid = QGrid::uniform(2, -1.0, 1.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let scan = spectral_scan(&chain, &grid, 2, &mut rng).unwrap();
        assert!(scan.sup_lambda_max.is_finite());
        assert!(scan.sup_lambda_max > 1.0);
    }

    #[test]
    fn empty_grid_rejected() {
        let chain = prismatic_x();
        let grid = QGrid { axes: vec![] };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(spectral_scan(&chain, &grid, 0, &mut rng).is_err());
    }
}
