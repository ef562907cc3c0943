//! Inertial parameters of a single body, the pseudo-inertia map and its
//! consistency tests, and the 6x6 spatial inertia blocks entering the mass
//! matrix.

use crate::eigen;
use crate::{Error, Mat3, MatN, Result, Vec3};

/// Numerical floor below which a pseudo-inertia eigenvalue counts as on the
/// inconsistency boundary.
pub const CONSISTENCY_FLOOR: f64 = 1e-12;

/// The ten inertial parameters of one body: mass, first moment of mass and
/// rotational inertia about the body-frame origin.
///
/// Matches the parameter vector layout
/// `(m, h1, h2, h3, I11, I22, I33, I12, I23, I13)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertialParams {
    /// Mass in kg.
    pub mass: f64,
    /// First moment of mass in kg m.
    pub first_moment: Vec3,
    /// Rotational inertia about the body-frame origin in kg m^2, symmetric.
    pub inertia: Mat3,
}

impl InertialParams {
    pub fn new(mass: f64, first_moment: Vec3, inertia: Mat3) -> Result<Self> {
        if !mass.is_finite() || !first_moment.is_finite() || !inertia.is_finite() {
            return Err(Error::InvalidInput(
                "inertial parameters must be finite".into(),
            ));
        }
        if !inertia.is_symmetric(1e-12 * inertia.max_abs().max(1.0)) {
            return Err(Error::InvalidInput(
                "rotational inertia must be symmetric".into(),
            ));
        }
        Ok(InertialParams {
            mass,
            first_moment,
            inertia,
        })
    }

    pub fn zero() -> Self {
        InertialParams {
            mass: 0.0,
            first_moment: Vec3::zeros(),
            inertia: Mat3::zeros(),
        }
    }

    /// Solid uniform sphere centered at the body-frame origin.
    pub fn solid_sphere(mass: f64, radius: f64) -> Self {
        InertialParams {
            mass,
            first_moment: Vec3::zeros(),
            inertia: Mat3::identity().scale(0.4 * mass * radius * radius),
        }
    }

    pub fn to_phi(&self) -> [f64; 10] {
        let h = &self.first_moment;
        let i = &self.inertia;
        [
            self.mass,
            h[0],
            h[1],
            h[2],
            i[(0, 0)],
            i[(1, 1)],
            i[(2, 2)],
            i[(0, 1)],
            i[(1, 2)],
            i[(0, 2)],
        ]
    }

    pub fn from_phi(phi: &[f64; 10]) -> Self {
        let mut inertia = Mat3::zeros();
        inertia[(0, 0)] = phi[4];
        inertia[(1, 1)] = phi[5];
        inertia[(2, 2)] = phi[6];
        inertia[(0, 1)] = phi[7];
        inertia[(1, 0)] = phi[7];
        inertia[(1, 2)] = phi[8];
        inertia[(2, 1)] = phi[8];
        inertia[(0, 2)] = phi[9];
        inertia[(2, 0)] = phi[9];
        InertialParams {
            mass: phi[0],
            first_moment: Vec3::new(phi[1], phi[2], phi[3]),
            inertia,
        }
    }

    /// Unit vector of the 10-parameter space, for regressor columns.
    pub fn basis(h: usize) -> Self {
        assert!(h < 10);
        let mut phi = [0.0; 10];
        phi[h] = 1.0;
        Self::from_phi(&phi)
    }

    pub fn scaled_add(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut phi = self.to_phi();
        let o = other.to_phi();
        for k in 0..10 {
            phi[k] = a * phi[k] + b * o[k];
        }
        Self::from_phi(&phi)
    }

    pub fn is_finite(&self) -> bool {
        self.mass.is_finite() && self.first_moment.is_finite() && self.inertia.is_finite()
    }
}

/// 4x4 pseudo-inertia `[[Sigma, h], [h^T, m]]` with
/// `Sigma = tr(I)/2 * I3 - I`. Positive definiteness is equivalent to
/// physical consistency of the parameters.
#[derive(Clone, Debug)]
pub struct PseudoInertia(pub MatN);

/// 6x6 spatial inertia `[[m I3, -skew(h)], [-skew(h)^T, I]]`.
#[derive(Clone, Debug)]
pub struct SpatialInertia(pub MatN);

pub fn pseudo_inertia(p: &InertialParams) -> PseudoInertia {
    let half_trace = 0.5 * p.inertia.trace();
    let sigma = Mat3::identity().scale(half_trace) - p.inertia;
    let mut m = MatN::zeros(4, 4);
    m.set_mat3(0, 0, &sigma);
    for i in 0..3 {
        m[(i, 3)] = p.first_moment[i];
        m[(3, i)] = p.first_moment[i];
    }
    m[(3, 3)] = p.mass;
    PseudoInertia(m)
}

/// Recover the parameters from a pseudo-inertia: `I = tr(Sigma) I3 - Sigma`.
pub fn inverse_pseudo_inertia(p: &PseudoInertia) -> Result<InertialParams> {
    let m = &p.0;
    assert_eq!((m.nrows(), m.ncols()), (4, 4));
    if m.symmetry_defect() > 1e-9 * m.norm_inf().max(1.0) {
        return Err(Error::InvalidInput(
            "pseudo-inertia must be symmetric".into(),
        ));
    }
    let mut sigma = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            sigma[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let inertia = Mat3::identity().scale(sigma.trace()) - sigma;
    InertialParams::new(
        m[(3, 3)],
        Vec3::new(
            0.5 * (m[(0, 3)] + m[(3, 0)]),
            0.5 * (m[(1, 3)] + m[(3, 1)]),
            0.5 * (m[(2, 3)] + m[(3, 2)]),
        ),
        inertia,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyCheck {
    pub consistent: bool,
    pub lambda_min: f64,
}

/// Physical consistency test: consistent iff `lambda_min(f(Phi))` exceeds
/// `margin` (and the numerical boundary floor).
pub fn check_consistency(p: &InertialParams, margin: f64) -> Result<ConsistencyCheck> {
    if !margin.is_finite() || margin < 0.0 {
        return Err(Error::InvalidInput(
            "consistency margin must be finite and nonnegative".into(),
        ));
    }
    let lam = eigen::lambda_min(&pseudo_inertia(p).0)?;
    Ok(ConsistencyCheck {
        consistent: lam > margin.max(CONSISTENCY_FLOOR),
        lambda_min: lam,
    })
}

pub fn spatial_inertia(p: &InertialParams) -> SpatialInertia {
    let sk = crate::algebra::skew(&p.first_moment);
    let mut m = MatN::zeros(6, 6);
    m.set_mat3(0, 0, &Mat3::identity().scale(p.mass));
    m.set_mat3(0, 3, &sk.scale(-1.0));
    m.set_mat3(3, 0, &sk.transpose().scale(-1.0));
    m.set_mat3(3, 3, &p.inertia);
    SpatialInertia(m)
}

/// Block-diagonal assembly of all body spatial inertias, 6N x 6N.
pub fn block_spatial_inertia(theta: &[InertialParams]) -> MatN {
    assert!(!theta.is_empty(), "need at least one body");
    let n = theta.len();
    let mut m = MatN::zeros(6 * n, 6 * n);
    for (l, p) in theta.iter().enumerate() {
        m.set_block(6 * l, 6 * l, &spatial_inertia(p).0);
    }
    m
}

/// Time-sampled inertial parameters for every body, with optional sampled
/// rates.
#[derive(Clone, Debug)]
pub struct ParamTrajectory {
    times: Vec<f64>,
    /// `params[body][sample]`.
    params: Vec<Vec<InertialParams>>,
    rates: Option<Vec<Vec<InertialParams>>>,
}

impl ParamTrajectory {
    pub fn new(
        times: Vec<f64>,
        params: Vec<Vec<InertialParams>>,
        rates: Option<Vec<Vec<InertialParams>>>,
    ) -> Result<Self> {
        if times.is_empty() || params.is_empty() {
            return Err(Error::InvalidInput(
                "parameter trajectory must have at least one sample and one body".into(),
            ));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        for (l, body) in params.iter().enumerate() {
            if body.len() != times.len() {
                return Err(Error::InvalidInput(format!(
                    "body {l}: {} parameter samples for {} times",
                    body.len(),
                    times.len()
                )));
            }
            if body.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "body {l}: non-finite parameter sample"
                )));
            }
        }
        if let Some(r) = &rates {
            if r.len() != params.len() || r.iter().any(|b| b.len() != times.len()) {
                return Err(Error::InvalidInput(
                    "rate samples must match parameter sample shape".into(),
                ));
            }
        }
        Ok(ParamTrajectory {
            times,
            params,
            rates,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn body_count(&self) -> usize {
        self.params.len()
    }

    pub fn sample(&self, k: usize) -> Vec<InertialParams> {
        self.params.iter().map(|body| body[k]).collect()
    }

    pub fn rate_sample(&self, k: usize) -> Option<Vec<InertialParams>> {
        self.rates
            .as_ref()
            .map(|r| r.iter().map(|body| body[k]).collect())
    }

    pub fn has_rates(&self) -> bool {
        self.rates.is_some()
    }

    pub fn body(&self, l: usize) -> &[InertialParams] {
        &self.params[l]
    }
}

/// Sampled consistency margins of one body over a trajectory.
#[derive(Clone, Debug)]
pub struct BodyMargins {
    pub inf_lambda_min: f64,
    pub sup_lambda_max: f64,
    pub t_at_inf: f64,
    pub t_at_sup: f64,
    /// Every sample strictly consistent (above the numerical floor).
    pub consistent_per_sample: bool,
    /// Sampled infimum stays above the requested uniform margin.
    pub uniformly_consistent: bool,
    /// All samples finite and no monotone growth trend in `lambda_max`.
    pub upper_bounded: bool,
    pub growth_trend: bool,
    pub decay_trend: bool,
}

fn monotone_trend(s: &[f64], growing: bool) -> bool {
    let k = s.len();
    if k < 3 {
        return false;
    }
    let w = (k / 2).max(2);
    let win = &s[k - w..];
    let monotone = win
        .windows(2)
        .all(|p| if growing { p[1] > p[0] } else { p[1] < p[0] });
    if !monotone {
        return false;
    }
    let last = *s.last().unwrap();
    if growing {
        let overall_max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        last >= 2.0 * win[0] && last >= overall_max * (1.0 - 1e-12)
    } else {
        let overall_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        last <= 0.5 * win[0] && last <= overall_min * (1.0 + 1e-12)
    }
}

/// Sampled inf/sup of the pseudo-inertia spectrum per body.
///
/// The verdicts are certificates over the supplied samples only: per-sample
/// consistency uses the strict test with `margin` (floored at the numerical
/// boundary), uniform consistency is the sampled infimum staying above
/// `uniform_margin`, upper boundedness is finiteness of all samples without a
/// monotone growth trend toward the end of the horizon.
pub fn trajectory_margins(
    tr: &ParamTrajectory,
    margin: f64,
    uniform_margin: f64,
) -> Result<Vec<BodyMargins>> {
    let mut out = Vec::with_capacity(tr.body_count());
    for l in 0..tr.body_count() {
        let mut mins = Vec::with_capacity(tr.times.len());
        let mut maxs = Vec::with_capacity(tr.times.len());
        for p in tr.body(l) {
            let w = eigen::sym_eigenvalues(&pseudo_inertia(p).0)?;
            mins.push(w[0]);
            maxs.push(*w.last().unwrap());
        }
        let (mut inf, mut sup) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut t_inf, mut t_sup) = (tr.times[0], tr.times[0]);
        for (k, (&lo, &hi)) in mins.iter().zip(&maxs).enumerate() {
            if lo < inf {
                inf = lo;
                t_inf = tr.times[k];
            }
            if hi > sup {
                sup = hi;
                t_sup = tr.times[k];
            }
        }
        let growth = monotone_trend(&maxs, true);
        let decay = monotone_trend(&mins, false);
        out.push(BodyMargins {
            inf_lambda_min: inf,
            sup_lambda_max: sup,
            t_at_inf: t_inf,
            t_at_sup: t_sup,
            consistent_per_sample: mins.iter().all(|&m| m > margin.max(CONSISTENCY_FLOOR)),
            uniformly_consistent: inf > uniform_margin.max(CONSISTENCY_FLOOR),
            upper_bounded: sup.is_finite() && !growth,
            growth_trend: growth,
            decay_trend: decay,
        });
    }
    Ok(out)
}

/// Default margin below which a sampled trajectory is not certified
/// uniformly consistent.
pub const DEFAULT_UNIFORM_MARGIN: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::skew;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_ball() -> InertialParams {
        InertialParams::new(1.0, Vec3::zeros(), Mat3::identity()).unwrap()
    }

    /// Random parameters realized by an actual point-mass cloud, hence
    /// consistent by construction.
    fn random_cloud_params(rng: &mut ChaCha8Rng) -> InertialParams {
        let n = rng.gen_range(4..10);
        let mut mass = 0.0;
        let mut h = Vec3::zeros();
        let mut inertia = Mat3::zeros();
        for _ in 0..n {
            let w = rng.gen_range(0.05..2.0);
            let x = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            mass += w;
            h = h + x.scale(w);
            let sk = skew(&x);
            inertia = inertia + (sk.transpose() * sk).scale(w);
        }
        InertialParams::new(mass, h, inertia).unwrap()
    }

    #[test]
    fn unit_ball_pseudo_inertia() {
        let f = pseudo_inertia(&unit_ball()).0;
        let mut expected = MatN::identity(4);
        for i in 0..3 {
            expected[(i, i)] = 0.5;
        }
        assert!(f.sub(&expected).norm_inf() < 1e-15);
    }

    #[test]
    fn sphere_pseudo_inertia_closed_form() {
        let (m, r) = (2.3, 0.7);
        let f = pseudo_inertia(&InertialParams::solid_sphere(m, r)).0;
        for i in 0..3 {
            assert!((f[(i, i)] - m * r * r / 5.0).abs() < 1e-12);
        }
        assert!((f[(3, 3)] - m).abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(f[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn point_mass_at_origin_boundary() {
        let p = InertialParams::new(1.0, Vec3::zeros(), Mat3::zeros()).unwrap();
        let f = pseudo_inertia(&p).0;
        for i in 0..3 {
            assert_eq!(f[(i, i)], 0.0);
        }
        assert_eq!(f[(3, 3)], 1.0);
        // boundary case is reported inconsistent under the strict test
        assert!(!check_consistency(&p, 0.0).unwrap().consistent);
    }

    #[test]
    fn inverse_recovers_unit_ball() {
        let p = inverse_pseudo_inertia(&pseudo_inertia(&unit_ball())).unwrap();
        assert!((p.mass - 1.0).abs() < 1e-15);
        assert!(p.first_moment.norm() < 1e-15);
        assert!((p.inertia - Mat3::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn inverse_of_zero_is_zero() {
        let p = inverse_pseudo_inertia(&PseudoInertia(MatN::zeros(4, 4))).unwrap();
        assert_eq!(p, InertialParams::zero());
    }

    #[test]
    fn round_trip_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = random_cloud_params(&mut rng);
            let back = inverse_pseudo_inertia(&pseudo_inertia(&p)).unwrap();
            assert!((p.mass - back.mass).abs() < 1e-12);
            assert!((p.first_moment - back.first_moment).norm() < 1e-12);
            assert!((p.inertia - back.inertia).max_abs() < 1e-12);
        }
    }

    #[test]
    fn consistency_examples() {
        let c = check_consistency(&unit_ball(), 0.0).unwrap();
        assert!(c.consistent);
        assert!((c.lambda_min - 0.5).abs() < 1e-12);

        let neg = InertialParams::new(-1.0, Vec3::zeros(), Mat3::identity()).unwrap();
        assert!(!check_consistency(&neg, 0.0).unwrap().consistent);

        // near the edge but still strictly consistent
        let tiny = InertialParams::solid_sphere(1e-9, 1.0);
        let c = check_consistency(&tiny, 0.0).unwrap();
        assert!(c.consistent);
        assert!((c.lambda_min - 2e-10).abs() < 1e-12);
    }

    #[test]
    fn spatial_inertia_examples() {
        let z = spatial_inertia(&unit_ball()).0;
        assert!(z.sub(&MatN::identity(6)).norm_inf() < 1e-15);

        let p = InertialParams::new(2.0, Vec3::zeros(), Mat3::zeros()).unwrap();
        let z = spatial_inertia(&p).0;
        for i in 0..3 {
            assert_eq!(z[(i, i)], 2.0);
            assert_eq!(z[(3 + i, 3 + i)], 0.0);
        }
    }

    #[test]
    fn block_assembly_and_spectrum() {
        let z = block_spatial_inertia(&[unit_ball(), unit_ball()]);
        assert!(z.sub(&MatN::identity(12)).norm_inf() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta: Vec<_> = (0..3).map(|_| random_cloud_params(&mut rng)).collect();
        let z = block_spatial_inertia(&theta);
        let lam = eigen::lambda_min(&z).unwrap();
        let per_body = theta
            .iter()
            .map(|p| eigen::lambda_min(&spatial_inertia(p).0).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((lam - per_body).abs() < 1e-10);
    }

    #[test]
    fn block_assembly_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t1: Vec<_> = (0..2).map(|_| random_cloud_params(&mut rng)).collect();
        let t2: Vec<_> = (0..2).map(|_| random_cloud_params(&mut rng)).collect();
        let (a, b) = (0.7, -1.3);
        let combo: Vec<_> = t1
            .iter()
            .zip(&t2)
            .map(|(p1, p2)| p1.scaled_add(a, p2, b))
            .collect();
        let lhs = block_spatial_inertia(&combo);
        let rhs = block_spatial_inertia(&t1)
            .scale(a)
            .add(&block_spatial_inertia(&t2).scale(b));
        assert!(lhs.sub(&rhs).norm_inf() < 1e-12);
    }

    /// Schur-complement chains from the lower/upper bound proofs: eigenvalue
    /// floors and caps of `f` transfer to `Z` (factor 2 on the cap).
    #[test]
    fn spectral_transfer_f_to_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let p = random_cloud_params(&mut rng);
            let wf = eigen::sym_eigenvalues(&pseudo_inertia(&p).0).unwrap();
            let wz = eigen::sym_eigenvalues(&spatial_inertia(&p).0).unwrap();
            let (xi, zeta) = (wf[0], *wf.last().unwrap());
            assert!(wz[0] >= xi - 1e-9, "lambda_min(Z) {} < xi {}", wz[0], xi);
            assert!(
                *wz.last().unwrap() <= 2.0 * zeta + 1e-9,
                "lambda_max(Z) {} > 2 zeta {}",
                wz.last().unwrap(),
                zeta
            );
        }
    }

    #[test]
    fn constant_sphere_margins() {
        let p = InertialParams::solid_sphere(1.0, 5.0_f64.sqrt());
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let tr = ParamTrajectory::new(times, vec![vec![p; 5]], None).unwrap();
        let m = &trajectory_margins(&tr, 0.0, DEFAULT_UNIFORM_MARGIN).unwrap()[0];
        assert!((m.inf_lambda_min - 1.0).abs() < 1e-12);
        assert!((m.sup_lambda_max - 1.0).abs() < 1e-12);
        assert!(m.uniformly_consistent && m.upper_bounded);
    }

    #[test]
    fn vanishing_mass_is_not_uniformly_consistent() {
        let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let body: Vec<_> = times
            .iter()
            .map(|&t| InertialParams::solid_sphere(10f64.powf(-0.7 * t), 1.0))
            .collect();
        let tr = ParamTrajectory::new(times, vec![body], None).unwrap();
        let m = &trajectory_margins(&tr, 0.0, DEFAULT_UNIFORM_MARGIN).unwrap()[0];
        assert!(m.consistent_per_sample, "each sample is still consistent");
        assert!(!m.uniformly_consistent);
        assert!(m.decay_trend);
    }

    #[test]
    fn growing_mass_flags_trend() {
        let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let body: Vec<_> = times
            .iter()
            .map(|&t| InertialParams::solid_sphere((0.5 * t).exp(), 1.0))
            .collect();
        let tr = ParamTrajectory::new(times, vec![body], None).unwrap();
        let m = &trajectory_margins(&tr, 0.0, DEFAULT_UNIFORM_MARGIN).unwrap()[0];
        assert!(m.growth_trend);
        assert!(!m.upper_bounded);
        assert!(m.uniformly_consistent);
    }

    proptest::proptest! {
        /// The pseudo-inertia map is a linear bijection on the whole
        /// parameter space, so the round trip holds regardless of
        /// consistency.
        #[test]
        fn pseudo_inertia_round_trip(phi in proptest::array::uniform10(-100.0f64..100.0)) {
            let p = InertialParams::from_phi(&phi);
            let back = inverse_pseudo_inertia(&pseudo_inertia(&p)).unwrap();
            let b = back.to_phi();
            for k in 0..10 {
                proptest::prop_assert!((phi[k] - b[k]).abs() < 1e-12 * phi[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_empty_and_unordered() {
        assert!(ParamTrajectory::new(vec![], vec![], None).is_err());
        let p = unit_ball();
        assert!(ParamTrajectory::new(vec![1.0, 1.0], vec![vec![p, p]], None).is_err());
    }
}
