//! Matrix building blocks the chain model is assembled from: the
//! cross-product matrix, block replication, the zyx rotation convention and
//! the S/T factorization that swaps a cross-product matrix past a rotation.

use crate::linalg::{DMatrix, Matrix3, Vector3};
use crate::Scalar;

/// Cross-product matrix: `skew(x) * y == x.cross(y)`.
pub fn skew<T: Scalar>(x: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::from_rows([z, -x[2], x[1]], [x[2], z, -x[0]], [-x[1], x[0], z])
}

/// Block replication: `diag(B, B, B)` for a p1 x p2 matrix `B`.
pub fn block_replicate<T: Scalar>(b: &DMatrix<T>) -> DMatrix<T> {
    let (p1, p2) = (b.nrows(), b.ncols());
    let mut out = DMatrix::zeros(3 * p1, 3 * p2);
    for k in 0..3 {
        out.set_block(k * p1, k * p2, b);
    }
    out
}

/// `diag(x, x, x)` as a 9x3 matrix, the column-vector case of block
/// replication that shows up in the flow vectors.
pub fn replicate_vec3<T: Scalar>(x: &Vector3<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(9, 3);
    for k in 0..3 {
        for i in 0..3 {
            out[(3 * k + i, k)] = x[i];
        }
    }
    out
}

/// Rotation about the first axis.
pub fn rot_x<T: Scalar>(a: T) -> Matrix3<T> {
    let (s, c) = (a.sin(), a.cos());
    let (z, o) = (T::zero(), T::one());
    Matrix3::from_rows([o, z, z], [z, c, -s], [z, s, c])
}

/// Rotation about the second axis.
pub fn rot_y<T: Scalar>(a: T) -> Matrix3<T> {
    let (s, c) = (a.sin(), a.cos());
    let (z, o) = (T::zero(), T::one());
    Matrix3::from_rows([c, z, s], [z, o, z], [-s, z, c])
}

/// Rotation about the third axis.
pub fn rot_z<T: Scalar>(a: T) -> Matrix3<T> {
    let (s, c) = (a.sin(), a.cos());
    let (z, o) = (T::zero(), T::one());
    Matrix3::from_rows([c, -s, z], [s, c, z], [z, z, o])
}

/// Orientation convention used throughout: `R(phi) = Rz(phi3) Ry(phi2) Rx(phi1)`.
///
/// With this choice a chain whose revolute axes are all parallel to the world
/// third axis keeps the angular velocity equal to the rate of `phi` exactly.
pub fn rotation<T: Scalar>(phi: &Vector3<T>) -> Matrix3<T> {
    rot_z(phi[2]) * rot_y(phi[1]) * rot_x(phi[0])
}

/// Extract zyx angles with `rotation(angles) == r`.
///
/// Fails near the gimbal singularity of the convention (second angle at
/// +-pi/2), where the decomposition is not unique.
pub fn euler_zyx(r: &Matrix3<f64>) -> crate::Result<Vector3<f64>> {
    let defect = r.orthonormality_defect();
    if defect > 1e-9 {
        return Err(crate::Error::InvalidInput(format!(
            "rotation matrix not orthonormal (defect {defect:.2e})"
        )));
    }
    if r[(2, 0)].abs() > 1.0 - 1e-9 {
        return Err(crate::Error::UnsupportedChain(
            "fixed offset rotation at the gimbal singularity of the zyx convention".into(),
        ));
    }
    let phi2 = (-r[(2, 0)]).asin();
    let phi3 = r[(1, 0)].atan2(r[(0, 0)]);
    let phi1 = r[(2, 1)].atan2(r[(2, 2)]);
    Ok(Vector3::new(phi1, phi2, phi3))
}

/// Rodrigues rotation about a unit axis.
pub fn axis_angle<T: Scalar>(axis: &Vector3<T>, angle: T) -> Matrix3<T> {
    let k = skew(axis);
    let k2 = k * k;
    Matrix3::identity() + k.scale(angle.sin()) + k2.scale(T::one() - angle.cos())
}

/// The constant 3x9 generator `S` with `skew(y) = S * replicate_vec3(y)`.
pub fn s_matrix<T: Scalar>() -> DMatrix<T> {
    let rows: [[f64; 9]; 3] = [
        [0., 0., 0., 0., 0., -1., 0., 1., 0.],
        [0., 0., 1., 0., 0., 0., -1., 0., 0.],
        [0., -1., 0., 1., 0., 0., 0., 0., 0.],
    ];
    DMatrix::from_fn(3, 9, |i, j| T::from_f64(rows[i][j]).unwrap())
}

/// The 9x9 permutation `T` that regroups replicated columns:
/// `(rep(R1) rep(R2) rep(R3)) = block_replicate(R) * T`.
pub fn t_matrix<T: Scalar>() -> DMatrix<T> {
    // column j carries a single one in row perm[j]
    let perm: [usize; 9] = [0, 3, 6, 1, 4, 7, 2, 5, 8];
    let mut m = DMatrix::zeros(9, 9);
    for (j, &i) in perm.iter().enumerate() {
        m[(i, j)] = T::one();
    }
    m
}

/// Both constant factors of the swap identity.
pub fn st_matrices<T: Scalar>() -> (DMatrix<T>, DMatrix<T>) {
    (s_matrix(), t_matrix())
}

/// `-S * block_replicate(R) * T * replicate_vec3(x)`, which equals
/// `skew(x) * R` for every `x` and every 3x3 `R`.
pub fn swap_factorization<T: Scalar>(x: &Vector3<T>, r: &Matrix3<T>) -> Matrix3<T> {
    let s = s_matrix::<T>();
    let t = t_matrix::<T>();
    let rep_r = block_replicate(&DMatrix::from_fn(3, 3, |i, j| r[(i, j)]));
    let prod = s.matmul(&rep_r).matmul(&t).matmul(&replicate_vec3(x));
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] = -prod[(i, j)];
        }
    }
    out
}
