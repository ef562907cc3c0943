//! Dynamics of open kinematic chains whose inertial parameters change with
//! time.
//!
//! The crate builds the full equation of motion for a serial chain whose mass
//! distributions may shift while it moves: the classical mass, Coriolis and
//! gravity terms are joined by a parameter-rate matrix, a skew flow-coupling
//! matrix and a flow-acceleration forcing term. On top of the model sit
//! consistency tests for inertial parameters (positive definiteness of the
//! pseudo-inertia), sampled certificates for uniform mass-matrix bounds, a
//! fixed-step simulator with an energy audit, and a CLI frontend.
//!
//! Core numerics are generic over the scalar type through [`Scalar`]
//! (essentially `num_traits::Float`), so the same kinematics code runs on
//! `f32`, `f64` and the crate's forward-mode [`dual::Dual`] numbers. Concrete
//! `f64` aliases live at the crate root.
//!
//! ```
//! use chaindyn::inertial::{check_consistency, InertialParams};
//! use chaindyn::kinematics::{Chain, Joint};
//! use chaindyn::{dynamics, Vec3};
//!
//! // a cart moving along x, carrying a ball with unit parameters
//! let chain = Chain::new(
//!     vec![Joint::prismatic(Vec3::new(1.0, 0.0, 0.0))],
//!     Vec3::new(0.0, 0.0, 9.81),
//! )?;
//! let ball = InertialParams::new(1.0, Vec3::zeros(), chaindyn::Mat3::identity())?;
//! assert!(check_consistency(&ball, 0.0)?.consistent);
//!
//! let m = dynamics::mass_matrix(&chain, &[0.3], &[ball]);
//! assert!((m[(0, 0)] - 1.0).abs() < 1e-12);
//! # Ok::<(), chaindyn::Error>(())
//! ```

use num_traits::{Float, FromPrimitive};

pub mod algebra;
pub mod bounds;
pub mod config;
pub mod dual;
pub mod dynamics;
pub mod eigen;
pub mod inertial;
pub mod kinematics;
pub mod linalg;
pub mod oracle;
pub mod particles;
pub mod report;
pub mod simulator;
pub mod verify;

/// Scalar type admitted by the generic kinematics and dynamics routines:
/// `f32`, `f64`, or a dual number built over either.
pub trait Scalar: Float + FromPrimitive + std::fmt::Debug + 'static {}
impl<T: Float + FromPrimitive + std::fmt::Debug + 'static> Scalar for T {}

/// Concrete scalar used by the consistency tests, spectral scans and the
/// simulator.
pub type Real = f64;

pub type Vec3 = linalg::Vector3<Real>;
pub type Mat3 = linalg::Matrix3<Real>;
pub type VecN = linalg::DVector<Real>;
pub type MatN = linalg::DMatrix<Real>;

/// First-order dual over `f64`, the workhorse for exact q-derivatives.
pub type Dual64 = dual::Dual<Real>;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported chain: {0}")]
    UnsupportedChain(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("mass matrix not positive definite: lambda_min = {lambda_min:.3e} at q = {q:?}")]
    SingularMassMatrix { lambda_min: f64, q: Vec<f64> },
    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}
